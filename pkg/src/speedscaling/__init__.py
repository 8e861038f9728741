"""Trace-driven simulation of deadline-feasible CPU speed scaling.

Offline optimum (critical-interval schedule), online policies (average-rate,
optimal-available with a q multiplier, and the two windowed lower-bound
variants), workload generation from web-server traces, and energy /
temperature metrics.
"""

from .metrics import (
    CoolingModel,
    FeasibilityReport,
    PowerModel,
    empirical_ratio,
    energy,
    max_temperature,
    verify_feasibility,
)
from .model import (
    EPS_WORK,
    Instance,
    IntervalWork,
    Job,
    SpeedSchedule,
    allocated_work,
    interval_work,
    read_instance_csv,
    read_schedule_csv,
    span,
    write_instance_csv,
    write_schedule_csv,
)
from .policies import (
    PolicyState,
    build_p_profile,
    speed_avr,
    speed_bkp_p,
    speed_bkp_v,
    speed_oa,
    speed_qoa,
)
from .simulator import DeadlineMiss, SimConfig, SimResult, simulate
from .trace import (
    TraceRecord,
    decimate,
    parse_trace,
    replicate_days,
    substitute_empty_responses,
)
from .workloads import (
    WorkloadSpec,
    gen_fixed_span,
    gen_flat,
    gen_highly_spiky,
    gen_moderately_spiky,
    triangle,
)
from .yds import (
    CompressionRecord,
    CriticalInterval,
    compress_time,
    find_critical_interval,
    yds_schedule,
    yds_schedule_reference,
)

__version__ = "0.1.0"
