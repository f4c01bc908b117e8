"""Hybrid-systems simulation and dwell-time analytics for event-triggered synergistic control."""

from .hybrid import (
    DwellReport,
    Family,
    HybridArc,
    HybridTimeDomain,
    JumpRecord,
    MalformedLogError,
    SeparationReport,
    analyze,
    check_separation,
    classify_jumps,
    delta_t,
    deparametrize,
    domain_from_records,
    dwell_time,
    min_inter_transmission,
    otimes,
    read_jump_log,
    recursive_jump_image,
    weak_dwell_time,
    write_jump_log,
)
from .solver import (
    SimulationResult,
    SolverConfig,
    SystemDefinition,
    TerminationKind,
    TerminationReason,
    locate_crossing,
    resolve_jump,
    simulate,
)
from .attitude import (
    ClosedLoopState,
    ConfigError,
    DynamicTrigger,
    FixedThresholdTrigger,
    Gamma1Trigger,
    LyapunovZhuTrigger,
    PlantState,
    ProposedTrigger,
    SurrogateTimerTrigger,
    SynergisticParams,
    V0,
    assemble_closed_loop,
    c_prime,
    f_p,
    gamma,
    gamma1,
    in_attractor,
    kappa_s,
    load_config,
    mu,
    pack_state,
    skew,
    unpack_state,
)

__version__ = "0.1.0"
