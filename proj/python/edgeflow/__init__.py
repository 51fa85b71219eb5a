"""Flow offloading runtime: flow rewrite, offloading policies and the virtual gateway."""

from ._core import (
    EngineStats,
    FlowError,
    GatewayModel,
    GatewayState,
    JobRecord,
    MetricsSnapshot,
    PolicyError,
    RunningJob,
    SimResult,
    canonical,
    decide,
    extract_offloadable,
    parse_policy,
    simulate,
    stats,
    step,
    validate,
)

__all__ = [
    "EngineStats",
    "FlowError",
    "GatewayModel",
    "GatewayState",
    "JobRecord",
    "MetricsSnapshot",
    "PolicyError",
    "RunningJob",
    "SimResult",
    "canonical",
    "decide",
    "extract_offloadable",
    "parse_policy",
    "simulate",
    "stats",
    "step",
    "validate",
]
