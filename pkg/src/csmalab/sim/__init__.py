"""Event-driven simulation of CSMA over Markov channels."""

from .core import (
    TRACE_HEADER,
    FrameHistory,
    RateStats,
    SimConfig,
    SimTrace,
    rate_stability_stats,
    simulate,
    simulate_queue_based,
    simulate_rate_based,
)
