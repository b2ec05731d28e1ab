"""Seeded, block-parallel Monte Carlo oracle for the analytic link model."""

from .harness import (
    DetectionTrace,
    IntensityStats,
    MixResult,
    SimConfig,
    SimResult,
    available_backends,
    dead_time_empirical,
    simulate_crosstalk_mix,
    simulate_link,
    trace_to_text,
)

__all__ = [
    "DetectionTrace",
    "IntensityStats",
    "MixResult",
    "SimConfig",
    "SimResult",
    "available_backends",
    "dead_time_empirical",
    "simulate_crosstalk_mix",
    "simulate_link",
    "trace_to_text",
]
