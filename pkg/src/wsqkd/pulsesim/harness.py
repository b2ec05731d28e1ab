"""Monte Carlo pulse-level oracle for the analytic link model.

Determinism contract
--------------------
Pulses are processed in fixed-size blocks. Block b draws its randomness from
an independent Philox stream keyed by (seed, purpose, b), and per-block
results are merged in block order, so the outcome depends only on the config
and seed, never on the number of workers or the backend. The detector starts
live at each block boundary (the edge effect is a few clicks per billion).

Per pulse the draw order is fixed: intensity class, photon detection, dark
count, error, sift, bit, optional crosstalk. Both kernel backends consume
these arrays with identical threshold logic, so their outputs are
bit-identical; `backend="auto"` prefers the compiled extension.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import numpy as np

from ..qkdrate import (
    DetectorParams,
    SourceParams,
    SystemParams,
    eta_total,
    gain_and_qber,
    vacuum_leak_intensity,
)
from . import kernels_py

try:  # compiled kernels are optional; the numpy path is always available
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on build environment
    _compiled = None

__all__ = [
    "SimConfig",
    "IntensityStats",
    "SimResult",
    "MixResult",
    "DetectionTrace",
    "available_backends",
    "simulate_link",
    "simulate_crosstalk_mix",
    "dead_time_empirical",
    "trace_to_text",
]

_PURPOSE_LINK = 1
_PURPOSE_DEAD = 2

_CLASS_LABELS = ("signal", "decoy", "vacuum")


def available_backends() -> tuple[str, ...]:
    return ("compiled", "python") if _compiled is not None else ("python",)


def _kernel(backend: str):
    if backend == "auto":
        return _compiled if _compiled is not None else kernels_py
    if backend == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        return _compiled
    if backend == "python":
        return kernels_py
    raise ValueError(f"unknown backend {backend!r}")


def _block_rng(seed: int, purpose: int, block: int) -> np.random.Generator:
    key = ((seed & 0xFFFFFFFFFFFFFFFF) << 64) | (purpose << 48) | block
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True, slots=True)
class SimConfig:
    """Configuration of one simulated link."""

    n_pulses: int
    seed: int
    attenuation_db: float
    source: SourceParams
    detector: DetectorParams
    system: SystemParams
    chi_injection: float | None = None
    record_timestamps: bool = False
    block_size: int = 1 << 20

    def __post_init__(self) -> None:
        if self.n_pulses < 1:
            raise ValueError("n_pulses must be >= 1")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        if self.chi_injection is not None and self.chi_injection < 0:
            raise ValueError("chi_injection must be non-negative")


@dataclass(frozen=True, slots=True)
class IntensityStats:
    """Empirical per-intensity statistics from the candidate click stream."""

    label: str
    intensity: float
    pulses: int
    clicks: int
    errors: int

    @property
    def gain(self) -> float:
        return self.clicks / self.pulses if self.pulses else 0.0

    @property
    def gain_stderr(self) -> float:
        if not self.pulses:
            return 0.0
        p = self.gain
        return math.sqrt(p * (1.0 - p) / self.pulses)

    @property
    def qber(self) -> float:
        return self.errors / self.clicks if self.clicks else 0.0

    @property
    def qber_stderr(self) -> float:
        if not self.clicks:
            return 0.0
        p = self.qber
        return math.sqrt(p * (1.0 - p) / self.clicks)


@dataclass(frozen=True, slots=True)
class DetectionTrace:
    """One record per accepted detection."""

    pulse_index: np.ndarray
    intensity: np.ndarray
    bit: np.ndarray
    error: np.ndarray

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DetectionTrace):
            return NotImplemented
        return (
            np.array_equal(self.pulse_index, other.pulse_index)
            and np.array_equal(self.intensity, other.intensity)
            and np.array_equal(self.bit, other.bit)
            and np.array_equal(self.error, other.error)
        )


@dataclass(frozen=True, slots=True, eq=True)
class SimResult:
    """Merged outcome of a simulated pulse train.

    Gains and QBERs are measured on the candidate click stream (before dead
    time), matching the analytic model; detection rates report the dead-time
    suppression; sifted counts apply dead time then basis sifting.
    """

    n_pulses: int
    per_intensity: tuple[IntensityStats, IntensityStats, IntensityStats]
    sifted_count: int
    sifted_errors: int
    detection_rate_before_hz: float
    detection_rate_after_hz: float
    accepted_count: int
    candidate_count: int
    trace: DetectionTrace | None = None

    @property
    def signal(self) -> IntensityStats:
        return self.per_intensity[0]

    @property
    def decoy(self) -> IntensityStats:
        return self.per_intensity[1]

    @property
    def vacuum(self) -> IntensityStats:
        return self.per_intensity[2]


@dataclass(frozen=True, slots=True)
class MixResult:
    """Crosstalk-mixing outcome: empirical QBER shift against the analytic
    baseline of the same stream."""

    delta_qber: float
    stderr: float
    mixed_qber: float
    baseline_qber: float
    signal_clicks: int
    signal_errors: int
    crosstalk_clicks: int
    crosstalk_errors: int


def _dead_gates(detector: DetectorParams, source: SourceParams) -> int:
    period_ns = 1e9 / source.pulse_rate_hz
    if detector.dead_time_us <= 0:
        return 0
    return max(0, math.ceil(detector.dead_time_us * 1000.0 / period_ns - 1e-9))


def _run_blocks(
    cfg: SimConfig,
    thresholds: tuple[float, float],
    pdet: tuple[float, float, float],
    px: float,
    workers: int,
    backend: str,
) -> list[tuple]:
    kern = _kernel(backend)
    c1, c12 = thresholds
    dead = _dead_gates(cfg.detector, cfg.source)
    y0 = cfg.detector.dark_per_gate
    e_det = cfg.system.e_detector
    q_sift = cfg.system.q_sift
    n_blocks = -(-cfg.n_pulses // cfg.block_size)
    draw_x = px > 0.0
    empty = np.empty(0, dtype=np.float64)

    def run(block: int) -> tuple:
        n = min(cfg.block_size, cfg.n_pulses - block * cfg.block_size)
        rng = _block_rng(cfg.seed, _PURPOSE_LINK, block)
        u_class = rng.random(n)
        u_photon = rng.random(n)
        u_dark = rng.random(n)
        u_err = rng.random(n)
        u_sift = rng.random(n)
        u_bit = rng.random(n)
        u_x = rng.random(n) if draw_x else empty
        return kern.sim_block(
            u_class, u_photon, u_dark, u_err, u_sift, u_bit, u_x,
            c1, c12, pdet, y0, e_det, q_sift, dead, px,
            cfg.record_timestamps,
        )

    if workers <= 1:
        return [run(b) for b in range(n_blocks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, range(n_blocks)))


def _merge(cfg: SimConfig, intensities: tuple[float, float, float], blocks: list[tuple]) -> SimResult:
    pulses = np.zeros(3, dtype=np.int64)
    cand = np.zeros(3, dtype=np.int64)
    errs = np.zeros(3, dtype=np.int64)
    acc = np.zeros(3, dtype=np.int64)
    sift = np.zeros(3, dtype=np.int64)
    sift_err = np.zeros(3, dtype=np.int64)
    traces = []
    for b, result in enumerate(blocks):
        pulses += result[0]
        cand += result[1]
        errs += result[2]
        acc += result[3]
        sift += result[4]
        sift_err += result[5]
        if result[8] is not None:
            idx, cls, bit, err = result[8]
            traces.append((idx + b * cfg.block_size, cls, bit, err))

    trace = None
    if cfg.record_timestamps:
        if traces:
            trace = DetectionTrace(
                pulse_index=np.concatenate([t[0] for t in traces]),
                intensity=np.concatenate([t[1] for t in traces]),
                bit=np.concatenate([t[2] for t in traces]),
                error=np.concatenate([t[3] for t in traces]),
            )
        else:
            trace = DetectionTrace(
                pulse_index=np.empty(0, dtype=np.int64),
                intensity=np.empty(0, dtype=np.uint8),
                bit=np.empty(0, dtype=np.uint8),
                error=np.empty(0, dtype=np.uint8),
            )

    rate = cfg.source.pulse_rate_hz
    per = tuple(
        IntensityStats(
            label=_CLASS_LABELS[k],
            intensity=intensities[k],
            pulses=int(pulses[k]),
            clicks=int(cand[k]),
            errors=int(errs[k]),
        )
        for k in range(3)
    )
    total_cand = int(cand.sum())
    total_acc = int(acc.sum())
    return SimResult(
        n_pulses=cfg.n_pulses,
        per_intensity=per,  # type: ignore[arg-type]
        sifted_count=int(sift[0]),
        sifted_errors=int(sift_err[0]),
        detection_rate_before_hz=rate * total_cand / cfg.n_pulses,
        detection_rate_after_hz=rate * total_acc / cfg.n_pulses,
        accepted_count=total_acc,
        candidate_count=total_cand,
        trace=trace,
    )


def simulate_link(cfg: SimConfig, workers: int = 1, backend: str = "auto") -> SimResult:
    """Simulate the full 6:3:1 pulse train of one link."""
    src = cfg.source
    eta = eta_total(cfg.attenuation_db, cfg.detector)
    w_mu, w_nu, _ = src.weights
    intensities = (src.mu, src.nu, vacuum_leak_intensity(src))
    pdet = tuple(-math.expm1(-eta * i) for i in intensities)
    blocks = _run_blocks(
        cfg,
        thresholds=(w_mu, w_mu + w_nu),
        pdet=pdet,  # type: ignore[arg-type]
        px=0.0,
        workers=workers,
        backend=backend,
    )
    return _merge(cfg, intensities, blocks)


def simulate_crosstalk_mix(
    cfg: SimConfig, workers: int = 1, backend: str = "auto"
) -> MixResult:
    """Mix incoherent crosstalk clicks into a signal-only stream.

    Crosstalk clicks are injected per gate at chi times the correctly decoded
    signal click probability and carry random bits, so the expected QBER
    shift is exactly the incoherent-mixing formula. The baseline is the
    analytic QBER of the same stream, not a second empirical run.
    """
    if cfg.chi_injection is None:
        raise ValueError("chi_injection must be set for crosstalk mixing")
    src = cfg.source
    eta = eta_total(cfg.attenuation_db, cfg.detector)
    q_sig, qber0 = gain_and_qber(
        src.mu, eta, cfg.detector.dark_per_gate, cfg.system.e_detector
    )
    px = cfg.chi_injection * q_sig * (1.0 - qber0)
    p_mu = -math.expm1(-eta * src.mu)
    blocks = _run_blocks(
        cfg,
        thresholds=(1.1, 1.1),  # every pulse is a signal pulse
        pdet=(p_mu, 0.0, 0.0),
        px=px,
        workers=workers,
        backend=backend,
    )
    sig_clicks = sum(int(b[1][0]) for b in blocks)
    sig_errors = sum(int(b[2][0]) for b in blocks)
    x_clicks = sum(int(b[6]) for b in blocks)
    x_errors = sum(int(b[7]) for b in blocks)
    clicks = sig_clicks + x_clicks
    errors = sig_errors + x_errors
    mixed = errors / clicks if clicks else 0.0
    stderr = math.sqrt(mixed * (1.0 - mixed) / clicks) if clicks else 0.0
    return MixResult(
        delta_qber=mixed - qber0,
        stderr=stderr,
        mixed_qber=mixed,
        baseline_qber=qber0,
        signal_clicks=sig_clicks,
        signal_errors=sig_errors,
        crosstalk_clicks=x_clicks,
        crosstalk_errors=x_errors,
    )


def dead_time_empirical(
    rate_hz: float,
    tau_us: float,
    n_pulses: int,
    seed: int,
    workers: int = 1,
    backend: str = "auto",
    block_size: int = 1 << 20,
) -> float:
    """Effective rate of a Poisson click stream through a non-paralyzable
    dead time, estimated from ``n_pulses`` simulated arrivals."""
    if rate_hz < 0:
        raise ValueError("rate_hz must be non-negative")
    if n_pulses < 1:
        raise ValueError("n_pulses must be >= 1")
    if rate_hz == 0:
        return 0.0
    kern = _kernel(backend)
    tau = tau_us * 1e-6
    n_blocks = -(-n_pulses // block_size)

    def run(block: int) -> tuple[int, float]:
        n = min(block_size, n_pulses - block * block_size)
        rng = _block_rng(seed, _PURPOSE_DEAD, block)
        times = np.cumsum(rng.exponential(1.0 / rate_hz, n))
        return int(kern.dead_time_block(times, tau)), float(times[-1])

    if workers <= 1:
        results = [run(b) for b in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(n_blocks)))
    accepted = sum(r[0] for r in results)
    elapsed = sum(r[1] for r in results)
    return accepted / elapsed


def trace_to_text(trace: DetectionTrace) -> str:
    """Delimited text export, one record per detection."""
    lines = ["pulse_index\tintensity\tbit\terror"]
    for i in range(trace.pulse_index.shape[0]):
        lines.append(
            f"{int(trace.pulse_index[i])}\t"
            f"{_CLASS_LABELS[int(trace.intensity[i])]}\t"
            f"{int(trace.bit[i])}\t{int(trace.error[i])}"
        )
    return "\n".join(lines) + "\n"
