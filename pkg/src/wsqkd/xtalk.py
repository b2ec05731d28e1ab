"""Crosstalk-to-QBER conversion and gate-timing aggregation.

Crosstalk clicks come from remote lasers and are incoherent with the signal,
so they carry uniformly random bits: half of them are errors. Mixing such a
click stream, at ratio chi relative to the correctly decoded signal clicks,
into a signal stream of error rate QBER0 raises the error rate by

    delta = (chi / 2) * (1 - QBER0 * (3 - 2 * QBER0)) / (1 + chi * (1 - QBER0))

which is strictly below chi / 2. Point contributions can be timed out of the
detector gate by delaying the interfering transmitter; continuous ones only
scale with the gate duty cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from .optics import CrosstalkContribution
from .qkdrate import (
    KeyRateReport,
    binary_entropy,
    decoy_bounds,
)

__all__ = [
    "AssessedContribution",
    "CrosstalkSummary",
    "LinkObservables",
    "FloorCheck",
    "delta_qber",
    "chi_from_gains",
    "aggregate_chi",
    "leakage_floor_check",
    "recommend_delay",
    "apply_crosstalk_to_link",
    "calibrate_contributions",
    "crosstalk_negligible",
]

DELAY_GUARD_NS = 0.25


@dataclass(frozen=True, slots=True)
class LinkObservables:
    """Victim-link baseline: sifted rate and error rate before crosstalk."""

    sifted_rate_bps: float
    qber0: float

    def __post_init__(self) -> None:
        if not 0 <= self.qber0 <= 0.5:
            raise ValueError("qber0 must be in [0, 0.5]")


@dataclass(frozen=True, slots=True)
class AssessedContribution:
    contribution: CrosstalkContribution
    per_gate_gain: float
    in_gate: bool
    counted: bool


@dataclass(frozen=True, slots=True)
class CrosstalkSummary:
    """Aggregated crosstalk ratios.

    ``chi_worst`` assumes every point contribution lands inside the gate;
    ``chi_best`` counts point contributions only at their present arrival
    offsets, so it is what delay tuning can achieve.
    """

    chi_worst: float
    chi_best: float
    included_band: str  # "intraband_only" | "all"
    victim_signal_gain: float
    contributions: tuple[AssessedContribution, ...]

    @property
    def crosstalk_gain_worst(self) -> float:
        return self.chi_worst * self.victim_signal_gain

    @property
    def crosstalk_gain_best(self) -> float:
        return self.chi_best * self.victim_signal_gain


@dataclass(frozen=True, slots=True)
class FloorCheck:
    above_floor: bool
    floor_db: float
    margin_db: float


def delta_qber(chi: float, qber0: float) -> float:
    """QBER increase from incoherent crosstalk at ratio chi."""
    if chi < 0:
        raise ValueError("chi must be non-negative")
    if not 0 <= qber0 <= 0.5:
        raise ValueError("qber0 must be in [0, 0.5]")
    if chi == 0:
        return 0.0
    return (
        (chi / 2.0)
        * (1.0 - qber0 * (3.0 - 2.0 * qber0))
        / (1.0 + chi * (1.0 - qber0))
    )


def chi_from_gains(crosstalk_gain: float, signal_gain: float) -> float:
    """Crosstalk ratio from per-gate gains."""
    if signal_gain <= 0:
        raise ValueError("signal_gain must be positive")
    if crosstalk_gain < 0:
        raise ValueError("crosstalk_gain must be non-negative")
    return crosstalk_gain / signal_gain


def _in_gate(offset_ns: float, gate_ns: float, period_ns: float) -> bool:
    return (offset_ns % period_ns) < gate_ns


def aggregate_chi(
    contributions: Sequence[CrosstalkContribution],
    gate_ns: float,
    pulse_period_ns: float,
    victim_signal_gain: float,
    source_mean_photon: float,
    det_efficiency: float,
    include_interband: bool = False,
) -> CrosstalkSummary:
    """Convert leakage paths to per-gate crosstalk gains and aggregate.

    A point path contributes mean_photon * 10^(ratio/10) * efficiency per
    gate; a continuous path contributes the same scaled by the gate duty
    cycle. chi values divide the summed gains by the victim's signal gain.
    """
    if gate_ns > pulse_period_ns:
        raise ValueError("gate must not exceed the pulse period")
    if victim_signal_gain <= 0:
        raise ValueError("victim_signal_gain must be positive")
    duty = gate_ns / pulse_period_ns
    assessed = []
    total_worst = 0.0
    total_best = 0.0
    for c in contributions:
        y = source_mean_photon * 10.0 ** (c.power_ratio_db / 10.0) * det_efficiency
        counted = include_interband or c.band == "intraband"
        if c.kind == "point":
            in_gate = _in_gate(c.arrival_offset_ns, gate_ns, pulse_period_ns)
            gain = y
        else:
            in_gate = True
            gain = y * duty
        if counted:
            total_worst += gain
            if in_gate:
                total_best += gain
        assessed.append(
            AssessedContribution(
                contribution=c, per_gate_gain=gain, in_gate=in_gate, counted=counted
            )
        )
    return CrosstalkSummary(
        chi_worst=total_worst / victim_signal_gain,
        chi_best=total_best / victim_signal_gain,
        included_band="all" if include_interband else "intraband_only",
        victim_signal_gain=victim_signal_gain,
        contributions=tuple(assessed),
    )


def leakage_floor_check(
    crosstalk_db: float, attenuation_db: float, extinction_ratio_db: float
) -> FloorCheck:
    """Compare a measured crosstalk figure against the transmitter leakage
    floor set by the intensity modulator extinction and the link loss."""
    floor = -extinction_ratio_db - attenuation_db
    margin = crosstalk_db - floor
    return FloorCheck(above_floor=crosstalk_db > floor, floor_db=floor, margin_db=margin)


def recommend_delay(
    contributions: Sequence[CrosstalkContribution],
    gate_ns: float,
    pulse_period_ns: float,
    guard_ns: float = DELAY_GUARD_NS,
) -> float | None:
    """Smallest launch delay that pushes every point contribution out of the
    gate window with a guard band on both sides; None when no delay works."""
    if not gate_ns < pulse_period_ns:
        raise ValueError("gate must be shorter than the pulse period")
    offsets = [
        c.arrival_offset_ns % pulse_period_ns
        for c in contributions
        if c.kind == "point"
    ]
    if not offsets:
        return 0.0
    lo = gate_ns + guard_ns  # allowed shifted-offset interval [lo, hi]
    hi = pulse_period_ns - guard_ns
    if hi < lo:
        return None

    def feasible(delay: float) -> bool:
        return all(
            lo <= (o + delay) % pulse_period_ns <= hi for o in offsets
        )

    candidates = sorted({0.0} | {(lo - o) % pulse_period_ns for o in offsets})
    for d in candidates:
        if feasible(d):
            return d
    return None


def calibrate_contributions(
    contributions: Sequence[CrosstalkContribution],
    target_crosstalk_gain: float,
    source_mean_photon: float,
    det_efficiency: float,
    gate_ns: float,
    pulse_period_ns: float,
) -> tuple[list[CrosstalkContribution], float]:
    """Uniform dB shift of every leakage path so the worst-case intraband
    crosstalk gain matches a target (e.g. a measured aggregate). Returns the
    shifted contributions and the applied shift in dB."""
    if target_crosstalk_gain <= 0:
        raise ValueError("target_crosstalk_gain must be positive")
    duty = gate_ns / pulse_period_ns
    current = 0.0
    for c in contributions:
        if c.band != "intraband":
            continue
        y = source_mean_photon * 10.0 ** (c.power_ratio_db / 10.0) * det_efficiency
        current += y if c.kind == "point" else y * duty
    if current <= 0:
        raise ValueError("no intraband contributions to calibrate")
    shift_db = 10.0 * math.log10(target_crosstalk_gain / current)
    shifted = [
        replace(c, power_ratio_db=min(0.0, c.power_ratio_db + shift_db))
        for c in contributions
    ]
    return shifted, shift_db


def apply_crosstalk_to_link(
    report: KeyRateReport,
    summary: CrosstalkSummary,
    use: str = "worst",
) -> KeyRateReport:
    """Recompute a link report with crosstalk folded in.

    The crosstalk click gain is intensity-independent; each intensity sees
    chi relative to its own gain, raising its QBER per the incoherent-mixing
    formula and its gain by the crosstalk gain. Decoy bounds and the secure
    fraction are then re-derived.
    """
    if use not in ("worst", "best"):
        raise ValueError("use must be 'worst' or 'best'")
    chi_sig = summary.chi_worst if use == "worst" else summary.chi_best
    y_x = chi_sig * summary.victim_signal_gain
    if y_x == 0:
        return report

    obs = report.observables
    src, det, sys = report.source, report.detector, report.system
    q_mu = obs.q_mu + y_x
    q_nu = obs.q_nu + y_x
    e_mu = obs.e_mu + delta_qber(y_x / obs.q_mu, obs.e_mu)
    e_nu = obs.e_nu + delta_qber(y_x / obs.q_nu, obs.e_nu)
    new_obs = replace(obs, q_mu=q_mu, q_nu=q_nu, e_mu=e_mu, e_nu=e_nu)

    bounds = decoy_bounds(q_mu, q_nu, e_mu, e_nu, src.mu, src.nu, det.dark_per_gate)
    per_sifted = max(
        0.0,
        -sys.f_ec * binary_entropy(e_mu)
        + (bounds.q1_lower / q_mu) * (1.0 - binary_entropy(bounds.e1_upper)),
    )
    w_mu, w_nu, w_vac = src.weights
    mean_gain = w_mu * q_mu + w_nu * q_nu + w_vac * obs.y_vac
    raw_hz = src.pulse_rate_hz * mean_gain
    eff_hz = raw_hz / (1.0 + raw_hz * det.dead_time_us * 1e-6)
    duty = eff_hz / raw_hz if raw_hz > 0 else 1.0
    sifted_bps = src.pulse_rate_hz * w_mu * q_mu * duty * sys.q_sift
    secure_bps = sifted_bps * per_sifted
    return replace(
        report,
        observables=new_obs,
        y1_lower=bounds.y1_lower,
        e1_upper=bounds.e1_upper,
        q1_lower=bounds.q1_lower,
        raw_detection_hz=raw_hz,
        effective_detection_hz=eff_hz,
        duty_factor=duty,
        sifted_bps=sifted_bps,
        secure_bps=secure_bps,
        r_per_pulse=secure_bps / src.pulse_rate_hz,
        secure_per_sifted=per_sifted,
        bounds_clamped=bounds.clamped,
    )


def crosstalk_negligible(
    deltas: Sequence[float],
    qber0s: Sequence[float],
    crosstalk_gain: float,
    dark_per_gate: float,
) -> bool:
    """Negligibility: the crosstalk gain sits below the dark count and every
    QBER increase stays within a tenth of its baseline."""
    if len(deltas) != len(qber0s):
        raise ValueError("deltas and qber0s must pair up")
    if crosstalk_gain > dark_per_gate:
        return False
    return all(d <= q / 10.0 for d, q in zip(deltas, qber0s))
