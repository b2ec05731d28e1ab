"""Analytic decoy-state BB84 performance model.

Gains and error rates follow the usual Poisson-source threshold-detector
model: a pulse of mean photon number i yields a click with probability
y0 + 1 - exp(-eta * i), and a click is erroneous with probability e_det for
photon clicks and 1/2 for dark clicks. Three-intensity decoy bounds give the
single-photon yield and error, which feed the GLLP secure-rate expression.
Dead time is non-paralyzable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

__all__ = [
    "SourceParams",
    "DetectorParams",
    "SystemParams",
    "DecoyObservables",
    "DecoyBounds",
    "KeyRateReport",
    "binary_entropy",
    "eta_total",
    "gain_and_qber",
    "vacuum_state_yield",
    "vacuum_leak_intensity",
    "decoy_bounds",
    "gllp_rate",
    "dead_time_throughput",
    "calibrate_e_detector",
    "calibrated_eta_scale",
    "observables_for",
    "link_performance",
    "secure_rate_from_observed",
]

E0_BACKGROUND = 0.5  # error rate of background clicks


@dataclass(frozen=True, slots=True)
class SourceParams:
    """Pulsed decoy-state source."""

    mu: float = 0.6
    nu: float = 0.2
    extinction_ratio_db: float = 27.0
    state_ratio: tuple[int, int, int] = (6, 3, 1)
    pulse_rate_hz: float = 2.0e7
    pulse_width_ps: float = 750.0

    def __post_init__(self) -> None:
        if not 0 < self.nu < self.mu:
            raise ValueError("require 0 < nu < mu")
        if len(self.state_ratio) != 3 or any(
            r <= 0 or r != int(r) for r in self.state_ratio
        ):
            raise ValueError("state_ratio must be three positive integers")
        if not self.pulse_rate_hz > 0:
            raise ValueError("pulse_rate_hz must be positive")

    @property
    def weights(self) -> tuple[float, float, float]:
        total = sum(self.state_ratio)
        return tuple(r / total for r in self.state_ratio)  # type: ignore[return-value]


@dataclass(frozen=True, slots=True)
class DetectorParams:
    """Gated single-photon detector."""

    efficiency: float = 0.20
    dark_per_gate: float = 2.0e-5
    gate_ns: float = 1.0
    dead_time_us: float = 0.0
    max_trigger_hz: float = 2.0e7

    def __post_init__(self) -> None:
        if not 0 < self.efficiency <= 1:
            raise ValueError("efficiency must be in (0, 1]")
        if not 0 <= self.dark_per_gate < 1:
            raise ValueError("dark_per_gate must be in [0, 1)")
        if self.dead_time_us < 0:
            raise ValueError("dead_time_us must be non-negative")


@dataclass(frozen=True, slots=True)
class SystemParams:
    """Protocol-level parameters."""

    e_detector: float = 0.01
    f_ec: float = 1.22
    q_sift: float = 0.5
    e0: float = E0_BACKGROUND

    def __post_init__(self) -> None:
        if not 0 <= self.e_detector < 0.5:
            raise ValueError("e_detector must be in [0, 0.5)")
        if self.f_ec < 1:
            raise ValueError("f_ec must be >= 1")
        if not 0 < self.q_sift <= 1:
            raise ValueError("q_sift must be in (0, 1]")
        if self.e0 != E0_BACKGROUND:
            raise ValueError("e0 is fixed at 0.5")


@dataclass(frozen=True, slots=True)
class DecoyObservables:
    """Per-intensity gains and error rates plus the channel transmittance."""

    q_mu: float
    q_nu: float
    y_vac: float
    e_mu: float
    e_nu: float
    eta_total: float

    def __post_init__(self) -> None:
        for name, q in (("q_mu", self.q_mu), ("q_nu", self.q_nu)):
            if not 0 < q < 1:
                raise ValueError(f"{name} must be in (0, 1)")
        for name, e in (("e_mu", self.e_mu), ("e_nu", self.e_nu)):
            if not 0 <= e <= 0.5:
                raise ValueError(f"{name} must be in [0, 0.5]")


@dataclass(frozen=True, slots=True)
class DecoyBounds:
    y1_lower: float
    e1_upper: float
    q1_lower: float
    clamped: bool = False


@dataclass(frozen=True, slots=True)
class KeyRateReport:
    """End-to-end per-link performance with all intermediates echoed."""

    attenuation_db: float
    source: SourceParams
    detector: DetectorParams
    system: SystemParams
    observables: DecoyObservables
    y1_lower: float
    e1_upper: float
    q1_lower: float
    raw_detection_hz: float
    effective_detection_hz: float
    duty_factor: float
    sifted_bps: float
    secure_bps: float
    r_per_pulse: float
    secure_per_sifted: float
    vacuum_like: bool
    bounds_clamped: bool = False

    def to_dict(self) -> dict:
        return {
            "attenuation_db": self.attenuation_db,
            "q_mu": self.observables.q_mu,
            "q_nu": self.observables.q_nu,
            "y_vac": self.observables.y_vac,
            "e_mu": self.observables.e_mu,
            "e_nu": self.observables.e_nu,
            "eta_total": self.observables.eta_total,
            "y1_lower": self.y1_lower,
            "e1_upper": self.e1_upper,
            "q1_lower": self.q1_lower,
            "raw_detection_hz": self.raw_detection_hz,
            "effective_detection_hz": self.effective_detection_hz,
            "duty_factor": self.duty_factor,
            "sifted_bps": self.sifted_bps,
            "secure_bps": self.secure_bps,
            "r_per_pulse": self.r_per_pulse,
            "secure_per_sifted": self.secure_per_sifted,
            "vacuum_like": self.vacuum_like,
            "bounds_clamped": self.bounds_clamped,
        }


def binary_entropy(x: float) -> float:
    """Shannon entropy of a bit, H2(x), with H2(0) = H2(1) = 0."""
    if not 0 <= x <= 1:
        raise ValueError(f"binary_entropy domain is [0, 1], got {x}")
    if x == 0 or x == 1:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def eta_total(attenuation_db: float, det: DetectorParams) -> float:
    """End-to-end detection probability per photon at the given loss."""
    if attenuation_db < 0:
        raise ValueError("attenuation_db must be non-negative")
    return det.efficiency * 10.0 ** (-attenuation_db / 10.0)


def gain_and_qber(
    intensity: float, eta: float, y0: float, e_det: float
) -> tuple[float, float]:
    """Gain and QBER of a Poisson pulse train at one mean photon number."""
    if intensity < 0:
        raise ValueError("intensity must be non-negative")
    x = -math.expm1(-eta * intensity)
    q = y0 + x
    if q == 0:
        return 0.0, E0_BACKGROUND
    e = (E0_BACKGROUND * y0 + e_det * x) / q
    return q, e


def vacuum_leak_intensity(src: SourceParams) -> float:
    """Residual mean photon number of the "vacuum" state set by the
    intensity modulator's finite extinction ratio."""
    return src.mu * 10.0 ** (-src.extinction_ratio_db / 10.0)


def vacuum_state_yield(src: SourceParams, eta: float, y0: float) -> float:
    """Per-gate yield of the near-vacuum state (dark counts plus leakage)."""
    mu_v = vacuum_leak_intensity(src)
    return y0 - math.expm1(-eta * mu_v)


def decoy_bounds(
    q_mu: float,
    q_nu: float,
    e_mu: float,
    e_nu: float,
    mu: float,
    nu: float,
    y0: float,
) -> DecoyBounds:
    """Three-intensity bounds on the single-photon yield and error.

    Y1 lower bound:  (mu / (mu*nu - nu^2)) *
                     (Qnu e^nu - Qmu e^mu nu^2/mu^2 - (mu^2-nu^2)/mu^2 * Y0)
    e1 upper bound:  (Enu Qnu e^nu - Y0/2) / (Y1_lower * nu)
    Q1 lower bound:  Y1_lower * mu * e^(-mu)

    A non-positive Y1 clamps to zero with the error bound pinned at 1/2;
    the ``clamped`` flag records any clamping.
    """
    if not 0 < nu < mu:
        raise ValueError("require 0 < nu < mu")
    clamped = False
    y1 = (mu / (mu * nu - nu * nu)) * (
        q_nu * math.exp(nu)
        - q_mu * math.exp(mu) * nu * nu / (mu * mu)
        - (mu * mu - nu * nu) / (mu * mu) * y0
    )
    if y1 <= 0:
        return DecoyBounds(y1_lower=0.0, e1_upper=0.5, q1_lower=0.0, clamped=True)
    e1 = (e_nu * q_nu * math.exp(nu) - E0_BACKGROUND * y0) / (y1 * nu)
    if e1 < 0:
        e1, clamped = 0.0, True
    elif e1 > 0.5:
        e1, clamped = 0.5, True
    q1 = y1 * mu * math.exp(-mu)
    return DecoyBounds(y1_lower=y1, e1_upper=e1, q1_lower=q1, clamped=clamped)


def gllp_rate(
    q_sift: float,
    q_mu: float,
    e_mu: float,
    q1_lower: float,
    e1_upper: float,
    f_ec: float,
) -> float:
    """Secure bits per clock; clamped at zero when privacy amplification
    cannot outpace error correction."""
    r = q_sift * (
        -q_mu * f_ec * binary_entropy(e_mu)
        + q1_lower * (1.0 - binary_entropy(e1_upper))
    )
    return max(0.0, r)


def dead_time_throughput(raw_detection_rate_hz: float, dead_time_us: float) -> float:
    """Effective click rate of a non-paralyzable detector: R / (1 + R*tau)."""
    if raw_detection_rate_hz < 0:
        raise ValueError("rate must be non-negative")
    tau = dead_time_us * 1e-6
    return raw_detection_rate_hz / (1.0 + raw_detection_rate_hz * tau)


def calibrate_e_detector(
    e_mu_observed: float, eta: float, y0: float, mu: float
) -> float:
    """Intrinsic error probability that makes the model's signal QBER match
    an observed value. Clamped at zero when the observation sits below the
    dark-count floor."""
    x = -math.expm1(-eta * mu)
    if x <= 0:
        raise ValueError("channel is opaque; cannot calibrate")
    e_det = (e_mu_observed * (y0 + x) - E0_BACKGROUND * y0) / x
    return min(max(e_det, 0.0), 0.499999)


def observables_for(
    attenuation_db: float,
    src: SourceParams,
    det: DetectorParams,
    sys: SystemParams,
) -> DecoyObservables:
    """Model-generated per-intensity observables for one link."""
    eta = eta_total(attenuation_db, det)
    q_mu, e_mu = gain_and_qber(src.mu, eta, det.dark_per_gate, sys.e_detector)
    q_nu, e_nu = gain_and_qber(src.nu, eta, det.dark_per_gate, sys.e_detector)
    y_vac = vacuum_state_yield(src, eta, det.dark_per_gate)
    return DecoyObservables(
        q_mu=q_mu, q_nu=q_nu, y_vac=y_vac, e_mu=e_mu, e_nu=e_nu, eta_total=eta
    )


def link_performance(
    attenuation_db: float,
    src: SourceParams,
    det: DetectorParams,
    sys: SystemParams,
) -> KeyRateReport:
    """Full analytic pipeline for one link.

    All intensity classes load the detector (and hence the dead time), but
    only signal-state detections count toward the sifted key.
    """
    obs = observables_for(attenuation_db, src, det, sys)
    w_mu, w_nu, w_vac = src.weights
    mean_gain = w_mu * obs.q_mu + w_nu * obs.q_nu + w_vac * obs.y_vac
    raw_hz = src.pulse_rate_hz * mean_gain
    eff_hz = dead_time_throughput(raw_hz, det.dead_time_us)
    duty = eff_hz / raw_hz if raw_hz > 0 else 1.0
    sifted_bps = src.pulse_rate_hz * w_mu * obs.q_mu * duty * sys.q_sift

    bounds = decoy_bounds(
        obs.q_mu, obs.q_nu, obs.e_mu, obs.e_nu, src.mu, src.nu, det.dark_per_gate
    )
    per_sifted = max(
        0.0,
        -sys.f_ec * binary_entropy(obs.e_mu)
        + (bounds.q1_lower / obs.q_mu) * (1.0 - binary_entropy(bounds.e1_upper)),
    )
    secure_bps = sifted_bps * per_sifted
    vacuum_like = (obs.y_vac - det.dark_per_gate) <= det.dark_per_gate
    return KeyRateReport(
        attenuation_db=attenuation_db,
        source=src,
        detector=det,
        system=sys,
        observables=obs,
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
        vacuum_like=vacuum_like,
        bounds_clamped=bounds.clamped,
    )


def secure_rate_from_observed(
    sifted_bps: float,
    e_mu_observed: float,
    attenuation_db: float,
    src: SourceParams,
    det: DetectorParams,
    sys: SystemParams,
) -> float:
    """Secure rate from a measured sifted rate and signal QBER.

    Decoy observables are model-generated at the stated attenuation, with the
    intrinsic error calibrated so the modeled signal QBER reproduces the
    measurement; the secure fraction then multiplies the measured sifted rate.
    """
    if not sifted_bps > 0:
        raise ValueError("sifted_bps must be positive")
    eta = eta_total(attenuation_db, det)
    e_det = calibrate_e_detector(e_mu_observed, eta, det.dark_per_gate, src.mu)
    cal = replace(sys, e_detector=e_det)
    obs = observables_for(attenuation_db, src, det, cal)
    bounds = decoy_bounds(
        obs.q_mu, obs.q_nu, e_mu_observed, obs.e_nu, src.mu, src.nu, det.dark_per_gate
    )
    per_sifted = max(
        0.0,
        -sys.f_ec * binary_entropy(e_mu_observed)
        + (bounds.q1_lower / obs.q_mu) * (1.0 - binary_entropy(bounds.e1_upper)),
    )
    return sifted_bps * per_sifted


def calibrated_eta_scale(
    attenuation_db: float,
    src: SourceParams,
    det: DetectorParams,
    sys: SystemParams,
    measured_sifted_bps: float,
) -> float:
    """Multiplicative transmittance factor (<= 1) that makes the modeled
    sifted rate match a measurement; bisection on the full pipeline.

    Captures receiver-internal loss the stated link attenuation omits.
    """
    if measured_sifted_bps <= 0:
        raise ValueError("measured_sifted_bps must be positive")

    def sifted(scale: float) -> float:
        extra_db = -10.0 * math.log10(scale)
        return link_performance(attenuation_db + extra_db, src, det, sys).sifted_bps

    if sifted(1.0) <= measured_sifted_bps:
        return 1.0
    lo, hi = 1e-9, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if sifted(mid) > measured_sifted_bps:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
