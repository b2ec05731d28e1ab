"""Field-test reproduction: model every measured link and compare.

Secure rates are reproduced from the measured sifted rate and QBER through
the decoy bounds; sifted rates are modeled from first principles and held to
a factor-two band because the stated link attenuations omit receiver-internal
loss. The transmittance scale that reconciles the two is reported per link
and reused for the vacuum-likeness flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import xtalk
from .netgraph import label_to_index, route_lookup
from .optics import enumerate_crosstalk_paths
from .pulsesim import SimConfig, simulate_link
from .qkdrate import (
    calibrated_eta_scale,
    eta_total,
    link_performance,
    observables_for,
    secure_rate_from_observed,
    vacuum_state_yield,
)
from .scenario import Scenario

__all__ = [
    "TOLERANCES",
    "LinkCheck",
    "CrosstalkCheck",
    "ReproductionReport",
    "reproduce",
]

TOLERANCES = ("factor2", "pct25")
DEFAULT_SIM_PULSES = 1_000_000
DEFAULT_SEED = 20120229
SIM_Z_LIMIT = 4.0


def _within(ratio: float, tolerance: str) -> bool:
    if tolerance == "factor2":
        return 0.5 <= ratio <= 2.0
    if tolerance == "pct25":
        return abs(ratio - 1.0) <= 0.25
    raise ValueError(f"unknown tolerance {tolerance!r}; choose from {TOLERANCES}")


@dataclass(frozen=True, slots=True)
class LinkCheck:
    key: str
    measured_sifted_kbit_s: float
    measured_qber_pct: float
    measured_secure_kbit_s: float
    modeled_secure_kbit_s: float
    secure_ratio: float
    secure_pass: bool
    modeled_sifted_kbit_s: float
    sifted_ratio: float
    sifted_pass: bool
    modeled_qber_pct: float
    eta_scale: float
    implied_excess_db: float
    vacuum_like: bool
    sim_gain_z: float
    sim_qber_z: float
    sim_pass: bool

    @property
    def passed(self) -> bool:
        return self.secure_pass and self.sifted_pass and self.sim_pass and self.vacuum_like

    def to_dict(self) -> dict:
        return {
            "link": self.key,
            "measured_sifted_kbit_s": self.measured_sifted_kbit_s,
            "measured_qber_pct": self.measured_qber_pct,
            "measured_secure_kbit_s": self.measured_secure_kbit_s,
            "modeled_secure_kbit_s": self.modeled_secure_kbit_s,
            "secure_ratio": self.secure_ratio,
            "secure_pass": self.secure_pass,
            "modeled_sifted_kbit_s": self.modeled_sifted_kbit_s,
            "sifted_ratio": self.sifted_ratio,
            "sifted_pass": self.sifted_pass,
            "modeled_qber_pct": self.modeled_qber_pct,
            "eta_scale": self.eta_scale,
            "implied_excess_db": self.implied_excess_db,
            "vacuum_like": self.vacuum_like,
            "sim_gain_z": self.sim_gain_z,
            "sim_qber_z": self.sim_qber_z,
            "sim_pass": self.sim_pass,
            "passed": self.passed,
        }


@dataclass(frozen=True, slots=True)
class CrosstalkCheck:
    link: str
    calibration_shift_db: float
    crosstalk_gain: float
    dark_per_gate: float
    below_dark: bool
    chi_signal: float
    chi_decoy: float
    delta_qber_signal: float
    delta_qber_decoy: float
    qber0_signal: float
    qber0_decoy: float
    within_tenth: bool
    negligible: bool
    floor_db: float
    floor_margin_db: float
    above_floor: bool

    def to_dict(self) -> dict:
        return {
            "link": self.link,
            "calibration_shift_db": self.calibration_shift_db,
            "crosstalk_gain": self.crosstalk_gain,
            "dark_per_gate": self.dark_per_gate,
            "below_dark": self.below_dark,
            "chi_signal": self.chi_signal,
            "chi_decoy": self.chi_decoy,
            "delta_qber_signal": self.delta_qber_signal,
            "delta_qber_decoy": self.delta_qber_decoy,
            "qber0_signal": self.qber0_signal,
            "qber0_decoy": self.qber0_decoy,
            "within_tenth": self.within_tenth,
            "negligible": self.negligible,
            "floor_db": self.floor_db,
            "floor_margin_db": self.floor_margin_db,
            "above_floor": self.above_floor,
        }


@dataclass(frozen=True, slots=True)
class ReproductionReport:
    scenario: str
    tolerance: str
    sim_pulses: int
    seed: int
    links: tuple[LinkCheck, ...]
    crosstalk: CrosstalkCheck

    @property
    def passed(self) -> bool:
        return all(l.passed for l in self.links) and self.crosstalk.negligible

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "tolerance": self.tolerance,
            "sim_pulses": self.sim_pulses,
            "seed": self.seed,
            "links": [l.to_dict() for l in self.links],
            "crosstalk": self.crosstalk.to_dict(),
            "passed": self.passed,
        }

    def format_table(self) -> str:
        head = (
            f"{'link':8} {'secure model/meas':>18} {'ratio':>7} {'ok':>3} "
            f"{'sifted model/meas':>18} {'ratio':>7} {'ok':>3} {'sim':>4} {'vac':>4}"
        )
        lines = [
            f"reproduction of scenario '{self.scenario}' "
            f"(tolerance {self.tolerance}, {self.sim_pulses} pulses, seed {self.seed})",
            head,
            "-" * len(head),
        ]
        for l in self.links:
            lines.append(
                f"{l.key:8} "
                f"{l.modeled_secure_kbit_s:8.3f}/{l.measured_secure_kbit_s:<8.2f} "
                f"{l.secure_ratio:7.3f} {'y' if l.secure_pass else 'N':>3} "
                f"{l.modeled_sifted_kbit_s:8.2f}/{l.measured_sifted_kbit_s:<8.2f} "
                f"{l.sifted_ratio:7.3f} {'y' if l.sifted_pass else 'N':>3} "
                f"{'y' if l.sim_pass else 'N':>4} {'y' if l.vacuum_like else 'N':>4}"
            )
        c = self.crosstalk
        lines += [
            "",
            f"crosstalk worst case on {c.link}: gain {c.crosstalk_gain:.3g} "
            f"(dark {c.dark_per_gate:.3g}, below: {'y' if c.below_dark else 'N'})",
            f"  delta QBER signal {100 * c.delta_qber_signal:.3f}% of "
            f"{100 * c.qber0_signal:.2f}%, decoy {100 * c.delta_qber_decoy:.3f}% of "
            f"{100 * c.qber0_decoy:.2f}% (within tenth: "
            f"{'y' if c.within_tenth else 'N'})",
            f"  leakage floor {c.floor_db:.2f} dB, margin {c.floor_margin_db:.2f} dB",
            "",
            f"overall: {'PASS' if self.passed else 'FAIL'}",
        ]
        return "\n".join(lines) + "\n"


def _check_link(
    scenario: Scenario,
    key: str,
    tolerance: str,
    sim_pulses: int,
    seed: int,
    workers: int,
) -> LinkCheck:
    link = scenario.link(key)
    src = scenario.source
    det = scenario.detector_for(key)
    sys = scenario.system_for(key)

    modeled_secure = secure_rate_from_observed(
        link.sifted_kbit_s * 1000.0,
        link.signal_qber_pct / 100.0,
        link.attenuation_db,
        src,
        det,
        sys,
    ) / 1000.0
    secure_ratio = modeled_secure / link.secure_kbit_s

    report = link_performance(link.attenuation_db, src, det, sys)
    modeled_sifted = report.sifted_bps / 1000.0
    sifted_ratio = modeled_sifted / link.sifted_kbit_s

    scale = calibrated_eta_scale(
        link.attenuation_db, src, det, sys, link.sifted_kbit_s * 1000.0
    )
    eta_cal = eta_total(link.attenuation_db, det) * scale
    leak = vacuum_state_yield(src, eta_cal, det.dark_per_gate) - det.dark_per_gate
    vacuum_like = leak <= det.dark_per_gate

    sim = simulate_link(
        SimConfig(
            n_pulses=sim_pulses,
            seed=seed,
            attenuation_db=link.attenuation_db,
            source=src,
            detector=det,
            system=sys,
        ),
        workers=workers,
    )
    gain_z = (
        (sim.signal.gain - report.observables.q_mu) / sim.signal.gain_stderr
        if sim.signal.gain_stderr > 0
        else 0.0
    )
    qber_z = (
        (sim.signal.qber - report.observables.e_mu) / sim.signal.qber_stderr
        if sim.signal.qber_stderr > 0
        else 0.0
    )
    sim_pass = abs(gain_z) <= SIM_Z_LIMIT and abs(qber_z) <= SIM_Z_LIMIT

    return LinkCheck(
        key=key,
        measured_sifted_kbit_s=link.sifted_kbit_s,
        measured_qber_pct=link.signal_qber_pct,
        measured_secure_kbit_s=link.secure_kbit_s,
        modeled_secure_kbit_s=modeled_secure,
        secure_ratio=secure_ratio,
        secure_pass=_within(secure_ratio, tolerance),
        modeled_sifted_kbit_s=modeled_sifted,
        sifted_ratio=sifted_ratio,
        sifted_pass=_within(sifted_ratio, "factor2"),
        modeled_qber_pct=report.observables.e_mu * 100.0,
        eta_scale=scale,
        implied_excess_db=-10.0 * math.log10(scale) if scale > 0 else math.inf,
        vacuum_like=vacuum_like,
        sim_gain_z=gain_z,
        sim_qber_z=qber_z,
        sim_pass=sim_pass,
    )


def _check_crosstalk(scenario: Scenario, key: str) -> CrosstalkCheck:
    link = scenario.link(key)
    plan = scenario.plan()
    victim = route_lookup(
        plan, label_to_index(link.from_label), label_to_index(link.to_label)
    )
    contributions = enumerate_crosstalk_paths(
        plan,
        victim,
        scenario.components,
        scenario.fiber_map(),
        scenario.timing(),
    )
    src = scenario.source
    det = scenario.detector_for(key)
    sys = scenario.system_for(key)
    obs = observables_for(link.attenuation_db, src, det, sys)
    gate = det.gate_ns
    period = 1e9 / src.pulse_rate_hz

    calibrated, shift = xtalk.calibrate_contributions(
        contributions,
        target_crosstalk_gain=scenario.reference.yx_reference,
        source_mean_photon=src.mu,
        det_efficiency=det.efficiency,
        gate_ns=gate,
        pulse_period_ns=period,
    )
    summary = xtalk.aggregate_chi(
        calibrated,
        gate_ns=gate,
        pulse_period_ns=period,
        victim_signal_gain=obs.q_mu,
        source_mean_photon=src.mu,
        det_efficiency=det.efficiency,
    )
    y_x = summary.crosstalk_gain_worst
    qber0_sig = link.signal_qber_pct / 100.0
    qber0_dec = obs.e_nu
    chi_sig = y_x / obs.q_mu
    chi_dec = y_x / obs.q_nu
    d_sig = xtalk.delta_qber(chi_sig, qber0_sig)
    d_dec = xtalk.delta_qber(chi_dec, qber0_dec)
    within = d_sig <= qber0_sig / 10.0 and d_dec <= qber0_dec / 10.0
    negligible = xtalk.crosstalk_negligible(
        (d_sig, d_dec), (qber0_sig, qber0_dec), y_x, det.dark_per_gate
    )
    floor = xtalk.leakage_floor_check(
        link.crosstalk_db, link.attenuation_db, src.extinction_ratio_db
    )
    return CrosstalkCheck(
        link=key,
        calibration_shift_db=shift,
        crosstalk_gain=y_x,
        dark_per_gate=det.dark_per_gate,
        below_dark=y_x <= det.dark_per_gate,
        chi_signal=chi_sig,
        chi_decoy=chi_dec,
        delta_qber_signal=d_sig,
        delta_qber_decoy=d_dec,
        qber0_signal=qber0_sig,
        qber0_decoy=qber0_dec,
        within_tenth=within,
        negligible=negligible,
        floor_db=floor.floor_db,
        floor_margin_db=floor.margin_db,
        above_floor=floor.above_floor,
    )


def reproduce(
    scenario: Scenario,
    tolerance: str = "factor2",
    sim_pulses: int = DEFAULT_SIM_PULSES,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
) -> ReproductionReport:
    """Model every measured link of the scenario and compare against the
    recorded field values."""
    if tolerance not in TOLERANCES:
        raise ValueError(f"unknown tolerance {tolerance!r}; choose from {TOLERANCES}")
    if not scenario.links:
        raise ValueError("scenario declares no measured links")
    links = tuple(
        _check_link(scenario, key, tolerance, sim_pulses, seed, workers)
        for key in scenario.links
    )
    worst = max(scenario.links, key=lambda k: scenario.links[k].attenuation_db)
    crosstalk = _check_crosstalk(scenario, worst)
    return ReproductionReport(
        scenario=scenario.name,
        tolerance=tolerance,
        sim_pulses=sim_pulses,
        seed=seed,
        links=links,
        crosstalk=crosstalk,
    )
