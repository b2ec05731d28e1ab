"""Passive optical layer: M&D units, fibers, link budgets, leakage paths.

Losses and reflection suppressions are stored as positive dB magnitudes.
Crosstalk power ratios are signed (always <= 0 dB, relative to the
interfering transmitter's launch power). A reflection magnitude of
``math.inf`` switches that leakage mechanism off entirely.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .netgraph import DirectedLink, NetworkPlan, node_label

__all__ = [
    "SPEED_OF_LIGHT_KM_S",
    "MndStructure",
    "ComponentSpec",
    "MAndDSpec",
    "FiberSpec",
    "TimingSpec",
    "LinkBudget",
    "CrosstalkContribution",
    "mnd_pass_loss",
    "effective_insertion_loss",
    "link_budget",
    "enumerate_crosstalk_paths",
    "emulate_crosstalk_measurement",
    "rayleigh_return_db",
    "crosstalk_table",
]

SPEED_OF_LIGHT_KM_S = 299792.458


class MndStructure(enum.Enum):
    """The two equivalent builds of the multiplexer-demultiplexer unit."""

    ONE_CIR_TWO_WDM = "one_cir_two_wdm"
    ONE_WDM_N_CIR = "one_wdm_n_cir"


@dataclass(frozen=True, slots=True)
class ComponentSpec:
    """Datasheet-level parameters of the passive components.

    Reflection-type values (return loss, directivity, connector reflection,
    Rayleigh coefficient) are suppressions: leaked power sits that many dB
    below the forward power. Values under 20 dB are unusual and warned about.
    """

    cir_pass_loss_db: float = 0.6
    wdm_pass_loss_db: float = 0.35
    cir_return_loss_db: float = 50.0
    cir_directivity_db: float = 50.0
    connector_reflection_db: float = 45.0
    rayleigh_coeff_db: float = 70.0  # backscatter per km, below forward power
    group_index: float = 1.468
    router_span_km: float = 0.012

    def __post_init__(self) -> None:
        for name in ("cir_pass_loss_db", "wdm_pass_loss_db"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be a non-negative dB magnitude")
        for name in (
            "cir_return_loss_db",
            "cir_directivity_db",
            "connector_reflection_db",
        ):
            value = getattr(self, name)
            if value < 0:
                raise ValueError(f"{name} must be a non-negative dB magnitude")
            if value < 20.0:
                warnings.warn(
                    f"{name}={value} dB is below typical (>= 20 dB)",
                    stacklevel=2,
                )
        if self.group_index < 1.0:
            raise ValueError("group_index must be >= 1")
        if self.router_span_km < 0:
            raise ValueError("router_span_km must be non-negative")

    @property
    def ns_per_km(self) -> float:
        return 1e9 * self.group_index / SPEED_OF_LIGHT_KM_S


@dataclass(frozen=True, slots=True)
class MAndDSpec:
    structure: MndStructure
    n_wavelengths: int
    per_pass_loss_db: float

    @classmethod
    def from_components(
        cls, spec: ComponentSpec, structure: MndStructure, n_wavelengths: int
    ) -> "MAndDSpec":
        return cls(
            structure=structure,
            n_wavelengths=n_wavelengths,
            per_pass_loss_db=mnd_pass_loss(spec, structure),
        )


@dataclass(frozen=True, slots=True)
class FiberSpec:
    """One fiber span with per-wavelength attenuation and declared joints.

    ``joints_km`` are connector or splice positions measured from the node
    end; each reflects a little light back toward the node.
    """

    length_km: float
    atten_db_per_km: Mapping[int, float]
    joints_km: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.length_km < 0:
            raise ValueError("length_km must be non-negative")
        object.__setattr__(self, "atten_db_per_km", dict(self.atten_db_per_km))
        for w, a in self.atten_db_per_km.items():
            if a < 0:
                raise ValueError(f"attenuation for wavelength {w} must be >= 0")
        object.__setattr__(
            self, "joints_km", tuple(float(p) for p in self.joints_km)
        )
        for p in self.joints_km:
            if not 0 <= p <= self.length_km:
                raise ValueError(f"joint at {p} km lies outside the fiber")

    def atten_for(self, wavelength_index: int) -> float:
        if wavelength_index in self.atten_db_per_km:
            return self.atten_db_per_km[wavelength_index]
        if len(self.atten_db_per_km) == 1:
            return next(iter(self.atten_db_per_km.values()))
        raise ValueError(
            f"no attenuation entry for wavelength {wavelength_index}"
        )

    def loss_db(self, wavelength_index: int) -> float:
        return self.length_km * self.atten_for(wavelength_index)


_ZERO_FIBER = FiberSpec(length_km=0.0, atten_db_per_km={0: 0.0})


@dataclass(frozen=True, slots=True)
class TimingSpec:
    """Gate clock and per-node transmitter launch delays."""

    pulse_period_ns: float = 50.0
    launch_delays_ns: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.pulse_period_ns > 0:
            raise ValueError("pulse_period_ns must be positive")
        object.__setattr__(self, "launch_delays_ns", dict(self.launch_delays_ns))

    def delay(self, node: int) -> float:
        return self.launch_delays_ns.get(node, 0.0)


@dataclass(frozen=True, slots=True)
class LinkBudget:
    """Loss decomposition of one link; a measured total overrides the model."""

    fiber_db: float
    effective_insertion_loss_db: float
    total_db: float
    measured_override_db: float | None = None

    @property
    def source(self) -> str:
        return "measured" if self.measured_override_db is not None else "modeled"


@dataclass(frozen=True, slots=True)
class CrosstalkContribution:
    """One leakage path into a victim receiver.

    ``arrival_offset_ns`` is the arrival time relative to the victim pulse,
    reduced modulo the pulse period; continuous contributions are uniform in
    time and carry no offset. Interband contributions (source wavelength
    different from the victim's) are removable by filtering.
    """

    kind: str  # "point" | "continuous"
    band: str  # "intraband" | "interband"
    source_link: DirectedLink
    mechanism: str
    power_ratio_db: float
    arrival_offset_ns: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("point", "continuous"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.band not in ("intraband", "interband"):
            raise ValueError(f"unknown band {self.band!r}")
        if self.power_ratio_db > 0:
            raise ValueError("power_ratio_db must be <= 0 dB")
        if self.kind == "point" and self.arrival_offset_ns is None:
            raise ValueError("point contributions need an arrival offset")
        if self.kind == "continuous" and self.arrival_offset_ns is not None:
            raise ValueError("continuous contributions carry no offset")

    @property
    def removable(self) -> bool:
        return self.band == "interband"


def mnd_pass_loss(spec: ComponentSpec, structure: MndStructure) -> float:
    """Single-pass loss through one M&D unit."""
    if structure is MndStructure.ONE_CIR_TWO_WDM:
        return spec.cir_pass_loss_db + 2.0 * spec.wdm_pass_loss_db
    if structure is MndStructure.ONE_WDM_N_CIR:
        return spec.wdm_pass_loss_db + spec.cir_pass_loss_db
    raise ValueError(f"unknown structure {structure!r}")


def effective_insertion_loss(measured_path_loss_db: float) -> float:
    """Effective network insertion loss: three quarters of a measured path
    that traverses four M&D-equivalent passes (the multiplexer behind the
    transmitter counts as part of the transmitter)."""
    if measured_path_loss_db < 0:
        raise ValueError("measured_path_loss_db must be non-negative")
    return 0.75 * measured_path_loss_db


def link_budget(
    plan_link: DirectedLink,
    fibers: Sequence[FiberSpec],
    il_effective_db: float,
    measured_override_db: float | None = None,
) -> LinkBudget:
    """Attenuation budget for one link: fiber spans plus effective insertion
    loss, unless a measured total is supplied."""
    if measured_override_db is not None:
        fiber_db = sum(
            f.loss_db(plan_link.wavelength.index) for f in fibers
        ) if fibers else 0.0
        return LinkBudget(
            fiber_db=fiber_db,
            effective_insertion_loss_db=il_effective_db,
            total_db=measured_override_db,
            measured_override_db=measured_override_db,
        )
    if not fibers:
        raise ValueError("fiber data required when no measured override is given")
    fiber_db = sum(f.loss_db(plan_link.wavelength.index) for f in fibers)
    return LinkBudget(
        fiber_db=fiber_db,
        effective_insertion_loss_db=il_effective_db,
        total_db=fiber_db + il_effective_db,
    )


def rayleigh_return_db(
    spec: ComponentSpec, length_km: float, atten_db_per_km: float
) -> float:
    """Total Rayleigh-backscattered fraction of a span, in dB below the
    launched power, including the round-trip attenuation to the entry point.
    Returns -inf for zero length or a disabled coefficient."""
    if length_km <= 0 or math.isinf(spec.rayleigh_coeff_db):
        return -math.inf
    r_per_km = 10.0 ** (-spec.rayleigh_coeff_db / 10.0)
    beta = atten_db_per_km * math.log(10.0) / 10.0  # nepers per km
    if beta == 0:
        total = r_per_km * length_km
    else:
        total = r_per_km * -math.expm1(-2.0 * beta * length_km) / (2.0 * beta)
    return 10.0 * math.log10(total)


def _mod_period(offset_ns: float, period_ns: float) -> float:
    return offset_ns % period_ns


def enumerate_crosstalk_paths(
    plan: NetworkPlan,
    victim: DirectedLink,
    spec: ComponentSpec,
    fibers: Mapping[int, FiberSpec],
    timing: TimingSpec,
    structure: MndStructure = MndStructure.ONE_CIR_TWO_WDM,
) -> list[CrosstalkContribution]:
    """All first-order leakage paths from other transmitters into the victim
    receiver.

    Per interfering transmitter the modeled mechanisms are: the circulator
    return-loss leak inside the victim node's own M&D, connector reflections
    at declared fiber joints, the directivity leak at the router, and
    Rayleigh backscatter along shared spans. Deeper multi-bounce paths are
    dropped as higher order.
    """
    if victim not in plan.links:
        raise ValueError("victim link does not belong to the plan")
    d = victim.dst
    s = victim.src
    w = victim.wavelength.index
    pass_db = mnd_pass_loss(spec, structure)
    period = timing.pulse_period_ns
    tau_km = spec.ns_per_km

    def fiber(node: int) -> FiberSpec:
        return fibers.get(node, _ZERO_FIBER)

    victim_time = (
        timing.delay(s)
        + (fiber(s).length_km + spec.router_span_km + fiber(d).length_km) * tau_km
    )

    out: list[CrosstalkContribution] = []
    for link in plan.links:
        if link.src == s and link.wavelength.index == w:
            continue  # the victim's own transmitter is the signal
        t = link.src
        lam = link.wavelength.index
        band = "intraband" if lam == w else "interband"
        f_t = fiber(t)
        a_t = f_t.atten_for(lam)

        if t == d:
            # Leakage of the receiver node's own transmitters, back into its
            # demultiplexer.
            if not math.isinf(spec.cir_return_loss_db):
                offset = _mod_period(timing.delay(t) - victim_time, period)
                out.append(
                    CrosstalkContribution(
                        kind="point",
                        band=band,
                        source_link=link,
                        mechanism="cir-return",
                        power_ratio_db=-spec.cir_return_loss_db,
                        arrival_offset_ns=offset,
                    )
                )
            if not math.isinf(spec.connector_reflection_db):
                for p in f_t.joints_km:
                    stack = (
                        2.0 * pass_db
                        + 2.0 * p * a_t
                        + spec.connector_reflection_db
                    )
                    offset = _mod_period(
                        timing.delay(t) + 2.0 * p * tau_km - victim_time, period
                    )
                    out.append(
                        CrosstalkContribution(
                            kind="point",
                            band=band,
                            source_link=link,
                            mechanism=f"connector-reflection@{p:g}km",
                            power_ratio_db=-stack,
                            arrival_offset_ns=offset,
                        )
                    )
            ray = rayleigh_return_db(spec, f_t.length_km, a_t)
            if not math.isinf(ray):
                out.append(
                    CrosstalkContribution(
                        kind="continuous",
                        band=band,
                        source_link=link,
                        mechanism="rayleigh-node-fiber",
                        power_ratio_db=ray - 2.0 * pass_db,
                    )
                )
        else:
            # Through-traffic of other nodes leaking across the router core
            # toward the victim's port.
            f_d = fiber(d)
            a_d = f_d.atten_for(lam)
            if not math.isinf(spec.cir_directivity_db):
                stack = (
                    4.0 * pass_db
                    + f_t.length_km * a_t
                    + spec.cir_directivity_db
                    + f_d.length_km * a_d
                )
                arrival = (
                    timing.delay(t)
                    + (f_t.length_km + spec.router_span_km + f_d.length_km) * tau_km
                )
                out.append(
                    CrosstalkContribution(
                        kind="point",
                        band=band,
                        source_link=link,
                        mechanism="router-directivity",
                        power_ratio_db=-stack,
                        arrival_offset_ns=_mod_period(arrival - victim_time, period),
                    )
                )
            ray = rayleigh_return_db(spec, spec.router_span_km, 0.0)
            if not math.isinf(ray):
                stack = 4.0 * pass_db + f_t.length_km * a_t + f_d.length_km * a_d
                out.append(
                    CrosstalkContribution(
                        kind="continuous",
                        band=band,
                        source_link=link,
                        mechanism="rayleigh-router-span",
                        power_ratio_db=ray - stack,
                    )
                )
    return out


def emulate_crosstalk_measurement(
    output_power_dbm: float, p0_dbm: float, measured_path_loss_db: float
) -> float:
    """Crosstalk figure from the laser-replacement procedure: the measured
    output power referenced to the launch power minus one quarter of the
    measured M&D path loss."""
    return output_power_dbm - (p0_dbm - measured_path_loss_db / 4.0)


def crosstalk_table(contributions: Sequence[CrosstalkContribution]) -> str:
    """Tabular text export: kind, band, source, mechanism, dB, offset."""
    lines = ["kind\tband\tsource\tmechanism\tpower_db\toffset_ns"]
    for c in contributions:
        offset = "" if c.arrival_offset_ns is None else f"{c.arrival_offset_ns:.3f}"
        lines.append(
            f"{c.kind}\t{c.band}\t"
            f"{node_label(c.source_link.src)}2R2{node_label(c.source_link.dst)}"
            f"\t{c.mechanism}\t{c.power_ratio_db:.2f}\t{offset}"
        )
    return "\n".join(lines) + "\n"
