"""Scenario documents: experiment descriptions with measured overrides.

A scenario is a JSON document with explicit unit suffixes on every field
(``attenuation_db``, ``dead_time_us``, ``sifted_kbit_s``, ...). Unknown keys
are rejected and values are unit-checked at parse time; the shipped ``wuhu``
scenario carries the built-in field-test dataset.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources
from typing import Any, Mapping

from .netgraph import NetworkPlan, build_plan, label_to_index, route_lookup
from .optics import ComponentSpec, FiberSpec, TimingSpec
from .qkdrate import (
    DetectorParams,
    SourceParams,
    SystemParams,
    calibrate_e_detector,
    eta_total,
)

__all__ = [
    "ScenarioError",
    "MeasuredLink",
    "ReferenceConstants",
    "ScenarioSystem",
    "Scenario",
    "parse_scenario",
    "serialize_scenario",
    "load_scenario",
    "builtin_scenario_text",
    "wuhu_scenario",
]


class ScenarioError(ValueError):
    """Scenario document is syntactically or semantically invalid."""


@dataclass(frozen=True, slots=True)
class MeasuredLink:
    """Field-test measurements for one directed link."""

    from_label: str
    to_label: str
    wavelength_nm: float
    attenuation_db: float
    crosstalk_db: float
    dead_time_us: float
    sifted_kbit_s: float
    signal_qber_pct: float
    secure_kbit_s: float

    @property
    def key(self) -> str:
        return f"{self.from_label}2R2{self.to_label}"


@dataclass(frozen=True, slots=True)
class ReferenceConstants:
    """Reference figures used by measurement emulation and flags."""

    p0_dbm: float
    measured_path_loss_db: float
    effective_insertion_loss_db: float
    y0_reference: float
    yx_reference: float


@dataclass(frozen=True, slots=True)
class ScenarioSystem:
    """Protocol parameters; ``e_detector`` of None means "calibrate per link
    from its measured signal QBER"."""

    f_ec: float
    q_sift: float
    e_detector: float | None = None


@dataclass(frozen=True, slots=True)
class Scenario:
    name: str
    n_wavelengths: int
    node_labels: tuple[str, ...]
    wavelength_nm: tuple[float, ...]
    components: ComponentSpec
    source: SourceParams
    detector: DetectorParams
    system: ScenarioSystem
    fibers: dict[str, FiberSpec]
    launch_delays_ns: dict[str, float]
    reference: ReferenceConstants
    links: dict[str, MeasuredLink]

    def plan(self) -> NetworkPlan:
        return build_plan(self.n_wavelengths, nominal_nm=self.wavelength_nm)

    def link(self, key: str) -> MeasuredLink:
        if key not in self.links:
            raise ScenarioError(
                f"unknown link {key!r}; scenario has {sorted(self.links)}"
            )
        return self.links[key]

    def detector_for(self, key: str) -> DetectorParams:
        return replace(self.detector, dead_time_us=self.link(key).dead_time_us)

    def system_for(self, key: str) -> SystemParams:
        """Per-link protocol parameters with the intrinsic error either as
        configured or calibrated to the measured signal QBER."""
        link = self.link(key)
        if self.system.e_detector is not None:
            e_det = self.system.e_detector
        else:
            eta = eta_total(link.attenuation_db, self.detector)
            e_det = calibrate_e_detector(
                link.signal_qber_pct / 100.0,
                eta,
                self.detector.dark_per_gate,
                self.source.mu,
            )
        return SystemParams(e_detector=e_det, f_ec=self.system.f_ec, q_sift=self.system.q_sift)

    def fiber_map(self) -> dict[int, FiberSpec]:
        return {label_to_index(lbl): f for lbl, f in self.fibers.items()}

    def timing(self) -> TimingSpec:
        return TimingSpec(
            pulse_period_ns=1e9 / self.source.pulse_rate_hz,
            launch_delays_ns={
                label_to_index(lbl): d for lbl, d in self.launch_delays_ns.items()
            },
        )


def _require(mapping: Mapping[str, Any], key: str, path: str) -> Any:
    if key not in mapping:
        raise ScenarioError(f"{path}{key} required")
    return mapping[key]


def _check_keys(mapping: Mapping[str, Any], allowed: set[str], path: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ScenarioError(f"unknown key(s) at {path or 'top level'}: {sorted(unknown)}")


def _number(value: Any, path: str, minimum: float | None = None,
            maximum: float | None = None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{path} must be a number, got {value!r}")
    v = float(value)
    if minimum is not None and v < minimum:
        raise ScenarioError(f"{path} must be >= {minimum}, got {v}")
    if maximum is not None and v > maximum:
        raise ScenarioError(f"{path} must be <= {maximum}, got {v}")
    return v


def parse_scenario(document: str) -> Scenario:
    """Parse and validate a scenario document."""
    try:
        raw = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(raw, dict):
        raise ScenarioError("scenario document must be a JSON object")

    _check_keys(
        raw,
        {
            "name", "n_wavelengths", "node_labels", "wavelength_nm",
            "components", "source", "detector", "system", "fibers",
            "launch_delays_ns", "reference", "links",
        },
        "",
    )
    n = _require(raw, "n_wavelengths", "")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ScenarioError("n_wavelengths must be a positive integer")

    labels = tuple(_require(raw, "node_labels", ""))
    if len(labels) != 2 * n + 1:
        raise ScenarioError(
            f"node_labels must list {2 * n + 1} labels for n_wavelengths={n}"
        )
    try:
        indices = [label_to_index(l) for l in labels]
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    if indices != list(range(2 * n + 1)):
        raise ScenarioError("node_labels must be the canonical labels A, B, C, ...")

    nm = tuple(
        _number(v, f"wavelength_nm[{i}]", minimum=1.0)
        for i, v in enumerate(_require(raw, "wavelength_nm", ""))
    )
    if len(nm) != n or any(b <= a for a, b in zip(nm, nm[1:])):
        raise ScenarioError("wavelength_nm must be strictly increasing, one per channel")

    comp_raw = _require(raw, "components", "")
    _check_keys(
        comp_raw,
        {
            "cir_pass_loss_db", "wdm_pass_loss_db", "cir_return_loss_db",
            "cir_directivity_db", "connector_reflection_db", "rayleigh_coeff_db",
            "group_index", "router_span_km",
        },
        "components.",
    )
    try:
        components = ComponentSpec(**{k: _number(v, f"components.{k}")
                                      for k, v in comp_raw.items()})
    except ValueError as exc:
        raise ScenarioError(f"components: {exc}") from exc

    src_raw = _require(raw, "source", "")
    _check_keys(
        src_raw,
        {"mu", "nu", "extinction_ratio_db", "state_ratio", "pulse_rate_hz",
         "pulse_width_ps"},
        "source.",
    )
    try:
        ratio = tuple(int(r) for r in src_raw.get("state_ratio", (6, 3, 1)))
        source = SourceParams(
            mu=_number(src_raw.get("mu", 0.6), "source.mu", minimum=0.0),
            nu=_number(src_raw.get("nu", 0.2), "source.nu", minimum=0.0),
            extinction_ratio_db=_number(
                src_raw.get("extinction_ratio_db", 27.0),
                "source.extinction_ratio_db", minimum=0.0),
            state_ratio=ratio,  # type: ignore[arg-type]
            pulse_rate_hz=_number(
                src_raw.get("pulse_rate_hz", 2e7), "source.pulse_rate_hz", minimum=1.0),
            pulse_width_ps=_number(
                src_raw.get("pulse_width_ps", 750.0), "source.pulse_width_ps",
                minimum=0.0),
        )
    except ValueError as exc:
        raise ScenarioError(f"source: {exc}") from exc

    det_raw = _require(raw, "detector", "")
    _check_keys(
        det_raw,
        {"efficiency", "dark_per_gate", "gate_ns", "max_trigger_hz"},
        "detector.",
    )
    try:
        detector = DetectorParams(
            efficiency=_number(det_raw.get("efficiency", 0.2), "detector.efficiency"),
            dark_per_gate=_number(
                det_raw.get("dark_per_gate", 2e-5), "detector.dark_per_gate",
                minimum=0.0),
            gate_ns=_number(det_raw.get("gate_ns", 1.0), "detector.gate_ns",
                            minimum=0.0),
            dead_time_us=0.0,
            max_trigger_hz=_number(
                det_raw.get("max_trigger_hz", 2e7), "detector.max_trigger_hz",
                minimum=1.0),
        )
    except ValueError as exc:
        raise ScenarioError(f"detector: {exc}") from exc

    if source.pulse_rate_hz > detector.max_trigger_hz:
        raise ScenarioError(
            "source.pulse_rate_hz exceeds detector.max_trigger_hz"
        )
    if detector.gate_ns > 1e9 / source.pulse_rate_hz:
        raise ScenarioError("detector.gate_ns exceeds the pulse period")

    sys_raw = _require(raw, "system", "")
    _check_keys(sys_raw, {"f_ec", "q_sift", "e_detector"}, "system.")
    e_det_raw = sys_raw.get("e_detector")
    system = ScenarioSystem(
        f_ec=_number(sys_raw.get("f_ec", 1.22), "system.f_ec", minimum=1.0),
        q_sift=_number(sys_raw.get("q_sift", 0.5), "system.q_sift"),
        e_detector=None if e_det_raw is None
        else _number(e_det_raw, "system.e_detector", minimum=0.0, maximum=0.5),
    )

    fibers_raw = raw.get("fibers", {})
    fibers: dict[str, FiberSpec] = {}
    for lbl, f_raw in fibers_raw.items():
        if lbl not in labels:
            raise ScenarioError(f"fibers.{lbl}: unknown node label")
        _check_keys(f_raw, {"length_km", "atten_db_per_km", "joints_km"},
                    f"fibers.{lbl}.")
        atten = {
            int(w): _number(a, f"fibers.{lbl}.atten_db_per_km[{w}]", minimum=0.0)
            for w, a in _require(f_raw, "atten_db_per_km", f"fibers.{lbl}.").items()
        }
        try:
            fibers[lbl] = FiberSpec(
                length_km=_number(_require(f_raw, "length_km", f"fibers.{lbl}."),
                                  f"fibers.{lbl}.length_km", minimum=0.0),
                atten_db_per_km=atten,
                joints_km=tuple(f_raw.get("joints_km", ())),
            )
        except ValueError as exc:
            raise ScenarioError(f"fibers.{lbl}: {exc}") from exc

    delays_raw = raw.get("launch_delays_ns", {})
    delays: dict[str, float] = {}
    for lbl, d in delays_raw.items():
        if lbl not in labels:
            raise ScenarioError(f"launch_delays_ns.{lbl}: unknown node label")
        delays[lbl] = _number(d, f"launch_delays_ns.{lbl}", minimum=0.0)

    ref_raw = _require(raw, "reference", "")
    _check_keys(
        ref_raw,
        {"p0_dbm", "measured_path_loss_db", "effective_insertion_loss_db",
         "y0_reference", "yx_reference"},
        "reference.",
    )
    reference = ReferenceConstants(
        p0_dbm=_number(_require(ref_raw, "p0_dbm", "reference."), "reference.p0_dbm"),
        measured_path_loss_db=_number(
            _require(ref_raw, "measured_path_loss_db", "reference."),
            "reference.measured_path_loss_db", minimum=0.0),
        effective_insertion_loss_db=_number(
            _require(ref_raw, "effective_insertion_loss_db", "reference."),
            "reference.effective_insertion_loss_db", minimum=0.0),
        y0_reference=_number(
            _require(ref_raw, "y0_reference", "reference."),
            "reference.y0_reference", minimum=0.0),
        yx_reference=_number(
            _require(ref_raw, "yx_reference", "reference."),
            "reference.yx_reference", minimum=0.0),
    )

    plan = build_plan(n, nominal_nm=nm)
    links_raw = raw.get("links", {})
    links: dict[str, MeasuredLink] = {}
    for key, l_raw in links_raw.items():
        path = f"links.{key}."
        _check_keys(
            l_raw,
            {"from", "to", "wavelength_nm", "attenuation_db", "crosstalk_db",
             "dead_time_us", "sifted_kbit_s", "signal_qber_pct", "secure_kbit_s"},
            path,
        )
        frm = _require(l_raw, "from", path)
        to = _require(l_raw, "to", path)
        if frm not in labels or to not in labels:
            raise ScenarioError(f"{path}from/to must be node labels")
        link = MeasuredLink(
            from_label=frm,
            to_label=to,
            wavelength_nm=_number(_require(l_raw, "wavelength_nm", path),
                                  path + "wavelength_nm", minimum=1.0),
            attenuation_db=_number(_require(l_raw, "attenuation_db", path),
                                   path + "attenuation_db", minimum=0.0),
            crosstalk_db=_number(_require(l_raw, "crosstalk_db", path),
                                 path + "crosstalk_db", maximum=0.0),
            dead_time_us=_number(_require(l_raw, "dead_time_us", path),
                                 path + "dead_time_us", minimum=0.0),
            sifted_kbit_s=_number(_require(l_raw, "sifted_kbit_s", path),
                                  path + "sifted_kbit_s", minimum=0.0),
            signal_qber_pct=_number(_require(l_raw, "signal_qber_pct", path),
                                    path + "signal_qber_pct", minimum=0.0,
                                    maximum=50.0),
            secure_kbit_s=_number(_require(l_raw, "secure_kbit_s", path),
                                  path + "secure_kbit_s", minimum=0.0),
        )
        if key != link.key:
            raise ScenarioError(f"links.{key}: key must be {link.key!r}")
        planned = route_lookup(plan, label_to_index(frm), label_to_index(to))
        if planned.src != label_to_index(frm):
            raise ScenarioError(
                f"links.{key}: plan routes this pair as "
                f"{labels[planned.src]}2R2{labels[planned.dst]}"
            )
        if abs(planned.wavelength.nominal_nm - link.wavelength_nm) > 1e-9:
            raise ScenarioError(
                f"links.{key}: plan assigns {planned.wavelength.nominal_nm} nm"
            )
        links[key] = link

    return Scenario(
        name=str(raw.get("name", "scenario")),
        n_wavelengths=n,
        node_labels=labels,
        wavelength_nm=nm,
        components=components,
        source=source,
        detector=detector,
        system=system,
        fibers=fibers,
        launch_delays_ns=delays,
        reference=reference,
        links=links,
    )


def serialize_scenario(s: Scenario) -> str:
    """Canonical document form; parse(serialize(s)) == s."""
    doc = {
        "name": s.name,
        "n_wavelengths": s.n_wavelengths,
        "node_labels": list(s.node_labels),
        "wavelength_nm": list(s.wavelength_nm),
        "components": {
            "cir_pass_loss_db": s.components.cir_pass_loss_db,
            "wdm_pass_loss_db": s.components.wdm_pass_loss_db,
            "cir_return_loss_db": s.components.cir_return_loss_db,
            "cir_directivity_db": s.components.cir_directivity_db,
            "connector_reflection_db": s.components.connector_reflection_db,
            "rayleigh_coeff_db": s.components.rayleigh_coeff_db,
            "group_index": s.components.group_index,
            "router_span_km": s.components.router_span_km,
        },
        "source": {
            "mu": s.source.mu,
            "nu": s.source.nu,
            "extinction_ratio_db": s.source.extinction_ratio_db,
            "state_ratio": list(s.source.state_ratio),
            "pulse_rate_hz": s.source.pulse_rate_hz,
            "pulse_width_ps": s.source.pulse_width_ps,
        },
        "detector": {
            "efficiency": s.detector.efficiency,
            "dark_per_gate": s.detector.dark_per_gate,
            "gate_ns": s.detector.gate_ns,
            "max_trigger_hz": s.detector.max_trigger_hz,
        },
        "system": {
            "f_ec": s.system.f_ec,
            "q_sift": s.system.q_sift,
            "e_detector": s.system.e_detector,
        },
        "fibers": {
            lbl: {
                "length_km": f.length_km,
                "atten_db_per_km": {str(w): a for w, a in f.atten_db_per_km.items()},
                "joints_km": list(f.joints_km),
            }
            for lbl, f in s.fibers.items()
        },
        "launch_delays_ns": dict(s.launch_delays_ns),
        "reference": {
            "p0_dbm": s.reference.p0_dbm,
            "measured_path_loss_db": s.reference.measured_path_loss_db,
            "effective_insertion_loss_db": s.reference.effective_insertion_loss_db,
            "y0_reference": s.reference.y0_reference,
            "yx_reference": s.reference.yx_reference,
        },
        "links": {
            key: {
                "from": l.from_label,
                "to": l.to_label,
                "wavelength_nm": l.wavelength_nm,
                "attenuation_db": l.attenuation_db,
                "crosstalk_db": l.crosstalk_db,
                "dead_time_us": l.dead_time_us,
                "sifted_kbit_s": l.sifted_kbit_s,
                "signal_qber_pct": l.signal_qber_pct,
                "secure_kbit_s": l.secure_kbit_s,
            }
            for key, l in s.links.items()
        },
    }
    return json.dumps(doc, indent=2) + "\n"


def builtin_scenario_text(name: str) -> str:
    """Raw text of a packaged scenario document."""
    ref = resources.files("wsqkd.data").joinpath(f"{name}.json")
    if not ref.is_file():
        raise ScenarioError(f"no built-in scenario named {name!r}")
    return ref.read_text(encoding="utf-8")


def wuhu_scenario() -> Scenario:
    """The built-in field-test dataset."""
    return parse_scenario(builtin_scenario_text("wuhu"))


def load_scenario(ref: str) -> Scenario:
    """Load a scenario by built-in name, file path, or '-' for stdin."""
    import os
    import sys

    if ref == "-":
        return parse_scenario(sys.stdin.read())
    if os.path.exists(ref):
        with open(ref, "r", encoding="utf-8") as fh:
            return parse_scenario(fh.read())
    try:
        return parse_scenario(builtin_scenario_text(ref))
    except ScenarioError:
        raise ScenarioError(
            f"scenario {ref!r} is neither a file nor a built-in name"
        ) from None
