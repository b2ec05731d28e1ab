"""Command-line interface.

Every command emits a human-readable table and a machine-readable JSON
document. The JSON goes to stdout (or to ``--out FILE``); the table goes to
stderr (or stdout once ``--out`` frees it). Exit codes: 0 success, 1 usage or
configuration error, 2 reproduction failure.

The only environment variable honored is ``WSQKD_SEED`` (default Monte Carlo
seed when ``--seed`` is not given).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from . import reproduce as reproduce_mod
from . import xtalk as xtalk_mod
from .netgraph import (
    build_plan,
    label_to_index,
    node_label,
    plan_to_dot,
    plan_to_records,
    route_lookup,
)
from .optics import enumerate_crosstalk_paths, link_budget
from .pulsesim import SimConfig, simulate_link, trace_to_text
from .qkdrate import link_performance, secure_rate_from_observed
from .scenario import Scenario, ScenarioError, load_scenario

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_REPRODUCTION = 2


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    env = os.environ.get("WSQKD_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ScenarioError(f"WSQKD_SEED must be an integer, got {env!r}") from exc
    return reproduce_mod.DEFAULT_SEED


def _emit(document: dict, table: str, out_path: str | None) -> None:
    payload = json.dumps(document, indent=2) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(payload)
        sys.stdout.write(table)
    else:
        sys.stderr.write(table)
        sys.stdout.write(payload)


def _envelope(command: str, parameters: dict, result: dict) -> dict:
    return {
        "tool": "wsqkd",
        "version": __version__,
        "command": command,
        "parameters": parameters,
        "result": result,
    }


def _plan_json(plan) -> dict:
    return {
        "n_wavelengths": plan.n_wavelengths,
        "node_count": plan.node_count,
        "nodes": list(plan.node_labels()),
        "wavelengths": [
            {"index": w.index, "nominal_nm": w.nominal_nm} for w in plan.wavelengths
        ],
        "cycles": [
            [node_label(i) for i in cycle] for cycle in plan.cycles
        ],
        "links": [
            {
                "src": node_label(l.src),
                "dst": node_label(l.dst),
                "wavelength_index": l.wavelength.index,
                "nominal_nm": l.wavelength.nominal_nm,
            }
            for l in plan.links
        ],
    }


def _cmd_plan(args) -> int:
    plan = build_plan(args.n)
    table = plan_to_dot(plan) if args.dot else plan_to_records(plan)
    _emit(_envelope("plan", {"n_wavelengths": args.n}, _plan_json(plan)), table, args.out)
    return EXIT_OK


def _scenario_link(args) -> tuple[Scenario, str]:
    scenario = load_scenario(args.scenario)
    link = scenario.link(args.link)
    return scenario, link.key


def _cmd_budget(args) -> int:
    scenario, key = _scenario_link(args)
    link = scenario.links[key]
    plan = scenario.plan()
    planned = route_lookup(
        plan, label_to_index(link.from_label), label_to_index(link.to_label)
    )
    fibers = [
        f
        for lbl in (link.from_label, link.to_label)
        if (f := scenario.fibers.get(lbl)) is not None
    ]
    budget = link_budget(
        planned,
        fibers,
        scenario.reference.effective_insertion_loss_db,
        measured_override_db=link.attenuation_db,
    )
    result = {
        "link": key,
        "fiber_db": budget.fiber_db,
        "effective_insertion_loss_db": budget.effective_insertion_loss_db,
        "total_db": budget.total_db,
        "source": budget.source,
    }
    table = (
        f"link budget {key}\n"
        f"  fiber spans              {budget.fiber_db:7.2f} dB\n"
        f"  effective insertion loss {budget.effective_insertion_loss_db:7.2f} dB\n"
        f"  total ({budget.source})         {budget.total_db:7.2f} dB\n"
    )
    _emit(
        _envelope("budget", {"scenario": scenario.name, "link": key}, result),
        table,
        args.out,
    )
    return EXIT_OK


def _cmd_xtalk(args) -> int:
    scenario, key = _scenario_link(args)
    link = scenario.links[key]
    plan = scenario.plan()
    victim = route_lookup(
        plan, label_to_index(link.from_label), label_to_index(link.to_label)
    )
    contributions = enumerate_crosstalk_paths(
        plan, victim, scenario.components, scenario.fiber_map(), scenario.timing()
    )
    src = scenario.source
    det = scenario.detector_for(key)
    sys_params = scenario.system_for(key)
    from .qkdrate import observables_for

    obs = observables_for(link.attenuation_db, src, det, sys_params)
    period = 1e9 / src.pulse_rate_hz
    if args.calibrate:
        contributions, _shift = xtalk_mod.calibrate_contributions(
            contributions,
            scenario.reference.yx_reference,
            src.mu,
            det.efficiency,
            det.gate_ns,
            period,
        )
    summary = xtalk_mod.aggregate_chi(
        contributions,
        gate_ns=det.gate_ns,
        pulse_period_ns=period,
        victim_signal_gain=obs.q_mu,
        source_mean_photon=src.mu,
        det_efficiency=det.efficiency,
        include_interband=args.include_interband,
    )
    chi = summary.chi_best if args.best else summary.chi_worst
    case = "best" if args.best else "worst"
    delta_sig = xtalk_mod.delta_qber(chi, link.signal_qber_pct / 100.0)
    delay = xtalk_mod.recommend_delay(contributions, det.gate_ns, period)
    floor = xtalk_mod.leakage_floor_check(
        link.crosstalk_db, link.attenuation_db, src.extinction_ratio_db
    )
    result = {
        "link": key,
        "case": case,
        "chi_worst": summary.chi_worst,
        "chi_best": summary.chi_best,
        "crosstalk_gain_worst": summary.crosstalk_gain_worst,
        "crosstalk_gain_best": summary.crosstalk_gain_best,
        "delta_qber_signal": delta_sig,
        "recommended_delay_ns": delay,
        "floor_db": floor.floor_db,
        "floor_margin_db": floor.margin_db,
        "above_floor": floor.above_floor,
        "contributions": [
            {
                "kind": a.contribution.kind,
                "band": a.contribution.band,
                "source": a.contribution.source_link.key,
                "mechanism": a.contribution.mechanism,
                "power_ratio_db": a.contribution.power_ratio_db,
                "arrival_offset_ns": a.contribution.arrival_offset_ns,
                "per_gate_gain": a.per_gate_gain,
                "in_gate": a.in_gate,
                "counted": a.counted,
            }
            for a in summary.contributions
        ],
    }
    delay_txt = "infeasible" if delay is None else f"{delay:.3f} ns"
    table = (
        f"crosstalk {key} ({case} case, "
        f"{'all bands' if args.include_interband else 'intraband only'})\n"
        f"  chi worst/best      {summary.chi_worst:.4g} / {summary.chi_best:.4g}\n"
        f"  gain worst/best     {summary.crosstalk_gain_worst:.4g} / "
        f"{summary.crosstalk_gain_best:.4g}\n"
        f"  delta QBER (signal) {100 * delta_sig:.4f}%\n"
        f"  recommended delay   {delay_txt}\n"
        f"  leakage floor       {floor.floor_db:.2f} dB "
        f"(margin {floor.margin_db:+.2f} dB)\n"
    )
    _emit(
        _envelope(
            "xtalk",
            {
                "scenario": scenario.name,
                "link": key,
                "case": case,
                "include_interband": args.include_interband,
                "calibrate": args.calibrate,
            },
            result,
        ),
        table,
        args.out,
    )
    return EXIT_OK


def _cmd_keyrate(args) -> int:
    scenario, key = _scenario_link(args)
    link = scenario.links[key]
    src = scenario.source
    det = scenario.detector_for(key)
    sys_params = scenario.system_for(key)
    report = link_performance(link.attenuation_db, src, det, sys_params)
    from_observed = secure_rate_from_observed(
        link.sifted_kbit_s * 1000.0,
        link.signal_qber_pct / 100.0,
        link.attenuation_db,
        src,
        det,
        sys_params,
    )
    result = report.to_dict()
    result["link"] = key
    result["secure_bps_from_observed"] = from_observed
    rows = [
        ("Wavelength (nm)", f"{link.wavelength_nm:.0f}"),
        ("Attenuation (dB)", f"{link.attenuation_db:.2f}"),
        ("Dead-time (us)", f"{link.dead_time_us:.0f}"),
        ("Sifted-key (kbit/s)", f"{report.sifted_bps / 1000.0:.2f}"),
        ("Signal QBER (%)", f"{100 * report.observables.e_mu:.2f}"),
        ("Secure-key (kbit/s)", f"{report.secure_bps / 1000.0:.2f}"),
        ("Secure-key from observed (kbit/s)", f"{from_observed / 1000.0:.2f}"),
    ]
    width = max(len(r[0]) for r in rows)
    table = f"key rate {key}\n" + "".join(
        f"  {label:<{width}}  {value:>10}\n" for label, value in rows
    )
    _emit(
        _envelope("keyrate", {"scenario": scenario.name, "link": key}, result),
        table,
        args.out,
    )
    return EXIT_OK


def _cmd_simulate(args) -> int:
    scenario, key = _scenario_link(args)
    link = scenario.links[key]
    src = scenario.source
    det = scenario.detector_for(key)
    sys_params = scenario.system_for(key)
    seed = args.seed if args.seed is not None else _default_seed()
    cfg = SimConfig(
        n_pulses=args.pulses,
        seed=seed,
        attenuation_db=link.attenuation_db,
        source=src,
        detector=det,
        system=sys_params,
        record_timestamps=args.trace is not None,
    )
    sim = simulate_link(cfg, workers=args.workers, backend=args.backend)
    analytic = link_performance(link.attenuation_db, src, det, sys_params)
    result = {
        "link": key,
        "n_pulses": sim.n_pulses,
        "seed": seed,
        "backend": args.backend,
        "per_intensity": [
            {
                "label": s.label,
                "intensity": s.intensity,
                "pulses": s.pulses,
                "clicks": s.clicks,
                "errors": s.errors,
                "gain": s.gain,
                "gain_stderr": s.gain_stderr,
                "qber": s.qber,
                "qber_stderr": s.qber_stderr,
            }
            for s in sim.per_intensity
        ],
        "sifted_count": sim.sifted_count,
        "detection_rate_before_hz": sim.detection_rate_before_hz,
        "detection_rate_after_hz": sim.detection_rate_after_hz,
        "analytic_q_mu": analytic.observables.q_mu,
        "analytic_e_mu": analytic.observables.e_mu,
    }
    if args.trace is not None:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write(trace_to_text(sim.trace))
    table_lines = [
        f"simulation {key}: {sim.n_pulses} pulses, seed {seed}",
        f"{'class':8} {'pulses':>10} {'clicks':>9} {'gain':>12} {'qber':>9}",
    ]
    for s in sim.per_intensity:
        table_lines.append(
            f"{s.label:8} {s.pulses:>10} {s.clicks:>9} {s.gain:>12.6g} {s.qber:>9.4f}"
        )
    table_lines.append(
        f"rates: {sim.detection_rate_before_hz:.0f} Hz raw, "
        f"{sim.detection_rate_after_hz:.0f} Hz after dead time, "
        f"sifted {sim.sifted_count}"
    )
    _emit(
        _envelope(
            "simulate",
            {
                "scenario": scenario.name,
                "link": key,
                "pulses": args.pulses,
                "seed": seed,
                "workers": args.workers,
            },
            result,
        ),
        "\n".join(table_lines) + "\n",
        args.out,
    )
    return EXIT_OK


def _cmd_reproduce(args) -> int:
    scenario = load_scenario(args.scenario)
    seed = args.seed if args.seed is not None else _default_seed()
    report = reproduce_mod.reproduce(
        scenario,
        tolerance=args.tolerance,
        sim_pulses=args.pulses,
        seed=seed,
        workers=args.workers,
    )
    _emit(
        _envelope(
            "reproduce",
            {
                "scenario": scenario.name,
                "tolerance": args.tolerance,
                "pulses": args.pulses,
                "seed": seed,
            },
            report.to_dict(),
        ),
        report.format_table(),
        args.out,
    )
    return EXIT_OK if report.passed else EXIT_REPRODUCTION


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="wsqkd",
        description="Wavelength-saving QKD network planning and simulation.",
    )
    parser.add_argument("--version", action="version", version=f"wsqkd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="build the routing plan for N wavelengths")
    p.add_argument("n", type=int, metavar="N")
    p.add_argument("--dot", action="store_true", help="emit a DOT graph table")
    p.add_argument("--out", metavar="FILE", help="write the JSON document here")
    p.set_defaults(func=_cmd_plan)

    for name, fn, extra in (
        ("budget", _cmd_budget, ()),
        ("xtalk", _cmd_xtalk, ("case", "interband", "calibrate")),
        ("keyrate", _cmd_keyrate, ()),
    ):
        p = sub.add_parser(name, help=f"{name} analysis for one link")
        p.add_argument("scenario", help="built-in name, file path, or '-' for stdin")
        p.add_argument("link", help="link key such as A2R2B")
        if "case" in extra:
            group = p.add_mutually_exclusive_group()
            group.add_argument("--worst", action="store_true", default=True)
            group.add_argument("--best", action="store_true", default=False)
        if "interband" in extra:
            p.add_argument("--include-interband", action="store_true")
        if "calibrate" in extra:
            p.add_argument(
                "--calibrate",
                action="store_true",
                help="scale leakage paths to the scenario's reference crosstalk gain",
            )
        p.add_argument("--out", metavar="FILE")
        p.set_defaults(func=fn)

    p = sub.add_parser("simulate", help="Monte Carlo check of one link")
    p.add_argument("scenario")
    p.add_argument("link")
    p.add_argument("--pulses", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--backend", choices=("auto", "compiled", "python"), default="auto")
    p.add_argument("--trace", metavar="FILE", help="write a detection trace here")
    p.add_argument("--out", metavar="FILE")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("reproduce", help="compare the model against the dataset")
    p.add_argument("scenario")
    p.add_argument("--tolerance", choices=reproduce_mod.TOLERANCES, default="factor2")
    p.add_argument("--pulses", type=int, default=reproduce_mod.DEFAULT_SIM_PULSES)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", metavar="FILE")
    p.set_defaults(func=_cmd_reproduce)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ValueError, OSError) as exc:
        sys.stderr.write(f"wsqkd: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
