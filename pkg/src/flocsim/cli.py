"""Command-line front end.

Subcommands operate on a scenario JSON file and write CSV/JSON/SVG
artifacts into the output directory (atomically: temp file + rename).

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis_multi, analysis_single
from .backend import simulate
from .errors import ConfigError, FlocsimError
from .models import FullModel, MultiSpeciesModel
from .numerics import IntegratorConfig
from .reduction import (
    ConvergenceTable,
    reduce,
    reduce_multi,
    tikhonov_convergence,
    tikhonov_convergence_multi,
)
from .scenario import SCHEMA_VERSION, Scenario
from .svgplot import SvgFigure

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _write_json(path: Path, obj):
    _write_atomic(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _csv_row(values):
    return ",".join("nan" if v is None else repr(float(v)) for v in values)


def _require_single(scn: Scenario) -> FullModel:
    if scn.is_multi:
        raise ConfigError("this subcommand requires a single-species scenario")
    return scn.model


def _require_multi(scn: Scenario) -> MultiSpeciesModel:
    if not scn.is_multi:
        raise ConfigError("this subcommand requires a multi-species scenario")
    return scn.model


def _config_from_args(args) -> IntegratorConfig:
    if args.tol is not None:
        return IntegratorConfig(rel_tol=args.tol, abs_tol=args.tol * 1e-2)
    return IntegratorConfig()


# ---------------------------------------------------------------------------
# subcommands


def _cmd_simulate(scn: Scenario, out: Path, args) -> list:
    cfg = _config_from_args(args)
    if args.reduced:
        if scn.is_multi:
            system = reduce_multi(scn.model).system()
            n = scn.model.n
            init = np.concatenate(([scn.initial[0]],
                                   scn.initial[1:1 + n] + scn.initial[1 + n:]))
        else:
            reduced = reduce(scn.model)
            system = reduced.system(scn.model.D, scn.model.S_in)
            init = np.array([scn.initial[0], scn.initial[1] + scn.initial[2]])
    else:
        system = scn.model.system()
        init = scn.initial
    traj = simulate(system, init, (0.0, scn.horizon), cfg)
    lines = ["t," + ",".join(system.columns)]
    for t, row in zip(traj.times, traj.states):
        lines.append(_csv_row([t, *row]))
    path = out / "trajectory.csv"
    _write_atomic(path, "\n".join(lines) + "\n")
    return [path]


def _sweep_epsilons(scn: Scenario, epsilons, cfg) -> ConvergenceTable:
    if scn.is_multi:
        n = scn.model.n
        init = (scn.initial[0], scn.initial[1:1 + n], scn.initial[1 + n:])
        run = lambda eps: tikhonov_convergence_multi(
            scn.model, init, scn.horizon, scn.t0, eps, cfg)
    else:
        run = lambda eps: tikhonov_convergence(
            scn.model, tuple(scn.initial), scn.horizon, scn.t0, eps, cfg)
    try:
        workers = int(os.environ.get("FLOCSIM_THREADS", "1"))
    except ValueError as exc:
        raise ConfigError(f"FLOCSIM_THREADS must be an integer: {exc}") from exc
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            tables = list(pool.map(lambda e: run([e]), epsilons))
        rows = [t.rows[0] for t in tables]
        return ConvergenceTable(rows)
    return run(list(epsilons))


def _cmd_reduce_compare(scn: Scenario, out: Path, args) -> list:
    cfg = _config_from_args(args)
    epsilons = args.epsilons if args.epsilons is not None else scn.epsilons
    table = _sweep_epsilons(scn, epsilons, cfg)
    path = out / "convergence.csv"
    _write_atomic(path, table.csv_text())
    return [path]


def _reduce_for_analysis(model: FullModel):
    reduced = reduce(model)
    if reduced.s_dependent:
        raise ConfigError(
            "equilibrium analysis needs an x-only removal rate; Freter and "
            "substrate-dependent kinetics are simulation-only here"
        )
    return reduced


def equilibria_report(scn: Scenario) -> dict:
    model = scn.model
    reduced = _reduce_for_analysis(model)
    eqs = analysis_single.find_equilibria(reduced, model.D, model.S_in)
    hyp = analysis_single.check_hypotheses(reduced, model.D, model.S_in)
    lam = analysis_single.break_even(reduced)
    return {
        "schema": SCHEMA_VERSION,
        "scenario": scn.name,
        "D": model.D,
        "S_in": model.S_in,
        "lambda0": lam.lambda0 if math.isfinite(lam.lambda0) else "inf",
        "lambda1": lam.lambda1 if math.isfinite(lam.lambda1) else "inf",
        "equilibria": [e.to_dict() for e in eqs],
        "positive_count": sum(1 for e in eqs if e.kind == analysis_single.POSITIVE),
        "hypotheses": hyp.to_dict(),
    }


def validate_equilibria_report(obj) -> None:
    """Raise ConfigError unless ``obj`` is a well-formed equilibria report."""
    required = {"schema", "scenario", "D", "S_in", "lambda0", "lambda1",
                "equilibria", "positive_count", "hypotheses"}
    if not isinstance(obj, dict) or set(obj) != required:
        raise ConfigError("equilibria report: wrong field set")
    if obj["schema"] != SCHEMA_VERSION:
        raise ConfigError("equilibria report: wrong schema version")
    for e in obj["equilibria"]:
        need = {"kind", "S", "x", "jacobian", "eigenvalues", "classification",
                "degenerate", "phi_gamma_slope"}
        if set(e) != need:
            raise ConfigError("equilibria report: malformed equilibrium entry")
        if e["kind"] not in ("washout", "positive"):
            raise ConfigError(f"equilibria report: bad kind {e['kind']!r}")
    for name, st in obj["hypotheses"].items():
        if name not in ("H0", "H1", "H2", "H3", "H4"):
            raise ConfigError(f"equilibria report: bad hypothesis key {name!r}")
        if st["status"] not in (analysis_single.VERIFIED_ANALYTIC,
                                analysis_single.VERIFIED_ON_GRID,
                                analysis_single.VIOLATED,
                                analysis_single.NOT_APPLICABLE):
            raise ConfigError("equilibria report: bad hypothesis status")


def _cmd_equilibria(scn: Scenario, out: Path, args) -> list:
    _require_single(scn)
    path = out / "equilibria.json"
    _write_json(path, equilibria_report(scn))
    return [path]


def _cmd_nullclines(scn: Scenario, out: Path, args) -> list:
    model = _require_single(scn)
    reduced = _reduce_for_analysis(model)
    D, S_in = model.D, model.S_in
    x_max = analysis_single.x_scan_limit(reduced, D, S_in)
    xs = np.linspace(0.0, x_max, args.grid)
    phis = [analysis_single.phi(reduced, float(x)) for x in xs]
    gammas = [analysis_single.gamma(reduced, D, S_in, float(x)) for x in xs]
    lines = ["x,phi,gamma"]
    for x, p, gm in zip(xs, phis, gammas):
        lines.append(_csv_row([x, p, gm]))
    csv_path = out / "nullclines.csv"
    _write_atomic(csv_path, "\n".join(lines) + "\n")

    eqs = analysis_single.find_equilibria(reduced, D, S_in)
    lam = analysis_single.break_even(reduced)
    s_hi = 1.1 * max([S_in] + [v for v in (lam.lambda0, lam.lambda1) if math.isfinite(v)])
    fig = SvgFigure(xlim=(0.0, s_hi), ylim=(0.0, x_max), xlabel="S", ylabel="x",
                    title=f"nullclines: {scn.name}")
    pts = [(p, x) for p, x in zip(phis, xs) if p is not None]
    fig.polyline([p for p, _ in pts], [x for _, x in pts],
                 color=PALETTE[0], label="S = phi(x)")
    pts = [(gm, x) for gm, x in zip(gammas, xs) if gm >= 0.0]
    fig.polyline([gm for gm, _ in pts], [x for _, x in pts],
                 color=PALETTE[1], label="S = gamma(x)")
    for e in eqs:
        fig.marker(e.S, e.x, kind="circle" if e.stable else "open-circle",
                   color="#000000")
    svg_path = out / "nullclines.svg"
    _write_atomic(svg_path, fig.to_svg())
    return [csv_path, svg_path]


def _cmd_phase(scn: Scenario, out: Path, args) -> list:
    model = _require_single(scn)
    cfg = _config_from_args(args)
    reduced = _reduce_for_analysis(model)
    D, S_in = model.D, model.S_in
    x_max = analysis_single.x_scan_limit(reduced, D, S_in)
    s_hi = S_in * 1.05
    eqs = analysis_single.find_equilibria(reduced, D, S_in)
    system = reduced.system(D, S_in)

    fig = SvgFigure(xlim=(0.0, s_hi), ylim=(0.0, x_max * 0.75), xlabel="S",
                    ylabel="x", title=f"phase portrait: {scn.name}")

    # vector field (direction only), on a fixed coarse grid
    for S in np.linspace(0.02 * s_hi, 0.98 * s_hi, 16):
        for x in np.linspace(0.02 * x_max * 0.75, 0.73 * x_max, 12):
            dS, dx = reduced.rhs_values(D, S_in, float(S), float(x))
            norm = math.hypot(dS / s_hi, dx / x_max)
            if norm < 1e-12:
                continue
            scale = 0.012 / norm
            fig.segment(S, x, S + dS * scale, x + dx * scale, color="#bbbbbb")
            fig.marker(S + dS * scale, x + dx * scale, color="#bbbbbb", size=1.2)

    # a fan of forward trajectories
    starts = [(0.05 * S_in, 0.05 * x_max), (S_in, 0.5 * x_max),
              (0.9 * S_in, 0.02 * x_max), (0.1 * S_in, 0.45 * x_max),
              (float(scn.initial[0]), float(scn.initial[1] + scn.initial[2]))]
    for S0, x0 in starts:
        traj = simulate(system, np.array([S0, x0]), (0.0, scn.horizon), cfg)
        fig.polyline(traj.states[:, 0], traj.states[:, 1],
                     color=PALETTE[2], width=1.0)

    sep_paths = []
    # only interior saddles separate basins; a saddle washout's stable
    # manifold is the invariant x = 0 axis
    saddles = [e for e in eqs if e.classification == analysis_single.SADDLE
               and e.kind == analysis_single.POSITIVE]
    lines = ["branch,S,x"]
    for e in saddles:
        b1, b2 = analysis_single.separatrix(reduced, D, S_in, e, config=cfg)
        for tag, br in ((1, b1), (2, b2)):
            for row in br:
                lines.append(f"{tag}," + _csv_row(row))
            fig.polyline(br[:, 0], br[:, 1], color=PALETTE[1], width=2.0,
                         label="separatrix" if tag == 1 else None)
    sep_csv = out / "separatrix.csv"
    _write_atomic(sep_csv, "\n".join(lines) + "\n")
    sep_paths.append(sep_csv)

    for e in eqs:
        fig.marker(e.S, e.x, kind="circle" if e.stable else "open-circle",
                   color="#000000")
    svg_path = out / "phase.svg"
    _write_atomic(svg_path, fig.to_svg())
    return sep_paths + [svg_path]


def _cmd_multispecies(scn: Scenario, out: Path, args) -> list:
    model = _require_multi(scn)
    reduced = reduce_multi(model)
    if not reduced.diagonal:
        raise ConfigError(
            "multispecies equilibrium analysis requires a diagonal attachment matrix"
        )
    mm = analysis_multi.MultiReducedModel.from_reduction(reduced)
    eq = analysis_multi.solve_positive_equilibrium(mm)

    l1 = mm.lambda1_tilde
    S_hi = min(l1 * (1.0 - 1e-6), max(model.S_in * 1.05, mm.lambda0_tilde * 1.2))
    Ss = np.linspace(0.0, S_hi, args.grid)
    n = model.n
    lines = ["S," + ",".join(f"h_{i + 1}" for i in range(n)) + ",H"]
    curves = np.empty((len(Ss), n))
    for j, S in enumerate(Ss):
        hs = [analysis_multi.h_i(mm, i, float(S)) for i in range(n)]
        curves[j] = hs
        H = sum(hs) - model.D * (model.S_in - float(S))
        lines.append(_csv_row([S, *hs, H]))
    csv_path = out / "multispecies.csv"
    _write_atomic(csv_path, "\n".join(lines) + "\n")

    supply = model.D * (model.S_in - Ss)
    total = curves.sum(axis=1)
    y_hi = 1.15 * max(float(np.max(total)), float(np.max(supply)), 1e-12)
    fig = SvgFigure(xlim=(0.0, S_hi), ylim=(0.0, y_hi), xlabel="S",
                    ylabel="consumption / supply",
                    title=f"multi-species balance: {scn.name}")
    for i in range(n):
        fig.polyline(Ss, curves[:, i], color=PALETTE[(i + 2) % len(PALETTE)],
                     width=1.2, label=f"h_{i + 1}")
    fig.polyline(Ss, total, color=PALETTE[0], width=2.0, label="sum h_i")
    fig.polyline(Ss, np.maximum(supply, 0.0), color=PALETTE[1], width=1.5,
                 dash="6,3", label="D (S_in - S)")
    if eq is not None:
        fig.marker(eq.S_star, model.D * (model.S_in - eq.S_star), color="#000000")
    svg_path = out / "multispecies.svg"
    _write_atomic(svg_path, fig.to_svg())

    report = {
        "schema": SCHEMA_VERSION,
        "scenario": scn.name,
        "lambda0_tilde": mm.lambda0_tilde,
        "lambda1_tilde": mm.lambda1_tilde,
        "exists": eq is not None,
        "equilibrium": None if eq is None else eq.to_dict(),
    }
    json_path = out / "multispecies.json"
    _write_json(json_path, report)
    return [csv_path, svg_path, json_path]


_COMMANDS = {
    "simulate": _cmd_simulate,
    "reduce-compare": _cmd_reduce_compare,
    "equilibria": _cmd_equilibria,
    "nullclines": _cmd_nullclines,
    "phase": _cmd_phase,
    "multispecies": _cmd_multispecies,
}


def _parse_epsilons(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad epsilon list {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty epsilon list")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flocsim",
        description="Chemostat-with-flocculation simulation and analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "integrate the full (or reduced) model; write trajectory CSV"),
        ("reduce-compare", "epsilon sweep of full vs reduced dynamics; write CSV"),
        ("equilibria", "enumerate and classify equilibria; write JSON report"),
        ("nullclines", "phi/gamma nullclines; write CSV and SVG"),
        ("phase", "phase portrait with separatrix; write SVG and CSV"),
        ("multispecies", "h_i/H balance curves and positive equilibrium"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--scenario", required=True, help="scenario JSON file")
        p.add_argument("--out", default=None,
                       help="output directory (default: scenario output_dir or ./out)")
        p.add_argument("--epsilons", type=_parse_epsilons, default=None,
                       help="comma-separated epsilon list (reduce-compare)")
        p.add_argument("--grid", type=int, default=400,
                       help="sampling points for curve outputs")
        p.add_argument("--tol", type=float, default=None,
                       help="integrator relative tolerance override")
        p.add_argument("--seed", type=int, default=None,
                       help="seed for randomized property sweeps (reserved)")
        if name == "simulate":
            p.add_argument("--reduced", action="store_true",
                           help="simulate the reduced model instead of the full one")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scn = Scenario.from_file(args.scenario)
        out = Path(args.out or scn.output_dir or "out")
        if args.grid < 2:
            raise ConfigError("--grid must be at least 2")
        paths = _COMMANDS[args.command](scn, out, args)
    except ConfigError as exc:
        print(f"flocsim: configuration error: {exc}", file=sys.stderr)
        return 2
    except FlocsimError as exc:
        print(f"flocsim: numeric failure: {exc}", file=sys.stderr)
        return 3
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
