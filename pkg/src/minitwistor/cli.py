"""Command line: ``minitwistor <subcommand> ...``.

Every JSON output is written with fixed float precision and sorted keys, so a
rerun with the same inputs and seed reproduces it byte for byte.  Wall-clock
timing only appears in the one-line summary on stdout.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, binary_forms, io
from .binary_forms import ProjPoint
from .nodal_curve import ParamCurve, incidence_values, is_ordinary_pair, node_pairs_of
from .surface_config import PointConfig, random_config, validate

DEFAULT_TOL = 1e-8


class ValidationFailure(RuntimeError):
    """A validator rejected an output; the command exits with status 1."""

    def __init__(self, message: str, payload: dict | None = None):
        super().__init__(message)
        self.payload = payload or {}


def default_tol() -> float:
    """Tolerance for validators; ``MTL_TOL`` in the environment overrides it."""
    raw = os.environ.get("MTL_TOL")
    if raw is None:
        return DEFAULT_TOL
    try:
        tol = float(raw)
    except ValueError:
        raise SystemExit(f"MTL_TOL must be a number, got {raw!r}")
    if not tol > 0:
        raise SystemExit("MTL_TOL must be positive")
    return tol


# ------------------------------------------------------------------ argument parsing

def _complex(text: str) -> complex:
    t = text.strip().replace("i", "j").replace(" ", "")
    return complex(t)


def parse_coord(text: str) -> ProjPoint:
    t = text.strip().lower()
    if t in ("inf", "infinity", "oo"):
        return ProjPoint.infinity()
    return ProjPoint.affine(_complex(t))


def parse_point(text: str):
    """``u,v`` in the affine charts; either entry may be ``inf``."""
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected u,v but got {text!r}")
    try:
        return parse_coord(parts[0]), parse_coord(parts[1])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def parse_param(text: str) -> ProjPoint:
    try:
        return parse_coord(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _load_config(path) -> PointConfig:
    return PointConfig.from_json(io.load(path))


def _load_curve(path) -> ParamCurve:
    d = io.load(path)
    return ParamCurve.from_json(d.get("curve", d))


def _write(path, obj) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    io.dump(obj, path)


def member_residual(config: PointConfig, curve: ParamCurve) -> float:
    """Largest relative incidence residual of the configuration points on the member."""
    if len(curve.base_preimages) != config.n:
        raise ValidationFailure("curve does not carry one base preimage per configuration point")
    scale = max(np.abs(curve.coeff_vector()).max(), 1e-300)
    return float(max(np.abs(incidence_values(curve, z, p)).max()
                     for z, p in zip(curve.base_preimages, config.points)) / scale)


def curve_record(curve: ParamCurve) -> dict:
    pairs = curve.node_pairs or node_pairs_of(curve)
    ordinary = sum(is_ordinary_pair(curve, s, t) for s, t in pairs)
    return {"curve": curve.to_json(), "nodes": [[io.point_to_json(q) for q in curve.image(s)] for s, _ in pairs],
            "ordinary_nodes": int(ordinary)}


# ------------------------------------------------------------------ subcommands

def cmd_config(args, tol):
    config = random_config(args.m, args.k, args.seed)
    validate(config, tol)
    _write(args.out, config.to_json())
    return f"config m={args.m} k={args.k} seed={args.seed} -> {args.out}", [args.out]


def cmd_lattice(args, tol):
    from .picard_lattice import DivisorClass, lattice_report
    C = DivisorClass.parse(args.cls)
    rep = lattice_report(C)
    text = io.dumps(rep)
    if args.out:
        _write(args.out, rep)
    else:
        sys.stdout.write(text)
    return (f"lattice {args.cls}: C^2={rep['self_intersection']} nodes={rep['nodes']} "
            f"severi_dim={rep['severi_dim']} minimal={rep['minimal']}", [args.out] if args.out else [])


def cmd_solve(args, tol):
    from .geodesic_trace import member_of
    config = _load_config(args.config)
    validate(config, tol)
    curve = member_of(config)
    curve.node_pairs = node_pairs_of(curve)
    res = member_residual(config, curve)
    rec = curve_record(curve)
    rec["incidence_residual"] = res
    if res > tol or rec["ordinary_nodes"] != config.m - 1:
        raise ValidationFailure("solved member fails validation", rec)
    _write(args.out, rec)
    return f"solve: member with {rec['ordinary_nodes']} nodes, residual {res:.1e} -> {args.out}", [args.out]


def cmd_metric(args, tol):
    from .binary_forms import disc_quadratic
    from .conformal import metric_at, null_plane, null_plane_to_point
    curve = _load_curve(args.curve)
    curve.node_pairs = curve.node_pairs or node_pairs_of(curve)
    met = metric_at(curve)
    G = met.gram
    thetas = [t.abc for t in met.basis]
    discs = np.array([disc_quadratic(t.theta) for t in met.basis])
    polar = float(np.abs(np.diag(G) - discs).max() / np.abs(G).max())
    rng = np.random.default_rng(args.seed)
    errs = []
    for _ in range(args.samples):
        z = ProjPoint(1.0, complex(*rng.normal(size=2)))
        plane = null_plane(curve, z, met)
        errs.append(null_plane_to_point(curve, plane).witness_root.distance(z))
    out = {"gram": [[io.cpx(x) for x in row] for row in G], "rank": met.rank,
           "basis_abc": [[io.cpx(x) for x in t] for t in thetas],
           "basis_disc": [io.cpx(x) for x in discs],
           "scale_convention": met.scale_convention,
           "null_cone": {"polarization_residual": polar, "plane_point_roundtrip": float(max(errs)),
                         "samples": args.samples}}
    if met.rank != 3 or max(errs) > 1e-8:
        raise ValidationFailure("metric diagnostics failed", out)
    _write(args.out, out)
    return f"metric: rank {met.rank}, null-plane round trip {max(errs):.1e} -> {args.out}", [args.out]


def _trace_job(mode, curve, p, q, steps, h, grid, reverse):
    from . import geodesic_trace as gt
    if mode == "geodesic":
        return gt.trace_geodesic(curve, p, q, steps=steps, h=h, reverse=reverse)
    if mode == "nodal":
        return gt.trace_nodal_locus(curve, p, steps=steps, h=h, reverse=reverse)
    if mode == "nullgeo":
        return gt.trace_null_geodesic(curve, p, steps=steps, h=h, reverse=reverse)
    return gt.trace_null_surface(curve, p, grid=grid, h=h)


def _merge(back, fwd):
    """One trace from a backward and a forward half (the shared start state appears once)."""
    from .geodesic_trace import TraceResult
    n = len(back.states)
    arcs = [-a for a in back.arc_params[::-1]] + fwd.arc_params[1:]
    diag = {"forward": fwd.diagnostics, "backward": back.diagnostics,
            "max_residual": max(fwd.diagnostics.get("max_residual") or 0.0,
                                back.diagnostics.get("max_residual") or 0.0),
            "start_index": n - 1}
    return TraceResult(fwd.mode, back.states[::-1] + fwd.states[1:], arcs, diag, fwd.constraints,
                       back.tracked[::-1] + fwd.tracked[1:])


def cmd_trace(args, tol):
    from .geodesic_trace import render_displacement_svg
    config = _load_config(args.config) if args.config else None
    curve = _load_curve(args.curve)
    curve.node_pairs = curve.node_pairs or node_pairs_of(curve)
    if config is not None and member_residual(config, curve) > tol:
        raise ValidationFailure("curve does not pass through the configuration")
    if args.p is not None:
        p = args.p
    elif args.mode == "nodal":
        p = curve.image(curve.node_pairs[0][0])
    else:
        p = curve.image(args.zp)
    q = args.q if args.q is not None else curve.image(args.zq)
    jobs = [(args.mode, curve, p, q, args.steps, args.h, args.grid, False)]
    if args.both and args.mode != "nullsurf":
        jobs.append((args.mode, curve, p, q, args.steps, args.h, args.grid, True))
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_trace_job, *zip(*jobs)))
    else:
        results = [_trace_job(*j) for j in jobs]
    trace = results[0] if len(results) == 1 else _merge(results[1], results[0])
    rec = trace.to_json()
    _write(args.out, rec)
    outs = [args.out]
    if args.svg and args.mode != "nullsurf":
        Path(args.svg).write_text(render_displacement_svg(trace))
        outs.append(args.svg)
    return f"trace {args.mode}: {len(trace.states)} states -> {args.out}", outs


def _ew_level(base, chart, radius, n_samples, n_arcs, degree, seed):
    from .weyl_fit import run_pipeline
    _, rep = run_pipeline(base, radius, n_samples, n_arcs, degree, seed, chart)
    return rep.to_json()


CSV_FIELDS = ["level", "radius", "n_samples", "residual_tracefree", "geodesic_fit_residual",
              "compat_residual", "metric_fit_residual", "lambda_re", "lambda_im"]


def _fmt(x) -> str:
    return f"{float(x):.6e}"


def cmd_ew_check(args, tol):
    from .weyl_fit import build_chart
    config = _load_config(args.config) if args.config else None
    curve = _load_curve(args.curve)
    if config is not None and member_residual(config, curve) > tol:
        raise ValidationFailure("curve does not pass through the configuration")
    chart = build_chart(curve)
    levels = [(curve, chart, args.radius / 2 ** k, args.samples * 2 ** k, args.arcs, args.degree, args.seed + k)
              for k in range(args.levels)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            reps = list(ex.map(_ew_level, *zip(*levels)))
    else:
        reps = [_ew_level(*lv) for lv in levels]
    res = [r["residual_tracefree"] for r in reps]
    monotone = all(b < a for a, b in zip(res, res[1:]))
    out = {"levels": [dict(r, level=k, radius=lv[2], n_samples=lv[3]) for k, (r, lv) in enumerate(zip(reps, levels))],
           "monotone": monotone, "degree": args.degree, "n_arcs": args.arcs, "seed": args.seed}
    _write(args.out, out)
    csv_path = args.csv or str(Path(args.out).with_suffix(".csv"))
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for k, (r, lv) in enumerate(zip(reps, levels)):
            lam = r["lambda_at_center"]
            w.writerow([k, _fmt(lv[2]), lv[3], _fmt(r["residual_tracefree"]), _fmt(r["geodesic_fit_residual"]),
                        _fmt(r["compat_residual"]), _fmt(r["metric_fit_residual"]),
                        _fmt(lam.real), _fmt(lam.imag)])
    if not monotone:
        raise ValidationFailure("tracefree residual does not decrease under refinement", out)
    return (f"ew-check: tracefree residuals {', '.join(f'{x:.2e}' for x in res)} -> {args.out}, {csv_path}",
            [args.out, csv_path])


def cmd_real(args, tol):
    from .real_slice import (construct_real_member, real_ew_fit, real_geodesic, real_metric_at,
                             reality_check, structure_data)
    config, curve = construct_real_member(args.m, args.seed)
    rep = reality_check(curve)
    data = structure_data(curve)
    eig = np.linalg.eigvalsh(real_metric_at(curve, data))
    rng = np.random.default_rng(args.seed)
    z = ProjPoint(1.0, complex(*rng.normal(size=2) * 0.5))
    traces = {"generic": real_geodesic(curve, curve.image(z), steps=args.steps),
              "nodal": real_geodesic(curve, curve.image(curve.node_pairs[0][0]), steps=args.steps)}
    rows = []
    for name, tr in traces.items():
        for i, st in enumerate(tr.states):
            if i % max(1, len(tr.states) // args.states) == 0:
                ev = np.linalg.eigvalsh(real_metric_at(st))
                rows.append([name, i, tr.arc_params[i], *ev])
    out = {"config": config.to_json(), "curve": curve.to_json(), "structure": data.to_json(),
           "reality": rep.to_json(), "eigenvalues": eig.tolist(),
           "traces": {k: {"mode": v.mode, "n_states": len(v.states), "diagnostics": v.diagnostics}
                      for k, v in traces.items()},
           "state_eigenvalues": [{"trace": r[0], "index": r[1], "arc": r[2], "eigenvalues": r[3:]} for r in rows]}
    if args.ew:
        out["ew"] = real_ew_fit(curve, radius=args.radius, seed=args.seed).to_json()
    ok = (rep.passed and eig.min() > 0 and all(r[3] > 0 for r in rows)
          and all(t.diagnostics["all_real"] for t in traces.values()))
    if args.ew:
        ok = ok and out["ew"]["gamma_imag"] < 1e-6 and out["ew"]["form_imag"] < 1e-6
    _write(args.out, out)
    outs = [args.out]
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trace", "index", "arc", "ev1", "ev2", "ev3"])
            for r in rows:
                w.writerow([r[0], r[1], _fmt(r[2])] + [_fmt(x) for x in r[3:]])
        outs.append(args.csv)
    if not ok:
        raise ValidationFailure("real slice validation failed", {"reality": rep.to_json()})
    return (f"real m={args.m}: conditions {rep.conditions}, eigenvalues {', '.join(f'{e:.3g}' for e in eig)}"
            f" -> {args.out}", outs)


def cmd_render(args, tol):
    from .geodesic_trace import TraceResult, render_displacement_svg
    trace = TraceResult.from_json(io.load(args.trace))
    Path(args.out).write_text(render_displacement_svg(trace, n_curves=args.curves))
    return f"render: {len(trace.states)} states -> {args.out}", [args.out]


COMMANDS = {"config": cmd_config, "lattice": cmd_lattice, "solve": cmd_solve, "metric": cmd_metric,
            "trace": cmd_trace, "ew-check": cmd_ew_check, "real": cmd_real, "render": cmd_render}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="minitwistor", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"minitwistor {__version__}")
    ap.add_argument("--manifest", help="write a run manifest JSON here")
    ap.add_argument("--extended-precision", action="store_true",
                    help="refine polynomial roots with mpmath")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("config", help="random valid point configuration")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("lattice", help="lattice report of a divisor class")
    p.add_argument("--class", dest="cls", required=True, help="k,l:m1,...,mn")
    p.add_argument("--out")

    p = sub.add_parser("solve", help="a member of W through the configuration")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("metric", help="gram matrix and null-cone diagnostics at a member")
    p.add_argument("--curve", required=True)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("trace", help="continuation of a geodesic, null geodesic, nodal locus or null surface")
    p.add_argument("--config")
    p.add_argument("--curve", required=True)
    p.add_argument("--mode", choices=["geodesic", "nullsurf", "nodal", "nullgeo"], default="geodesic")
    p.add_argument("--p", type=parse_point, help="u,v on the curve")
    p.add_argument("--q", type=parse_point, help="u,v on the curve (geodesic mode)")
    p.add_argument("--zp", type=parse_param, default=ProjPoint(1.0, 0.3 + 0.2j),
                   help="parameter of p when --p is absent")
    p.add_argument("--zq", type=parse_param, default=ProjPoint(1.0, -0.7 + 0.5j),
                   help="parameter of q when --q is absent")
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--h", type=float, default=0.02)
    p.add_argument("--grid", type=int, default=5)
    p.add_argument("--both", action="store_true", help="trace in both directions from the start")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--svg")

    p = sub.add_parser("ew-check", help="Einstein-Weyl residuals over refinement levels")
    p.add_argument("--config")
    p.add_argument("--curve", required=True)
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--radius", type=float, default=0.05)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--arcs", type=int, default=30)
    p.add_argument("--degree", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--csv")

    p = sub.add_parser("real", help="real member, real metric and real geodesics")
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--seed", type=int, default=2)
    p.add_argument("--steps", type=int, default=30)
    p.add_argument("--states", type=int, default=5, help="states per trace with an eigenvalue check")
    p.add_argument("--ew", action="store_true", help="also fit the real-slice connection")
    p.add_argument("--radius", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.add_argument("--csv")

    p = sub.add_parser("render", help="SVG of a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--curves", type=int, default=8)
    p.add_argument("--out", required=True)
    return ap


def _inputs(args) -> list[str]:
    return [getattr(args, k) for k in ("config", "curve", "trace") if getattr(args, k, None)]


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    tol = default_tol()
    for k in ("steps", "levels", "samples", "jobs", "grid", "arcs", "states", "curves"):
        if getattr(args, k, 1) is not None and getattr(args, k, 1) < 1:
            ap.error(f"--{k} must be positive")
    binary_forms.EXTENDED_PRECISION = args.extended_precision
    t0 = time.perf_counter()
    try:
        summary, outputs = COMMANDS[args.command](args, tol)
    except ValidationFailure as exc:
        sys.stdout.write(io.dumps({"error": "ValidationFailure", "message": str(exc), "details": exc.payload}))
        return 1
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        sys.stdout.write(io.dumps({"error": type(exc).__name__, "message": str(exc)}))
        return 2
    except Exception as exc:  # noqa: BLE001 - numeric failures become a diagnostic
        sys.stdout.write(io.dumps({"error": type(exc).__name__, "message": str(exc)}))
        return 1
    if args.manifest:
        _write(args.manifest, {"subcommand": args.command, "inputs": _inputs(args),
                               "seed": getattr(args, "seed", None), "tolerance": tol,
                               "tolerance_source": "MTL_TOL" if "MTL_TOL" in os.environ else "default",
                               "outputs": [o for o in outputs if o], "version": __version__,
                               "argv": list(sys.argv[1:] if argv is None else argv)})
    # a report already on stdout keeps stdout parseable; the summary then goes to stderr
    stream = sys.stderr if args.command == "lattice" and not args.out else sys.stdout
    print(f"{summary} ({time.perf_counter() - t0:.2f} s)", file=stream)
    return 0


if __name__ == "__main__":
    sys.exit(main())
