"""``steerkit`` command-line workbench.

Exit codes: 0 on pass / Equivalent / certified, 1 on fail / NotEquivalent /
uncertified, 2 on Undetermined or any error.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, filters, linalg, rates, robustness, seo
from .assemblage import Assemblage, MeasurementAssemblage, encode_matrix, to_json, validate, validate_measurements
from .config import DEFAULT, Tolerances
from .errors import SteerkitError
from .fixtures import FIXTURES, qutrit_canonical, qutrit_initial
from .io import OutputSink, RunManifest, dumps, load_input
from .sdp import export_sdpa, import_sdpa, solve

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


class UsageError(SteerkitError):
    pass


def _tolerances(args) -> Tolerances:
    if args.tol is None:
        return DEFAULT
    return replace(DEFAULT, equiv_tol=args.tol, solver_tol=args.tol)


def _start(args, inputs) -> tuple[Tolerances, OutputSink]:
    tol = _tolerances(args)
    manifest = RunManifest.start(args.command, args._argv, inputs, tol, args.seed)
    return tol, OutputSink(args.out, manifest, directory=getattr(args, "_out_is_dir", False))


def _need(family, kind, what: str):
    if not isinstance(family, kind):
        expected = "an assemblage ('sigma')" if kind is Assemblage else "measurements ('povm')"
        raise UsageError(f"{what} expects {expected}")
    return family


def _summary(sink: OutputSink, line: str) -> None:
    # keep stdout pure JSON when no --out is given
    print(line, file=sys.stdout if sink.out is not None else sys.stderr)


# -- subcommands ------------------------------------------------------------------

def cmd_validate(args) -> int:
    src = load_input(args.path, repair=False)
    tol, sink = _start(args, [src])
    fam = src.family
    report = validate(fam, tol) if isinstance(fam, Assemblage) else validate_measurements(fam, tol)
    sink.emit(report.to_dict())
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_seo(args) -> int:
    src = load_input(args.path)
    tol, sink = _start(args, [src])
    res = seo.compute_seo(_need(src.family, Assemblage, "seo"), tol=tol)
    payload = dict(to_json(res.seo), rank=res.rank, projector=encode_matrix(res.projector))
    sink.emit(payload)
    return EXIT_OK


def cmd_classify(args) -> int:
    a, b = load_input(args.path1), load_input(args.path2)
    tol, sink = _start(args, [a, b])
    cert = seo.seo_equivalent(_need(a.family, Assemblage, "classify"), _need(b.family, Assemblage, "classify"),
                              seed=args.seed or 0, tol=tol)
    sink.emit(cert.to_dict())
    _summary(sink, cert.verdict)
    return {seo.EQUIVALENT: EXIT_OK, seo.NOT_EQUIVALENT: EXIT_FAIL}.get(cert.verdict, EXIT_ERROR)


def cmd_robustness(args) -> int:
    src = load_input(args.path)
    tol, sink = _start(args, [src])
    fam = src.family
    note = None
    if args.kind == "sr":
        report = robustness.steering_robustness(_need(fam, Assemblage, "--kind sr"), tol)
    else:
        if isinstance(fam, Assemblage):
            fam = seo.compute_seo(fam, tol=tol).seo
            note = "incompatibility robustness of the steering-equivalent observables"
        report = robustness.incompatibility_robustness(fam, tol)
    if args.export_sdpa:
        sink.write_text(Path(args.export_sdpa), export_sdpa(report.problem))
    witness = report.to_dict()
    sink.write_json(sink.companion("witness.json"), witness)
    payload = {k: witness[k] for k in ("kind", "value", "primal_objective", "dual_objective", "duality_gap",
                                       "iterations", "status", "feasibility_residual")}
    if note:
        payload["note"] = note
    if sink.out is None:
        payload["witness"] = witness["witness"]
        if "eta" in witness:
            payload["eta"] = witness["eta"]
    sink.emit(payload)
    _summary(sink, f"{args.kind.upper()} = {report.value:.6f} (duality gap {report.duality_gap:.2e})")
    return EXIT_OK


def cmd_distill(args) -> int:
    src = load_input(args.path)
    tol, sink = _start(args, [src])
    res = filters.distill_to_sup(_need(src.family, Assemblage, "distill"), args.eps, tol)
    res.filter.seed = args.seed
    sink.write_json(sink.companion("filter.json"), res.filter.to_dict())
    sink.write_json(sink.companion("assemblage.json"), to_json(res.assemblage))
    payload = {
        "certified_sr": res.certified_sr,
        "class_supremum": res.class_supremum,
        "eps": args.eps,
        "delta": res.delta,
        "p_succ": res.filter.p_succ,
        "certified": res.certified,
    }
    if sink.out is None:
        payload["filter"] = res.filter.to_dict()
        payload["assemblage"] = to_json(res.assemblage)
    sink.emit(payload)
    _summary(sink, f"SR = {res.certified_sr:.6f}, p_succ = {res.filter.p_succ:.6f}")
    return EXIT_OK if res.certified else EXIT_FAIL


def cmd_dilute(args) -> int:
    src = load_input(args.path)
    tol, sink = _start(args, [src])
    asm = _need(src.family, Assemblage, "dilute")
    res = filters.dilute_to_inf(asm, args.eps, tol)
    res.filter.seed = args.seed
    sr = robustness.steering_robustness(res.assemblage, tol).value
    cert = seo.seo_equivalent(res.assemblage, asm, seed=args.seed or 0, tol=tol)
    sink.write_json(sink.companion("filter.json"), res.filter.to_dict())
    sink.write_json(sink.companion("assemblage.json"), to_json(res.assemblage))
    ok = sr <= args.eps + tol.solver_tol and cert.equivalent
    payload = {
        "sr": sr,
        "er_bound": res.er_bound,
        "eps": args.eps,
        "schmidt": res.schmidt.tolist(),
        "p_succ": res.filter.p_succ,
        "class_certificate": cert.to_dict(),
        "certified": ok,
    }
    if sink.out is None:
        payload["filter"] = res.filter.to_dict()
        payload["assemblage"] = to_json(res.assemblage)
    sink.emit(payload)
    _summary(sink, f"SR = {sr:.6f} (bound {res.er_bound:.4f}), class {cert.verdict}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_optimal_state(args) -> int:
    src = load_input(args.path)
    tol, sink = _start(args, [src])
    res = filters.optimal_state(_need(src.family, MeasurementAssemblage, "optimal-state"), args.eps, tol)
    d = src.family.dim
    state = {"dim_a": d, "dim_b": d, "rho": encode_matrix(res.state)}
    sink.write_json(sink.companion("state.json"), state)
    sink.write_json(sink.companion("assemblage.json"), to_json(res.assemblage))
    payload = {"certified_sr": res.certified_sr, "ir": res.ir, "eps": args.eps, "delta": res.delta,
               "certified": res.certified, "eta": encode_matrix(res.eta)}
    if sink.out is None:
        payload["state"] = state
    sink.emit(payload)
    _summary(sink, f"SR = {res.certified_sr:.6f}, IR = {res.ir:.6f}")
    return EXIT_OK if res.certified else EXIT_FAIL


def cmd_rate(args) -> int:
    _, sink = _start(args, [])
    est = rates.simulate_rate(args.p, args.N, args.batches, args.seed or 0)
    payload = est.to_dict()
    payload["within_5_sigma"] = abs(est.z_score()) <= 5.0
    sink.emit(payload)
    _summary(sink, f"mean = {est.mean:.6f} (p = {est.p_succ}, z = {est.z_score():+.2f})")
    return EXIT_OK


def figure2_point(mu1: float, mu2: float, tol: Tolerances | None = None) -> tuple[float, float]:
    """SR of the qutrit initial assemblage and the distillation success probability."""
    asm = qutrit_initial(mu1, mu2)
    sr = robustness.steering_robustness(asm, tol).value
    if min(mu1, mu2, 1.0 - mu1**2 - mu2**2) <= 0.0:
        return sr, 0.0  # rank-deficient source: no filter reaches the full-rank canonical member
    cert = seo.seo_equivalent(qutrit_canonical(), asm, tol=tol)
    if not cert.equivalent:
        return sr, 0.0
    return sr, filters.synthesize_filter(qutrit_canonical(), asm, cert.unitary, tol).p_succ


def figure2_grid(n: int) -> list[tuple[float, float]]:
    axis = np.linspace(0.0, 1.0, n)
    return [(float(a), float(b)) for a in axis for b in axis if a * a + b * b < 1.0]


def thread_count() -> int:
    raw = os.environ.get("STEERKIT_THREADS", "")
    cap = os.cpu_count() or 1
    try:
        return max(1, min(int(raw), cap)) if raw else cap
    except ValueError:
        raise UsageError(f"STEERKIT_THREADS must be an integer, got {raw!r}") from None


def _csv(header: list[str], rows) -> str:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows([[repr(float(v)) for v in row] for row in rows])
    return buf.getvalue()


def cmd_figure2(args) -> int:
    if args.grid < 2:
        raise UsageError("--grid must be at least 2")
    if args.out is None:
        raise UsageError("figure2 writes CSV files and needs --out DIR")
    args._out_is_dir = True
    tol, sink = _start(args, [])
    points = figure2_grid(args.grid)
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        values = list(pool.map(lambda mu: figure2_point(*mu, tol=tol), points))
    sr_rows = [(m1, m2, sr) for (m1, m2), (sr, _) in zip(points, values)]
    p_rows = [(m1, m2, p) for (m1, m2), (_, p) in zip(points, values)]
    sink.write_text(sink.companion("figure2_sr.csv"), _csv(["mu1", "mu2", "sr_initial"], sr_rows))
    sink.write_text(sink.companion("figure2_psucc.csv"), _csv(["mu1", "mu2", "p_succ"], p_rows))
    max_sr = max(v[0] for v in values)
    sink.emit({"grid": args.grid, "points": len(points), "max_sr_initial": max_sr})
    _summary(sink, f"{len(points)} valid points, max SR = {max_sr:.6f}")
    return EXIT_OK


def cmd_fixture(args) -> int:
    kwargs = {}
    if args.mu:
        kwargs["mu"] = tuple(args.mu)
    if args.seed is not None:
        kwargs["seed"] = args.seed
    payload = to_json(FIXTURES[args.name](**kwargs))
    if args.out:
        Path(args.out).write_text(dumps(payload), encoding="utf-8")
    else:
        sys.stdout.write(dumps(payload))
    return EXIT_OK


def cmd_solve_sdpa(args) -> int:
    try:
        text = Path(args.path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"{args.path}: {exc.strerror}") from exc
    _, sink = _start(args, [])
    sol = solve(import_sdpa(text))
    sink.emit({"status": sol.status, "primal_objective": sol.primal_objective,
               "dual_objective": sol.dual_objective, "gap": sol.gap, "iterations": sol.iterations})
    _summary(sink, f"{sol.status}: {sol.objective:.10f}")
    return EXIT_OK if sol.optimal else EXIT_FAIL


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="PATH", help="result file (a directory for figure2); stdout if omitted")
    common.add_argument("--eps", type=float, default=1e-3, help="target accuracy for distill/dilute/optimal-state")
    common.add_argument("--seed", type=int, default=None, help="seed for randomized steps")
    common.add_argument("--tol", type=float, default=None, help="override equivalence and solver tolerances")

    parser = argparse.ArgumentParser(prog="steerkit",
                                     description="Local-filter classes, robustness SDPs and distillation of steering.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    inp = "JSON file or fixture:NAME"

    p = sub.add_parser("validate", parents=[common], help="check an assemblage or measurement file")
    p.add_argument("path", help=inp)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("seo", parents=[common], help="steering-equivalent observables of an assemblage")
    p.add_argument("path", help=inp)
    p.set_defaults(func=cmd_seo)

    p = sub.add_parser("classify", parents=[common], help="decide local-filter equivalence of two assemblages")
    p.add_argument("path1", help=inp)
    p.add_argument("path2", help=inp)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("robustness", parents=[common], help="steering or incompatibility robustness")
    p.add_argument("path", help=inp)
    p.add_argument("--kind", choices=["sr", "ir"], required=True)
    p.add_argument("--export-sdpa", metavar="PATH", help="also write the SDP in SDPA sparse format")
    p.set_defaults(func=cmd_robustness)

    p = sub.add_parser("distill", parents=[common], help="filter to the most steerable class member")
    p.add_argument("path", help=inp)
    p.set_defaults(func=cmd_distill)

    p = sub.add_parser("dilute", parents=[common], help="filter to a class member with SR <= eps")
    p.add_argument("path", help=inp)
    p.set_defaults(func=cmd_dilute)

    p = sub.add_parser("optimal-state", parents=[common], help="state maximizing SR for given measurements")
    p.add_argument("path", help=inp)
    p.set_defaults(func=cmd_optimal_state)

    p = sub.add_parser("rate", parents=[common], help="simulate single-shot conversion statistics")
    p.add_argument("--p", type=float, required=True, help="success probability")
    p.add_argument("--N", type=int, default=100_000, help="copies per batch")
    p.add_argument("--batches", type=int, default=1)
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("figure2", parents=[common], help="qutrit SR and p_succ sweep as CSV")
    p.add_argument("--grid", type=int, default=21, help="points per axis")
    p.set_defaults(func=cmd_figure2)

    p = sub.add_parser("fixture", parents=[common], help="write a built-in example as JSON")
    p.add_argument("name", choices=sorted(FIXTURES))
    p.add_argument("--mu", type=float, nargs="+", help="Schmidt coefficients for parametric fixtures")
    p.set_defaults(func=cmd_fixture)

    p = sub.add_parser("solve-sdpa", parents=[common], help="solve an SDPA sparse file with the built-in solver")
    p.add_argument("path")
    p.set_defaults(func=cmd_solve_sdpa)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args._argv = argv
    try:
        return args.func(args)
    except (SteerkitError, ValueError) as exc:
        print(f"steerkit {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
