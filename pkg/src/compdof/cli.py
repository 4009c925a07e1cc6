"""Command-line entry point.

Exit codes: 0 success, 2 a checked property failed, 3 numerical failure,
64 usage error. Results go to stdout (JSON with ``--json``), diagnostics
to stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import km2_receiver_map, structural_rank
from .channel_core import CooperationPattern, sample_channel
from .cj_alignment import (
    achievable_dof,
    build_mk_general,
    build_mk_km2,
    required_length,
    verify_decodability,
)
from .derived_channel import (
    Triviality,
    general_receiver_map,
    verify_triviality,
    zf_transform_general,
    zf_transform_km2,
)
from .dof_bounds import (
    check_dof_vector,
    format_fraction,
    known_dof,
    miso_reference_dof,
    region_constraints,
    sum_dof_outer_bound,
)
from .exceptions import ArgumentError, NumericalDomainError, NumericalFailure, ResourceError
from .ia_closed_form import (
    alignment_matrices,
    band_leakage,
    closed_form_beams,
    verify_alignment_conditions,
)
from .simulator import LinkBudget, estimate_dof_slope, export, sum_rate, sweep
from .smd import (
    SolverOptions,
    comp_smatrices,
    feasibility_verdict,
    full_dof_beams,
    lu_smatrices,
    smd_feasible,
    smd_solve,
)

EXIT_OK = 0
EXIT_VERIFY = 2
EXIT_NUMERIC = 3
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _cplx(z):
    return [float(np.real(z)), float(np.imag(z))]


def _cmat(M):
    return [[_cplx(z) for z in row] for row in np.asarray(M)]


def _read_matrix(path):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise ArgumentError(f"cannot read matrix from {path}: {exc}") from exc
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 3 and arr.shape[2] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    if arr.ndim == 2:
        return arr.astype(np.complex128)
    raise ArgumentError("matrix file must hold rows of numbers or of [re, im] pairs")


def _parse_grid(text):
    """``lo:step:hi`` (inclusive) or a comma list."""
    try:
        if ":" in text:
            lo, step, hi = (float(x) for x in text.split(":"))
            if step <= 0:
                raise ValueError
            n = int(np.floor((hi - lo) / step + 1e-9)) + 1
            return tuple(lo + step * i for i in range(n))
        return tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise ArgumentError(f"bad SNR grid {text!r}; use lo:step:hi or a comma list") from exc


def _parse_vector(text):
    try:
        return [Fraction(x) for x in text.split(",")]
    except (ValueError, ZeroDivisionError) as exc:
        raise ArgumentError(f"bad DoF vector {text!r}") from exc


# -- subcommands: each returns (result dict, ok flag, text lines) ------------------


def cmd_bounds(a):
    p = CooperationPattern(a.k, a.mt, a.mr)
    res = {
        "K": p.K,
        "Mt": p.Mt,
        "Mr": p.Mr,
        "outer_bound": format_fraction(sum_dof_outer_bound(p.K, p.Mt, p.Mr)),
        "known_dof": format_fraction(known_dof(p.K, p.Mt, p.Mr)),
        "full_dof": p.full_dof,
        "miso_reference": format_fraction(miso_reference_dof(p.K, p.Mt)) if p.Mt < p.K else None,
    }
    ok = True
    if a.check is not None:
        d = _parse_vector(a.check)
        ok = check_dof_vector(p, d, region_constraints(p))
        res["check"] = {"vector": [format_fraction(x) for x in d], "inside_region": ok}
    lines = [f"outer bound {res['outer_bound']}", f"known DoF {res['known_dof'] or 'unknown'}"]
    if a.check is not None:
        lines.append(f"vector {'satisfies' if ok else 'violates'} the region constraints")
    return res, ok, lines


def _smd_opts(a, default):
    return SolverOptions(tol=a.tol if a.tol is not None else default)


def cmd_smd_solve(a):
    if a.lu:
        Vbar, Ubar = lu_smatrices(a.k)
    else:
        Vbar, Ubar = comp_smatrices(a.k, a.mt, a.mr)
    A = _read_matrix(a.matrix) if a.matrix else sample_channel(a.k, 1, a.seed).matrix(1)
    if A.shape != (a.k, a.k):
        raise ArgumentError(f"matrix must be {a.k}x{a.k}, got {A.shape}")
    feasible = smd_feasible(Vbar, Ubar)
    res = {"feasible": feasible, "verdict": feasibility_verdict(Vbar, Ubar)}
    if not feasible:
        return res, False, [res["verdict"]]
    beams, resid, steps = smd_solve(A, Vbar, Ubar, _smd_opts(a, 1e-10))
    res.update({
        "V": _cmat(beams.V),
        "U": _cmat(beams.U),
        "residual": resid,
        "continuation_steps": steps,
        "mask_violation": beams.mask_violation(),
    })
    return res, True, [res["verdict"], f"relative residual {resid:.3e} after {steps} steps"]


def cmd_full_dof(a):
    tol = a.tol if a.tol is not None else 1e-8
    H = sample_channel(a.k, 1, a.seed).matrix(1)
    beams = full_dof_beams(H, a.mt, a.mr)
    E = beams.effective_channel(H)
    resid = float(np.abs(E - np.eye(a.k)).max())
    ok = resid <= tol and beams.mask_violation() == 0.0
    res = {
        "V": _cmat(beams.V),
        "U": _cmat(beams.U),
        "residual": resid,
        "mask_violation": beams.mask_violation(),
        "pass": ok,
    }
    return res, ok, [f"max |U^T H V - I| = {resid:.3e}"]


def cmd_align(a):
    tol = a.tol if a.tol is not None else 1e-8
    H = sample_channel(a.k, 1, a.seed).matrix(1)
    chain = alignment_matrices(H)
    if a.best_eig:
        rates = []
        for i in range(1, a.k):
            try:
                rates.append((sum_rate(H, closed_form_beams(H, i, chain), a.snr), i))
            except NumericalFailure:
                continue
        if not rates:
            raise NumericalFailure("no eigenvector produced usable beams")
        eig = max(rates)[1]
    else:
        eig = a.eig
    beams = closed_form_beams(H, eig, chain)
    resid = float(np.abs(beams.effective_channel(H) - np.eye(a.k)).max())
    leak = band_leakage(beams.U)
    aligned = verify_alignment_conditions(H @ beams.V, CooperationPattern(a.k, a.k - 1, 2))
    ok = resid < tol and leak < tol and aligned
    res = {
        "eig_index": eig,
        "eigenvalues": [_cplx(z) for z in chain.eigenvalues],
        "V": _cmat(beams.V),
        "U": _cmat(beams.U),
        "residual": resid,
        "band_leakage": leak,
        "alignment_conditions": aligned,
        "pass": ok,
    }
    return res, ok, [f"eigenvector {eig}: residual {resid:.3e}, leakage {leak:.3e}, aligned={aligned}"]


def cmd_derive(a):
    tol = a.tol if a.tol is not None else 1e-10
    real = sample_channel(a.k, a.l, a.seed)
    dc = zf_transform_km2(real) if a.scheme == "km2" else zf_transform_general(real, a.mt)
    ok = verify_triviality(dc, tol)
    G = dc.coefficients
    res = {
        "scheme": dc.scheme,
        "K": dc.K,
        "Mt": dc.Mt,
        "L": dc.L,
        "streams": list(dc.streams),
        "mask": [[[Triviality(int(x)).name for x in s] for s in row] for row in dc.mask],
        "coefficients": [[[[_cplx(z) for z in G[i, j, m]] for m in range(G.shape[2])]
                          for j in range(dc.K)] for i in range(dc.K)],
        "triviality": ok,
    }
    return res, ok, [f"{dc.scheme} derived channel, {len(dc.free_links())} free links, triviality={ok}"]


def cmd_cj_verify(a):
    rel = a.tol if a.tol is not None else 1e-9
    mt = a.k - 2 if a.scheme == "km2" and a.mt is None else a.mt
    if mt is None:
        raise ArgumentError("--mt is required for the general scheme")
    L = required_length(a.k, mt, a.scheme, a.order)
    real = sample_channel(a.k, L, a.seed)
    if a.scheme == "km2":
        Mks = build_mk_km2(zf_transform_km2(real), a.order)
    else:
        Mks = build_mk_general(zf_transform_general(real, mt), a.order)
    rep = verify_decodability(Mks, rel)
    res = rep.to_dict()
    res.update({
        "scheme": a.scheme.upper(),
        "K": a.k,
        "Mt": mt,
        "order": a.order,
        "achievable_dof": format_fraction(achievable_dof(a.k, mt, a.scheme, a.order)),
        "dof_limit": format_fraction(achievable_dof(a.k, mt, a.scheme)),
    })
    lines = [f"receiver {r['receiver']}: {r['rows']}x{r['columns']} rank {r['rank']}"
             for r in res["receivers"]]
    return res, rep.ok, lines


def _independence_rows(a):
    if a.scheme == "km2":
        return [(a.k, a.k - 2, 1, km2_receiver_map(a.k, 1))]
    if a.sweep:
        return [(K, Mt, k, general_receiver_map(K, Mt, k))
                for K in range(3, a.k + 1) for Mt in range(2, K) for k in range(1, K + 1)]
    if a.mt is None:
        raise ArgumentError("--mt is required for the general scheme")
    return [(a.k, a.mt, k, general_receiver_map(a.k, a.mt, k)) for k in range(1, a.k + 1)]


def cmd_independence(a):
    rows = []
    for K, Mt, k, f in _independence_rows(a):
        r = structural_rank(f, trials=a.trials, seed=a.seed, rel_tol=a.tol)
        rows.append({"K": K, "Mt": Mt, "receiver": k, "variables": f.n_outputs,
                     "rank": r, "pass": r == f.n_outputs})
    ok = all(r["pass"] for r in rows)
    lines = [f"K={r['K']} Mt={r['Mt']} receiver {r['receiver']}: rank {r['rank']}/{r['variables']}"
             for r in rows]
    return {"scheme": a.scheme.upper(), "checks": rows, "pass": ok}, ok, lines


def cmd_claim2(a):
    from .algebra import claim2_determinant

    tol = a.tol if a.tol is not None else 1e-6
    det = claim2_determinant(a.k, a.method)
    ok = abs(abs(det) - 1.0) <= tol
    res = {"K": a.k, "method": a.method, "determinant": _cplx(det), "abs": abs(det), "pass": ok}
    return res, ok, [f"det = {det.real:+.12g}{det.imag:+.12g}j, |det| = {abs(det):.12g}"]


def cmd_simulate(a):
    schemes = tuple(s.strip() for s in a.schemes.split(",") if s.strip())
    budget = LinkBudget(
        K=a.k, schemes=schemes, snr_db=_parse_grid(a.snr), trials=a.trials, seed=a.seed,
        eig_policy="best" if a.best_eig else "fixed", eig_index=a.eig, Mt=a.mt, Mr=a.mr,
    )
    result = sweep(budget)
    if a.out:
        fmt = "json" if a.out.lower().endswith(".json") else "csv"
        export(result, fmt, a.out)
    slopes = {}
    x = np.asarray(result.snr_db)
    if ((x >= a.window[0]) & (x <= a.window[1])).sum() >= 2:
        slopes = {s: estimate_dof_slope(result, s, tuple(a.window)) for s in schemes}
    res = {
        "metadata": result.metadata,
        "snr_db": list(result.snr_db),
        "mean_sum_rate": {s: list(v) for s, v in result.mean.items()},
        "stddev": {s: list(v) for s, v in result.std.items()},
        "dof_slope": slopes,
        "output": a.out,
    }
    lines = [f"{s}: DoF slope {v:.4f}" for s, v in slopes.items()]
    if a.out:
        lines.append(f"wrote {a.out}")
    return res, True, lines


# -- parser ------------------------------------------------------------------------


def _global(p):
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--json", action="store_true", help="emit JSON on stdout")
    p.add_argument("--tol", type=float, default=None, help="override the command's tolerance")


def build_parser():
    parser = _Parser(prog="compdof", description="DoF tools for the interference channel with CoMP")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        _global(p)
        p.set_defaults(func=func)
        return p

    p = add("bounds", cmd_bounds, "outer bound, known DoF and region check")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--mt", type=int, required=True)
    p.add_argument("--mr", type=int, default=1)
    p.add_argument("--check", help="comma-separated DoF vector, e.g. 1,1/2,1/2,1/2")

    p = add("smd-solve", cmd_smd_solve, "structural matrix decomposition A = V U^T (tol default 1e-10)")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--mt", type=int, default=1)
    p.add_argument("--mr", type=int, default=1)
    p.add_argument("--lu", action="store_true", help="use lower-triangular masks")
    p.add_argument("--matrix", help="JSON file with the matrix A (default: random from --seed)")

    p = add("full-dof", cmd_full_dof, "interference-free beams for Mt + Mr >= K + 1 (tol default 1e-8)")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--mt", type=int, required=True)
    p.add_argument("--mr", type=int, required=True)

    p = add("align-closed-form", cmd_align, "closed-form beams for Mt = K-1, Mr = 2 (tol default 1e-8)")
    p.add_argument("--k", type=int, required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--eig", type=int, default=1)
    g.add_argument("--best-eig", action="store_true")
    p.add_argument("--snr", type=float, default=30.0, help="SNR (dB) used to rank eigenvectors")

    p = add("derive", cmd_derive, "zero-forcing derived channel (tol default 1e-10)")
    p.add_argument("--scheme", choices=("km2", "general"), required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--mt", type=int)
    p.add_argument("--l", type=int, default=1, help="parallel channels")

    p = add("cj-verify", cmd_cj_verify, "decodability of the alignment scheme (rank tol default 1e-9)")
    p.add_argument("--scheme", choices=("km2", "general"), required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--mt", type=int)
    p.add_argument("--order", type=int, default=1)

    p = add("independence", cmd_independence, "Jacobian test of algebraic independence")
    p.add_argument("--scheme", choices=("km2", "general"), required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--mt", type=int)
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--sweep", action="store_true", help="general scheme: all 2 <= Mt < K' <= K")

    p = add("claim2", cmd_claim2, "Jacobian block determinant at the circulant point (tol default 1e-6)")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--method", choices=("analytic", "numeric"), default="analytic")

    p = add("simulate", cmd_simulate, "Monte-Carlo sum-rate sweep")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--schemes", default="zf,cf")
    p.add_argument("--snr", default="0:5:60")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--out", help="CSV or JSON (by extension) output file")
    p.add_argument("--best-eig", action="store_true")
    p.add_argument("--eig", type=int, default=1)
    p.add_argument("--mt", type=int)
    p.add_argument("--mr", type=int)
    p.add_argument("--window", type=float, nargs=2, default=(40.0, 60.0), metavar=("LO", "HI"))
    return parser


def _config(args):
    return {k: (list(v) if isinstance(v, tuple) else v)
            for k, v in sorted(vars(args).items()) if k != "func"}


def run(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            result, ok, lines = args.func(args)
        code = EXIT_OK if ok else EXIT_VERIFY
        status = "ok" if ok else "verification_failed"
    except (ArgumentError, ResourceError) as exc:
        print(f"compdof {args.command}: {exc}", file=stderr)
        return EXIT_USAGE
    except (NumericalFailure, NumericalDomainError) as exc:
        print(f"compdof {args.command}: numerical failure: {exc}", file=stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"compdof {args.command}: {exc}", file=stderr)
        return EXIT_USAGE

    if args.json:
        doc = {"command": args.command, "config": _config(args), "status": status, "result": result}
        stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        for line in lines:
            print(line, file=stdout)
    if not ok:
        print(f"compdof {args.command}: verification failed", file=stderr)
    return code


def main():
    sys.exit(run())
