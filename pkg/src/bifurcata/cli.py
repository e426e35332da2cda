"""Command-line frontend.

    bifurcata diagram   [flags]                  diagram.csv/.json/.svg
    bifurcata branch    --k K --parity P --sign S  branch.csv
    bifurcata bifpoints [--k K]                  bifpoints.csv
    bifurcata morse     --k K --parity P (--beta B... | --lam L...)   morse.csv
    bifurcata profile   --k K --parity P (--beta B | --lam L)         profile.csv
    bifurcata verify                             verify.json, exit 0 iff all pass
    bifurcata selftest                           quick smoke checks

Exit codes: 0 success, 1 failed checks, 2 configuration error, 3 numerical
failure (the message names the failing operation).
"""

from __future__ import annotations

import argparse
import os
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import export
from .branches import (
    assemble_diagram,
    beta_for_lambda,
    correct_at_lambda,
    find_primary_bifurcations,
    find_secondary_bifurcations,
    mirror_secondary,
    reconstruct_solution,
    trace_primary,
    trace_secondary,
    clustered_grid,
)
from .config import Config, load_config
from .errors import BifurcataError, ConfigError
from .nonlinearity import GKernel, Nonlinearity, check_conditions
from .quadrature import PhaseIntegrator
from .shooting import ShootingContext

N_MU = 6


class NumericalFailure(Exception):
    def __init__(self, operation: str, exc: Exception):
        super().__init__(f"{operation}: {type(exc).__name__}: {exc}")
        self.operation = operation


@contextmanager
def stage(operation: str):
    try:
        yield
    except BifurcataError as exc:
        raise NumericalFailure(operation, exc) from exc


def workers() -> int:
    raw = os.environ.get("BIFURCATA_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"BIFURCATA_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError("BIFURCATA_THREADS must be >= 1")
    return n


# ------------------------------------------------------------------ setup


def make_nonlinearity(cfg: Config) -> Nonlinearity:
    p = cfg.problem
    try:
        if p.nonlinearity == "custom":
            return Nonlinearity("custom", tuple(p.coefficients))
        return Nonlinearity(p.nonlinearity)
    except ValueError as exc:
        raise ConfigError(f"[problem] invalid nonlinearity: {exc}") from exc


def make_context(cfg: Config) -> ShootingContext:
    nl = make_nonlinearity(cfg)
    with stage("kernel setup"):
        gk = GKernel(nl)
    t = cfg.tolerances
    pi = PhaseIntegrator(gk, rel_tol=t.quad_rel, abs_tol=t.quad_abs, max_subdivisions=t.max_subdivisions)
    return ShootingContext(gk, pi, a=cfg.problem.a)


def _out_dir(cfg: Config) -> Path:
    out = Path(cfg.output.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(cfg: Config, stem: str, columns, rows, meta: dict) -> list[Path]:
    out = _out_dir(cfg)
    written = [out / f"{stem}.csv"]
    export.write_csv(written[0], columns, rows)
    if cfg.output.json:
        written.append(out / f"{stem}.json")
        export.write_json(written[-1], {**meta, "columns": list(columns), "rows": [list(r) for r in rows]})
    return written


def _meta(cfg: Config, sc: ShootingContext) -> dict:
    return {"nonlinearity": sc.nl.label(), "a": sc.a, "config": cfg.as_dict()}


# --------------------------------------------------------------- commands


def cmd_diagram(cfg: Config) -> list[Path]:
    sc = make_context(cfg)
    g = cfg.grids
    every = g.morse_every if g.morse_every > 0 else (10 if cfg.output.morse else 0)
    with stage("assemble_diagram"):
        dg = assemble_diagram(sc, g.kmax, g.lambda_max, n_grid=g.n_grid, secondary_steps=g.secondary_steps,
                              morse_every=every, workers=workers())
    with stage("diagram rows"):
        rows = dg.rows(sc.gk)
    meta = _meta(cfg, sc)
    meta["primary_points"] = [{"n": p.n, "lambda": p.lam} for p in dg.primary_points]
    meta["secondary_points"] = [
        {"k": b.k, "sign": b.sign, "beta_star": b.beta_star, "phi_star": b.phi_star,
         "lambda_star": b.lam_star, "unique": b.unique}
        for b in dg.secondary_points
    ]
    meta["secondary_stop_reasons"] = {f"sec_k{s.origin.k}{s.origin.sign}": list(s.stop_reasons) for s in dg.secondary}
    written = _emit(cfg, "diagram", export.DIAGRAM_COLUMNS, rows, meta)
    if cfg.output.svg:
        svg = _out_dir(cfg) / "diagram.svg"
        export.svg_from_csv(written[0], svg, title=f"{sc.nl.label()}, a = {sc.a:g}")
        written.append(svg)
    return written


def _secondary_branch(sc: ShootingContext, cfg: Config, k: int, sign: str):
    pts = find_secondary_bifurcations(sc, k)
    plus = [b for b in pts if b.sign == "+"]
    if not plus:
        raise BifurcataError(f"no secondary bifurcation point for k={k}")
    sb = trace_secondary(sc, plus[0], n_steps=cfg.grids.secondary_steps, lam_max=cfg.grids.lambda_max)
    return sb if sign == "+" else mirror_secondary(sb)


def cmd_branch(cfg: Config, k: int, parity: str, sign: str) -> list[Path]:
    sc = make_context(cfg)
    g = cfg.grids
    if parity == "secondary":
        with stage("trace_secondary"):
            pts = _secondary_branch(sc, cfg, k, sign).points
        bid = f"sec_k{k}{sign}"
    else:
        with stage("trace_primary"):
            pts = [p for p in trace_primary(sc, k, parity, sign, clustered_grid(sc.beta0, g.n_grid))
                   if p.lam <= g.lambda_max]
        bid = f"{parity}_k{k}{sign}"
    rows = [(bid, p.lam, p.beta1, p.beta2, float(sc.gk.G(p.beta2)), p.D, p.morse) for p in pts]
    return _emit(cfg, "branch", export.DIAGRAM_COLUMNS, rows, _meta(cfg, sc))


BIF_COLUMNS = ("kind", "index", "sign", "lambda", "beta_star", "phi_star", "unique")


def cmd_bifpoints(cfg: Config, k: int | None = None) -> list[Path]:
    sc = make_context(cfg)
    ks = [k] if k is not None else list(range(1, cfg.grids.kmax + 1))
    rows = []
    if k is None:
        with stage("find_primary_bifurcations"):
            for p in find_primary_bifurcations(sc, cfg.grids.lambda_max):
                if p.n <= 2 * cfg.grids.kmax:
                    rows.append(("primary", p.n, "", p.lam, 0.0, float("nan"), True))
    with stage("find_secondary_bifurcations"):
        for kk in ks:
            for b in find_secondary_bifurcations(sc, kk):
                if b.sign == "+":
                    rows.append(("secondary", kk, b.sign, b.lam_star, b.beta_star, b.phi_star, b.unique))
    return _emit(cfg, "bifpoints", BIF_COLUMNS, rows, _meta(cfg, sc))


def _points(sc: ShootingContext, cfg: Config, k: int, parity: str, sign: str, betas, lams):
    """(lam, beta1, beta2) for each selector value."""
    s = 1.0 if sign == "+" else -1.0
    out = []
    if parity == "secondary":
        if betas:
            raise ConfigError("secondary points are selected by --lam")
        sb = _secondary_branch(sc, cfg, k, sign).points
        for lam in lams:
            hit = None
            for p, q in zip(sb[:-1], sb[1:]):
                if (p.lam - lam) * (q.lam - lam) <= 0 and p.lam != q.lam:
                    w = (lam - p.lam) / (q.lam - p.lam)
                    hit = correct_at_lambda(sc, lam, p.beta1 + w * (q.beta1 - p.beta1), p.beta2 + w * (q.beta2 - p.beta2))
                    break
            if hit is None:
                raise ConfigError(f"lambda = {lam} is not on the traced secondary branch")
            out.append((lam, hit[0], hit[1]))
        return out
    for b in betas:
        if not 0 < b < sc.beta0:
            raise ConfigError(f"--beta must lie in (0, {sc.beta0!r})")
        lam = float(sc.lambda_branch(s * b, k, parity))
        out.append((lam, s * b, -s * b if parity == "odd" else s * b))
    for lam in lams:
        b = beta_for_lambda(sc, k, parity, lam)
        if not np.isfinite(b):
            raise ConfigError(f"lambda = {lam} is not on the {parity} branch k={k}")
        out.append((lam, s * b, -s * b if parity == "odd" else s * b))
    return out


def morse_columns(m: int = N_MU):
    return ("lambda", "beta1", "beta2", "morse", "certified", "degenerate", "zero_tolerance", "D",
            "verdicts_agree") + tuple(
        f"mu{i}" for i in range(m))


def cmd_morse(cfg: Config, k: int, parity: str, sign: str, betas=(), lams=()) -> list[Path]:
    from .spectrum import morse_index, nondegeneracy_verdict

    sc = make_context(cfg)
    if not betas and not lams:
        raise ConfigError("morse needs --beta or --lam values")
    with stage("branch point selection"):
        pts = _points(sc, cfg, k, parity, sign, betas, lams)
    rows = []
    spectra = []
    with stage("morse_index"):
        for lam, b1, b2 in pts:
            prof = reconstruct_solution(sc, lam, b1, b2, 8)
            spec = morse_index(prof, sc, cfg.grids.spectrum_n, max(N_MU, prof.zero_count() + 6), strict=False)
            verdict = nondegeneracy_verdict(sc, lam, b1, b2, spec, cfg.tolerances.d_tol)
            rows.append((lam, b1, b2, spec.morse_index, spec.certified, spec.degenerate, spec.zero_tolerance,
                         verdict.D, verdict.agree, *spec.eigenvalues[:N_MU]))
            spectra.append(spec.as_dict())
    meta = _meta(cfg, sc)
    meta["spectra"] = spectra
    return _emit(cfg, "morse", morse_columns(), rows, meta)


PROFILE_COLUMNS = ("x", "u(-x)", "u(x)", "u_x(-x)", "u_x(x)")


def cmd_profile(cfg: Config, k: int, parity: str, sign: str, beta=None, lam=None) -> list[Path]:
    sc = make_context(cfg)
    if (beta is None) == (lam is None):
        raise ConfigError("profile needs exactly one of --beta or --lam")
    with stage("branch point selection"):
        (lam_, b1, b2), = _points(sc, cfg, k, parity, sign, [beta] if beta is not None else [],
                                  [lam] if lam is not None else [])
    n = cfg.grids.profile_n
    with stage("reconstruct_solution"):
        prof = reconstruct_solution(sc, lam_, b1, b2, n)
    left = prof.x < 0
    # left nodes run from -1 toward 0, right nodes from near 0 to 1 as their mirrors
    xr, ur, dr = prof.x[~left], prof.u[~left], prof.ux[~left]
    ul, dl = prof.u[left][::-1], prof.ux[left][::-1]
    rows = [tuple(float(v) for v in r) for r in zip(xr, ul, ur, dl, dr)]
    meta = _meta(cfg, sc)
    meta.update(lam=lam_, beta1=b1, beta2=b2, u_minus=prof.u_minus, u_plus=prof.u_plus,
                ux_minus=prof.ux_minus, ux_plus=prof.ux_plus,
                matching_residual=prof.matching_residual().tolist(), zero_count=prof.zero_count())
    return _emit(cfg, "profile", PROFILE_COLUMNS, rows, meta)


def cmd_verify(cfg: Config, stream=None) -> int:
    from .verification import run_all

    stream = stream or sys.stdout
    nl = make_nonlinearity(cfg)
    results = run_all(nl, cfg.problem.a)
    for r in results:
        print(r.line(), file=stream)
    report = {
        "nonlinearity": nl.label(),
        "a": cfg.problem.a,
        "passed": all(r.passed for r in results),
        "checks": [r.as_dict() for r in results],
    }
    out = _out_dir(cfg)
    export.write_json(out / "verify.json", report)
    failing = [r.key for r in results if not r.passed]
    if failing:
        print("failing checks: " + ", ".join(failing), file=sys.stderr)
        return 1
    return 0


def cmd_selftest(cfg: Config, stream=None) -> int:
    """Fast smoke checks on the configured nonlinearity."""
    from .oracle import lambda_oracle, matching_residual

    stream = stream or sys.stdout
    sc = make_context(cfg)
    nl, a = sc.nl, sc.a
    checks = []
    cond = check_conditions(nl)
    checks.append(("structural conditions", cond.all_ok))
    with stage("find_primary_bifurcations"):
        pts = find_primary_bifurcations(sc, 45.0 / nl.f_prime_0)
    checks.append(("primary points vs oracle",
                   all(abs(p.lam - lambda_oracle(nl, a, p.n)) < 1e-10 for p in pts if p.n <= 4)))
    b = 0.5 * sc.beta0
    with stage("lambda_branch"):
        lam = float(sc.lambda_branch(b, 1, "odd"))
    checks.append(("odd branch vs IVP oracle", float(np.max(np.abs(matching_residual(nl, a, lam, b, -b)))) < 1e-7))
    d1 = sc.shoot(lam, b)
    d2 = sc.shoot(lam, -b)
    checks.append(("P, Q odd in beta", abs(d1["P"] + d2["P"]) < 1e-12 and abs(d1["Q"] + d2["Q"]) < 1e-12))
    ok = True
    for name, passed in checks:
        print(f"{'PASS' if passed else 'FAIL'} {name}", file=stream)
        ok &= bool(passed)
    return 0 if ok else 1


# ------------------------------------------------------------------ parser


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH")
    common.add_argument("--nonlinearity", choices=("cubic", "sine", "custom"))
    common.add_argument("--a", type=float)
    common.add_argument("--kmax", type=int)
    common.add_argument("--lambda-max", type=float, dest="lambda_max")
    common.add_argument("--out", metavar="DIR")
    common.add_argument("--grid", type=int)
    common.add_argument("--json", action=argparse.BooleanOptionalAction, default=None)
    common.add_argument("--svg", action=argparse.BooleanOptionalAction, default=None)

    select = argparse.ArgumentParser(add_help=False)
    select.add_argument("--k", type=int, default=1)
    select.add_argument("--parity", choices=("odd", "even", "secondary"), default="odd")
    select.add_argument("--sign", choices=("+", "-"), default="+")

    p = argparse.ArgumentParser(prog="bifurcata", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("diagram", parents=[common], help="full bifurcation diagram")
    sub.add_parser("branch", parents=[common, select], help="points of one branch")
    bp = sub.add_parser("bifpoints", parents=[common], help="primary and secondary bifurcation points")
    bp.add_argument("--k", type=int)
    mp = sub.add_parser("morse", parents=[common, select], help="spectra and Morse indices")
    mp.add_argument("--beta", type=float, nargs="+", default=[])
    mp.add_argument("--lam", type=float, nargs="+", default=[])
    pp = sub.add_parser("profile", parents=[common, select], help="one solution profile")
    pp.add_argument("--beta", type=float)
    pp.add_argument("--lam", type=float)
    sub.add_parser("verify", parents=[common], help="run every acceptance check")
    sub.add_parser("selftest", parents=[common], help="quick smoke checks")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    overrides = {name: getattr(args, name, None) for name in
                 ("nonlinearity", "a", "kmax", "lambda_max", "grid", "out", "json", "svg")}
    try:
        cfg = load_config(args.config, overrides)
        if args.command in ("branch", "morse", "profile") and args.k < 1:
            raise ConfigError("--k must be >= 1")
        workers()
        if args.command == "diagram":
            paths = cmd_diagram(cfg)
        elif args.command == "branch":
            paths = cmd_branch(cfg, args.k, args.parity, args.sign)
        elif args.command == "bifpoints":
            paths = cmd_bifpoints(cfg, args.k)
        elif args.command == "morse":
            paths = cmd_morse(cfg, args.k, args.parity, args.sign, args.beta, args.lam)
        elif args.command == "profile":
            paths = cmd_profile(cfg, args.k, args.parity, args.sign, args.beta, args.lam)
        elif args.command == "verify":
            return cmd_verify(cfg)
        else:
            return cmd_selftest(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"numerical failure in {exc}", file=sys.stderr)
        return 3
    except BifurcataError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
