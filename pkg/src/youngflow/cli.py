"""Command-line front end: ``youngflow <command> [options]``.

Exit codes: 0 success, 2 when a criterion or certificate check fails,
1 on validation, I/O or numerical errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import attractor as att
from .errors import DomainError, YoungflowError
from .fbm import FbmSpec, generate_ensemble
from .io import file_sha256, load_model, read_paths_csv, write_json, write_paths_csv, write_trajectory_csv
from .models import SirParams, lipschitz_certificate, sir_build
from .ode_young import solve_young_sde
from .suite import CHECKS, run_checks
from .stability import DEFAULT_DELTA, KappaParams, criterion_report, default_p, op_norm
from .variation import pvar_seminorm
from .young import k_constant, young_integral, young_loeve_certify

EXIT_OK, EXIT_ERROR, EXIT_FINDING = 0, 1, 2
THREADS_ENV = "YOUNGFLOW_THREADS"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    p.add_argument("--seed", type=int, help="base seed (default 0)", **kw)
    p.add_argument("--threads", type=int, help=f"worker threads (default: ${THREADS_ENV} or 1)", **kw)
    p.add_argument("--out-dir", help="directory for all outputs (default: current directory)", **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="youngflow", description="Young-integral toolkit for fBm-driven linear systems.")
    parser.add_argument("--version", action="version", version=f"youngflow {__version__}")
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        _add_globals(p, suppress=True)
        return p

    p = command("fbm", "generate fractional Brownian motion paths")
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--steps-per-unit", type=int, required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--one-sided", action="store_true", help="paths on [0, horizon] instead of [-horizon, horizon]")
    p.add_argument("--out", default="paths.csv")

    def omega_args(p):
        p.add_argument("--omega", "--in", dest="omega", required=True, help="CSV of driver paths")
        p.add_argument("--column", type=int, default=0, help="which path of the CSV to use")

    def window_args(p):
        p.add_argument("--from", dest="t_from", type=float)
        p.add_argument("--to", dest="t_to", type=float)

    p = command("pvar", "p-variation seminorm of a path")
    omega_args(p)
    window_args(p)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--json", default="pvar.json")

    p = command("young", "Young integral with a Young-Loeve certificate")
    omega_args(p)
    window_args(p)
    p.add_argument("--integrand", "--x", dest="integrand", help="CSV holding the integrand (default: the driver itself)")
    p.add_argument("--integrand-column", type=int, default=0)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float)
    p.add_argument("--slack", type=float, default=1e-6)
    p.add_argument("--json", default="young.json")

    p = command("solve", "Euler solution of a model against a driver path")
    p.add_argument("--model", required=True)
    omega_args(p)
    window_args(p)
    p.add_argument("--x0", type=_floats, required=True)
    p.add_argument("--substeps", type=int, default=1)
    p.add_argument("--out", default="traj.csv")

    p = command("stability", "stability criterion report")
    p.add_argument("--model", required=True)
    omega_args(p)
    p.add_argument("--m", type=int, required=True, help="number of unit blocks [k, k+1]")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float)
    p.add_argument("--h0", type=float)
    p.add_argument("--x0", type=_floats, help="also estimate the Lyapunov exponent from this start")
    p.add_argument("--json", default="report.json")

    p = command("attractor", "pullback attractor report")
    p.add_argument("--model", required=True)
    omega_args(p)
    p.add_argument("--times", type=_floats, required=True)
    p.add_argument("--x0-grid", default="cube:1:8", help="cube:<half-width>:<count>, count = k^d")
    p.add_argument("--x0-center", type=_floats, help="center of the initial-point cube (default origin)")
    p.add_argument("--hurst", type=float, help="Hurst index of the driver (sets p and q0 defaults)")
    p.add_argument("--p", type=float)
    p.add_argument("--q0", type=int)
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    p.add_argument("--n-terms", type=int, default=40, help="series terms for the absorbing radius")
    p.add_argument("--fit-floor", type=float, default=1e-13, help="ignore distances below this in the slope fit")
    p.add_argument("--json", default="attractor.json")

    p = command("sir", "SIR model algebra, certificates and noise threshold")
    for name, default in (("q", 1.0), ("a", 2.0), ("b", 0.1), ("c", 0.1), ("gamma", 0.05),
                          ("sigma1", 0.0), ("sigma2", 0.0), ("sigma3", 0.0)):
        p.add_argument(f"--{name}", type=float, default=default)
    p.add_argument("--hurst", type=float, default=0.7)
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    p.add_argument("--pairs", type=int, default=1000)
    p.add_argument("--json", default="sir.json")

    p = command("suite", "run the acceptance experiments")
    p.add_argument("--only", type=_ints, help="comma-separated check numbers (default: all)")
    p.add_argument("--json", default="suite.json")
    return parser


def _threads(args) -> int:
    if getattr(args, "threads", None) is not None:
        n = args.threads
    else:
        env = os.environ.get(THREADS_ENV)
        try:
            n = int(env) if env else 1
        except ValueError:
            raise DomainError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    if n < 1:
        raise DomainError(f"threads must be >= 1, got {n}")
    return n


def _omega(args):
    paths = read_paths_csv(args.omega)
    if not 0 <= args.column < len(paths):
        raise DomainError(f"--column {args.column} out of range; file has {len(paths)} paths")
    return paths[args.column]


def _window(args, path):
    a = path.t0 if args.t_from is None else args.t_from
    b = path.t_end if args.t_to is None else args.t_to
    return (a, b)


def _cmd_fbm(args, out):
    if args.count < 1:
        raise DomainError(f"--count must be positive, got {args.count}")
    spec = FbmSpec(args.hurst, args.horizon, args.steps_per_unit, args.seed)
    paths = generate_ensemble(spec, args.count, one_sided=args.one_sided, threads=args.threads)
    target = out(args.out)
    write_paths_csv(target, paths)
    return EXIT_OK, [target]


def _cmd_pvar(args, out):
    w = _omega(args)
    tic = time.perf_counter()
    res = pvar_seminorm(w, args.p, _window(args, w))
    # wall time stays on stdout so the report remains bit-reproducible
    print(f"p-variation {res.value!r} in {time.perf_counter() - tic:.3f}s")
    target = out(args.json)
    write_json(target, {"p": res.p, "interval": res.interval, "value": res.value,
                        "argmax_indices": list(res.argmax_partition),
                        "partition_times": w.times[list(res.argmax_partition)]})
    return EXIT_OK, [target]


def _cmd_young(args, out):
    w = _omega(args)
    if args.integrand:
        xs = read_paths_csv(args.integrand)
        if not 0 <= args.integrand_column < len(xs):
            raise DomainError("--integrand-column out of range")
        x = xs[args.integrand_column]
    else:
        x = w
    q = args.p if args.q is None else args.q
    window = _window(args, w)
    value = young_integral(x, w, window)
    cert = young_loeve_certify(x, w, window, args.p, q, slack=args.slack)
    target = out(args.json)
    write_json(target, {"interval": window, "value": value, "certificate": {
        "lhs": cert.lhs, "rhs": cert.rhs, "K": cert.K, "p": cert.p, "q": cert.q, "violated": cert.violated}})
    return (EXIT_FINDING if cert.violated else EXIT_OK), [target]


def _cmd_solve(args, out):
    model = load_model(args.model)
    w = _omega(args)
    traj = solve_young_sde(model.coeffs, w, args.x0, _window(args, w), args.substeps)
    target = out(args.out)
    write_trajectory_csv(target, traj)
    return EXIT_OK, [target]


def _cmd_stability(args, out):
    model = load_model(args.model)
    w = _omega(args)
    rep = criterion_report(model.coeffs, w, args.m, args.p, args.q, h0=args.h0, x0=args.x0)
    target = out(args.json)
    write_json(target, rep.to_dict())
    return (EXIT_OK if rep.verdict else EXIT_FINDING), [target]


def _parse_cube(text: str, d: int, center):
    parts = text.split(":")
    if len(parts) != 3 or parts[0] != "cube":
        raise DomainError(f"--x0-grid must look like cube:<half-width>:<count>, got {text!r}")
    half = float(parts[1])
    count = int(parts[2])
    k = round(count ** (1.0 / d))
    if k < 2 or k**d != count:
        raise DomainError(f"cube count {count} is not k^{d} for an integer k >= 2")
    c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    if c.shape != (d,):
        raise DomainError(f"--x0-center needs {d} values")
    return att.cube_points(c, half, k)


def _cmd_attractor(args, out):
    model = load_model(args.model)
    coeffs = model.coeffs
    if not coeffs.autonomous:
        raise DomainError("attractor reports need constant A and C")
    w = _omega(args)
    p = args.p if args.p is not None else (default_p(args.hurst) if args.hurst is not None else None)
    if p is None:
        raise DomainError("give --p or --hurst")
    if args.q0 is not None:
        q0 = args.q0
    elif args.hurst is not None:
        q0 = att.beta_floor(args.hurst, p)
    else:
        raise DomainError("give --q0 or --hurst")
    beta = att.beta_bound(q0, args.hurst, p)
    A, C = coeffs.constant_drift, coeffs.constant_diffusion
    K = k_constant(p, p)
    params = KappaParams.from_matrices(A, C, p, p, args.delta)
    h_A, c_f = coeffs.h(0.0), coeffs.f(0.0)
    h, ok = att.attractor_criterion(h_A, c_f, args.delta, op_norm(C), p, K, params.G, beta)
    n_terms = min(args.n_terms, int(math.floor(1 - w.t0 + 1e-9)))
    if n_terms < 1:
        raise DomainError("the driver must cover [-1, 1] at least for the absorbing radius")
    b = att.absorbing_radius(w, coeffs, args.delta, n_terms, p, h=h)
    kb = att.block_kappas(w, params, -(n_terms - 1), n_terms)[::-1]
    xi = att.kappa_series(kb, h, 2 ** (p + 1) * att.noise_weight(op_norm(C), p))
    x0 = _parse_cube(args.x0_grid, coeffs.dim, args.x0_center)
    rep = att.pullback_experiment(coeffs, w, x0, args.times, b_radius=b.value, fit_floor=args.fit_floor, h=h,
                                  delta=args.delta, criterion_ok=ok, b_partial=b.partial, xi_partial=xi.partial)
    payload = rep.to_dict()
    payload.update({"p": p, "q0": q0, "beta": beta, "K": K, "G": params.G, "h_A": h_A, "c_f": c_f,
                    "criterion_rhs": att.attractor_rhs(args.delta, op_norm(C), p, K, params.G, beta),
                    "b_truncated_at": b.truncated_at, "b_converged": b.converged})
    target = out(args.json)
    write_json(target, payload)
    return (EXIT_OK if ok else EXIT_FINDING), [target]


def _cmd_sir(args, out):
    params = SirParams(args.q, args.a, args.b, args.c, args.gamma, args.sigma1, args.sigma2, args.sigma3)
    system = sir_build(params)
    rng = np.random.default_rng(args.seed)
    lip = lipschitz_certificate(system.original.F, 3, rng, args.pairs)
    lip1 = lipschitz_certificate(system.transformed.F, 3, rng, args.pairs,
                                 sampler=lambda r: system.to_transformed(r.uniform(0.0, 1.0, 3)))
    p = default_p(args.hurst)
    K = k_constant(p, p)
    beta = att.beta_bound(att.beta_floor(args.hurst, p), args.hurst, p)
    h_A = args.a
    c_f = 4 * math.sqrt(3) * args.gamma
    payload = {
        "params": params.to_dict(), "A": system.original.constant_drift, "D": system.D, "P": system.P,
        "Pinv": system.Pinv, "C": system.original.constant_diffusion,
        "C_transformed": system.transformed.constant_diffusion,
        "reconstruction_error": float(np.abs(system.P @ system.D @ system.Pinv - system.original.constant_drift).max()),
        "P_condition": op_norm(system.P) * op_norm(system.Pinv),
        "lipschitz_original": lip, "lipschitz_transformed": lip1,
        "p": p, "K": K, "beta": beta, "h_A": h_A, "c_f": c_f, "delta": args.delta,
    }
    ok = False
    if h_A > c_f:
        c_norm = 4 * params.sigma_max
        G = KappaParams.from_matrices(system.D, np.eye(3) * c_norm, p, p, args.delta).G
        h, ok = att.attractor_criterion(h_A, c_f, args.delta, c_norm, p, K, G, beta)
        G0 = KappaParams.from_matrices(system.D, np.zeros((3, 3)), p, p, args.delta).G
        payload.update({"h": h, "criterion_ok": ok,
                        "sigma_threshold": att.largest_admissible_scale(h, args.delta, p, K, G0, beta, 4.0)})
    else:
        payload.update({"h": None, "criterion_ok": False, "sigma_threshold": None})
    target = out(args.json)
    write_json(target, payload)
    return (EXIT_OK if ok else EXIT_FINDING), [target]


def _cmd_suite(args, out):
    if args.only:
        unknown = sorted(set(args.only) - set(CHECKS))
        if unknown:
            raise DomainError(f"unknown check numbers {unknown}; valid 1..{len(CHECKS)}")
    results = run_checks(args.only)
    for r in results:
        print(r.line())
    target = out(args.json)
    write_json(target, {str(r.number): {"title": r.title, "passed": r.passed,
                                        "details": {k: v for k, v in r.details.items() if k != "report"}}
                        for r in results})
    return (EXIT_OK if all(r.passed for r in results) else EXIT_FINDING), [target]


COMMANDS = {
    "fbm": _cmd_fbm,
    "pvar": _cmd_pvar,
    "young": _cmd_young,
    "solve": _cmd_solve,
    "stability": _cmd_stability,
    "attractor": _cmd_attractor,
    "sir": _cmd_sir,
    "suite": _cmd_suite,
}

_VOLATILE = {"out_dir", "threads"}


def _versions() -> dict:
    import numba
    import scipy

    return {"youngflow": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__}


def _write_manifest(out_dir: Path, args, outputs) -> Path:
    echo = {k: v for k, v in sorted(vars(args).items()) if k not in _VOLATILE}
    files = {str(Path(f).relative_to(out_dir)) if Path(f).is_relative_to(out_dir) else str(f): file_sha256(f)
             for f in outputs}
    body = {"command": args.command, "arguments": echo, "versions": _versions(), "outputs": files}
    digest = hashlib.sha256(json.dumps(body, sort_keys=True, default=str).encode()).hexdigest()
    body["hash"] = digest
    target = out_dir / f"{args.command}.manifest.json"
    write_json(target, body)
    return target


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name, default in (("seed", 0), ("out_dir", ".")):
        if getattr(args, name, None) is None:
            setattr(args, name, default)
    try:
        args.threads = _threads(args)
        if not 0 <= args.seed < 2**64:
            raise DomainError("--seed must be a 64-bit unsigned integer")
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

        def out(name):
            return out_dir / name

        code, outputs = COMMANDS[args.command](args, out)
        manifest = _write_manifest(out_dir, args, outputs)
    except (YoungflowError, ValueError, ArithmeticError, MemoryError, OSError, KeyError) as exc:
        print(f"youngflow {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for f in outputs:
        print(f"wrote {f}")
    print(f"manifest {manifest}")
    return code


if __name__ == "__main__":
    sys.exit(main())
