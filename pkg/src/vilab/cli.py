"""Command-line harness: configure runs, execute comparisons, emit traces.

Subcommands: run, compare, sdp-check, estimate-wm, selftest.
Exit codes: 0 success, 1 invariant failure, 2 configuration error.

Traces are CSVs with the fixed header
    iter,fevals,alpha,grad_norm,min_grad_norm_sq,gap,dist,wall_ms
(empty fields where a metric is unavailable), numbers in round-trip-exact
decimal form so traces diff cleanly across runs and languages.  2-D
problems additionally get a `<name>.path.csv` (iter,x,y) for trajectory
plots.  A summary JSON collects final metrics and invariant verdicts.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .certificate import PAPER_G11, factorization_search, paper_instance, solve_certificate, verify_feasible
from .core import Algorithm, Alpha0Policy, ConfigError, SolverConfig, Trace, VIProblem
from .metrics import admissible_phi_bound, ball_gap_around_solution, dual_gap, estimate_weak_minty_params
from .problems import (
    load_matrix_csv,
    make_forsaken,
    make_lower_bound,
    make_matrix_game,
    make_polar_game,
    make_qp_lagrangian,
)
from .solvers import run as run_solver

CSV_HEADER = "iter,fevals,alpha,grad_norm,min_grad_norm_sq,gap,dist,wall_ms"

DEFAULT_STARTS = {
    "polar": (0.9, 0.9),
    "forsaken": (0.5, 0.5),
    "lower-bound": (1.0, 1.0),
}


def _fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if np.isnan(x):
        return ""
    return repr(x)


def default_seed(args_seed) -> int:
    if args_seed is not None:
        return args_seed
    env = os.environ.get("VI_LAB_SEED")
    return int(env) if env else 0


def build_problem(ns) -> VIProblem:
    name = ns.problem
    seed = default_seed(ns.seed)
    if name == "matrix-game":
        if getattr(ns, "matrix_csv", None):
            return make_matrix_game(A=load_matrix_csv(ns.matrix_csv))
        return make_matrix_game(kind=ns.kind, d=ns.d, seed=seed)
    if name == "qp":
        rng = np.random.default_rng(seed + 1)
        planted = (rng.standard_normal(ns.d), rng.standard_normal(ns.d))
        return make_qp_lagrangian(d=ns.d, planted=planted, seed=seed)
    if name == "forsaken":
        return make_forsaken()
    if name == "polar":
        return make_polar_game(a=ns.a)
    if name == "lower-bound":
        return make_lower_bound(a=ns.a, b=ns.b)
    raise ConfigError(f"unknown problem {name!r} (field: problem)")


def attach_lipschitz(problem: VIProblem, ns) -> VIProblem:
    from dataclasses import replace

    if getattr(ns, "lipschitz", None):
        return replace(problem, lipschitz=ns.lipschitz)
    if getattr(ns, "estimate_l", None):
        L_hat, rho_hat = estimate_weak_minty_params(problem, grid_n=ns.estimate_l)
        return replace(problem, lipschitz=L_hat, rho=rho_hat)
    return problem


def parse_solver_spec(spec: str) -> dict:
    """'agraal,phi=1.2,gamma=1.1' -> {'algorithm': 'agraal', 'phi': 1.2, ...}"""
    parts = spec.split(",")
    out = {"algorithm": parts[0].strip()}
    for p in parts[1:]:
        if not p.strip():
            continue
        k, _, v = p.partition("=")
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def make_config(d: dict, seed: int) -> SolverConfig:
    algo = Algorithm(d["algorithm"])
    kw = {"algorithm": algo, "seed": seed}
    floats = ["phi", "gamma", "alpha", "epsilon", "alpha0", "second_step_factor",
              "alpha_max", "nu", "tau", "grad_tol"]
    for k, v in d.items():
        if k == "algorithm":
            continue
        if k in ("max_iters", "iters"):
            kw["max_iters"] = int(v)
        elif k == "alpha0_policy":
            kw["alpha0_policy"] = Alpha0Policy(v)
        elif k in floats:
            kw[k] = float(v)
        else:
            raise ConfigError(f"unknown solver option {k!r} (field: {k})")
    if algo is Algorithm.AGRAAL and "alpha0" in kw and "alpha0_policy" not in kw:
        kw["alpha0_policy"] = Alpha0Policy.FIXED
    if "phi" not in kw and algo in (Algorithm.GRAAL_FIXED, Algorithm.GRAAL_WM):
        kw["phi"] = 2.0 if algo is Algorithm.GRAAL_FIXED else 1.2
    return SolverConfig(**kw)


def solver_label(cfg: SolverConfig) -> str:
    bits = [cfg.algorithm.value.replace("+", "plus")]
    if cfg.algorithm in (Algorithm.GRAAL_FIXED, Algorithm.GRAAL_WM, Algorithm.AGRAAL):
        bits.append(f"phi{cfg.phi:g}")
    if cfg.algorithm is Algorithm.AGRAAL:
        bits.append(f"gamma{cfg.gamma_value:g}")
    return "-".join(bits).replace(".", "p")


def write_trace_csv(trace: Trace, path: Path) -> None:
    lines = [CSV_HEADER]
    for r in trace.rows:
        lines.append(",".join([
            str(r.iter), str(r.fevals), _fmt(r.alpha), _fmt(r.grad_norm),
            _fmt(r.min_grad_norm_sq), _fmt(r.gap), _fmt(r.dist), _fmt(r.wall_ms),
        ]))
    path.write_text("\n".join(lines) + "\n")


def write_path_csv(trace: Trace, path: Path, record_every: int) -> None:
    lines = ["iter,x,y"]
    Z = trace.history.z
    for k in range(Z.shape[0]):
        if k % record_every == 0 or k == Z.shape[0] - 1:
            lines.append(f"{k},{_fmt(Z[k, 0])},{_fmt(Z[k, 1])}")
    path.write_text("\n".join(lines) + "\n")


def trace_verdicts(trace: Trace) -> dict:
    mins = [r.min_grad_norm_sq for r in trace.rows]
    fe = [r.fevals for r in trace.rows]
    return {
        "feasible_iterates": trace.feasible,
        "min_grad_norm_sq_nonincreasing": all(b <= a + 1e-300 for a, b in zip(mins, mins[1:])),
        "fevals_nondecreasing": all(b >= a for a, b in zip(fe, fe[1:])),
        "diverged": trace.diverged,
    }


def execute_run(problem: VIProblem, cfg: SolverConfig, ns, out_dir: Path) -> dict:
    z0 = None
    if getattr(ns, "z0", None):
        z0 = np.array([float(v) for v in ns.z0.split(",")])
    elif ns.problem in DEFAULT_STARTS:
        z0 = np.array(DEFAULT_STARTS[ns.problem])

    gap_fn = None
    if ns.gap != "off":
        if problem.gap_spec is not None:
            gap_fn = lambda z: dual_gap(problem.gap_spec, problem, z)
        elif ns.gap == "on" and problem.solution is not None:
            start = z0 if z0 is not None else problem.default_start()
            spec = ball_gap_around_solution(problem, start)
            gap_fn = lambda z: dual_gap(spec, problem, z)

    keep_history = problem.dim == 2  # trajectory sidecar
    trace = run_solver(problem, cfg, z0, keep_history=keep_history,
                       gap_fn=gap_fn, record_every=ns.record_every)

    label = solver_label(cfg)
    stem = f"{problem.name}__{label}"
    csv_path = out_dir / f"{stem}.csv"
    write_trace_csv(trace, csv_path)
    if keep_history:
        write_path_csv(trace, out_dir / f"{stem}.path.csv", ns.record_every)

    final = trace.rows[-1]
    return {
        "problem": problem.name,
        "solver": label,
        "csv": str(csv_path),
        "iters": final.iter,
        "fevals": final.fevals,
        "final": {k: v for k, v in asdict(final).items() if k != "wall_ms"},
        "stopped_by_tol": trace.stopped_by_tol,
        "linesearch_fevals": trace.linesearch_fevals,
        "verdicts": trace_verdicts(trace),
    }


def load_manifest(path: str, ns) -> list[dict]:
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    prob = doc.get("problem", {})
    for k, v in prob.items():
        key = k.replace("-", "_")
        if key == "name":
            ns.problem = v
        elif getattr(ns, key, None) in (None, parser_defaults.get(key)):
            setattr(ns, key, v)
    if "record_every" in doc and ns.record_every == 1:
        ns.record_every = int(doc["record_every"])
    if "out" in doc and ns.out == "traces":
        ns.out = doc["out"]
    if "jobs" in doc and ns.jobs == 1:
        ns.jobs = int(doc["jobs"])
    return [{k.replace("-", "_"): v for k, v in s.items()} for s in doc.get("solvers", [])]


def cmd_run(ns) -> int:
    solver_dicts = []
    if ns.manifest:
        solver_dicts.extend(load_manifest(ns.manifest, ns))
    for spec in ns.solver or []:
        solver_dicts.append(parse_solver_spec(spec))
    if ns.iters is not None:
        for d in solver_dicts:
            d["max_iters"] = ns.iters
    if ns.phi is not None:
        for d in solver_dicts:
            d.setdefault("phi", ns.phi)
    if ns.gamma is not None:
        for d in solver_dicts:
            d.setdefault("gamma", ns.gamma)
    if ns.grad_tol is not None:
        for d in solver_dicts:
            d.setdefault("grad_tol", ns.grad_tol)
    if not solver_dicts:
        print("error: no solver given (field: solver)", file=sys.stderr)
        return 2

    if ns.problem is None:
        print("error: no problem given (field: problem)", file=sys.stderr)
        return 2

    seed = default_seed(ns.seed)
    problem = attach_lipschitz(build_problem(ns), ns)
    configs = [make_config(d, seed) for d in solver_dicts]

    out_dir = Path(ns.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    results = []
    if ns.jobs > 1 and len(configs) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=ns.jobs) as pool:
            futs = [pool.submit(execute_run, problem, cfg, ns, out_dir) for cfg in configs]
            results = [f.result() for f in futs]
    else:
        results = [execute_run(problem, cfg, ns, out_dir) for cfg in configs]

    summary = {"problem": problem.name, "seed": seed, "runs": results}
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, default=float) + "\n")

    bad = [r for r in results
           if not all(v for k, v in r["verdicts"].items() if k != "diverged")]
    for r in results:
        flag = " [diverged]" if r["verdicts"]["diverged"] else ""
        print(f"{r['problem']} / {r['solver']}: iters={r['iters']} fevals={r['fevals']} "
              f"grad={_fmt(r['final']['grad_norm'])}{flag} -> {r['csv']}")
    if bad:
        for r in bad:
            print(f"invariant FAILURE in {r['solver']}: {r['verdicts']}", file=sys.stderr)
        return 1
    return 0


def cmd_sdp_check(ns) -> int:
    if ns.tol <= 0:
        print("error: tol must be positive (field: tol)", file=sys.stderr)
        return 2
    inst = paper_instance(cap=ns.cap)
    val, G = solve_certificate(inst, tol=ns.tol)
    oracle = factorization_search(inst)
    feas = verify_feasible(inst, G, tol=1e-8)
    print(f"g11_max = {val:.6f}")
    print("attaining G =")
    for row in G:
        print("   [" + ", ".join(f"{v: .6f}" for v in row) + "]")
    print(f"feasibility check: {'PASS' if feas else 'FAIL'}")
    print(f"factorization oracle: {oracle:.6f} "
          f"({'PASS' if abs(oracle - val) <= 1e-3 else 'FAIL'} within 1e-3)")
    below_cap = val <= ns.cap + ns.tol
    print(f"certificate g11_max <= {ns.cap:g}: {'PASS' if below_cap else 'FAIL'}")
    ok = feas and below_cap and abs(oracle - val) <= 1e-3
    if ns.cap == 2.0:
        ref = abs(val - PAPER_G11) <= 1e-3
        print(f"reference value {PAPER_G11}: {'PASS' if ref else 'FAIL'} (got {val:.5f})")
        ok = ok and ref
    return 0 if ok else 1


def cmd_estimate_wm(ns) -> int:
    if ns.grid_n < 2:
        print("error: grid_n must be >= 2 (field: grid-n)", file=sys.stderr)
        return 2
    try:
        problem = build_problem(ns)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    L_hat, rho_hat = estimate_weak_minty_params(problem, (ns.lo, ns.hi), ns.grid_n)
    phi_max = admissible_phi_bound(L_hat, rho_hat)
    print(f"L_hat   = {L_hat:.6g}")
    print(f"rho_hat = {rho_hat:.6g}")
    print(f"constant-step mode admissible up to phi < {phi_max:.6g} "
          f"(tolerance (2-phi)/(phi L) > rho)")
    return 0


def cmd_selftest(ns) -> int:
    failures = 0

    def check(name, ok):
        nonlocal failures
        print(f"  {'PASS' if ok else 'FAIL'}  {name}")
        failures += 0 if ok else 1

    rng = np.random.default_rng(0)

    from .projections import Simplex
    s = Simplex(dim=6)
    pts = rng.standard_normal((50, 6)) * 2
    proj = np.array([s.project(p) for p in pts])
    check("simplex projections feasible",
          np.all(proj >= -1e-15) and np.allclose(proj.sum(axis=1), 1, atol=1e-12))
    check("simplex idempotent",
          max(np.linalg.norm(s.project(q) - q) for q in proj) <= 1e-12)
    u, v = rng.standard_normal(6), rng.standard_normal(6)
    check("simplex nonexpansive",
          np.linalg.norm(s.project(u) - s.project(v)) <= np.linalg.norm(u - v) + 1e-12)

    from .core import VIProblem as VP
    from .projections import Identity
    d = 10
    B = rng.standard_normal((d, d))
    M = B.T @ B / d + (lambda K: (K - K.T) / 2)(rng.standard_normal((d, d)))
    q = rng.standard_normal(d)
    prob = VP(name="selftest-affine", dim=d, operator=lambda z: M @ z + q,
              projector=Identity(dim=d), lipschitz=float(np.linalg.norm(M, 2)))
    z0 = rng.standard_normal(d)
    alpha = 0.9 / prob.lipschitz
    g = run_solver(prob, SolverConfig(algorithm=Algorithm.GRAAL_FIXED, phi=2.0,
                                      alpha=alpha, max_iters=60), z0, keep_history=True)
    f = run_solver(prob, SolverConfig(algorithm=Algorithm.FORB, alpha=alpha / 2,
                                      max_iters=60), z0, f_prev0=np.zeros(d), keep_history=True)
    check("unconstrained equivalence (anchored vs reflected)",
          float(np.abs(g.history.z - f.history.z).max()) <= 1e-10)
    Bh = g.history.z_bar[1:]
    Z = g.history.z
    ok8 = all(np.allclose(Z[k], Bh[k] + (Bh[k] - Bh[k - 1]), atol=1e-12)
              for k in range(1, len(Bh)))
    check("extrapolation identity", ok8)

    inst = paper_instance()
    val, G = solve_certificate(inst)
    check("certificate value (1.49259 +/- 1e-3)", abs(val - PAPER_G11) <= 1e-3)
    check("certificate feasibility", verify_feasible(inst, G, tol=1e-8))

    a = run_solver(prob, SolverConfig(algorithm=Algorithm.AGRAAL, phi=1.5, max_iters=300),
                   z0, keep_history=True)
    cfg = SolverConfig(algorithm=Algorithm.AGRAAL, phi=1.5)
    check("adaptive steps positive", bool((a.history.alpha > 0).all()))
    check("theta bounded by gamma*phi",
          bool((a.history.theta <= cfg.gamma_value * 1.5 + 1e-12).all()))

    print(f"selftest: {failures} failure(s)")
    return 1 if failures else 0


parser_defaults = {"kind": "random", "d": 50, "a": 1.0 / 3.0, "b": -1.0}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vilab",
                                 description="variational-inequality solver lab")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def add_problem_flags(p):
        p.add_argument("--problem", choices=["matrix-game", "qp", "forsaken", "polar", "lower-bound"])
        p.add_argument("--kind", default="random",
                       choices=["random", "policeman-burglar", "test-matrix"])
        p.add_argument("--d", type=int, default=50)
        p.add_argument("--a", type=float, default=1.0 / 3.0)
        p.add_argument("--b", type=float, default=-1.0)
        p.add_argument("--matrix-csv", help="inject an external payoff matrix (CSV)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--lipschitz", type=float, help="override the Lipschitz constant")
        p.add_argument("--estimate-l", type=int, metavar="GRID_N",
                       help="estimate L (and rho) on a grid before running")

    rp = sub.add_parser("run", help="run one or more solvers on a problem")
    add_problem_flags(rp)
    rp.add_argument("--manifest", help="TOML manifest (flags override file)")
    rp.add_argument("--solver", action="append",
                    help="solver spec, e.g. 'agraal,phi=1.2,gamma=1.1' (repeatable)")
    rp.add_argument("--phi", type=float, default=None)
    rp.add_argument("--gamma", type=float, default=None)
    rp.add_argument("--iters", type=int, default=None)
    rp.add_argument("--grad-tol", type=float, default=None)
    rp.add_argument("--z0", help="comma-separated start point")
    rp.add_argument("--gap", choices=["auto", "on", "off"], default="auto")
    rp.add_argument("--record-every", type=int, default=1)
    rp.add_argument("--out", default="traces")
    rp.add_argument("--jobs", type=int, default=1)
    rp.set_defaults(func=cmd_run)

    cp = sub.add_parser("compare", help="alias of run for multi-solver sweeps")
    for action in rp._actions[1:]:
        cp._add_action(action)
    cp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sdp-check", help="solve the boundedness certificate program")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--cap", type=float, default=2.0)
    sp.set_defaults(func=cmd_sdp_check)

    ep = sub.add_parser("estimate-wm", help="grid-estimate L and rho for a 2-D problem")
    add_problem_flags(ep)
    ep.add_argument("--grid-n", type=int, default=1000)
    ep.add_argument("--lo", type=float, default=-1.1)
    ep.add_argument("--hi", type=float, default=1.1)
    ep.set_defaults(func=cmd_estimate_wm)

    tp = sub.add_parser("selftest", help="quick invariant suites")
    tp.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        return ns.func(ns)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
