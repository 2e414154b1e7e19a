"""Command-line front end.

Subcommands: lexmax, fill, solve, stability, converge, reproduce.

Configuration comes from an optional JSON file (--config) with flags
overriding file values; the LEXOPT_SEED environment variable overrides the
config seed (an explicit --seed flag beats both). Every CSV written has a
header row, comma separators, UNIX newlines, and floats at 17 significant
digits, so identical configs and seeds produce byte-identical output.

Exit codes: 0 success, 1 reproduction-criterion failure, 2 usage error.

Config schema (all keys optional unless a command needs them)::

    {
      "set": {"kind": "finite",   "points":   [[5,2,4],[2,6,3],[8,7,1]]}
             {"kind": "polytope", "columns":  [[5,2,4],[2,6,3]]}
             {"kind": "path",     "vertices": [[0,0],[1,1]]}
             {"kind": "curved3"}
             {"kind": "unstable_path", "n": 8}
             {"kind": "rate_segment", "n": 3, "k": 3, "a": 1.0}
             {"kind": "closeness_triple", "eps": 0.5},
      "eps": 0.05, "c": 2.0, "gamma": 0.0, "eta": 1.0,
      "iterations": 300, "schedule": "fw" | "c/t" | "constant",
      "resolution": 600, "refine_iters": 0,
      "selector": "best" | "adversarial",
      "eps_list": [0.2, 0.1], "c_list": [1, 2, 4],
      "seed": 0, "out": "out.csv", "only": ["equivalence"]
    }
"""

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from .order import lexmax_finite, sort_components
from .sets import CurvedSet3, FiniteSet, GroundSet, VPolytope, PolyPath
from .filling import BudgetError, SolveBudget, budget_for_eps, run_fill
from .expmin import frank_wolfe, multiplicative_weights
from .lab import (
    convergence_curve,
    make_closeness_triple,
    make_rate_segment,
    make_unstable_path,
    reference_lexmax,
    stability_curve,
)
from . import acceptance
from .util import csv_lines, fmt


class UsageError(ValueError):
    pass


def build_set(spec) -> GroundSet:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise UsageError("set specification must be an object with a 'kind' key")
    kind = spec["kind"]
    try:
        if kind == "finite":
            return FiniteSet(np.array(spec["points"], dtype=float))
        if kind == "polytope":
            return VPolytope.from_columns(spec["columns"])
        if kind == "path":
            return PolyPath(np.array(spec["vertices"], dtype=float))
        if kind == "curved3":
            return CurvedSet3()
        if kind == "unstable_path":
            return make_unstable_path(int(spec["n"]))
        if kind == "rate_segment":
            return make_rate_segment(int(spec["n"]), int(spec["k"]), float(spec["a"]))
        if kind == "closeness_triple":
            return make_closeness_triple(float(spec["eps"]))
    except UsageError:
        raise
    except (KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"bad {kind!r} set specification: {exc}") from exc
    raise UsageError(f"unknown set kind {kind!r}")


def default_resolution(S: GroundSet) -> int:
    if isinstance(S, FiniteSet):
        return 1
    if isinstance(S, PolyPath):
        return 600
    if isinstance(S, VPolytope):
        return 40
    return 80  # curved set, per axis


def make_budget(S: GroundSet, cfg) -> SolveBudget:
    refine = int(cfg.get("refine_iters", 0))
    if cfg.get("resolution") is not None:
        return SolveBudget(resolution=int(cfg["resolution"]), refine_iters=refine)
    res = default_resolution(S)
    eps = float(cfg.get("eps", 0.0) or 0.0)
    if eps > 0 and not isinstance(S, FiniteSet):
        res = max(res, budget_for_eps(S, eps).resolution)
    return SolveBudget(resolution=res, refine_iters=refine)


def point_str(x) -> str:
    return "(" + ",".join(fmt(float(v)) for v in np.asarray(x)) + ")"


def write_atomic(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_config(args) -> dict:
    cfg = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
    # environment seed overrides the file; an explicit flag beats both
    env_seed = os.environ.get("LEXOPT_SEED")
    if env_seed is not None:
        try:
            cfg["seed"] = int(env_seed)
        except ValueError as exc:
            raise UsageError(f"LEXOPT_SEED must be an integer, got {env_seed!r}") from exc
    for key in ("set", "eps", "c", "gamma", "eta", "iterations", "schedule",
                "resolution", "refine_iters", "selector", "eps_list", "c_list",
                "seed", "out", "only"):
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            cfg[key] = val
    return cfg


def require_set(cfg) -> GroundSet:
    if "set" not in cfg:
        raise UsageError("no set specified (config key 'set' or --set)")
    spec = cfg["set"]
    if isinstance(spec, str):
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise UsageError(f"--set must be JSON: {exc}") from exc
    return build_set(spec)


def cmd_lexmax(cfg) -> int:
    S = require_set(cfg)
    budget = make_budget(S, cfg)
    if isinstance(S, FiniteSet):
        maxima = lexmax_finite(S.points)
    else:
        maxima = [run_fill(S, 0.0, budget).final]
    for x in maxima:
        print(f"lexmax {point_str(x)} sorted {point_str(sort_components(x).values)}")
    return 0


def cmd_fill(cfg) -> int:
    S = require_set(cfg)
    budget = make_budget(S, cfg)
    eps = float(cfg.get("eps", 0.0))
    selector = cfg.get("selector", "best")
    trace = run_fill(S, eps, budget, selector=selector)
    text = csv_lines(("k", "value", "sup_estimate", "eps"), trace.csv_rows())
    out = cfg.get("out")
    if out:
        write_atomic(out, text)
        print(f"wrote {out} (final {point_str(trace.final)}, slack {fmt(trace.slack)})")
    else:
        sys.stdout.write(text)
    return 0


def cmd_solve(cfg) -> int:
    S = require_set(cfg)
    if not isinstance(S, (VPolytope, PolyPath)):
        raise UsageError("solve needs a polytope (or a path, taken as its vertex hull)")
    P = S if isinstance(S, VPolytope) else VPolytope(S.vertices.T)
    schedule = cfg.get("schedule", "fw")
    T = int(cfg.get("iterations", 300))
    if schedule == "fw":
        run = frank_wolfe(P, float(cfg.get("c", 1.0)), T)
    elif schedule == "c/t":
        run = multiplicative_weights(P, "c/t", float(cfg.get("c", 1.0)), T)
    elif schedule == "constant":
        run = multiplicative_weights(P, "constant", float(cfg.get("eta", 1.0)), T)
    else:
        raise UsageError(f"unknown schedule {schedule!r} (fw | c/t | constant)")
    budget = make_budget(P, cfg)
    ref = reference_lexmax(P, budget)
    M = P.generators
    dists = np.abs(M @ run.qbar_history.T - ref[:, None]).max(axis=0)
    header = (["t", "schedule", "choice", "gap", "dist_to_lexmax"]
              + [f"qbar_{j}" for j in range(P.n_cols)])
    rows = []
    for t in range(T):
        rows.append([t + 1, run.schedule, int(run.choices[t]), run.gap_history[t],
                     float(dists[t])] + [float(v) for v in run.qbar_history[t]])
    text = csv_lines(tuple(header), rows)
    out = cfg.get("out")
    if out:
        write_atomic(out, text)
        print(f"wrote {out} (final dist {fmt(float(dists[-1]))})")
    else:
        sys.stdout.write(text)
    return 0


def _known_floor(spec) -> float:
    if isinstance(spec, dict):
        if spec.get("kind") == "unstable_path":
            return 0.5
        if spec.get("kind") == "curved3":
            return 0.25
    return None


def cmd_stability(cfg) -> int:
    S = require_set(cfg)
    budget = make_budget(S, cfg)
    eps_list = cfg.get("eps_list") or [0.2, 0.1, 0.05, 0.025]
    name = cfg["set"]["kind"] if isinstance(cfg.get("set"), dict) else "set"
    records = stability_curve(S, [float(e) for e in eps_list], budget,
                              set_name=name, floor=_known_floor(cfg.get("set")))
    text = csv_lines(records[0].CSV_HEADER, [r.csv_row() for r in records])
    out = cfg.get("out")
    if out:
        write_atomic(out, text)
        print(f"wrote {out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_converge(cfg) -> int:
    S = require_set(cfg)
    budget = make_budget(S, cfg)
    c_list = [float(c) for c in (cfg.get("c_list") or [1, 2, 4, 8, 16])]
    gamma = float(cfg.get("gamma", 0.0))
    spec = cfg.get("set")
    rate_params = None
    if isinstance(spec, dict) and spec.get("kind") == "rate_segment":
        rate_params = (int(spec["k"]), float(spec["a"]))
    name = spec["kind"] if isinstance(spec, dict) else "set"
    records = convergence_curve(S, c_list, gamma, budget, set_name=name,
                                rate_params=rate_params)
    text = csv_lines(records[0].CSV_HEADER, [r.csv_row() for r in records])
    out = cfg.get("out")
    if out:
        write_atomic(out, text)
        print(f"wrote {out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_reproduce(cfg) -> int:
    seed = int(cfg.get("seed", 0))
    only = cfg.get("only")
    if isinstance(only, str):
        only = [s for s in only.split(",") if s]
    outdir = cfg.get("out") or "reproduction"
    try:
        results = acceptance.run_all(seed=seed, only=only)
    except KeyError as exc:
        raise UsageError(str(exc)) from exc
    summary_rows = []
    failures = []
    for res in results:
        write_atomic(os.path.join(outdir, f"{res.name}.csv"),
                     csv_lines(res.header, res.rows))
        status = "PASS" if res.passed else "FAIL"
        print(f"{status} {res.name}: {res.detail} [{res.seconds:.1f}s]")
        summary_rows.append((res.name, res.passed, res.seconds, res.detail))
        if not res.passed:
            failures.append(res.name)
    write_atomic(os.path.join(outdir, "summary.csv"),
                 csv_lines(("criterion", "pass", "seconds", "detail"), summary_rows))
    if failures:
        print(f"FAILED criteria: {', '.join(failures)}", file=sys.stderr)
        return 1
    print(f"all {len(results)} criteria passed; CSVs in {outdir}/")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lexopt",
        description="Lexicographic maximization: filling, loss minimization, experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_set=True):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output CSV path (or directory for reproduce)")
        p.add_argument("--resolution", type=int, default=None)
        p.add_argument("--refine-iters", dest="refine_iters", type=int, default=None)
        if with_set:
            p.add_argument("--set", default=None, help="inline JSON set specification")

    p = sub.add_parser("lexmax", help="print the lexicographic maximum of a set")
    common(p)
    p = sub.add_parser("fill", help="run progressive filling, write the round trace")
    common(p)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--selector", choices=("best", "adversarial"), default=None)
    p = sub.add_parser("solve", help="run Frank-Wolfe / multiplicative weights on a polytope")
    common(p)
    p.add_argument("--schedule", choices=("fw", "c/t", "constant"), default=None)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p = sub.add_parser("stability", help="sweep eps, certifying worst-case output distortion")
    common(p)
    p.add_argument("--eps-list", dest="eps_list", type=float, nargs="+", default=None)
    p = sub.add_parser("converge", help="sweep c, measuring near-minimizer distortion")
    common(p)
    p.add_argument("--c-list", dest="c_list", type=float, nargs="+", default=None)
    p.add_argument("--gamma", type=float, default=None)
    p = sub.add_parser("reproduce", help="run the full reproduction harness")
    common(p, with_set=False)
    p.add_argument("--only", default=None, help="comma-separated criterion names")
    return parser


COMMANDS = {
    "lexmax": cmd_lexmax,
    "fill": cmd_fill,
    "solve": cmd_solve,
    "stability": cmd_stability,
    "converge": cmd_converge,
    "reproduce": cmd_reproduce,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg)
    except (UsageError, BudgetError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
