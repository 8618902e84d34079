"""Command-line experiment runner.

Subcommands: ``run`` (config-driven experiment), ``verify`` (oracle and
invariant suites), ``dist`` (distance between two measure files),
``splice`` (build a spliced measure), ``scenery`` (orbit distribution of a
measure file). Output goes to --out, the SCENERYFLOW_OUT environment
variable, or the working directory.

Exit codes: 0 success, 1 assertion failure, 2 usage or config error,
3 resolution/budget violation.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .cp import check_intensity_lebesgue, check_m_invariance, cp_scenery
from .distribution import dirac, save_distribution
from .dyadic import Word
from .errors import ConditionOnNull, ResolutionExceeded, SceneryFlowError
from .experiments import run_experiment, validate_config
from .measure import DyadicMeasure, lebesgue, load_measure, save_measure
from .metric import (
    AtomicCloud,
    bl_distance,
    brute_force_bl,
    measure_distance,
    project,
    sup_norm_ground,
)
from .splice import SpliceSchedule, brute_force_splice, load_schedule, splice_measures

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3


def _out_dir(args) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    env = os.environ.get("SCENERYFLOW_OUT")
    return Path(env) if env else Path.cwd()


def _parse_word(text: str, dim: int) -> Word:
    if "," in text:
        digits = tuple(int(v) for v in text.split(","))
    else:
        digits = tuple(int(ch) for ch in text.strip())
    return Word(digits, dim)


# -- verify suites ------------------------------------------------------------------


def _record(check: str, resolution_p, value: float, slack: float, seed: int, ok: bool) -> dict:
    return {
        "check": check,
        "resolution_p": resolution_p,
        "value": float(value),
        "slack_budget": float(slack),
        "seed": seed,
        "pass": ok,
    }


def _suite_metric_oracle(seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    checks = []
    grid_step = 0.05
    worst = -math.inf
    for _ in range(60):
        n = int(rng.integers(2, 4))
        pts = rng.integers(-8, 9, size=(n, 1)) / 4.0
        c = rng.normal(size=n)
        ground = sup_norm_ground(pts)
        lp = bl_distance(AtomicCloud(c), ground)
        oracle = brute_force_bl(AtomicCloud(c), ground, grid_step)
        tol = grid_step * float(np.abs(c).sum()) + 1e-9
        worst = max(worst, (lp - oracle) - tol, -(lp - oracle) - 1e-9)
    checks.append(_record("lp-vs-grid-oracle", None, worst, 0.0, seed, worst <= 0.0))
    two = bl_distance(AtomicCloud([1.0, -1.0], [[0.0], [0.75]]))
    checks.append(_record("two-atom-short", None, two - 0.75, 1e-9, seed, abs(two - 0.75) <= 1e-9))
    far = bl_distance(AtomicCloud([1.0, -1.0], [[0.0], [5.0]]))
    checks.append(_record("two-atom-capped", None, far - 2.0, 1e-9, seed, abs(far - 2.0) <= 1e-9))
    return checks


def _suite_splice_oracle(seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    checks = []
    for trial in range(20):
        dim = int(rng.integers(1, 3))
        comps = []
        for _ in range(3):
            base = 1 << dim
            m = rng.random(base**4)
            comps.append(DyadicMeasure(dim, m / m.sum()))
        schedule = SpliceSchedule.plain([2, 2, 2])
        out_depth = int(rng.integers(3, 7 - dim))
        fast = splice_measures(comps, schedule, out_depth)
        slow = brute_force_splice(comps, schedule, out_depth)
        gap = float(np.max(np.abs(fast.masses - slow.masses)))
        checks.append(_record(f"splice-leafwise-{trial}", None, gap, 1e-12, seed, gap <= 1e-12))
    return checks


def _suite_invariance(seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    mu = lebesgue(1, 10)
    word = Word(tuple(int(v) for v in rng.integers(0, 2, size=8)), 1)
    q = cp_scenery(mu, word, 4, fingerprint_depth=3)
    checks = []
    marg = q.measure_marginal()
    checks.append(
        _record("uniform-orbit-single-atom", 3, float(len(marg)), 1.0, seed, len(marg) == 1)
    )
    gap = check_intensity_lebesgue(marg, 3)
    checks.append(_record("uniform-intensity", 3, gap, 1e-12, seed, gap <= 1e-12))
    inv = check_m_invariance(q, 2)
    bound = 4.0 / 4 + 1e-9
    checks.append(_record("orbit-telescoping", 2, inv, bound, seed, inv <= bound))
    return checks


def _suite_bounds(seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    checks = []
    for trial in range(10):
        m = rng.random(2**6)
        mu = DyadicMeasure(1, m / m.sum())
        for k in (1, 2, 3):
            pts_k, m_k = project(mu, k)
            pts_f, m_f = project(mu, 6)
            cloud = AtomicCloud(np.concatenate([m_k, -m_f]), np.vstack([pts_k, pts_f]))
            val = bl_distance(cloud)
            bound = math.sqrt(1.0) * 2.0**-k + 1e-9
            checks.append(_record(f"projection-{trial}-k{k}", k, val, bound, seed, val <= bound))
    return checks


VERIFY_SUITES = {
    "metric-oracle": _suite_metric_oracle,
    "splice-oracle": _suite_splice_oracle,
    "invariance": _suite_invariance,
    "bounds": _suite_bounds,
}


# -- subcommand handlers --------------------------------------------------------------


def _cmd_run(args) -> int:
    try:
        with open(args.config) as fh:
            config = json.load(fh)
        validate_config(config)
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    manifest = run_experiment(config, _out_dir(args))
    print(json.dumps(manifest["summary"], sort_keys=True))
    summary = manifest["summary"]
    flags = [v for v in summary.values() if isinstance(v, bool)]
    return EXIT_OK if all(flags) else EXIT_FAIL


def _cmd_verify(args) -> int:
    suite = VERIFY_SUITES.get(args.suite)
    if suite is None:
        print(f"unknown suite {args.suite!r}; choose from {sorted(VERIFY_SUITES)}", file=sys.stderr)
        return EXIT_USAGE
    checks = suite(args.seed)
    ok = all(c["pass"] for c in checks)
    report = {"suite": args.suite, "seed": args.seed, "pass": ok, "checks": checks}
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_dist(args) -> int:
    mu = load_measure(args.measure_a)
    nu = load_measure(args.measure_b)
    value = measure_distance(mu, nu, args.p)
    record = {
        "distance": float(value),
        "resolution_p": args.p,
        "projection_slack": math.sqrt(mu.dim) * 2.0**-args.p,
    }
    print(json.dumps(record, sort_keys=True))
    return EXIT_OK


def _cmd_splice(args) -> int:
    schedule = load_schedule(args.schedule)
    comps = [load_measure(path) for path in args.components]
    out = splice_measures(comps, schedule, args.depth)
    out_path = _out_dir(args) / (args.name or "spliced_measure.json")
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_measure(out, out_path)
    print(json.dumps({"written": str(out_path), "depth": out.depth}, sort_keys=True))
    return EXIT_OK


def _cmd_scenery(args) -> int:
    mu = load_measure(args.measure)
    word = _parse_word(args.x, mu.dim)
    q = cp_scenery(mu, word, args.N, fingerprint_depth=args.p)
    out_path = _out_dir(args) / (args.name or "scenery_distribution.json")
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_distribution(q, out_path)
    print(
        json.dumps(
            {"written": str(out_path), "atoms": len(q), "resolution_p": args.p}, sort_keys=True
        )
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sceneryflow", description="dyadic magnification experiments"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a config-driven experiment")
    p_run.add_argument("config")
    p_run.add_argument("--out", help="output directory")
    p_run.set_defaults(fn=_cmd_run)

    p_verify = sub.add_parser("verify", help="run a verification suite")
    p_verify.add_argument("suite")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.set_defaults(fn=_cmd_verify)

    p_dist = sub.add_parser("dist", help="distance between two measure files")
    p_dist.add_argument("measure_a")
    p_dist.add_argument("measure_b")
    p_dist.add_argument("--p", type=int, required=True, help="resolution level")
    p_dist.set_defaults(fn=_cmd_dist)

    p_splice = sub.add_parser("splice", help="splice component measure files")
    p_splice.add_argument("schedule")
    p_splice.add_argument("components", nargs="+")
    p_splice.add_argument("--depth", type=int, required=True)
    p_splice.add_argument("--out", help="output directory")
    p_splice.add_argument("--name", help="output file name")
    p_splice.set_defaults(fn=_cmd_splice)

    p_scenery = sub.add_parser("scenery", help="orbit distribution of a measure file")
    p_scenery.add_argument("measure")
    p_scenery.add_argument("--x", required=True, help="point address digits")
    p_scenery.add_argument("--N", type=int, required=True, help="orbit length")
    p_scenery.add_argument("--p", type=int, default=4, help="fingerprint depth")
    p_scenery.add_argument("--out", help="output directory")
    p_scenery.add_argument("--name", help="output file name")
    p_scenery.set_defaults(fn=_cmd_scenery)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ResolutionExceeded, ConditionOnNull) as exc:
        print(f"budget violation: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (SceneryFlowError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
