"""Acceptance suite: one test per criterion, printing one pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as they
complete. Tolerances are pinned here, not calibrated elsewhere.
"""

import json
import math
import time

import numpy as np
import pytest

from sceneryflow.cp import (
    cp_scenery,
    check_m_invariance,
    interior_window_fraction,
    magnify,
    sample_adapted,
    window_accepts,
)
from sceneryflow.distribution import EmpiricalDistribution, TaggedMeasure, dirac
from sceneryflow.dyadic import Word, word_from_index
from sceneryflow.experiments import run_experiment
from sceneryflow.flow import center
from sceneryflow.measure import DyadicMeasure, ProductMeasure, bernoulli, lebesgue
from sceneryflow.metric import (
    AtomicCloud,
    bl_distance,
    brute_force_bl,
    project,
    sup_norm_ground,
)
from sceneryflow.splice import (
    SpliceSchedule,
    brute_force_splice,
    periodic_splice_QN,
    splice_measures,
)


def report(criterion: str, ok: bool, detail: str) -> None:
    print(f"{criterion} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"{criterion}: {detail}"


def random_measure(rng, dim, depth):
    base = 1 << dim
    m = rng.random(base**depth)
    return DyadicMeasure(dim, m / m.sum())


def test_a1_splicing_exactness():
    """A1: spliced leaf masses = product formula = brute-force marginalization."""
    t0 = time.time()
    rng = np.random.default_rng(101)
    worst = 0.0
    for trial in range(500):
        dim = 1 if trial % 2 == 0 else 2
        max_out = 12 if dim == 1 else 6
        n_blocks = int(rng.integers(2, 5))
        blocks = [int(rng.integers(1, 4)) for _ in range(n_blocks)]
        schedule = SpliceSchedule.plain(blocks)
        out_depth = int(rng.integers(n_blocks, min(max_out, sum(blocks)) + 1))
        comps = [random_measure(rng, dim, b + int(rng.integers(0, 2))) for b in blocks]
        spliced = splice_measures(comps, schedule, out_depth)
        # route 1: brute-force marginalization of the joint product
        slow = brute_force_splice(comps, schedule, out_depth)
        worst = max(worst, float(np.max(np.abs(spliced.masses - slow.masses))))
        # route 2: the product formula, word by word
        base = 1 << dim
        used = []
        rem = out_depth
        for b in blocks:
            if rem <= 0:
                break
            used.append(min(b, rem))
            rem -= b
        for idx in range(base**out_depth):
            w = word_from_index(idx, out_depth, dim)
            mass = 1.0
            pos = 0
            for comp, b in zip(comps, used):
                mass *= comp.word_mass(Word(w.digits[pos : pos + b], dim))
                pos += b
            worst = max(worst, abs(spliced.masses[idx] - mass))
    elapsed = time.time() - t0
    report(
        "A1",
        worst <= 1e-12 and elapsed < 30.0,
        f"500 draws, worst leafwise gap {worst:.2e} (tol 1e-12), {elapsed:.1f}s (< 30s)",
    )


def test_a2_projection_bound():
    """A2: distance between level-k and full-depth projections <= sqrt(d) 2^-k."""
    t0 = time.time()
    rng = np.random.default_rng(202)
    worst_margin = -np.inf
    count = 0
    for trial in range(100):
        dim = 1 if trial < 60 else 2
        depth = 8 if dim == 1 else 5
        mu = random_measure(rng, dim, depth)
        for k in (1, 2, 3, 4):
            pts_k, m_k = project(mu, k)
            pts_f, m_f = project(mu, depth)
            val = bl_distance(
                AtomicCloud(np.concatenate([m_k, -m_f]), np.vstack([pts_k, pts_f]))
            )
            bound = math.sqrt(dim) * 2.0**-k + 1e-9
            worst_margin = max(worst_margin, val - bound)
            count += 1
    elapsed = time.time() - t0
    report(
        "A2",
        worst_margin <= 0.0 and elapsed < 120.0,
        f"{count} projections, worst excess {worst_margin:.2e} (<= 0), {elapsed:.1f}s (< 2min)",
    )


def test_a3_periodic_splice_convergence():
    """A3: periodic-splice integrals approach the mixture within the
    flush-cut bound plus Monte Carlo slack, with the bound decreasing."""
    t0 = time.time()
    manifest = run_experiment(
        {
            "schema_version": 1,
            "experiment": "splice-convergence",
            "seed": 5,
            "params": {"periods": [8, 16, 32, 64], "samples": 10_000, "p": 2},
        },
        "/tmp/sceneryflow-acceptance/a3",
    )
    elapsed = time.time() - t0
    ok = manifest["summary"]["all_within_bound"] and manifest["summary"]["bounds_decreasing"]
    report(
        "A3",
        ok and elapsed < 300.0,
        f"all integrals within bound+3sigma, bounds decreasing, {elapsed:.1f}s (< 5min)",
    )


def test_a4_lebesgue_intensity():
    """A4: all-uniform periodic splice has exactly uniform intensity."""
    worst = 0.0
    for dim in (1, 2):
        p = 4
        rng = np.random.default_rng(44)
        r = dirac(ProductMeasure.lebesgue(dim, 40), p)
        qn = periodic_splice_QN([r, r], [1, 1], 2, 8, samples=200, rng=rng, fingerprint_depth=p)
        marg = qn.measure_marginal()
        for k in (1, 2, 3, 4):
            lv = marg.intensity(depth=k).masses
            worst = max(worst, float(np.max(np.abs(lv - 2.0 ** (-dim * k)))))
    report("A4", worst <= 1e-13, f"worst |intensity - uniform| = {worst:.2e} (tol 1e-13)")


def test_a5_metric_oracle():
    """A5: LP distance matches the grid oracle within grid resolution."""
    t0 = time.time()
    rng = np.random.default_rng(505)
    grid_step = 0.05
    worst = -np.inf
    negative = False
    for trial in range(200):
        n = int(rng.integers(2, 4))
        pts = rng.integers(-8, 9, size=(n, 1)) / 4.0
        c = rng.normal(size=n)
        ground = sup_norm_ground(pts)
        lp = bl_distance(AtomicCloud(c), ground)
        oracle = brute_force_bl(AtomicCloud(c), ground, grid_step)
        gap = lp - oracle
        negative |= gap < -1e-9
        worst = max(worst, gap - (grid_step * float(np.abs(c).sum()) + 1e-9))
    # the two closed-form regimes of a unit transport
    short = bl_distance(AtomicCloud([1.0, -1.0], [[0.0], [0.75]]))
    capped = bl_distance(AtomicCloud([1.0, -1.0], [[0.0], [5.0]]))
    regimes = abs(short - 0.75) <= 1e-9 and abs(capped - 2.0) <= 1e-9
    elapsed = time.time() - t0
    report(
        "A5",
        (not negative) and worst <= 0.0 and regimes and elapsed < 60.0,
        f"200 instances, worst excess {worst:.2e}, regimes min(d,2) ok, {elapsed:.1f}s (< 1min)",
    )


def test_a6_centering_smoke():
    """A6: centering the uniform fixture is exactly uniform; rejection rates
    match the closed-form boundary volume."""
    mu = lebesgue(1, 8)
    rng = np.random.default_rng(66)
    atoms = [(0.125, sample_adapted(dirac(mu, 3), rng, 6)) for _ in range(8)]
    q = EmpiricalDistribution(atoms, 3)
    res = center(q, n=2, t_samples=512, rng=rng, out_depth=3)
    exact = (
        len(res.distribution) == 1
        and res.distribution.atoms[0][1].allclose(lebesgue(1, 3), tol=1e-12)
    )

    rates_ok = True
    details = []
    n_draws = 100_000
    for dim in (1, 2):
        constants = []
        for level in (2, 3, 4):
            bits = np.random.default_rng(1000 + 10 * dim + level).integers(
                0, 2, size=(n_draws, level, dim)
            )
            all_zero = (bits == 0).all(axis=1)
            all_one = (bits == 1).all(axis=1)
            rejected = (all_zero | all_one).any(axis=1).mean()
            expected = 1.0 - interior_window_fraction(dim, level)
            sigma = math.sqrt(expected * (1 - expected) / n_draws)
            rates_ok &= abs(rejected - expected) <= 3 * sigma
            constants.append(rejected * 2.0**level)
            details.append(f"d={dim},n={level}: {rejected:.4f} vs {expected:.4f}")
        # empirical boundary constant: rejection ~ C_d 2^-n
        details.append(f"C_{dim}~{max(constants):.2f}")
    report("A6", exact and rates_ok, f"exact uniform centering; rejection {'; '.join(details)}")


def test_a7_cp_dynamics_invariants():
    """A7: magnification is the shift (exhaustive), orbit averages are
    nearly invariant (telescoping 4/N), product-law orbits collapse."""
    rng = np.random.default_rng(77)
    # exhaustive shift check at depth 6 (d=1) and depth 3 (d=2)
    shift_ok = True
    for dim, depth in ((1, 6), (2, 3)):
        mu = random_measure(rng, dim, depth)
        base = 1 << dim
        for idx in range(base**depth):
            w = word_from_index(idx, depth, dim)
            if mu.word_mass(w.prefix(1)) <= 0:
                continue
            out = magnify(TaggedMeasure(mu, w))
            shift_ok &= out.x == w.suffix(1)
            shift_ok &= out.mu.allclose(mu.conditional(w.prefix(1)), tol=0)

    telescoping_ok = True
    worst_tel = -np.inf
    for _ in range(6):
        mu = random_measure(rng, 1, 12)
        word = Word(tuple(int(v) for v in rng.integers(0, 2, size=10)), 1)
        for n in (4, 8):
            q = cp_scenery(mu, word, n, fingerprint_depth=2)
            val = check_m_invariance(q, 2)
            worst_tel = max(worst_tel, val - 4.0 / n)
            telescoping_ok &= val <= 4.0 / n + 1e-9

    mu = bernoulli(1, [0.3, 0.7], 12)
    word = Word(tuple(int(v) for v in rng.integers(0, 2, size=12)), 1)
    marginal_ok = all(
        len(cp_scenery(mu, word, n, fingerprint_depth=3).measure_marginal()) == 1
        for n in range(1, 9)
    )
    report(
        "A7",
        shift_ok and telescoping_ok and marginal_ok,
        f"shift exhaustive, telescoping excess {worst_tel:.2e} (<= 0), product orbits collapse",
    )


def test_a8_usm_splicing_convergence():
    """A8: orbit-average distances to the limiting mixture at the block
    checkpoints sit below the assembled bookkeeping bound and decrease."""
    manifest = run_experiment(
        {
            "schema_version": 1,
            "experiment": "usm-convergence",
            "seed": 7,
            "params": {
                "p": 3,
                "depth": 24,
                "growth_factor": 4.0,
                "m": [1, 1, 1, 1],
                "eps": 0.1,
                "component_periods": [2, 4, 8],
                "law_a": [0.7, 0.3],
                "law_b": [0.3, 0.7],
            },
        },
        "/tmp/sceneryflow-acceptance/a8",
    )
    s = manifest["summary"]
    rows = open("/tmp/sceneryflow-acceptance/a8/results.csv").read().strip().splitlines()
    component_audit = all(line.split(",")[-2] == "true" for line in rows[1:])
    report(
        "A8",
        s["all_within_bound"] and s["monotone_decreasing"] and component_audit,
        f"checkpoints at S_i={s['schedule_n']} partial sums, measured below bound, "
        f"decreasing, component tolerances honest",
    )


def test_a9_flow_cp_bridge():
    """A9: tangent probe vs centered orbit distribution within the declared
    assembled slack, improving when the horizon doubles."""
    manifest = run_experiment(
        {
            "schema_version": 1,
            "experiment": "flow-bridge",
            "seed": 11,
            "params": {
                "p": 4,
                "depth": 22,
                "law": [0.3, 0.7],
                "bands": [8, 16],
                "steps_per_band": 8,
                "t_samples": 256,
                "window_level": 3,
            },
        },
        "/tmp/sceneryflow-acceptance/a9",
    )
    s = manifest["summary"]
    report(
        "A9",
        s["all_within_slack"] and s["distance_decreasing"],
        "probe-vs-centering distance within slack at T=8 log 2 and halves of slack "
        "terms reported; distance decreases at T=16 log 2",
    )


def test_a10_determinism(tmp_path):
    """A10: identical config + seed gives byte-identical outputs."""
    config = {
        "schema_version": 1,
        "experiment": "splice-convergence",
        "seed": 9,
        "params": {"periods": [8, 16], "samples": 500, "p": 2},
    }
    run_experiment(config, tmp_path / "r1")
    run_experiment(config, tmp_path / "r2")
    same_csv = (tmp_path / "r1/results.csv").read_bytes() == (tmp_path / "r2/results.csv").read_bytes()
    same_manifest = (tmp_path / "r1/manifest.json").read_bytes() == (
        tmp_path / "r2/manifest.json"
    ).read_bytes()
    usm = {
        "schema_version": 1,
        "experiment": "usm-convergence",
        "seed": 3,
        "params": {"depth": 16, "m": [1, 1, 1], "eps": 0.1},
    }
    run_experiment(usm, tmp_path / "u1")
    run_experiment(usm, tmp_path / "u2")
    same_usm = (tmp_path / "u1/results.csv").read_bytes() == (tmp_path / "u2/results.csv").read_bytes()
    report("A10", same_csv and same_manifest and same_usm, "reruns byte-identical")
