import math

import numpy as np
import pytest

from sceneryflow.cp import cp_scenery, sample_adapted
from sceneryflow.distribution import EmpiricalDistribution, TaggedMeasure, dirac
from sceneryflow.dyadic import Word, point_to_word
from sceneryflow.errors import EmptyOutput, ShapeError
from sceneryflow.flow import (
    center,
    scenery,
    scenery_distribution,
    tangent_distribution_probe,
)
from sceneryflow.measure import DyadicMeasure, bernoulli, lebesgue, translate_scale
from sceneryflow.metric import distribution_distance, measure_distance

LOG2 = math.log(2.0)


def random_measure(rng, depth=8):
    m = rng.random(2**depth)
    return DyadicMeasure(1, m / m.sum())


def test_scenery_lebesgue_interior():
    mu = lebesgue(1, 8)
    out = scenery(mu, [0.21], 1.3, out_depth=3)
    assert out.allclose(lebesgue(1, 3), tol=1e-12)


def test_scenery_zero_time_is_projection():
    rng = np.random.default_rng(0)
    mu = random_measure(rng)
    out = scenery(mu, [0.0], 0.0, out_depth=4)
    assert np.allclose(out.masses, mu.level_masses(4), atol=1e-12)


def test_scenery_composition_with_slack():
    rng = np.random.default_rng(1)
    p = 4
    for _ in range(5):
        mu = random_measure(rng, depth=12)
        x = rng.uniform(-0.4, 0.4)
        s, t = 0.9, 0.8
        direct = scenery(mu, [x], s + t, out_depth=p)
        # deep intermediate stage, recentred at the origin for the second zoom
        mid = scenery(mu, [x], s, out_depth=p + 4)
        composed = translate_scale(mid, [0.0], t, out_depth=p)
        gap = measure_distance(direct, composed, p)
        assert gap <= math.sqrt(1) * 2.0 ** (-p) * 4.0


def test_scenery_distribution_lebesgue_collapses():
    # x close enough to the origin that every window stays inside the support
    mu = lebesgue(1, 10)
    q = scenery_distribution(mu, [0.05], 3 * LOG2, steps=12, out_depth=3)
    assert len(q) == 1
    assert q.atoms[0][1].allclose(lebesgue(1, 3), tol=1e-12)


def test_scenery_distribution_single_step():
    rng = np.random.default_rng(2)
    mu = random_measure(rng)
    q = scenery_distribution(mu, [0.05], 2 * LOG2, steps=1, out_depth=3)
    assert len(q) == 1
    expected = scenery(mu, [0.05], LOG2, out_depth=3)
    assert q.atoms[0][1].allclose(expected, tol=1e-12)


def test_scenery_distribution_step_refinement_reported():
    rng = np.random.default_rng(3)
    mu = random_measure(rng, depth=10)
    coarse = scenery_distribution(mu, [0.13], 2 * LOG2, steps=8, out_depth=3)
    fine = scenery_distribution(mu, [0.13], 2 * LOG2, steps=16, out_depth=3)
    delta = distribution_distance(coarse, fine, 3)
    assert 0.0 <= delta <= 2.0


def test_center_lebesgue_fixture_exact():
    mu = lebesgue(1, 8)
    rng = np.random.default_rng(4)
    atoms = [(0.25, sample_adapted(dirac(mu, 3), rng, 6)) for _ in range(4)]
    q = EmpiricalDistribution(atoms, 3)
    res = center(q, n=2, t_samples=64, rng=rng, out_depth=3)
    assert len(res.distribution) == 1
    assert res.distribution.atoms[0][1].allclose(lebesgue(1, 3), tol=1e-12)


def test_center_rejection_counting():
    mu = lebesgue(1, 8)
    # force a rejected pair: address bits all zero
    bad = TaggedMeasure(mu, Word((0,) * 6, 1))
    good = TaggedMeasure(mu, Word((0, 1) * 3, 1))
    q = EmpiricalDistribution([(0.5, bad), (0.5, good)], 3)
    rng = np.random.default_rng(5)
    res = center(q, n=2, t_samples=200, rng=rng, out_depth=3)
    assert res.rejected > 0
    assert res.emitted + res.rejected == 200
    only_bad = EmpiricalDistribution([(1.0, bad)], 3)
    with pytest.raises(EmptyOutput):
        center(only_bad, n=2, t_samples=16, rng=rng, out_depth=3)


def test_center_requires_pairs():
    with pytest.raises(ShapeError):
        center(dirac(lebesgue(1, 8), 3), 2, 8, np.random.default_rng(0), 3)


def test_probe_lebesgue_all_identical():
    mu = lebesgue(1, 10)
    probes = tangent_distribution_probe(mu, [0.07], [LOG2, 2 * LOG2, 4 * LOG2], 4, 3)
    for a, b in zip(probes, probes[1:]):
        assert distribution_distance(a, b, 3) == pytest.approx(0.0, abs=1e-12)


def test_probe_bernoulli_distances_shrink():
    mu = bernoulli(1, [0.3, 0.7], 18)
    rng = np.random.default_rng(6)
    digits = tuple(int(rng.random() < 0.7) for _ in range(18))
    x = [float(np.clip(sum((2 * d - 1) * 2.0**-(k + 1) for k, d in enumerate(digits)), -1, 1))]
    times = [2 * LOG2, 4 * LOG2, 8 * LOG2]
    probes = tangent_distribution_probe(mu, x, times, 8, 3)
    d1 = distribution_distance(probes[0], probes[1], 3)
    d2 = distribution_distance(probes[1], probes[2], 3)
    assert d2 <= d1 + 0.05


def test_center_continuity_trend():
    # perturb the input distribution by shrinking amounts; the centered
    # outputs should approach each other (trend only, no rate asserted)
    mu = bernoulli(1, [0.3, 0.7], 12)
    nu = bernoulli(1, [0.6, 0.4], 12)
    rng = np.random.default_rng(8)
    base_atoms = [(0.25, sample_adapted(dirac(mu, 3), rng, 8)) for _ in range(4)]
    q = EmpiricalDistribution(base_atoms, 3)
    deltas = []
    base = center(q, n=3, t_samples=96, rng=np.random.default_rng(99), out_depth=3)
    for w in (0.4, 0.2, 0.1):
        perturbed_atoms = [(wt * (1 - w), a) for wt, a in base_atoms]
        perturbed_atoms.append((w, TaggedMeasure(nu, Word((0, 1) * 4, 1))))
        q2 = EmpiricalDistribution(perturbed_atoms, 3)
        out = center(q2, n=3, t_samples=96, rng=np.random.default_rng(99), out_depth=3)
        deltas.append(distribution_distance(base.distribution, out.distribution, 3))
    assert deltas[-1] <= deltas[0] + 1e-9


def test_center_of_bernoulli_scenery_close_to_dirac():
    # centering the orbit distribution of an exactly self-similar measure
    # lands near a single atom (its own law)
    mu = bernoulli(1, [0.3, 0.7], 14)
    rng = np.random.default_rng(7)
    word = Word(tuple(int(rng.random() < 0.7) for _ in range(14)), 1)
    q = cp_scenery(mu, word, 4, fingerprint_depth=3)
    res = center(q, n=3, t_samples=128, rng=rng, out_depth=3)
    assert res.emitted > 0
    # every emitted atom is a window of the same self-similar law
    assert len(res.distribution) <= 128
