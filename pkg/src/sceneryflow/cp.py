"""Magnification dynamics on (measure, point) pairs and their diagnostics.

The magnification step conditions a measure on the level-1 cube of the
tracked point and shifts the point's dyadic address by one digit; on
symbolic addresses it is exactly the shift. Orbit averages of the step give
empirical scenery distributions. The diagnostics quantify, at a declared
resolution, how far a distribution is from being invariant, adapted, and of
uniform intensity. The doubled-window sampler re-centers a pair on the
level-n cube of its point and returns the measure on the surrounding cube
of twice the unit size, which is the ingredient the centering operation
needs; pairs whose point sits too close to the boundary are rejected, and
the rejected fraction shrinks like 2^-n.
"""

from __future__ import annotations

import math

import numpy as np

from .distribution import EmpiricalDistribution, TaggedMeasure
from .dyadic import Word
from .errors import ResolutionExceeded, ShapeError
from .measure import BoxIntegrator, cube_center, translate_scale
from .metric import distribution_distance


def magnify(tm: TaggedMeasure, redeepen: bool = False) -> TaggedMeasure:
    """One magnification step: condition on the point's level-1 cube, shift."""
    if len(tm.x) < 1:
        raise ResolutionExceeded("point word exhausted")
    if tm.mu.depth < 1:
        raise ResolutionExceeded("measure depth exhausted")
    cond = tm.mu.conditional((tm.x.digits[0],), redeepen=redeepen)
    return TaggedMeasure(cond, tm.x.suffix(1))


def cp_scenery(
    mu,
    x: Word,
    n_steps: int,
    fingerprint_depth: int = 4,
    redeepen: bool = False,
) -> EmpiricalDistribution:
    """Empirical distribution of the first ``n_steps`` magnifications.

    Uniform weight 1/n_steps on each orbit point, starting from the
    unmagnified pair.
    """
    if len(x) < n_steps:
        raise ShapeError(f"word of length {len(x)} too short for {n_steps} steps")
    if mu.depth - n_steps < fingerprint_depth:
        raise ResolutionExceeded(
            f"depth {mu.depth} cannot support {n_steps} steps at resolution {fingerprint_depth}"
        )
    atoms = []
    cur = TaggedMeasure(mu, x)
    w = 1.0 / n_steps
    for _ in range(n_steps):
        atoms.append((w, cur))
        cur = magnify(cur, redeepen=redeepen)
    return EmpiricalDistribution(atoms, fingerprint_depth)


def sample_adapted(
    qbar: EmpiricalDistribution, rng: np.random.Generator, word_length: int | None = None
) -> TaggedMeasure:
    """Draw a pair: a measure from the distribution, then a point from it."""
    if qbar.is_pair_valued:
        raise ShapeError("sample_adapted expects a distribution over measures")
    mu = qbar.sample_atom(rng)
    digits = mu.sample_word(rng, word_length)
    return TaggedMeasure(mu, Word(digits, mu.dim))


def materialize_point(x: Word, rng: np.random.Generator | None = None) -> np.ndarray:
    """Geometric point for a word: the cube center, or uniform in the cube."""
    c = cube_center(x)
    if rng is None:
        return c
    half = 2.0 ** (-len(x))
    return c + rng.uniform(-half, half, size=x.dim)


def check_m_invariance(q: EmpiricalDistribution, p: int) -> float:
    """Distance between a pair distribution and its magnification pushforward."""
    if not q.is_pair_valued:
        raise ShapeError("invariance check needs measure-point pairs")
    mq = q.map_atoms(magnify)
    return distribution_distance(q, mq, p)


def check_adapted(
    q: EmpiricalDistribution, n_samples: int, rng: np.random.Generator, p: int
) -> float:
    """Distance to a re-sampled version with points re-drawn from the measures.

    A necessary statistical diagnostic with the usual 1/sqrt(n) Monte Carlo
    floor, not a proof of adaptedness.
    """
    if not q.is_pair_valued:
        raise ShapeError("adaptedness check needs measure-point pairs")
    word_len = min(len(a.x) for _, a in q.atoms)
    marg = q.measure_marginal()
    atoms = []
    w = 1.0 / n_samples
    for _ in range(n_samples):
        atoms.append((w, sample_adapted(marg, rng, word_len)))
    resampled = EmpiricalDistribution(atoms, q.fingerprint_depth).merge()
    return distribution_distance(q, resampled, p)


def check_intensity_lebesgue(q: EmpiricalDistribution, k: int) -> float:
    """Largest deviation of the intensity from uniform over level-k cubes."""
    if k > q.fingerprint_depth:
        raise ResolutionExceeded(
            f"level {k} exceeds fingerprint depth {q.fingerprint_depth}"
        )
    lv = q.intensity(depth=k).masses
    uniform = (2.0 ** -(q.dim * k))
    return float(np.max(np.abs(lv - uniform)))


# -- doubled-window sampling -----------------------------------------------------


def interior_window_fraction(dim: int, n: int) -> float:
    """Uniform-measure fraction of points whose level-n cube admits the
    doubled window (closed form)."""
    return (1.0 - 2.0 ** (1 - n)) ** dim


def window_accepts(x: Word, n: int) -> bool:
    """Whether the level-n cube of ``x`` is far enough from the boundary.

    Per coordinate, the first n address bits must be neither all zeros nor
    all ones; then the twice-enlarged cube around the level-n cube stays
    inside the support.
    """
    if n < 2:
        raise ValueError("window level must be >= 2")
    if len(x) < n:
        raise ShapeError(f"word of length {len(x)} too short for window level {n}")
    for a in range(x.dim):
        bits = [(x.digits[j] >> a) & 1 for j in range(n)]
        if all(b == 0 for b in bits) or all(b == 1 for b in bits):
            return False
    return True


def extended_sample(
    tm: TaggedMeasure,
    n: int,
    out_depth: int | None = None,
    integrator: BoxIntegrator | None = None,
) -> TaggedMeasure | None:
    """Re-center a pair on its level-n cube and keep the doubled window.

    Returns the measure on the cube of half width 2 around the blown-up
    level-n cube (normalized), tagged with the shifted point, or None when
    the point's cube sits too close to the boundary for the window to be
    covered. The restriction of the output to the unit cube reproduces the
    level-n conditional exactly.
    """
    mu = tm.mu
    if mu.half_width != 1.0:
        raise ShapeError("doubled-window sampling expects a unit-cube measure")
    if not window_accepts(tm.x, n):
        return None
    max_exact = mu.depth - n + 1
    if max_exact < 1:
        raise ResolutionExceeded(f"depth {mu.depth} too shallow for window level {n}")
    depth = max_exact if out_depth is None else out_depth
    if depth > max_exact:
        raise ResolutionExceeded(
            f"doubled-window depth {depth} exceeds exact budget {max_exact}"
        )
    center = cube_center(tm.x.prefix(n))
    out = translate_scale(
        mu, center, n * math.log(2.0), out_depth=depth, out_half_width=2.0,
        integrator=integrator,
    )
    return TaggedMeasure(out, tm.x.suffix(n))


def diagnostic_record(check: str, resolution_p: int, value: float, slack_budget: float, seed) -> dict:
    """The JSON record shape used for emitted diagnostics."""
    return {
        "check": check,
        "resolution_p": resolution_p,
        "value": float(value),
        "slack_budget": float(slack_budget),
        "seed": seed,
    }


__all__ = [
    "magnify",
    "cp_scenery",
    "sample_adapted",
    "materialize_point",
    "check_m_invariance",
    "check_adapted",
    "check_intensity_lebesgue",
    "window_accepts",
    "interior_window_fraction",
    "extended_sample",
    "diagnostic_record",
]
