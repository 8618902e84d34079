"""Continuous magnification: sceneries, their time averages, and centering.

The scenery of a measure at a point is the window of radius e^-t around the
point, rescaled to the unit cube and normalized. Time averages over t put
uniform weight on a midpoint grid; refining the grid is reported, not
assumed. Centering converts an orbit distribution of the discrete
magnification dynamics into a scenery-flow distribution: re-center each pair
on its level-n cube keeping the doubled window, then zoom by a uniformly
random factor between 1/2 and 1. Pairs rejected by the doubled window are
dropped and counted; their frequency shrinks like 2^-n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cp import extended_sample, materialize_point
from .distribution import EmpiricalDistribution
from .errors import EmptyOutput, ResolutionExceeded, ShapeError
from .measure import BoxIntegrator, DyadicMeasure, translate_scale

LOG2 = math.log(2.0)


def scenery(
    mu: DyadicMeasure,
    x,
    t: float,
    out_depth: int,
    integrator: BoxIntegrator | None = None,
) -> DyadicMeasure:
    """The normalized window of radius e^-t around x, at the given depth."""
    return translate_scale(mu, x, t, out_depth=out_depth, integrator=integrator)


def scenery_distribution(
    mu: DyadicMeasure,
    x,
    total_time: float,
    steps: int,
    out_depth: int,
) -> EmpiricalDistribution:
    """Midpoint-rule time average of sceneries up to ``total_time``.

    Uniform weights on sceneries at t_j = (j + 1/2) * total_time / steps.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    integ = BoxIntegrator(mu)
    w = 1.0 / steps
    atoms = []
    for j in range(steps):
        t = (j + 0.5) * total_time / steps
        atoms.append((w, scenery(mu, x, t, out_depth, integrator=integ)))
    return EmpiricalDistribution(atoms, out_depth).merge()


@dataclass
class CenterResult:
    """Output of the centering operation plus its rejection bookkeeping."""

    distribution: EmpiricalDistribution
    emitted: int
    rejected: int

    @property
    def rejection_rate(self) -> float:
        total = self.emitted + self.rejected
        return self.rejected / total if total else 0.0


def center(
    q: EmpiricalDistribution,
    n: int,
    t_samples: int,
    rng: np.random.Generator,
    out_depth: int,
) -> CenterResult:
    """Monte Carlo centering of a distribution of measure-point pairs.

    Each draw picks an atom, re-centers it on the level-n cube of its point
    keeping the doubled window, zooms by e^-t with t uniform on [0, log 2),
    and emits the unit-cube window at ``out_depth``. Draws whose pair is
    rejected by the doubled window are counted and dropped.
    """
    if not q.is_pair_valued:
        raise ShapeError("centering expects measure-point pairs")
    prepared = []
    for _, atom in q.atoms:
        ext = extended_sample(atom, n)
        if ext is None:
            prepared.append(None)
            continue
        if ext.mu.depth < out_depth + 2:
            raise ResolutionExceeded(
                f"doubled window depth {ext.mu.depth} cannot support zooming to depth {out_depth}"
            )
        prepared.append((ext.mu, BoxIntegrator(ext.mu), materialize_point(ext.x)))
    weights = q.weights
    weights = weights / weights.sum()
    emitted = []
    rejected = 0
    for _ in range(t_samples):
        i = int(rng.choice(len(prepared), p=weights))
        if prepared[i] is None:
            rejected += 1
            continue
        nu, integ, x0 = prepared[i]
        t = float(rng.uniform(0.0, LOG2))
        emitted.append(translate_scale(nu, x0, t, out_depth=out_depth, integrator=integ))
    if not emitted:
        raise EmptyOutput(f"all {t_samples} centering draws were rejected at level {n}")
    w = 1.0 / len(emitted)
    dist = EmpiricalDistribution([(w, m) for m in emitted], out_depth).merge()
    return CenterResult(dist, len(emitted), rejected)


def tangent_distribution_probe(
    mu: DyadicMeasure,
    x,
    total_times,
    steps_per_band: int,
    out_depth: int,
) -> list[EmpiricalDistribution]:
    """Scenery time averages at increasing horizons.

    ``steps_per_band`` midpoints are used per log 2 of time, so longer
    horizons are sampled at the same rate. Successive distances between the
    entries serve as a Cauchy-style diagnostic for a single limit.
    """
    out = []
    for total in total_times:
        steps = max(1, round(steps_per_band * total / LOG2))
        out.append(scenery_distribution(mu, x, total, steps, out_depth))
    return out


__all__ = [
    "scenery",
    "scenery_distribution",
    "center",
    "CenterResult",
    "tangent_distribution_probe",
]
