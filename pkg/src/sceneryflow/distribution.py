"""Finitely supported distributions over measures and measure-point pairs.

Atoms are either measures or (measure, word) pairs; weights form a
probability vector. Atoms are compared through their fingerprint: the vector
of masses at the distribution's fingerprint depth (plus the word for pairs).
Merging by fingerprint is what lets exact fixtures collapse to single atoms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dyadic import Word
from .errors import ResolutionExceeded, ShapeError
from .measure import DyadicMeasure, intensity_of_family, measure_from_json

DEFAULT_FINGERPRINT_DEPTH = 4
WEIGHT_TOL = 1e-12
MERGE_TOL = 1e-12


@dataclass(frozen=True)
class TaggedMeasure:
    """A measure together with the dyadic address of a tracked point."""

    mu: object
    x: Word

    def __post_init__(self):
        if self.x.dim != self.mu.dim:
            raise ShapeError("point word and measure dimension differ")


def _is_pair(atom) -> bool:
    return isinstance(atom, TaggedMeasure)


def _atom_measure(atom):
    return atom.mu if _is_pair(atom) else atom


class EmpiricalDistribution:
    """Probability distribution with finitely many measure(-point) atoms."""

    def __init__(self, atoms, fingerprint_depth: int = DEFAULT_FINGERPRINT_DEPTH):
        atoms = [(float(w), a) for w, a in atoms]
        if not atoms:
            raise ShapeError("distribution needs at least one atom")
        weights = np.array([w for w, _ in atoms])
        if np.any(weights < 0):
            raise ValueError("atom weights must be nonnegative")
        if abs(weights.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"atom weights sum to {weights.sum()}, expected 1")
        dims = {_atom_measure(a).dim for _, a in atoms}
        if len(dims) != 1:
            raise ShapeError("atoms must share dimension")
        kinds = {_is_pair(a) for _, a in atoms}
        if len(kinds) != 1:
            raise ShapeError("cannot mix plain measures and measure-point pairs")
        for _, a in atoms:
            if _atom_measure(a).depth < fingerprint_depth:
                raise ShapeError(
                    f"atom depth {_atom_measure(a).depth} below fingerprint depth {fingerprint_depth}"
                )
        self.atoms = atoms
        self.fingerprint_depth = fingerprint_depth
        self.dim = dims.pop()
        self.is_pair_valued = kinds.pop()

    # -- structure -----------------------------------------------------------

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.atoms])

    def __len__(self):
        return len(self.atoms)

    def atom_fingerprint(self, atom):
        mu = _atom_measure(atom)
        fp = mu.level_masses(self.fingerprint_depth)
        if _is_pair(atom):
            return fp, atom.x.digits
        return fp, None

    def merge(self) -> "EmpiricalDistribution":
        """Sum weights of atoms with equal fingerprints (tolerance 1e-12)."""
        reps = []  # (fingerprint, word, weight, representative atom)
        for w, a in self.atoms:
            fp, word = self.atom_fingerprint(a)
            for rec in reps:
                if rec[1] == word and np.max(np.abs(rec[0] - fp)) <= MERGE_TOL:
                    rec[2] += w
                    break
            else:
                reps.append([fp, word, w, a])
        return EmpiricalDistribution(
            [(rec[2], rec[3]) for rec in reps], self.fingerprint_depth
        )

    def measure_marginal(self) -> "EmpiricalDistribution":
        """Drop the tracked points, merging atoms that carry equal measures."""
        if not self.is_pair_valued:
            return self.merge()
        dropped = [(w, a.mu) for w, a in self.atoms]
        return EmpiricalDistribution(dropped, self.fingerprint_depth).merge()

    def intensity(self, depth: int | None = None) -> DyadicMeasure:
        """The average measure, leafwise at the shallowest atom depth."""
        marg = self.measure_marginal()
        depths = [_atom_measure(a).depth for _, a in marg.atoms]
        depth = min(depths) if depth is None else depth
        measures = []
        for _, a in marg.atoms:
            mu = _atom_measure(a)
            half = getattr(mu, "half_width", 1.0)
            measures.append(DyadicMeasure(mu.dim, mu.level_masses(depth), half))
        return intensity_of_family(marg.weights, measures)

    def sample_atom(self, rng: np.random.Generator):
        i = int(rng.choice(len(self.atoms), p=self.weights / self.weights.sum()))
        return self.atoms[i][1]

    def map_atoms(self, fn: Callable) -> "EmpiricalDistribution":
        return EmpiricalDistribution(
            [(w, fn(a)) for w, a in self.atoms], self.fingerprint_depth
        )

    def __repr__(self):
        kind = "pairs" if self.is_pair_valued else "measures"
        return (
            f"EmpiricalDistribution({len(self.atoms)} {kind}, dim={self.dim}, "
            f"fingerprint_depth={self.fingerprint_depth})"
        )

    # -- serialization ---------------------------------------------------------

    def to_json(self) -> dict:
        records = []
        for w, a in self.atoms:
            rec = {"weight": w, "measure": _atom_measure(a).to_json()}
            if _is_pair(a):
                rec["point_word"] = list(a.x.digits)
            records.append(rec)
        return {
            "format": "sceneryflow-distribution",
            "version": 1,
            "count": len(self.atoms),
            "fingerprint_depth": self.fingerprint_depth,
            "atoms": records,
        }


def distribution_from_json(obj: dict) -> EmpiricalDistribution:
    if obj.get("format") != "sceneryflow-distribution":
        raise ValueError("not a distribution record")
    atoms = []
    for rec in obj["atoms"]:
        mu = measure_from_json(rec["measure"])
        if "point_word" in rec:
            atom = TaggedMeasure(mu, Word(tuple(rec["point_word"]), mu.dim))
        else:
            atom = mu
        atoms.append((rec["weight"], atom))
    return EmpiricalDistribution(atoms, obj["fingerprint_depth"])


def save_distribution(q: EmpiricalDistribution, path) -> None:
    with open(path, "w") as fh:
        json.dump(q.to_json(), fh)


def load_distribution(path) -> EmpiricalDistribution:
    with open(path) as fh:
        return distribution_from_json(json.load(fh))


# -- operations -----------------------------------------------------------------


def measure_marginal(q: EmpiricalDistribution) -> EmpiricalDistribution:
    return q.measure_marginal()


def intensity(q: EmpiricalDistribution, depth: int | None = None) -> DyadicMeasure:
    return q.intensity(depth)


def convex_combine(weights, qs) -> EmpiricalDistribution:
    """Concatenate atom lists with rescaled weights."""
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    qs = list(qs)
    if weights.shape != (len(qs),):
        raise ShapeError("one weight per distribution required")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError("weights must be a probability vector")
    depths = {q.fingerprint_depth for q in qs}
    if len(depths) != 1:
        raise ShapeError("distributions must share fingerprint depth")
    atoms = []
    for w, q in zip(weights, qs):
        atoms.extend((w * wa, a) for wa, a in q.atoms)
    return EmpiricalDistribution(atoms, depths.pop())


@dataclass(frozen=True)
class TestFunction:
    """A bounded functional of the level-``resolution`` mass vector."""

    __test__ = False  # not a pytest case despite the name

    resolution: int
    evaluator: Callable[[np.ndarray], float]
    sup_bound: float = 1.0

    def __call__(self, mu) -> float:
        return float(self.evaluator(mu.level_masses(self.resolution)))


def integrate(q: EmpiricalDistribution, f: TestFunction) -> float:
    """Weighted sum of f over the atoms' measure components."""
    if f.resolution > q.fingerprint_depth:
        raise ResolutionExceeded(
            f"test resolution {f.resolution} exceeds fingerprint depth {q.fingerprint_depth}"
        )
    out = 0.0
    for w, a in q.atoms:
        out += w * f(_atom_measure(a))
    return out


def cube_mass_function(word: Word) -> TestFunction:
    """The evaluation functional mu -> mu(cube of ``word``)."""
    k = len(word)
    idx = word.index()
    return TestFunction(k, lambda lv, i=idx: float(lv[i]), 1.0)


def dirac(mu, fingerprint_depth: int = DEFAULT_FINGERPRINT_DEPTH) -> EmpiricalDistribution:
    """The point mass at a single measure (or pair)."""
    return EmpiricalDistribution([(1.0, mu)], fingerprint_depth)


__all__ = [
    "TaggedMeasure",
    "EmpiricalDistribution",
    "TestFunction",
    "measure_marginal",
    "intensity",
    "convex_combine",
    "integrate",
    "cube_mass_function",
    "dirac",
    "save_distribution",
    "load_distribution",
    "distribution_from_json",
]
