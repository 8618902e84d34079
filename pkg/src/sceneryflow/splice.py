"""Splicing: building measures by concatenating dyadic-scale blocks.

The mass a spliced measure gives a word is the product, block by block, of
the component measures' masses of the corresponding sub-words. Schedules
carry the block lengths; in uniformly-scaling mode they also carry the
approximation thresholds and tolerances of the convergence bookkeeping,
with a pluggable growth function standing in for the construction's
exponential block growth at desk scale (only the ratio structure matters
for the mechanism, and the verification uses the actual schedule's ratios).

The periodic splice turns a finite list of invariant adapted component
distributions into a single distribution by splicing one period of blocks,
drawing an adapted point, and magnifying to a uniformly random cut; as the
period grows this converges to the weighted mixture of the components, at a
rate controlled by how many cuts sit flush inside one block.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .distribution import EmpiricalDistribution, TaggedMeasure
from .dyadic import Word
from .errors import ShapeError
from .measure import MAX_DENSE_LEAVES, DyadicMeasure, ProductMeasure


def linear_growth(factor: float):
    """The desk-scale growth family g(x) = factor * x."""

    def g(x: float) -> float:
        return factor * x

    g.name = f"linear:{factor:g}"
    g.factor = factor
    return g


@dataclass(frozen=True)
class SpliceSchedule:
    """Block lengths of a splice, with optional convergence bookkeeping.

    ``mode`` is "plain" for a bare block sequence or "usm" for schedules
    built from approximation thresholds ``m`` via ``n_i = m_i + k_i`` with
    ``k_i`` at least the growth of ``n_{i-1}``, ``m_i`` and ``m_{i+1}``
    (the opening block uses ``n_1 = max(g(m_1), g(m_2))``). Tolerances
    follow ``eps_i = 1 - eps**(2**-i)``, so their running product of
    complements equals ``eps``.
    """

    n: tuple[int, ...]
    mode: str = "plain"
    m: tuple[int, ...] | None = None
    eps: float | None = None
    growth_factor: float | None = None

    def __post_init__(self):
        if self.mode not in ("plain", "usm"):
            raise ValueError(f"unknown schedule mode {self.mode!r}")
        if not self.n or any(b < 1 for b in self.n):
            raise ValueError("block lengths must be positive integers")
        if self.mode == "usm":
            if self.m is None or self.eps is None or self.growth_factor is None:
                raise ValueError("usm mode needs m, eps and growth_factor")
            g = linear_growth(self.growth_factor)
            for i in range(1, len(self.n)):
                k_i = self.n[i] - self.m[i]
                lower = max(g(self.n[i - 1]), g(self.m[i]), g(self.m[i + 1]))
                if k_i < lower - 1e-9:
                    raise ValueError(
                        f"usm block {i + 1}: k={k_i} below growth requirement {lower}"
                    )

    @property
    def partial_sums(self) -> tuple[int, ...]:
        """S_0 = 0, S_k = n_1 + ... + n_k."""
        out = [0]
        for b in self.n:
            out.append(out[-1] + b)
        return tuple(out)

    def eps_i(self, i: int) -> float:
        """Tolerance of block i (1-based): 1 - eps**(2**-i)."""
        if self.eps is None:
            raise ValueError("schedule carries no tolerance sequence")
        return 1.0 - self.eps ** (2.0**-i)

    @classmethod
    def plain(cls, blocks) -> "SpliceSchedule":
        return cls(tuple(int(b) for b in blocks))

    @classmethod
    def usm(
        cls,
        m,
        growth_factor: float = 4.0,
        eps: float = 0.5,
        max_depth: int | None = None,
    ) -> "SpliceSchedule":
        """Build the block sequence from approximation thresholds ``m``.

        One block is produced per threshold except the last (which only
        feeds the look-ahead); generation stops early once ``max_depth``
        is covered.
        """
        m = tuple(int(v) for v in m)
        if len(m) < 2 or any(v < 1 for v in m):
            raise ValueError("need at least two positive thresholds")
        g = linear_growth(growth_factor)
        blocks: list[int] = []
        total = 0
        for i in range(len(m) - 1):
            if i == 0:
                n_i = int(math.ceil(max(g(m[0]), g(m[1]))))
            else:
                k_i = int(math.ceil(max(g(blocks[-1]), g(m[i]), g(m[i + 1]))))
                n_i = m[i] + k_i
            blocks.append(n_i)
            total += n_i
            if max_depth is not None and total >= max_depth:
                break
        return cls(tuple(blocks), "usm", m, eps, growth_factor)

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        obj = {
            "format": "sceneryflow-schedule",
            "version": 1,
            "n": list(self.n),
            "mode": self.mode,
        }
        if self.mode == "usm":
            obj["m"] = list(self.m)
            obj["eps"] = self.eps
            obj["growth"] = {"name": "linear", "factor": self.growth_factor}
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "SpliceSchedule":
        if obj.get("format") != "sceneryflow-schedule":
            raise ValueError("not a schedule record")
        if obj["mode"] == "usm":
            return cls(
                tuple(obj["n"]), "usm", tuple(obj["m"]), obj["eps"], obj["growth"]["factor"]
            )
        return cls(tuple(obj["n"]))


def save_schedule(s: SpliceSchedule, path) -> None:
    with open(path, "w") as fh:
        json.dump(s.to_json(), fh)


def load_schedule(path) -> SpliceSchedule:
    with open(path) as fh:
        return SpliceSchedule.from_json(json.load(fh))


# -- splicing -------------------------------------------------------------------


def splice_words(words, schedule: SpliceSchedule) -> Word:
    """Concatenate the schedule-length prefixes of the given words."""
    words = list(words)
    digits: list[int] = []
    dim = words[0].dim
    for w, b in zip(words, schedule.n):
        if w.dim != dim:
            raise ShapeError("words must share dimension")
        if len(w) < b:
            raise ShapeError(f"word of length {len(w)} shorter than its block {b}")
        digits.extend(w.digits[:b])
    return Word(tuple(digits), dim)


def _blocks_for_depth(schedule: SpliceSchedule, out_depth: int) -> list[int]:
    """Block lengths (last one possibly truncated) covering ``out_depth``."""
    blocks = []
    remaining = out_depth
    for b in schedule.n:
        if remaining <= 0:
            break
        blocks.append(min(b, remaining))
        remaining -= b
    if remaining > 0:
        raise ShapeError(
            f"schedule covers only depth {sum(schedule.n)}, need {out_depth}"
        )
    return blocks


def splice_measures(components, schedule: SpliceSchedule, out_depth: int):
    """The spliced measure down to ``out_depth``: blockwise product masses.

    The mass of a word is the product over blocks of the component masses
    of the corresponding sub-words. Returns a dense measure, or a product
    measure when every component is one (then any depth is admissible).
    """
    components = list(components)
    blocks = _blocks_for_depth(schedule, out_depth)
    if len(components) < len(blocks):
        raise ShapeError(f"{len(blocks)} blocks need {len(blocks)} components, got {len(components)}")
    dim = components[0].dim
    for mu, b in zip(components, blocks):
        if mu.dim != dim:
            raise ShapeError("components must share dimension")
        if mu.depth < b:
            raise ShapeError(f"component depth {mu.depth} shorter than its block {b}")
    if all(isinstance(mu, ProductMeasure) for mu in components[: len(blocks)]):
        laws = np.vstack([mu.digit_laws[:b] for mu, b in zip(components, blocks)])
        return ProductMeasure(dim, laws)
    base = 1 << dim
    if base**out_depth > MAX_DENSE_LEAVES:
        raise ShapeError(f"dense splice at depth {out_depth} exceeds the dense cap")
    masses = np.array([1.0])
    for mu, b in zip(components, blocks):
        masses = np.kron(masses, mu.level_masses(b))
    return DyadicMeasure(dim, masses)


def usm_splice(components, schedule: SpliceSchedule, out_depth: int):
    """Splice along a uniformly-scaling schedule."""
    if schedule.mode != "usm":
        raise ValueError("usm_splice needs a schedule in usm mode")
    return splice_measures(components, schedule, out_depth)


# -- periodic splice -------------------------------------------------------------


def block_lengths(t, q: int, period: int) -> list[int]:
    """Integer block lengths period*t_i/q of one period."""
    t = [int(v) for v in t]
    if any(v < 1 for v in t):
        raise ValueError("weights t must be positive integers")
    if sum(t) != q:
        raise ValueError(f"weights {t} must sum to the denominator {q}")
    blocks = []
    for ti in t:
        if (period * ti) % q:
            raise ValueError(f"period {period} not divisible for weight {ti}/{q}")
        blocks.append(period * ti // q)
    return blocks


def cut_window_counts(t, q: int, period: int, p: int) -> list[int]:
    """Number of cuts j with [j, j+p] flush inside block i, per block.

    Enumerates j in {0, ..., period-1} directly.
    """
    blocks = block_lengths(t, q, period)
    bounds = np.cumsum([0] + blocks)
    counts = []
    for i in range(len(blocks)):
        count = 0
        for j in range(period):
            if bounds[i] <= j and j + p <= bounds[i + 1]:
                count += 1
        counts.append(count)
    return counts


def mixture_defect_bound(t, q: int, period: int, p: int, sup_bound: float = 1.0) -> float:
    """Bound on |int f dQ - mixture| from the non-flush cut fractions."""
    blocks = block_lengths(t, q, period)
    counts = cut_window_counts(t, q, period, p)
    return sup_bound * sum(abs(b - c) for b, c in zip(blocks, counts)) / period


def _conditional_level_masses(atom, prefix_digits, k: int) -> np.ndarray:
    """Level-k masses of the atom conditioned on a sampled prefix."""
    if len(prefix_digits) == 0:
        return atom.level_masses(k)
    return atom.conditional(tuple(prefix_digits)).level_masses(k)


def periodic_splice_QN(
    r_list,
    t,
    q: int,
    period: int,
    samples: int,
    rng: np.random.Generator,
    fingerprint_depth: int = 4,
) -> EmpiricalDistribution:
    """Monte Carlo draw of the period-``period`` splice of component laws.

    Per sample: draw one component measure per block cyclically, draw the
    point digits block by block (each block from its component, which is the
    adapted draw for a blockwise product), pick a uniform cut j in one
    period, and emit the spliced measure conditioned on the first j digits,
    at the fingerprint depth, tagged with the next digits of the point.
    """
    r_list = list(r_list)
    k = len(r_list)
    blocks = block_lengths(t, q, period)
    if len(blocks) != k:
        raise ShapeError("one weight per component distribution required")
    p = fingerprint_depth
    dim = r_list[0].dim
    for r in r_list:
        if r.is_pair_valued:
            raise ShapeError("component distributions must be measure-valued")
        if r.dim != dim:
            raise ShapeError("component distributions must share dimension")
    # enough whole blocks to cover one period plus the fingerprint window
    n_blocks = 0
    covered = 0
    while covered < period + p:
        covered += blocks[n_blocks % k]
        n_blocks += 1
    block_len = [blocks[i % k] for i in range(n_blocks)]
    for i in range(n_blocks):
        need = block_len[i] + p
        for _, atom in r_list[i % k].atoms:
            if atom.depth < need:
                raise ShapeError(
                    f"component {i % k} atoms need depth >= {need} for period {period}"
                )
    starts = np.cumsum([0] + block_len)
    w = 1.0 / samples
    out_atoms = []
    for _ in range(samples):
        draws = [r_list[i % k].sample_atom(rng) for i in range(n_blocks)]
        digits: list[int] = []
        for atom, b in zip(draws, block_len):
            digits.extend(atom.sample_word(rng, b))
        j = int(rng.integers(0, period))
        # assemble the level-p masses of the conditional at cut j from the
        # block structure: finish the current block, then fresh blocks
        masses = np.array([1.0])
        got = 0
        blk = int(np.searchsorted(starts, j, side="right") - 1)
        offset = j - starts[blk]
        while got < p:
            length = min(p - got, block_len[blk] - offset)
            seg = _conditional_level_masses(
                draws[blk], digits[starts[blk] : starts[blk] + offset], length
            )
            masses = np.kron(masses, seg)
            got += length
            blk += 1
            offset = 0
        tag = Word(tuple(digits[j : j + p]), dim)
        out_atoms.append((w, TaggedMeasure(DyadicMeasure(dim, masses), tag)))
    return EmpiricalDistribution(out_atoms, p).merge()


def brute_force_splice(components, schedule: SpliceSchedule, out_depth: int) -> DyadicMeasure:
    """Oracle: marginalize the full product over component leaf tuples.

    Enumerates every joint choice of component sub-words and accumulates
    the product mass on the concatenated word; independent of the
    blockwise-kron construction. Exponential in the blocks, so capped.
    """
    import itertools

    blocks = _blocks_for_depth(schedule, out_depth)
    dim = components[0].dim
    base = 1 << dim
    joint = 1
    for b in blocks:
        joint *= base**b
    if joint > 2**20:
        raise ShapeError(f"brute-force splice over {joint} joint leaves is too large")
    out = np.zeros(base**out_depth)
    ranges = [range(base**b) for b in blocks]
    for combo in itertools.product(*ranges):
        mass = 1.0
        digits: list[int] = []
        for comp, b, idx in zip(components, blocks, combo):
            w = []
            v = idx
            for _ in range(b):
                w.append(v % base)
                v //= base
            w.reverse()
            mass *= comp.word_mass(tuple(w))
            digits.extend(w)
        pos = 0
        for a in digits:
            pos = pos * base + a
        out[pos] += mass
    return DyadicMeasure(dim, out)


# -- discretization ----------------------------------------------------------------


def discretize(tau: DyadicMeasure, nu: DyadicMeasure, n: int) -> DyadicMeasure:
    """Replace ``tau`` below level n by rescaled copies of ``nu``.

    Leaf masses are tau(D) * nu(w) for the leaf D.w, so the level-n
    marginal of the result equals tau's and every deeper conditional inside
    a positive-mass cube equals the corresponding conditional of ``nu``.
    """
    if tau.dim != nu.dim:
        raise ShapeError("measures must share dimension")
    if n > tau.depth:
        raise ShapeError(f"level {n} below the depth {tau.depth} of the coarse measure")
    if nu.depth > tau.depth - n:
        raise ShapeError(
            f"fill depth {nu.depth} exceeds remaining budget {tau.depth - n}"
        )
    if not nu.is_probability:
        raise ValueError("fill measure must be a probability measure")
    masses = np.kron(tau.level_masses(n), nu.masses)
    return DyadicMeasure(tau.dim, masses, tau.half_width)


__all__ = [
    "SpliceSchedule",
    "linear_growth",
    "splice_words",
    "splice_measures",
    "usm_splice",
    "periodic_splice_QN",
    "block_lengths",
    "cut_window_counts",
    "mixture_defect_bound",
    "brute_force_splice",
    "discretize",
    "save_schedule",
    "load_schedule",
]
