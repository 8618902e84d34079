"""Finite-depth measures on a dyadic grid and their geometric operations.

A measure is stored by the masses of its deepest-level cubes (leaves), in
lexicographic word order, together with the convention that mass is spread
uniformly inside each leaf. That uniform-density contract is what makes
translation/rescaling exactly computable: every window mass is an integral
of a piecewise-constant density, evaluated here by prefix sums with
fractional edge corrections.

Two representations are provided. :class:`DyadicMeasure` holds a dense leaf
array and supports everything. :class:`ProductMeasure` stores one digit law
per level (covering uniform and Bernoulli-type fixtures at depths where a
dense array would not fit) and supports the symbolic operations: word
masses, level marginals, conditioning, and sampling.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .dyadic import Word
from .errors import ConditionOnNull, ResolutionExceeded, ShapeError

MAX_DENSE_LEAVES = 2**24
PROBABILITY_TOL = 1e-12


def _as_digits(w) -> tuple[int, ...]:
    if isinstance(w, Word):
        return w.digits
    return tuple(int(a) for a in w)


class DyadicMeasure:
    """A nonnegative measure given by leaf masses at a fixed dyadic depth.

    Parameters
    ----------
    dim : int
        Ambient dimension d; the digit alphabet has size 2^d.
    masses : array_like
        Leaf masses in lexicographic word order, length (2^d)^depth.
    half_width : float
        1 for the unit cube [-1,1]^d, 2 for the doubled cube [-2,2]^d.
    """

    def __init__(self, dim: int, masses, half_width: float = 1.0):
        if dim < 1:
            raise ShapeError(f"dimension must be >= 1, got {dim}")
        if half_width not in (1.0, 2.0, 1, 2):
            raise ShapeError(f"support half width must be 1 or 2, got {half_width}")
        arr = np.ascontiguousarray(masses, dtype=np.float64)
        if arr.ndim != 1:
            raise ShapeError("leaf masses must be a flat array")
        base = 1 << dim
        depth = 0
        n = arr.shape[0]
        while base**depth < n:
            depth += 1
        if base**depth != n:
            raise ShapeError(f"mass array length {n} is not a power of {base}")
        if arr.size > MAX_DENSE_LEAVES:
            raise ResolutionExceeded(f"{arr.size} leaves exceed the dense cap")
        if np.any(arr < 0):
            raise ValueError("leaf masses must be nonnegative")
        self.dim = dim
        self.depth = depth
        self.half_width = float(half_width)
        self.masses = arr
        self.masses.flags.writeable = False
        self.total = float(arr.sum())

    # -- constructors ------------------------------------------------------

    @classmethod
    def lebesgue(cls, dim: int, depth: int, half_width: float = 1.0) -> "DyadicMeasure":
        """Normalized uniform measure."""
        base = 1 << dim
        n = base**depth
        return cls(dim, np.full(n, 1.0 / n), half_width)

    @classmethod
    def bernoulli(cls, dim: int, weights, depth: int) -> "DyadicMeasure":
        """Product measure with i.i.d. digit law ``weights``.

        With uniform weights this equals ``lebesgue(dim, depth)`` leafwise
        exactly (products of exact binary fractions).
        """
        w = _digit_law(dim, weights)
        masses = np.array([1.0])
        for _ in range(depth):
            masses = np.kron(masses, w)
        return cls(dim, masses)

    # -- basic queries ------------------------------------------------------

    @property
    def base(self) -> int:
        return 1 << self.dim

    @property
    def is_probability(self) -> bool:
        return abs(self.total - 1.0) <= PROBABILITY_TOL

    def word_mass(self, w) -> float:
        """Mass of the cube addressed by a word of length <= depth."""
        digits = _as_digits(w)
        k = len(digits)
        if k > self.depth:
            raise ResolutionExceeded(f"word of length {k} below depth {self.depth}")
        idx = 0
        for a in digits:
            idx = idx * self.base + a
        stride = self.base ** (self.depth - k)
        return float(self.masses[idx * stride : (idx + 1) * stride].sum())

    def level_masses(self, k: int) -> np.ndarray:
        """Masses of all level-k cubes in lexicographic word order."""
        if k > self.depth:
            raise ResolutionExceeded(f"level {k} below depth {self.depth}")
        return self.masses.reshape(self.base**k, -1).sum(axis=1)

    def conditional(self, w, redeepen: bool = False) -> "DyadicMeasure":
        """The measure on the cube of ``w``, rescaled to the whole cube.

        Leafwise this is mass(wy)/mass(w). By default the result has depth
        ``depth - len(w)``; with ``redeepen`` it is subdivided uniformly back
        to the original depth.
        """
        digits = _as_digits(w)
        k = len(digits)
        if k > self.depth:
            raise ResolutionExceeded(f"cannot condition {self.depth}-deep measure on level {k}")
        idx = 0
        for a in digits:
            idx = idx * self.base + a
        stride = self.base ** (self.depth - k)
        sub = self.masses[idx * stride : (idx + 1) * stride]
        mass = sub.sum()
        if mass <= 0.0:
            raise ConditionOnNull(f"conditioning on a null cube (word {digits})")
        out = sub / mass
        if redeepen and k > 0:
            filler = np.full(self.base**k, float(self.base) ** (-k))
            out = np.kron(out, filler)
        return DyadicMeasure(self.dim, out, self.half_width)

    def restrict_normalize(self, words) -> "DyadicMeasure":
        """Zero all mass outside the given cubes, then rescale to total 1.

        The words must be pairwise non-nested.
        """
        digit_seqs = [_as_digits(w) for w in words]
        for i, a in enumerate(digit_seqs):
            for b in digit_seqs[i + 1 :]:
                m = min(len(a), len(b))
                if a[:m] == b[:m]:
                    raise ValueError(f"nested restriction cubes {a} and {b}")
        keep = np.zeros_like(self.masses)
        for digits in digit_seqs:
            k = len(digits)
            if k > self.depth:
                raise ResolutionExceeded(f"restriction word of length {k} below depth {self.depth}")
            idx = 0
            for a in digits:
                idx = idx * self.base + a
            stride = self.base ** (self.depth - k)
            keep[idx * stride : (idx + 1) * stride] = self.masses[idx * stride : (idx + 1) * stride]
        total = keep.sum()
        if total <= 0.0:
            raise ConditionOnNull("restriction set has zero mass")
        return DyadicMeasure(self.dim, keep / total, self.half_width)

    def sample_word(self, rng: np.random.Generator, length: int | None = None) -> tuple[int, ...]:
        """Draw a word leaf-proportionally (digit by digit)."""
        length = self.depth if length is None else length
        if length > self.depth:
            raise ResolutionExceeded(f"cannot sample {length} digits at depth {self.depth}")
        if self.total <= 0.0:
            raise ConditionOnNull("cannot sample from the zero measure")
        digits = []
        view = self.masses
        for _ in range(length):
            children = view.reshape(self.base, -1).sum(axis=1)
            p = children / children.sum()
            a = int(rng.choice(self.base, p=p))
            digits.append(a)
            stride = view.shape[0] // self.base
            view = view[a * stride : (a + 1) * stride]
        return tuple(digits)

    def axis_tensor(self) -> np.ndarray:
        """Leaf masses reshaped to one axis per coordinate.

        Entry [i_1, ..., i_d] is the mass of the cell whose coordinate-a
        interval has index i_a among the 2^depth intervals of that axis.
        """
        n = 1 << self.depth
        if self.dim == 1:
            return self.masses.reshape(n)
        perm = _axis_permutation(self.dim, self.depth)
        t = np.empty(self.base**self.depth)
        t[perm] = self.masses
        return t.reshape((n,) * self.dim)

    def allclose(self, other: "DyadicMeasure", tol: float = PROBABILITY_TOL) -> bool:
        if (self.dim, self.depth, self.half_width) != (other.dim, other.depth, other.half_width):
            return False
        return bool(np.max(np.abs(self.masses - other.masses)) <= tol)

    def __repr__(self):
        return (
            f"DyadicMeasure(dim={self.dim}, depth={self.depth}, "
            f"half_width={self.half_width}, total={self.total:.6g})"
        )

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "format": "sceneryflow-measure",
            "version": 1,
            "kind": "dense",
            "dim": self.dim,
            "depth": self.depth,
            "support_half_width": self.half_width,
            "total": self.total,
            "leaf_masses": self.masses.tolist(),
        }


class ProductMeasure:
    """Depth-graded product measure: one digit law per level.

    The mass of a word is the product of the per-level law entries, so
    conditioning on any positive-mass prefix just drops the leading laws.
    Supports half width 1 only.
    """

    def __init__(self, dim: int, digit_laws):
        laws = np.ascontiguousarray(digit_laws, dtype=np.float64)
        if laws.ndim != 2 or laws.shape[1] != (1 << dim):
            raise ShapeError("digit laws must have shape (depth, 2^dim)")
        if np.any(laws < 0):
            raise ValueError("digit laws must be nonnegative")
        if np.max(np.abs(laws.sum(axis=1) - 1.0)) > 1e-9:
            raise ValueError("each digit law must sum to 1")
        self.dim = dim
        self.depth = laws.shape[0]
        self.half_width = 1.0
        self.digit_laws = laws
        self.digit_laws.flags.writeable = False
        self.total = 1.0

    @classmethod
    def bernoulli(cls, dim: int, weights, depth: int) -> "ProductMeasure":
        w = _digit_law(dim, weights)
        return cls(dim, np.tile(w, (depth, 1)))

    @classmethod
    def lebesgue(cls, dim: int, depth: int) -> "ProductMeasure":
        base = 1 << dim
        return cls(dim, np.full((depth, base), 1.0 / base))

    @property
    def base(self) -> int:
        return 1 << self.dim

    @property
    def is_probability(self) -> bool:
        return True

    def word_mass(self, w) -> float:
        digits = _as_digits(w)
        if len(digits) > self.depth:
            raise ResolutionExceeded(f"word of length {len(digits)} below depth {self.depth}")
        out = 1.0
        for j, a in enumerate(digits):
            out *= self.digit_laws[j, a]
        return out

    def level_masses(self, k: int) -> np.ndarray:
        if k > self.depth:
            raise ResolutionExceeded(f"level {k} below depth {self.depth}")
        masses = np.array([1.0])
        for j in range(k):
            masses = np.kron(masses, self.digit_laws[j])
        return masses

    def conditional(self, w, redeepen: bool = False) -> "ProductMeasure":
        digits = _as_digits(w)
        if self.word_mass(digits) <= 0.0:
            raise ConditionOnNull(f"conditioning on a null cube (word {digits})")
        laws = self.digit_laws[len(digits) :]
        if redeepen and len(digits) > 0:
            base = 1 << self.dim
            filler = np.full((len(digits), base), 1.0 / base)
            laws = np.vstack([laws, filler])
        return ProductMeasure(self.dim, laws)

    def sample_word(self, rng: np.random.Generator, length: int | None = None) -> tuple[int, ...]:
        length = self.depth if length is None else length
        if length > self.depth:
            raise ResolutionExceeded(f"cannot sample {length} digits at depth {self.depth}")
        u = rng.random(length)
        cum = np.cumsum(self.digit_laws[:length], axis=1)
        digits = (u[:, None] > cum[:, :-1]).sum(axis=1)
        return tuple(int(a) for a in digits)

    def to_dense(self, depth: int | None = None) -> DyadicMeasure:
        depth = self.depth if depth is None else depth
        return DyadicMeasure(self.dim, self.level_masses(depth))

    def allclose(self, other, tol: float = PROBABILITY_TOL) -> bool:
        if not isinstance(other, ProductMeasure):
            return NotImplemented
        if (self.dim, self.depth) != (other.dim, other.depth):
            return False
        return bool(np.max(np.abs(self.digit_laws - other.digit_laws)) <= tol)

    def __repr__(self):
        return f"ProductMeasure(dim={self.dim}, depth={self.depth})"

    def to_json(self) -> dict:
        return {
            "format": "sceneryflow-measure",
            "version": 1,
            "kind": "product",
            "dim": self.dim,
            "depth": self.depth,
            "support_half_width": self.half_width,
            "total": self.total,
            "digit_laws": self.digit_laws.tolist(),
        }


def _digit_law(dim: int, weights) -> np.ndarray:
    w = np.ascontiguousarray(weights, dtype=np.float64)
    if w.shape != (1 << dim,):
        raise ShapeError(f"digit law needs {1 << dim} weights, got shape {w.shape}")
    if np.any(w < 0):
        raise ValueError("digit weights must be nonnegative")
    if abs(w.sum() - 1.0) > 1e-9:
        raise ValueError(f"digit weights sum to {w.sum()}, expected 1")
    return w


_AXIS_PERM_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _axis_permutation(dim: int, depth: int) -> np.ndarray:
    """Linear index into the axis tensor for each word-order leaf index."""
    key = (dim, depth)
    if key not in _AXIS_PERM_CACHE:
        base = 1 << dim
        n_axis = 1 << depth
        idx = np.arange(base**depth)
        lin = np.zeros_like(idx)
        axis_indices = []
        for a in range(dim):
            ax = np.zeros_like(idx)
            for j in range(depth):
                digit = (idx // base ** (depth - 1 - j)) % base
                bit = (digit >> a) & 1
                ax += bit * (1 << (depth - 1 - j))
            axis_indices.append(ax)
        for a in range(dim):
            lin = lin * n_axis + axis_indices[a]
        _AXIS_PERM_CACHE[key] = lin
    return _AXIS_PERM_CACHE[key]


def _axis_to_word_order(tensor: np.ndarray, dim: int, depth: int) -> np.ndarray:
    if dim == 1:
        return tensor.reshape(-1)
    perm = _axis_permutation(dim, depth)
    return tensor.reshape(-1)[perm]


# -- exact window integration ------------------------------------------------


class BoxIntegrator:
    """Window queries against a dense measure, exact under uniform leaves.

    Precomputes a prefix-sum tensor once; each query integrates the
    piecewise-constant leaf density over an axis-aligned box grid by linear
    interpolation of the prefix sums at fractional edges.
    """

    def __init__(self, mu: DyadicMeasure):
        self.mu = mu
        self.n = 1 << mu.depth
        self.cell = 2.0 * mu.half_width / self.n
        self.lo = -mu.half_width
        t = mu.axis_tensor()
        for axis in range(mu.dim):
            t = np.concatenate(
                [np.zeros(t.shape[:axis] + (1,) + t.shape[axis + 1 :]), np.cumsum(t, axis=axis)],
                axis=axis,
            )
        self.prefix = t

    def _edge_positions(self, edges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Integer cell index and fractional part of each edge, clamped to support."""
        rel = (np.asarray(edges, dtype=float) - self.lo) / self.cell
        rel = np.clip(rel, 0.0, float(self.n))
        i = np.minimum(rel.astype(np.int64), self.n - 1)
        f = rel - i
        return i, f

    def grid_masses(self, edges_per_axis: list[np.ndarray]) -> np.ndarray:
        """Masses of the boxes of a product grid given per-axis edge arrays."""
        t = self.prefix
        for axis, edges in enumerate(edges_per_axis):
            i, f = self._edge_positions(edges)
            lower = np.take(t, i, axis=axis)
            upper = np.take(t, i + 1, axis=axis)
            vals = lower + _expand(f, lower.ndim, axis) * (upper - lower)
            t = np.diff(vals, axis=axis)
        return t

    def box_mass(self, lo, hi) -> float:
        """Mass of a single axis-aligned box [lo, hi]."""
        edges = [np.array([float(lo[a]), float(hi[a])]) for a in range(self.mu.dim)]
        return float(self.grid_masses(edges).reshape(-1)[0])


def _expand(f: np.ndarray, ndim: int, axis: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = f.shape[0]
    return f.reshape(shape)


def translate_scale(
    mu: DyadicMeasure,
    x,
    t: float,
    out_depth: int,
    out_half_width: float = 1.0,
    integrator: BoxIntegrator | None = None,
) -> DyadicMeasure:
    """Recenter ``mu`` at ``x``, blow up by e^t, restrict and normalize.

    The output lives on the cube of half width ``out_half_width`` at depth
    ``out_depth``; its cell masses are exact integrals of the leaf-uniform
    density over the pulled-back cells. Requires the blow-up to stay within
    the stored resolution and the window to carry positive mass.
    """
    if t < 0:
        raise ValueError(f"scaling time must be >= 0, got {t}")
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (mu.dim,):
        raise ShapeError(f"point has shape {x.shape}, expected ({mu.dim},)")
    scale_inv = math.exp(-t)
    budget = (mu.half_width / out_half_width) * 2.0 ** (out_depth - mu.depth)
    if scale_inv < budget * (1.0 - 1e-12):
        raise ResolutionExceeded(
            f"window scale {scale_inv:.3g} finer than resolution budget {budget:.3g} "
            f"(depth {mu.depth}, out depth {out_depth})"
        )
    if integrator is None:
        integrator = BoxIntegrator(mu)
    n_out = 1 << out_depth
    out_edges = np.linspace(-out_half_width, out_half_width, n_out + 1)
    edges = [x[a] + scale_inv * out_edges for a in range(mu.dim)]
    cells = integrator.grid_masses(edges)
    total = float(cells.sum())
    if total <= 0.0:
        raise ConditionOnNull(f"window around {x} at scale {scale_inv:.3g} has zero mass")
    masses = _axis_to_word_order(cells / total, mu.dim, out_depth)
    return DyadicMeasure(mu.dim, masses, out_half_width)


# -- module-level forms of the measure operations -----------------------------


def conditional(mu, w, redeepen: bool = False):
    return mu.conditional(w, redeepen=redeepen)


def restrict_normalize(mu: DyadicMeasure, words) -> DyadicMeasure:
    return mu.restrict_normalize(words)


def intensity_of_family(weights, measures) -> DyadicMeasure:
    """The weighted average measure, leafwise."""
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    measures = list(measures)
    if weights.shape != (len(measures),):
        raise ShapeError("one weight per measure required")
    if np.any(weights < 0):
        raise ValueError("weights must be nonnegative")
    if abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError(f"weights sum to {weights.sum()}, expected 1")
    if not measures:
        raise ShapeError("empty family")
    first = measures[0]
    sig = (first.dim, first.depth, first.half_width)
    out = np.zeros(first.base**first.depth)
    for w, m in zip(weights, measures):
        if (m.dim, m.depth, m.half_width) != sig:
            raise ShapeError("family members must share dim, depth and support")
        if isinstance(m, ProductMeasure):
            out += w * m.level_masses(m.depth)
        else:
            out += w * m.masses
    return DyadicMeasure(first.dim, out, first.half_width)


def lebesgue(dim: int, depth: int, half_width: float = 1.0) -> DyadicMeasure:
    return DyadicMeasure.lebesgue(dim, depth, half_width)


def bernoulli(dim: int, weights, depth: int) -> DyadicMeasure:
    return DyadicMeasure.bernoulli(dim, weights, depth)


# -- measure files -------------------------------------------------------------


def measure_from_json(obj: dict):
    if obj.get("format") != "sceneryflow-measure":
        raise ValueError("not a measure record")
    kind = obj.get("kind", "dense")
    if kind == "dense":
        mu = DyadicMeasure(obj["dim"], np.array(obj["leaf_masses"]), obj["support_half_width"])
    elif kind == "product":
        mu = ProductMeasure(obj["dim"], np.array(obj["digit_laws"]))
    else:
        raise ValueError(f"unknown measure kind {kind!r}")
    if obj["depth"] != mu.depth:
        raise ValueError("depth field inconsistent with mass array")
    return mu


def save_measure(mu, path) -> None:
    with open(path, "w") as fh:
        json.dump(mu.to_json(), fh)


def load_measure(path):
    with open(path) as fh:
        return measure_from_json(json.load(fh))


def cube_center(w: Word, half_width: float = 1.0) -> np.ndarray:
    """Geometric center of the cube a word addresses, at the word's precision."""
    c = np.zeros(w.dim)
    half = half_width
    for a in w.digits:
        half /= 2.0
        for i in range(w.dim):
            c[i] += half if (a >> i) & 1 else -half
    return c
