"""Symbolic coding of the dyadic hierarchy on the cube [-1,1]^d.

Points and cubes are addressed by words over the alphabet {0, ..., 2^d - 1}.
Digit ``a`` encodes one binary choice per coordinate: bit ``i`` of ``a`` picks
the upper half ``[0,1]`` over the lower half ``[-1,0)`` in coordinate ``i``,
so for d=1 a word reads as the binary expansion of the point. The cube at
level k has side length ``2 * 2**-k``. Cubes are half-open except that the
top face of the whole cube is kept closed, so every point of the cube has a
well-defined address at every level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_WORD_LEN = 32


@dataclass(frozen=True)
class Word:
    """A finite dyadic address: a digit sequence over {0, ..., 2^d - 1}."""

    digits: tuple[int, ...]
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dim}")
        if len(self.digits) > MAX_WORD_LEN:
            raise ValueError(f"word length {len(self.digits)} exceeds {MAX_WORD_LEN}")
        base = 1 << self.dim
        for a in self.digits:
            if not 0 <= a < base:
                raise ValueError(f"digit {a} outside alphabet of size {base}")

    def __len__(self):
        return len(self.digits)

    @property
    def base(self) -> int:
        """Alphabet size 2^d."""
        return 1 << self.dim

    def prefix(self, k: int) -> "Word":
        """The first k digits."""
        return Word(self.digits[:k], self.dim)

    def suffix(self, k: int) -> "Word":
        """The word with the first k digits dropped (the k-fold shift)."""
        return Word(self.digits[k:], self.dim)

    def concat(self, other: "Word") -> "Word":
        if other.dim != self.dim:
            raise ValueError("cannot concatenate words of different dimension")
        return Word(self.digits + other.digits, self.dim)

    def index(self) -> int:
        """Lexicographic rank of the word among words of the same length."""
        idx = 0
        for a in self.digits:
            idx = idx * self.base + a
        return idx


def word_from_index(index: int, length: int, dim: int) -> Word:
    """Inverse of :meth:`Word.index` for words of a given length."""
    base = 1 << dim
    digits = []
    for _ in range(length):
        digits.append(index % base)
        index //= base
    if index:
        raise ValueError("index out of range for the given length")
    return Word(tuple(reversed(digits)), dim)


@dataclass(frozen=True)
class CubeRef:
    """Geometric cube named by a word: its center and half side length."""

    word: Word
    center: tuple[float, ...]
    half_width: float


@dataclass(frozen=True)
class Homothety:
    """Orientation-preserving map z -> scale * z + offset."""

    scale: float
    offset: tuple[float, ...]

    def apply(self, x) -> np.ndarray:
        return self.scale * np.asarray(x, dtype=float) + np.asarray(self.offset)

    def compose(self, inner: "Homothety") -> "Homothety":
        """The map self o inner."""
        off = self.scale * np.asarray(inner.offset) + np.asarray(self.offset)
        return Homothety(self.scale * inner.scale, tuple(off))


def word_to_cube(w: Word) -> CubeRef:
    """The cube addressed by ``w`` under the fixed child enumeration."""
    center = np.zeros(w.dim)
    half = 1.0
    for a in w.digits:
        half /= 2.0
        for i in range(w.dim):
            center[i] += half if (a >> i) & 1 else -half
    return CubeRef(w, tuple(center), half)


def cube_homothety(w: Word) -> Homothety:
    """The homothety mapping the cube of ``w`` onto the whole cube [-1,1]^d.

    Satisfies ``cube_homothety(wv) = cube_homothety(v) o cube_homothety(w)``.
    """
    cube = word_to_cube(w)
    scale = 2.0 ** len(w)
    offset = tuple(-scale * c for c in cube.center)
    return Homothety(scale, offset)


def point_to_word(x, depth: int, dim: int | None = None) -> Word:
    """The length-``depth`` address of a point of [-1,1]^d.

    Boundary points resolve by the half-open convention (lower halves are
    half-open; the top face stays in the upper half at every level).
    """
    z = np.asarray(x, dtype=float).copy()
    if z.ndim == 0:
        z = z.reshape(1)
    d = int(z.shape[0]) if dim is None else dim
    if z.shape != (d,):
        raise ValueError(f"point has shape {z.shape}, expected ({d},)")
    if np.any(np.abs(z) > 1.0):
        raise ValueError(f"point {x} outside [-1,1]^{d}")
    digits = []
    for _ in range(depth):
        a = 0
        for i in range(d):
            if z[i] >= 0.0:
                a |= 1 << i
                z[i] = 2.0 * z[i] - 1.0
            else:
                z[i] = 2.0 * z[i] + 1.0
        digits.append(a)
    return Word(tuple(digits), d)


def word_centers(dim: int, level: int, half_width: float = 1.0) -> np.ndarray:
    """Centers of all level-``level`` cubes, in lexicographic word order.

    Returns an array of shape (2^(dim*level), dim). ``half_width`` scales the
    ambient cube (2 for the doubled cube [-2,2]^d).
    """
    base = 1 << dim
    n = base**level
    idx = np.arange(n)
    centers = np.zeros((n, dim))
    half = half_width
    # digits from most significant to least
    for j in range(level):
        digit = (idx // base ** (level - 1 - j)) % base
        half /= 2.0
        for i in range(dim):
            bit = (digit >> i) & 1
            centers[:, i] += np.where(bit, half, -half)
    return centers
