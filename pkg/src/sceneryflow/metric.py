"""Exact bounded-Lipschitz (Dudley) distances, solved as linear programs.

The distance between two measures is the supremum of ∫f d(mu - nu) over
functions with Lipschitz constant 1 and sup norm at most 1. On a finite
atom set this is a linear program in the function values f_i:

    maximize   sum_i c_i f_i
    subject to |f_i - f_j| <= D_ij,   |f_i| <= 1,

where c is the signed mass vector and D the ground metric. The cap makes
this the Dudley metric rather than Wasserstein-1: mass never pays more
than 2 to travel.

Two solver routes are used, both exact. Point clouds living on a common
dyadic lattice (all projections of dyadic measures do) are solved on the
lattice neighbour graph: a function is 1-Lipschitz for the sup norm there
if and only if it changes by at most one spacing across each of the
3^d - 1 neighbour offsets, which keeps the constraint matrix linear in
the number of sites. Arbitrary ground metrics get the dense pairwise
formulation. A small grid-search oracle provides an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .dyadic import word_centers
from .distribution import EmpiricalDistribution, TaggedMeasure, _atom_measure, _is_pair
from .errors import OracleTooLarge, ShapeError, SolverError
from .measure import cube_center

LP_TOL = 1e-9
MAX_LATTICE_SITES = 300_000
MAX_DENSE_POINTS = 700


@dataclass(frozen=True)
class GroundMetric:
    """A finite metric given by its distance matrix."""

    dist: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ShapeError("distance matrix must be square")
        if np.any(d < 0) or np.any(np.abs(np.diag(d)) > 0):
            raise ValueError("distances must be nonnegative with zero diagonal")
        if not np.allclose(d, d.T, atol=1e-12):
            raise ValueError("distance matrix must be symmetric")
        if d.shape[0] <= 64:
            # triangle inequality, checked exhaustively on small instances
            for k in range(d.shape[0]):
                if np.any(d > d[:, [k]] + d[[k], :] + 1e-12):
                    raise ValueError("triangle inequality violated")
        object.__setattr__(self, "dist", d)

    @property
    def n(self) -> int:
        return self.dist.shape[0]


@dataclass(frozen=True)
class AtomicCloud:
    """Signed masses sitting on abstract points (a difference of measures)."""

    signed_masses: np.ndarray
    points: np.ndarray | None = None  # optional (n, d) sup-norm locations

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.signed_masses, dtype=float))
        object.__setattr__(self, "signed_masses", c)
        if self.points is not None:
            pts = np.asarray(self.points, dtype=float)
            if pts.ndim == 1:
                pts = pts[:, None]
            if pts.shape[0] != c.shape[0]:
                raise ShapeError("one point per signed mass required")
            object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.signed_masses.shape[0]


def sup_norm_ground(points: np.ndarray) -> GroundMetric:
    """Pairwise sup-norm distances of a point array of shape (n, d)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    diff = np.abs(pts[:, None, :] - pts[None, :, :]).max(axis=2)
    return GroundMetric(diff)


def _solve_lp(c: np.ndarray, rows, cols, vals, rhs, n: int) -> float:
    """maximize c.f subject to sparse difference constraints and |f| <= 1."""
    a = sparse.coo_matrix((vals, (rows, cols)), shape=(len(rhs), n)).tocsr()
    res = linprog(
        -c,
        A_ub=a,
        b_ub=np.asarray(rhs, dtype=float),
        bounds=[(-1.0, 1.0)] * n,
        method="highs",
    )
    if res.status != 0:
        raise SolverError(f"LP solver failed: {res.message}")
    return max(0.0, float(-res.fun))


def _dense_pair_lp(c: np.ndarray, dist: np.ndarray) -> float:
    n = c.shape[0]
    if n > MAX_DENSE_POINTS:
        raise SolverError(f"{n} atoms exceed the dense LP cap {MAX_DENSE_POINTS}")
    if n == 1:
        # only the sup cap binds
        return abs(float(c[0]))
    iu, ju = np.triu_indices(n, k=1)
    m = iu.shape[0]
    rows = np.repeat(np.arange(2 * m), 2)
    cols = np.empty(4 * m, dtype=np.int64)
    vals = np.empty(4 * m)
    cols[0::4], cols[1::4] = iu, ju
    vals[0::4], vals[1::4] = 1.0, -1.0
    cols[2::4], cols[3::4] = iu, ju
    vals[2::4], vals[3::4] = -1.0, 1.0
    rhs = np.empty(2 * m)
    rhs[0::2] = dist[iu, ju]
    rhs[1::2] = dist[iu, ju]
    return _solve_lp(c, rows, cols, vals, rhs, n)


def bl_distance(cloud: AtomicCloud, ground: GroundMetric | None = None) -> float:
    """Exact optimum of the bounded-Lipschitz program for a signed cloud.

    If the cloud carries sup-norm points, a ground metric is derived from
    them (and, when the points sit on a dyadic lattice, the fast lattice
    route is taken); otherwise ``ground`` must be supplied.
    """
    c = cloud.signed_masses
    if ground is None:
        if cloud.points is None:
            raise ShapeError("a ground metric is required when no points are given")
        lattice = _try_lattice_lp(cloud.points, c)
        if lattice is not None:
            return lattice
        ground = sup_norm_ground(cloud.points)
    if ground.n != c.shape[0]:
        raise ShapeError("ground metric size does not match the cloud")
    return _dense_pair_lp(c, ground.dist)


def _try_lattice_lp(points: np.ndarray, c: np.ndarray) -> float | None:
    """Lattice-graph LP for clouds whose points share a dyadic spacing.

    Returns None when the points do not embed in a manageable lattice.
    Zero-mass lattice sites are free variables; adding them does not change
    the optimum because a 1-Lipschitz capped function on the cloud extends
    to the whole lattice with the same constants.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n, d = pts.shape
    if n == 0:
        return 0.0
    # find a power-of-two spacing u with all coordinates integer multiples
    u = 1.0
    for _ in range(32):
        g = pts / u
        if np.max(np.abs(g - np.round(g))) < 1e-9:
            break
        u /= 2.0
    else:
        return None
    g = np.round(pts / u).astype(np.int64)
    if d == 1:
        return _chain_lp(g[:, 0].astype(float) * u, c)
    lo = g.min(axis=0)
    size = g.max(axis=0) - lo + 1
    n_sites = int(np.prod(size.astype(np.float64)))
    if n_sites > MAX_LATTICE_SITES:
        return None
    g = g - lo
    strides = np.ones(d, dtype=np.int64)
    for a in range(d - 2, -1, -1):
        strides[a] = strides[a + 1] * size[a + 1]
    site = (g * strides).sum(axis=1)
    cvec = np.zeros(n_sites)
    np.add.at(cvec, site, c)
    rows_list, cols_list, vals_list, rhs_list = [], [], [], []
    row0 = 0
    grids = np.unravel_index(np.arange(n_sites), tuple(size))
    offsets = [
        off
        for off in np.ndindex(*([3] * d))
        if any(o != 1 for o in off) and (np.array(off) - 1)[np.argmax(np.array(off) != 1)] > 0
    ]
    for off in offsets:
        delta = np.array(off) - 1
        mask = np.ones(n_sites, dtype=bool)
        for a in range(d):
            shifted = grids[a] + delta[a]
            mask &= (shifted >= 0) & (shifted < size[a])
        src = np.arange(n_sites)[mask]
        dst = src + (delta * strides).sum()
        m = src.shape[0]
        rows = np.repeat(np.arange(row0, row0 + 2 * m), 2)
        cols = np.empty(4 * m, dtype=np.int64)
        vals = np.empty(4 * m)
        cols[0::4], cols[1::4] = src, dst
        vals[0::4], vals[1::4] = 1.0, -1.0
        cols[2::4], cols[3::4] = src, dst
        vals[2::4], vals[3::4] = -1.0, 1.0
        rows_list.append(rows)
        cols_list.append(cols)
        vals_list.append(vals)
        rhs_list.append(np.full(2 * m, u))
        row0 += 2 * m
    return _solve_lp(
        cvec,
        np.concatenate(rows_list),
        np.concatenate(cols_list),
        np.concatenate(vals_list),
        np.concatenate(rhs_list),
        n_sites,
    )


def _chain_lp(positions: np.ndarray, c: np.ndarray) -> float:
    """One-dimensional clouds: consecutive-gap constraints generate the metric."""
    order = np.argsort(positions)
    pos = positions[order]
    uniq, inverse = np.unique(pos, return_inverse=True)
    cvec = np.zeros(uniq.shape[0])
    np.add.at(cvec, inverse, c[order])
    n = uniq.shape[0]
    if n == 1:
        return abs(float(cvec[0]))
    gaps = np.diff(uniq)
    if abs(cvec.sum()) <= 1e-12 and uniq[-1] - uniq[0] <= 2.0:
        # zero net mass on a span <= 2: any 1-Lipschitz maximizer can be
        # centered without changing the objective, so the sup cap never
        # binds and the optimum is the cumulative-sum form
        cum = np.cumsum(cvec)[:-1]
        return max(0.0, float(np.abs(cum) @ gaps))
    m = n - 1
    rows = np.repeat(np.arange(2 * m), 2)
    cols = np.empty(4 * m, dtype=np.int64)
    vals = np.empty(4 * m)
    idx = np.arange(m)
    cols[0::4], cols[1::4] = idx, idx + 1
    vals[0::4], vals[1::4] = 1.0, -1.0
    cols[2::4], cols[3::4] = idx, idx + 1
    vals[2::4], vals[3::4] = -1.0, 1.0
    rhs = np.empty(2 * m)
    rhs[0::2] = gaps
    rhs[1::2] = gaps
    return _solve_lp(cvec, rows, cols, vals, rhs, n)


def brute_force_bl(cloud: AtomicCloud, ground: GroundMetric, grid_step: float) -> float:
    """Grid search over capped Lipschitz-feasible function values.

    A lower bound on :func:`bl_distance` converging as the grid refines;
    limited to four atoms.
    """
    c = cloud.signed_masses
    n = c.shape[0]
    if n > 4:
        raise OracleTooLarge(f"{n} atoms exceed the oracle cap of 4")
    if ground.n != n:
        raise ShapeError("ground metric size does not match the cloud")
    npts = int(round(2.0 / grid_step)) + 1
    axis = np.linspace(-1.0, 1.0, npts)
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    flat = np.stack([g.reshape(-1) for g in grids], axis=1)
    feasible = np.ones(flat.shape[0], dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            feasible &= np.abs(flat[:, i] - flat[:, j]) <= ground.dist[i, j] + 1e-12
    values = flat[feasible] @ c
    return max(0.0, float(values.max()))


# -- measure- and distribution-level distances ---------------------------------


def project(mu, k: int):
    """Atom list of the level-k projection: one atom per cube at its center.

    Returns (points, masses) with points of shape (2^(dim*k), dim).
    """
    masses = mu.level_masses(k)
    pts = word_centers(mu.dim, k, getattr(mu, "half_width", 1.0))
    return pts, masses


def measure_distance(mu, nu, p: int) -> float:
    """Bounded-Lipschitz distance between level-p projections."""
    if mu.dim != nu.dim:
        raise ShapeError("measures must share dimension")
    if getattr(mu, "half_width", 1.0) != getattr(nu, "half_width", 1.0):
        raise ShapeError("measures must share support")
    pts, a = project(mu, p)
    _, b = project(nu, p)
    return bl_distance(AtomicCloud(a - b, pts))


def _pair_point(atom: TaggedMeasure) -> np.ndarray:
    return cube_center(atom.x)


def distribution_distance(p: EmpiricalDistribution, q: EmpiricalDistribution, res: int) -> float:
    """Bounded-Lipschitz distance one level up: atoms are measures (or pairs).

    The ground metric between atoms is the measure distance at resolution
    ``res``; for measure-point pairs it is the maximum of the measure
    distance and the sup distance of the tracked points.
    """
    if p.dim != q.dim or p.is_pair_valued != q.is_pair_valued:
        raise ShapeError("distributions must share dimension and atom kind")
    if res > min(p.fingerprint_depth, q.fingerprint_depth):
        raise ShapeError(f"resolution {res} exceeds the declared fingerprint depth")
    reps: list = []  # (level-res masses, word digits or None, representative atom)
    signed: list[float] = []

    def locate(atom) -> int:
        mu = _atom_measure(atom)
        fp = mu.level_masses(res)
        word = atom.x.digits if _is_pair(atom) else None
        for i, (rfp, rword, _) in enumerate(reps):
            if rword == word and rfp.shape == fp.shape and np.max(np.abs(rfp - fp)) <= 1e-12:
                return i
        reps.append((fp, word, atom))
        signed.append(0.0)
        return len(reps) - 1

    for w, a in p.atoms:
        signed[locate(a)] += w
    for w, a in q.atoms:
        signed[locate(a)] -= w
    n = len(reps)
    if n == 1:
        return 0.0
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = measure_distance(_atom_measure(reps[i][2]), _atom_measure(reps[j][2]), res)
            if reps[i][1] is not None:
                pd = float(
                    np.max(np.abs(_pair_point(reps[i][2]) - _pair_point(reps[j][2])))
                )
                d = max(d, pd)
            dist[i, j] = dist[j, i] = d
    return _dense_pair_lp(np.array(signed), dist)


__all__ = [
    "GroundMetric",
    "AtomicCloud",
    "sup_norm_ground",
    "bl_distance",
    "brute_force_bl",
    "project",
    "measure_distance",
    "distribution_distance",
]
