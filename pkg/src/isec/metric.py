"""Finite metric spaces, sampled normed spaces, distances to sets and open balls.

Distances are kept either as float64 or, for instances declared exact, as
:class:`fractions.Fraction` entries in an object array. All downstream code is
written against numpy operations that work for both dtypes, so theorem checks
on rational instances never depend on rounding.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from numbers import Rational
from typing import Hashable, Iterable, Sequence

import numpy as np

from .errors import DomainError, InstanceError, MetricError

FLOAT_TOL = 1e-9
NORM_KINDS = ("l1", "l2", "linf")


def as_exact(value) -> Fraction:
    """Convert ``value`` to a Fraction; floats go through their decimal repr."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, (float, np.floating)):
        if not np.isfinite(value):
            raise DomainError(f"non-finite value {value!r} in exact arithmetic")
        return Fraction(repr(float(value)))
    if isinstance(value, (np.integer,)):
        return Fraction(int(value))
    raise DomainError(f"cannot convert {value!r} to an exact rational")


def to_matrix(rows, exact: bool) -> np.ndarray:
    """Copy ``rows`` into a float64 array, or an object array of Fractions."""
    if not exact:
        return np.array(np.asarray(rows, dtype=float), copy=True)
    rows = rows.tolist() if isinstance(rows, np.ndarray) else rows
    out = np.empty((len(rows), len(rows[0]) if len(rows) else 0), dtype=object)
    for i, row in enumerate(rows):
        if len(row) != out.shape[1]:
            raise InstanceError("distance matrix rows have unequal lengths")
        for j, v in enumerate(row):
            out[i, j] = as_exact(v)
    return out


def default_tol(exact: bool, tol: float | None = None):
    if tol is not None:
        return Fraction(0) if exact and tol == 0 else tol
    return 0 if exact else FLOAT_TOL


def norm(v, kind: str = "l2") -> float:
    v = np.asarray(v, dtype=float)
    if kind == "l2":
        return float(np.linalg.norm(v, 2))
    if kind == "l1":
        return float(np.abs(v).sum())
    if kind == "linf":
        return float(np.abs(v).max()) if v.size else 0.0
    raise DomainError(f"unknown norm kind {kind!r}; expected one of {NORM_KINDS}")


def pairwise_norm_distances(vectors: np.ndarray, kind: str) -> np.ndarray:
    diff = vectors[:, None, :] - vectors[None, :, :]
    if kind == "l2":
        return np.sqrt((diff**2).sum(axis=-1))
    if kind == "l1":
        return np.abs(diff).sum(axis=-1)
    if kind == "linf":
        return np.abs(diff).max(axis=-1)
    raise DomainError(f"unknown norm kind {kind!r}; expected one of {NORM_KINDS}")


def first_metric_violation(
    dist: np.ndarray, tol, *, triangle: bool = True
) -> tuple[str, tuple[int, ...]] | None:
    """Return ``(axiom, indices)`` for the first violated axiom, or None.

    Axioms are tested in the order: zero diagonal, symmetry, separation,
    triangle inequality. Indices are the lexicographically first offender.
    """
    n = dist.shape[0]
    if dist.shape != (n, n):
        return "square", ()
    if dist.dtype != object and not np.all(np.isfinite(dist)):
        bad = tuple(int(i) for i in np.argwhere(~np.isfinite(dist))[0])
        return "finite", bad
    for i in range(n):
        if dist[i, i] != 0:
            return "identity", (i, i)
    asym = np.argwhere(np.abs(dist - dist.T) > tol)
    if len(asym):
        return "symmetry", tuple(int(v) for v in asym[0])
    off = ~np.eye(n, dtype=bool)
    nonpos = np.argwhere(off & (dist <= 0))
    if len(nonpos):
        return "separation", tuple(int(v) for v in nonpos[0])
    if not triangle:
        return None
    # axes (i, j, k): dist[i,k] > dist[i,j] + dist[j,k] + tol, chunked over i
    chunk = max(1, 2_000_000 // max(1, n * n))
    for start in range(0, n, chunk):
        block = dist[start : start + chunk]
        via = block[:, :, None] + dist[None, :, :]
        bad = np.argwhere(block[:, None, :] > via + tol)
        if len(bad):
            i, j, k = (int(v) for v in bad[0])
            return "triangle", (i + start, j, k)
    return None


class FiniteMetricSpace:
    """A finite set of hashable point identifiers with a validated distance matrix.

    Parameters
    ----------
    points:
        Opaque, hashable identifiers (lists are converted to tuples).
    dist:
        ``n x n`` matrix of distances.
    exact:
        Store distances as Fractions and compare without tolerance.
    trusted:
        Skip the O(n^3) triangle check (cheaper axioms are still checked).
    """

    def __init__(
        self,
        points: Sequence[Hashable],
        dist,
        *,
        exact: bool = False,
        trusted: bool = False,
        tol: float | None = None,
    ):
        self.points = tuple(_freeze(p) for p in points)
        self.exact = bool(exact)
        self.tol = default_tol(self.exact, tol)
        self._index = {}
        for i, p in enumerate(self.points):
            if p in self._index:
                raise InstanceError(f"duplicate point identifier {p!r}")
            self._index[p] = i
        self.dist = to_matrix(dist, self.exact)
        n = len(self.points)
        if self.dist.shape != (n, n):
            raise InstanceError(
                f"distance matrix has shape {self.dist.shape}, expected ({n}, {n})"
            )
        self._validate(trusted)
        self.dist.setflags(write=False)

    def _validate(self, trusted: bool) -> None:
        violation = first_metric_violation(self.dist, self.tol, triangle=not trusted)
        if violation is not None:
            axiom, idx = violation
            raise MetricError(f"distance matrix violates {axiom} at indices {idx}", idx)

    @property
    def n(self) -> int:
        return len(self.points)

    def __len__(self) -> int:
        return len(self.points)

    def __contains__(self, point) -> bool:
        return _freeze(point) in self._index

    def __repr__(self) -> str:
        kind = "exact" if self.exact else "float"
        return f"FiniteMetricSpace(n={self.n}, {kind})"

    def index(self, point) -> int:
        try:
            return self._index[_freeze(point)]
        except (KeyError, TypeError):
            raise InstanceError(f"unknown point identifier {point!r}") from None

    def indices(self, points: Iterable) -> np.ndarray:
        return np.fromiter((self.index(p) for p in points), dtype=int)

    def coerce(self, value):
        """Bring a user-supplied scalar into this space's arithmetic."""
        return as_exact(value) if self.exact else float(value)

    def dist_between(self, x1, x2):
        return self.dist[self.index(x1), self.index(x2)]

    def dist_to_set(self, x, S: Iterable, *, witness: bool = False):
        """Distance from ``x`` to the nonempty set ``S``; optionally the lowest-index witness."""
        idx = np.unique(self.indices(S))
        if idx.size == 0:
            raise DomainError("distance to an empty set is undefined")
        row = self.dist[self.index(x), idx]
        k = int(np.argmin(row))
        value = row[k]
        if witness:
            return value, self.points[int(idx[k])]
        return value

    def ball_indices(self, i: int, r) -> np.ndarray:
        return np.flatnonzero(self.dist[i] < r)

    def ball(self, x, r) -> frozenset:
        """Open ball ``{x' : d(x, x') < r}``; empty for ``r <= 0``."""
        return frozenset(self.points[j] for j in self.ball_indices(self.index(x), r))

    def diameter(self):
        return self.dist.max() if self.n else 0


def dist(space: FiniteMetricSpace, x1, x2):
    return space.dist_between(x1, x2)


def dist_to_set(space: FiniteMetricSpace, x, S, *, witness: bool = False):
    return space.dist_to_set(x, S, witness=witness)


def ball(space: FiniteMetricSpace, x, r) -> frozenset:
    return space.ball(x, r)


class NormedInstance:
    """Finitely many sampled vectors of ``R^n`` under an l1, l2 or linf norm."""

    def __init__(self, vectors, norm_kind: str = "l2"):
        if norm_kind not in NORM_KINDS:
            raise DomainError(f"unknown norm kind {norm_kind!r}; expected one of {NORM_KINDS}")
        self.vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
        if self.vectors.size == 0:
            self.vectors = self.vectors.reshape(0, 0)
        self.norm_kind = norm_kind

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def distance_matrix(self) -> np.ndarray:
        return pairwise_norm_distances(self.vectors, self.norm_kind)

    def to_metric_space(self, points: Sequence[Hashable] | None = None, **kwargs) -> FiniteMetricSpace:
        if points is None:
            points = [tuple(float(c) for c in v) for v in self.vectors]
        return FiniteMetricSpace(points, self.distance_matrix(), **kwargs)

    def homogeneity_defect(self, betas: Sequence[float] = (-2.0, -0.5, 0.5, 3.0)) -> float:
        """Largest ``| ||bu|| - |b| ||u|| |`` over sampled vectors and scalars."""
        worst = 0.0
        for v, b in itertools.product(self.vectors, betas):
            worst = max(worst, abs(norm(b * v, self.norm_kind) - abs(b) * norm(v, self.norm_kind)))
        return worst


def grid_linf(rows: int, cols: int, *, metric: str = "linf") -> FiniteMetricSpace:
    """``cols x rows`` integer grid; point ``(c, r)`` sits in column ``c``.

    Distances are exact integers (l-infinity by default, l1 optional).
    """
    if rows < 1 or cols < 1:
        raise DomainError("grid needs at least one row and one column")
    pts = [(c, r) for c in range(cols) for r in range(rows)]
    arr = np.array(pts)
    diff = np.abs(arr[:, None, :] - arr[None, :, :])
    if metric == "linf":
        d = diff.max(axis=-1)
    elif metric == "l1":
        d = diff.sum(axis=-1)
    else:
        raise DomainError(f"grid metric must be 'linf' or 'l1', got {metric!r}")
    return FiniteMetricSpace(pts, d.tolist(), exact=True, trusted=True)


def cyclic_product(m: int, n: int, *, metric: str = "linf") -> FiniteMetricSpace:
    """``Z_m x Z_n`` with the product of the two cycle metrics; fibers are the ``Z_n`` cosets."""
    if m < 1 or n < 1:
        raise DomainError("cyclic orders must be positive")
    pts = [(c, r) for c in range(m) for r in range(n)]
    arr = np.array(pts)
    diff = np.abs(arr[:, None, :] - arr[None, :, :])
    cyc = np.stack([np.minimum(diff[..., 0], m - diff[..., 0]), np.minimum(diff[..., 1], n - diff[..., 1])], -1)
    d = cyc.max(axis=-1) if metric == "linf" else cyc.sum(axis=-1)
    return FiniteMetricSpace(pts, d.tolist(), exact=True, trusted=True)


def shortest_path_metric(weights) -> np.ndarray:
    """Floyd-Warshall closure of a symmetric positive weight matrix (works on object arrays)."""
    d = np.array(weights, dtype=object if _is_object(weights) else float, copy=True)
    n = d.shape[0]
    for i in range(n):
        d[i, i] = 0 * d[i, i]
    for k in range(n):
        d = np.minimum(d, d[:, k : k + 1] + d[k : k + 1, :])
    return d


def _is_object(weights) -> bool:
    return isinstance(weights, np.ndarray) and weights.dtype == object


def _freeze(p):
    if isinstance(p, list):
        return tuple(_freeze(v) for v in p)
    if isinstance(p, np.ndarray):
        return tuple(_freeze(v) for v in p.tolist())
    return p
