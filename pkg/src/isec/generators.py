"""Seeded instance factories: grids, cyclic products, random metrics and linear fibrations."""

from __future__ import annotations

import numpy as np

from .errors import DomainError
from .fibration import Fibration, Section
from .linear import LinearFibration, grid_1d
from .metric import FiniteMetricSpace, cyclic_product, grid_linf, shortest_path_metric


def column_fibration(space: FiniteMetricSpace, measure="counting") -> Fibration:
    """Fibers are the columns ``{(c, r)}`` of a grid-like space."""
    fiber_of = {p: p[0] for p in space.points}
    labels = sorted({p[0] for p in space.points})
    if measure == "counting":
        measure = {y: 1 for y in labels}
    return Fibration(space, fiber_of, labels, measure)


def grid(rows: int, cols: int, metric: str = "linf", measure="counting") -> Fibration:
    """``G1 = grid(3, 3)``, ``G9 = grid(3, 9)``: columns are fibers, l-infinity by default."""
    return column_fibration(grid_linf(rows, cols, metric=metric), measure)


def cyclic(m: int, n: int, metric: str = "linf", measure="counting") -> Fibration:
    return column_fibration(cyclic_product(m, n, metric=metric), measure)


def identity_row(fib: Fibration, row: int = 0) -> Section:
    return Section(fib, {y: (y, row) for y in fib.labels})


def zigzag(fib: Fibration) -> Section:
    """Row 0 on even columns and the top row on odd columns."""
    top = max(p[1] for p in fib.space.points)
    return Section(fib, {y: (y, top if y % 2 else 0) for y in fib.labels})


def random_section(fib: Fibration, rng: np.random.Generator, through=None) -> Section:
    """Uniform random section; ``through=(label, point)`` pins one choice."""
    choice = {}
    for y in fib.labels:
        idx = fib.fiber_indices(y)
        choice[y] = fib.space.points[int(rng.choice(idx))]
    if through is not None:
        choice[through[0]] = through[1]
    return Section(fib, choice)


def random_fibration(
    rng: np.random.Generator,
    n_fibers: int,
    max_per_fiber: int,
    *,
    exact: bool = True,
    max_weight: int = 6,
    measure: bool = False,
    equal_sizes: bool = False,
) -> Fibration:
    """Random metric (shortest paths of a random complete weighted graph), randomly partitioned.

    Exact instances have integer edge weights in ``[1, max_weight]``; float
    instances have uniform weights in ``[0.5, max_weight]``. With
    ``equal_sizes`` every fiber gets exactly ``max_per_fiber`` points.
    """
    if n_fibers < 1 or max_per_fiber < 1:
        raise DomainError("need at least one fiber and one point per fiber")
    if equal_sizes:
        sizes = np.full(n_fibers, max_per_fiber)
    else:
        sizes = rng.integers(1, max_per_fiber + 1, size=n_fibers)
    n = int(sizes.sum())
    if exact:
        w = rng.integers(1, max_weight + 1, size=(n, n))
        w = np.triu(w, 1)
        w = (w + w.T).astype(object)
    else:
        w = rng.uniform(0.5, max_weight, size=(n, n))
        w = np.triu(w, 1)
        w = w + w.T
    d = shortest_path_metric(w)
    points = list(range(n))
    space = FiniteMetricSpace(points, d, exact=exact, trusted=True)
    fiber_of = {}
    i = 0
    for y, s in enumerate(sizes):
        for _ in range(int(s)):
            fiber_of[i] = y
            i += 1
    perm = rng.permutation(n)
    fiber_of = {int(perm[p]): y for p, y in fiber_of.items()}
    weights = None
    if measure:
        weights = {y: int(v) for y, v in enumerate(rng.integers(1, 4, size=n_fibers))}
    return Fibration(space, fiber_of, list(range(n_fibers)), weights)


def random_linear(
    rng: np.random.Generator,
    *,
    n: int | None = None,
    k: int | None = None,
    norm_kind: str | None = None,
    grid_size: int = 7,
    fiber_radius: float | None = None,
) -> LinearFibration:
    n = int(rng.integers(2, 5)) if n is None else n
    k = int(rng.integers(1, n)) if k is None else k
    if not 1 <= k <= n:
        raise DomainError(f"need 1 <= k <= n, got k={k}, n={n}")
    norm_kind = str(rng.choice(["l1", "l2", "linf"])) if norm_kind is None else norm_kind
    while True:
        A = np.round(rng.normal(size=(k, n)), 3)
        if np.linalg.matrix_rank(A) == k and np.linalg.cond(A) < 50:
            break
    grid_pts = np.round(rng.uniform(-5, 5, size=(grid_size, k)), 3)
    grid_pts = np.unique(grid_pts, axis=0)
    return LinearFibration(A, norm_kind, grid_pts, 1.0, fiber_radius)


def linear_line(A=(1.0, 0.0), lo: float = -5, hi: float = 5, norm_kind: str = "l2", fiber_radius=None) -> LinearFibration:
    """One-dimensional target sampled on the integer grid ``lo..hi``."""
    return LinearFibration(np.atleast_2d(A), norm_kind, grid_1d(lo, hi), 1.0, fiber_radius)
