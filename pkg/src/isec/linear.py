"""Linear quotient maps on normed spaces: convex combinations, sums and scalar multiples of sections.

The quotient is ``pi(x) = A x`` with ``A`` of full row rank. A fibration
carries a ``scale`` ``lam`` and represents the rescaled quotient
``(1/lam) pi``, whose fiber over ``y`` is ``{x : A x = lam y}``. Sums and
scalar multiples of sections change the scale, so "``phi + eta`` is a section
of ``(1/2) pi``" is a checkable property rather than a remark.

Fibers may optionally be truncated to ``{x in fiber : ||x - lam A^+ y|| <=
|lam| rho}``, which models quotients whose fibers have bounded diameter.
Truncation radii scale with ``lam`` so that ``lam * fiber_1(y)`` is exactly the
fiber of the rescaled quotient.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog

from .errors import DomainError, InstanceError, PreconditionError
from .metric import NORM_KINDS, norm
from .qi import QIConstants

SECTION_TOL = 1e-10


class LinearFibration:
    def __init__(
        self,
        A,
        norm_kind: str = "l2",
        y_grid=None,
        scale: float = 1.0,
        fiber_radius: float | None = None,
    ):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        k, n = self.A.shape
        if k > n:
            raise InstanceError(f"A is {k}x{n}; need target_dim <= ambient_dim")
        if np.linalg.matrix_rank(self.A) < k:
            raise InstanceError("A must have full row rank")
        if norm_kind not in NORM_KINDS:
            raise InstanceError(f"unknown norm {norm_kind!r}; expected one of {NORM_KINDS}")
        if scale == 0 or not np.isfinite(scale):
            raise DomainError(f"scale must be a nonzero finite real, got {scale!r}")
        if fiber_radius is not None and not fiber_radius >= 0:
            raise DomainError("fiber_radius must be >= 0")
        self.norm_kind = norm_kind
        self.scale = float(scale)
        self.fiber_radius = None if fiber_radius is None else float(fiber_radius)
        grid = np.zeros((0, k)) if y_grid is None else np.asarray(y_grid, dtype=float)
        self.y_grid = grid.reshape(len(grid), k)
        self.pinv = np.linalg.pinv(self.A)
        self.null_basis = null_space(self.A)
        self._gram = self.A @ self.A.T

    def __repr__(self) -> str:
        k, n = self.A.shape
        return f"LinearFibration(n={n}, k={k}, norm={self.norm_kind}, scale={self.scale}, |grid|={len(self.y_grid)})"

    @property
    def ambient_dim(self) -> int:
        return self.A.shape[1]

    @property
    def target_dim(self) -> int:
        return self.A.shape[0]

    @property
    def labels(self) -> tuple:
        return tuple(range(len(self.y_grid)))

    @property
    def radius(self) -> float | None:
        """Effective truncation radius ``|scale| * fiber_radius``."""
        return None if self.fiber_radius is None else abs(self.scale) * self.fiber_radius

    def same_quotient(self, other: "LinearFibration") -> bool:
        return (
            self.A.shape == other.A.shape
            and np.array_equal(self.A, other.A)
            and self.norm_kind == other.norm_kind
            and np.array_equal(self.y_grid, other.y_grid)
            and self.fiber_radius == other.fiber_radius
        )

    def rescaled(self, factor: float) -> "LinearFibration":
        return LinearFibration(
            self.A, self.norm_kind, self.y_grid, self.scale * factor, self.fiber_radius
        )

    def center(self, y) -> np.ndarray:
        return self.scale * (self.pinv @ np.asarray(y, dtype=float))

    def project(self, x) -> np.ndarray:
        """``(1/scale) A x``: the label-space image under the rescaled quotient."""
        return (self.A @ np.asarray(x, dtype=float)) / self.scale

    def in_fiber(self, x, y, tol: float = SECTION_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        target = self.scale * np.asarray(y, dtype=float)
        if np.linalg.norm(self.A @ x - target, np.inf) > tol * max(1.0, np.abs(target).max(initial=0)):
            return False
        if self.radius is not None:
            return norm(x - self.center(y), self.norm_kind) <= self.radius + tol * max(1.0, self.radius)
        return True

    def fiber_diameter_bound(self) -> float:
        """Diameter of every (truncated) fiber; infinite for untruncated nontrivial fibers."""
        if self.null_basis.shape[1] == 0:
            return 0.0
        if self.radius is None:
            return float("inf")
        return 2.0 * self.radius

    def dist_to_fiber(self, x, y) -> float:
        return dist_to_affine_fiber(x, y, self)

    def fiber_points(self, y, coords) -> np.ndarray:
        """Points ``center(y) + N z`` for rows ``z`` of ``coords`` (no truncation applied)."""
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        return self.center(y)[None, :] + coords @ self.null_basis.T


def dist_to_affine_fiber(x, y, fibration: LinearFibration) -> float:
    """Distance from ``x`` to the fiber of ``y`` under ``(1/scale) pi``.

    l2 is closed form (minimal-norm correction ``A^T (A A^T)^-1 (A x - lam y)``,
    plus a radial term when the fiber is truncated); l1 and linf solve a small
    linear program over the fiber parametrisation ``x0 + N z``.
    """
    fib = fibration
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    c = fib.center(y)
    N = fib.null_basis
    if N.shape[1] == 0:
        return norm(x - c, fib.norm_kind)
    if fib.norm_kind == "l2":
        residual = fib.A @ x - fib.scale * y
        perp = fib.A.T @ np.linalg.solve(fib._gram, residual)
        d_perp = float(np.linalg.norm(perp))
        if fib.radius is None:
            return d_perp
        along = float(np.linalg.norm(N.T @ (x - c)))
        excess = max(0.0, along - fib.radius)
        return float(np.hypot(d_perp, excess))
    return _lp_fiber_distance(x - c, N, fib.radius, fib.norm_kind)


def _lp_fiber_distance(r: np.ndarray, N: np.ndarray, radius: float | None, kind: str) -> float:
    """``min_z ||r - N z||`` subject to ``||N z|| <= radius`` in the l1 or linf norm."""
    n, m = N.shape
    l1 = kind == "l1"
    nt = n if l1 else 1
    ns = (n if l1 else 0) if radius is not None else 0
    nv = m + nt + ns
    cost = np.zeros(nv)
    cost[m : m + nt] = 1.0
    rows, rhs = [], []
    T = np.eye(n) if l1 else np.ones((n, 1))
    # +-(r - N z) <= t
    for sign in (1.0, -1.0):
        block = np.zeros((n, nv))
        block[:, :m] = -sign * N
        block[:, m : m + nt] = -T
        rows.append(block)
        rhs.append(-sign * r)
    if radius is not None:
        if l1:
            for sign in (1.0, -1.0):
                block = np.zeros((n, nv))
                block[:, :m] = sign * N
                block[:, m + nt :] = -np.eye(n)
                rows.append(block)
                rhs.append(np.zeros(n))
            total = np.zeros((1, nv))
            total[0, m + nt :] = 1.0
            rows.append(total)
            rhs.append(np.array([radius]))
        else:
            rows.extend([_pad(N, nv), _pad(-N, nv)])
            rhs.extend([np.full(n, radius), np.full(n, radius)])
    bounds = [(None, None)] * m + [(0, None)] * (nt + ns)
    res = linprog(cost, A_ub=np.vstack(rows), b_ub=np.concatenate(rhs), bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"fiber-distance LP failed: {res.message}")
    return float(max(res.fun, 0.0))


def _pad(N: np.ndarray, nv: int) -> np.ndarray:
    out = np.zeros((N.shape[0], nv))
    out[:, : N.shape[1]] = N
    return out


class LinearSection:
    """Values ``phi(y)`` for every grid label ``y``, lying in the fibers of ``fibration``."""

    exact = False
    tol = 1e-9

    def __init__(self, fibration: LinearFibration, values, *, check: bool = True):
        self.fibration = fibration
        vals = np.asarray(values, dtype=float)
        if vals.shape != (len(fibration.y_grid), fibration.ambient_dim):
            raise PreconditionError(
                f"section values have shape {vals.shape}, expected "
                f"({len(fibration.y_grid)}, {fibration.ambient_dim})"
            )
        self.values = vals
        self.values.setflags(write=False)
        if check:
            for k, y in enumerate(fibration.y_grid):
                if not fibration.in_fiber(vals[k], y):
                    raise PreconditionError(
                        f"value at grid label {k} is not in the fiber of y={y.tolist()} "
                        f"for scale {fibration.scale}"
                    )

    def __repr__(self) -> str:
        return f"LinearSection(scale={self.fibration.scale}, |grid|={len(self.values)})"

    @property
    def labels(self) -> tuple:
        return self.fibration.labels

    @property
    def scale(self) -> float:
        return self.fibration.scale

    def __call__(self, y) -> np.ndarray:
        return self.values[y]

    @staticmethod
    def coerce(value) -> float:
        return float(value)

    def _norms(self, diff: np.ndarray) -> np.ndarray:
        kind = self.fibration.norm_kind
        if kind == "l2":
            return np.sqrt((diff**2).sum(axis=-1))
        if kind == "l1":
            return np.abs(diff).sum(axis=-1)
        return np.abs(diff).max(axis=-1)

    def graph_distances(self) -> np.ndarray:
        v = self.values
        return self._norms(v[:, None, :] - v[None, :, :])

    @cached_property
    def _fiber_distances(self) -> np.ndarray:
        fib = self.fibration
        out = np.empty((len(self.values), len(fib.y_grid)))
        for k1, x in enumerate(self.values):
            for k2, y in enumerate(fib.y_grid):
                out[k1, k2] = 0.0 if k1 == k2 else dist_to_affine_fiber(x, y, fib)
        return out

    def fiber_distances(self) -> np.ndarray:
        return self._fiber_distances

    def _same_quotient(self, other: "LinearSection") -> None:
        a, b = self.fibration, other.fibration
        if not a.same_quotient(b) or a.scale != b.scale:
            raise PreconditionError("sections belong to different (scaled) quotients")

    def distances_along(self, other: "LinearSection") -> np.ndarray:
        self._same_quotient(other)
        return self._norms(self.values - other.values)

    def distances_from_value(self, other: "LinearSection", y) -> np.ndarray:
        self._same_quotient(other)
        return self._norms(self.values - other.values[y][None, :])

    def agrees_at(self, other: "LinearSection", y) -> bool:
        p, q = self.values[y], other.values[y]
        return bool(np.allclose(p, q, rtol=0, atol=SECTION_TOL * max(1.0, np.abs(q).max(initial=0))))


def convex_combination(phi: LinearSection, eta: LinearSection, t: float) -> LinearSection:
    """``t phi + (1 - t) eta``; a section of the same quotient by linearity."""
    if not 0 <= t <= 1:
        raise DomainError(f"t must lie in [0, 1], got {t!r}")
    phi._same_quotient(eta)
    return LinearSection(phi.fibration, t * phi.values + (1 - t) * eta.values)


def section_sum(phi: LinearSection, eta: LinearSection) -> LinearSection:
    """``phi + eta`` as a section of the quotient rescaled by ``scale_phi + scale_eta``."""
    a, b = phi.fibration, eta.fibration
    if not a.same_quotient(b):
        raise PreconditionError("sections belong to different quotients")
    if a.scale + b.scale == 0:
        raise DomainError("scales cancel; the sum is not a section of any rescaled quotient")
    fib = LinearFibration(a.A, a.norm_kind, a.y_grid, a.scale + b.scale, a.fiber_radius)
    return LinearSection(fib, phi.values + eta.values)


def scalar_multiple(beta: float, phi: LinearSection) -> LinearSection:
    if beta == 0:
        raise DomainError("beta must be nonzero; the zero map is adjoined separately")
    return LinearSection(phi.fibration.rescaled(beta), beta * phi.values)


def zero_map(fibration: LinearFibration) -> np.ndarray:
    """The adjoined zero element: all-zero values (not a section of any quotient)."""
    return np.zeros((len(fibration.y_grid), fibration.ambient_dim))


def add_zero(phi: LinearSection) -> LinearSection:
    """``phi + 0 = phi``."""
    return LinearSection(phi.fibration, phi.values + zero_map(phi.fibration))


# Predicted constants.


def convex_constants(t: float, c_phi: QIConstants, c_eta: QIConstants) -> QIConstants:
    """``(t(L_phi - L_eta) + L_eta, M_phi + M_eta)`` for ``t phi + (1-t) eta``."""
    return QIConstants(t * (c_phi.L - c_eta.L) + c_eta.L, c_phi.M + c_eta.M)


def sum_constants(delta1: float, c1: QIConstants, delta2: float, c2: QIConstants) -> QIConstants:
    """Relative constants of ``phi + eta`` against ``(delta1 + delta2) psi``.

    With ``phi`` relative to ``delta1 psi`` and ``eta`` relative to ``delta2 psi``,
    the multiplicative constant is the ``delta``-weighted mean of ``L1, L2``; equal
    constants give ``(L, 2M)``.
    """
    if delta1 <= 0 or delta2 <= 0:
        raise DomainError("scales must be positive")
    L = (delta1 * c1.L + delta2 * c2.L) / (delta1 + delta2)
    return QIConstants(L, c1.M + c2.M)


def scalar_constants(beta: float, c: QIConstants) -> QIConstants:
    """``(L, |beta| M)`` for ``beta phi``."""
    if beta == 0:
        raise DomainError("beta must be nonzero")
    return QIConstants(c.L, abs(beta) * c.M)


def scaled_fiber_identity(fibration: LinearFibration, lam: float, y, points) -> bool:
    """Whether ``pi^-1(lam y)`` and ``((1/lam) pi)^-1 (y)`` select the same sample points."""
    base = LinearFibration(fibration.A, fibration.norm_kind, fibration.y_grid)
    scaled = base.rescaled(lam)
    lam_y = lam * np.asarray(y, dtype=float)
    return all(base.in_fiber(p, lam_y) == scaled.in_fiber(p, y) for p in np.atleast_2d(points))


def random_section(
    fibration: LinearFibration,
    rng: np.random.Generator,
    *,
    spread: float = 1.0,
    through=None,
) -> LinearSection:
    """Random section; ``through=(label, value)`` pins one value (e.g. a base point)."""
    N = fibration.null_basis
    m = N.shape[1]
    vals = []
    for k, y in enumerate(fibration.y_grid):
        z = rng.normal(scale=spread, size=m)
        if fibration.radius is not None and m:
            v = N @ z
            nv = norm(v, fibration.norm_kind)
            if nv > 0:
                z = z * (fibration.radius * rng.uniform(0, 1) / nv)
        vals.append(fibration.center(y) + N @ z)
    vals = np.array(vals).reshape(len(fibration.y_grid), fibration.ambient_dim)
    if through is not None:
        k, value = through
        vals[k] = value
    return LinearSection(fibration, vals)


def perturbed_section(
    psi: LinearSection, base: int, rng: np.random.Generator, *, factor: float = 1.0, spread: float = 1.0
) -> LinearSection:
    """``factor * psi + N z(y)`` with ``z(base) = 0``: a member of ``I_{factor psi, factor psi(base)}``.

    On truncated fibers the non-base values are redrawn inside the truncation
    radius instead, so the result stays a section.
    """
    fib = psi.fibration.rescaled(factor)
    N = fib.null_basis
    if fib.radius is not None:
        values = random_section(fib, rng, spread=spread).values.copy()
        values[base] = factor * psi.values[base]
        return LinearSection(fib, values)
    z = rng.normal(scale=spread, size=(len(psi.values), N.shape[1]))
    z[base] = 0
    return LinearSection(fib, factor * psi.values + z @ N.T)


def sample_grid(k: int, size: int, rng: np.random.Generator, *, span: float = 5.0) -> np.ndarray:
    pts = rng.uniform(-span, span, size=(size, k))
    return np.unique(np.round(pts, 6), axis=0)


def grid_1d(lo: float, hi: float, step: float = 1.0) -> np.ndarray:
    n = int(round((hi - lo) / step)) + 1
    return (lo + step * np.arange(n)).reshape(-1, 1)

