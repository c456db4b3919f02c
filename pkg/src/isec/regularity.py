"""Large-scale Ahlfors-David regularity of section graphs and its transfer between sections.

"Large scale" is checked on a declared finite grid of radii strictly above
``r0``. Balls are open. For a section ``phi`` and a label ``y`` the quantity of
interest is the pushforward mass

    phi_* mu(B(phi(y), r) & phi(Y)) = mu(pi(B(phi(y), r) & phi(Y))),

i.e. the total weight of labels whose chosen point lies in the ball.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Any, Sequence

import numpy as np

from .errors import DomainError, PreconditionError
from .fibration import Fibration, Section, label_mass
from .qi import QIConstants, qi_violation


def _check_grid(r0, r_grid) -> list:
    r_grid = list(r_grid)
    if not r_grid:
        raise DomainError("radius grid is empty")
    if not r0 > 0:
        raise DomainError(f"r0 must be positive, got {r0!r}")
    low = [r for r in r_grid if not r > r0]
    if low:
        raise DomainError(f"radius {low[0]!r} does not exceed r0={r0!r}")
    return r_grid


def ball_mass(fibration: Fibration, i: int, r):
    """``mu(pi(B(x_i, r)))``."""
    return label_mass(fibration, fibration.space.ball_indices(i, r))


def graph_ball_mass(phi: Section, k: int, r):
    """``phi_* mu(B(phi(y_k), r) & phi(Y))``."""
    fib = phi.fibration
    weights = fib.require_measure()
    g = phi.graph_indices
    inside = fib.space.dist[g[k], g] < r
    return weights[inside].sum()


def homogeneity_constant(fibration: Fibration, r0, r_grid) -> dict:
    """Smallest ``C`` with ``mu(pi(B(x, r))) <= C mu(pi(B(x', r)))`` for same-fiber ``x, x'``.

    Both orderings of every pair are scanned, so the returned ``C`` also gives
    the two-sided bound. Returns ``{"C": ..., "witness": ...}``; ``C`` is None
    when a zero-mass ball faces a positive-mass partner.
    """
    r_grid = _check_grid(r0, r_grid)
    fibration.require_measure()
    one = fibration.space.coerce(1)
    best, witness = one, None
    for k, y in enumerate(fibration.labels):
        idx = fibration.fiber_indices(y)
        for r in r_grid:
            masses = [ball_mass(fibration, int(i), r) for i in idx]
            for i, mi in zip(idx, masses):
                for j, mj in zip(idx, masses):
                    if mj == 0:
                        if mi > 0:
                            pts = fibration.space.points
                            return {"C": None, "witness": [pts[i], pts[j], r]}
                        continue
                    ratio = mi / mj
                    if ratio > best:
                        pts = fibration.space.points
                        best, witness = ratio, [pts[i], pts[j], r]
    return {"C": best, "witness": witness}


def ball_inclusion_check(phi: Section, c: QIConstants, r_grid) -> dict:
    """Verify ``pi(B(p, r/L)) <= pi(B(p, r+M) & phi(Y)) <= pi(B(p, r+M))`` for graph points ``p``.

    ``c`` must be validated for ``phi``. A failed inclusion contradicts the
    validated hypothesis, so it is reported as an internal inconsistency.
    """
    bad = qi_violation(phi, c)
    if bad is not None:
        raise PreconditionError(f"section is not {c.as_tuple()}-QI (pair {bad!r})")
    fib = phi.fibration
    space = fib.space
    L, M = phi.coerce(c.L), phi.coerce(c.M)
    g = phi.graph_indices
    on_graph = np.zeros(space.n, dtype=bool)
    on_graph[g] = True
    failures = []
    checked = 0
    for k, p in enumerate(g):
        for r in r_grid:
            r = phi.coerce(r)
            if not r > 0:
                raise DomainError(f"radii must be positive, got {r!r}")
            inner = set(fib.point_label[space.ball_indices(p, r / L)].tolist())
            outer_idx = space.ball_indices(p, r + M)
            middle = set(fib.point_label[outer_idx[on_graph[outer_idx]]].tolist())
            outer = set(fib.point_label[outer_idx].tolist())
            checked += 1
            for name, small, big in (("first", inner, middle), ("second", middle, outer)):
                extra = small - big
                if extra:
                    failures.append(
                        {
                            "inclusion": name,
                            "p": space.points[p],
                            "r": r,
                            "labels": sorted(fib.labels[e] for e in extra),
                        }
                    )
    return {"holds": not failures, "checked": checked, "failures": failures}


def ad_regularity_estimate(phi: Section, Q, r0, r_grid) -> dict:
    """Tightest ``(c1, c2)`` with ``c1 r^Q <= phi_* mu(B(phi(y), r) & phi(Y)) <= c2 r^Q``.

    Also returns the diagnostic least-squares exponent ``Q_fit`` of log-mass
    against log-radius (never used in verdicts).
    """
    r_grid = _check_grid(r0, r_grid)
    if not Q > 0:
        raise DomainError(f"Q must be positive, got {Q!r}")
    lo = hi = None
    wlo = whi = None
    logs = []
    for k, y in enumerate(phi.labels):
        for r in r_grid:
            mass = graph_ball_mass(phi, k, r)
            ratio = phi.coerce(mass) / _power(phi.coerce(r), Q)
            if lo is None or ratio < lo:
                lo, wlo = ratio, [y, r]
            if hi is None or ratio > hi:
                hi, whi = ratio, [y, r]
            if mass > 0:
                logs.append((np.log(float(r)), np.log(float(mass))))
    Q_fit = None
    xs = np.array([p[0] for p in logs])
    if len(logs) >= 2 and np.ptp(xs) > 0:
        Q_fit = float(np.polyfit(xs, [p[1] for p in logs], 1)[0])
    return {
        "c1": lo,
        "c2": hi,
        "witness_c1": wlo,
        "witness_c2": whi,
        "regular": lo > 0,
        "Q_fit": Q_fit,
    }


def _power(r, Q):
    if isinstance(Q, int) or (hasattr(Q, "denominator") and Q.denominator == 1):
        return r ** int(Q)
    return float(r) ** float(Q)


@dataclass
class RegularityReport:
    """Constants of the regularity sandwich for a reference section."""

    Q: Any
    r0: Any
    C: Any
    c1: Any
    c2: Any
    L: Any = 1
    r_grid: list = field(default_factory=list)
    Q_fit: float | None = None

    def __post_init__(self):
        if not self.c1 <= self.c2:
            raise DomainError("c1 must not exceed c2")

    @property
    def c3(self):
        """``c1 C^-1 L^-Q``."""
        return self.c1 / (self.C * _power(self.L, self.Q))

    @property
    def c4(self):
        """``c2 C L^Q``."""
        return self.c2 * self.C * _power(self.L, self.Q)

    def to_json(self) -> dict:
        out = asdict(self)
        out["c3"] = self.c3
        out["c4"] = self.c4
        return out


def regularity_report(phi: Section, Q, r0, r_grid, L=1, M=None) -> RegularityReport:
    """Measure ``C``, ``c1``, ``c2`` on the grid and package them with the transfer constant ``L``.

    When ``M`` is given, ``phi`` itself is first validated as (L, M)-QI.
    """
    if M is not None:
        bad = qi_violation(phi, QIConstants(phi.coerce(L), phi.coerce(M)))
        if bad is not None:
            raise PreconditionError(f"reference section is not {(L, M)}-QI (pair {bad!r})")
    hom = homogeneity_constant(phi.fibration, r0, r_grid)
    if hom["C"] is None:
        raise PreconditionError(f"homogeneity fails: zero-mass ball at {hom['witness']!r}")
    est = ad_regularity_estimate(phi, Q, r0, r_grid)
    return RegularityReport(
        Q=Q,
        r0=r0,
        C=hom["C"],
        c1=est["c1"],
        c2=est["c2"],
        L=phi.coerce(L),
        r_grid=list(r_grid),
        Q_fit=est["Q_fit"],
    )


def transfer_regularity(psi: Section, report: RegularityReport, L, M, r_grid: Sequence | None = None) -> dict:
    """Check ``c3 (r - M)^Q <= psi_* mu(B(psi(y), r) & psi(Y)) <= c4 (r + M)^Q`` on the grid.

    The lower bound is vacuous (recorded, not failed) when ``r <= M``.
    """
    L, M = psi.coerce(L), psi.coerce(M)
    report = replace(report, L=L)
    bad = qi_violation(psi, QIConstants(L, M))
    if bad is not None:
        raise PreconditionError(f"section is not {(L, M)}-QI (pair {bad!r})")
    r_grid = _check_grid(report.r0, report.r_grid if r_grid is None else r_grid)
    c3, c4, Q = report.c3, report.c4, report.Q
    checks = []
    for k, y in enumerate(psi.labels):
        for r in r_grid:
            r = psi.coerce(r)
            mass = graph_ball_mass(psi, k, r)
            upper = c4 * _power(r + M, Q)
            lower = c3 * _power(r - M, Q) if r > M else None
            ok_low = lower is None or mass >= lower
            ok_up = mass <= upper
            checks.append(
                {
                    "y": y,
                    "r": r,
                    "mass": mass,
                    "lower": lower,
                    "upper": upper,
                    "lower_margin": None if lower is None else mass - lower,
                    "upper_margin": upper - mass,
                    "vacuous_lower": lower is None,
                    "holds": bool(ok_low and ok_up),
                }
            )
    failures = [ch for ch in checks if not ch["holds"]]
    return {
        "holds": not failures,
        "c3": c3,
        "c4": c4,
        "L": L,
        "M": M,
        "n_checks": len(checks),
        "n_vacuous": sum(ch["vacuous_lower"] for ch in checks),
        "failures": failures,
        "checks": checks,
    }
