"""Deciding intrinsic (L, M)-quasi-isometry, optimal constants and the (L, M) frontier.

A section ``phi`` is (L, M)-QI when, for every ordered pair of labels,

    d(phi(y1), phi(y2)) <= L * d(phi(y1), fiber(y2)) + M.

Each ordered pair contributes the affine function ``L -> a - L*b`` (``a`` the
graph distance, ``b`` the distance to the target fiber), so the minimal
admissible ``M`` as a function of ``L`` is the upper envelope of finitely many
lines, clipped at zero. The same machinery serves the pointed relative
conditions, which are again families of affine constraints.

The section arguments are duck-typed: anything exposing ``labels``,
``graph_distances``, ``fiber_distances``, ``distances_along``,
``distances_from_value``, ``agrees_at``, ``coerce``, ``exact`` and ``tol``
works (finite and linear sections both do).
"""

from __future__ import annotations

import bisect
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import DomainError, InfeasibleError, PreconditionError
from .metric import default_tol


@dataclass(frozen=True)
class QIConstants:
    """Multiplicative constant ``L >= 1`` and additive constant ``M >= 0``."""

    L: Any
    M: Any

    def __post_init__(self):
        if not self.L >= 1:
            raise DomainError(f"L must be >= 1, got {self.L!r}")
        if not self.M >= 0:
            raise DomainError(f"M must be >= 0, got {self.M!r}")

    def as_tuple(self) -> tuple:
        return (self.L, self.M)


def _div(p, q):
    if isinstance(p, Rational) and isinstance(q, Rational):
        return Fraction(p) / Fraction(q)
    return p / q


@dataclass(frozen=True)
class _Piece:
    start: Any  # first L of the piece
    a: Any
    b: Any
    witness: Any


@dataclass(frozen=True)
class Frontier:
    """Convex, nonincreasing, piecewise-linear ``M*(L)`` on ``[1, inf)``.

    ``breakpoints`` are the vertices ``(L, M*(L))``, starting at ``L = 1``;
    after the last vertex the function is constant. ``L_flat`` is the smallest
    ``L`` with ``M*(L) = 0`` or None if the function never reaches zero.
    """

    pieces: tuple[_Piece, ...]
    breakpoints: tuple[tuple[Any, Any], ...] = field(init=False)
    L_flat: Any = field(init=False)

    def __post_init__(self):
        pts = tuple((p.start, p.a - p.start * p.b) for p in self.pieces)
        object.__setattr__(self, "breakpoints", pts)
        last = self.pieces[-1]
        object.__setattr__(self, "L_flat", last.start if last.a == 0 and last.b == 0 else None)

    def __call__(self, L):
        if not L >= 1:
            raise DomainError(f"L must be >= 1, got {L!r}")
        k = bisect.bisect_right([p.start for p in self.pieces], L) - 1
        p = self.pieces[max(k, 0)]
        return p.a - L * p.b

    def binding(self, L):
        """Witness of the constraint active at ``L`` (None on the zero floor)."""
        k = bisect.bisect_right([p.start for p in self.pieces], L) - 1
        return self.pieces[max(k, 0)].witness

    @property
    def floor(self):
        """Limit of ``M*(L)`` as ``L`` grows."""
        return self.pieces[-1].a

    def min_L(self, M):
        """Smallest ``L >= 1`` with ``M*(L) <= M``."""
        if not M >= 0:
            raise DomainError(f"M must be >= 0, got {M!r}")
        if self(1) <= M:
            return self.pieces[0].start
        if self.floor > M:
            raise InfeasibleError(
                f"no finite L reaches M={M!r}; constraint {self.pieces[-1].witness!r} has zero fiber distance",
                self.pieces[-1].witness,
            )
        for p, nxt in zip(self.pieces, self.pieces[1:]):
            if nxt.a - nxt.start * nxt.b <= M:
                return _div(p.a - M, p.b)
        raise AssertionError("unreachable: floor <= M but no crossing found")

    def to_json(self) -> dict:
        return {
            "breakpoints": [[L, M] for L, M in self.breakpoints],
            "L_flat": self.L_flat,
            "floor": self.floor,
        }


def upper_envelope(a: Sequence, b: Sequence, witnesses: Sequence | None = None) -> Frontier:
    """Frontier of ``max(0, max_i a_i - L*b_i)`` over ``L >= 1`` (all ``b_i >= 0``).

    Lines are sorted by slope ``-b`` and swept with the usual hull-elimination
    stack; arithmetic stays exact when the inputs are rationals.
    """
    if witnesses is None:
        witnesses = list(range(len(a)))
    zero = 0 * (a[0] if len(a) else 0)
    best: dict[Any, tuple[Any, Any]] = {zero: (zero, None)}
    for ai, bi, w in zip(a, b, witnesses):
        if bi < 0:
            raise DomainError(f"negative fiber distance {bi!r}")
        cur = best.get(bi)
        if cur is None or ai > cur[0]:
            best[bi] = (ai, w)
    # slope -b ascending: b descending
    lines = sorted(((bi, ai, w) for bi, (ai, w) in best.items()), key=lambda t: t[0], reverse=True)

    def cross(l1, l2):  # l1 steeper (larger b)
        return _div(l1[1] - l2[1], l1[0] - l2[0])

    hull: list[tuple] = []
    for line in lines:
        while len(hull) >= 2 and cross(hull[-2], line) <= cross(hull[-2], hull[-1]):
            hull.pop()
        hull.append(line)
    # restrict to L >= 1
    while len(hull) >= 2 and cross(hull[0], hull[1]) <= 1:
        hull.pop(0)
    exact = isinstance(zero, Rational)
    pieces = []
    for k, line in enumerate(hull):
        start = (1 if exact else 1.0) if k == 0 else cross(hull[k - 1], line)
        pieces.append(_Piece(start, line[1], line[0], line[2]))
    return Frontier(tuple(pieces))


def _pairs(phi):
    a = phi.graph_distances()
    b = phi.fiber_distances()
    labels = phi.labels
    wit = [(y1, y2) for y1 in labels for y2 in labels]
    return a.ravel(), b.ravel(), wit


def _tol(phi, tol):
    return default_tol(phi.exact, tol)


def qi_violation(phi, c: QIConstants, tol=None):
    """First ordered pair ``(y1, y2)`` violating the QI inequality, or None."""
    a = phi.graph_distances()
    b = phi.fiber_distances()
    L, M = phi.coerce(c.L), phi.coerce(c.M)
    bad = np.argwhere(a > L * b + M + _tol(phi, tol))
    if len(bad):
        k1, k2 = bad[0]
        return (phi.labels[k1], phi.labels[k2])
    return None


def is_qi_section(phi, c: QIConstants, tol=None) -> bool:
    return qi_violation(phi, c, tol) is None


def qi_frontier(phi) -> Frontier:
    return upper_envelope(*_pairs(phi))


def minimal_M(phi, L):
    L = phi.coerce(L)
    if not L >= 1:
        raise DomainError(f"L must be >= 1, got {L!r}")
    a = phi.graph_distances()
    b = phi.fiber_distances()
    return max(0 * L, (a - L * b).max())


def minimal_L(phi, M):
    """Smallest ``L >= 1`` making ``phi`` (L, M)-QI; raises InfeasibleError otherwise."""
    return qi_frontier(phi).min_L(phi.coerce(M))


def in_cone_R(fibration, x, x_prime, c: QIConstants, tol=None) -> bool:
    """Whether ``x_prime`` lies in the intrinsic cone at ``x``:
    ``L d(x', fiber(pi(x))) + M < d(x', x)``."""
    space = fibration.space
    i, j = space.index(x), space.index(x_prime)
    k = fibration.point_label[i]
    L, M = space.coerce(c.L), space.coerce(c.M)
    return bool(L * fibration.fiber_dist[j, k] + M < space.dist[j, i] - default_tol(space.exact, tol))


def cone_witness(phi, c: QIConstants, tol=None):
    """First graph pair ``(x, x')`` with ``x'`` in the cone at ``x``, or None."""
    fib = phi.fibration
    pts = fib.space.points
    graph = [pts[i] for i in phi.graph_indices]
    for x in graph:
        for xp in graph:
            if in_cone_R(fib, x, xp, c, tol):
                return (x, xp)
    return None


def graph_avoids_cones(phi, c: QIConstants, tol=None) -> bool:
    return cone_witness(phi, c, tol) is None


# Relative (pointed) conditions.


def _check_base(phi, psi, y_hat) -> None:
    if not phi.agrees_at(psi, y_hat):
        raise PreconditionError(
            f"sections disagree at base label {y_hat!r}: {phi(y_hat)!r} != {psi(y_hat)!r}"
        )


def relative_terms(phi, psi, y_hat, strong: bool = False):
    """``(a, b)`` vectors of the relative condition of ``phi`` against ``psi`` at ``y_hat``.

    Plain: ``a = d(phi(y), psi(y))``, ``b = d(psi(y_hat), psi(y))``. Strong:
    ``b = min(d(psi(y_hat), psi(y)), d(psi(y_hat), phi(y)))``.
    """
    _check_base(phi, psi, y_hat)
    a = phi.distances_along(psi)
    b = psi.distances_from_value(psi, y_hat)
    if strong:
        b = np.minimum(b, phi.distances_from_value(psi, y_hat))
    return a, b


def relative_violation(phi, psi, y_hat, c: QIConstants, strong: bool = False, tol=None):
    a, b = relative_terms(phi, psi, y_hat, strong)
    L, M = phi.coerce(c.L), phi.coerce(c.M)
    bad = np.flatnonzero(a > L * b + M + _tol(phi, tol))
    return phi.labels[bad[0]] if len(bad) else None


def is_relative_qi(phi, psi, y_hat, c: QIConstants, tol=None) -> bool:
    return relative_violation(phi, psi, y_hat, c, False, tol) is None


def is_strong_relative_qi(phi, psi, y_hat, c: QIConstants, tol=None) -> bool:
    return relative_violation(phi, psi, y_hat, c, True, tol) is None


def relative_frontier(phi, psi, y_hat, strong: bool = False) -> Frontier:
    a, b = relative_terms(phi, psi, y_hat, strong)
    return upper_envelope(list(a), list(b), list(phi.labels))


def pointed_terms(phi, y0):
    """``a = d(x0, phi(y))``, ``b = d(x0, fiber(y))`` with ``x0 = phi(y0)``."""
    k0 = phi.labels.index(y0) if not hasattr(phi, "fibration") else phi.fibration.label_index(y0)
    return phi.graph_distances()[k0], phi.fiber_distances()[k0]


def pointed_violation(phi, y0, c: QIConstants, tol=None):
    a, b = pointed_terms(phi, y0)
    L, M = phi.coerce(c.L), phi.coerce(c.M)
    bad = np.flatnonzero(a > L * b + M + _tol(phi, tol))
    return phi.labels[bad[0]] if len(bad) else None


def satisfies_pointed_bound(phi, y0, c: QIConstants, tol=None) -> bool:
    """``d(x0, phi(y)) <= L d(x0, fiber(y)) + M`` for all ``y``, ``x0 = phi(y0)``."""
    return pointed_violation(phi, y0, c, tol) is None


def pointed_frontier(phi, y0) -> Frontier:
    a, b = pointed_terms(phi, y0)
    return upper_envelope(list(a), list(b), list(phi.labels))


# Constant transfer between the relative and pointed formulations.


def transfer_constants_forward(L, L1, M, M1) -> QIConstants:
    """Pointed-bound constants ``(L(L1+1), M1+M)`` obtained from relative constants.

    The additive part is exact only when ``M == 0`` or ``L1 == 0``; see
    :func:`transfer_constants_forward_sound` for the constant that follows
    from the triangle-inequality chain in general.
    """
    _check_pair(L, M)
    _check_pair(L1, M1)
    return QIConstants(L * (L1 + 1), M1 + M)


def transfer_constants_forward_sound(L, L1, M, M1) -> QIConstants:
    """``(L(L1+1), (L1+1)M + M1)``: always sufficient for the pointed bound."""
    _check_pair(L, M)
    _check_pair(L1, M1)
    return QIConstants(L * (L1 + 1), (L1 + 1) * M + M1)


def transfer_constants_backward(L2, M2) -> QIConstants:
    """Relative constants ``(L2+1, M2)`` obtained from a pointed bound."""
    _check_pair(L2, M2)
    return QIConstants(L2 + 1, M2)


def chain_constants_sound(c1: QIConstants, c2: QIConstants) -> QIConstants:
    """Strong-relative constants for ``phi ~ eta`` given ``phi ~ psi`` (c1) and ``psi ~ eta`` (c2).

    Bounding ``d(x_hat, psi(y))`` through whichever of ``phi(y)``, ``eta(y)`` is
    nearer to the base point gives ``L = L1 + L2 + L1 L2`` and
    ``M = max((L2+1) M1 + M2, (L1+1) M2 + M1)``.
    """
    L1, M1, L2, M2 = c1.L, c1.M, c2.L, c2.M
    return QIConstants(L1 + L2 + L1 * L2, max((L2 + 1) * M1 + M2, (L1 + 1) * M2 + M1))


def _check_pair(L, M) -> None:
    QIConstants(L, M)


# Reports.


def canonical_constants(frontier: Frontier) -> dict:
    """Two canonical points of a frontier: ``L = 1`` and the flat point ``M = 0``."""
    out = {"at_L1": [1, frontier(1)]}
    out["at_M0"] = None if frontier.L_flat is None else [frontier.L_flat, 0 * frontier(1)]
    return out


def global_equivalence_check(phi, family: Mapping, c: QIConstants, tol=None) -> dict:
    """Relative-QI at every graph point versus intrinsic QI, with witness constants.

    ``family`` maps each graph point ``x`` to an (L, M)-QI section through ``x``.
    Flag (1): relative constants w.r.t. ``family[x]`` at ``x`` exist for every
    graph point. Flag (2): ``phi`` is intrinsically QI for some constants. The
    quantitative transfers are verified with the constants found.
    """
    fib = phi.fibration
    fam = {}
    for y in phi.labels:
        x = phi(y)
        if x not in family:
            raise PreconditionError(f"family has no section through graph point {x!r}")
        psi = family[x]
        if psi(y) != x:
            raise PreconditionError(f"family section for {x!r} does not pass through it")
        bad = qi_violation(psi, c, tol)
        if bad is not None:
            raise PreconditionError(f"family section for {x!r} is not {c.as_tuple()}-QI: pair {bad!r}")
        fam[y] = psi

    rel = {y: relative_frontier(phi, psi, y) for y, psi in fam.items()}
    flag_relative = all(f.floor == 0 for f in rel.values())
    own = qi_frontier(phi)
    flag_qi = own.floor == 0
    one = phi.coerce(1)

    L1 = one
    M1 = max(f(one) for f in rel.values())
    L, M = phi.coerce(c.L), phi.coerce(c.M)
    literal = transfer_constants_forward(L, L1, M, M1)
    sound = transfer_constants_forward_sound(L, L1, M, M1)
    forward = {
        "relative_constants": [L1, M1],
        "transferred": list(literal.as_tuple()),
        "holds": all(satisfies_pointed_bound(phi, y, literal, tol) for y in phi.labels),
        "transferred_sound": list(sound.as_tuple()),
        "holds_sound": all(satisfies_pointed_bound(phi, y, sound, tol) for y in phi.labels),
    }
    L2, M2 = one, own(one)
    back = transfer_constants_backward(L2, M2)
    backward = {
        "qi_constants": [L2, M2],
        "transferred": list(back.as_tuple()),
        "holds": all(is_relative_qi(phi, psi, y, back, tol) for y, psi in fam.items()),
    }
    return {
        "relative_at_every_point": flag_relative,
        "intrinsically_qi": flag_qi,
        "equivalent": flag_relative == flag_qi,
        "relative_frontiers": {str(y): f.to_json() for y, f in rel.items()},
        "qi_frontier": own.to_json(),
        "forward": forward,
        "backward": backward,
        "family_constants": list(c.as_tuple()),
        "labels": list(fib.labels),
    }


def strong_relation_check(sections: Sequence, y_hat, tol=None) -> dict:
    """Reflexivity, symmetry and constructive transitivity of the strong relation."""
    if not sections:
        raise PreconditionError("need at least one section")
    base = sections[0]
    for s in sections[1:]:
        if not s.agrees_at(base, y_hat):
            raise PreconditionError(f"sections do not share the base point at label {y_hat!r}")
    n = len(sections)
    fr = {
        (i, j): relative_frontier(sections[i], sections[j], y_hat, strong=True)
        for i in range(n)
        for j in range(n)
    }
    related = {key: f.floor == 0 for key, f in fr.items()}
    const = {key: canonical_constants(f) for key, f in fr.items()}

    reflexive = all(related[i, i] and const[i, i]["at_L1"][1] == 0 for i in range(n))
    symmetric = all(related[i, j] == related[j, i] for i in range(n) for j in range(n))
    same_frontier = all(fr[i, j].breakpoints == fr[j, i].breakpoints for i in range(n) for j in range(n))

    chains = []
    transitive = True
    for i, j, k in itertools.product(range(n), repeat=3):
        if len({i, j, k}) < 3 or not (related[i, j] and related[j, k]):
            continue
        ok = related[i, k]
        transitive &= ok
        entry = {"triple": [i, j, k], "chained_related": ok, "chained_constants": const[i, k]}
        for mode in ("at_L1", "at_M0"):
            c1, c2 = const[i, j][mode], const[j, k][mode]
            if c1 is None or c2 is None:
                entry[f"min_L_suffices_{mode}"] = None
                continue
            guess = QIConstants(min(c1[0], c2[0]), c1[1] + c2[1])
            entry[f"min_L_suffices_{mode}"] = is_strong_relative_qi(
                sections[i], sections[k], y_hat, guess, tol
            )
            sound = chain_constants_sound(QIConstants(*c1), QIConstants(*c2))
            entry[f"sound_constants_{mode}"] = list(sound.as_tuple())
            entry[f"sound_suffices_{mode}"] = is_strong_relative_qi(sections[i], sections[k], y_hat, sound, tol)
        chains.append(entry)
    return {
        "n_sections": n,
        "base_label": y_hat,
        "reflexive": reflexive,
        "symmetric": symmetric,
        "symmetric_frontiers": same_frontier,
        "transitive": transitive,
        "equivalence": reflexive and symmetric and transitive,
        "constants": {f"{i},{j}": const[i, j] for i in range(n) for j in range(n)},
        "chains": chains,
    }
