"""Brute-force reference computations used to cross-check the main analysis paths.

Every function here is a straight double (or triple) loop over labels and
points of a finite fibration. None of them touches the envelope code, the
cached fiber-distance matrix or any vectorised path, so agreement between an
oracle and the corresponding analysis function is meaningful evidence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any


@dataclass(frozen=True)
class OracleResult:
    value: Any
    witness: Any = None
    method: str = ""


def _d(space, p, q):
    return space.dist[space.index(p), space.index(q)]


def _fiber_points(fib, y):
    return [p for p in fib.space.points if fib.pi(p) == y]


def _dist_to_fiber(fib, x, y):
    return min(_d(fib.space, x, q) for q in _fiber_points(fib, y))


def oracle_pairs(phi) -> list:
    """``[(y1, y2, a, b)]`` with ``a = d(phi(y1), phi(y2))``, ``b = d(phi(y1), fiber(y2))``."""
    fib = phi.fibration
    out = []
    for y1 in fib.labels:
        for y2 in fib.labels:
            a = _d(fib.space, phi(y1), phi(y2))
            b = _dist_to_fiber(fib, phi(y1), y2)
            out.append((y1, y2, a, b))
    return out


def oracle_minimal_M(phi, L, pairs=None) -> OracleResult:
    """``max(0, max over ordered pairs of a - L b)`` by direct enumeration."""
    L = phi.coerce(L)
    best, witness = 0 * L, None
    for y1, y2, a, b in pairs if pairs is not None else oracle_pairs(phi):
        if a - L * b > best:
            best, witness = a - L * b, (y1, y2)
    return OracleResult(best, witness, "ordered-pair enumeration")


def oracle_is_qi(phi, L, M, tol=0) -> OracleResult:
    L, M = phi.coerce(L), phi.coerce(M)
    for y1, y2, a, b in oracle_pairs(phi):
        if a > L * b + M + tol:
            return OracleResult(False, (y1, y2), "ordered-pair enumeration")
    return OracleResult(True, None, "ordered-pair enumeration")


def oracle_frontier_scan(phi, L_grid) -> list:
    """``[(L, M*(L))]`` sampled on ``L_grid``; pairs are enumerated once."""
    pairs = oracle_pairs(phi)
    return [(L, oracle_minimal_M(phi, L, pairs).value) for L in L_grid]


def oracle_cone_witness(phi, L, M, tol=0) -> OracleResult:
    """First graph pair ``(x, x')`` with ``L d(x', fiber(pi(x))) + M < d(x', x)``."""
    fib = phi.fibration
    L, M = phi.coerce(L), phi.coerce(M)
    graph = [phi(y) for y in fib.labels]
    for x in graph:
        for xp in graph:
            if L * _dist_to_fiber(fib, xp, fib.pi(x)) + M < _d(fib.space, xp, x) - tol:
                return OracleResult(True, (x, xp), "graph-pair cone enumeration")
    return OracleResult(False, None, "graph-pair cone enumeration")


def oracle_relation_constants(phi, psi, y_hat, L=1) -> OracleResult:
    """Minimal strong-relative ``M`` at fixed ``L``, or ``"unrelated"``."""
    fib = phi.fibration
    x_hat = psi(y_hat)
    if phi(y_hat) != x_hat:
        raise ValueError(f"base point mismatch at {y_hat!r}")
    L = phi.coerce(L)
    best, witness = 0 * L, None
    for y in fib.labels:
        a = _d(fib.space, phi(y), psi(y))
        b = min(_d(fib.space, x_hat, psi(y)), _d(fib.space, x_hat, phi(y)))
        if b == 0 and a > 0:
            return OracleResult("unrelated", y, "label sweep at fixed L")
        if a - L * b > best:
            best, witness = a - L * b, y
    return OracleResult((L, best), witness, "label sweep at fixed L")


def oracle_mass(phi, center_label, r) -> OracleResult:
    """Pushforward mass of the open ball around ``phi(center_label)``, by counting labels."""
    fib = phi.fibration
    weights = dict(zip(fib.labels, fib.require_measure()))
    x = phi(center_label)
    total = 0
    for y in fib.labels:
        if _d(fib.space, x, phi(y)) < r:
            total = total + weights[y]
    return OracleResult(total, None, "label counting")


def oracle_projected_ball(fib, x, r) -> set:
    """``pi(B(x, r))`` as a set of labels."""
    return {fib.pi(p) for p in fib.space.points if _d(fib.space, x, p) < r}
