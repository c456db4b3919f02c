from __future__ import annotations

import numpy as np
import pytest

from isec import generators as gen
from isec import linear as lin
from isec import qi
from isec.errors import DomainError, InstanceError, PreconditionError
from isec.qi import QIConstants


def test_distance_to_affine_fiber_examples():
    f = lin.LinearFibration([[1.0, 0.0]], "l2")
    assert lin.dist_to_affine_fiber([0, 3], [0], f) == 0
    assert lin.dist_to_affine_fiber([2, 3], [0], f) == pytest.approx(2)
    g = lin.LinearFibration([[1.0, 1.0]], "l2")
    assert lin.dist_to_affine_fiber([1, 1], [0], g) == pytest.approx(np.sqrt(2))


@pytest.mark.parametrize("kind", ["l1", "linf"])
def test_lp_fiber_distance_matches_closed_forms(kind):
    # fiber {x1 + x2 = 0}: l1 distance |s|, linf distance |s|/2 for s = x1 + x2
    g = lin.LinearFibration([[1.0, 1.0]], kind)
    expected = 2.0 if kind == "l1" else 1.0
    assert lin.dist_to_affine_fiber([1, 1], [0], g) == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("kind", ["l1", "l2", "linf"])
def test_fiber_distance_against_sampled_minimum(kind):
    rng = np.random.default_rng(0)
    fib = gen.random_linear(rng, n=3, k=1, norm_kind=kind)
    for _ in range(10):
        x = rng.normal(size=3) * 3
        y = fib.y_grid[0]
        d = lin.dist_to_affine_fiber(x, y, fib)
        pts = fib.fiber_points(y, rng.normal(size=(4000, 2)) * 4)
        sampled = min(np.linalg.norm(x - p, {"l1": 1, "l2": 2, "linf": np.inf}[kind]) for p in pts)
        assert d <= sampled + 1e-9
        assert sampled - d < 0.5


def test_truncated_fiber_distance():
    f = lin.LinearFibration([[1.0, 0.0]], "l2", fiber_radius=1.0)
    assert lin.dist_to_affine_fiber([0, 3], [0], f) == pytest.approx(2)
    assert lin.dist_to_affine_fiber([3, 5], [0], f) == pytest.approx(5)
    assert f.fiber_diameter_bound() == 2
    assert f.rescaled(-2).radius == 2


def test_full_rank_required():
    with pytest.raises(InstanceError):
        lin.LinearFibration([[1.0, 1.0], [2.0, 2.0]])
    with pytest.raises(DomainError):
        lin.LinearFibration([[1.0, 0.0]], scale=0.0)


def test_projection_is_linear():
    rng = np.random.default_rng(1)
    fib = gen.random_linear(rng, n=4, k=2)
    u, v = rng.normal(size=(2, 4))
    assert np.allclose(fib.project(u + v), fib.project(u) + fib.project(v))


def test_section_identity_enforced():
    fib = gen.linear_line()
    with pytest.raises(PreconditionError):
        lin.LinearSection(fib, np.zeros((len(fib.y_grid), 2)))


def _setup(rng, kind="l2"):
    fib = gen.random_linear(rng, norm_kind=kind)
    psi = lin.random_section(fib, rng)
    return fib, psi


def test_convex_endpoint_and_midpoint():
    rng = np.random.default_rng(2)
    fib, psi = _setup(rng)
    phi = lin.perturbed_section(psi, 0, rng)
    eta = lin.perturbed_section(psi, 0, rng)
    assert np.allclose(lin.convex_combination(phi, eta, 1.0).values, phi.values)
    c = lin.convex_constants(0.5, QIConstants(3.0, 1.0), QIConstants(1.0, 2.0))
    assert c.as_tuple() == (2.0, 3.0)
    c_phi = QIConstants(3.0, float(qi.relative_frontier(phi, psi, 0)(3.0)))
    c_eta = QIConstants(1.0, float(qi.relative_frontier(eta, psi, 0)(1.0)))
    w = lin.convex_combination(phi, eta, 0.5)
    assert qi.is_relative_qi(w, psi, 0, lin.convex_constants(0.5, c_phi, c_eta))


def test_convex_t_out_of_range():
    rng = np.random.default_rng(3)
    fib, psi = _setup(rng)
    with pytest.raises(DomainError):
        lin.convex_combination(psi, psi, 1.5)


def test_sum_of_psi_with_itself():
    rng = np.random.default_rng(4)
    fib, psi = _setup(rng)
    phi = lin.perturbed_section(psi, 0, rng)
    L = 1.5
    c = QIConstants(L, float(qi.relative_frontier(phi, psi, 0)(L)))
    w = lin.section_sum(phi, phi)
    two_psi = lin.scalar_multiple(2.0, psi)
    assert w.scale == 2.0
    assert lin.sum_constants(1.0, c, 1.0, c).as_tuple() == (L, 2 * c.M)
    assert qi.is_relative_qi(w, two_psi, 0, lin.sum_constants(1.0, c, 1.0, c))
    assert qi.is_relative_qi(lin.section_sum(psi, psi), two_psi, 0, QIConstants(1.0, 0.0))


def test_zero_map_is_identity():
    rng = np.random.default_rng(5)
    _, psi = _setup(rng)
    assert np.array_equal(lin.add_zero(psi).values, psi.values)
    with pytest.raises(DomainError):
        lin.scalar_multiple(0.0, psi)


def test_bounded_fiber_sum_within_two_ell():
    fib = gen.linear_line((1.0, 0.0), -5, 5, "l2", fiber_radius=0.5)
    assert fib.fiber_diameter_bound() == 1.0
    rng = np.random.default_rng(6)
    for _ in range(20):
        phi = lin.random_section(fib, rng)
        eta = lin.random_section(fib, rng)
        assert qi.minimal_M(lin.section_sum(phi, eta), 1.0) <= 2 * 1.0 + 1e-9


def test_scalar_multiple_constants():
    rng = np.random.default_rng(7)
    fib, psi = _setup(rng)
    phi = lin.random_section(fib, rng)
    L = 2.0
    M = qi.minimal_M(phi, L)
    neg = lin.scalar_multiple(-1.0, phi)
    assert neg.scale == -1.0
    assert qi.is_qi_section(neg, QIConstants(L, M))
    assert np.allclose(lin.scalar_multiple(1.0, phi).values, phi.values)


def test_scalar_multiple_scales_additive_constant():
    rng = np.random.default_rng(8)
    fib, _ = _setup(rng)
    phi = lin.random_section(fib, rng, spread=3.0)
    L = 1.0
    M = qi.minimal_M(phi, L)
    assert M > 0
    doubled = lin.scalar_multiple(2.0, phi)
    assert qi.minimal_M(doubled, L) == pytest.approx(2 * M)
    assert not qi.is_qi_section(doubled, QIConstants(L, M))
    assert qi.is_qi_section(doubled, lin.scalar_constants(2.0, QIConstants(L, M)))


def test_scaled_fiber_identity():
    rng = np.random.default_rng(9)
    fib = gen.random_linear(rng, n=3, k=2)
    for lam in (-3.0, 0.5, 2.0):
        for y in fib.y_grid:
            pts = fib.fiber_points(lam * y, rng.normal(size=(5, 1)))
            assert lin.scaled_fiber_identity(fib, lam, y, pts)
            scaled = fib.rescaled(lam)
            assert all(scaled.in_fiber(p, y) for p in pts)


def test_mixed_quotients_rejected():
    rng = np.random.default_rng(10)
    _, psi = _setup(rng)
    with pytest.raises(PreconditionError):
        lin.convex_combination(psi, lin.scalar_multiple(2.0, psi), 0.5)
