from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from isec import generators as gen
from isec import qi
from isec.errors import DomainError, InfeasibleError, PreconditionError
from isec.fibration import Fibration, Section
from isec.metric import FiniteMetricSpace
from isec.qi import QIConstants


def line_fibration(coords: dict, fiber_of: dict) -> Fibration:
    pts = list(coords)
    d = [[abs(coords[p] - coords[q]) for q in pts] for p in pts]
    return Fibration(FiniteMetricSpace(pts, d, exact=True), fiber_of)


def test_constants_domain():
    with pytest.raises(DomainError):
        QIConstants(Fraction(1, 2), 0)
    with pytest.raises(DomainError):
        QIConstants(1, -1)


def test_singleton_fibers_are_isometric():
    fib = line_fibration({"a": 0, "b": 3, "c": 4}, {"a": 0, "b": 1, "c": 2})
    phi = Section(fib, {0: "a", 1: "b", 2: "c"})
    assert qi.is_qi_section(phi, QIConstants(1, 0))


def test_phi_z_worked_values(phi_z):
    assert not qi.is_qi_section(phi_z, QIConstants(1, 0))
    assert qi.qi_violation(phi_z, QIConstants(1, 0)) == (0, 1)
    assert qi.is_qi_section(phi_z, QIConstants(1, 1))
    assert qi.minimal_M(phi_z, 1) == 1
    assert qi.minimal_M(phi_z, 2) == 0
    assert qi.minimal_L(phi_z, 0) == 2


def test_phi_id_worked_values(phi_id):
    assert qi.minimal_M(phi_id, 1) == 0
    assert qi.minimal_L(phi_id, 0) == 1
    f = qi.qi_frontier(phi_id)
    assert f.breakpoints == ((1, 0),)
    assert f.L_flat == 1


def test_minimal_L_with_diameter_budget(G1):
    rng = np.random.default_rng(1)
    for _ in range(5):
        phi = gen.random_section(G1, rng)
        assert qi.minimal_L(phi, G1.space.diameter()) == 1


def test_phi_z_frontier(phi_z):
    f = qi.qi_frontier(phi_z)
    assert f.breakpoints == ((1, 1), (2, 0))
    assert f.L_flat == 2
    assert f(Fraction(3, 2)) == Fraction(1, 2)
    assert f(10) == 0
    assert f.min_L(Fraction(1, 2)) == Fraction(3, 2)


def test_minimal_M_rejects_small_L(phi_z):
    with pytest.raises(DomainError):
        qi.minimal_M(phi_z, Fraction(1, 2))


def test_every_finite_section_has_zero_floor():
    fib = line_fibration({"a": 0, "b": 1, "c": 10}, {"a": 0, "b": 1, "c": 1})
    phi = Section(fib, {0: "a", 1: "c"})
    f = qi.qi_frontier(phi)
    assert f.floor == 0
    assert f.breakpoints == ((1, 9), (10, 0))


def test_infeasible_min_L():
    f = qi.upper_envelope([5, 3], [0, 1], ["stuck", "other"])
    assert f.floor == 5
    assert f.min_L(5) == 1
    with pytest.raises(InfeasibleError) as exc:
        f.min_L(4)
    assert exc.value.witness == "stuck"


def test_envelope_matches_pointwise_max():
    rng = np.random.default_rng(2)
    for _ in range(50):
        a = [Fraction(int(v)) for v in rng.integers(0, 20, size=8)]
        b = [Fraction(int(v)) for v in rng.integers(0, 6, size=8)]
        f = qi.upper_envelope(a, b)
        for k in range(0, 400):
            L = 1 + Fraction(k, 40)
            assert f(L) == max([Fraction(0)] + [x - L * y for x, y in zip(a, b)])


def test_cones(G1, phi_id, phi_z):
    assert not qi.in_cone_R(G1, (0, 0), (0, 0), QIConstants(3, 0))
    assert qi.in_cone_R(G1, (0, 0), (1, 2), QIConstants(1, 0))
    assert not qi.in_cone_R(G1, (0, 0), (1, 2), QIConstants(2, 0))
    assert qi.graph_avoids_cones(phi_id, QIConstants(1, 0))
    assert not qi.graph_avoids_cones(phi_z, QIConstants(1, 0))
    assert qi.cone_witness(phi_z, QIConstants(1, 0)) == ((0, 0), (1, 2))
    assert qi.graph_avoids_cones(phi_z, QIConstants(2, 0))


def test_relative(phi_id, phi_z):
    assert qi.is_relative_qi(phi_id, phi_id, 0, QIConstants(1, 0))
    assert qi.is_relative_qi(phi_z, phi_id, 0, QIConstants(1, 1))
    assert not qi.is_relative_qi(phi_z, phi_id, 0, QIConstants(1, 0))
    assert qi.relative_violation(phi_z, phi_id, 0, QIConstants(1, 0)) == 1


def test_strong_relative(phi_id, phi_z):
    assert qi.is_strong_relative_qi(phi_id, phi_id, 0, QIConstants(1, 0))
    assert qi.is_strong_relative_qi(phi_z, phi_id, 0, QIConstants(1, 1))
    assert qi.relative_frontier(phi_z, phi_id, 0, strong=True)(1) == 1


def test_strong_implies_plain():
    rng = np.random.default_rng(5)
    for _ in range(50):
        fib = gen.random_fibration(rng, 5, 3)
        psi = gen.random_section(fib, rng)
        phi = gen.random_section(fib, rng, through=(0, psi(0)))
        for L, M in [(1, 0), (2, 1), (3, 4)]:
            c = QIConstants(L, M)
            if qi.is_strong_relative_qi(phi, psi, 0, c):
                assert qi.is_relative_qi(phi, psi, 0, c)


def test_base_point_mismatch(phi_id, phi_z):
    with pytest.raises(PreconditionError):
        qi.is_relative_qi(phi_z, phi_id, 1, QIConstants(1, 0))


def test_transfer_constants():
    assert qi.transfer_constants_forward(1, 1, 0, 0).as_tuple() == (2, 0)
    assert qi.transfer_constants_forward(2, 3, 1, 5).as_tuple() == (8, 6)
    assert qi.transfer_constants_forward(1, 4, 0, 7).as_tuple() == (5, 7)
    assert qi.transfer_constants_backward(1, 0).as_tuple() == (2, 0)
    assert qi.transfer_constants_backward(3, 2).as_tuple() == (4, 2)
    assert qi.transfer_constants_forward_sound(2, 3, 1, 5).as_tuple() == (8, 9)


def test_pointed_bound_on_g1(phi_z):
    assert qi.satisfies_pointed_bound(phi_z, 0, QIConstants(2, 0))
    assert not qi.satisfies_pointed_bound(phi_z, 0, QIConstants(1, 0))


def test_forward_additive_constant_needs_extra_term():
    # x0 = 0 alone in fiber 0; fiber 1 = {1, 3, 6}. psi = {0 -> 0, 1 -> 3} is
    # (1, 2)-QI, phi = {0 -> 0, 1 -> 6} is (1, 0)-relative to psi at label 0.
    fib = line_fibration({"x0": 0, "p": 1, "q": 3, "r": 6}, {"x0": 0, "p": 1, "q": 1, "r": 1})
    psi = Section(fib, {0: "x0", 1: "q"})
    phi = Section(fib, {0: "x0", 1: "r"})
    L, M, L1, M1 = 1, 2, 1, 0
    assert qi.is_qi_section(psi, QIConstants(L, M))
    assert qi.is_relative_qi(phi, psi, 0, QIConstants(L1, M1))
    literal = qi.transfer_constants_forward(L, L1, M, M1)
    sound = qi.transfer_constants_forward_sound(L, L1, M, M1)
    assert not qi.satisfies_pointed_bound(phi, 0, literal)
    assert qi.satisfies_pointed_bound(phi, 0, sound)
    assert qi.pointed_frontier(phi, 0)(sound.L) == sound.M


def test_forward_sound_constant_on_random_instances():
    rng = np.random.default_rng(9)
    for _ in range(60):
        fib = gen.random_fibration(rng, 5, 4)
        phi = gen.random_section(fib, rng)
        y0 = fib.labels[0]
        psi = gen.random_section(fib, rng, through=(y0, phi(y0)))
        L = Fraction(int(rng.integers(2, 7)), 2)
        M = qi.minimal_M(psi, L)
        L1 = Fraction(int(rng.integers(2, 7)), 2)
        M1 = qi.relative_frontier(phi, psi, y0)(L1)
        c = qi.transfer_constants_forward_sound(L, L1, M, M1)
        assert qi.satisfies_pointed_bound(phi, y0, c)


def test_global_equivalence_on_g1(G1, phi_z):
    family = {p: gen.identity_row(G1, p[1]) for p in G1.space.points}
    out = qi.global_equivalence_check(phi_z, family, QIConstants(1, 0))
    assert out["relative_at_every_point"] and out["intrinsically_qi"] and out["equivalent"]
    assert out["forward"]["holds"] and out["forward"]["holds_sound"]
    assert out["backward"]["holds"]
    assert out["backward"]["transferred"] == [2, 1]


def test_global_equivalence_singletons():
    fib = line_fibration({"a": 0, "b": 2}, {"a": 0, "b": 1})
    phi = Section(fib, {0: "a", 1: "b"})
    out = qi.global_equivalence_check(phi, {"a": phi, "b": phi}, QIConstants(1, 0))
    assert out["equivalent"] and out["forward"]["relative_constants"] == [1, 0]


def test_global_equivalence_family_must_pass_through(G1, phi_z):
    family = {p: gen.identity_row(G1, 0) for p in G1.space.points}
    with pytest.raises(PreconditionError):
        qi.global_equivalence_check(phi_z, family, QIConstants(1, 0))


def test_relation_on_g1(phi_id, phi_z, phi_w):
    rep = qi.strong_relation_check([phi_id, phi_z, phi_w], 0)
    assert rep["reflexive"] and rep["symmetric"] and rep["transitive"]
    assert rep["constants"]["0,0"]["at_L1"] == [1, 0]
    assert rep["constants"]["0,1"]["at_L1"] == [1, 1]


def test_min_L_chain_constant_can_fail(phi_id, phi_z, phi_w):
    # id ~ w and w ~ z at (1, 0), yet id ~ z needs M = 1 at L = 1.
    rep = qi.strong_relation_check([phi_id, phi_z, phi_w], 0)
    chain = next(c for c in rep["chains"] if c["triple"] == [0, 2, 1])
    assert chain["min_L_suffices_at_L1"] is False
    assert chain["sound_suffices_at_L1"] is True
    assert chain["chained_constants"]["at_L1"] == [1, 1]


def test_chain_constants_sound():
    c = qi.chain_constants_sound(QIConstants(1, 0), QIConstants(1, 0))
    assert c.as_tuple() == (3, 0)
    c = qi.chain_constants_sound(QIConstants(2, 1), QIConstants(1, 3))
    assert c.as_tuple() == (5, max(2 * 1 + 3, 3 * 3 + 1))


def test_relation_requires_shared_base(phi_id, phi_z):
    with pytest.raises(PreconditionError):
        qi.strong_relation_check([phi_id, phi_z], 1)


def test_float_instances_use_tolerance():
    space = FiniteMetricSpace([0, 1], [[0, 1.0 + 1e-12], [1.0 + 1e-12, 0]])
    fib = Fibration(space, {0: 0, 1: 1})
    phi = Section(fib, {0: 0, 1: 1})
    assert qi.is_qi_section(phi, QIConstants(1.0, 0.0))
