from __future__ import annotations

import numpy as np
import pytest

from isec import generators as gen
from isec.errors import ConfigurationError, InstanceError, PreconditionError
from isec.fibration import (
    Fibration,
    Section,
    fiber,
    fiber_diameter_bound,
    pushforward_mass,
)
from isec.metric import FiniteMetricSpace


def singleton_fibration():
    space = FiniteMetricSpace(["p", "q", "r"], [[0, 1, 2], [1, 0, 1], [2, 1, 0]], exact=True)
    return Fibration(space, {"p": 0, "q": 1, "r": 2}, measure={0: 1, 1: 1, 2: 1})


def test_fibers_of_g1(G1):
    assert fiber(G1, 1) == {(1, 0), (1, 1), (1, 2)}
    assert len(fiber(G1, 0)) == 3
    assert sum(len(fiber(G1, y)) for y in G1.labels) == G1.space.n


def test_singleton_fiber():
    fib = singleton_fibration()
    assert fiber(fib, 1) == {"q"}
    assert fiber_diameter_bound(fib) == 0


def test_fiber_diameter_bounds(G1, G9):
    assert fiber_diameter_bound(G1) == 2
    assert fiber_diameter_bound(G9) == 2
    assert fiber_diameter_bound(gen.grid(2, 9)) == 1


def test_unknown_label(G1):
    with pytest.raises(InstanceError):
        fiber(G1, 7)


def test_empty_fiber_rejected():
    space = FiniteMetricSpace([0, 1], [[0, 1], [1, 0]], exact=True)
    with pytest.raises(InstanceError):
        Fibration(space, {0: "a", 1: "a"}, labels=["a", "b"])


def test_unassigned_point_rejected():
    space = FiniteMetricSpace([0, 1], [[0, 1], [1, 0]], exact=True)
    with pytest.raises(InstanceError):
        Fibration(space, {0: "a"})


@pytest.mark.parametrize("bad", [{0: -1, 1: 1, 2: 1}, {0: float("nan"), 1: 1, 2: 1}, {0: 1, 1: 1}])
def test_bad_measures(G1, bad):
    with pytest.raises(InstanceError):
        Fibration(G1.space, G1.fiber_map(), G1.labels, bad)


def test_section_must_respect_fibers(G1):
    with pytest.raises(PreconditionError):
        Section(G1, {0: (1, 0), 1: (1, 1), 2: (2, 0)})
    with pytest.raises(PreconditionError):
        Section(G1, {0: (0, 0), 1: (1, 1)})


def test_section_identity(G1, phi_z):
    assert all(G1.pi(phi_z(y)) == y for y in G1.labels)
    assert phi_z.graph() == {(0, 0), (1, 2), (2, 0)}
    assert phi_z == Section(G1, dict(phi_z.choice))
    assert G1.n_sections() == 27 == len(list(G1.sections()))


def test_pushforward_mass_on_g9(G9):
    phi = gen.identity_row(G9)
    assert pushforward_mass(phi, G9.space.ball((4, 0), 1.5)) == 3
    assert pushforward_mass(phi, []) == 0
    assert pushforward_mass(phi, G9.space.points) == 9


def test_pushforward_mass_is_additive(G9):
    rng = np.random.default_rng(3)
    phi = gen.random_section(G9, rng)
    pts = list(G9.space.points)
    for _ in range(20):
        mask = rng.random(len(pts)) < 0.5
        a = [p for p, m in zip(pts, mask) if m]
        b = [p for p, m in zip(pts, mask) if not m]
        assert pushforward_mass(phi, a) + pushforward_mass(phi, b) == pushforward_mass(phi, pts)


def test_missing_measure(G1, phi_id):
    bare = Fibration(G1.space, G1.fiber_map(), G1.labels)
    with pytest.raises(ConfigurationError):
        pushforward_mass(Section(bare, phi_id.choice), [(0, 0)])


def test_weighted_measure(G9):
    weights = {y: 1 for y in G9.labels}
    weights[4] = 2
    fib = G9.with_measure(weights)
    phi = gen.identity_row(fib)
    assert pushforward_mass(phi, fib.space.ball((4, 0), 1.5)) == 4
