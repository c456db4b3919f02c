"""Quotient maps as labelled fiber partitions, their sections, and pushforward measures."""

from __future__ import annotations

import itertools
from functools import cached_property
from typing import Hashable, Iterable, Iterator, Mapping

import numpy as np

from .errors import ConfigurationError, InstanceError, PreconditionError
from .metric import FiniteMetricSpace, _freeze


class Fibration:
    """A partition of a finite metric space into nonempty fibers indexed by labels.

    ``fiber_of`` is the quotient map: it sends every point to its label. The
    label set is ``labels`` if given, otherwise the labels in order of first
    appearance along ``space.points``. ``measure`` optionally weights labels.
    """

    def __init__(
        self,
        space: FiniteMetricSpace,
        fiber_of: Mapping[Hashable, Hashable],
        labels: Iterable[Hashable] | None = None,
        measure: Mapping[Hashable, float] | None = None,
    ):
        self.space = space
        assigned = {}
        for p, y in fiber_of.items():
            i = space.index(p)
            if i in assigned:
                raise InstanceError(f"point {p!r} assigned twice")
            assigned[i] = _freeze(y)
        missing = [space.points[i] for i in range(space.n) if i not in assigned]
        if missing:
            raise InstanceError(f"point {missing[0]!r} has no label")
        if labels is None:
            labels = dict.fromkeys(assigned[i] for i in range(space.n))
        self.labels = tuple(_freeze(y) for y in labels)
        self._label_index = {y: k for k, y in enumerate(self.labels)}
        if len(self._label_index) != len(self.labels):
            raise InstanceError("duplicate labels")
        point_label = np.empty(space.n, dtype=int)
        for i, y in assigned.items():
            if y not in self._label_index:
                raise InstanceError(f"point {space.points[i]!r} carries unknown label {y!r}")
            point_label[i] = self._label_index[y]
        counts = np.bincount(point_label, minlength=len(self.labels))
        if len(self.labels) and counts.min() == 0:
            empty = self.labels[int(np.argmin(counts))]
            raise InstanceError(f"label {empty!r} has an empty fiber")
        self.point_label = point_label
        self.point_label.setflags(write=False)
        self._fibers = tuple(np.flatnonzero(point_label == k) for k in range(len(self.labels)))
        self.measure = None if measure is None else self._check_measure(measure)

    def _check_measure(self, measure: Mapping) -> np.ndarray:
        weights = np.empty(len(self.labels), dtype=object if self.space.exact else float)
        seen = set()
        for y, w in measure.items():
            k = self.label_index(y)
            if not np.isfinite(float(w)) or w < 0:
                raise InstanceError(f"measure weight for {y!r} must be finite and >= 0, got {w!r}")
            weights[k] = self.space.coerce(w)
            seen.add(k)
        if len(seen) != len(self.labels):
            lacking = next(y for k, y in enumerate(self.labels) if k not in seen)
            raise InstanceError(f"measure has no weight for label {lacking!r}")
        return weights

    def __repr__(self) -> str:
        return f"Fibration(|X|={self.space.n}, |Y|={len(self.labels)})"

    @property
    def exact(self) -> bool:
        return self.space.exact

    @property
    def tol(self):
        return self.space.tol

    def label_index(self, y) -> int:
        try:
            return self._label_index[_freeze(y)]
        except (KeyError, TypeError):
            raise InstanceError(f"unknown label {y!r}") from None

    def pi(self, x):
        """The label of the fiber containing ``x``."""
        return self.labels[self.point_label[self.space.index(x)]]

    def fiber_indices(self, y) -> np.ndarray:
        return self._fibers[self.label_index(y)]

    def fiber(self, y) -> frozenset:
        return frozenset(self.space.points[i] for i in self.fiber_indices(y))

    @cached_property
    def fiber_dist(self) -> np.ndarray:
        """``fiber_dist[i, k]`` is the distance from point ``i`` to the fiber of label ``k``."""
        d = self.space.dist
        out = np.empty((self.space.n, len(self.labels)), dtype=d.dtype)
        for k, idx in enumerate(self._fibers):
            out[:, k] = d[:, idx].min(axis=1)
        out.setflags(write=False)
        return out

    def fiber_diameter_bound(self):
        """Largest fiber diameter (0 for singleton fibers)."""
        d = self.space.dist
        return max((d[np.ix_(idx, idx)].max() for idx in self._fibers), default=0)

    def with_measure(self, measure: Mapping | None = None) -> "Fibration":
        """Copy of this fibration carrying ``measure`` (counting measure if None)."""
        if measure is None:
            measure = {y: 1 for y in self.labels}
        return Fibration(self.space, self.fiber_map(), self.labels, measure)

    def fiber_map(self) -> dict:
        return {p: self.labels[k] for p, k in zip(self.space.points, self.point_label)}

    def require_measure(self) -> np.ndarray:
        if self.measure is None:
            raise ConfigurationError("this operation needs a measure on the labels")
        return self.measure

    def section(self, choice: Mapping) -> "Section":
        return Section(self, choice)

    def sections(self) -> Iterator["Section"]:
        """Every section, in lexicographic order of fiber indices."""
        for combo in itertools.product(*self._fibers):
            yield Section.from_indices(self, combo)

    def n_sections(self) -> int:
        return int(np.prod([len(f) for f in self._fibers], dtype=object))


def fiber(fibration: Fibration, y) -> frozenset:
    return fibration.fiber(y)


def fiber_diameter_bound(fibration: Fibration):
    return fibration.fiber_diameter_bound()


class Section:
    """A total choice of one point per fiber."""

    def __init__(self, fibration: Fibration, choice: Mapping):
        self.fibration = fibration
        space = fibration.space
        idx = np.full(len(fibration.labels), -1, dtype=int)
        for y, p in choice.items():
            k = fibration.label_index(y)
            i = space.index(p)
            if fibration.point_label[i] != k:
                raise PreconditionError(
                    f"choice {p!r} for label {y!r} lies in the fiber of {fibration.pi(p)!r}"
                )
            idx[k] = i
        if (idx < 0).any():
            lacking = fibration.labels[int(np.flatnonzero(idx < 0)[0])]
            raise PreconditionError(f"section is partial: no choice for label {lacking!r}")
        self.graph_indices = idx
        self.graph_indices.setflags(write=False)

    @classmethod
    def from_indices(cls, fibration: Fibration, indices: Iterable[int]) -> "Section":
        pts = fibration.space.points
        return cls(fibration, {y: pts[i] for y, i in zip(fibration.labels, indices)})

    def __call__(self, y):
        return self.fibration.space.points[self.graph_indices[self.fibration.label_index(y)]]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Section)
            and other.fibration is self.fibration
            and np.array_equal(other.graph_indices, self.graph_indices)
        )

    def __hash__(self) -> int:
        return hash(tuple(self.graph_indices))

    def __repr__(self) -> str:
        return f"Section({self.choice})"

    @property
    def labels(self) -> tuple:
        return self.fibration.labels

    @property
    def exact(self) -> bool:
        return self.fibration.exact

    @property
    def tol(self):
        return self.fibration.tol

    @property
    def choice(self) -> dict:
        pts = self.fibration.space.points
        return {y: pts[i] for y, i in zip(self.labels, self.graph_indices)}

    def graph(self) -> frozenset:
        pts = self.fibration.space.points
        return frozenset(pts[i] for i in self.graph_indices)

    def coerce(self, value):
        return self.fibration.space.coerce(value)

    # Distance views consumed by the analysis modules.

    def graph_distances(self) -> np.ndarray:
        """``[k1, k2] -> d(phi(y1), phi(y2))``."""
        g = self.graph_indices
        return self.fibration.space.dist[np.ix_(g, g)]

    def fiber_distances(self) -> np.ndarray:
        """``[k1, k2] -> d(phi(y1), fiber(y2))``."""
        return self.fibration.fiber_dist[self.graph_indices, :]

    def distances_along(self, other: "Section") -> np.ndarray:
        """``[k] -> d(phi(y), other(y))``."""
        self._same_fibration(other)
        return self.fibration.space.dist[self.graph_indices, other.graph_indices]

    def distances_from_value(self, other: "Section", y) -> np.ndarray:
        """``[k] -> d(other(y_hat), phi(y))``."""
        self._same_fibration(other)
        i = other.graph_indices[self.fibration.label_index(y)]
        return self.fibration.space.dist[i, self.graph_indices]

    def agrees_at(self, other: "Section", y) -> bool:
        k = self.fibration.label_index(y)
        return self.graph_indices[k] == other.graph_indices[k]

    def _same_fibration(self, other: "Section") -> None:
        if other.fibration is not self.fibration:
            raise PreconditionError("sections belong to different fibrations")


def pushforward_mass(section: Section, A: Iterable):
    """Mass of the labels whose chosen point lies in ``A``."""
    weights = section.fibration.require_measure()
    space = section.fibration.space
    members = np.zeros(space.n, dtype=bool)
    members[space.indices(A)] = True
    hit = members[section.graph_indices]
    return weights[hit].sum() if hit.any() else 0 * weights[:1].sum()


def label_mass(fibration: Fibration, point_indices) -> object:
    """``mu(pi(S))`` for a set of point indices ``S``."""
    weights = fibration.require_measure()
    if len(point_indices) == 0:
        return 0 * weights[:1].sum()
    ks = np.unique(fibration.point_label[np.asarray(point_indices, dtype=int)])
    return weights[ks].sum()
