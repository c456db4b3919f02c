"""Quasi-isometric sections of quotient maps on finite and linear fibrations."""

from .errors import (
    ConfigurationError,
    DomainError,
    InfeasibleError,
    InstanceError,
    IsecError,
    MetricError,
    PreconditionError,
)
from .fibration import Fibration, Section, pushforward_mass
from .linear import LinearFibration, LinearSection
from .metric import FiniteMetricSpace, NormedInstance
from .qi import (
    Frontier,
    QIConstants,
    cone_witness,
    graph_avoids_cones,
    is_qi_section,
    is_relative_qi,
    is_strong_relative_qi,
    minimal_L,
    minimal_M,
    qi_frontier,
)
from .regularity import RegularityReport, regularity_report, transfer_regularity

__all__ = [
    "ConfigurationError",
    "DomainError",
    "Fibration",
    "FiniteMetricSpace",
    "Frontier",
    "InfeasibleError",
    "InstanceError",
    "IsecError",
    "LinearFibration",
    "LinearSection",
    "MetricError",
    "NormedInstance",
    "PreconditionError",
    "QIConstants",
    "RegularityReport",
    "Section",
    "cone_witness",
    "graph_avoids_cones",
    "is_qi_section",
    "is_relative_qi",
    "is_strong_relative_qi",
    "minimal_L",
    "minimal_M",
    "pushforward_mass",
    "qi_frontier",
    "regularity_report",
    "transfer_regularity",
]
