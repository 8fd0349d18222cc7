"""Max-linear Bayesian networks: tropical algebra, simulation, structure
learning, exact conditional sampling and conditional-independence testing."""

from .arborescence import Arborescence, NoArborescenceError, edmonds_arborescence
from .bench import bench
from .conditional import (
    ConditionalSampler,
    ConditioningEvent,
    InfeasibleEventError,
    constraint_residual,
    enumerate_scenarios,
    rejection_oracle,
    sample_conditional,
    support_cells,
)
from .dag import CycleError, Dag
from .independence import ci_test_mc, conditional_representation, event_feasible
from .innovations import Frechet, LogUniform, PointMassMixture, UnsupportedDistribution
from .io import export_csv, export_dot, ingest_csv, read_model, write_model
from .model import (
    FactorModel,
    MaxLinearNetwork,
    NoiseSpec,
    ObservationSet,
    cdf,
    drought_scenario,
    random_network,
    simulate,
    tail_dependence,
    tail_dependence_approx,
)
from .structure import correlation_scores, evaluate, learn_tree, qtree_scores
from .tropical import cone_membership, kleene_star, residuate, trop_matmul, trop_matvec

__version__ = "0.1.0"

__all__ = [
    "Arborescence", "NoArborescenceError", "edmonds_arborescence", "bench",
    "ConditionalSampler", "ConditioningEvent", "InfeasibleEventError", "constraint_residual",
    "enumerate_scenarios", "rejection_oracle", "sample_conditional", "support_cells",
    "CycleError", "Dag", "ci_test_mc", "conditional_representation", "event_feasible",
    "Frechet", "LogUniform", "PointMassMixture", "UnsupportedDistribution",
    "export_csv", "export_dot", "ingest_csv", "read_model", "write_model",
    "FactorModel", "MaxLinearNetwork", "NoiseSpec", "ObservationSet", "cdf", "drought_scenario",
    "random_network", "simulate", "tail_dependence", "tail_dependence_approx",
    "correlation_scores", "evaluate", "learn_tree", "qtree_scores",
    "cone_membership", "kleene_star", "residuate", "trop_matmul", "trop_matvec",
]
