"""Max-min diverse subset selection under group-fairness constraints."""
from .clustering import ClusterResult, fair_kcenter, fair_kcenter_probe
from .core import (
    BudgetExceededError,
    DataError,
    Dataset,
    FairDivError,
    FairnessSpec,
    InfeasibleSpecError,
    InvariantViolation,
    Selection,
    validate_pseudometric,
)
from .disjoint import fair_gmm, fair_swap
from .flow import FlowNetwork, fair_flow, fair_flow_probe, max_flow
from .gmm import GmmState, gmm
from .oracle import OracleResult, oracle_fair_kcenter, oracle_fair_maxmin
from .overlap import fair_flow_overlap, fair_swap_overlap, partition_into_classes, sperner_bound

__all__ = [
    "BudgetExceededError", "ClusterResult", "DataError", "Dataset", "FairDivError", "FairnessSpec",
    "FlowNetwork", "GmmState", "InfeasibleSpecError", "InvariantViolation", "OracleResult", "Selection",
    "fair_flow", "fair_flow_overlap", "fair_flow_probe", "fair_gmm", "fair_kcenter", "fair_kcenter_probe",
    "fair_swap", "fair_swap_overlap", "gmm", "max_flow", "oracle_fair_kcenter", "oracle_fair_maxmin",
    "partition_into_classes", "sperner_bound", "validate_pseudometric",
]
