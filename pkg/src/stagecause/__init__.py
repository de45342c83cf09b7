"""Causal discovery for categorical data with staged event trees.

Fit and score staged trees, search stage structures and variable
orderings, quantify causal disagreement between models, and run
reproducible simulation benchmarks.
"""

__version__ = "0.1.0"

from .model import (
    CsvFormatError,
    Dag,
    Dataset,
    Pdag,
    StagedTree,
    ValidationReport,
    VariableMeta,
    contexts,
    stage_of,
    validate_tree,
)
from .probability import (
    EmptyStageError,
    Intervention,
    bic,
    conditional,
    degrees_of_freedom,
    fit_mle,
    interventional,
    joint_prob,
    joint_table,
    log_likelihood,
    sample,
)
from .staging import StagingResult, bhc_stratum, fit_order, kmeans_stratum
from .ordering import (
    DiscoveryResult,
    ScoreCache,
    best_order_dp,
    best_order_exhaustive,
    stratum_score,
)
from .metrics import CidReport, cid, cid_oracle, cid_vs_sid_experiment, kendall, sid
from .convert import consensus_pdag, dag_to_staged_tree, staged_tree_to_minimal_dag
from .randgen import (
    GenConfig,
    count_dags,
    enumerate_dags,
    random_dag_uniform,
    random_staged_tree,
    shuffle_variables,
)
from .experiment import ExperimentConfig, run_experiment

__all__ = [
    "__version__",
    "CsvFormatError",
    "Dag",
    "Dataset",
    "Pdag",
    "StagedTree",
    "ValidationReport",
    "VariableMeta",
    "contexts",
    "stage_of",
    "validate_tree",
    "EmptyStageError",
    "Intervention",
    "bic",
    "conditional",
    "degrees_of_freedom",
    "fit_mle",
    "interventional",
    "joint_prob",
    "joint_table",
    "log_likelihood",
    "sample",
    "StagingResult",
    "bhc_stratum",
    "fit_order",
    "kmeans_stratum",
    "DiscoveryResult",
    "ScoreCache",
    "best_order_dp",
    "best_order_exhaustive",
    "stratum_score",
    "CidReport",
    "cid",
    "cid_oracle",
    "cid_vs_sid_experiment",
    "kendall",
    "sid",
    "consensus_pdag",
    "dag_to_staged_tree",
    "staged_tree_to_minimal_dag",
    "GenConfig",
    "count_dags",
    "enumerate_dags",
    "random_dag_uniform",
    "random_staged_tree",
    "shuffle_variables",
    "ExperimentConfig",
    "run_experiment",
]
