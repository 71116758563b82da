"""Robust grouped variable selection with transport-based oracle checks."""

from .clustering import ClusteringConfig, SimilarityGraph, \
    build_similarity_graph, cluster_predictors, eigengap_select, \
    select_knn_k, select_sigma
from .data import Dataset, StandardizationRecord, SyntheticSpec, \
    apply_standardization, generate_synthetic, load_dataset, save_dataset, \
    split_dataset, standardize
from .groups import GroupStructure, validate_groups
from .metrics import GroupingReport, OracleScores, grouping_bound_check, \
    mad, mpi, oracle_scores, wgd
from .norms import LatentDecomposition, WeightedGroupNorm, dual_norm_group, \
    glasso_penalty, group_norm_qt, omega_overlap
from .ot import DiscreteDistribution, TransportPlan, dro_worstcase, \
    group_metric, label_metric, lp_metric, mixture_ratio, w1_discrete
from .solvers import FitConfig, FitResult, eval_objective, fit_glasso_l2, \
    fit_gwgl_lg, fit_gwgl_lr, fit_latent_overlap, prox_group_l2
from .tuning import TuningReport, tune_epsilon, tuning_grid

__version__ = "0.1.0"

__all__ = [
    "ClusteringConfig", "SimilarityGraph", "build_similarity_graph",
    "cluster_predictors", "eigengap_select", "select_knn_k", "select_sigma",
    "Dataset", "StandardizationRecord", "SyntheticSpec",
    "apply_standardization", "generate_synthetic", "load_dataset",
    "save_dataset", "split_dataset", "standardize",
    "GroupStructure", "validate_groups",
    "GroupingReport", "OracleScores", "grouping_bound_check", "mad", "mpi",
    "oracle_scores", "wgd",
    "LatentDecomposition", "WeightedGroupNorm", "dual_norm_group",
    "glasso_penalty", "group_norm_qt", "omega_overlap",
    "DiscreteDistribution", "TransportPlan", "dro_worstcase", "group_metric",
    "label_metric", "lp_metric", "mixture_ratio", "w1_discrete",
    "FitConfig", "FitResult", "eval_objective", "fit_glasso_l2",
    "fit_gwgl_lg", "fit_gwgl_lr", "fit_latent_overlap", "prox_group_l2",
    "TuningReport", "tune_epsilon", "tuning_grid",
    "__version__",
]
