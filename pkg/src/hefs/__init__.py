"""Helper-set feature search: a Pareto genetic algorithm that augments a
fixed conditional feature subset with complementary residual features."""

from .baselines import ConditionalSet, load_conditional, mi_rank_select, ttest_rank_select
from .dataset import (
    ClusterReduction,
    Dataset,
    DatasetError,
    FoldAssignment,
    cosine_distance,
    leader_cluster,
    load_csv,
    reduce_dataset,
    stratified_kfold,
    synth_xor_dataset,
    zscore_normalize,
)
from .ga import (
    ConfigError,
    FitnessEvaluator,
    GAConfig,
    GenerationRecord,
    HelperResult,
    Individual,
    best_helper_set,
    biased_ratio,
    complementarity_score,
    evaluate_individual,
    evaluation_columns,
    hefs_run,
    ratio_guided_mutation,
    residual_feature_indices,
    run_fold_assignment,
    selection,
    selective_activation_init,
    single_point_crossover,
)
from .metrics import (
    MetricsReport,
    cv_accuracy,
    equal_width_bins,
    full_metrics,
    knn_predict,
    mutual_information,
)
from .moo import (
    FitnessPair,
    ReferencePointSet,
    adaptive_partitions,
    dominates,
    generate_reference_points,
    niche_select,
    nondominated_sort,
    normalize_front,
    pareto_solutions,
)

__version__ = "0.1.0"
