"""Ensemble regression with error-weighted voting, from-scratch learners,
and a rank-based significance harness."""

from .bench import (
    DatasetSpec,
    ExperimentConfig,
    ExperimentReport,
    emit_report,
    run_experiment,
    synthetic_benchmark_config,
)
from .dataset import (
    Dataset,
    SplitPair,
    Standardizer,
    load_csv,
    standardize_apply,
    standardize_fit,
    synth_generate,
    train_test_split,
    write_csv,
)
from .ensemble import (
    EnsembleModel,
    fit_bagging,
    fit_dwr,
    fit_voting,
    predict_bagging,
    predict_dwr,
    predict_voting,
    prune_pool,
)
from .errors import EnsregError
from .learners import DecisionTree, LearnerSpec, TrainedLearner, fit, predict
from .metrics import (
    MetricReport,
    mae,
    mse,
    r2,
    rmse,
    rrmse_per_sample,
    rrmse_pooled,
    zero_division_constant,
)
from .stats import (
    RankMatrix,
    ResultMatrix,
    SignificanceReport,
    chi2_sf,
    friedman_aligned,
    normal_sf,
    posthoc_pairwise,
    rank_rows,
    stars,
    win_lose_tie,
)
from .weighting import (
    EPS_FLOOR,
    ErrorProfile,
    MisfitMatrix,
    NeighborStore,
    WeightVector,
    bem_combine,
    dwr_weights,
    error_profile,
    gem_weights,
    inverse_error_weights,
    misfit_matrix,
    rrmse_weights,
    uniform_weights,
)

__version__ = "0.1.0"
