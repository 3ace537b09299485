"""Exact Bayesian-network structure learning under Dirichlet marginal-likelihood scores."""

from .core import (
    CategoricalDataset,
    Dag,
    DataFormatError,
    DimensionMismatchError,
    ParentConfigIndexer,
    SufficientStats,
    Variable,
    count_stats,
    eap_estimate,
    log_likelihood,
    read_csv,
)
from .estimator import StructureLearner
from .experiments import TrialConfig, alpha_star, arc_diff, ess_sweep, run_cell
from .scores import (
    BDe,
    BDeu,
    DataRatio,
    K2,
    aic,
    bic,
    entropy_posterior,
    entropy_prior,
    hyperparameters,
    log_bdeu_asymptotic,
    log_ml_asymptotic,
    log_ml_exact,
    score,
)
from .search import (
    SearchLimitError,
    enumerate_dags,
    equivalence_class,
    exact_dp_best,
    exhaustive_best,
)
from .simulate import BayesNet, forward_sample, joint_probability, preset

__version__ = "0.1.0"
