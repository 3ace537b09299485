"""scikit-learn compatible front end for exact structure learning."""

from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .core import CategoricalDataset, check_same_variables, dag_to_dict
from .experiments import learn
from .scores import make_scheme, score as score_structure
from .validation import check_categorical


class StructureLearner(BaseEstimator):
    """Find the highest-scoring DAG for a categorical data matrix.

    Parameters
    ----------
    kind : {"exact-ml", "asymptotic-ml", "bdeu-asymptotic", "aic", "bic"}
        Score to maximise.
    scheme : {"bdeu", "bde", "k2", "data-ratio"}
        Dirichlet hyperparameter rule; ignored by ``aic`` and ``bic``.
    ess : float or None
        Equivalent sample size for ``bdeu``/``bde``, or the factor ``c`` for
        ``data-ratio``. ``None`` uses 1 (or 1/3 for ``data-ratio``).
    method : {"auto", "exhaustive", "dp"}
        ``auto`` scores every DAG when there are at most 5 variables and
        falls back to subset dynamic programming otherwise.
    max_parents : int or None
        Parent-set size cap, honoured by ``dp`` only.
    prior_net : BayesNet or None
        Prior network for the ``bde`` scheme.
    cardinalities : sequence of int or None
        Number of states per column; inferred from the data when omitted.

    Attributes
    ----------
    dag_ : Dag
    score_ : float
        Score of ``dag_`` on the training data, in bits.
    variables_ : tuple of Variable
    n_candidates_ : int
    n_ties_ : int
    """

    def __init__(
        self,
        kind="exact-ml",
        scheme="bdeu",
        ess=1.0,
        method="auto",
        max_parents=None,
        prior_net=None,
        cardinalities=None,
    ):
        self.kind = kind
        self.scheme = scheme
        self.ess = ess
        self.method = method
        self.max_parents = max_parents
        self.prior_net = prior_net
        self.cardinalities = cardinalities

    def _scheme(self):
        if self.kind in ("aic", "bic"):
            return None
        return make_scheme(self.scheme, self.ess, self.prior_net)

    def fit(self, X, y=None):
        data = check_categorical(X, self.cardinalities)
        result = learn(data, self.kind, self._scheme(), self.method, self.max_parents)
        self.variables_ = data.variables
        self.n_features_in_ = data.num_vars
        self.dag_ = result.dag
        self.score_ = result.score
        self.n_candidates_ = result.n_candidates
        self.n_ties_ = result.n_ties
        return self

    def score(self, X, y=None):
        """Score of the fitted structure on ``X`` (bits, larger is better)."""
        return self.score_report(X).total

    def score_report(self, X):
        check_is_fitted(self, "dag_")
        if isinstance(X, CategoricalDataset) or hasattr(X, "columns"):
            data = check_categorical(X)
            check_same_variables(data.variables, self.variables_)
        else:
            data = check_categorical(
                X, [v.cardinality for v in self.variables_], [v.name for v in self.variables_]
            )
        return score_structure(data, self.dag_, self.kind, self._scheme())

    def structure_dict(self) -> dict:
        check_is_fitted(self, "dag_")
        return dag_to_dict(self.dag_, self.variables_)
