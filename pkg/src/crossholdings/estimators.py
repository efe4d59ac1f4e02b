"""scikit-learn transformers over price scenarios.

Rows of ``X`` are price vectors (one column per asset). The network is a
constructor parameter, and ``fit`` validates it and factorizes its
cross-holdings once, so the transformers drop into a ``Pipeline``::

    pipe = make_pipeline(MarketValueTransformer(network), StandardScaler())
    features = pipe.fit_transform(price_scenarios)
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .cascade import best_case_equilibrium, worst_case_equilibrium
from .network import require_valid
from .valuation import SolverConfig, ValuationOperator

__all__ = ["MarketValueTransformer", "FailureTransformer"]


class _NetworkTransformer(TransformerMixin, BaseEstimator):
    def fit(self, X=None, y=None):
        require_valid(self.network)
        self.operator_ = ValuationOperator(self.network, self.solver_config)
        self.n_features_in_ = self.network.m
        self.n_institutions_ = self.network.n
        return self

    def _check_prices(self, X):
        check_is_fitted(self, "operator_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} columns, the network has {self.n_features_in_} assets")
        if np.any(X < 0):
            raise ValueError("prices must be non-negative")
        return X

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "operator_")
        return np.array([f"{self._prefix}{i}" for i in range(self.n_institutions_)], dtype=object)


class MarketValueTransformer(_NetworkTransformer):
    """Map price scenarios to market values (or equity values with ``output="equity"``)."""

    _prefix = "market"

    def __init__(self, network, output="market", solver_config: SolverConfig | None = None):
        self.network = network
        self.output = output
        self.solver_config = solver_config

    def transform(self, X):
        X = self._check_prices(X)
        inflow = self.network.asset_ownership @ X.T
        if self.output == "market":
            return self.operator_.market(inflow).T
        if self.output == "equity":
            return self.operator_.equity(inflow).T
        raise ValueError(f"output must be 'market' or 'equity', got {self.output!r}")


class FailureTransformer(_NetworkTransformer):
    """Map price scenarios to 0/1 failure indicators in the chosen equilibrium."""

    _prefix = "failed"

    def __init__(self, network, rule="best-case", solver_config: SolverConfig | None = None):
        self.network = network
        self.rule = rule
        self.solver_config = solver_config

    def transform(self, X):
        X = self._check_prices(X)
        if self.rule == "best-case":
            solve = best_case_equilibrium
        elif self.rule == "worst-case":
            solve = worst_case_equilibrium
        else:
            raise ValueError(f"rule must be 'best-case' or 'worst-case', got {self.rule!r}")
        out = np.zeros((X.shape[0], self.n_institutions_))
        for row, prices in enumerate(X):
            eq = solve(self.network.with_prices(prices), operator=self.operator_)
            out[row, sorted(eq.failed)] = 1.0
        return out

    def predict(self, X):
        """Number of failed institutions per scenario."""
        return self.transform(X).sum(axis=1).astype(int)
