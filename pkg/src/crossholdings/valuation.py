"""Failure-free valuation.

Three independent routes to the same numbers:

* the closed form ``V = (I - C)^-1 D p``, ``v = diag(s) V`` (dense LU),
* the truncated power series ``sum_k C^k D p``, and
* the flow process on the augmented ``2n x 2n`` column-stochastic matrix,
  where asset value is passed along ownership links until all of it rests
  with outside shareholders.

``s`` is the vector of self-holdings. All norms are l1, and the matrix norm
is the induced one (max absolute column sum).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy import linalg

from .errors import ConvergenceError
from .network import FinancialNetwork, ValuationResult, is_column_stochastic, require_valid

__all__ = [
    "SolverConfig",
    "DENSE_LIMIT",
    "l1_operator_norm",
    "equity_values",
    "market_values",
    "neumann_values",
    "neumann_depth_bound",
    "FlowSystem",
    "flow_values",
    "ValuationOperator",
]

#: Largest ``n`` solved by dense factorization; bigger systems use the series.
DENSE_LIMIT = 512


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-10
    max_iterations: int = 1_000_000

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")


DEFAULT_CONFIG = SolverConfig()


def l1_operator_norm(A) -> float:
    """Induced l1 norm: the largest absolute column sum."""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return 0.0
    return float(np.abs(A).sum(axis=0).max())


def _series(C, rhs, config):
    """Sum ``C^k rhs`` until the next term's l1 mass drops below tolerance.

    Returns the partial sum and the number of terms added.
    """
    scale = np.abs(rhs).sum()
    total = np.zeros_like(rhs)
    if scale == 0:
        return total, 0
    term = rhs.copy()
    for k in range(config.max_iterations):
        if np.abs(term).sum() <= config.tolerance * scale:
            return total, k
        total += term
        term = C @ term
    raise ConvergenceError(
        f"power series did not reach tolerance {config.tolerance:g} in {config.max_iterations} terms"
    )


class ValuationOperator:
    """Reusable solver for ``v = diag(s) (I - C)^-1 x`` on one network.

    The network is validated and factorized once; :meth:`market` and
    :meth:`equity` then take arbitrary inflow vectors (or matrices whose
    columns are inflows). The cascade and shock-search code call this many
    times per network.
    """

    def __init__(self, network: FinancialNetwork, config: SolverConfig | None = None):
        require_valid(network)
        self.network = network
        self.config = config or DEFAULT_CONFIG
        C = network.cross_holdings
        self.self_holdings = 1.0 - C.sum(axis=0)
        self.n = network.n
        self._lu = None
        if 0 < self.n <= DENSE_LIMIT:
            self._lu = linalg.lu_factor(np.eye(self.n) - C, check_finite=False)

    def equity(self, inflow) -> np.ndarray:
        inflow = np.asarray(inflow, dtype=float)
        if self.n == 0:
            return inflow.copy()
        if self._lu is not None:
            return linalg.lu_solve(self._lu, inflow, check_finite=False)
        return _series(self.network.cross_holdings, inflow, self.config)[0]

    def market(self, inflow) -> np.ndarray:
        V = self.equity(inflow)
        if V.ndim == 1:
            return self.self_holdings * V
        return self.self_holdings[:, None] * V

    def matrix(self) -> np.ndarray:
        """Dense ``diag(s) (I - C)^-1``; every column sums to one."""
        return self.market(np.eye(self.n))


def equity_values(network: FinancialNetwork, config: SolverConfig | None = None) -> np.ndarray:
    """Equity values ``V`` solving ``V = D p + C V``."""
    return ValuationOperator(network, config).equity(network.asset_values)


def market_values(network: FinancialNetwork, config: SolverConfig | None = None) -> ValuationResult:
    """Equity and market values through the closed form."""
    op = ValuationOperator(network, config)
    V = op.equity(network.asset_values)
    return ValuationResult(equity=V, market=op.self_holdings * V, method="closed-form")


def neumann_depth_bound(tolerance: float, reserve: float) -> int:
    """Terms needed when ``||C|| <= 1 - reserve``: ``ceil(log tol / log(1 - r))``."""
    if reserve >= 1:
        return 1
    return max(1, math.ceil(math.log(tolerance) / math.log1p(-reserve)))


def neumann_values(network: FinancialNetwork, config: SolverConfig | None = None) -> ValuationResult:
    """Equity and market values from the truncated series ``sum_k C^k D p``.

    The series stops at the first power whose contribution has l1 mass at
    most ``tolerance * ||D p||``. Because the columns of
    ``diag(s)(I - C)^-1`` sum to one, that mass is exactly the l1 error left
    in the market values.
    """
    require_valid(network)
    config = config or DEFAULT_CONFIG
    C = network.cross_holdings
    V, terms = _series(C, network.asset_values, config)
    s = 1.0 - C.sum(axis=0)
    return ValuationResult(equity=V, market=s * V, iterations=terms, method="neumann")


@dataclass(frozen=True, eq=False)
class FlowSystem:
    """Augmented system ``A = [[C, 0], [diag(s), I]]`` and initial wealth ``W``.

    Rows ``0..n-1`` are institutions, rows ``n..2n-1`` their outside
    shareholders. ``A`` is column stochastic, so each step conserves mass.
    """

    A: np.ndarray
    W: np.ndarray

    @classmethod
    def from_network(cls, network: FinancialNetwork) -> FlowSystem:
        require_valid(network)
        n = network.n
        C = network.cross_holdings
        A = np.zeros((2 * n, 2 * n))
        A[:n, :n] = C
        A[n:, :n] = np.diag(1.0 - C.sum(axis=0))
        A[n:, n:] = np.eye(n)
        W = np.concatenate([network.asset_values, np.zeros(n)])
        A.setflags(write=False)
        W.setflags(write=False)
        return cls(A, W)

    @property
    def n(self) -> int:
        return self.A.shape[0] // 2

    def trajectory(self, steps: int | None = None) -> Iterator[np.ndarray]:
        """Yield ``A^t W`` for ``t = 0, 1, ...`` (``steps`` + 1 states when bounded)."""
        state = self.W.copy()
        t = 0
        while steps is None or t <= steps:
            yield state
            state = self.A @ state
            t += 1


def flow_values(network: FinancialNetwork, config: SolverConfig | None = None) -> ValuationResult:
    """Market values as the limit of the flow process.

    Iterates ``A^t W`` until the mass still held by institutions is at most
    ``tolerance * ||p||``; the shareholder half is then the market value.
    Requires every asset to be fully owned inside the network.
    """
    require_valid(network)
    if not is_column_stochastic(network):
        raise ValueError("flow valuation requires a column-stochastic asset_ownership matrix")
    config = config or DEFAULT_CONFIG
    system = FlowSystem.from_network(network)
    n = network.n
    scale = float(np.abs(network.prices).sum())
    for t, state in enumerate(system.trajectory()):
        if np.abs(state[:n]).sum() <= config.tolerance * scale:
            break
        if t >= config.max_iterations:
            raise ConvergenceError(
                f"flow did not drain below tolerance {config.tolerance:g} in {config.max_iterations} steps"
            )
    market = state[n:].copy()
    s = 1.0 - network.cross_holdings.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        equity = market / s
    return ValuationResult(equity=equity, market=market, iterations=t, method="flow")
