"""How much market values move when cross-holdings change.

For two networks with the same assets and prices, let ``eps`` be the l1
operator norm of the stacked change ``[C' - C; diag(s') - diag(s)]`` and
``r`` the smallest self-holding in either network. Market values then move
by at most ``min(eps / r, 2) * ||D p||``. In acyclic networks no equity value
exceeds ``||p||``, so a single-edge change of ``eps`` moves any one market
value by at most ``eps * ||p||``.

Cycles defeat that second bound: :func:`gen_lower_bound_network` builds a
four-bank network in which two banks hold most of each other, and moving one
``eps`` stake changes market values by about ``eps / r``.
"""

from __future__ import annotations

from dataclasses import dataclass
from graphlib import CycleError, TopologicalSorter

import numpy as np

from .network import FinancialNetwork, require_valid
from .valuation import equity_values, l1_operator_norm, market_values

__all__ = [
    "PerturbationReport",
    "EquityBoundReport",
    "perturbation_report",
    "perturbation_size",
    "sensitivity_upper_bound",
    "is_acyclic",
    "acyclic_equity_bound_check",
    "gen_lower_bound_network",
    "amplified_equity",
    "lower_bound_gap",
]


@dataclass(frozen=True)
class PerturbationReport:
    epsilon: float
    reserve: float
    measured: float
    upper_bound: float
    ratio: float
    asset_value_norm: float

    @property
    def within_bound(self) -> bool:
        return self.measured <= self.upper_bound + 1e-9


@dataclass(frozen=True)
class EquityBoundReport:
    max_equity: float
    asset_total: float
    slack: float

    @property
    def holds(self) -> bool:
        return self.slack >= -1e-9


def sensitivity_upper_bound(epsilon: float, reserve: float, asset_value_norm: float = 1.0) -> float:
    """``min(epsilon / reserve, 2) * asset_value_norm``."""
    if not epsilon >= 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    if not 0 < reserve <= 1:
        raise ValueError(f"reserve must lie in (0, 1], got {reserve}")
    if not asset_value_norm >= 0:
        raise ValueError(f"asset_value_norm must be >= 0, got {asset_value_norm}")
    return min(epsilon / reserve, 2.0) * asset_value_norm


def perturbation_size(network: FinancialNetwork, perturbed: FinancialNetwork) -> float:
    """l1 operator norm of the stacked change in cross-holdings and self-holdings."""
    dC = perturbed.cross_holdings - network.cross_holdings
    ds = network.cross_holdings.sum(axis=0) - perturbed.cross_holdings.sum(axis=0)
    return l1_operator_norm(np.vstack([dC, np.diag(ds)]))


def perturbation_report(network: FinancialNetwork, perturbed: FinancialNetwork) -> PerturbationReport:
    require_valid(network)
    require_valid(perturbed)
    if network.cross_holdings.shape != perturbed.cross_holdings.shape:
        raise ValueError(
            f"institution counts differ: {network.n} vs {perturbed.n}"
        )
    if network.asset_ownership.shape != perturbed.asset_ownership.shape:
        raise ValueError(f"asset counts differ: {network.m} vs {perturbed.m}")
    if not (
        np.array_equal(network.asset_ownership, perturbed.asset_ownership)
        and np.array_equal(network.prices, perturbed.prices)
    ):
        raise ValueError("networks must share asset ownership and prices")

    eps = perturbation_size(network, perturbed)
    r = float(
        min(
            (1.0 - network.cross_holdings.sum(axis=0)).min(initial=1.0),
            (1.0 - perturbed.cross_holdings.sum(axis=0)).min(initial=1.0),
        )
    )
    norm = float(np.abs(network.asset_values).sum())
    measured = float(np.abs(market_values(network).market - market_values(perturbed).market).sum())
    return PerturbationReport(
        epsilon=eps,
        reserve=r,
        measured=measured,
        upper_bound=sensitivity_upper_bound(eps, r, norm),
        ratio=measured / norm if norm > 0 else 0.0,
        asset_value_norm=norm,
    )


def is_acyclic(network: FinancialNetwork) -> tuple[bool, list[list[int]] | None]:
    """Check the ownership graph (edge ``j -> i`` when ``C[i, j] > 0``) for cycles.

    When acyclic, also return its layers: layer 0 holds no stakes in other
    institutions, and every stake held by a layer-``t`` institution is in
    an earlier layer.
    """
    C = network.cross_holdings
    sorter = TopologicalSorter({i: np.nonzero(C[i] > 0)[0].tolist() for i in range(C.shape[0])})
    try:
        sorter.prepare()
    except CycleError:
        return False, None
    layers = []
    while sorter.is_active():
        ready = sorted(sorter.get_ready())
        layers.append([int(i) for i in ready])
        sorter.done(*ready)
    return True, layers


def acyclic_equity_bound_check(network: FinancialNetwork) -> EquityBoundReport:
    """Compare the largest equity value against ``||p||`` on an acyclic network."""
    acyclic, _ = is_acyclic(network)
    if not acyclic:
        raise ValueError("network has an ownership cycle; the equity bound applies to acyclic networks only")
    V = equity_values(network)
    total = float(np.abs(network.prices).sum())
    top = float(V.max()) if V.size else 0.0
    return EquityBoundReport(max_equity=top, asset_total=total, slack=total - top)


def amplified_equity(reserve: float, epsilon: float, asset_value: float = 1.0) -> float:
    """Equity of the asset-holding bank in the lower-bound construction."""
    r, e = reserve, epsilon
    return asset_value / (r * (2 - r) + (1 - r) * e)


def lower_bound_gap(reserve: float, epsilon: float, asset_value: float = 1.0) -> float:
    """``eps v / (r + (1 - r) eps / 2)``, guaranteed by the lower-bound pair."""
    r, e = reserve, epsilon
    return e * asset_value / (r + (1 - r) * e / 2)


def gen_lower_bound_network(
    reserve: float, epsilon: float, asset_value: float = 1.0
) -> tuple[FinancialNetwork, FinancialNetwork]:
    """Four-bank pair whose market values differ by ``2 eps B`` in l1.

    Banks 0 and 1 hold ``1 - r - eps`` and ``1 - r`` of each other; bank 1
    owns the only asset (price ``asset_value``) and sells an ``eps`` stake to
    bank 2. In the perturbed network that stake belongs to bank 3 instead.
    ``B`` is bank 1's equity, :func:`amplified_equity`.
    """
    r, e = reserve, epsilon
    if not 0 < r < 1:
        raise ValueError(f"reserve must lie in (0, 1), got {r}")
    if not 0 < e <= 1 - r:
        raise ValueError(f"epsilon must lie in (0, 1 - reserve] = (0, {1 - r}], got {e}")
    if not asset_value > 0:
        raise ValueError(f"asset_value must be > 0, got {asset_value}")

    C = np.zeros((4, 4))
    C[0, 1] = 1 - r - e
    C[1, 0] = 1 - r
    C_moved = C.copy()
    C[2, 1] = e
    C_moved[3, 1] = e
    D = np.array([[0.0], [1.0], [0.0], [0.0]])
    p = [asset_value]
    return (
        FinancialNetwork.from_arrays(C, D, p),
        FinancialNetwork.from_arrays(C_moved, D, p),
    )
