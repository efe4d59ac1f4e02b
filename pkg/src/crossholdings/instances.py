"""Small reference networks and seeded random networks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import FinancialNetwork, validate
from .sensitivity import is_acyclic

__all__ = [
    "single_edge_pair",
    "two_bank_cycle",
    "bank_run",
    "RandomNetworkSpec",
    "random_network",
]


def single_edge_pair(epsilon: float) -> tuple[FinancialNetwork, FinancialNetwork]:
    """Bank 0 owns the only asset (price 1); bank 1 owns nothing.

    In the perturbed network bank 1 buys an ``epsilon`` stake in bank 0, so
    market values move from ``[1, 0]`` to ``[1 - epsilon, epsilon]``.
    """
    D = np.array([[1.0], [0.0]])
    C = np.zeros((2, 2))
    C_tilde = C.copy()
    C_tilde[1, 0] = epsilon
    return FinancialNetwork.from_arrays(C, D, [1.0]), FinancialNetwork.from_arrays(C_tilde, D, [1.0])


def two_bank_cycle(threshold: float = 1.0, failure_cost: float = 1.0) -> FinancialNetwork:
    """Two banks owning half of each other, each with one unit asset.

    With the defaults there are exactly two equilibria: no failures with
    market values ``[1, 1]``, and both failed with ``[0, 0]``.
    """
    C = np.array([[0.0, 0.5], [0.5, 0.0]])
    return FinancialNetwork.from_arrays(C, np.eye(2), [1.0, 1.0], [threshold] * 2, [failure_cost] * 2)


def bank_run(price: float = 1.0, threshold: float = 0.8, failure_cost: float = 0.5) -> FinancialNetwork:
    """One bank holding one asset; two equilibria whenever ``p > threshold > p - cost``."""
    return FinancialNetwork.from_arrays(np.zeros((1, 1)), [[1.0]], [price], [threshold], [failure_cost])


@dataclass(frozen=True)
class RandomNetworkSpec:
    n: int
    m: int
    density: float = 0.3
    reserve_floor: float = 0.1
    dag: bool = False
    seed: int = 0
    column_stochastic: bool = True

    def __post_init__(self):
        if self.n < 0 or self.m < 0:
            raise ValueError("n and m must be non-negative")
        if not 0 <= self.density <= 1:
            raise ValueError(f"density must lie in [0, 1], got {self.density}")
        if not 0 < self.reserve_floor <= 1:
            raise ValueError(f"reserve_floor must lie in (0, 1], got {self.reserve_floor}")


def _draw(spec: RandomNetworkSpec, rng) -> FinancialNetwork:
    n, m = spec.n, spec.m
    allowed = ~np.eye(n, dtype=bool)
    if spec.dag:
        rank = rng.permutation(n)
        # i may hold j only when j sits strictly lower in the random order
        allowed &= rank[:, None] > rank[None, :]
    links = allowed & (rng.random((n, n)) < spec.density)
    C = np.where(links, rng.random((n, n)), 0.0)
    col = C.sum(axis=0)
    sold = rng.uniform(0.0, 1.0 - spec.reserve_floor, size=n)
    with np.errstate(invalid="ignore", divide="ignore"):
        C = np.where(col > 0, C * (sold / col), 0.0)

    D = np.zeros((n, m))
    if n:
        for k in range(m):
            owners = rng.choice(n, size=min(n, int(rng.integers(1, 4))), replace=False)
            share = rng.dirichlet(np.ones(len(owners)))
            if not spec.column_stochastic:
                share *= rng.uniform(0.5, 1.0)
            D[owners, k] = share
    p = rng.uniform(0.5, 2.0, size=m)
    return FinancialNetwork.from_arrays(C, D, p)


def random_network(spec: RandomNetworkSpec, max_attempts: int = 100) -> FinancialNetwork:
    """Seeded random network; draws are repeated until one validates.

    Each column of cross-holdings sells a uniform share in
    ``[0, 1 - reserve_floor)`` of the institution, split over the random
    links. Each asset has one to three owners.
    """
    rng = np.random.default_rng(spec.seed)
    for _ in range(max_attempts):
        net = _draw(spec, rng)
        if validate(net):
            continue
        if spec.column_stochastic and spec.n and np.abs(net.asset_ownership.sum(axis=0) - 1).max(initial=0) > 1e-12:
            continue
        if spec.dag and not is_acyclic(net)[0]:
            continue
        return net
    raise ValueError(f"could not draw a valid network for {spec} in {max_attempts} attempts")
