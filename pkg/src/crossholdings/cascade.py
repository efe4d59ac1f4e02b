"""Failure cascades under discontinuous failure costs.

An institution fails when its market value is strictly below its threshold.
A failed institution loses ``failure_costs[i]`` from its own asset inflow,
so for a failure set ``F`` the market values are::

    v(F) = diag(s) (I - C)^-1 (D p - b(F)),   b(F)_i = beta_i if i in F else 0

and ``F`` is an equilibrium when ``F == {i : v(F)_i < thresholds_i}``.

Because ``diag(s)(I - C)^-1`` is entrywise nonnegative and costs are
nonnegative, the map ``F -> {i : v(F)_i < thresholds_i}`` is monotone.
Iterating it from the empty set reaches its least fixed point (the
best-case equilibrium); iterating the dual from the full set reaches the
greatest one (the worst case). Values are never clamped at zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InstanceTooLargeError
from .network import FinancialNetwork
from .valuation import SolverConfig, ValuationOperator

__all__ = [
    "CascadeEquilibrium",
    "TIE_TOL",
    "ENUMERATION_LIMIT",
    "failing",
    "check_equilibrium",
    "best_case_equilibrium",
    "worst_case_equilibrium",
    "enumerate_equilibria",
    "same_values",
]

#: Relative slack under which a value counts as tied with its threshold (solvent).
TIE_TOL = 1e-12
ENUMERATION_LIMIT = 24
_CHUNK = 1 << 14


@dataclass(frozen=True, eq=False)
class CascadeEquilibrium:
    failed: frozenset
    market: np.ndarray
    penalties: np.ndarray
    rule: str
    history: tuple = field(default=(), repr=False)

    @property
    def n_failed(self) -> int:
        return len(self.failed)

    @property
    def iterations(self) -> int:
        return len(self.history)


def failing(market, thresholds) -> np.ndarray:
    """Boolean mask of ``market < thresholds``; near-ties count as solvent."""
    thresholds = np.asarray(thresholds, dtype=float)
    finite = np.where(np.isfinite(thresholds), np.abs(thresholds), 0.0)
    return market < thresholds - TIE_TOL * np.maximum(1.0, finite)


def same_values(a, b, atol: float = 1e-9) -> bool:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a.shape == b.shape and bool(np.all(np.abs(a - b) <= atol))


def _operator(network, operator, config):
    if operator is not None:
        return operator
    return ValuationOperator(network, config)


def _penalties(network, mask):
    return np.where(mask, network.failure_costs, 0.0)


def _as_mask(n, failed):
    mask = np.zeros(n, dtype=bool)
    idx = list(failed)
    if idx:
        idx = np.asarray(idx, dtype=int)
        if idx.min() < 0 or idx.max() >= n:
            raise IndexError(f"failed set {sorted(failed)} out of range for n={n}")
        mask[idx] = True
    return mask


def _to_set(mask):
    return frozenset(int(i) for i in np.nonzero(mask)[0])


def check_equilibrium(
    network: FinancialNetwork,
    failed,
    operator: ValuationOperator | None = None,
    config: SolverConfig | None = None,
) -> CascadeEquilibrium | None:
    """Return the equilibrium with failure set ``failed``, or ``None`` if inconsistent."""
    op = _operator(network, operator, config)
    mask = _as_mask(network.n, failed)
    b = _penalties(network, mask)
    v = op.market(network.asset_values - b)
    if np.array_equal(failing(v, network.thresholds), mask):
        return CascadeEquilibrium(_to_set(mask), v, b, rule="check")
    return None


def _iterate(network, op, start, grow):
    mask = start.copy()
    history = []
    for _ in range(network.n + 1):
        history.append(_to_set(mask))
        b = _penalties(network, mask)
        v = op.market(network.asset_values - b)
        below = failing(v, network.thresholds)
        nxt = mask | below if grow else mask & below
        if np.array_equal(nxt, mask):
            return mask, v, b, tuple(history)
        mask = nxt
    raise AssertionError("monotone failure iteration did not settle in n + 1 rounds")


def best_case_equilibrium(
    network: FinancialNetwork,
    operator: ValuationOperator | None = None,
    config: SolverConfig | None = None,
) -> CascadeEquilibrium:
    """Equilibrium with the fewest failures.

    Start with no failures; at each round add every institution whose value
    is below its threshold, and stop when nothing is added.
    """
    op = _operator(network, operator, config)
    start = np.zeros(network.n, dtype=bool)
    mask, v, b, history = _iterate(network, op, start, grow=True)
    return CascadeEquilibrium(_to_set(mask), v, b, rule="best-case", history=history)


def worst_case_equilibrium(
    network: FinancialNetwork,
    operator: ValuationOperator | None = None,
    config: SolverConfig | None = None,
) -> CascadeEquilibrium:
    """Equilibrium with the most failures.

    Start with every institution failed; at each round revive every
    institution whose value is at or above its threshold.
    """
    op = _operator(network, operator, config)
    start = np.ones(network.n, dtype=bool)
    mask, v, b, history = _iterate(network, op, start, grow=False)
    return CascadeEquilibrium(_to_set(mask), v, b, rule="worst-case", history=history)


def enumerate_equilibria(
    network: FinancialNetwork,
    operator: ValuationOperator | None = None,
    config: SolverConfig | None = None,
    limit: int = ENUMERATION_LIMIT,
) -> list[CascadeEquilibrium]:
    """All consistent failure sets, by checking each of the ``2^n`` subsets.

    Sorted by number of failures, then lexicographically by member indices.
    """
    n = network.n
    if n > limit:
        raise InstanceTooLargeError(f"enumeration needs n <= {limit}, got n = {n}")
    op = _operator(network, operator, config)
    M = op.matrix()
    base = M @ network.asset_values
    costs = network.failure_costs
    bits = np.arange(n)
    found = []
    for lo in range(0, 1 << n, _CHUNK):
        codes = np.arange(lo, min(lo + _CHUNK, 1 << n))
        masks = ((codes[:, None] >> bits) & 1).astype(bool)
        values = base - (masks * costs) @ M.T
        consistent = np.all(failing(values, network.thresholds) == masks, axis=1)
        for row in np.nonzero(consistent)[0]:
            mask = masks[row]
            b = _penalties(network, mask)
            found.append(CascadeEquilibrium(_to_set(mask), values[row].copy(), b, rule="enumeration"))
    found.sort(key=lambda eq: (eq.n_failed, sorted(eq.failed)))
    return found
