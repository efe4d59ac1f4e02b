"""Core data types of the cross-holdings model and their invariants.

A network has ``n`` institutions and ``m`` primitive assets:

* ``cross_holdings[i, j]`` is the fraction of institution ``j`` owned by
  institution ``i`` (zero diagonal, every column sums to strictly less
  than one),
* ``asset_ownership[i, k]`` is the fraction of asset ``k`` owned by
  institution ``i``,
* ``prices[k]`` is the price of asset ``k``,
* ``thresholds[i]`` is the market value below which ``i`` fails, and
* ``failure_costs[i]`` is the value lost by ``i`` on failure.

Whatever part of an institution is not held by other institutions is held
by its outside shareholders; that share is the institution's self-holding.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import InvalidNetworkError

__all__ = [
    "FinancialNetwork",
    "Shock",
    "ValuationResult",
    "Violation",
    "validate",
    "require_valid",
    "self_holdings",
    "reserve",
    "is_column_stochastic",
    "validate_shock",
    "apply_shock",
]

#: Slack for identities that are exact in real arithmetic (column sums, budgets).
IDENTITY_TOL = 1e-12


def _frozen(values, ndim):
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != ndim:
        if arr.size == 0:
            arr = arr.reshape((0,) * ndim)
        elif ndim == 2 and arr.ndim == 1:
            arr = arr.reshape(1, -1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FinancialNetwork:
    """Immutable cross-holdings network.

    Arrays are copied and marked read-only on construction, so instances can
    be shared freely. Construction does not validate; call :func:`validate`
    or :func:`require_valid`.
    """

    cross_holdings: np.ndarray
    asset_ownership: np.ndarray
    prices: np.ndarray
    thresholds: np.ndarray
    failure_costs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "cross_holdings", _frozen(self.cross_holdings, 2))
        object.__setattr__(self, "asset_ownership", _frozen(self.asset_ownership, 2))
        object.__setattr__(self, "prices", _frozen(self.prices, 1))
        object.__setattr__(self, "thresholds", _frozen(self.thresholds, 1))
        object.__setattr__(self, "failure_costs", _frozen(self.failure_costs, 1))

    @classmethod
    def from_arrays(cls, cross_holdings, asset_ownership, prices, thresholds=None, failure_costs=None):
        """Build a network, defaulting to no failure thresholds and zero costs."""
        n = np.shape(cross_holdings)[0]
        if thresholds is None:
            thresholds = np.full(n, -np.inf)
        if failure_costs is None:
            failure_costs = np.zeros(n)
        return cls(cross_holdings, asset_ownership, prices, thresholds, failure_costs)

    @property
    def n(self) -> int:
        return self.cross_holdings.shape[0]

    @property
    def m(self) -> int:
        return self.asset_ownership.shape[1]

    @property
    def asset_values(self) -> np.ndarray:
        """Value of the primitive assets held directly by each institution (``D p``)."""
        return self.asset_ownership @ self.prices

    def replace(self, **changes) -> FinancialNetwork:
        return dataclasses.replace(self, **changes)

    def with_prices(self, prices) -> FinancialNetwork:
        return dataclasses.replace(self, prices=prices)


@dataclass(frozen=True, eq=False)
class Shock:
    """Per-asset price drops together with the total budget they must respect."""

    drops: np.ndarray
    budget: float

    def __post_init__(self):
        object.__setattr__(self, "drops", _frozen(self.drops, 1))
        object.__setattr__(self, "budget", float(self.budget))

    @property
    def total(self) -> float:
        return float(self.drops.sum())


@dataclass(frozen=True, eq=False)
class ValuationResult:
    """Equity values ``V`` and market values ``v`` of every institution."""

    equity: np.ndarray
    market: np.ndarray
    iterations: int | None = None
    method: str = "closed-form"


@dataclass(frozen=True)
class Violation:
    field: str
    index: tuple
    constraint: str

    def __str__(self):
        if not self.index:
            where = ""
        elif len(self.index) == 1 and isinstance(self.index[0], str):
            where = f"[{self.index[0]}]"
        else:
            where = "".join(f"[{i}]" for i in self.index)
        return f"{self.field}{where} {self.constraint}"


def _check_entries(field, arr, lo, hi, out):
    bad = ~np.isfinite(arr)
    for idx in zip(*np.nonzero(bad)):
        out.append(Violation(field, tuple(int(i) for i in idx), "is not finite"))
    for idx in zip(*np.nonzero(np.isfinite(arr) & (arr < lo))):
        out.append(Violation(field, tuple(int(i) for i in idx), f"< {lo:g}"))
    if hi is not None:
        for idx in zip(*np.nonzero(np.isfinite(arr) & (arr > hi))):
            out.append(Violation(field, tuple(int(i) for i in idx), f"> {hi:g}"))


def validate(network: FinancialNetwork) -> list[Violation]:
    """Return every broken invariant; an empty list means the network is valid."""
    out: list[Violation] = []
    C = network.cross_holdings
    D = network.asset_ownership
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        return [Violation("cross_holdings", (), f"must be square, got shape {C.shape}")]
    n = C.shape[0]
    if D.ndim != 2 or D.shape[0] != n:
        return [Violation("asset_ownership", (), f"must have {n} rows, got shape {D.shape}")]
    m = D.shape[1]
    for name, vec, size in (
        ("prices", network.prices, m),
        ("thresholds", network.thresholds, n),
        ("failure_costs", network.failure_costs, n),
    ):
        if vec.shape != (size,):
            out.append(Violation(name, (), f"must have length {size}, got {vec.shape[0]}"))
    if out:
        return out

    _check_entries("cross_holdings", C, 0.0, 1.0, out)
    _check_entries("asset_ownership", D, 0.0, 1.0, out)
    _check_entries("prices", network.prices, 0.0, None, out)
    _check_entries("failure_costs", network.failure_costs, 0.0, None, out)
    for i in np.nonzero(np.isnan(network.thresholds))[0]:
        out.append(Violation("thresholds", (int(i),), "is NaN"))

    for i in np.nonzero(np.diag(C) != 0)[0]:
        out.append(Violation("cross_holdings", (int(i), int(i)), "nonzero diagonal"))
    with np.errstate(invalid="ignore"):
        for j in np.nonzero(~(C.sum(axis=0) < 1.0))[0]:
            out.append(Violation("cross_holdings", (f":, {int(j)}",), "column sum not < 1"))
        for k in np.nonzero(~(D.sum(axis=0) <= 1.0 + IDENTITY_TOL))[0]:
            out.append(Violation("asset_ownership", (f":, {int(k)}",), "column sum > 1"))
    return out


def require_valid(network: FinancialNetwork) -> FinancialNetwork:
    violations = validate(network)
    if violations:
        raise InvalidNetworkError(violations)
    return network


def self_holdings(network: FinancialNetwork) -> np.ndarray:
    """Fraction of each institution held by its outside shareholders."""
    require_valid(network)
    return 1.0 - network.cross_holdings.sum(axis=0)


def reserve(network: FinancialNetwork) -> float:
    """Smallest self-holding in the network."""
    s = self_holdings(network)
    return float(s.min()) if s.size else 1.0


def is_column_stochastic(network: FinancialNetwork, tol: float = 1e-12) -> bool:
    """True when every asset is fully owned by institutions in the network."""
    return bool(np.all(np.abs(network.asset_ownership.sum(axis=0) - 1.0) <= tol))


def validate_shock(shock: Shock, network: FinancialNetwork | None = None) -> list[Violation]:
    out: list[Violation] = []
    drops = shock.drops
    _check_entries("drops", drops, 0.0, None, out)
    if not np.isfinite(shock.budget) or shock.budget < 0:
        out.append(Violation("budget", (), "must be finite and >= 0"))
    slack = IDENTITY_TOL * max(1.0, abs(shock.budget))
    if np.isfinite(shock.budget) and drops.sum() > shock.budget + slack:
        out.append(Violation("drops", (), f"sum {drops.sum():g} exceeds budget {shock.budget:g}"))
    if network is not None:
        if drops.shape != (network.m,):
            out.append(Violation("drops", (), f"must have length {network.m}, got {drops.shape[0]}"))
        else:
            for k in np.nonzero(drops > network.prices)[0]:
                out.append(Violation("drops", (int(k),), "> price"))
    return out


def apply_shock(network: FinancialNetwork, shock: Shock) -> FinancialNetwork:
    """Network with asset prices lowered by the shock."""
    violations = validate_shock(shock, network)
    if violations:
        raise InvalidNetworkError(violations)
    return network.with_prices(np.maximum(network.prices - shock.drops, 0.0))
