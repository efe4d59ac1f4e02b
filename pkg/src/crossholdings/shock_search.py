"""Adversarial price shocks and the balanced-biclique construction.

The question answered here: given a total price-drop budget, what is the
largest number of failures (counted in the best-case equilibrium) that some
shock within the budget can cause? :func:`max_failures_exact` answers it
exactly over a discretized family of shocks, :func:`max_failures_greedy`
gives a cheap lower bound.

:func:`gen_bcbs_reduction` turns a bipartite graph into a network in which
that question is as hard as finding the largest balanced complete bipartite
subgraph (BCBS), which :func:`bcbs_exact` solves by branch and bound.

Layout of a reduction network built from a graph with ``n`` nodes per side
and chains of length ``ell``:

* institutions ``0..n-1`` are the left nodes, each fully owning asset ``i``;
* institutions ``n..2n-1`` are the right nodes; right node ``j`` holds a
  ``1/N`` stake in each left neighbour, ``N = max_degree / (1 - r)``;
* institution ``2n + j*ell + (k-1)`` is the ``k``-th link of the chain
  hanging off right node ``j``; each link owns ``1 - r`` of its predecessor.

A left bank fails when its asset drops by ``eps`` and then loses all of its
value. A right bank fails once ``d`` of its neighbours fail, and cannot fail
while its neighbours have lost less than ``d/N`` between them. A chain link
fails exactly when its predecessor does.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .cascade import CascadeEquilibrium, best_case_equilibrium
from .errors import InstanceTooLargeError
from .network import FinancialNetwork, Shock, require_valid
from .valuation import ValuationOperator

__all__ = [
    "BipartiteGraph",
    "Biclique",
    "ReductionParams",
    "ReductionLayout",
    "ShockSearchResult",
    "ReductionPropertyReport",
    "GapReport",
    "bcbs_exact",
    "gen_bcbs_reduction",
    "check_reduction_properties",
    "max_failures_exact",
    "max_failures_greedy",
    "verify_reduction_gap",
    "BCBS_LIMIT",
    "SHOCK_ASSET_LIMIT",
]

BCBS_LIMIT = 16
SHOCK_ASSET_LIMIT = 24
#: Left banks fail once their asset has dropped by more than ``(1 - LEFT_MARGIN) * eps``.
LEFT_MARGIN = 1e-6


@dataclass(frozen=True, eq=False)
class BipartiteGraph:
    """Bipartite graph with ``n`` nodes on each side; edges are ``(left, right)``."""

    n: int
    edges: frozenset
    left_neighbors: tuple = field(init=False, repr=False)
    right_neighbors: tuple = field(init=False, repr=False)

    def __post_init__(self):
        edges = frozenset((int(a), int(b)) for a, b in self.edges)
        for a, b in edges:
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ValueError(f"edge ({a}, {b}) out of range for n = {self.n}")
        left = [set() for _ in range(self.n)]
        right = [set() for _ in range(self.n)]
        for a, b in edges:
            left[a].add(b)
            right[b].add(a)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "left_neighbors", tuple(frozenset(s) for s in left))
        object.__setattr__(self, "right_neighbors", tuple(frozenset(s) for s in right))

    @classmethod
    def complete(cls, n: int) -> BipartiteGraph:
        return cls(n, frozenset(itertools.product(range(n), range(n))))

    @classmethod
    def matching(cls, n: int) -> BipartiteGraph:
        return cls(n, frozenset((i, i) for i in range(n)))

    @classmethod
    def random(cls, n: int, density: float, seed=None) -> BipartiteGraph:
        rng = np.random.default_rng(seed)
        hits = rng.random((n, n)) < density
        return cls(n, frozenset((int(a), int(b)) for a, b in zip(*np.nonzero(hits))))

    @property
    def degrees(self) -> list[int]:
        """Degrees of the left nodes followed by the right nodes."""
        return [len(s) for s in self.left_neighbors] + [len(s) for s in self.right_neighbors]

    @property
    def max_degree(self) -> int:
        return max(self.degrees, default=0)

    @property
    def min_degree(self) -> int:
        return min(self.degrees, default=0)

    def is_complete_between(self, left, right) -> bool:
        return all((a, b) in self.edges for a in left for b in right)


@dataclass(frozen=True)
class Biclique:
    k: int
    left: tuple
    right: tuple


def _popcount(x: int) -> int:
    return bin(x).count("1")


def _low_bits(mask: int, k: int) -> tuple:
    out = []
    i = 0
    while len(out) < k:
        if mask >> i & 1:
            out.append(i)
        i += 1
    return tuple(out)


def bcbs_exact(graph: BipartiteGraph, limit: int = BCBS_LIMIT) -> Biclique:
    """Largest ``K`` with a complete ``K x K`` subgraph, plus one witness.

    Depth-first over left subsets in index order while tracking the common
    right neighbourhood as a bitmask. A branch is cut once neither the
    remaining left nodes nor the shrinking neighbourhood can beat the best
    size found so far.
    """
    n = graph.n
    if n > limit:
        raise InstanceTooLargeError(f"bcbs_exact needs n <= {limit}, got n = {n}")
    adj = [sum(1 << b for b in graph.left_neighbors[a]) for a in range(n)]
    best = [0, (), ()]

    def extend(chosen, common, start):
        size = min(len(chosen), _popcount(common))
        if size > best[0]:
            best[:] = [size, tuple(chosen[:size]), _low_bits(common, size)]
        for a in range(start, n):
            if min(len(chosen) + n - a, _popcount(common)) <= best[0]:
                return
            nxt = common & adj[a]
            if _popcount(nxt) > best[0]:
                chosen.append(a)
                extend(chosen, nxt, a + 1)
                chosen.pop()

    extend([], (1 << n) - 1, 0)
    k, left, right = best
    assert graph.is_complete_between(left, right)
    return Biclique(k, left, right)


@dataclass(frozen=True)
class ReductionParams:
    reserve: float
    epsilon: float
    chain_length: int = 0
    budget_count: int = 1

    def __post_init__(self):
        if not 0 < self.reserve < 1:
            raise ValueError(f"reserve must lie in (0, 1), got {self.reserve}")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.chain_length < 0:
            raise ValueError(f"chain_length must be >= 0, got {self.chain_length}")
        if self.budget_count < 1:
            raise ValueError(f"budget_count must be >= 1, got {self.budget_count}")

    def scale(self, graph: BipartiteGraph) -> float:
        """``N = max_degree / (1 - reserve)``: the inverse of each stake."""
        return graph.max_degree / (1 - self.reserve)

    @property
    def budget(self) -> float:
        return self.budget_count * self.epsilon


@dataclass(frozen=True)
class ReductionLayout:
    n: int
    chain_length: int

    @property
    def size(self) -> int:
        return (2 + self.chain_length) * self.n

    def left(self, i: int) -> int:
        return i

    def right(self, j: int) -> int:
        return self.n + j

    def chain(self, j: int, k: int) -> int:
        """Index of link ``k`` (1-based) of the chain below right node ``j``."""
        return 2 * self.n + j * self.chain_length + (k - 1)

    def split(self, failed) -> tuple[list[int], list[int], list[tuple[int, int]]]:
        """Failed institutions as (left nodes, right nodes, (right node, link)) lists."""
        left, right, chain = [], [], []
        for i in sorted(failed):
            if i < self.n:
                left.append(i)
            elif i < 2 * self.n:
                right.append(i - self.n)
            else:
                j, k = divmod(i - 2 * self.n, self.chain_length)
                chain.append((j, k + 1))
        return left, right, chain


def gen_bcbs_reduction(
    graph: BipartiteGraph, params: ReductionParams, check_degree: bool = True
) -> FinancialNetwork:
    """Financial network whose worst ``d * eps`` shock mirrors a ``d x d`` biclique.

    Thresholds are set on market values (self-holding times the equity
    level below which a bank must fail):

    * left bank ``i``: equity level ``1 - (1 - LEFT_MARGIN) eps``, cost ``1 - eps``;
    * right bank ``j``: level ``(deg j - d)/N + (1 - eps)/(2N)``, cost equal
      to its initial equity;
    * chain link: ``(1 - r)`` times its predecessor's level times
      ``1 - 1/(2N)``, cost equal to its initial equity.

    ``check_degree`` enforces ``degree >= d`` on every node.
    """
    n = graph.n
    top = graph.max_degree
    if top == 0:
        raise ValueError("graph has no edges")
    r, eps, ell, d = params.reserve, params.epsilon, params.chain_length, params.budget_count
    if check_degree and graph.min_degree < d:
        raise ValueError(f"every node needs degree >= d = {d}; minimum degree is {graph.min_degree}")
    N = params.scale(graph)
    layout = ReductionLayout(n, ell)
    size = layout.size

    C = np.zeros((size, size))
    for a, b in graph.edges:
        C[layout.right(b), layout.left(a)] = 1.0 / N
    for j in range(n):
        prev = layout.right(j)
        for k in range(1, ell + 1):
            C[layout.chain(j, k), prev] = 1 - r
            prev = layout.chain(j, k)
    D = np.zeros((size, n))
    D[np.arange(n), np.arange(n)] = 1.0
    s = 1.0 - C.sum(axis=0)

    level = np.empty(size)
    cost = np.empty(size)
    level[:n] = 1 - (1 - LEFT_MARGIN) * eps
    cost[:n] = 1 - eps
    for j in range(n):
        deg = len(graph.right_neighbors[j])
        rj = layout.right(j)
        equity = deg / N
        level[rj] = (deg - d) / N + (1 - eps) / (2 * N)
        cost[rj] = equity
        prev = rj
        for k in range(1, ell + 1):
            c = layout.chain(j, k)
            equity *= 1 - r
            level[c] = (1 - r) * level[prev] * (1 - 1 / (2 * N))
            cost[c] = equity
            prev = c
    return FinancialNetwork(C, D, np.ones(n), s * level, cost)


@dataclass(frozen=True)
class ReductionPropertyReport:
    property_one: bool
    property_two: bool
    cases: int
    counterexamples: tuple = ()


def _failed_after(network, op, drops):
    shocked = network.with_prices(network.prices - drops)
    return best_case_equilibrium(shocked, operator=op).failed


def check_reduction_properties(
    graph: BipartiteGraph, params: ReductionParams, network: FinancialNetwork | None = None, max_cases: int = 32
) -> ReductionPropertyReport:
    """Check the two right-bank properties on a generated network by direct simulation.

    1. Dropping ``d`` neighbouring assets of right bank ``j`` by ``eps`` makes ``j`` fail.
    2. ``t < d`` failed neighbours plus up to ``(d - t) eps`` spread over
       the other neighbours (none of which fails) leaves ``j`` solvent.

    At most ``max_cases`` neighbour subsets are tried per bank and per ``t``.
    """
    if network is None:
        network = gen_bcbs_reduction(graph, params)
    op = ValuationOperator(network)
    layout = ReductionLayout(graph.n, params.chain_length)
    eps, d = params.epsilon, params.budget_count
    one = two = True
    cases = 0
    bad = []
    for j in range(graph.n):
        nbrs = sorted(graph.right_neighbors[j])
        rj = layout.right(j)
        for S in itertools.islice(itertools.combinations(nbrs, d), max_cases):
            drops = np.zeros(graph.n)
            drops[list(S)] = eps
            cases += 1
            if rj not in _failed_after(network, op, drops):
                one = False
                bad.append(("property 1", j, S))
        for t in range(min(d, len(nbrs) + 1)):
            for S in itertools.islice(itertools.combinations(nbrs, t), max_cases):
                others = [a for a in nbrs if a not in S]
                drops = np.zeros(graph.n)
                drops[list(S)] = eps
                if others:
                    drops[others] = min((d - t) * eps / len(others), 0.5 * eps)
                cases += 1
                if rj in _failed_after(network, op, drops):
                    two = False
                    bad.append(("property 2", j, S))
    return ReductionPropertyReport(one, two, cases, tuple(bad))


@dataclass(frozen=True, eq=False)
class ShockSearchResult:
    max_failures: int
    witness_shock: Shock
    witness_equilibrium: CascadeEquilibrium
    method: str
    evaluations: int = 0


def _search_setup(network, budget, granularity):
    require_valid(network)
    if not budget >= 0:
        raise ValueError(f"budget must be >= 0, got {budget}")
    if not granularity > 0:
        raise ValueError(f"granularity must be > 0, got {granularity}")
    total = float(network.prices.sum())
    if budget > total:
        warnings.warn(f"budget {budget:g} exceeds total asset value {total:g}; clamped", stacklevel=3)
        budget = total
    levels = []
    for p in network.prices:
        lv = sorted({0.0, min(granularity, float(p)), float(p)})
        levels.append(lv)
    slack = 1e-12 * max(1.0, budget)
    return budget, levels, slack, ValuationOperator(network)


class _Evaluator:
    def __init__(self, network, op):
        self.network = network
        self.op = op
        self.calls = 0

    def __call__(self, drops):
        self.calls += 1
        shocked = self.network.with_prices(self.network.prices - drops)
        return best_case_equilibrium(shocked, operator=self.op)


def max_failures_exact(
    network: FinancialNetwork, budget: float, granularity: float, limit: int = SHOCK_ASSET_LIMIT
) -> ShockSearchResult:
    """Exact maximum of best-case failures over the discretized shock family.

    Each asset drops by ``0``, ``granularity`` or its whole price, and the
    drops add up to at most ``budget``. Lower prices never reduce the
    best-case failure set, so only shocks that cannot be raised any further
    within the budget are evaluated. Ties keep the first witness in
    enumeration order.
    """
    if network.m > limit:
        raise InstanceTooLargeError(f"max_failures_exact needs m <= {limit}, got m = {network.m}")
    budget, levels, slack, op = _search_setup(network, budget, granularity)
    evaluate = _Evaluator(network, op)
    m = network.m
    choice = [0] * m
    best = [None]

    def maximal(remaining):
        for k in range(m):
            lv = levels[k]
            i = choice[k]
            if i + 1 < len(lv) and lv[i + 1] - lv[i] <= remaining + slack:
                return False
        return True

    def visit(k, remaining):
        if k == m:
            if not maximal(remaining):
                return
            drops = np.array([levels[a][choice[a]] for a in range(m)])
            eq = evaluate(drops)
            if best[0] is None or eq.n_failed > best[0][1].n_failed:
                best[0] = (drops, eq)
            return
        for i, lv in enumerate(levels[k]):
            if lv > remaining + slack:
                break
            choice[k] = i
            visit(k + 1, remaining - lv)
        choice[k] = 0

    visit(0, budget)
    drops, eq = best[0]
    return ShockSearchResult(eq.n_failed, Shock(drops, budget), eq, "exact", evaluate.calls)


def max_failures_greedy(
    network: FinancialNetwork, budget: float, granularity: float, seed=None, restarts: int = 0
) -> ShockSearchResult:
    """Greedy lower bound on :func:`max_failures_exact`.

    Repeatedly raises one asset to its next drop level, picking the step
    with the most new failures per unit of budget; ties go to the lowest
    asset index. With ``restarts > 0`` the search is rerun with seeded random
    tie-break orders and the best run is kept.
    """
    budget, levels, slack, op = _search_setup(network, budget, granularity)
    evaluate = _Evaluator(network, op)
    m = network.m
    rng = np.random.default_rng(seed)
    orders = [list(range(m))] + [list(rng.permutation(m)) for _ in range(restarts)]
    best = None
    for order in orders:
        choice = [0] * m
        remaining = budget
        drops = np.zeros(m)
        eq = evaluate(drops)
        while True:
            pick = None
            for k in order:
                i = choice[k]
                if i + 1 >= len(levels[k]):
                    continue
                step = levels[k][i + 1] - levels[k][i]
                if step > remaining + slack:
                    continue
                trial = drops.copy()
                trial[k] = levels[k][i + 1]
                cand = evaluate(trial)
                score = (cand.n_failed - eq.n_failed) / step
                if pick is None or score > pick[0]:
                    pick = (score, k, step, trial, cand)
            if pick is None:
                break
            _, k, step, drops, eq = pick
            choice[k] += 1
            remaining -= step
        if best is None or eq.n_failed > best[1].n_failed:
            best = (drops, eq)
    drops, eq = best
    return ShockSearchResult(eq.n_failed, Shock(drops, budget), eq, "greedy", evaluate.calls)


@dataclass(frozen=True)
class GapReport:
    k_star: int
    chain_length: int
    failures: int
    left_failed: tuple
    right_failed: tuple
    chain_failed: tuple
    biclique_complete: bool
    chains_follow_right: bool

    @property
    def target(self) -> int:
        """``(2 + ell) K*``, reached by shocking one side of a maximum biclique."""
        return (2 + self.chain_length) * self.k_star

    @property
    def reaches_target(self) -> bool:
        return self.failures >= self.target

    @property
    def right_within_bcbs(self) -> bool:
        return len(self.right_failed) <= self.k_star

    @property
    def balanced_within_bcbs(self) -> bool:
        return min(len(self.left_failed), len(self.right_failed)) <= self.k_star


def verify_reduction_gap(graph: BipartiteGraph, params: ReductionParams) -> GapReport:
    """Run the exact shock search on the reduction with ``d = K*`` and budget ``K* eps``."""
    if graph.n > BCBS_LIMIT or graph.n > SHOCK_ASSET_LIMIT:
        raise InstanceTooLargeError(f"graph with n = {graph.n} is too large to verify exhaustively")
    star = bcbs_exact(graph)
    if star.k == 0:
        raise ValueError("graph has no edges")
    params = ReductionParams(params.reserve, params.epsilon, params.chain_length, star.k)
    network = gen_bcbs_reduction(graph, params)
    result = max_failures_exact(network, params.budget, params.epsilon)
    layout = ReductionLayout(graph.n, params.chain_length)
    left, right, chain = layout.split(result.witness_equilibrium.failed)
    failed_chain = set(chain)
    follows = all(
        ((j, k) in failed_chain) == (j in right)
        for j in range(graph.n)
        for k in range(1, params.chain_length + 1)
    )
    return GapReport(
        k_star=star.k,
        chain_length=params.chain_length,
        failures=result.max_failures,
        left_failed=tuple(left),
        right_failed=tuple(right),
        chain_failed=tuple(chain),
        biclique_complete=graph.is_complete_between(left, right),
        chains_follow_right=follows,
    )

