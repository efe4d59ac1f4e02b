"""Acceptance gate: one test per criterion, each with its tolerance and time limit.

Every test records a PASS/FAIL line that pytest prints in the terminal summary.
"""

import time

import numpy as np
import pytest

from conftest import cascade_instance, naive_bcbs, perturbed_pair, record
from crossholdings import (
    BipartiteGraph,
    FlowSystem,
    RandomNetworkSpec,
    ReductionParams,
    bank_run,
    bcbs_exact,
    best_case_equilibrium,
    enumerate_equilibria,
    equity_values,
    flow_values,
    gen_bcbs_reduction,
    gen_lower_bound_network,
    is_acyclic,
    market_values,
    max_failures_exact,
    neumann_values,
    perturbation_report,
    random_network,
    reserve,
    single_edge_pair,
    two_bank_cycle,
    validate,
    worst_case_equilibrium,
)
from crossholdings.shock_search import ReductionLayout, check_reduction_properties

pytestmark = pytest.mark.acceptance


class Gate:
    def __init__(self, name, limit):
        self.name, self.limit = name, limit
        self.failures = []

    def check(self, ok, message):
        if not ok:
            self.failures.append(message)

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.elapsed = time.perf_counter() - self.start
        if exc_type is not None:
            self.failures.append(f"{exc_type.__name__}: {exc}")
        if self.elapsed >= self.limit:
            self.failures.append(f"runtime {self.elapsed:.3f}s >= {self.limit}s")
        detail = f"{self.elapsed:.3f}s (limit {self.limit}s)"
        if self.failures:
            detail += f"; {len(self.failures)} problem(s), first: {self.failures[0]}"
        record(self.name, not self.failures, detail)
        return False

    def verdict(self):
        assert not self.failures, f"{len(self.failures)} problem(s): {self.failures[:5]}"


def test_criterion_1_single_edge_values():
    with Gate("1 single-edge market values", 0.1) as g:
        for eps in (0.01, 0.1, 0.5):
            a, b = single_edge_pair(eps)
            err_a = np.abs(market_values(a).market - [1.0, 0.0]).max()
            err_b = np.abs(market_values(b).market - [1 - eps, eps]).max()
            g.check(err_a <= 1e-12 and err_b <= 1e-12, f"eps={eps}: errors {err_a:.2e}, {err_b:.2e}")
    g.verdict()


def test_criterion_2_lower_bound_tightness():
    grid = (0.01, 0.05, 0.1, 0.25, 0.5)
    with Gate("2 lower-bound pair over 25-point grid", 1.0) as g:
        for r in grid:
            for eps in grid:
                net, moved = gen_lower_bound_network(r, eps, 1.0)
                rep = perturbation_report(net, moved)
                norm = np.abs(net.asset_values).sum()
                low = eps / (r + (1 - r) * eps / 2) - 1e-9
                high = min(2 * eps / r, 2) * norm + 1e-9
                g.check(low <= rep.measured <= high, f"r={r} eps={eps}: {low} <= {rep.measured} <= {high}")
                g.check(abs(rep.epsilon - 2 * eps) <= 1e-12, f"r={r} eps={eps}: epsilon {rep.epsilon}")
    g.verdict()


def test_criterion_3_upper_bound_property():
    with Gate("3 upper bound on 1000 random pairs", 30.0) as g:
        for seed in range(1000):
            net, moved = perturbed_pair(seed, n_max=20)
            rep = perturbation_report(net, moved)
            bound = min(rep.epsilon / rep.reserve, 2) * rep.asset_value_norm + 1e-9
            g.check(rep.measured <= bound, f"seed {seed}: {rep.measured} > {bound}")
    g.verdict()


def test_criterion_4_conservation():
    with Gate("4 conservation on 1000 networks", 10.0) as g:
        for seed in range(1000):
            rng = np.random.default_rng(seed)
            net = random_network(
                RandomNetworkSpec(int(rng.integers(1, 21)), int(rng.integers(1, 8)), density=rng.uniform(0, 1),
                                  reserve_floor=rng.uniform(0.01, 1), seed=seed)
            )
            total = np.abs(net.prices).sum()
            gap = abs(np.abs(market_values(net).market).sum() - total)
            g.check(gap <= 1e-9 * total, f"seed {seed}: gap {gap:.3e}")
    g.verdict()


def test_criterion_5_acyclic_bounds():
    with Gate("5 acyclic equity and single-edge bounds on 500 DAGs", 30.0) as g:
        for seed in range(500):
            net, moved = perturbed_pair(seed, n_max=20, dag=True)
            total = net.prices.sum()
            g.check(is_acyclic(net)[0] and is_acyclic(moved)[0], f"seed {seed}: cyclic")
            g.check(equity_values(net).max() <= total + 1e-9, f"seed {seed}: equity above total")
            eps = np.abs(net.cross_holdings - moved.cross_holdings).max()
            change = np.abs(market_values(net).market - market_values(moved).market).max()
            g.check(change <= eps * total + 1e-9, f"seed {seed}: change {change} > {eps * total}")
    g.verdict()


def test_criterion_6_solver_triangle():
    with Gate("6 closed/neumann/flow agreement on 1000 networks", 60.0) as g:
        for seed in range(1000):
            rng = np.random.default_rng(seed)
            net = random_network(
                RandomNetworkSpec(int(rng.integers(1, 21)), int(rng.integers(1, 8)), density=rng.uniform(0, 0.8),
                                  reserve_floor=rng.uniform(0.05, 1), seed=seed)
            )
            a = market_values(net).market
            b = neumann_values(net).market
            c = flow_values(net).market
            worst = max(np.abs(a - b).sum(), np.abs(a - c).sum(), np.abs(b - c).sum())
            g.check(worst <= 1e-8, f"seed {seed}: disagreement {worst:.3e}")
            r, total = reserve(net), net.prices.sum()
            for t, state in enumerate(FlowSystem.from_network(net).trajectory()):
                mass = state[: net.n].sum()
                if mass > (1 - r) ** t * total * (1 + 1e-12):
                    g.check(False, f"seed {seed}: step {t} mass {mass}")
                    break
                if mass <= 1e-12 * total:
                    break
    g.verdict()


def test_criterion_7_equilibrium_oracle():
    with Gate("7 best/worst case against enumeration", 60.0) as g:
        for seed in range(200):
            net = cascade_instance(seed, n_max=10)
            sizes = [e.n_failed for e in enumerate_equilibria(net)]
            best, worst = best_case_equilibrium(net), worst_case_equilibrium(net)
            g.check(best.n_failed == min(sizes), f"seed {seed}: best {best.n_failed} vs {min(sizes)}")
            g.check(worst.n_failed == max(sizes), f"seed {seed}: worst {worst.n_failed} vs {max(sizes)}")
        cycle = [e.n_failed for e in enumerate_equilibria(two_bank_cycle())]
        g.check(sorted(cycle) == [0, 2], f"two-bank cycle counts {cycle}")
        g.check(len(enumerate_equilibria(bank_run())) == 2, "bank run")
    g.verdict()


# Criterion 8: all parts share one pass over the graphs; the time limit covers the whole pass.

EPS = 0.05


def _random_graphs(count=50):
    graphs, seed = [], 0
    while len(graphs) < count:
        rng = np.random.default_rng(seed)
        graph = BipartiteGraph.random(int(rng.integers(2, 9)), float(rng.uniform(0.3, 0.9)), seed=seed)
        seed += 1
        if graph.edges and graph.min_degree >= bcbs_exact(graph).k:
            graphs.append((f"random seed {seed - 1}", graph, float(rng.uniform(0.2, 0.8))))
    return graphs


@pytest.fixture(scope="module")
def reduction_runs():
    fixtures = [
        ("K2,2", BipartiteGraph.complete(2), 0.5),
        ("K3,3", BipartiteGraph.complete(3), 0.5),
        ("matching", BipartiteGraph.matching(3), 0.5),
    ]
    start = time.perf_counter()
    runs = []
    for name, graph, r in fixtures + _random_graphs():
        star = bcbs_exact(graph)
        for ell in (0, 1, 2):
            params = ReductionParams(r, EPS, ell, star.k)
            net = gen_bcbs_reduction(graph, params)
            result = max_failures_exact(net, params.budget, EPS)
            left, right, _ = ReductionLayout(graph.n, ell).split(result.witness_equilibrium.failed)
            runs.append(
                dict(
                    name=f"{name} ell={ell}",
                    graph=graph,
                    params=params,
                    net=net,
                    k_star=star.k,
                    failures=result.max_failures,
                    left=left,
                    right=right,
                    properties=check_reduction_properties(graph, params, net),
                )
            )
    return runs, time.perf_counter() - start


def _criterion_8(part, check, reduction_runs):
    runs, setup = reduction_runs
    with Gate(f"8({part}) reduction", 300.0) as g:
        g.start -= setup
        for run in runs:
            check(g, run)
    g.verdict()


def test_criterion_8a_networks_well_formed(reduction_runs):
    def check(g, run):
        net = run["net"]
        g.check(validate(net) == [], f"{run['name']}: invalid")
        g.check(is_acyclic(net)[0], f"{run['name']}: cyclic")
        g.check(best_case_equilibrium(net).n_failed == 0, f"{run['name']}: initial failures")

    _criterion_8("a", check, reduction_runs)


def test_criterion_8b_right_bank_properties(reduction_runs):
    def check(g, run):
        rep = run["properties"]
        g.check(rep.property_one and rep.property_two, f"{run['name']}: {rep.counterexamples[:2]}")

    _criterion_8("b", check, reduction_runs)


def test_criterion_8c_failures_equal_target(reduction_runs):
    def check(g, run):
        target = (2 + run["params"].chain_length) * run["k_star"]
        g.check(run["failures"] == target, f"{run['name']}: {run['failures']} failures, target {target}")

    _criterion_8("c", check, reduction_runs)


def test_criterion_8d_right_failures_within_bcbs(reduction_runs):
    def check(g, run):
        g.check(len(run["right"]) <= run["k_star"], f"{run['name']}: {len(run['right'])} right > K* {run['k_star']}")

    _criterion_8("d", check, reduction_runs)


def test_criterion_8e_witness_is_biclique(reduction_runs):
    def check(g, run):
        g.check(run["graph"].is_complete_between(run["left"], run["right"]), f"{run['name']}: not complete")

    _criterion_8("e", check, reduction_runs)


def test_criterion_9_bcbs_oracle():
    with Gate("9 pruned BCBS against naive enumeration", 60.0) as g:
        for seed in range(100):
            rng = np.random.default_rng(seed)
            graph = BipartiteGraph.random(int(rng.integers(1, 9)), float(rng.uniform(0.1, 0.9)), seed=seed)
            found, naive = bcbs_exact(graph).k, naive_bcbs(graph)
            g.check(found == naive, f"seed {seed}: {found} vs {naive}")
    g.verdict()
