import numpy as np
import pytest

from conftest import perturbed_pair
from crossholdings import (
    FinancialNetwork,
    RandomNetworkSpec,
    acyclic_equity_bound_check,
    gen_lower_bound_network,
    is_acyclic,
    market_values,
    perturbation_report,
    random_network,
    self_holdings,
    sensitivity_upper_bound,
    single_edge_pair,
)
from crossholdings.sensitivity import amplified_equity, lower_bound_gap, perturbation_size


@pytest.mark.parametrize(
    "eps, r, norm, expected",
    [(0.05, 0.05, 1.0, 1.0), (1.0, 0.1, 1.0, 2.0), (0.0, 0.3, 5.0, 0.0), (0.1, 0.5, 3.0, 0.6)],
)
def test_upper_bound_values(eps, r, norm, expected):
    assert sensitivity_upper_bound(eps, r, norm) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("eps, r", [(-0.1, 0.5), (0.1, 0.0), (0.1, 1.5)])
def test_upper_bound_domain(eps, r):
    with pytest.raises(ValueError):
        sensitivity_upper_bound(eps, r)


@pytest.mark.parametrize("eps", [0.01, 0.1, 0.5])
def test_single_edge_report(eps):
    report = perturbation_report(*single_edge_pair(eps))
    assert report.measured == pytest.approx(2 * eps, abs=1e-12)
    assert report.ratio == pytest.approx(2 * eps, abs=1e-12)
    assert report.epsilon == pytest.approx(2 * eps, abs=1e-15)
    assert report.within_bound


def test_identical_networks():
    net = random_network(RandomNetworkSpec(6, 2, density=0.5, seed=8))
    report = perturbation_report(net, net)
    assert report.measured == 0.0 and report.epsilon == 0.0


def test_report_rejects_mismatched_networks():
    a = random_network(RandomNetworkSpec(4, 2, seed=1))
    with pytest.raises(ValueError, match="institution counts"):
        perturbation_report(a, random_network(RandomNetworkSpec(5, 2, seed=1)))
    with pytest.raises(ValueError, match="prices"):
        perturbation_report(a, a.with_prices(a.prices * 2))


def test_perturbation_size_counts_self_holdings():
    C = np.zeros((3, 3))
    C2 = C.copy()
    C2[1, 0] = 0.2
    a = FinancialNetwork.from_arrays(C, np.eye(3), [1, 1, 1])
    assert perturbation_size(a, a.replace(cross_holdings=C2)) == pytest.approx(0.4)
    C3 = C.copy()
    C3[1, 0], C3[2, 0] = 0.2, 0.0
    C4 = C.copy()
    C4[2, 0] = 0.2
    assert perturbation_size(a.replace(cross_holdings=C3), a.replace(cross_holdings=C4)) == pytest.approx(0.4)


def test_lower_bound_matrices():
    r, e = 0.1, 0.1
    net, moved = gen_lower_bound_network(r, e, 1.0)
    C = np.array([[0, 1 - r - e, 0, 0], [1 - r, 0, 0, 0], [0, e, 0, 0], [0, 0, 0, 0]])
    C_moved = np.array([[0, 1 - r - e, 0, 0], [1 - r, 0, 0, 0], [0, 0, 0, 0], [0, e, 0, 0]])
    assert np.array_equal(net.cross_holdings, C)
    assert np.array_equal(moved.cross_holdings, C_moved)
    for x in (net, moved):
        assert np.allclose(self_holdings(x), [r, r, 1, 1], atol=1e-15)
        assert np.array_equal(x.asset_ownership, [[0], [1], [0], [0]])


def test_lower_bound_gap_example():
    net, moved = gen_lower_bound_network(0.1, 0.1, 1.0)
    report = perturbation_report(net, moved)
    assert report.measured == pytest.approx(2 * 0.1 / 0.28, abs=1e-12)
    assert report.measured >= 0.1 / 0.145 - 1e-9
    assert report.epsilon == pytest.approx(0.2, abs=1e-15)
    assert amplified_equity(0.1, 0.1) == pytest.approx(1 / 0.28)
    assert lower_bound_gap(0.1, 0.1) == pytest.approx(0.1 / 0.145)


def test_lower_bound_vanishes_with_full_reserve():
    eps = 0.005
    report = perturbation_report(*gen_lower_bound_network(0.99, eps, 1.0))
    assert report.measured / (2 * eps) == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("r, eps, v", [(0.0, 0.1, 1), (0.5, 0.6, 1), (0.5, 0.0, 1), (0.5, 0.1, 0)])
def test_lower_bound_domain(r, eps, v):
    with pytest.raises(ValueError):
        gen_lower_bound_network(r, eps, v)


def test_acyclicity():
    ok, layers = is_acyclic(single_edge_pair(0.1)[1])
    assert ok and layers == [[0], [1]]
    assert is_acyclic(gen_lower_bound_network(0.1, 0.1)[0]) == (False, None)


def test_pass_through_chain_equity():
    n = 6
    C = np.zeros((n, n))
    for i in range(1, n):
        C[i, i - 1] = 0.9
    net = FinancialNetwork.from_arrays(C, np.eye(n)[:, :1], [3.0])
    report = acyclic_equity_bound_check(net)
    assert report.holds
    assert report.max_equity == pytest.approx(3.0)


def test_equity_check_rejects_cycles():
    with pytest.raises(ValueError, match="cycle"):
        acyclic_equity_bound_check(gen_lower_bound_network(0.2, 0.1)[0])


@pytest.mark.parametrize("seed", range(100))
def test_upper_bound_on_random_pairs(seed):
    report = perturbation_report(*perturbed_pair(seed))
    assert report.measured <= report.upper_bound + 1e-9


@pytest.mark.parametrize("seed", range(100))
def test_single_edge_change_on_dags(seed):
    net, moved = perturbed_pair(seed, dag=True)
    assert is_acyclic(moved)[0]
    assert acyclic_equity_bound_check(net).holds
    delta = np.abs(net.cross_holdings - moved.cross_holdings).max()
    change = np.abs(market_values(net).market - market_values(moved).market).max()
    assert change <= delta * net.prices.sum() + 1e-9
