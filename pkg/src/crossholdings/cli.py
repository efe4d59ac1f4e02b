"""Command-line front end.

Every subcommand calls one library function and writes its result as JSON
on stdout; a one-line human summary goes to stderr. Exit codes: 0 success,
2 validation failure, 3 instance too large, 1 anything else.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import io
from .cascade import best_case_equilibrium, enumerate_equilibria, worst_case_equilibrium
from .errors import ConvergenceError, FormatError, InstanceTooLargeError, InvalidNetworkError
from .instances import RandomNetworkSpec, random_network
from .network import FinancialNetwork, Shock, apply_shock, validate
from .sensitivity import (
    acyclic_equity_bound_check,
    gen_lower_bound_network,
    perturbation_report,
    sensitivity_upper_bound,
)
from .shock_search import (
    BipartiteGraph,
    ReductionParams,
    bcbs_exact,
    gen_bcbs_reduction,
    max_failures_exact,
    max_failures_greedy,
)
from .valuation import SolverConfig, flow_values, market_values, neumann_values

EXIT_OK, EXIT_ERROR, EXIT_INVALID, EXIT_TOO_LARGE = 0, 1, 2, 3


class _Fail(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _load(path, kind):
    value = io.load(path)
    if not isinstance(value, kind):
        raise FormatError(f"{path}: expected a {kind.__name__} file, got {type(value).__name__}")
    return value


def _emit(value, out):
    out.write(io.dumps(value))


def _config(args):
    return SolverConfig(tolerance=args.tol, max_iterations=args.max_iter)


def cmd_validate(args, out, err):
    try:
        value = io.load(args.net)
    except InvalidNetworkError as exc:
        violations = [str(v) for v in exc.violations]
    else:
        violations = [str(v) for v in validate(value)] if isinstance(value, FinancialNetwork) else []
    out.write(json.dumps({"valid": not violations, "violations": violations}, separators=(",", ":")) + "\n")
    err.write("valid\n" if not violations else f"{len(violations)} violation(s)\n")
    return EXIT_OK if not violations else EXIT_INVALID


def cmd_value(args, out, err):
    net = _load(args.net, FinancialNetwork)
    solver = {"closed": market_values, "neumann": neumann_values, "flow": flow_values}[args.solver]
    result = solver(net, _config(args))
    _emit(result, out)
    err.write(f"total market value {result.market.sum():.12g} ({result.method})\n")
    return EXIT_OK


def _shocked(args):
    net = _load(args.net, FinancialNetwork)
    if args.shock:
        net = apply_shock(net, _load(args.shock, Shock))
    return net


def cmd_cascade(args, out, err):
    net = _shocked(args)
    solve = best_case_equilibrium if args.rule == "best" else worst_case_equilibrium
    eq = solve(net, config=_config(args))
    _emit(eq, out)
    err.write(f"{eq.rule}: {eq.n_failed} failure(s) after {eq.iterations} round(s)\n")
    return EXIT_OK


def cmd_enumerate(args, out, err):
    net = _shocked(args)
    eqs = enumerate_equilibria(net, config=_config(args))
    _emit(eqs, out)
    err.write(f"{len(eqs)} equilibrium(s); failure counts {[e.n_failed for e in eqs]}\n")
    return EXIT_OK


def cmd_perturb(args, out, err):
    a = _load(args.net, FinancialNetwork)
    b = _load(args.net2, FinancialNetwork)
    report = perturbation_report(a, b)
    _emit(report, out)
    if args.csv:
        va, vb = market_values(a).market, market_values(b).market
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["institution", "market", "market_perturbed", "change"])
            for i, (x, y) in enumerate(zip(va, vb)):
                w.writerow([i, io.format_decimal(x), io.format_decimal(y), io.format_decimal(y - x)])
    err.write(
        f"measured {report.measured:.6g} <= bound {report.upper_bound:.6g} (eps {report.epsilon:.6g}, r {report.reserve:.6g})\n"
    )
    return EXIT_OK


def cmd_bound(args, out, err):
    if args.net:
        report = acyclic_equity_bound_check(_load(args.net, FinancialNetwork))
        _emit(report, out)
        err.write(f"max equity {report.max_equity:.6g} vs asset total {report.asset_total:.6g}\n")
        return EXIT_OK
    if args.eps is None or args.r is None:
        raise _Fail(EXIT_ERROR, "bound needs either --net or both --eps and --r")
    value = sensitivity_upper_bound(args.eps, args.r, args.norm)
    out.write(json.dumps({"bound": io.format_decimal(value)}, separators=(",", ":")) + "\n")
    err.write(f"min(eps/r, 2) * norm = {value:.6g}\n")
    return EXIT_OK


def cmd_gen_lowerbound(args, out, err):
    net, perturbed = gen_lower_bound_network(args.r, args.eps, args.v)
    io.store(net, args.out)
    io.store(perturbed, args.out_perturbed)
    _emit([net, perturbed], out)
    err.write(f"wrote {args.out} and {args.out_perturbed}\n")
    return EXIT_OK


def cmd_gen_reduction(args, out, err):
    graph = _load(args.graph, BipartiteGraph)
    params = ReductionParams(args.r, args.eps, args.ell, args.d)
    net = gen_bcbs_reduction(graph, params, check_degree=not args.no_degree_check)
    if args.out:
        io.store(net, args.out)
    _emit(net, out)
    err.write(f"{net.n} institutions, {net.m} assets\n")
    return EXIT_OK


def cmd_bcbs(args, out, err):
    result = bcbs_exact(_load(args.graph, BipartiteGraph))
    _emit(result, out)
    err.write(f"largest balanced biclique: {result.k}\n")
    return EXIT_OK


def cmd_max_failures(args, out, err):
    net = _load(args.net, FinancialNetwork)
    if args.method == "exact":
        def search(budget):
            return max_failures_exact(net, budget, args.granularity)
    else:
        def search(budget):
            return max_failures_greedy(net, budget, args.granularity, seed=args.seed, restarts=args.restarts)
    result = search(args.budget)
    _emit(result, out)
    if args.csv:
        steps = int(np.floor(args.budget / args.granularity + 1e-9))
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["budget", "max_failures"])
            for k in range(steps + 1):
                b = k * args.granularity
                w.writerow([io.format_decimal(b), search(b).max_failures])
    err.write(f"{result.method}: {result.max_failures} failure(s)\n")
    return EXIT_OK


def cmd_random_net(args, out, err):
    spec = RandomNetworkSpec(args.n, args.m, args.density, args.reserve_floor, args.dag, args.seed)
    net = random_network(spec)
    if args.out:
        io.store(net, args.out)
    _emit(net, out)
    err.write(f"random network n={net.n} m={net.m} seed={args.seed}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crossholdings", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def solver_flags(p):
        p.add_argument("--tol", type=float, default=1e-10, help="solver tolerance (default 1e-10)")
        p.add_argument("--max-iter", type=int, default=1_000_000, help="iteration cap (default 1000000)")

    p = sub.add_parser("validate", help="check a network file against the model invariants")
    p.add_argument("--net", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("value", help="equity and market values without failures")
    p.add_argument("--net", required=True)
    p.add_argument("--solver", choices=["closed", "neumann", "flow"], default="closed")
    solver_flags(p)
    p.set_defaults(func=cmd_value)

    p = sub.add_parser("cascade", help="best- or worst-case failure equilibrium")
    p.add_argument("--net", required=True)
    p.add_argument("--shock", help="optional shock file applied to prices first")
    p.add_argument("--rule", choices=["best", "worst"], default="best")
    solver_flags(p)
    p.set_defaults(func=cmd_cascade)

    p = sub.add_parser("enumerate", help="every failure equilibrium (n <= 24)")
    p.add_argument("--net", required=True)
    p.add_argument("--shock")
    solver_flags(p)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("perturb", help="market-value change between two networks")
    p.add_argument("--net", required=True)
    p.add_argument("--net2", required=True)
    p.add_argument("--csv", help="write per-institution values to this CSV file")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("bound", help="sensitivity upper bound, or the acyclic equity check with --net")
    p.add_argument("--eps", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--norm", type=float, default=1.0, help="||D p|| (default 1)")
    p.add_argument("--net")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("gen-lowerbound", help="write the four-bank amplification pair")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--v", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.add_argument("--out-perturbed", required=True)
    p.set_defaults(func=cmd_gen_lowerbound)

    p = sub.add_parser("gen-reduction", help="network built from a bipartite graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--ell", type=int, default=0)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--no-degree-check", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen_reduction)

    p = sub.add_parser("bcbs", help="largest balanced complete bipartite subgraph (n <= 16)")
    p.add_argument("--graph", required=True)
    p.set_defaults(func=cmd_bcbs)

    p = sub.add_parser("max-failures", help="worst price shock within a budget")
    p.add_argument("--net", required=True)
    p.add_argument("--budget", type=float, required=True)
    p.add_argument("--granularity", "--eps", dest="granularity", type=float, required=True)
    p.add_argument("--method", choices=["exact", "greedy"], default="exact")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=0)
    p.add_argument("--csv", help="write max failures for every budget step to this CSV file")
    p.set_defaults(func=cmd_max_failures)

    p = sub.add_parser("random-net", help="seeded random network")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--density", type=float, default=0.3)
    p.add_argument("--reserve-floor", type=float, default=0.1)
    p.add_argument("--dag", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_random_net)
    return parser


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        return args.func(args, out, err)
    except InvalidNetworkError as exc:
        err.write(f"invalid input: {exc}\n")
        return EXIT_INVALID
    except InstanceTooLargeError as exc:
        err.write(f"instance too large: {exc}\n")
        return EXIT_TOO_LARGE
    except _Fail as exc:
        err.write(f"error: {exc}\n")
        return exc.code
    except (FormatError, ValueError, ConvergenceError, OSError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_ERROR


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
