"""JSON interchange format.

Networks::

    {"n": 2, "m": 1, "cross_holdings": [[1, 0, "0.25"]], "asset_ownership": [[0, 0, "1"]],
     "prices": ["1"], "thresholds": ["-inf", "0.5"], "failure_costs": ["0", "0.5"]}

Matrices are sparse ``[row, col, value]`` lists in row-major order with
zeros omitted; indices are 0-based. Every real number is a decimal string.
Shocks are ``{"drops": [...], "budget": "..."}`` and bipartite graphs
``{"n": ..., "edges": [[left, right], ...]}``.

Floats are written with the shortest representation that parses back to
the same double, so ``store(load(text))`` reproduces a canonical file byte
for byte.
"""

from __future__ import annotations

import json
import math
from functools import singledispatch
from pathlib import Path

import numpy as np

from .cascade import CascadeEquilibrium
from .errors import FormatError, InvalidNetworkError
from .network import FinancialNetwork, Shock, ValuationResult, validate, validate_shock
from .sensitivity import EquityBoundReport, PerturbationReport
from .shock_search import Biclique, BipartiteGraph, GapReport, ReductionPropertyReport, ShockSearchResult

__all__ = [
    "format_decimal",
    "parse_decimal",
    "to_jsonable",
    "dumps",
    "loads",
    "load",
    "store",
    "NETWORK_FIELDS",
    "SHOCK_FIELDS",
    "GRAPH_FIELDS",
]

NETWORK_FIELDS = ("n", "m", "cross_holdings", "asset_ownership", "prices", "thresholds", "failure_costs")
SHOCK_FIELDS = ("drops", "budget")
GRAPH_FIELDS = ("n", "edges")


def format_decimal(x: float) -> str:
    x = float(x)
    if x == 0:
        return "0"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def parse_decimal(value, where: str) -> float:
    if not isinstance(value, str):
        raise FormatError(f"{where}: expected a decimal string, got {type(value).__name__} {value!r}")
    try:
        return float(value)
    except ValueError:
        raise FormatError(f"{where}: not a decimal number: {value!r}") from None


def _vector(values):
    return [format_decimal(x) for x in np.asarray(values, dtype=float)]


def _entries(matrix):
    return [[int(i), int(j), format_decimal(matrix[i, j])] for i, j in zip(*np.nonzero(matrix))]


@singledispatch
def to_jsonable(obj):
    """Plain JSON-ready structure for any value this package produces."""
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(x) for x in obj]
    raise TypeError(f"no JSON form for {type(obj).__name__}")


@to_jsonable.register
def _(net: FinancialNetwork):
    return {
        "n": net.n,
        "m": net.m,
        "cross_holdings": _entries(net.cross_holdings),
        "asset_ownership": _entries(net.asset_ownership),
        "prices": _vector(net.prices),
        "thresholds": _vector(net.thresholds),
        "failure_costs": _vector(net.failure_costs),
    }


@to_jsonable.register
def _(shock: Shock):
    return {"drops": _vector(shock.drops), "budget": format_decimal(shock.budget)}


@to_jsonable.register
def _(graph: BipartiteGraph):
    return {"n": graph.n, "edges": [list(e) for e in sorted(graph.edges)]}


@to_jsonable.register
def _(result: ValuationResult):
    return {"equity": _vector(result.equity), "market": _vector(result.market)}


@to_jsonable.register
def _(eq: CascadeEquilibrium):
    return {
        "rule": eq.rule,
        "failed": sorted(eq.failed),
        "market": _vector(eq.market),
        "penalties": _vector(eq.penalties),
    }


@to_jsonable.register
def _(report: PerturbationReport):
    return {
        "epsilon": format_decimal(report.epsilon),
        "reserve": format_decimal(report.reserve),
        "measured": format_decimal(report.measured),
        "upper_bound": format_decimal(report.upper_bound),
        "ratio": format_decimal(report.ratio),
        "asset_value_norm": format_decimal(report.asset_value_norm),
    }


@to_jsonable.register
def _(report: EquityBoundReport):
    return {
        "max_equity": format_decimal(report.max_equity),
        "asset_total": format_decimal(report.asset_total),
        "slack": format_decimal(report.slack),
        "holds": report.holds,
    }


@to_jsonable.register
def _(b: Biclique):
    if b.k == 0:
        return {"k": 0}
    return {"k": b.k, "left": list(b.left), "right": list(b.right)}


@to_jsonable.register
def _(result: ShockSearchResult):
    return {
        "max_failures": result.max_failures,
        "method": result.method,
        "shock": to_jsonable(result.witness_shock),
        "equilibrium": to_jsonable(result.witness_equilibrium),
    }


@to_jsonable.register
def _(report: ReductionPropertyReport):
    return {"property_one": report.property_one, "property_two": report.property_two, "cases": report.cases}


@to_jsonable.register
def _(report: GapReport):
    return {
        "k_star": report.k_star,
        "chain_length": report.chain_length,
        "failures": report.failures,
        "target": report.target,
        "left_failed": list(report.left_failed),
        "right_failed": list(report.right_failed),
        "chain_failed": [list(c) for c in report.chain_failed],
        "biclique_complete": report.biclique_complete,
        "chains_follow_right": report.chains_follow_right,
    }


def dumps(obj) -> str:
    """Canonical text: compact separators, one trailing newline."""
    return json.dumps(to_jsonable(obj), separators=(",", ":")) + "\n"


def _require_keys(doc, expected, kind):
    unknown = sorted(set(doc) - set(expected))
    if unknown:
        raise FormatError(f"{kind}: unknown field(s) {unknown}")
    missing = [k for k in expected if k not in doc]
    if missing:
        raise FormatError(f"{kind}: missing field(s) {missing}")


def _count(doc, key):
    value = doc[key]
    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
        raise FormatError(f"{key}: expected a non-negative integer, got {value!r}")
    return value


def _dense(doc, key, shape):
    rows = doc[key]
    if not isinstance(rows, list):
        raise FormatError(f"{key}: expected a list of [row, col, value] entries")
    out = np.zeros(shape)
    seen = set()
    for pos, entry in enumerate(rows):
        where = f"{key}[{pos}]"
        if not (isinstance(entry, list) and len(entry) == 3):
            raise FormatError(f"{where}: expected [row, col, value]")
        i, j, value = entry
        for idx, bound in ((i, shape[0]), (j, shape[1])):
            if not isinstance(idx, int) or isinstance(idx, bool) or not 0 <= idx < bound:
                raise FormatError(f"{where}: index {idx!r} out of range for shape {shape}")
        if (i, j) in seen:
            raise FormatError(f"{where}: duplicate entry ({i}, {j})")
        seen.add((i, j))
        out[i, j] = parse_decimal(value, where)
    return out


def _decimals(doc, key):
    values = doc[key]
    if not isinstance(values, list):
        raise FormatError(f"{key}: expected a list of decimal strings")
    return np.array([parse_decimal(v, f"{key}[{i}]") for i, v in enumerate(values)], dtype=float)


def _network_from(doc) -> FinancialNetwork:
    _require_keys(doc, NETWORK_FIELDS, "network")
    n, m = _count(doc, "n"), _count(doc, "m")
    net = FinancialNetwork(
        _dense(doc, "cross_holdings", (n, n)),
        _dense(doc, "asset_ownership", (n, m)),
        _decimals(doc, "prices"),
        _decimals(doc, "thresholds"),
        _decimals(doc, "failure_costs"),
    )
    violations = validate(net)
    if violations:
        raise InvalidNetworkError(violations)
    return net


def _shock_from(doc) -> Shock:
    _require_keys(doc, SHOCK_FIELDS, "shock")
    shock = Shock(_decimals(doc, "drops"), parse_decimal(doc["budget"], "budget"))
    violations = validate_shock(shock)
    if violations:
        raise InvalidNetworkError(violations)
    return shock


def _graph_from(doc) -> BipartiteGraph:
    _require_keys(doc, GRAPH_FIELDS, "graph")
    n = _count(doc, "n")
    edges = doc["edges"]
    if not isinstance(edges, list):
        raise FormatError("edges: expected a list of [left, right] pairs")
    pairs = []
    for pos, e in enumerate(edges):
        if not (
            isinstance(e, list)
            and len(e) == 2
            and all(isinstance(x, int) and not isinstance(x, bool) and 0 <= x < n for x in e)
        ):
            raise FormatError(f"edges[{pos}]: expected [left, right] with indices in [0, {n})")
        pairs.append(tuple(e))
    return BipartiteGraph(n, frozenset(pairs))


def loads(text: str):
    """Parse a network, shock or bipartite graph from JSON text.

    The kind is decided by the field names; unknown fields are rejected.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise FormatError("top-level JSON value must be an object")
    keys = set(doc)
    if "drops" in keys or "budget" in keys:
        return _shock_from(doc)
    if "edges" in keys:
        return _graph_from(doc)
    return _network_from(doc)


def load(source):
    """Read from a path or a text stream."""
    if hasattr(source, "read"):
        return loads(source.read())
    return loads(Path(source).read_text())


def store(value, target) -> None:
    """Write the canonical form of ``value`` to a path or a text stream."""
    text = dumps(value)
    if hasattr(target, "write"):
        target.write(text)
    else:
        Path(target).write_text(text)
