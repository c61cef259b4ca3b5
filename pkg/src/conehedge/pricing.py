"""Superhedging prices, price systems, certificates, and semi-static trading.

The primal program minimizes the numeraire endowment y such that a
zero-cost transfer family keeps every accumulated position inside its
constraint cone and covers the payoff at every non-polar leaf.  The dual
program maximizes the payoff valuation over node state-price vectors
living in the (reduced or unreduced) solvency duals, with a unit mass of
numeraire at the root, conservation of numeraire mass down the tree, and
one supermartingale inequality per constraint-cone generator.  Strategy
variables are generator coefficients throughout, so every certificate is
re-checkable by exact cone membership.

Infeasible and unbounded programs are values, not errors: an infeasible
primal prices at +inf, an unbounded one at -inf (possible only under
strict arbitrage).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from conehedge._rat import R0, R1, dot, rat, rat_str, vec
from conehedge.lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LinearProgram
from conehedge.market import MarketSpec, polar_classification
from conehedge.recursion import (
    _ZeroCostFamilyLP,
    ArbitrageWitness,
    backward_dual_cones,
    interior_diagnostic,
    strict_arbitrage_search,
)

POS_INF = float("inf")
NEG_INF = float("-inf")


def value_str(v):
    if v == POS_INF:
        return "inf"
    if v == NEG_INF:
        return "-inf"
    return rat_str(v)


@dataclass
class HedgingStrategy:
    y: object
    transfers: dict  # non-polar node id -> transfer vector
    positions: dict  # non-polar node id -> accumulated position
    alpha: tuple = ()  # static position sizes, when options are traded

    def to_doc(self):
        doc = {
            "y": value_str(self.y),
            "transfers": {n: [rat_str(x) for x in k] for n, k in self.transfers.items()},
            "positions": {n: [rat_str(x) for x in p] for n, p in self.positions.items()},
        }
        if self.alpha:
            doc["alpha"] = [rat_str(a) for a in self.alpha]
        return doc


@dataclass
class PriceSystem:
    m: dict  # non-polar node id -> state-price vector
    cones: str  # which dual cones the system lives in ("K" or "K-tilde")

    def to_doc(self):
        return {
            "cones": self.cones,
            "m": {n: [rat_str(x) for x in v] for n, v in self.m.items()},
        }


@dataclass
class SemiStaticSpec:
    """Options available for static buy-and-hold, with bid/ask quotes.

    Each option pays a portfolio vector per leaf.  Internally both the
    long side (bought at the ask) and the short side (sold at the bid)
    are carried as separate nonnegative positions whose quote is folded
    into the terminal payoff as a numeraire leg.
    """

    options: list  # list of (payoff map leaf -> vector, bid, ask)

    def __post_init__(self):
        for payoff, bid, ask in self.options:
            if bid > ask:
                raise ValueError("option bid above ask")

    def columns(self, spec):
        """Price-adjusted payoff maps for long and short unit positions."""
        d = spec.dimension
        cols = []
        for payoff, bid, ask in self.options:
            long_col = {}
            short_col = {}
            for leaf in spec.tree.leaves():
                phi = vec(payoff[leaf])
                if len(phi) != d:
                    raise ValueError(f"option payoff dimension mismatch at leaf {leaf}")
                adj = list(phi)
                adj[d - 1] = adj[d - 1] - ask
                long_col[leaf] = tuple(adj)
                nadj = [-x for x in phi]
                nadj[d - 1] = nadj[d - 1] + bid
                short_col[leaf] = tuple(nadj)
            cols.append(long_col)
            cols.append(short_col)
        return cols


@dataclass
class PriceReport:
    na_status: str
    primal_value: object = None
    dual_value: object = None
    primal_value_reduced: object = None
    dual_value_unreduced: object = None
    gap: object = None
    strategy: HedgingStrategy = None
    price_system: PriceSystem = None
    witness: ArbitrageWitness = None
    interior: dict = None
    checks: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)


class _PrimalLP:
    def __init__(self, spec, cones="K", recursion_result=None, statics=None):
        polar = polar_classification(spec.tree)
        if cones == "K-tilde":
            if recursion_result is None:
                recursion_result = backward_dual_cones(spec)
            transfer = recursion_result.tilde_primal
        elif cones == "K":
            transfer = spec.solvency
        else:
            raise ValueError(f"unknown cone choice {cones!r}")
        self.spec = spec
        self.polar = polar
        self.lp = LinearProgram()
        self.y = self.lp.free_var()
        d = spec.dimension
        self.coef = {}
        for nid in spec.tree.nodes:
            if not polar.is_non_polar(nid):
                continue
            self.coef[nid] = [(self.lp.var(), g) for g in transfer[nid].synced().generators]
        self.alpha = [self.lp.var() for _ in (statics or ())]
        self.statics = statics or []

        self.eta_terms = {}
        for nid in self.coef:
            terms = [[] for _ in range(d)]
            for anc in spec.tree.path(nid):
                for v, g in self.coef.get(anc, ()):
                    for i in range(d):
                        if g[i] != 0:
                            terms[i].append((v, -g[i]))
            self.eta_terms[nid] = terms

        for nid in self.coef:
            terms = self.eta_terms[nid]
            for n in spec.constraint[nid].halfspaces:
                row = []
                for i in range(d):
                    if n[i] != 0:
                        row.extend((v, c * n[i]) for v, c in terms[i])
                self.lp.add_constraint(row, ">=", R0)

        for leaf in spec.tree.leaves():
            if not polar.is_non_polar(leaf):
                continue
            g_pay = spec.payoff[leaf]
            terms = self.eta_terms[leaf]
            for n in spec.solvency[leaf].halfspaces:
                row = [(self.y, n[d - 1])] if n[d - 1] != 0 else []
                for i in range(d):
                    if n[i] != 0:
                        row.extend((v, c * n[i]) for v, c in terms[i])
                for av, col in zip(self.alpha, self.statics):
                    coef = dot(n, col[leaf])
                    if coef != 0:
                        row.append((av, coef))
                self.lp.add_constraint(row, ">=", dot(n, g_pay))

    def solve(self):
        res = self.lp.minimize([(self.y, R1)])
        if res.status == INFEASIBLE:
            return POS_INF, None
        if res.status == UNBOUNDED:
            return NEG_INF, None
        d = self.spec.dimension
        transfers = {}
        for nid, entries in self.coef.items():
            k = [R0] * d
            for v, g in entries:
                c = res.value_of(v)
                if c != 0:
                    for i in range(d):
                        k[i] += c * g[i]
            transfers[nid] = tuple(k)
        positions = {}
        for nid in self.coef:
            acc = [R0] * d
            for anc in self.spec.tree.path(nid):
                kv = transfers.get(anc)
                if kv is not None:
                    acc = [a - b for a, b in zip(acc, kv)]
            positions[nid] = tuple(acc)
        alpha = tuple(res.value_of(a) for a in self.alpha)
        return res.objective, HedgingStrategy(res.objective, transfers, positions, alpha)


def primal_superhedge(spec, cones="K", recursion_result=None, statics=None):
    """Minimal numeraire endowment superhedging the payoff; with the
    optimal strategy when finite."""
    return _PrimalLP(spec, cones, recursion_result, statics).solve()


class _DualLP:
    def __init__(self, spec, cones="K", recursion_result=None, option_columns=None,
                 option_intervals=None):
        polar = polar_classification(spec.tree)
        if cones == "K-tilde":
            if recursion_result is None:
                recursion_result = backward_dual_cones(spec)
            duals = recursion_result.tilde_dual
        elif cones == "K":
            duals = {nid: spec.solvency[nid].dual().synced() for nid in spec.tree.nodes}
        else:
            raise ValueError(f"unknown cone choice {cones!r}")
        self.spec = spec
        self.polar = polar
        self.cones = cones
        d = spec.dimension
        self.lp = LinearProgram()
        self.w = {}
        self.m_terms = {}
        for nid in spec.tree.nodes:
            if not polar.is_non_polar(nid):
                continue
            entries = [(self.lp.var(), g) for g in duals[nid].synced().generators]
            self.w[nid] = entries
            terms = [[] for _ in range(d)]
            for v, g in entries:
                for i in range(d):
                    if g[i] != 0:
                        terms[i].append((v, g[i]))
            self.m_terms[nid] = terms

        root = spec.tree.root
        self.lp.add_constraint(list(self.m_terms[root][d - 1]), "==", R1)
        for nid, node in spec.tree.nodes.items():
            if node.is_leaf or not polar.is_non_polar(nid):
                continue
            kids = [c for c in node.children if polar.is_non_polar(c)]
            row = list(self.m_terms[nid][d - 1])
            for c in kids:
                row.extend((v, -coef) for v, coef in self.m_terms[c][d - 1])
            self.lp.add_constraint(row, "==", R0)
            for y in spec.constraint[nid].generators:
                row = []
                for i in range(d):
                    if y[i] == 0:
                        continue
                    for c in kids:
                        row.extend((v, coef * y[i]) for v, coef in self.m_terms[c][i])
                    row.extend((v, -coef * y[i]) for v, coef in self.m_terms[nid][i])
                self.lp.add_constraint(row, "<=", R0)

        self.leaves = [l for l in spec.tree.leaves() if polar.is_non_polar(l)]
        if option_columns:
            for col, (lo, hi) in zip(option_columns, option_intervals):
                row = []
                for leaf in self.leaves:
                    phi = col[leaf]
                    for i in range(d):
                        if phi[i] != 0:
                            row.extend((v, coef * phi[i]) for v, coef in self.m_terms[leaf][i])
                self.lp.add_constraint(list(row), ">=", lo)
                self.lp.add_constraint(row, "<=", hi)

    def objective_terms(self, payoff=None):
        payoff = payoff or self.spec.payoff
        d = self.spec.dimension
        terms = []
        for leaf in self.leaves:
            g = payoff[leaf]
            for i in range(d):
                if g[i] != 0:
                    terms.extend((v, coef * g[i]) for v, coef in self.m_terms[leaf][i])
        return terms

    def solve(self, payoff=None):
        res = self.lp.maximize(self.objective_terms(payoff))
        if res.status == INFEASIBLE:
            return None, None, "infeasible"
        if res.status == UNBOUNDED:
            return POS_INF, None, "unbounded"
        d = self.spec.dimension
        m = {}
        for nid, entries in self.w.items():
            v = [R0] * d
            for var, g in entries:
                c = res.value_of(var)
                if c != 0:
                    for i in range(d):
                        v[i] += c * g[i]
            m[nid] = tuple(v)
        return res.objective, PriceSystem(m, self.cones), "optimal"


def dual_scps(spec, cones="K", recursion_result=None, options=None):
    """Best payoff valuation over consistent state-price systems.

    With `options`, valuations of every option are confined to its
    bid-ask interval (closed; a strictly-interior system exists under
    no-strict-arbitrage with genuinely spread quotes, so the closure does
    not change the optimum).
    """
    cols = intervals = None
    if options is not None:
        cols = []
        intervals = []
        for payoff, bid, ask in options.options:
            cols.append({leaf: vec(payoff[leaf]) for leaf in spec.tree.leaves()})
            intervals.append((bid, ask))
    lpw = _DualLP(spec, cones, recursion_result, cols, intervals)
    return lpw.solve()


def verify_superhedge(spec, strategy, statics=None, report=False):
    """Exact re-check of every certificate invariant at non-polar nodes."""
    polar = polar_classification(spec.tree)
    d = spec.dimension
    failures = []
    for nid in spec.tree.nodes:
        if not polar.is_non_polar(nid):
            continue
        k = strategy.transfers.get(nid)
        if k is None or not spec.solvency[nid].contains(k):
            failures.append((nid, "transfer outside solvency cone"))
            continue
        eta = strategy.positions.get(nid)
        acc = [R0] * d
        for anc in spec.tree.path(nid):
            kv = strategy.transfers.get(anc)
            if kv is not None:
                acc = [a - b for a, b in zip(acc, kv)]
        if eta is None or tuple(acc) != tuple(eta):
            failures.append((nid, "position does not accumulate transfers"))
            continue
        if not spec.constraint[nid].contains(eta):
            failures.append((nid, "position outside constraint cone"))
    for leaf in spec.tree.leaves():
        if not polar.is_non_polar(leaf):
            continue
        eta = strategy.positions.get(leaf)
        if eta is None:
            continue
        term = list(eta)
        term[d - 1] = term[d - 1] + strategy.y
        for i in range(d):
            term[i] = term[i] - spec.payoff[leaf][i]
        for av, col in zip(strategy.alpha, statics or []):
            for i in range(d):
                term[i] = term[i] + av * col[leaf][i]
        if not spec.solvency[leaf].contains(term):
            failures.append((leaf, "terminal position not solvent"))
    if report:
        return not failures, failures
    return not failures


def verify_price_system(spec, system, recursion_result=None, options=None):
    polar = polar_classification(spec.tree)
    d = spec.dimension
    if system.cones == "K-tilde":
        if recursion_result is None:
            recursion_result = backward_dual_cones(spec)
        duals = recursion_result.tilde_dual
    else:
        duals = {nid: spec.solvency[nid].dual().synced() for nid in spec.tree.nodes}
    for nid in spec.tree.nodes:
        if not polar.is_non_polar(nid):
            continue
        m = system.m.get(nid)
        if m is None or not duals[nid].contains(m):
            return False
    if system.m[spec.tree.root][d - 1] != 1:
        return False
    for nid, node in spec.tree.nodes.items():
        if node.is_leaf or not polar.is_non_polar(nid):
            continue
        kids = [c for c in node.children if polar.is_non_polar(c)]
        total = [R0] * d
        for c in kids:
            total = [a + b for a, b in zip(total, system.m[c])]
        if total[d - 1] != system.m[nid][d - 1]:
            return False
        diff = [a - b for a, b in zip(total, system.m[nid])]
        for y in spec.constraint[nid].generators:
            if dot(y, diff) > 0:
                return False
    if options is not None:
        for payoff, bid, ask in options.options:
            val = R0
            for leaf in spec.tree.leaves():
                if polar.is_non_polar(leaf):
                    val += dot(vec(payoff[leaf]), system.m[leaf])
            if val < bid or val > ask:
                return False
    return True


def recover_scps(spec, system):
    """Split a state-price system into the measure and the price process.

    Q(leaf) is the numeraire mass at the leaf; Z is the state price
    rescaled by it where that mass is positive.  The valuation identity
    sum G.m == E_Q[G.Z_T] is rechecked exactly.
    """
    polar = polar_classification(spec.tree)
    d = spec.dimension
    Q = {}
    Z = {}
    for nid in spec.tree.nodes:
        if not polar.is_non_polar(nid):
            continue
        m = system.m[nid]
        q = m[d - 1]
        if q > 0:
            Z[nid] = tuple(x / q for x in m)
        if spec.tree.nodes[nid].is_leaf:
            Q[nid] = q
    total = sum(Q.values(), R0)
    if total != 1:
        raise ValueError("leaf numeraire masses do not sum to one")
    lhs = R0
    rhs = R0
    for leaf, q in Q.items():
        lhs += dot(spec.payoff[leaf], system.m[leaf])
        if q > 0:
            rhs += q * dot(spec.payoff[leaf], Z[leaf])
    if lhs != rhs:
        raise ValueError("valuation mismatch between state prices and (Z, Q)")
    return Z, Q


def with_payoff(spec, payoff):
    """Same market, different terminal payoff."""
    return MarketSpec(spec.dimension, spec.tree, spec.solvency, spec.constraint, payoff)


def na_semistatic_check(spec, options):
    """No-strict-arbitrage with static option positions allowed.

    Extends the terminal-level zero-cost region with nonnegative option
    position sizes.  A feasible family with a nonzero static leg fails
    the check, as does a plain nonzero terminal position (so with no
    options this is exactly the terminal-level dynamic search).
    """
    polar = polar_classification(spec.tree)
    cols = options.columns(spec) if options is not None else []
    region = _ZeroCostFamilyLP(spec, polar, spec.tree.horizon, statics=cols)
    d = spec.dimension
    if region.static_vars:
        res = region.maximize([(v, R1) for v in region.static_vars])
        if res.status != OPTIMAL:
            raise ValueError("internal: bounded feasibility program not solved")
        if res.objective > 0:
            transfers, positions, _ = region.witness_from(res)
            alpha = tuple(res.value_of(v) for v in region.static_vars)
            return False, HedgingStrategy(R0, transfers, positions, alpha)
    objective = []
    for nid in region.targets:
        ok, w = spec.solvency[nid].dual().synced().has_nonempty_interior()
        if not ok:
            raise ValueError(f"efficient friction violated at node {nid}")
        for i in range(d):
            if w[i] != 0:
                objective.extend((v, c * w[i]) for v, c in region.xi_terms[nid][i])
    res = region.maximize(objective)
    if res.status != OPTIMAL:
        raise ValueError("internal: bounded feasibility program not solved")
    if res.objective > 0:
        transfers, positions, _ = region.witness_from(res)
        alpha = tuple(res.value_of(v) for v in region.static_vars)
        return False, HedgingStrategy(R0, transfers, positions, alpha)
    return True, None


def slater_margin(spec, recursion_result=None, options=None):
    """Largest uniform interiority margin of a normalized price system.

    Maximizes t such that some system keeps every halfspace product of
    the reduced dual at least t, every non-polar node carries numeraire
    mass at least t, and every option valuation sits at least t inside
    its quotes.  A positive optimum certifies the strictly-interior
    pricing system required for the semi-static duality to be exact.
    """
    if recursion_result is None:
        recursion_result = backward_dual_cones(spec)
    polar = polar_classification(spec.tree)
    d = spec.dimension
    lp = LinearProgram()
    margin = lp.var()
    mvars = {}
    m_terms = {}
    for nid in spec.tree.nodes:
        if not polar.is_non_polar(nid):
            continue
        xs = [lp.free_var() for _ in range(d)]
        mvars[nid] = xs
        m_terms[nid] = xs
        for n in recursion_result.tilde_dual[nid].halfspaces:
            row = [(xs[i], n[i]) for i in range(d) if n[i] != 0]
            row.append((margin, -R1))
            lp.add_constraint(row, ">=", R0)
        row = [(xs[d - 1], R1), (margin, -R1)]
        lp.add_constraint(row, ">=", R0)
    root = spec.tree.root
    lp.add_constraint([(mvars[root][d - 1], R1)], "==", R1)
    for nid, node in spec.tree.nodes.items():
        if node.is_leaf or not polar.is_non_polar(nid):
            continue
        kids = [c for c in node.children if polar.is_non_polar(c)]
        row = [(mvars[nid][d - 1], R1)] + [(mvars[c][d - 1], -R1) for c in kids]
        lp.add_constraint(row, "==", R0)
        for y in spec.constraint[nid].generators:
            row = []
            for i in range(d):
                if y[i] == 0:
                    continue
                row.append((mvars[nid][i], -y[i]))
                row.extend((mvars[c][i], y[i]) for c in kids)
            lp.add_constraint(row, "<=", R0)
    if options is not None:
        for payoff, bid, ask in options.options:
            row = []
            for leaf in spec.tree.leaves():
                if not polar.is_non_polar(leaf):
                    continue
                phi = vec(payoff[leaf])
                row.extend((mvars[leaf][i], phi[i]) for i in range(d) if phi[i] != 0)
            lp.add_constraint(row + [(margin, -R1)], ">=", bid)
            lp.add_constraint(row + [(margin, R1)], "<=", ask)
    # The margin is bounded by the root mass constraint chain, but cap it
    # for safety so the program is never unbounded.
    lp.add_constraint([(margin, R1)], "<=", R1)
    res = lp.maximize([(margin, R1)])
    if res.status != OPTIMAL:
        return R0
    return res.objective


def duality_report(spec, options=None, check_reduced=True):
    """Full pipeline: arbitrage check, reduction, primal and dual prices
    in both cone systems, certificates, and exactness assertions."""
    verdict, witness = strict_arbitrage_search(spec)
    recursion_result = backward_dual_cones(spec)
    interior = interior_diagnostic(recursion_result)
    if not verdict:
        return PriceReport(na_status="fail", witness=witness, interior=interior)

    statics = options.columns(spec) if options is not None else None
    primal, strategy = primal_superhedge(spec, "K", recursion_result, statics=statics)
    report = PriceReport(na_status="pass", primal_value=primal, strategy=strategy,
                         interior=interior)
    if check_reduced and options is None:
        reduced, _ = primal_superhedge(spec, "K-tilde", recursion_result)
        report.primal_value_reduced = reduced
        report.checks["primal_reduction_equal"] = primal == reduced

    dual_value, system, status = dual_scps(spec, "K-tilde", recursion_result,
                                           options=options)
    if status == "infeasible":
        report.checks["dual_status"] = "infeasible"
        report.dual_value = None
    else:
        report.dual_value = dual_value
        report.price_system = system
    if check_reduced:
        unred, _, unred_status = dual_scps(spec, "K", recursion_result, options=options)
        if unred_status != "infeasible":
            report.dual_value_unreduced = unred
            if report.dual_value is not None:
                report.checks["dual_reduction_equal"] = unred == report.dual_value

    if report.dual_value is not None and primal not in (POS_INF, NEG_INF):
        report.gap = primal - report.dual_value
        report.checks["zero_gap"] = report.gap == 0
    elif report.dual_value == POS_INF and primal == POS_INF:
        report.gap = R0
        report.checks["zero_gap"] = True

    if strategy is not None:
        report.checks["strategy_verifies"] = verify_superhedge(spec, strategy,
                                                               statics=statics)
    if system is not None:
        report.checks["price_system_verifies"] = verify_price_system(
            spec, system, recursion_result, options=options)
    return report


def semistatic_price(spec, options):
    """Primal and dual semi-static prices with certificates."""
    verdict, witness = na_semistatic_check(spec, options)
    if not verdict:
        return PriceReport(na_status="fail-semistatic",
                           strategy=witness)
    report = duality_report(spec, options=options, check_reduced=False)
    report.extras["slater_margin"] = slater_margin(spec, options=options)
    return report
