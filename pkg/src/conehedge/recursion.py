"""Backward dual-cone reduction and strict-arbitrage detection.

The reduction runs from the leaves to the root: each non-polar node
intersects its solvency dual with the (quasi-sure) conic hull of the
children's reduced duals plus the constraint dual.  Nodes where the
reduced dual loses full dimension are recorded: no-strict-arbitrage
cannot hold once that happens, and the arbitrage finder below will then
produce an explicit zero-cost nonzero solvent family as a witness.
"""

from __future__ import annotations

from dataclasses import dataclass

from conehedge._rat import R0, R1, is_zero_vec
from conehedge.cones import intersect, minkowski_sum
from conehedge.lp import OPTIMAL, LinearProgram
from conehedge.market import polar_classification, quasi_sure_support


@dataclass
class RecursionResult:
    tilde_dual: dict
    tilde_primal: dict
    gamma_hull: dict
    empty_interior_nodes: set
    interior_witness: dict
    polar: object

    def reduced_transfer_cone(self, nid):
        return self.tilde_primal[nid]


def backward_dual_cones(spec):
    """Reduced dual cones at every node; leaves keep the solvency dual.

    Polar nodes copy the unreduced dual (they never enter supports or
    constraints, the copy just keeps reports total).  Loss of interior is
    recorded per node, never raised.
    """
    polar = polar_classification(spec.tree)
    tilde_dual = {}
    gamma_hull = {}
    empty_interior = set()
    witness = {}
    for t in range(spec.tree.horizon, -1, -1):
        for nid in spec.tree.nodes_at(t):
            node = spec.tree.nodes[nid]
            K_star = spec.solvency[nid].dual().synced()
            if node.is_leaf or not polar.is_non_polar(nid):
                tilde_dual[nid] = K_star
            else:
                hull = quasi_sure_support(spec.tree, nid, tilde_dual)
                gamma_hull[nid] = hull
                C_star = spec.constraint[nid].dual().synced()
                tilde_dual[nid] = intersect(K_star, minkowski_sum(hull, C_star))
            ok, w = tilde_dual[nid].has_nonempty_interior()
            if ok:
                witness[nid] = w
            elif polar.is_non_polar(nid):
                empty_interior.add(nid)
    tilde_primal = {nid: c.dual().synced() for nid, c in tilde_dual.items()}
    return RecursionResult(
        tilde_dual=tilde_dual,
        tilde_primal=tilde_primal,
        gamma_hull=gamma_hull,
        empty_interior_nodes=empty_interior,
        interior_witness=witness,
        polar=polar,
    )


def tilde_decomposition_check(result, spec):
    """Nodewise check that the reduced primal cone splits as
    solvency + (support-dual intersected with the constraint cone)."""
    for nid, node in spec.tree.nodes.items():
        if node.is_leaf or not result.polar.is_non_polar(nid):
            continue
        gamma_dual = result.gamma_hull[nid].dual().synced()
        rhs = minkowski_sum(spec.solvency[nid], intersect(gamma_dual, spec.constraint[nid]))
        if not rhs.set_eq(result.tilde_primal[nid]):
            return False
    return True


def interior_diagnostic(result):
    """Necessary-condition report for no-strict-arbitrage."""
    flagged = sorted(result.empty_interior_nodes)
    if flagged:
        return {
            "status": "fail",
            "empty_interior_nodes": flagged,
            "message": "reduced dual cone has empty interior at non-polar nodes; "
                       "strict arbitrage must exist",
        }
    return {
        "status": "ok",
        "empty_interior_nodes": [],
        "message": "necessary condition for no-strict-arbitrage holds",
    }


@dataclass
class ArbitrageWitness:
    time: int
    transfers: dict  # node id -> transfer vector spent at that node
    positions: dict  # time-t node id -> accumulated position
    nonzero_node: str

    def verify(self, spec, polar=None):
        """Re-check the witness by direct cone membership."""
        polar = polar or polar_classification(spec.tree)
        for nid, k in self.transfers.items():
            if not spec.solvency[nid].contains(k):
                return False
        for nid, xi in self.positions.items():
            node = spec.tree.nodes[nid]
            if node.time != self.time or not polar.is_non_polar(nid):
                return False
            acc = [R0] * spec.dimension
            for anc in spec.tree.path(nid):
                kv = self.transfers.get(anc)
                if kv is not None:
                    acc = [a - b for a, b in zip(acc, kv)]
            if tuple(acc) != tuple(xi):
                return False
            if not spec.constraint[nid].contains(xi):
                return False
            if not spec.solvency[nid].contains(xi):
                return False
        nz = self.positions.get(self.nonzero_node)
        if nz is None or is_zero_vec(nz):
            return False
        return True


class _ZeroCostFamilyLP:
    """Shared feasible region for the level-t strict-arbitrage programs.

    Variables are nonnegative coefficients on the solvency-cone generators
    of every non-polar node at times <= t; the accumulated position at a
    time-t node must satisfy both its constraint cone and its solvency
    cone, and the total coefficient mass is capped at 1 so positivity of a
    linear functional is decidable.

    With `statics` (list of leaf -> payoff-vector maps, used at t = T),
    additional nonnegative position sizes enter the terminal solvency
    rows, while the constraint rows keep binding the dynamic part only.
    """

    def __init__(self, spec, polar, t, statics=None):
        self.spec = spec
        self.polar = polar
        self.t = t
        self.lp = LinearProgram()
        self.coef = {}  # node id -> list of (var, generator)
        d = spec.dimension
        all_vars = []
        for s in range(t + 1):
            for nid in spec.tree.nodes_at(s):
                if not polar.is_non_polar(nid):
                    continue
                entries = []
                for g in spec.solvency[nid].generators:
                    v = self.lp.var()
                    entries.append((v, g))
                    all_vars.append(v)
                self.coef[nid] = entries
        self.static_vars = [self.lp.var() for _ in (statics or ())]
        self.statics = statics or []
        self.targets = [nid for nid in spec.tree.nodes_at(t) if polar.is_non_polar(nid)]
        # xi(target) = -sum of transfers along the root path.
        self.xi_terms = {}
        for nid in self.targets:
            terms = [[] for _ in range(d)]
            for anc in spec.tree.path(nid):
                for v, g in self.coef.get(anc, ()):
                    for i in range(d):
                        if g[i] != 0:
                            terms[i].append((v, -g[i]))
            self.xi_terms[nid] = terms
        for nid in self.targets:
            terms = self.xi_terms[nid]
            for n in spec.constraint[nid].halfspaces:
                row = []
                for i in range(d):
                    if n[i] != 0:
                        row.extend((v, c * n[i]) for v, c in terms[i])
                self.lp.add_constraint(row, ">=", R0)
            for n in spec.solvency[nid].halfspaces:
                row = []
                for i in range(d):
                    if n[i] != 0:
                        row.extend((v, c * n[i]) for v, c in terms[i])
                for av, phi in zip(self.static_vars, self.statics):
                    coef = sum((n[i] * phi[nid][i] for i in range(d)), R0)
                    if coef != 0:
                        row.append((av, coef))
                self.lp.add_constraint(row, ">=", R0)
        mass = [(v, R1) for v in all_vars] + [(v, R1) for v in self.static_vars]
        self.lp.add_constraint(mass, "<=", R1)

    def maximize(self, objective):
        return self.lp.maximize(objective)

    def witness_from(self, res):
        d = self.spec.dimension
        transfers = {}
        for nid, entries in self.coef.items():
            k = [R0] * d
            used = False
            for v, g in entries:
                c = res.value_of(v)
                if c != 0:
                    used = True
                    for i in range(d):
                        k[i] += c * g[i]
            if used and not is_zero_vec(k):
                transfers[nid] = tuple(k)
        positions = {}
        nonzero = None
        for nid in self.targets:
            acc = [R0] * d
            for anc in self.spec.tree.path(nid):
                kv = transfers.get(anc)
                if kv is not None:
                    acc = [a - b for a, b in zip(acc, kv)]
            positions[nid] = tuple(acc)
            if nonzero is None and not is_zero_vec(acc):
                nonzero = nid
        return transfers, positions, nonzero


def strict_arbitrage_search(spec, method="interior-functional"):
    """Decide no-strict-arbitrage; on failure return a verified witness.

    method "interior-functional" (default): one program per time level,
    maximizing a functional strictly positive on every nonzero solvent
    position (built from interior points of the solvency duals).  The
    optimum is zero iff no admissible zero-cost family ends nonzero.

    method "per-coordinate": the family of 2 * d * (#nodes at t) programs
    maximizing +/- each coordinate of each accumulated position.  Slower;
    kept as an independently checkable formulation, and both methods must
    agree (property-tested).
    """
    polar = polar_classification(spec.tree)
    d = spec.dimension
    for t in range(spec.tree.horizon + 1):
        region = _ZeroCostFamilyLP(spec, polar, t)
        if method == "interior-functional":
            objective = []
            for nid in region.targets:
                ok, w = spec.solvency[nid].dual().synced().has_nonempty_interior()
                if not ok:  # excluded by the loader, kept for safety
                    raise ValueError(f"efficient friction violated at node {nid}")
                terms = region.xi_terms[nid]
                for i in range(d):
                    if w[i] != 0:
                        objective.extend((v, c * w[i]) for v, c in terms[i])
            res = region.maximize(objective)
            if res.status != OPTIMAL:
                raise ValueError("internal: bounded feasible program not solved")
            if res.objective > 0:
                transfers, positions, nonzero = region.witness_from(res)
                witness = ArbitrageWitness(t, transfers, positions, nonzero)
                if not witness.verify(spec, polar):
                    raise ValueError("internal: arbitrage witness failed re-checks")
                return False, witness
        elif method == "per-coordinate":
            for nid in region.targets:
                for i in range(d):
                    for sign in (R1, -R1):
                        objective = [(v, c * sign) for v, c in region.xi_terms[nid][i]]
                        res = region.maximize(objective)
                        if res.status != OPTIMAL:
                            raise ValueError("internal: bounded program not solved")
                        if res.objective > 0:
                            transfers, positions, nonzero = region.witness_from(res)
                            witness = ArbitrageWitness(t, transfers, positions, nonzero)
                            if not witness.verify(spec, polar):
                                raise ValueError(
                                    "internal: arbitrage witness failed re-checks")
                            return False, witness
        else:
            raise ValueError(f"unknown search method {method!r}")
    return True, None
