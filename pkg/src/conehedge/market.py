"""Finite scenario trees with per-node prior kernel sets and cone data.

A market is a tree graded by time 0..T, a finite set of transition
kernels at every non-leaf node, a solvency cone and a constraint cone at
every node, and a terminal payoff vector at every leaf.  Loading enforces
the model contracts: kernels are stochastic, the nonnegative orthant is
solvent, solvency duals have nonempty interior, constraint cones grow
along edges and always contain the numeraire line.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from conehedge._rat import R0, R1, RationalParseError, parse_rat, rat, rat_str, vec
from conehedge.cones import (
    ConeError,
    PolyhedralCone,
    conic_hull_of_union,
    contains_line,
    unit_vector,
)


class MarketValidationError(ValueError):
    def __init__(self, message, node=None, invariant=None):
        super().__init__(message)
        self.node = node
        self.invariant = invariant


@dataclass
class Node:
    id: str
    time: int
    parent: str | None
    children: list = field(default_factory=list)
    kernels: list = field(default_factory=list)  # list of tuples aligned with children

    @property
    def is_leaf(self):
        return not self.children


class ScenarioTree:
    def __init__(self, horizon, nodes, root):
        self.horizon = int(horizon)
        self.nodes = dict(nodes)  # id -> Node, insertion order = file order
        self.root = root
        self._levels = None

    def node(self, nid):
        return self.nodes[nid]

    def children(self, nid):
        return self.nodes[nid].children

    def leaves(self):
        return [n.id for n in self.nodes.values() if n.is_leaf]

    def nodes_at(self, t):
        if self._levels is None:
            levels = {}
            for n in self.nodes.values():
                levels.setdefault(n.time, []).append(n.id)
            self._levels = levels
        return list(self._levels.get(t, []))

    def path(self, nid):
        """Node ids from the root down to nid, inclusive."""
        out = []
        cur = nid
        while cur is not None:
            out.append(cur)
            cur = self.nodes[cur].parent
        return out[::-1]

    def validate(self):
        if self.root not in self.nodes:
            raise MarketValidationError(f"root node {self.root!r} missing", node=self.root,
                                        invariant="tree")
        root = self.nodes[self.root]
        if root.time != 0 or root.parent is not None:
            raise MarketValidationError("root must sit at time 0 with no parent",
                                        node=self.root, invariant="tree")
        for n in self.nodes.values():
            if n.parent is not None:
                p = self.nodes.get(n.parent)
                if p is None:
                    raise MarketValidationError(f"unknown parent at node {n.id}",
                                                node=n.id, invariant="tree")
                if p.time != n.time - 1:
                    raise MarketValidationError(f"time grading broken at node {n.id}",
                                                node=n.id, invariant="tree")
                if n.id not in p.children:
                    raise MarketValidationError(f"node {n.id} not registered with parent",
                                                node=n.id, invariant="tree")
            if n.is_leaf:
                if n.time != self.horizon:
                    raise MarketValidationError(
                        f"leaf {n.id} at time {n.time} != horizon {self.horizon}",
                        node=n.id, invariant="tree")
                if n.kernels:
                    raise MarketValidationError(f"leaf {n.id} carries kernels",
                                                node=n.id, invariant="kernels")
            else:
                if not n.kernels:
                    raise MarketValidationError(f"no kernel at node {n.id}",
                                                node=n.id, invariant="kernels")
                for k in n.kernels:
                    if len(k) != len(n.children):
                        raise MarketValidationError(f"kernel arity mismatch at node {n.id}",
                                                    node=n.id, invariant="kernels")
                    if any(p < 0 or p > 1 for p in k):
                        raise MarketValidationError(
                            f"kernel probability outside [0,1] at node {n.id}",
                            node=n.id, invariant="kernels")
                    if sum(k, R0) != R1:
                        raise MarketValidationError(f"kernel not stochastic at node {n.id}",
                                                    node=n.id, invariant="kernels")


@dataclass
class PolarClassification:
    polar_nodes: set
    non_polar_nodes: set

    def is_non_polar(self, nid):
        return nid in self.non_polar_nodes


class MarketSpec:
    """Dimension, tree, per-node solvency/constraint cones, terminal payoff."""

    def __init__(self, dimension, tree, solvency, constraint, payoff):
        self.dimension = int(dimension)
        self.tree = tree
        self.solvency = dict(solvency)
        self.constraint = dict(constraint)
        self.payoff = {k: vec(v) for k, v in payoff.items()}

    @property
    def numeraire(self):
        return self.dimension - 1

    def validate(self, require_numeraire_line=True):
        d = self.dimension
        if d < 2:
            raise MarketValidationError("dimension must be >= 2", invariant="dimension")
        self.tree.validate()
        orthant = PolyhedralCone.orthant(d)
        for nid, node in self.tree.nodes.items():
            K = self.solvency.get(nid)
            if K is None:
                raise MarketValidationError(f"missing solvency cone at node {nid}",
                                            node=nid, invariant="solvency")
            if K.dim != d:
                raise MarketValidationError(f"solvency cone dimension mismatch at node {nid}",
                                            node=nid, invariant="solvency")
            if not orthant.is_subset(K):
                raise MarketValidationError(
                    f"nonnegative positions not solvent at node {nid}",
                    node=nid, invariant="orthant-solvent")
            ok, _ = K.dual().synced().has_nonempty_interior()
            if not ok:
                raise MarketValidationError(
                    f"efficient friction violated at node {nid}",
                    node=nid, invariant="efficient-friction")
            C = self.constraint.get(nid)
            if C is None:
                raise MarketValidationError(f"missing constraint cone at node {nid}",
                                            node=nid, invariant="constraint")
            if C.dim != d:
                raise MarketValidationError(
                    f"constraint cone dimension mismatch at node {nid}",
                    node=nid, invariant="constraint")
            if require_numeraire_line and not contains_line(C, unit_vector(d, d - 1)):
                raise MarketValidationError(
                    f"numeraire line missing from constraint cone at node {nid}",
                    node=nid, invariant="numeraire-line")
            if node.parent is not None:
                Cp = self.constraint[node.parent]
                if not Cp.is_subset(C):
                    raise MarketValidationError(
                        f"constraint cone shrinks along edge into node {nid}",
                        node=nid, invariant="constraint-nesting")
        for leaf in self.tree.leaves():
            g = self.payoff.get(leaf)
            if g is None:
                raise MarketValidationError(f"missing payoff at leaf {leaf}",
                                            node=leaf, invariant="payoff")
            if len(g) != d:
                raise MarketValidationError(f"payoff dimension mismatch at leaf {leaf}",
                                            node=leaf, invariant="payoff")
        for nid in self.payoff:
            if not self.tree.nodes[nid].is_leaf:
                raise MarketValidationError(f"payoff attached to non-leaf {nid}",
                                            node=nid, invariant="payoff")
        return self


def solvency_from_bidask(pi):
    """Solvency cone of a bid-ask matrix: pi[i][j] units of asset j buy one
    unit of asset i, so pi[i][j] is the ask of i quoted in j and
    1/pi[j][i] its bid.

    Generated by the unit vectors and the exchange vectors
    pi[i][j] e_j - e_i.  Entries must be positive with unit diagonal; no
    internal-consistency (triangle) condition is imposed.
    """
    d = len(pi)
    rows = [vec(row) for row in pi]
    for i in range(d):
        if len(rows[i]) != d:
            raise MarketValidationError("bid-ask matrix not square", invariant="bid-ask")
        if rows[i][i] != 1:
            raise MarketValidationError("bid-ask diagonal must be 1", invariant="bid-ask")
        for j in range(d):
            if rows[i][j] <= 0:
                raise MarketValidationError("bid-ask entries must be positive",
                                            invariant="bid-ask")
    gens = [unit_vector(d, i) for i in range(d)]
    for i in range(d):
        for j in range(d):
            if i != j:
                g = [R0] * d
                g[j] = rows[i][j]
                g[i] = -R1
                gens.append(tuple(g))
    return PolyhedralCone(d, generators=gens).synced()


def unconstrained_cone(d):
    return PolyhedralCone.full_space(d)


def polar_classification(tree):
    """Split nodes into polar / non-polar.

    A node is non-polar iff every edge on its root path is charged by at
    least one kernel of the edge's parent; equivalently some product of
    kernel selections gives the node positive probability.
    """
    non_polar = set()
    polar = set()
    order = [tree.root]
    non_polar.add(tree.root)
    while order:
        nid = order.pop()
        node = tree.nodes[nid]
        for idx, child in enumerate(node.children):
            charged = nid in non_polar and any(k[idx] > 0 for k in node.kernels)
            (non_polar if charged else polar).add(child)
            order.append(child)
    return PolarClassification(polar_nodes=polar, non_polar_nodes=non_polar)


def charged_children(tree, nid):
    node = tree.nodes[nid]
    out = []
    for idx, child in enumerate(node.children):
        if any(k[idx] > 0 for k in node.kernels):
            out.append(child)
    return out


def quasi_sure_support(tree, nid, family):
    """Closed convex conic hull of the child cones charged from nid.

    `family` maps child ids to cones; children uncharged by every kernel
    of nid are invisible quasi-surely and do not contribute.
    """
    node = tree.nodes[nid]
    if node.is_leaf:
        raise MarketValidationError(f"support requested at leaf {nid}", node=nid,
                                    invariant="support")
    charged = charged_children(tree, nid)
    if not charged:
        raise MarketValidationError(f"no charged children at node {nid}", node=nid,
                                    invariant="support")
    return conic_hull_of_union([family[c] for c in charged])


def bar_extension(spec):
    """Extend by one unconstrained auxiliary asset: K x R_+, C x R, payoff [G;0].

    Restores the canonical form in which the constraint cone contains the
    numeraire line, without changing superhedging prices.
    """
    from conehedge.cones import cross_line, cross_nonneg

    d = spec.dimension
    solvency = {nid: cross_nonneg(K) for nid, K in spec.solvency.items()}
    constraint = {nid: cross_line(C) for nid, C in spec.constraint.items()}
    payoff = {leaf: tuple(g) + (R0,) for leaf, g in spec.payoff.items()}
    out = MarketSpec(d + 1, spec.tree, solvency, constraint, payoff)
    return out.validate()


# -- file format -------------------------------------------------------------


def _reject_float(value):
    raise RationalParseError(f"decimal literal rejected (exact rationals only): {value}")


def _cone_from_doc(doc, d, nid):
    kinds = [k for k in ("generators", "halfspaces", "bid_ask") if k in doc]
    if len(kinds) != 1:
        raise MarketValidationError(
            f"cone at node {nid} must have exactly one of generators/halfspaces/bid_ask",
            node=nid, invariant="cone-encoding")
    kind = kinds[0]
    try:
        if kind == "bid_ask":
            return solvency_from_bidask([[parse_rat(x) for x in row] for row in doc[kind]])
        vecs = [[parse_rat(x) for x in row] for row in doc[kind]]
    except RationalParseError as exc:
        raise MarketValidationError(f"bad rational in cone at node {nid}: {exc}",
                                    node=nid, invariant="cone-encoding") from exc
    if kind == "generators":
        return PolyhedralCone.from_generators(vecs, d).synced()
    return PolyhedralCone.from_halfspaces(vecs, d).synced()


def _cone_to_doc(cone):
    return {"generators": [[rat_str(x) for x in g] for g in cone.synced().generators]}


def loads_market(text):
    try:
        doc = json.loads(text, parse_float=_reject_float, parse_int=int)
    except RationalParseError:
        raise
    except json.JSONDecodeError as exc:
        raise MarketValidationError(f"cannot parse market file: {exc}",
                                    invariant="syntax") from exc
    try:
        d = int(doc["dimension"])
        horizon = int(doc["horizon"])
        node_docs = doc["nodes"]
        cone_docs = doc["cones"]
        constraint_docs = doc.get("constraints", {})
        payoff_doc = doc["payoff"]
    except (KeyError, TypeError) as exc:
        raise MarketValidationError(f"missing market field: {exc}",
                                    invariant="schema") from exc

    nodes = {}
    root = None
    for nd in node_docs:
        nid = str(nd["id"])
        if nid in nodes:
            raise MarketValidationError(f"duplicate node id {nid}", node=nid,
                                        invariant="tree")
        parent = nd.get("parent")
        parent = None if parent is None else str(parent)
        node = Node(id=nid, time=int(nd["time"]), parent=parent)
        try:
            for kern in nd.get("kernels", []):
                node.kernels.append([(str(e["child"]), parse_rat(e["prob"])) for e in kern])
        except RationalParseError as exc:
            raise MarketValidationError(f"bad probability at node {nid}: {exc}",
                                        node=nid, invariant="kernels") from exc
        nodes[nid] = node
        if parent is None:
            if root is not None:
                raise MarketValidationError("multiple roots", invariant="tree")
            root = nid
    if root is None:
        raise MarketValidationError("no root node", invariant="tree")

    for node in nodes.values():
        if node.parent is not None:
            nodes[node.parent].children.append(node.id)
    # Kernels are stored as (child, prob) pairs; align them with the
    # resolved child order and require exactly the children to be listed.
    for node in nodes.values():
        aligned = []
        for kern in node.kernels:
            m = dict(kern)
            if set(m) != set(node.children) or len(kern) != len(node.children):
                raise MarketValidationError(
                    f"kernel children mismatch at node {node.id}",
                    node=node.id, invariant="kernels")
            aligned.append(tuple(m[c] for c in node.children))
        node.kernels = aligned

    tree = ScenarioTree(horizon, nodes, root)
    solvency = {}
    constraint = {}
    for nid in nodes:
        if nid not in cone_docs:
            raise MarketValidationError(f"missing solvency cone at node {nid}",
                                        node=nid, invariant="solvency")
        solvency[nid] = _cone_from_doc(cone_docs[nid], d, nid)
        cdoc = constraint_docs.get(nid, "unconstrained")
        if cdoc == "unconstrained":
            constraint[nid] = unconstrained_cone(d)
        else:
            constraint[nid] = _cone_from_doc(cdoc, d, nid)
    try:
        payoff = {str(k): [parse_rat(x) for x in v] for k, v in payoff_doc.items()}
    except RationalParseError as exc:
        raise MarketValidationError(f"bad rational in payoff: {exc}",
                                    invariant="payoff") from exc

    spec = MarketSpec(d, tree, solvency, constraint, payoff)
    return spec.validate()


def load_market(path):
    with open(path, "r", encoding="utf-8") as fh:
        return loads_market(fh.read())


def serialize_market(spec):
    """Canonical JSON text; loads_market(serialize_market(s)) == s."""
    nodes = []
    for node in spec.tree.nodes.values():
        kernels = [
            [{"child": c, "prob": rat_str(p)} for c, p in zip(node.children, kern)]
            for kern in node.kernels
        ]
        nodes.append({
            "id": node.id,
            "time": node.time,
            "parent": node.parent,
            "kernels": kernels,
        })
    doc = {
        "dimension": spec.dimension,
        "horizon": spec.tree.horizon,
        "nodes": nodes,
        "cones": {nid: _cone_to_doc(c) for nid, c in spec.solvency.items()},
        "constraints": {nid: _cone_to_doc(c) for nid, c in spec.constraint.items()},
        "payoff": {leaf: [rat_str(x) for x in g] for leaf, g in spec.payoff.items()},
    }
    return json.dumps(doc, indent=1, sort_keys=False)


def market_eq(a, b):
    """Structural equality used by the round-trip tests."""
    if a.dimension != b.dimension or a.tree.horizon != b.tree.horizon:
        return False
    if list(a.tree.nodes) != list(b.tree.nodes):
        return False
    for nid, na in a.tree.nodes.items():
        nb = b.tree.nodes[nid]
        if (na.parent, na.children, na.kernels) != (nb.parent, nb.children, nb.kernels):
            return False
    for nid in a.tree.nodes:
        if not a.solvency[nid].synced().set_eq(b.solvency[nid].synced()):
            return False
        if not a.constraint[nid].synced().set_eq(b.constraint[nid].synced()):
            return False
    return a.payoff == b.payoff
