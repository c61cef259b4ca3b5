"""Fictitious frictionless market on an atom-enlarged tree.

Each non-polar node receives finitely many price atoms strictly inside
its reduced dual cone: the section vertices pulled toward an interior
center by a shrink factor, the center itself, far points along any
unbounded section directions, and (optionally) the children's atoms that
happen to lie strictly inside.  Dynamic trading against these atoms is a
plain frictionless superhedging problem whose value brackets the
frictional price from below; as the shrink factor decreases the atoms
approach the section vertices and the bracket tightens.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from conehedge._rat import R0, R1, dot, rat, rat_str
from conehedge.cones import normalized_section
from conehedge.lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LinearProgram
from conehedge.market import charged_children
from conehedge.pricing import NEG_INF, POS_INF, primal_superhedge, value_str
from conehedge.recursion import backward_dual_cones, strict_arbitrage_search

POS = POS_INF
NEG = NEG_INF


@dataclass
class EnlargedTree:
    spec: object
    recursion: object
    epsilon: object
    prices: dict  # non-polar node id -> tuple of price vectors (last coord 1)
    charged: dict  # non-polar non-leaf node id -> list of charged child ids

    @property
    def polar(self):
        return self.recursion.polar

    def theta_atoms(self, nid):
        """Atoms as coordinates in Q^(d-1); the price absorbs the level."""
        return [p[:-1] for p in self.prices[nid]]

    def atom_count(self):
        return sum(len(v) for v in self.prices.values())


@dataclass
class FrictionlessStrategy:
    kind: str  # "randomized" | "consistent"
    holdings: dict  # (node id, atom index) -> vector for randomized; node id -> vector else


def _strict_inside(cone, x):
    for n in cone.halfspaces:
        if dot(n, x) <= 0:
            return False
    return True


def build_enlarged_market(spec, recursion_result=None, epsilon=rat(1, 100),
                          include_child_atoms=False, seed_atoms=None):
    """Price atoms at every non-polar node, strictly inside the reduced duals.

    Requires the necessary no-strict-arbitrage condition (no non-polar
    node with an interior-less reduced dual).  `seed_atoms` merges in
    previously built atoms, which keeps atom sets nested along a shrink
    schedule; `include_child_atoms` pulls each charged child's atoms into
    the parent where strict interiority allows, which removes the
    one-step kinks a consistent hedger could otherwise exploit between
    atoms.
    """
    if recursion_result is None:
        recursion_result = backward_dual_cones(spec)
    if recursion_result.empty_interior_nodes:
        raise ValueError(
            "enlargement undefined: reduced dual cone has empty interior at "
            + ", ".join(sorted(recursion_result.empty_interior_nodes)))
    if not (0 < epsilon < 1):
        raise ValueError("shrink factor must lie strictly between 0 and 1")
    d = spec.dimension
    polar = recursion_result.polar
    prices = {}
    charged = {}
    for t in range(spec.tree.horizon, -1, -1):
        for nid in spec.tree.nodes_at(t):
            if not polar.is_non_polar(nid):
                continue
            node = spec.tree.nodes[nid]
            cone = recursion_result.tilde_dual[nid]
            section = normalized_section(cone, d - 1)
            w = recursion_result.interior_witness[nid]
            center = tuple(x / w[d - 1] for x in w)
            atoms = []
            for v in section.vertices:
                atoms.append(tuple((1 - epsilon) * a + epsilon * b
                                   for a, b in zip(v, center)))
            atoms.append(center)
            for r in section.rays:
                atoms.append(tuple(a + b / epsilon for a, b in zip(center, r)))
            if seed_atoms and nid in seed_atoms:
                atoms.extend(seed_atoms[nid])
            if include_child_atoms and not node.is_leaf:
                for child in charged_children(spec.tree, nid):
                    for a in prices.get(child, ()):
                        if _strict_inside(cone, a):
                            atoms.append(a)
            out = []
            seen = set()
            for a in sorted(atoms):
                if a in seen:
                    continue
                seen.add(a)
                if a[d - 1] != 1:
                    raise ValueError("internal: atom price not normalized")
                if not _strict_inside(cone, a):
                    raise ValueError(f"internal: atom not strictly inside at node {nid}")
                out.append(a)
            prices[nid] = tuple(out)
            if not node.is_leaf:
                charged[nid] = charged_children(spec.tree, nid)
    return EnlargedTree(spec=spec, recursion=recursion_result, epsilon=epsilon,
                        prices=prices, charged=charged)


def terminal_values(enlarged, payoff=None):
    """g(leaf, atom) = payoff . atom price."""
    spec = enlarged.spec
    payoff = payoff or spec.payoff
    g = {}
    for leaf in spec.tree.leaves():
        if not enlarged.polar.is_non_polar(leaf):
            continue
        for ai, price in enumerate(enlarged.prices[leaf]):
            g[(leaf, ai)] = dot(payoff[leaf], price)
    return g


def frictionless_superhedge(enlarged, g, strategy_class="randomized"):
    """Superhedging price of g over the atom tree.

    randomized: the holding chosen at a node may depend on the current
    atom.  consistent: one holding per base node; additionally any
    unbounded direction of the current reduced-dual section forbids a
    positive rebalancing exposure along it (the worst-case self-financing
    cost along such a direction is infinite).
    """
    if strategy_class not in ("randomized", "consistent"):
        raise ValueError(f"unknown strategy class {strategy_class!r}")
    spec = enlarged.spec
    polar = enlarged.polar
    d = spec.dimension
    lp = LinearProgram()
    y = lp.free_var()

    hold = {}  # slot key -> list of (var, generator)

    def holding_slot(nid, ai):
        key = (nid, ai) if strategy_class == "randomized" else nid
        if key not in hold:
            hold[key] = [(lp.var(), gen) for gen in spec.constraint[nid].generators]
        return hold[key]

    value_var = {}
    for nid in spec.tree.nodes:
        if not polar.is_non_polar(nid) or spec.tree.nodes[nid].is_leaf:
            continue
        for ai in range(len(enlarged.prices[nid])):
            value_var[(nid, ai)] = lp.free_var()

    def value_terms(nid, ai):
        if spec.tree.nodes[nid].is_leaf:
            return None, g[(nid, ai)]
        return value_var[(nid, ai)], R0

    for nid in spec.tree.nodes:
        node = spec.tree.nodes[nid]
        if node.is_leaf or not polar.is_non_polar(nid):
            continue
        for ai, price in enumerate(enlarged.prices[nid]):
            slot = holding_slot(nid, ai)
            vhere = value_var[(nid, ai)]
            for child in enlarged.charged[nid]:
                for aj, cprice in enumerate(enlarged.prices[child]):
                    delta = tuple(a - b for a, b in zip(cprice, price))
                    vchild, const = value_terms(child, aj)
                    row = [(vhere, R1)]
                    for var, gen in slot:
                        coef = dot(gen, delta)
                        if coef != 0:
                            row.append((var, coef))
                    if vchild is not None:
                        row.append((vchild, -R1))
                    lp.add_constraint(row, ">=", const)

    root = spec.tree.root
    for ai in range(len(enlarged.prices[root])):
        vroot, const = value_terms(root, ai)
        row = [(y, R1)]
        if vroot is not None:
            row.append((vroot, -R1))
        lp.add_constraint(row, ">=", const)

    if strategy_class == "consistent":
        # Rebalancing at a node must have nonpositive exposure along every
        # unbounded section direction, or its worst-case cost is infinite.
        for nid in spec.tree.nodes:
            node = spec.tree.nodes[nid]
            if node.is_leaf or not polar.is_non_polar(nid):
                continue
            section = normalized_section(enlarged.recursion.tilde_dual[nid], d - 1)
            if not section.rays:
                continue
            here = holding_slot(nid, 0)
            parent = node.parent
            prev = holding_slot(parent, 0) if parent is not None else []
            for r in section.rays:
                row = []
                for var, gen in here:
                    coef = dot(gen, r)
                    if coef != 0:
                        row.append((var, coef))
                for var, gen in prev:
                    coef = dot(gen, r)
                    if coef != 0:
                        row.append((var, -coef))
                lp.add_constraint(row, "<=", R0)

    res = lp.minimize([(y, R1)])
    if res.status == UNBOUNDED:
        return NEG
    if res.status == INFEASIBLE:
        return POS
    return res.objective


def dp_value(enlarged, g):
    """Backward one-step dual recursion over the atom tree.

    At each (node, atom) the continuation is valued by the best
    one-step measure on charged (child, atom) pairs satisfying the
    constraint-cone supermartingale inequalities against today's atom
    price; the value at the root is the maximum over root atoms.  An
    empty one-step dual set values the state at -inf, matching the
    unbounded superhedging improvement available there.
    """
    spec = enlarged.spec
    polar = enlarged.polar
    vals = {}
    for t in range(spec.tree.horizon, -1, -1):
        for nid in spec.tree.nodes_at(t):
            if not polar.is_non_polar(nid):
                continue
            node = spec.tree.nodes[nid]
            if node.is_leaf:
                for ai in range(len(enlarged.prices[nid])):
                    vals[(nid, ai)] = g[(nid, ai)]
                continue
            pairs = [
                (child, aj)
                for child in enlarged.charged[nid]
                for aj in range(len(enlarged.prices[child]))
            ]
            for ai, price in enumerate(enlarged.prices[nid]):
                finite = [(c, a) for (c, a) in pairs if vals[(c, a)] != NEG]
                lp = LinearProgram()
                q = {pair: lp.var() for pair in finite}
                lp.add_constraint([(v, R1) for v in q.values()], "==", R1)
                for gen in spec.constraint[nid].generators:
                    row = []
                    for (child, aj), v in q.items():
                        coef = dot(gen, enlarged.prices[child][aj]) - dot(gen, price)
                        if coef != 0:
                            row.append((v, coef))
                    lp.add_constraint(row, "<=", R0)
                res = lp.maximize(
                    [(v, vals[pair]) for pair, v in q.items() if vals[pair] != 0]
                )
                vals[(nid, ai)] = NEG if res.status != OPTIMAL else res.objective
    root = spec.tree.root
    return max(vals[(root, ai)] for ai in range(len(enlarged.prices[root])))


def enlarged_dual_value(enlarged, g):
    """Path-measure dual over the atom tree: mass flows along enlarged
    edges, one supermartingale inequality per (node, atom) and
    constraint-cone generator."""
    spec = enlarged.spec
    polar = enlarged.polar
    lp = LinearProgram()
    node_mass = {}
    for nid in spec.tree.nodes:
        if not polar.is_non_polar(nid):
            continue
        for ai in range(len(enlarged.prices[nid])):
            node_mass[(nid, ai)] = lp.var()
    out_edges = {}
    in_edges = {}
    for nid, kids in enlarged.charged.items():
        for ai in range(len(enlarged.prices[nid])):
            for child in kids:
                for aj in range(len(enlarged.prices[child])):
                    e = lp.var()
                    out_edges.setdefault((nid, ai), []).append((e, (child, aj)))
                    in_edges.setdefault((child, aj), []).append(e)
    root = spec.tree.root
    lp.add_constraint(
        [(node_mass[(root, ai)], R1) for ai in range(len(enlarged.prices[root]))],
        "==", R1)
    for (nid, ai), v in node_mass.items():
        if nid in enlarged.charged:
            out = out_edges.get((nid, ai), [])
            lp.add_constraint([(v, R1)] + [(e, -R1) for e, _ in out], "==", R0)
        if nid != root:
            inc = in_edges.get((nid, ai), [])
            lp.add_constraint([(v, R1)] + [(e, -R1) for e in inc], "==", R0)
    for nid, kids in enlarged.charged.items():
        for ai, price in enumerate(enlarged.prices[nid]):
            for gen in spec.constraint[nid].generators:
                row = []
                base = dot(gen, price)
                if base != 0:
                    row.append((node_mass[(nid, ai)], -base))
                for e, (child, aj) in out_edges.get((nid, ai), []):
                    coef = dot(gen, enlarged.prices[child][aj])
                    if coef != 0:
                        row.append((e, coef))
                lp.add_constraint(row, "<=", R0)
    objective = []
    for leaf in spec.tree.leaves():
        if not polar.is_non_polar(leaf):
            continue
        for ai in range(len(enlarged.prices[leaf])):
            val = g[(leaf, ai)]
            if val != 0:
                objective.append((node_mass[(leaf, ai)], val))
    res = lp.maximize(objective)
    if res.status == INFEASIBLE:
        return NEG
    if res.status == UNBOUNDED:
        return POS
    return res.objective


def one_step_na_failures(enlarged):
    """One-period no-arbitrage against the children's full reduced-dual
    sections, run at every (node, atom).

    A failure means some constrained holding gains against every
    tomorrow-section vertex and direction with a strict gain somewhere;
    under no-strict-arbitrage this cannot happen for atoms strictly
    inside the reduced dual, so any hit indicates a broken construction.
    """
    spec = enlarged.spec
    polar = enlarged.polar
    d = spec.dimension
    failures = []
    for nid, kids in enlarged.charged.items():
        targets = []
        for child in kids:
            section = normalized_section(enlarged.recursion.tilde_dual[child], d - 1)
            targets.append((section.vertices, section.rays))
        for ai, price in enumerate(enlarged.prices[nid]):
            lp = LinearProgram()
            slot = [(lp.var(), gen) for gen in spec.constraint[nid].generators]
            gains = []
            for vertices, rays in targets:
                for v in vertices:
                    gains.append(tuple(a - b for a, b in zip(v, price)))
                gains.extend(rays)
            rows = []
            for gvec in gains:
                row = []
                for var, gen in slot:
                    coef = dot(gen, gvec)
                    if coef != 0:
                        row.append((var, coef))
                rows.append(row)
                lp.add_constraint(row, ">=", R0)
            lp.add_constraint([(var, R1) for var, _ in slot], "<=", R1)
            objective = {}
            for row in rows:
                for var, coef in row:
                    objective[var] = objective.get(var, R0) + coef
            res = lp.maximize(list(objective.items()))
            if res.status != OPTIMAL or res.objective > 0:
                failures.append((nid, ai))
    return failures


def equality_check(spec, epsilon_schedule, include_child_atoms=True):
    """Run the enlargement over a shrink schedule and compare prices.

    Atom sets are cumulative along the schedule, so the enlarged values
    are provably nondecreasing and the reported gaps nonincreasing.
    Exact assertions: enlarged dual <= randomized value <= frictional
    price, and no one-step arbitrage against the reduced-dual sections.
    Gap decay to zero is reported, not asserted.
    """
    verdict, _ = strict_arbitrage_search(spec)
    if not verdict:
        raise ValueError("enlargement requires no-strict-arbitrage to hold")
    recursion_result = backward_dual_cones(spec)
    pi_K, _ = primal_superhedge(spec, "K", recursion_result)
    rows = []
    seed = None
    prev_gap = None
    for eps in epsilon_schedule:
        enlarged = build_enlarged_market(
            spec, recursion_result, eps,
            include_child_atoms=include_child_atoms, seed_atoms=seed)
        seed = {nid: list(p) for nid, p in enlarged.prices.items()}
        g = terminal_values(enlarged)
        randomized = frictionless_superhedge(enlarged, g, "randomized")
        consistent = frictionless_superhedge(enlarged, g, "consistent")
        dp = dp_value(enlarged, g)
        dual = enlarged_dual_value(enlarged, g)
        na_failures = one_step_na_failures(enlarged)
        if na_failures:
            raise ValueError(f"one-step arbitrage against sections at {na_failures}")
        if not dual <= randomized:
            raise ValueError("sandwich violation: enlarged dual above enlarged price")
        if not randomized <= pi_K:
            raise ValueError("sandwich violation: enlarged price above frictional price")
        gap = pi_K - randomized if randomized not in (POS, NEG) else None
        if prev_gap is not None and gap is not None and gap > prev_gap:
            raise ValueError("gap not monotone along the shrink schedule")
        if gap is not None:
            prev_gap = gap
        rows.append({
            "epsilon": rat_str(eps),
            "atoms": enlarged.atom_count(),
            "randomized": value_str(randomized),
            "consistent": value_str(consistent),
            "dp": value_str(dp),
            "dual": value_str(dual),
            "frictional": value_str(pi_K),
            "gap": value_str(gap) if gap is not None else None,
            "randomized_equals_consistent": randomized == consistent,
            "dp_equals_randomized": dp == randomized,
            "one_step_na_failures": 0,
        })
    return {"frictional": value_str(pi_K), "schedule": rows}
