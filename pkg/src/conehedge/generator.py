"""Seeded random market instances for the test batteries.

Sizes are deliberately skewed small: exact pivoting costs grow quickly
with tree size, and the properties under test are dimension- and
horizon-insensitive once each regime is covered.  Bid-ask factors are
kept within a modest band so efficient friction holds by construction,
and uncharged edges are injected occasionally to exercise the polar
bookkeeping.
"""

from __future__ import annotations

import random

from conehedge._rat import R0, R1, rat
from conehedge.cones import PolyhedralCone, unit_vector
from conehedge.market import (
    MarketSpec,
    Node,
    ScenarioTree,
    solvency_from_bidask,
    unconstrained_cone,
)


def _rand_rat(rng, lo_num, hi_num, den_choices=(1, 2, 3, 4)):
    den = rng.choice(den_choices)
    num = rng.randint(lo_num * den, hi_num * den)
    return rat(num, den)


def _bidask_matrix(rng, d, wide=False):
    """Positive matrix with unit diagonal and pi[i][j] * pi[j][i] > 1."""
    hi = 4 if wide else 3
    pi = [[R1] * d for _ in range(d)]
    for i in range(d):
        for j in range(i + 1, d):
            a = _rand_rat(rng, 1, hi)
            b = _rand_rat(rng, 1, hi)
            if a * b <= 1:
                b = rat(2) / a
            pi[i][j] = a
            pi[j][i] = b
    return pi


def _perturb_bidask(rng, pi):
    d = len(pi)
    out = [row[:] for row in pi]
    for i in range(d):
        for j in range(d):
            if i == j:
                continue
            bump = rat(rng.randint(0, 3), rng.choice((4, 5, 8)))
            if rng.random() < 0.5:
                out[i][j] = out[i][j] + bump
            else:
                shrunk = out[i][j] - bump
                if shrunk * out[j][i] > 1 and shrunk > 0:
                    out[i][j] = shrunk
    return out


def _random_constraint(rng, d, parent_cone):
    """Grow the parent's constraint cone by a few random directions."""
    gens = list(parent_cone.generators)
    for _ in range(rng.randint(0, 2)):
        v = [rat(rng.randint(-2, 2)) for _ in range(d)]
        if any(x != 0 for x in v):
            gens.append(tuple(v))
    return PolyhedralCone(d, generators=gens).synced()


def _base_constraint(rng, d):
    roll = rng.random()
    if roll < 0.45:
        return unconstrained_cone(d)
    gens = [unit_vector(d, d - 1), tuple(-x for x in unit_vector(d, d - 1))]
    gens.extend(unit_vector(d, i) for i in range(d))
    if roll < 0.75:
        for _ in range(rng.randint(0, 2)):
            v = [rat(rng.randint(-2, 2)) for _ in range(d)]
            if any(x != 0 for x in v):
                gens.append(tuple(v))
    return PolyhedralCone(d, generators=gens).synced()


def _kernels(rng, n_children, n_kernels, allow_uncharged):
    kernels = []
    for _ in range(n_kernels):
        weights = []
        for _ in range(n_children):
            if allow_uncharged and n_children > 1 and rng.random() < 0.2:
                weights.append(0)
            else:
                weights.append(rng.randint(1, 6))
        if sum(weights) == 0:
            weights[rng.randrange(n_children)] = 1
        total = sum(weights)
        kernels.append(tuple(rat(w, total) for w in weights))
    return kernels


def random_market(rng_or_seed, d=None, horizon=None, max_children=3, max_kernels=3,
                  allow_uncharged=True, constrained=True, payoff_scale=2):
    """A validated random market; geometry is retried until efficient
    friction holds everywhere (rarely needed within the default band)."""
    rng = rng_or_seed if isinstance(rng_or_seed, random.Random) else random.Random(rng_or_seed)
    d = d or rng.choice((2, 2, 3, 3, 4))
    horizon = horizon or rng.choice((1, 1, 2, 2, 3))
    nodes = {}
    root = Node(id="n0", time=0, parent=None)
    nodes[root.id] = root
    frontier = [root]
    for t in range(1, horizon + 1):
        new_frontier = []
        for parent in frontier:
            n_children = rng.randint(1, max_children)
            for c in range(n_children):
                child = Node(id=f"{parent.id}.{c}", time=t, parent=parent.id)
                nodes[child.id] = child
                parent.children.append(child.id)
                new_frontier.append(child)
            parent.kernels = _kernels(rng, n_children, rng.randint(1, max_kernels),
                                      allow_uncharged)
        frontier = new_frontier
    tree = ScenarioTree(horizon, nodes, root.id)

    solvency = {}
    mats = {}
    cones = {}
    for nid, node in nodes.items():
        if node.parent is None:
            # Pairwise spread bounds do not control exchange cycles in
            # d >= 3, so interiors are checked directly and bad draws
            # rerolled (or inherited from the parent down the tree).
            while True:
                mat = _bidask_matrix(rng, d)
                cone = solvency_from_bidask(mat)
                if cone.dual().synced().has_nonempty_interior()[0]:
                    break
        else:
            mat = _perturb_bidask(rng, mats[node.parent])
            cone = solvency_from_bidask(mat)
            if not cone.dual().synced().has_nonempty_interior()[0]:
                mat = mats[node.parent]
                cone = cones[node.parent]
        mats[nid] = mat
        cones[nid] = cone
        solvency[nid] = cone

    constraint = {}
    c0 = _base_constraint(rng, d) if constrained else unconstrained_cone(d)
    for nid in nodes:
        node = nodes[nid]
        if node.parent is None:
            constraint[nid] = c0
        else:
            parent_cone = constraint[node.parent]
            if rng.random() < 0.3:
                constraint[nid] = _random_constraint(rng, d, parent_cone)
            else:
                constraint[nid] = parent_cone

    payoff = {}
    for leaf in tree.leaves():
        payoff[leaf] = tuple(
            rat(rng.randint(-payoff_scale * 4, payoff_scale * 4), rng.choice((1, 2, 4)))
            for _ in range(d)
        )
    spec = MarketSpec(d, tree, solvency, constraint, payoff)
    return spec.validate()


def empty_interior_market(rng_or_seed, d=None, horizon=1):
    """Market whose reduced dual collapses at the root: every charged
    leaf quotes asset 1 strictly above the root's ask, so the root dual
    and the children's support hull meet only on a face."""
    rng = rng_or_seed if isinstance(rng_or_seed, random.Random) else random.Random(rng_or_seed)
    d = d or rng.choice((2, 3))
    spec = random_market(rng, d=d, horizon=horizon, allow_uncharged=False,
                         constrained=False)
    lo = rat(rng.randint(1, 2))
    hi = lo + rat(1, 2)
    root_mat = [[rat(3) if i != j else R1 for j in range(d)] for i in range(d)]
    leaf_mat = [[rat(3) if i != j else R1 for j in range(d)] for i in range(d)]
    # The quoted band of asset 1 in numeraire units is
    # [1/pi[d-1][0], pi[0][d-1]]; every time-1 node quotes strictly above
    # the root band, so the root dual and the support hull of the
    # children's duals meet only where both components vanish.
    root_mat[0][d - 1] = hi           # root band [lo/2, hi]
    root_mat[d - 1][0] = rat(2) / lo
    leaf_lo = hi + 1
    leaf_mat[0][d - 1] = leaf_lo + rat(1, 2)  # leaf band [leaf_lo, leaf_lo + 1/2]
    leaf_mat[d - 1][0] = R1 / leaf_lo
    solvency = {}
    for nid, node in spec.tree.nodes.items():
        solvency[nid] = solvency_from_bidask(root_mat if node.time == 0 else leaf_mat)
    out = MarketSpec(d, spec.tree, solvency,
                     {nid: unconstrained_cone(d) for nid in spec.tree.nodes},
                     spec.payoff)
    return out.validate()


def instance_a():
    """One-period two-state market: root quotes [1/2, 2], one leaf [3/2, 3],
    the other [1/4, 1/2]; both leaves charged by point-mass kernels."""
    nodes = {
        "root": Node("root", 0, None, ["u", "w"],
                     [(R1, R0), (R0, R1)]),
        "u": Node("u", 1, "root"),
        "w": Node("w", 1, "root"),
    }
    tree = ScenarioTree(1, nodes, "root")
    solvency = {
        "root": solvency_from_bidask([[R1, rat(2)], [rat(2), R1]]),
        "u": solvency_from_bidask([[R1, rat(3)], [rat(2, 3), R1]]),
        "w": solvency_from_bidask([[R1, rat(1, 2)], [rat(4), R1]]),
    }
    constraint = {nid: unconstrained_cone(2) for nid in nodes}
    payoff = {"u": (R1, R0), "w": (R0, R0)}
    return MarketSpec(2, tree, solvency, constraint, payoff).validate()


def instance_b():
    """Single-branch market with the leaf quote band [3, 4] disjoint from
    the root band [1/2, 2]: the reduced dual collapses and buying the
    cheap asset at the root is a strict arbitrage."""
    nodes = {
        "root": Node("root", 0, None, ["u"], [(R1,)]),
        "u": Node("u", 1, "root"),
    }
    tree = ScenarioTree(1, nodes, "root")
    solvency = {
        "root": solvency_from_bidask([[R1, rat(2)], [rat(2), R1]]),
        "u": solvency_from_bidask([[R1, rat(4)], [rat(1, 3), R1]]),
    }
    constraint = {nid: unconstrained_cone(2) for nid in nodes}
    payoff = {"u": (R0, R0)}
    return MarketSpec(2, tree, solvency, constraint, payoff).validate()


def na2_gap_instance():
    """Solvency at both charged leaves does not imply solvency at the
    root (the root band [1/2, 3] sticks out of the common leaf band
    [1, 2]), yet no strict arbitrage exists."""
    nodes = {
        "root": Node("root", 0, None, ["u", "w"],
                     [(rat(1, 2), rat(1, 2)), (rat(1, 4), rat(3, 4))]),
        "u": Node("u", 1, "root"),
        "w": Node("w", 1, "root"),
    }
    tree = ScenarioTree(1, nodes, "root")
    leaf = solvency_from_bidask([[R1, rat(2)], [R1, R1]])
    solvency = {
        "root": solvency_from_bidask([[R1, rat(3)], [rat(2), R1]]),
        "u": leaf,
        "w": leaf,
    }
    constraint = {nid: unconstrained_cone(2) for nid in nodes}
    payoff = {"u": (R1, R0), "w": (rat(-1, 2), R1)}
    return MarketSpec(2, tree, solvency, constraint, payoff).validate()
