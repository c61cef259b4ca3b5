"""Exact rational polyhedral cone arithmetic.

A cone is carried in two representations: generators (rays, with lines
stored as +/- ray pairs) and halfspaces (inner normals n, the cone being
``{x : n.x >= 0}``).  Either side can be derived from the other with the
double-description kernel; a cone constructed from one representation
computes the other lazily and then keeps both.

All vectors are tuples of exact rationals in canonical primitive-integer
form, so equal cones in synced representations have equal sorted
generator lists; set equality is nevertheless always decided by mutual
containment, which is robust to redundant inputs.
"""

from __future__ import annotations

from conehedge import kernels
from conehedge._rat import (
    R0,
    R1,
    canon_ray,
    dot,
    is_zero_vec,
    rat,
    vec,
)


class ConeError(ValueError):
    pass


def _dedupe_canon(vectors, dim):
    out = []
    seen = set()
    for v in vectors:
        if len(v) != dim:
            raise ConeError(f"vector of length {len(v)} in dimension-{dim} cone")
        c = canon_ray(v)
        if is_zero_vec(c) or c in seen:
            continue
        seen.add(c)
        out.append(c)
    return tuple(sorted(out))


class PolyhedralCone:
    """Closed convex polyhedral cone in Q^dim."""

    __slots__ = ("dim", "_generators", "_halfspaces", "_minimal")

    def __init__(self, dim, generators=None, halfspaces=None, _minimal=False):
        if dim < 1:
            raise ConeError("cone dimension must be >= 1")
        if generators is None and halfspaces is None:
            raise ConeError("need generators or halfspaces")
        self.dim = int(dim)
        self._generators = None if generators is None else _dedupe_canon(generators, self.dim)
        self._halfspaces = None if halfspaces is None else _dedupe_canon(halfspaces, self.dim)
        self._minimal = _minimal

    @classmethod
    def from_generators(cls, generators, dim):
        return cls(dim, generators=[vec(g) for g in generators])

    @classmethod
    def from_halfspaces(cls, halfspaces, dim):
        return cls(dim, halfspaces=[vec(h) for h in halfspaces])

    @classmethod
    def full_space(cls, dim):
        gens = []
        for j in range(dim):
            e = [R0] * dim
            e[j] = R1
            gens.append(tuple(e))
            gens.append(tuple(-x for x in e))
        return cls(dim, generators=gens, halfspaces=[], _minimal=True)

    @classmethod
    def zero(cls, dim):
        half = []
        for j in range(dim):
            e = [R0] * dim
            e[j] = R1
            half.append(tuple(e))
            half.append(tuple(-x for x in e))
        return cls(dim, generators=[], halfspaces=half, _minimal=True)

    @classmethod
    def orthant(cls, dim):
        gens = []
        for j in range(dim):
            e = [R0] * dim
            e[j] = R1
            gens.append(tuple(e))
        return cls(dim, generators=gens, halfspaces=list(gens), _minimal=True)

    # -- representations ------------------------------------------------

    @property
    def reps_synced(self):
        return self._generators is not None and self._halfspaces is not None

    @property
    def generators(self):
        if self._generators is None:
            lin, rays = kernels.dual_description(self._halfspaces, self.dim)
            gens = list(rays)
            for l in lin:
                gens.append(l)
                gens.append(tuple(-x for x in l))
            self._generators = tuple(sorted(gens))
        return self._generators

    @property
    def halfspaces(self):
        if self._halfspaces is None:
            # Normals of C are the generators of its dual cone; lines in
            # the dual become +/- normal pairs, i.e. equality constraints.
            lin, rays = kernels.dual_description(self._generators, self.dim)
            half = list(rays)
            for l in lin:
                half.append(l)
                half.append(tuple(-x for x in l))
            self._halfspaces = tuple(sorted(half))
        return self._halfspaces

    def synced(self):
        """Force both representations in canonical minimal form; returns self.

        A cone built from raw generators may carry redundant ones; the
        halfspaces derived from them are already minimal, and re-deriving
        the generator side from those halfspaces leaves exactly the
        extreme rays plus +/- lineality pairs.  Symmetrically for a cone
        built from raw halfspaces.
        """
        if not self._minimal:
            if self._generators is not None and self._halfspaces is None:
                self.halfspaces
                self._generators = None
            elif self._halfspaces is not None and self._generators is None:
                self.generators
                self._halfspaces = None
        self.generators
        self.halfspaces
        self._minimal = True
        return self

    # -- predicates ------------------------------------------------------

    def contains(self, x):
        x = vec(x)
        if len(x) != self.dim:
            raise ConeError("dimension mismatch in membership test")
        return all(dot(n, x) >= 0 for n in self.halfspaces)

    def is_subset(self, other):
        if self.dim != other.dim:
            raise ConeError("dimension mismatch in subset test")
        for g in self.generators:
            for n in other.halfspaces:
                if dot(n, g) < 0:
                    return False
        return True

    def set_eq(self, other):
        return self.is_subset(other) and other.is_subset(self)

    def has_nonempty_interior(self):
        """(flag, witness): witness satisfies every halfspace strictly.

        Solved as the feasibility program ``n.x >= 1`` for all inner
        normals n; for a homogeneous system this is equivalent to strict
        positivity, hence to the cone being full-dimensional.
        """
        from conehedge.lp import LinearProgram

        half = self.halfspaces
        lp = LinearProgram()
        xs = [lp.free_var() for _ in range(self.dim)]
        for n in half:
            lp.add_constraint([(xs[j], n[j]) for j in range(self.dim) if n[j] != 0], ">=", R1)
        res = lp.minimize([])
        if res.status != kernels.LP_OPTIMAL:
            return False, None
        witness = tuple(res.value_of(xs[j]) for j in range(self.dim))
        for n in half:
            if dot(n, witness) < 1:
                raise ConeError("internal: interior witness not strict")
        return True, witness

    # -- constructions ---------------------------------------------------

    def dual(self):
        """Dual cone {x : x.g >= 0 for all g in self}."""
        return PolyhedralCone(self.dim, halfspaces=self.generators)

    def intersect(self, other):
        if self.dim != other.dim:
            raise ConeError("dimension mismatch in intersection")
        return PolyhedralCone(self.dim, halfspaces=list(self.halfspaces) + list(other.halfspaces))

    def minkowski_sum(self, other):
        if self.dim != other.dim:
            raise ConeError("dimension mismatch in sum")
        return PolyhedralCone(self.dim, generators=list(self.generators) + list(other.generators))

    def scaled_section(self, coord):
        return normalized_section(self, coord)

    def lineality_basis(self):
        lin, _ = kernels.dual_description(self.halfspaces, self.dim)
        return lin

    def is_pointed(self):
        return not self.lineality_basis()

    def __repr__(self):
        g = self._generators
        h = self._halfspaces
        return f"PolyhedralCone(dim={self.dim}, generators={g and len(g)}, halfspaces={h and len(h)})"


class ConeSection:
    """The slice {x in cone : x[coord] = 1} of a cone lying in {x[coord] >= 0}.

    vertices carry coordinate 1 at `coord`; rays carry coordinate 0 and
    span the recession directions of the slice.
    """

    __slots__ = ("base", "level_coord", "vertices", "rays")

    def __init__(self, base, level_coord, vertices, rays):
        self.base = base
        self.level_coord = level_coord
        self.vertices = tuple(vertices)
        self.rays = tuple(rays)

    @property
    def is_empty(self):
        return not self.vertices

    @property
    def is_bounded(self):
        return not self.rays

    def __repr__(self):
        return (
            f"ConeSection(coord={self.level_coord}, vertices={len(self.vertices)},"
            f" rays={len(self.rays)})"
        )


def convert(cone, target):
    """Return the cone with both representations populated.

    `target` is "V" or "H"; the named side is (re)computed from the other
    when only one is present.  The returned cone always has reps_synced.
    """
    if target not in ("V", "H"):
        raise ConeError(f"unknown representation kind {target!r}")
    return cone.synced()


def dual_cone(cone):
    return cone.dual().synced()


def intersect(a, b):
    return a.intersect(b).synced()


def minkowski_sum(a, b):
    return a.minkowski_sum(b).synced()


def conic_hull_of_union(cones):
    """Closed convex conic hull of a union of cones (= their Minkowski sum)."""
    cones = list(cones)
    if not cones:
        raise ConeError("conic hull of empty collection")
    dim = cones[0].dim
    gens = []
    for c in cones:
        if c.dim != dim:
            raise ConeError("dimension mismatch in conic hull")
        gens.extend(c.generators)
    return PolyhedralCone(dim, generators=gens).synced()


def has_nonempty_interior(cone):
    return cone.has_nonempty_interior()


def contains(cone, x):
    return cone.contains(x)


def is_subset(a, b):
    return a.is_subset(b)


def normalized_section(cone, coord):
    """Vertices and rays of {x in cone : x[coord] = 1}.

    Requires the cone to lie in {x[coord] >= 0}; a generator with a
    negative entry at `coord` is a contract violation.  An empty section
    (no vertices) means every element of the cone has zero `coord`
    component.
    """
    if not 0 <= coord < cone.dim:
        raise ConeError(f"section coordinate {coord} out of range")
    cone.synced()
    vertices = []
    rays = []
    for g in cone.generators:
        c = g[coord]
        if c < 0:
            raise ConeError(
                f"cone has generator with negative coordinate {coord}; section undefined"
            )
        if c == 0:
            rays.append(g)
        else:
            vertices.append(tuple(x / c for x in g))
    return ConeSection(cone, coord, sorted(vertices), sorted(rays))


def cross_nonneg(cone):
    """K x R_+ in one higher dimension (new coordinate is last)."""
    dim = cone.dim + 1
    gens = [g + (R0,) for g in cone.generators]
    last = tuple([R0] * cone.dim) + (R1,)
    gens.append(last)
    return PolyhedralCone(dim, generators=gens).synced()


def cross_line(cone):
    """C x R in one higher dimension (new coordinate is last)."""
    dim = cone.dim + 1
    gens = [g + (R0,) for g in cone.generators]
    last = tuple([R0] * cone.dim) + (R1,)
    gens.append(last)
    gens.append(tuple(-x for x in last))
    return PolyhedralCone(dim, generators=gens).synced()


def unit_vector(dim, coord):
    e = [R0] * dim
    e[coord] = R1
    return tuple(e)


def contains_line(cone, direction):
    d = vec(direction)
    return cone.contains(d) and cone.contains(tuple(-x for x in d))


def rank_of_vectors(vectors, dim):
    from conehedge.kernels._pure import _row_reduce

    if not vectors:
        return 0
    pivot_rows, _, _, _ = _row_reduce([vec(v) for v in vectors], dim)
    return len(pivot_rows)


def scale_to_coord_one(v, coord):
    c = v[coord]
    if c <= 0:
        raise ConeError("cannot normalize: nonpositive level coordinate")
    return tuple(x / c for x in v)


ZERO = R0
ONE = R1


def rational(p, q=None):
    return rat(p, q)
