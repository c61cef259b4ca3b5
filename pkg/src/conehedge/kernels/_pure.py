"""Hot kernels, pure-Python reference implementation.

Two primitives live here because together they dominate runtime:

* ``dual_description`` -- extreme rays and lineality of ``{x : Ax >= 0}``
  by incremental halfspace insertion with the combinatorial adjacency
  test (the classic double-description scheme, specialized to exact
  rational arithmetic and small ambient dimension).
* ``simplex_two_phase`` -- dense two-phase simplex with Bland's rule,
  exact rationals throughout, infeasible/unbounded as first-class
  outcomes.

``conehedge.kernels`` prefers the compiled twin ``_fast`` (same
algorithms, Cython) and falls back to this module; both must produce
bit-identical results, which the test suite enforces.
"""

from __future__ import annotations

from conehedge._rat import R0, R1, canon_line, canon_ray, dot, is_zero_vec

LP_OPTIMAL = 0
LP_INFEASIBLE = 1
LP_UNBOUNDED = 2

REL_LE = -1
REL_EQ = 0
REL_GE = 1


def _row_reduce(rows, dim):
    """Gaussian elimination; returns (pivot row indices, pivot columns)."""
    work = [list(r) for r in rows]
    pivot_rows = []
    pivot_cols = []
    used = [False] * len(rows)
    for col in range(dim):
        sel = -1
        for i in range(len(rows)):
            if not used[i] and work[i][col] != 0:
                sel = i
                break
        if sel < 0:
            continue
        used[sel] = True
        pivot_rows.append(sel)
        pivot_cols.append(col)
        inv = R1 / work[sel][col]
        work[sel] = [v * inv for v in work[sel]]
        for i in range(len(rows)):
            if i != sel and work[i][col] != 0:
                f = work[i][col]
                work[i] = [a - f * b for a, b in zip(work[i], work[sel])]
    return pivot_rows, pivot_cols, work, used


def _nullspace(rows, dim):
    """Basis of {x : r.x = 0 for all rows}, exact."""
    if not rows:
        basis = []
        for j in range(dim):
            e = [R0] * dim
            e[j] = R1
            basis.append(tuple(e))
        return basis
    pivot_rows, pivot_cols, work, used = _row_reduce(rows, dim)
    free_cols = [c for c in range(dim) if c not in pivot_cols]
    basis = []
    for fc in free_cols:
        v = [R0] * dim
        v[fc] = R1
        for pr, pc in zip(pivot_rows, pivot_cols):
            v[pc] = -work[pr][fc]
        basis.append(tuple(v))
    return basis


def _invert(mat, dim):
    """Inverse of a dim x dim rational matrix (must be nonsingular)."""
    work = [list(row) + [R1 if i == j else R0 for j in range(dim)] for i, row in enumerate(mat)]
    for col in range(dim):
        sel = -1
        for i in range(col, dim):
            if work[i][col] != 0:
                sel = i
                break
        if sel < 0:
            raise ValueError("singular matrix")
        work[col], work[sel] = work[sel], work[col]
        inv = R1 / work[col][col]
        work[col] = [v * inv for v in work[col]]
        for i in range(dim):
            if i != col and work[i][col] != 0:
                f = work[i][col]
                work[i] = [a - f * b for a, b in zip(work[i], work[col])]
    return [[work[i][dim + j] for j in range(dim)] for i in range(dim)]


def dual_description(normals, dim):
    """Extreme rays and lineality basis of ``P = {x : n.x >= 0 for n in normals}``.

    Returns ``(lineality, rays)``: canonical primitive-integer tuples,
    lexicographically sorted.  ``P = span(lineality) + cone(rays)`` and the
    rays are extreme modulo the lineality space.
    """
    cleaned = []
    seen = set()
    for n in normals:
        c = canon_ray(n)
        if is_zero_vec(c) or c in seen:
            continue
        seen.add(c)
        cleaned.append(c)

    lineality = [canon_line(v) for v in _nullspace(cleaned, dim)]

    # Work in the pointed cone P' = P intersect lineality-orthogonal.
    rows = list(cleaned)
    for l in lineality:
        rows.append(l)
        rows.append(tuple(-x for x in l))

    if not rows:  # dim 0 cannot occur; full-space case has lineality rows
        return sorted(lineality), []

    pivot_rows, _, _, _ = _row_reduce(rows, dim)
    if len(pivot_rows) < dim:
        raise ValueError("internal: extended system not full rank")
    base_idx = pivot_rows
    base = [rows[i] for i in base_idx]
    binv = _invert(base, dim)

    # Initial simplicial cone {x : base.x >= 0}: rays are columns of base^-1.
    rays = []
    active = []
    for j in range(dim):
        r = canon_ray(tuple(binv[i][j] for i in range(dim)))
        rays.append(r)
        active.append(((1 << dim) - 1) ^ (1 << j))

    processed = dim
    rest = [rows[i] for i in range(len(rows)) if i not in set(base_idx)]
    for a in rest:
        vals = [dot(a, r) for r in rays]
        pos = [i for i, v in enumerate(vals) if v > 0]
        neg = [i for i, v in enumerate(vals) if v < 0]
        zero = [i for i, v in enumerate(vals) if v == 0]
        bit = 1 << processed
        if not neg:
            for i in zero:
                active[i] |= bit
            processed += 1
            continue
        new_rays = []
        new_active = []
        new_seen = set()
        for ip in pos:
            for im in neg:
                mask = active[ip] & active[im]
                adjacent = True
                for k in range(len(rays)):
                    if k != ip and k != im and (mask & ~active[k]) == 0:
                        adjacent = False
                        break
                if not adjacent:
                    continue
                w = canon_ray(
                    tuple(
                        vals[ip] * rays[im][t] - vals[im] * rays[ip][t]
                        for t in range(dim)
                    )
                )
                if is_zero_vec(w) or w in new_seen:
                    continue
                new_seen.add(w)
                new_rays.append(w)
                new_active.append(mask | bit)
        kept_rays = []
        kept_active = []
        for i in pos:
            kept_rays.append(rays[i])
            kept_active.append(active[i])
        for i in zero:
            kept_rays.append(rays[i])
            kept_active.append(active[i] | bit)
        rays = kept_rays + new_rays
        active = kept_active + new_active
        processed += 1

    return sorted(lineality), sorted(rays)


def _pivot(T, zrows, basis, leave, enter):
    prow = T[leave]
    piv = prow[enter]
    if piv != R1:
        inv = R1 / piv
        T[leave] = prow = [v * inv for v in prow]
    width = len(prow)
    for row in T:
        if row is prow:
            continue
        f = row[enter]
        if f != 0:
            for j in range(width):
                row[j] = row[j] - f * prow[j]
    for zrow in zrows:
        f = zrow[enter]
        if f != 0:
            for j in range(width):
                zrow[j] = zrow[j] - f * prow[j]
    basis[leave] = enter


def _bland(T, zrow, zrows, basis, allowed):
    """Minimize; returns LP_OPTIMAL or LP_UNBOUNDED.

    Entering columns follow Dantzig pricing (most negative reduced cost)
    until a run of degenerate pivots suggests stalling, then Bland's rule
    takes over until the objective strictly improves again.  Bland's rule
    excludes cycling, Dantzig keeps the typical pivot count low, and the
    switchover is deterministic, so results stay reproducible.
    """
    ncols = len(zrow) - 1
    m = len(T)
    stall = 0
    while True:
        enter = -1
        if stall < 12:
            best_cost = R0
            for j in range(ncols):
                if allowed[j] and zrow[j] < best_cost:
                    best_cost = zrow[j]
                    enter = j
        else:
            for j in range(ncols):
                if allowed[j] and zrow[j] < 0:
                    enter = j
                    break
        if enter < 0:
            return LP_OPTIMAL
        leave = -1
        best = None
        for i in range(m):
            a = T[i][enter]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave < 0:
            return LP_UNBOUNDED
        stall = stall + 1 if best == 0 else 0
        _pivot(T, [zrow] + zrows, basis, leave, enter)


def simplex_two_phase(ncols, rows, rels, rhs, obj):
    """Minimize ``obj . x`` s.t. ``rows[i] . x (rels[i]) rhs[i]``, ``x >= 0``.

    rels entries are REL_LE / REL_EQ / REL_GE.  Returns
    ``(status, x, value)`` with x a list of length ncols (None unless
    optimal).  Exact arithmetic; Bland's rule in both phases.
    """
    m = len(rows)
    # Normalize so artificials are needed only for equalities and
    # strictly-positive >= rows: homogeneous >= rows flip to <= (slack
    # basis stays feasible), negative right-hand sides flip sign.
    nrows = []
    nrels = []
    nrhs = []
    for i in range(m):
        row = list(rows[i])
        rel = rels[i]
        b = rhs[i]
        if b < 0 or (b == 0 and rel == REL_GE):
            row = [-v for v in row]
            b = -b
            rel = -rel
        nrows.append(row)
        nrels.append(rel)
        nrhs.append(b)

    slack_of = [-1] * m
    art_of = [-1] * m
    col = ncols
    for i in range(m):
        if nrels[i] != REL_EQ:
            slack_of[i] = col
            col += 1
    n_art_start = col
    for i in range(m):
        if nrels[i] == REL_EQ or nrels[i] == REL_GE:
            art_of[i] = col
            col += 1
    total = col

    T = []
    basis = []
    for i in range(m):
        row = nrows[i] + [R0] * (total - ncols) + [nrhs[i]]
        if slack_of[i] >= 0:
            row[slack_of[i]] = R1 if nrels[i] == REL_LE else -R1
        if art_of[i] >= 0:
            row[art_of[i]] = R1
            basis.append(art_of[i])
        else:
            basis.append(slack_of[i])
        T.append(row)

    allowed = [True] * total
    have_art = n_art_start < total

    if have_art:
        zrow1 = [R0] * (total + 1)
        for j in range(n_art_start, total):
            zrow1[j] = R1
        zrow2 = [R0] * (total + 1)
        for j in range(ncols):
            zrow2[j] = obj[j]
        for i in range(m):
            if basis[i] >= n_art_start:
                brow = T[i]
                for j in range(total + 1):
                    zrow1[j] = zrow1[j] - brow[j]
        status = _bland(T, zrow1, [zrow2], basis, allowed)
        if status != LP_OPTIMAL or zrow1[-1] != 0:
            return LP_INFEASIBLE, None, None
        # Pivot leftover artificials out of the basis; drop rows that are
        # identically zero on the real columns (redundant constraints).
        drop = []
        for i in range(m):
            if basis[i] >= n_art_start:
                enter = -1
                for j in range(n_art_start):
                    if T[i][j] != 0:
                        enter = j
                        break
                if enter >= 0:
                    _pivot(T, [zrow1, zrow2], basis, i, enter)
                else:
                    drop.append(i)
        if drop:
            T = [T[i] for i in range(m) if i not in drop]
            basis = [basis[i] for i in range(m) if i not in drop]
            m = len(T)
        for j in range(n_art_start, total):
            allowed[j] = False
        zrow = zrow2
    else:
        zrow = [R0] * (total + 1)
        for j in range(ncols):
            zrow[j] = obj[j]
        for i in range(m):
            bj = basis[i]
            f = zrow[bj]
            if f != 0:
                brow = T[i]
                for j in range(total + 1):
                    zrow[j] = zrow[j] - f * brow[j]

    status = _bland(T, zrow, [], basis, allowed)
    if status == LP_UNBOUNDED:
        return LP_UNBOUNDED, None, None
    x = [R0] * ncols
    for i in range(m):
        if basis[i] < ncols:
            x[basis[i]] = T[i][-1]
    value = R0
    for j in range(ncols):
        if obj[j] != 0 and x[j] != 0:
            value += obj[j] * x[j]
    return LP_OPTIMAL, x, value
