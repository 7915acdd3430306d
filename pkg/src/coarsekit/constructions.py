"""Auxiliary metric constructions: the minimax-path ultrametric (floored at
1 off the diagonal), its ball partitions, shell sequences grown by closed
neighborhoods, and the rooted ray-tree embedding for a space covered by
pieces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decomposition import (
    DecompositionCertificate,
    MemberDecomposition,
    RPartition,
    UnionFind,
    r_components,
)
from .errors import PreconditionError
from .maps import FamilyMap, MapFunction
from .metric import (
    FiniteMetricSpace,
    PointSubset,
    neighborhood,
    set_distance,
)
from .report import fmt_num


@dataclass(frozen=True, eq=False)
class UltrametricSpace(FiniteMetricSpace):
    """A finite metric space whose distances satisfy the strong triangle
    inequality d(x,y) <= max(d(x,z), d(z,y)), with d >= 1 off the diagonal."""


def strong_triangle_violations(space: FiniteMetricSpace, limit: int = 1) -> list[tuple[int, int, int]]:
    """Exact witnesses (i, j, k) with d[i,j] > max(d[i,k], d[k,j])."""
    d = space.dist
    out: list[tuple[int, int, int]] = []
    for k in range(space.n):
        bound = np.maximum.outer(d[:, k], d[k, :])
        bad = np.argwhere(d > bound)
        for i, j in bad:
            out.append((int(i), int(j), int(k)))
            if len(out) >= limit:
                return out
    return out


def minimax_ultrametric(space: FiniteMetricSpace) -> UltrametricSpace:
    """Distance = the smallest possible largest hop over chains joining two
    points, floored at 1 off the diagonal.

    Kruskal's sorted-edge union-find: when the edge of weight w first joins
    two components, every cross pair gets distance max(1, w), the maximum
    edge on their minimum-spanning-tree path.  Satisfies the strong triangle
    inequality exactly and d'(x, y) <= max(d(x, y), 1) everywhere.
    """
    n = space.n
    d = space.dist
    out = np.zeros((n, n), dtype=np.float64)
    if n > 1:
        iu, ju = np.triu_indices(n, k=1)
        order = np.lexsort((ju, iu, d[iu, ju]))
        uf = UnionFind(n)
        members: dict[int, list[int]] = {i: [i] for i in range(n)}
        merges = 0
        for e in order:
            a, b = int(iu[e]), int(ju[e])
            ra, rb = uf.find(a), uf.find(b)
            if ra == rb:
                continue
            w = max(1.0, float(d[a, b]))
            block_a = np.array(members[ra], dtype=int)
            block_b = np.array(members[rb], dtype=int)
            out[np.ix_(block_a, block_b)] = w
            out[np.ix_(block_b, block_a)] = w
            uf.union(ra, rb)
            root = uf.find(ra)
            merged = members.pop(ra) + members.pop(rb)
            members[root] = merged
            merges += 1
            if merges == n - 1:
                break
    return UltrametricSpace(f"{space.id}|ultrametric", space.points, out)


def scale_balls_partition(
    u: UltrametricSpace, r: float
) -> tuple[RPartition, DecompositionCertificate]:
    """Partition into closed r-balls, which in an ultrametric coincide or
    are disjoint; emitted with the one-color certificate it witnesses
    (pieces pairwise > r apart, diameters <= r)."""
    part = r_components(u, r)
    cert = DecompositionCertificate(
        family_id=u.id,
        r=float(r),
        n=0,
        members=(
            MemberDecomposition(
                u.id,
                (tuple(PointSubset(u.id, blk) for blk in part.blocks),),
            ),
        ),
        leaf_bound=float(r),
    )
    return part, cert


def shell_sequence(
    space: FiniteMetricSpace, seeds: list[PointSubset]
) -> tuple[list[PointSubset], bool]:
    """Nested shells grown from the given sets by closed neighborhoods:

        shell(1) = seed(1),  shell(k) = B_{k-1}(shell(k-1)) union seed(k).

    If every seed is empty, the lowest-index point starts the sequence.
    Returns the shells and whether their union reaches the whole space.
    """
    for s in seeds:
        s.check_against(space, allow_empty=True)
    if not seeds:
        raise PreconditionError("at least one seed set is required")
    if all(len(s) == 0 for s in seeds):
        first = PointSubset(space.id, (0,))
    else:
        first = seeds[0]
    shells = [first]
    for k in range(2, len(seeds) + 1):
        grown = neighborhood(space, shells[-1], float(k - 1)) if len(shells[-1]) else shells[-1]
        merged = tuple(sorted(set(grown.indices) | set(seeds[k - 1].indices)))
        shells.append(PointSubset(space.id, merged))
    covers = len(shells[-1]) == space.n
    return shells, covers


@dataclass(frozen=True)
class RayTree:
    """A rooted star of rays realized as a finite path-metric space: the
    root plus vertices (ray, level) for levels 1..depth, with
    d((j,m),(j,m')) = |m - m'| and m + m' across rays.  ``depth`` records
    where the infinite rays were truncated."""

    root_label: str
    ray_ids: tuple[str, ...]
    depth: int
    space: FiniteMetricSpace


def build_ray_tree(space_id: str, ray_ids: tuple[str, ...], depth: int) -> RayTree:
    labels = ["root"]
    coords: list[tuple[int, int]] = [(-1, 0)]
    for j, rid in enumerate(ray_ids):
        for m in range(1, depth + 1):
            labels.append(f"r{rid}:{m}")
            coords.append((j, m))
    n = len(labels)
    d = np.zeros((n, n), dtype=np.float64)
    for a in range(n):
        ja, ma = coords[a]
        for b in range(a + 1, n):
            jb, mb = coords[b]
            dd = abs(ma - mb) if (ja == jb or ma == 0 or mb == 0) else ma + mb
            d[a, b] = d[b, a] = dd
    tree = FiniteMetricSpace(f"{space_id}|raytree", tuple(labels), d)
    return RayTree("root", ray_ids, depth, tree)


def is_tree_metric(space: FiniteMetricSpace, quads=None, tol: float = 0.0) -> bool:
    """Four-point condition: among the three pairings of any four points,
    the two largest sums are equal (checked as max <= the other two's max)."""
    import itertools

    d = space.dist
    idx = range(space.n)
    quads = quads if quads is not None else itertools.combinations(idx, 4)
    for w, x, y, z in quads:
        s1 = d[w, x] + d[y, z]
        s2 = d[w, y] + d[x, z]
        s3 = d[w, z] + d[x, y]
        lo, mid, hi = sorted((s1, s2, s3))
        if hi - mid > tol:
            return False
    return True


def ray_tree_embed(
    space: FiniteMetricSpace,
    pieces: list[PointSubset],
    shells: list[PointSubset],
) -> tuple[RayTree, FamilyMap]:
    """Collapse shell(1) to the root and send a point first reached by
    shell(n+1) to level n on the ray of its piece.

    Verified before building: pieces cover the space, shells are nested with
    union the whole space, and at every realized n the piece remainders
    outside shell(n) are pairwise more than n apart.  A violation aborts
    with the witnessing pair, since well-definedness depends on it.
    """
    for p in pieces:
        p.check_against(space)
    for s in shells:
        s.check_against(space, allow_empty=True)
    if not pieces:
        raise PreconditionError("at least one piece is required")
    covered = set()
    for p in pieces:
        covered.update(p.indices)
    if covered != set(range(space.n)):
        missing = sorted(set(range(space.n)) - covered)[0]
        raise PreconditionError(f"pieces do not cover {space.points[missing]!r}")
    for k in range(len(shells) - 1):
        if not set(shells[k].indices) <= set(shells[k + 1].indices):
            raise PreconditionError(f"shells not nested at index {k + 1}")
    if not shells or set(shells[-1].indices) != set(range(space.n)):
        raise PreconditionError("shell union does not reach the whole space")
    for n in range(1, len(shells) + 1):
        shell_set = set(shells[n - 1].indices)
        rem = [
            PointSubset(space.id, tuple(set(p.indices) - shell_set)) for p in pieces
        ]
        for a in range(len(pieces)):
            for b in range(a + 1, len(pieces)):
                if not rem[a].indices or not rem[b].indices:
                    continue
                shared = set(rem[a].indices) & set(rem[b].indices)
                d = set_distance(space, rem[a], rem[b])
                if shared or d <= n:
                    wa = sorted(shared)[0] if shared else None
                    witness = (
                        f"point {space.points[wa]!r} lies in remainders of pieces {a} and {b}"
                        if wa is not None
                        else f"remainders of pieces {a} and {b} at distance {fmt_num(d)} <= {n}"
                    )
                    raise PreconditionError(
                        f"separation hypothesis fails at n = {n}: {witness}"
                    )
    shell_index = [0] * space.n
    for i in range(space.n):
        for n, sh in enumerate(shells, start=1):
            if i in set(sh.indices):
                shell_index[i] = n
                break
    depth = len(shells) + 1
    ray_ids = tuple(str(j) for j in range(len(pieces)))
    tree = build_ray_tree(space.id, ray_ids, depth)
    label_index = {lbl: k for k, lbl in enumerate(tree.space.points)}
    assignment = []
    piece_sets = [set(p.indices) for p in pieces]
    for i in range(space.n):
        level = shell_index[i] - 1
        if level == 0:
            assignment.append(label_index["root"])
            continue
        owners = [j for j, ps in enumerate(piece_sets) if i in ps]
        if len(owners) != 1:
            raise PreconditionError(
                f"point {space.points[i]!r} at level {level} lies in pieces {owners}; "
                "the verified hypothesis should have excluded this"
            )
        assignment.append(label_index[f"r{owners[0]}:{level}"])
    fmap = FamilyMap(
        space.id,
        tree.space.id,
        (MapFunction(space.id, tree.space.id, tuple(assignment)),),
    )
    return tree, fmap
