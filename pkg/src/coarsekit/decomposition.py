"""r-disjoint decompositions: scale components, staged decomposition
certificates and their exact/greedy search, fibering witnesses, and the
two-set separator map.

r-disjointness is strict (distance > r); ties at exactly r merge components
(edge rule d <= r).  Certificates are explicit data, never inferred at check
time, and stage nesting is literal, so the hierarchy is a finite tree by
construction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .covers import AsdimCertificate, Cover, check_asdim_certificate
from .errors import PreconditionError, StructuralError
from .maps import FamilyMap, MapFunction, preimage_family, validate_map
from .metric import (
    DEFAULT_TOL,
    FiniteMetricSpace,
    MetricFamily,
    PointSubset,
    ball,
    point_to_set_distance,
    set_distance,
    subset_diameter,
)
from .report import CheckItem, Verdict, fmt_num, verdict


class UnionFind:
    """Array-based union-find with path compression."""

    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, x: int) -> int:
        p = self.parent
        root = x
        while p[root] != root:
            root = p[root]
        while p[x] != root:
            p[x], x = root, p[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if ra > rb:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True

    def blocks(self) -> list[tuple[int, ...]]:
        groups: dict[int, list[int]] = {}
        for i in range(len(self.parent)):
            groups.setdefault(self.find(i), []).append(i)
        return [tuple(groups[r]) for r in sorted(groups)]


@dataclass(frozen=True)
class RPartition:
    """Partition of a space into its components at scale r: the coarsest
    partition into mutually (> r)-separated sets."""

    space_id: str
    r: float
    blocks: tuple[tuple[int, ...], ...]


def r_components(space: FiniteMetricSpace, r: float) -> RPartition:
    """Connected components of the relation d(x, y) <= r via union-find."""
    if r < 0:
        raise PreconditionError("scale r must be >= 0")
    uf = UnionFind(space.n)
    ii, jj = np.nonzero(np.triu(space.dist <= r, k=1))
    for a, b in zip(ii.tolist(), jj.tolist()):
        uf.union(a, b)
    return RPartition(space.id, float(r), tuple(uf.blocks()))


def piece_id(member_id: str, color: int, index: int) -> str:
    return f"{member_id}.{color}.{index}"


@dataclass(frozen=True)
class MemberDecomposition:
    """Colored pieces of one member: ``pieces[c]`` is the tuple of subsets
    declared r-disjoint at color c."""

    member_id: str
    pieces: tuple[tuple[PointSubset, ...], ...]


@dataclass(frozen=True)
class DecompositionCertificate:
    """Finite-stage witness that every member splits into n+1 colors of
    r-disjoint pieces, with either a uniform diameter bound on all pieces or
    a nested certificate over the piece family."""

    family_id: str
    r: float
    n: int
    members: tuple[MemberDecomposition, ...]
    leaf_bound: float | None = None
    child: "DecompositionCertificate | None" = None

    def __post_init__(self):
        if (self.leaf_bound is None) == (self.child is None):
            raise StructuralError(
                "certificate needs exactly one of leaf_bound or child"
            )

    def member_entry(self, member_id: str) -> "MemberDecomposition | None":
        for m in self.members:
            if m.member_id == member_id:
                return m
        return None

    def depth(self) -> int:
        return 1 if self.child is None else 1 + self.child.depth()


def piece_family(
    cert: DecompositionCertificate, family: MetricFamily
) -> MetricFamily:
    """The family of all pieces of all members, as subspaces with ids
    ``<member>.<color>.<index>``."""
    members: list[FiniteMetricSpace] = []
    for entry in cert.members:
        space = family.member(entry.member_id)
        for color, group in enumerate(entry.pieces):
            for k, piece in enumerate(group):
                members.append(
                    space.subspace(piece.indices, piece_id(entry.member_id, color, k))
                )
    return MetricFamily(f"{family.id}|pieces", tuple(members))


def check_decomposition(
    cert: DecompositionCertificate,
    family: MetricFamily,
    tol: float = DEFAULT_TOL,
    _path: str = "",
) -> Verdict:
    """Recursive verification: coverage, per-color r-disjointness, then the
    leaf diameter bound or the child certificate over the piece family.
    The verdict carries the failing path."""
    if cert.family_id != family.id:
        raise StructuralError(
            f"certificate is for {cert.family_id!r}, not family {family.id!r}"
        )
    items: list[CheckItem] = []
    for entry in cert.members:
        family.member(entry.member_id)
    supplied = {m.member_id for m in cert.members}
    for member in family.members:
        path = f"{_path}{member.id}"
        if member.id not in supplied:
            items.append(CheckItem(path, False, "no decomposition supplied for member"))
            continue
        entry = cert.member_entry(member.id)
        if len(entry.pieces) != cert.n + 1:
            items.append(
                CheckItem(
                    path + ".colors",
                    False,
                    f"{len(entry.pieces)} colors supplied, n = {cert.n} needs {cert.n + 1}",
                )
            )
            continue
        covered: set[int] = set()
        for group in entry.pieces:
            for piece in group:
                piece.check_against(member)
                covered.update(piece.indices)
        missing = sorted(set(range(member.n)) - covered)
        if missing:
            items.append(
                CheckItem(
                    path + ".coverage",
                    False,
                    f"point {member.points[missing[0]]!r} not covered",
                )
            )
        else:
            items.append(CheckItem(path + ".coverage", True))
        for color, group in enumerate(entry.pieces):
            ok = True
            for a, b in itertools.combinations(group, 2):
                overlap = set(a.indices) & set(b.indices)
                d = set_distance(member, a, b)
                if overlap or d <= cert.r - tol:
                    items.append(
                        CheckItem(
                            f"{path}.color{color}.disjoint",
                            False,
                            f"pieces at distance {fmt_num(d)} <= r = {fmt_num(cert.r)}",
                        )
                    )
                    ok = False
                    break
            if ok:
                items.append(CheckItem(f"{path}.color{color}.disjoint", True))
    if cert.leaf_bound is not None:
        for entry in cert.members:
            space = family.member(entry.member_id)
            for color, group in enumerate(entry.pieces):
                for k, piece in enumerate(group):
                    diam = subset_diameter(space, piece)
                    pid = piece_id(entry.member_id, color, k)
                    if diam > cert.leaf_bound + tol:
                        items.append(
                            CheckItem(
                                f"{_path}{pid}.bound",
                                False,
                                f"piece diameter {fmt_num(diam)} > leaf bound "
                                f"{fmt_num(cert.leaf_bound)}",
                            )
                        )
        if not any(not i.passed and i.path.endswith(".bound") for i in items):
            items.append(CheckItem(f"{_path}leaf", True))
    else:
        pieces = piece_family(cert, family)
        child_ids = {m.member_id for m in cert.child.members}
        expected = set(pieces.member_ids())
        dangling = sorted(child_ids - expected)
        if dangling:
            raise StructuralError(
                f"child certificate references unknown piece {dangling[0]!r}"
            )
        if cert.child.family_id != pieces.id:
            raise StructuralError(
                f"child certificate is for {cert.child.family_id!r}, expected {pieces.id!r}"
            )
        sub = check_decomposition(cert.child, pieces, tol, _path=_path + "child.")
        items.extend(sub.items)
    return verdict(items)


@dataclass(frozen=True)
class SearchResult:
    certificate: DecompositionCertificate | None
    decided: bool  # exact search decides; a greedy miss is "unknown"

    @property
    def status(self) -> str:
        if self.certificate is not None:
            return "found"
        return "none" if self.decided else "unknown"


EXACT_SEARCH_CEILING = 20


def _component_blocks(space: FiniteMetricSpace, members: list[int], r: float) -> list[list[int]]:
    """Components of the relation d <= r inside the given point set."""
    if not members:
        return []
    uf = UnionFind(len(members))
    for a in range(len(members)):
        for b in range(a + 1, len(members)):
            if space.dist[members[a], members[b]] <= r:
                uf.union(a, b)
    return [[members[i] for i in blk] for blk in uf.blocks()]


def _single_space_certificate(
    space: FiniteMetricSpace, r: float, n: int, leaf_bound: float, coloring: list[int]
) -> DecompositionCertificate:
    groups: list[tuple[PointSubset, ...]] = []
    for c in range(n + 1):
        cls = [i for i, col in enumerate(coloring) if col == c]
        blocks = _component_blocks(space, cls, r)
        groups.append(tuple(PointSubset(space.id, tuple(b)) for b in blocks))
    return DecompositionCertificate(
        family_id=space.id,
        r=float(r),
        n=n,
        members=(MemberDecomposition(space.id, tuple(groups)),),
        leaf_bound=float(leaf_bound),
    )


def search_decomposition(
    space: FiniteMetricSpace,
    r: float,
    n: int,
    leaf_bound: float,
    mode: str = "exact",
    ceiling: int = EXACT_SEARCH_CEILING,
) -> SearchResult:
    """Find an (r, n)-decomposition with piece diameters <= leaf_bound.

    Exact mode enumerates colorings (with pruning on r-disjointness and the
    diameter bound plus color-symmetry breaking) and is an oracle on small
    instances: a certificate is returned iff one exists.  Greedy mode seeds
    pieces by balls of radius leaf_bound/2 and may miss; its empty answer is
    "unknown".
    """
    if mode == "exact":
        if space.n > ceiling:
            raise PreconditionError(
                f"{space.n} points exceeds the exact-search ceiling {ceiling}; "
                "use greedy mode"
            )
        if n > 3:
            raise PreconditionError(
                f"exact search supports n <= 3 (got {n}); use greedy mode"
            )
        coloring = _exact_search(space, r, n, leaf_bound)
        if coloring is None:
            return SearchResult(None, True)
        return SearchResult(
            _single_space_certificate(space, r, n, leaf_bound, coloring), True
        )
    if mode == "greedy":
        coloring = _greedy_search(space, r, n, leaf_bound)
        if coloring is None:
            return SearchResult(None, False)
        return SearchResult(
            _single_space_certificate(space, r, n, leaf_bound, coloring), False
        )
    raise PreconditionError(f"unknown search mode {mode!r}")


def _exact_search(
    space: FiniteMetricSpace, r: float, n: int, leaf_bound: float
) -> list[int] | None:
    """Backtracking over point colorings.

    A coloring is feasible iff inside every color class each component of the
    d <= r relation has diameter <= leaf_bound, since pieces must be unions
    of those components and unions only grow diameters.
    """
    d = space.dist
    npts = space.n
    if npts == 0:
        return []
    coloring = [-1] * npts
    # per color: list of components, each a list of point indices
    comps: list[list[list[int]]] = [[] for _ in range(n + 1)]

    def try_place(p: int, c: int) -> list[list[int]] | None:
        touching = [comp for comp in comps[c] if any(d[p, q] <= r for q in comp)]
        merged = [p] + [q for comp in touching for q in comp]
        for a in range(len(merged)):
            for b in range(a + 1, len(merged)):
                if d[merged[a], merged[b]] > leaf_bound:
                    return None
        return merged

    def backtrack(p: int, used: int) -> bool:
        if p == npts:
            return True
        limit = min(n, used)  # color symmetry: first use of a new color only in order
        for c in range(limit + 1):
            merged = try_place(p, c)
            if merged is None:
                continue
            touching = [comp for comp in comps[c] if any(d[p, q] <= r for q in comp)]
            for comp in touching:
                comps[c].remove(comp)
            comps[c].append(merged)
            coloring[p] = c
            if backtrack(p + 1, max(used, c + 1)):
                return True
            coloring[p] = -1
            comps[c].pop()
            for comp in touching:
                comps[c].append(comp)
        return False

    if backtrack(0, 0):
        return coloring
    return None


def _greedy_search(
    space: FiniteMetricSpace, r: float, n: int, leaf_bound: float
) -> list[int] | None:
    """Seed pieces by closed balls of radius leaf_bound/2 around uncovered
    points, then color the pieces greedily against the > r separation."""
    d = space.dist
    npts = space.n
    uncovered = set(range(npts))
    pieces: list[list[int]] = []
    while uncovered:
        center = min(uncovered)
        b = [i for i in sorted(uncovered) if d[center, i] <= leaf_bound / 2.0]
        pieces.append(b)
        uncovered.difference_update(b)
    piece_colors: list[int] = []
    for k, piece in enumerate(pieces):
        placed = None
        for c in range(n + 1):
            ok = True
            for j in range(k):
                if piece_colors[j] != c:
                    continue
                other = pieces[j]
                if min(d[a, b] for a in piece for b in other) <= r:
                    ok = False
                    break
            if ok:
                placed = c
                break
        if placed is None:
            return None
        piece_colors.append(placed)
    coloring = [0] * npts
    for piece, c in zip(pieces, piece_colors):
        for i in piece:
            coloring[i] = c
    # ball seeding bounds diameters by construction; verify against the bound
    for piece in pieces:
        for a in piece:
            for b in piece:
                if d[a, b] > leaf_bound:
                    return None
    return coloring


def brute_force_decomposable(
    space: FiniteMetricSpace, r: float, n: int, leaf_bound: float
) -> bool:
    """Independent existence oracle: dynamic programming over point subsets.

    A subset is a feasible color class iff all of its d <= r components have
    diameter <= leaf_bound; the space decomposes iff the full set splits into
    at most n+1 feasible classes.
    """
    npts = space.n
    if npts == 0:
        return True
    d = space.dist
    full = (1 << npts) - 1
    feasible = [False] * (full + 1)
    for mask in range(1, full + 1):
        members = [i for i in range(npts) if mask >> i & 1]
        ok = True
        for blk in _component_blocks(space, members, r):
            for a in range(len(blk)):
                for b in range(a + 1, len(blk)):
                    if d[blk[a], blk[b]] > leaf_bound:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        feasible[mask] = ok
    feasible[0] = True
    reachable = {0}
    for _ in range(n + 1):
        nxt = set()
        for covered in reachable:
            if covered == full:
                return True
            rest = full & ~covered
            sub = rest
            while sub:
                if feasible[sub]:
                    nxt.add(covered | sub)
                sub = (sub - 1) & rest
        reachable = nxt
        if full in reachable:
            return True
    return full in reachable


def decomposition_to_cover(
    cert: DecompositionCertificate, member: FiniteMetricSpace
) -> Cover:
    """All pieces of one member as a colored cover: dimension <= n, mesh
    bounded by the leaf bound when the certificate is a leaf."""
    entry = cert.member_entry(member.id)
    if entry is None:
        raise StructuralError(f"certificate has no entry for {member.id!r}")
    elements: list[PointSubset] = []
    colors: list[int] = []
    for color, group in enumerate(entry.pieces):
        for piece in group:
            elements.append(piece)
            colors.append(color)
    return Cover(member.id, tuple(elements), tuple(colors))


def _ranges(indices: tuple[int, ...]) -> str:
    out = []
    start = prev = indices[0]
    for i in indices[1:]:
        if i == prev + 1:
            prev = i
            continue
        out.append(f"{start}-{prev}" if prev > start else f"{start}")
        start = prev = i
    out.append(f"{start}-{prev}" if prev > start else f"{start}")
    return ",".join(out)


def preimage_member_id(subset: PointSubset) -> str:
    return f"{subset.space_id}/{_ranges(subset.indices)}"


def ball_preimage_family(
    fmap: FamilyMap, src: MetricFamily, tgt: MetricFamily, radius: float
) -> tuple[MetricFamily, tuple[PointSubset, ...]]:
    """The preimage family of all closed radius-balls of the target, as
    subspaces with deterministic ids ``<member>/<index ranges>``."""
    balls: list[PointSubset] = []
    for member in tgt.members:
        for y in range(member.n):
            balls.append(ball(member, y, radius))
    subsets = preimage_family(fmap, src, tgt, balls)
    members = tuple(
        src.member(ps.space_id).subspace(ps.indices, preimage_member_id(ps))
        for ps in subsets
    )
    fam = MetricFamily(f"{src.id}|preimages@{fmt_num(radius)}", members)
    return fam, subsets


@dataclass(frozen=True)
class FiberingWitness:
    """A coarse map to a finite-dimension target plus, per scheduled radius,
    a decomposition certificate for the preimage family of all radius-balls."""

    fmap: FamilyMap
    radius_schedule: tuple[float, ...]
    inner: tuple[tuple[float, DecompositionCertificate], ...]
    target_certificate: AsdimCertificate

    def inner_for(self, radius: float) -> DecompositionCertificate | None:
        for r, cert in self.inner:
            if r == radius:
                return cert
        return None


def check_fibering_witness(
    witness: FiberingWitness,
    src: MetricFamily,
    tgt: MetricFamily,
    tol: float = DEFAULT_TOL,
) -> Verdict:
    """All scheduled radii must carry a passing certificate for the ball
    preimage family, the schedule must reach the largest target diameter,
    and the supplied target certificate must pass."""
    validate_map(witness.fmap, src, tgt)
    items: list[CheckItem] = []
    max_diam = max(m.diameter() for m in tgt.members)
    if not witness.radius_schedule or max(witness.radius_schedule) < max_diam:
        items.append(
            CheckItem(
                "schedule",
                False,
                f"largest radius {fmt_num(max(witness.radius_schedule) if witness.radius_schedule else 0)} "
                f"< target diameter {fmt_num(max_diam)}",
            )
        )
    else:
        items.append(CheckItem("schedule", True))
    tgt_verdict = check_asdim_certificate(witness.target_certificate, tgt, tol)
    items.append(
        CheckItem(
            "target",
            tgt_verdict.passed,
            "" if tgt_verdict.passed else tgt_verdict.failures[0].detail,
        )
    )
    for radius in witness.radius_schedule:
        path = f"radius{fmt_num(radius)}"
        cert = witness.inner_for(radius)
        if cert is None:
            items.append(
                CheckItem(path, False, f"missing inner certificate for radius {fmt_num(radius)}")
            )
            continue
        fam, _ = ball_preimage_family(witness.fmap, src, tgt, radius)
        if cert.family_id != fam.id:
            raise StructuralError(
                f"inner certificate at radius {fmt_num(radius)} is for "
                f"{cert.family_id!r}, expected {fam.id!r}"
            )
        sub = check_decomposition(cert, fam, tol)
        items.append(
            CheckItem(
                path,
                sub.passed,
                "" if sub.passed else sub.failures[0].path + ": " + sub.failures[0].detail,
            )
        )
    return verdict(items)


def largest_certified_radius(witness: FiberingWitness, v: Verdict) -> float:
    best = -math.inf
    for item in v.items:
        if item.path.startswith("radius") and item.passed:
            best = max(best, float(item.path[len("radius"):]))
    return best


def union_separator_map(
    space: FiniteMetricSpace, x1: PointSubset, x2: PointSubset
) -> tuple[FiniteMetricSpace, FamilyMap, tuple[float, ...]]:
    """The separator f(x) = d(x, X2) - d(x, X1) for a two-set cover of the
    space, into the realized image values on the line.

    2-Lipschitz, with f^{-1}((-inf, D]) the closed D-neighborhood of X2 and
    f^{-1}([-D, inf)) that of X1.
    """
    x1.check_against(space)
    x2.check_against(space)
    if set(x1.indices) | set(x2.indices) != set(range(space.n)):
        raise PreconditionError(f"X1 and X2 do not cover {space.id!r}")
    values = tuple(
        point_to_set_distance(space, i, x2) - point_to_set_distance(space, i, x1)
        for i in range(space.n)
    )
    levels = sorted(set(values))
    line = FiniteMetricSpace(
        f"{space.id}|separator-line",
        tuple(fmt_num(v) for v in levels),
        np.abs(np.subtract.outer(np.array(levels), np.array(levels))),
    )
    assignment = tuple(levels.index(v) for v in values)
    fmap = FamilyMap(
        space.id, line.id, (MapFunction(space.id, line.id, assignment),)
    )
    return line, fmap, values
