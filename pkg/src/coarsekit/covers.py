"""Covers of finite metric spaces and their scale statistics: dimension,
Lebesgue number (open balls), and mesh.  Certificate checking for staged
covers and affine control functions, quotient pushforwards, and colored
product covers.

The Lebesgue number uses open balls exactly as defined; an element equal to
the whole space makes it the distinguished inf sentinel.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from dataclasses import dataclass

from .errors import PreconditionError, StructuralError
from .metric import (
    DEFAULT_TOL,
    FiniteMetricSpace,
    GroupAction,
    MetricFamily,
    PointSubset,
    product,
    quotient_with_map,
    set_distance,
    subset_diameter,
)
from .report import CheckItem, Verdict, fmt_num, verdict


@dataclass(frozen=True)
class Cover:
    """A list of point subsets whose union is the whole space.

    ``colors`` optionally assigns each element a color; colored covers are
    the canonical representation wherever color classes matter.
    """

    space_id: str
    elements: tuple[PointSubset, ...]
    colors: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if self.colors is not None:
            object.__setattr__(self, "colors", tuple(int(c) for c in self.colors))


def validate_cover(cover: Cover, space: FiniteMetricSpace) -> None:
    if cover.space_id != space.id:
        raise StructuralError(f"cover references {cover.space_id!r}, not {space.id!r}")
    if cover.colors is not None and len(cover.colors) != len(cover.elements):
        raise StructuralError("cover colors do not match its element list")
    covered: set[int] = set()
    for el in cover.elements:
        el.check_against(space)
        covered.update(el.indices)
    missing = sorted(set(range(space.n)) - covered)
    if missing:
        raise StructuralError(
            f"cover of {space.id!r} misses point {space.points[missing[0]]!r}"
        )


def cover_dimension(cover: Cover, space: FiniteMetricSpace) -> int:
    """Largest n such that some point lies in n+1 elements."""
    validate_cover(cover, space)
    counts = np.zeros(space.n, dtype=int)
    for el in cover.elements:
        counts[list(el.indices)] += 1
    return int(counts.max()) - 1


def lebesgue_number(cover: Cover, space: FiniteMetricSpace) -> float:
    """Sup of lambda such that every open ball B_lambda(x) lies inside some
    element: min over x of max over elements U containing x of the distance
    from x to the complement of U (inf when U is the whole space)."""
    validate_cover(cover, space)
    n = space.n
    best = np.full(n, -math.inf)
    for el in cover.elements:
        mask = np.zeros(n, dtype=bool)
        mask[list(el.indices)] = True
        if mask.all():
            cand = np.full(n, math.inf)
        else:
            cand = np.where(mask, space.dist[:, ~mask].min(axis=1), -math.inf)
        best = np.maximum(best, cand)
    return float(best.min())


def mesh(cover: Cover, space: FiniteMetricSpace) -> float:
    """Largest element diameter."""
    validate_cover(cover, space)
    return max(subset_diameter(space, el) for el in cover.elements)


def greedy_color(cover: Cover, space: FiniteMetricSpace, r: float, n: int) -> Cover | None:
    """Color an uncolored cover with colors 0..n so that each color class is
    r-disjoint, assigning greedily in element order.  None when some element
    admits no color."""
    validate_cover(cover, space)
    classes: list[list[PointSubset]] = [[] for _ in range(n + 1)]
    colors: list[int] = []
    for el in cover.elements:
        placed = None
        for c in range(n + 1):
            if all(set_distance(space, el, other) > r for other in classes[c]):
                placed = c
                break
        if placed is None:
            return None
        classes[placed].append(el)
        colors.append(placed)
    return Cover(cover.space_id, cover.elements, tuple(colors))


@dataclass(frozen=True)
class AsdimEntry:
    lam: float
    mesh_bound: float
    covers: tuple[tuple[str, Cover], ...]

    def cover_for(self, member_id: str) -> Cover | None:
        for mid, cov in self.covers:
            if mid == member_id:
                return cov
        return None


@dataclass(frozen=True)
class AsdimCertificate:
    """Per-scale covers witnessing dimension <= n, Lebesgue >= lambda and
    mesh <= R, for every member of a family."""

    family_id: str
    n: int
    entries: tuple[AsdimEntry, ...]


def check_asdim_certificate(
    cert: AsdimCertificate, family: MetricFamily, tol: float = DEFAULT_TOL
) -> Verdict:
    """Per-entry pass/fail with a witnessing point or element on failure.

    Dangling member references are a StructuralError."""
    if cert.family_id != family.id:
        raise StructuralError(
            f"certificate is for {cert.family_id!r}, not family {family.id!r}"
        )
    items: list[CheckItem] = []
    for k, entry in enumerate(cert.entries):
        for mid, _ in entry.covers:
            family.member(mid)  # raises on dangling reference
        for member in family.members:
            path = f"entry{k}.{member.id}"
            cov = entry.cover_for(member.id)
            if cov is None:
                items.append(CheckItem(path, False, "no cover supplied for member"))
                continue
            validate_cover(cov, member)
            dim = cover_dimension(cov, member)
            if dim > cert.n:
                counts = np.zeros(member.n, dtype=int)
                for el in cov.elements:
                    counts[list(el.indices)] += 1
                w = int(counts.argmax())
                items.append(
                    CheckItem(
                        path + ".dimension",
                        False,
                        f"point {member.points[w]!r} lies in {dim + 1} elements, n = {cert.n}",
                    )
                )
            else:
                items.append(CheckItem(path + ".dimension", True))
            leb = lebesgue_number(cov, member)
            if leb < entry.lam - tol:
                items.append(
                    CheckItem(
                        path + ".lebesgue",
                        False,
                        f"Lebesgue number {fmt_num(leb)} < lambda {fmt_num(entry.lam)}",
                    )
                )
            else:
                items.append(CheckItem(path + ".lebesgue", True))
            ms = mesh(cov, member)
            if ms > entry.mesh_bound + tol:
                big = max(
                    range(len(cov.elements)),
                    key=lambda i: subset_diameter(member, cov.elements[i]),
                )
                items.append(
                    CheckItem(
                        path + ".mesh",
                        False,
                        f"element {big} has diameter {fmt_num(ms)} > bound "
                        f"{fmt_num(entry.mesh_bound)}",
                    )
                )
            else:
                items.append(CheckItem(path + ".mesh", True))
    return verdict(items)


@dataclass(frozen=True)
class ANEntry:
    scale: float
    covers: tuple[tuple[str, Cover], ...]

    def cover_for(self, member_id: str) -> Cover | None:
        for mid, cov in self.covers:
            if mid == member_id:
                return cov
        return None


@dataclass(frozen=True)
class ANControlCertificate:
    """Colored covers at each scale R with R-disjoint color classes and the
    affine mesh bound mesh <= M R + b."""

    family_id: str
    n: int
    slope: float
    offset: float
    entries: tuple[ANEntry, ...]


def check_an_control(
    cert: ANControlCertificate, family: MetricFamily, tol: float = DEFAULT_TOL
) -> Verdict:
    if cert.family_id != family.id:
        raise StructuralError(
            f"certificate is for {cert.family_id!r}, not family {family.id!r}"
        )
    items: list[CheckItem] = []
    for k, entry in enumerate(cert.entries):
        r = entry.scale
        bound = cert.slope * r + cert.offset
        for mid, _ in entry.covers:
            family.member(mid)
        for member in family.members:
            path = f"entry{k}.{member.id}"
            cov = entry.cover_for(member.id)
            if cov is None:
                items.append(CheckItem(path, False, "no cover supplied for member"))
                continue
            validate_cover(cov, member)
            if cov.colors is None:
                cov = greedy_color(cov, member, r, cert.n)
                if cov is None:
                    items.append(
                        CheckItem(
                            path + ".colors",
                            False,
                            f"uncolored cover not greedily {cert.n + 1}-colorable at R = {fmt_num(r)}",
                        )
                    )
                    continue
            if any(c < 0 or c > cert.n for c in cov.colors):
                items.append(
                    CheckItem(path + ".colors", False, f"colors outside 0..{cert.n}")
                )
                continue
            disj_ok = True
            for c in range(cert.n + 1):
                cls = [e for e, col in zip(cov.elements, cov.colors) if col == c]
                for a, b in itertools.combinations(cls, 2):
                    d = set_distance(member, a, b)
                    overlap = set(a.indices) & set(b.indices)
                    if overlap or d <= r - tol:
                        items.append(
                            CheckItem(
                                path + f".disjoint.color{c}",
                                False,
                                f"elements at distance {fmt_num(d)} <= R = {fmt_num(r)}",
                            )
                        )
                        disj_ok = False
                        break
                if not disj_ok:
                    break
            if disj_ok:
                items.append(CheckItem(path + ".disjoint", True))
            ms = mesh(cov, member)
            if ms > bound + tol:
                items.append(
                    CheckItem(
                        path + ".mesh",
                        False,
                        f"mesh {fmt_num(ms)} > M*R + b = {fmt_num(bound)} at R = {fmt_num(r)}",
                    )
                )
            else:
                items.append(CheckItem(path + ".mesh", True))
    return verdict(items)


def pushforward_quotient_cover(
    space: FiniteMetricSpace, action: GroupAction, cover: Cover
) -> tuple[FiniteMetricSpace, Cover]:
    """Image cover {q(U)} of the quotient by an isometric action.

    Guaranteed: Lebesgue number >= the input's, mesh <= the input's, and
    dimension <= |F| (dim + 1) - 1.
    """
    validate_cover(cover, space)
    qspace, orbit_of = quotient_with_map(action, space)
    elements = tuple(
        PointSubset(qspace.id, tuple(sorted({orbit_of[i] for i in el.indices})))
        for el in cover.elements
    )
    return qspace, Cover(qspace.id, elements)


def product_cover(
    spaces: list[FiniteMetricSpace], covers: list[Cover]
) -> tuple[FiniteMetricSpace, Cover]:
    """Colored cover of the l^1 product whose color-i class consists of the
    products of color-i elements, one from each factor.

    Requires every point of each factor to lie in at least m elements of its
    cover (m = number of factors) and colors in 0..m.  The output is a cover
    by the pigeonhole argument; each color class is r-disjoint whenever the
    factor classes are.
    """
    m = len(spaces)
    if m == 0:
        raise PreconditionError("product cover of zero factors")
    if len(covers) != m:
        raise PreconditionError("one cover per factor is required")
    if m == 1:
        validate_cover(covers[0], spaces[0])
        return spaces[0], covers[0]
    for s, c in zip(spaces, covers):
        validate_cover(c, s)
        if c.colors is None:
            raise PreconditionError(f"cover of {s.id!r} must be colored 0..{m}")
        if any(col < 0 or col > m for col in c.colors):
            raise PreconditionError(f"cover of {s.id!r} has colors outside 0..{m}")
        counts = np.zeros(s.n, dtype=int)
        for el in c.elements:
            counts[list(el.indices)] += 1
        if counts.min() < m:
            bad = int(counts.argmin())
            raise PreconditionError(
                f"point {s.points[bad]!r} of {s.id!r} lies in only {counts[bad]} "
                f"elements; multiplicity {m} required"
            )
    prod = product(list(spaces), 1.0)
    sizes = [s.n for s in spaces]
    strides = [1] * m
    for f in range(m - 2, -1, -1):
        strides[f] = strides[f + 1] * sizes[f + 1]
    elements: list[PointSubset] = []
    colors: list[int] = []
    for color in range(m + 1):
        per_factor = [
            [el for el, c in zip(cov.elements, cov.colors) if c == color]
            for cov in covers
        ]
        if any(not lst for lst in per_factor):
            continue
        for combo in itertools.product(*per_factor):
            grids = np.meshgrid(
                *[np.array(el.indices, dtype=int) for el in combo], indexing="ij"
            )
            flat = sum(g.ravel() * strides[f] for f, g in enumerate(grids))
            elements.append(PointSubset(prod.id, tuple(int(i) for i in flat)))
            colors.append(color)
    out = Cover(prod.id, tuple(elements), tuple(colors))
    covered: set[int] = set()
    for el in out.elements:
        covered.update(el.indices)
    missing = sorted(set(range(prod.n)) - covered)
    if missing:
        raise PreconditionError(
            f"product cover misses point {prod.points[missing[0]]!r}; factor covers "
            "do not satisfy the multiplicity hypothesis with disjoint color classes"
        )
    return prod, out


def product_control_coefficient(n: int) -> int:
    """The multiplier of the linear control function for covers of products
    of n tree-like factors: f(2) = 3 and f(n) = 3 f(n-1) + 2."""
    if n < 2:
        raise PreconditionError("coefficient defined for n >= 2")
    f = 3
    for _ in range(3, n + 1):
        f = 3 * f + 2
    return f
