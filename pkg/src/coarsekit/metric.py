"""Finite metric spaces, families, isometric group actions, and the basic
metric-building operations: validation, quotients by finite groups, l^p
products, balls and neighborhoods.

All types are immutable value objects; every operation is a pure function.
Distances are stored as float64. Integer inputs are representable exactly, so
comparisons on integer-valued spaces behave exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError, StructuralError

DEFAULT_TOL = 1e-9


def _frozen_array(values) -> np.ndarray:
    a = np.asarray(values, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """A labeled point set with a full symmetric distance matrix.

    ``pseudo=True`` permits zero distances between distinct points; by
    default they are an axiom violation.
    """

    id: str
    points: tuple[str, ...]
    dist: np.ndarray
    pseudo: bool = False

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "dist", _frozen_array(self.dist))

    @property
    def n(self) -> int:
        return len(self.points)

    def index(self, label: str) -> int:
        try:
            return self.points.index(label)
        except ValueError:
            raise StructuralError(f"space {self.id!r} has no point {label!r}") from None

    def d(self, i: int, j: int) -> float:
        return float(self.dist[i, j])

    def diameter(self) -> float:
        return float(self.dist.max()) if self.n else 0.0

    def subspace(self, indices, sub_id: str) -> "FiniteMetricSpace":
        """Metric restriction to the given point indices (kept in sorted order)."""
        idx = sorted(set(int(i) for i in indices))
        if not idx:
            raise PreconditionError(f"empty subspace of {self.id!r}")
        if idx[0] < 0 or idx[-1] >= self.n:
            raise StructuralError(f"subspace indices out of range for {self.id!r}")
        sel = np.array(idx, dtype=int)
        return FiniteMetricSpace(
            sub_id,
            tuple(self.points[i] for i in idx),
            self.dist[np.ix_(sel, sel)],
            pseudo=self.pseudo,
        )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FiniteMetricSpace)
            and self.id == other.id
            and self.points == other.points
            and self.pseudo == other.pseudo
            and self.dist.shape == other.dist.shape
            and bool(np.array_equal(self.dist, other.dist))
        )

    __hash__ = None


@dataclass(frozen=True)
class MetricFamily:
    """An indexed collection of finite metric spaces treated as one object."""

    id: str
    members: tuple[FiniteMetricSpace, ...]

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise StructuralError(f"family {self.id!r} is empty")
        seen = set()
        for m in self.members:
            if m.id in seen:
                raise StructuralError(f"family {self.id!r} has duplicate member id {m.id!r}")
            seen.add(m.id)

    def member(self, member_id: str) -> FiniteMetricSpace:
        for m in self.members:
            if m.id == member_id:
                return m
        raise StructuralError(f"family {self.id!r} has no member {member_id!r}")

    def member_ids(self) -> tuple[str, ...]:
        return tuple(m.id for m in self.members)


@dataclass(frozen=True)
class PointSubset:
    """A subset of the points of one space, kept as sorted unique indices."""

    space_id: str
    indices: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(sorted(set(int(i) for i in self.indices))))

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, i: int) -> bool:
        return i in set(self.indices)

    def check_against(self, space: FiniteMetricSpace, allow_empty: bool = False) -> None:
        if self.space_id != space.id:
            raise StructuralError(
                f"subset references space {self.space_id!r}, not {space.id!r}"
            )
        if not allow_empty and not self.indices:
            raise StructuralError(f"empty subset of {space.id!r}")
        if self.indices and (self.indices[0] < 0 or self.indices[-1] >= space.n):
            raise StructuralError(f"subset indices out of range for {space.id!r}")


@dataclass(frozen=True)
class GroupAction:
    """A finite group acting on one space by permutations of its point indices.

    ``perms[k]`` is the permutation of element ``elements[k]``: point ``i`` is
    sent to ``perms[k][i]``.  ``compose[i][j]`` is the index of
    ``elements[i] * elements[j]``.
    """

    space_id: str
    elements: tuple[str, ...]
    perms: tuple[tuple[int, ...], ...]
    compose: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "perms", tuple(tuple(p) for p in self.perms))
        object.__setattr__(self, "compose", tuple(tuple(r) for r in self.compose))

    @property
    def order(self) -> int:
        return len(self.elements)


@dataclass(frozen=True)
class Violation:
    kind: str
    witness: tuple
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    space_id: str
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_metric(space: FiniteMetricSpace, tol: float = 0.0) -> ValidationReport:
    """Check every metric axiom and report each violation with a witness.

    Dimension mismatch between the matrix and the point list is a
    StructuralError, not an axiom violation.  ``tol`` loosens the triangle
    and symmetry comparisons (used for numerically constructed spaces).
    """
    d = space.dist
    n = space.n
    if d.ndim != 2 or d.shape != (n, n):
        raise StructuralError(
            f"space {space.id!r}: matrix shape {d.shape} does not match {n} points"
        )
    out: list[Violation] = []
    for i in range(n):
        if d[i, i] != 0.0:
            out.append(Violation("diagonal", (i,), f"d({space.points[i]},{space.points[i]}) = {d[i, i]}"))
    asym = np.argwhere(np.abs(d - d.T) > tol)
    for i, j in asym:
        if i < j:
            out.append(
                Violation(
                    "symmetry",
                    (int(i), int(j)),
                    f"d({space.points[i]},{space.points[j]}) = {d[i, j]} but d({space.points[j]},{space.points[i]}) = {d[j, i]}",
                )
            )
    neg = np.argwhere(d < 0)
    for i, j in neg:
        out.append(Violation("negative", (int(i), int(j)), f"d = {d[i, j]} < 0"))
    if not space.pseudo:
        for i in range(n):
            for j in range(i + 1, n):
                if d[i, j] == 0.0 and d[j, i] == 0.0:
                    out.append(
                        Violation(
                            "zero_distance",
                            (i, j),
                            f"distinct points {space.points[i]},{space.points[j]} at distance 0",
                        )
                    )
    # d[i,k] <= d[i,j] + d[j,k] for all i,j,k; vectorized per intermediate j.
    for j in range(n):
        slack = d - (d[:, j][:, None] + d[j, :][None, :])
        bad = np.argwhere(slack > tol)
        for i, k in bad:
            out.append(
                Violation(
                    "triangle",
                    (int(i), int(j), int(k)),
                    f"d({space.points[i]},{space.points[k]}) = {d[i, k]} > "
                    f"{d[i, j]} + {d[j, k]} via {space.points[j]}",
                )
            )
    return ValidationReport(space.id, tuple(out))


def validate_action(action: GroupAction, space: FiniteMetricSpace) -> None:
    """Reject actions that are not honest isometric group actions.

    Checked exhaustively: identity element, group axioms of the composition
    table, compatibility of the permutation table with composition, and
    isometry of every permutation.
    """
    k = action.order
    n = space.n
    if action.space_id != space.id:
        raise StructuralError(f"action targets {action.space_id!r}, not {space.id!r}")
    if len(action.perms) != k or len(action.compose) != k:
        raise StructuralError("action tables do not match the element list")
    for p in action.perms:
        if sorted(p) != list(range(n)):
            raise StructuralError(f"action on {space.id!r}: not a permutation of {n} points")
    ident = [i for i in range(k) if action.perms[i] == tuple(range(n))]
    if not ident:
        raise StructuralError("no element acts as the identity permutation")
    e = None
    for i in range(k):
        if all(action.compose[i][j] == j and action.compose[j][i] == j for j in range(k)):
            e = i
            break
    if e is None or action.perms[e] != tuple(range(n)):
        raise StructuralError("composition table has no identity acting as identity permutation")
    for row in action.compose:
        if sorted(row) != list(range(k)):
            raise StructuralError("composition table rows must be permutations (invertibility)")
    for col in range(k):
        if sorted(action.compose[i][col] for i in range(k)) != list(range(k)):
            raise StructuralError("composition table columns must be permutations (invertibility)")
    for a in range(k):
        for b in range(k):
            for c in range(k):
                if (
                    action.compose[action.compose[a][b]][c]
                    != action.compose[a][action.compose[b][c]]
                ):
                    raise StructuralError(
                        f"composition not associative at ({action.elements[a]},"
                        f"{action.elements[b]},{action.elements[c]})"
                    )
    # (gh) x = g(h x)
    for a in range(k):
        for b in range(k):
            gh = action.perms[action.compose[a][b]]
            g, h = action.perms[a], action.perms[b]
            if any(gh[x] != g[h[x]] for x in range(n)):
                raise StructuralError(
                    f"permutation table incompatible with composition at "
                    f"({action.elements[a]},{action.elements[b]})"
                )
    d = space.dist
    for idx, p in enumerate(action.perms):
        sel = np.array(p, dtype=int)
        if not np.array_equal(d[np.ix_(sel, sel)], d):
            raise StructuralError(
                f"element {action.elements[idx]!r} is not an isometry of {space.id!r}"
            )


def orbits(action: GroupAction, space: FiniteMetricSpace) -> list[tuple[int, ...]]:
    """Orbits of the action, each sorted, listed by minimal representative."""
    n = space.n
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p in action.perms:
        for i in range(n):
            a, b = find(i), find(p[i])
            if a != b:
                parent[max(a, b)] = min(a, b)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [tuple(groups[r]) for r in sorted(groups)]


def quotient_with_map(
    action: GroupAction, space: FiniteMetricSpace
) -> tuple[FiniteMetricSpace, tuple[int, ...]]:
    """Quotient space together with the point-to-orbit index map.

    d(Fx, Fx') = min over h of d(x, h x').  Orbit representatives are the
    minimal point indices; quotient labels are "F·<representative label>".
    The result is re-validated: an isometric action always yields a true
    metric.
    """
    validate_action(action, space)
    orbs = orbits(action, space)
    reps = [o[0] for o in orbs]
    orbit_of = [0] * space.n
    for qi, o in enumerate(orbs):
        for i in o:
            orbit_of[i] = qi
    m = len(orbs)
    d = space.dist
    q = np.zeros((m, m), dtype=np.float64)
    perm_arrays = [np.array(p, dtype=int) for p in action.perms]
    for a in range(m):
        for b in range(a + 1, m):
            x, y = reps[a], reps[b]
            best = min(float(d[x, p[y]]) for p in perm_arrays)
            q[a, b] = q[b, a] = best
    labels = tuple("F·" + space.points[r] for r in reps)
    result = FiniteMetricSpace(f"{space.id}/q", labels, q, pseudo=space.pseudo)
    report = validate_metric(result)
    if not report.ok:
        raise StructuralError(
            f"quotient of {space.id!r} failed re-validation: {report.violations[0].detail}"
        )
    return result, tuple(orbit_of)


def quotient(space: FiniteMetricSpace, action: GroupAction) -> FiniteMetricSpace:
    return quotient_with_map(action, space)[0]


def product(spaces: list[FiniteMetricSpace], p: float) -> FiniteMetricSpace:
    """l^p product of finitely many spaces.

    Points are tuples in row-major order (last factor varies fastest),
    labeled by joining factor labels with ",".  p = inf takes the max of the
    factor distances.
    """
    if not spaces:
        raise PreconditionError("product of an empty list of spaces")
    if not (p >= 1.0):
        raise PreconditionError(f"p = {p} is not a metric exponent (need p >= 1)")
    sizes = [s.n for s in spaces]
    combos = list(itertools.product(*[range(n) for n in sizes]))
    labels = tuple(
        ",".join(spaces[f].points[c[f]] for f in range(len(spaces))) for c in combos
    )
    per_factor = []
    for f, s in enumerate(spaces):
        idx = np.array([c[f] for c in combos], dtype=int)
        per_factor.append(s.dist[np.ix_(idx, idx)])
    stack = np.stack(per_factor)
    if math.isinf(p):
        d = stack.max(axis=0)
    elif p == 1.0:
        d = stack.sum(axis=0)
    else:
        d = (stack**p).sum(axis=0) ** (1.0 / p)
    pid = "x".join(s.id for s in spaces) + f"|l{p:g}"
    return FiniteMetricSpace(pid, labels, d, pseudo=any(s.pseudo for s in spaces))


def ball(space: FiniteMetricSpace, center: int, radius: float) -> PointSubset:
    """Closed ball {y : d(center, y) <= radius}."""
    if radius < 0:
        raise PreconditionError("ball radius must be >= 0")
    idx = np.nonzero(space.dist[center] <= radius)[0]
    return PointSubset(space.id, tuple(int(i) for i in idx))


def neighborhood(space: FiniteMetricSpace, subset: PointSubset, radius: float) -> PointSubset:
    """Closed neighborhood {x : d(x, subset) <= radius}."""
    subset.check_against(space)
    sel = np.array(subset.indices, dtype=int)
    dmin = space.dist[:, sel].min(axis=1)
    return PointSubset(space.id, tuple(int(i) for i in np.nonzero(dmin <= radius)[0]))


def set_distance(space: FiniteMetricSpace, a: PointSubset, b: PointSubset) -> float:
    """min over pairs of d; inf if either subset is empty."""
    if not a.indices or not b.indices:
        return math.inf
    sa = np.array(a.indices, dtype=int)
    sb = np.array(b.indices, dtype=int)
    return float(space.dist[np.ix_(sa, sb)].min())


def subset_diameter(space: FiniteMetricSpace, a: PointSubset) -> float:
    if not a.indices:
        return 0.0
    sa = np.array(a.indices, dtype=int)
    return float(space.dist[np.ix_(sa, sa)].max())


def point_to_set_distance(space: FiniteMetricSpace, i: int, a: PointSubset) -> float:
    if not a.indices:
        return math.inf
    sa = np.array(a.indices, dtype=int)
    return float(space.dist[i, sa].min())
