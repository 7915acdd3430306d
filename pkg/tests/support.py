"""Shared fixtures and independent oracles for the test suite.

Random spaces are built from integer-coordinate point sets so that every
stored distance is an exact float64 integer: triangle inequalities, set
distances and quotient minima then compare exactly, with no rounding slack.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from coarsekit.metric import FiniteMetricSpace, GroupAction, MetricFamily, PointSubset


def line_space(values, space_id="line", labels=None):
    arr = np.asarray(values, dtype=np.float64)
    d = np.abs(np.subtract.outer(arr, arr))
    labels = labels or tuple(str(v) for v in values)
    return FiniteMetricSpace(space_id, tuple(labels), d)


def space_from_matrix(rows, space_id="X", labels=None, pseudo=False):
    d = np.asarray(rows, dtype=np.float64)
    labels = labels or tuple(chr(ord("a") + i) for i in range(d.shape[0]))
    return FiniteMetricSpace(space_id, tuple(labels), d, pseudo=pseudo)


def integer_points_space(rng, n, dim=2, coord_range=20, metric="l1", space_id="X"):
    """Random integer point cloud with the l^1 or l^inf metric: exact and
    always a valid (pseudo-free after dedup) metric space."""
    seen = set()
    pts = []
    while len(pts) < n:
        candidate = tuple(int(v) for v in rng.integers(0, coord_range, size=dim))
        if candidate not in seen:
            seen.add(candidate)
            pts.append(candidate)
    a = np.array(pts, dtype=np.float64)
    diffs = np.abs(a[:, None, :] - a[None, :, :])
    d = diffs.sum(axis=2) if metric == "l1" else diffs.max(axis=2)
    labels = tuple("p" + "_".join(str(int(c)) for c in p) for p in pts)
    return FiniteMetricSpace(space_id, labels, d)


def random_symmetric_matrix(rng, n, high=100):
    """Symmetric, zero-diagonal, non-negative integer matrix; not
    necessarily a metric.  Component structure tests only compare d <= r."""
    m = rng.integers(1, high, size=(n, n)).astype(np.float64)
    m = np.triu(m, k=1)
    m = m + m.T
    return m


def cyclic_isometric_action(rng, base: FiniteMetricSpace, order: int):
    """A Z/order action: a permutation built from disjoint order-cycles,
    acting on the orbit-sum symmetrization of the base space.

    The symmetrized distance sum_g d(gx, gy) is an exact integer for integer
    bases, so invariance holds exactly.
    """
    n = base.n
    perm = list(range(n))
    indices = list(rng.permutation(n))
    while len(indices) >= order:
        cycle = indices[:order]
        indices = indices[order:]
        for k in range(order):
            perm[cycle[k]] = cycle[(k + 1) % order]
    powers = [tuple(range(n))]
    for _ in range(order - 1):
        prev = powers[-1]
        powers.append(tuple(perm[prev[i]] for i in range(n)))
    d = np.zeros((n, n))
    for p in powers:
        sel = np.array(p, dtype=int)
        d += base.dist[np.ix_(sel, sel)]
    sym = FiniteMetricSpace(base.id + "|sym", base.points, d)
    elements = tuple("e" if k == 0 else f"g{k}" for k in range(order))
    compose = tuple(tuple((i + j) % order for j in range(order)) for i in range(order))
    action = GroupAction(sym.id, elements, tuple(powers), compose)
    return sym, action


def family_of(*spaces, family_id="fam"):
    return MetricFamily(family_id, tuple(spaces))


def subset(space, labels):
    return PointSubset(space.id, tuple(space.index(l) for l in labels))


# independent oracles


def brute_quotient_distance(space, action, orbit_a, orbit_b):
    """min over representatives and group elements, fully enumerated."""
    best = np.inf
    for x in orbit_a:
        for y in orbit_b:
            for p in action.perms:
                best = min(best, space.dist[x, p[y]])
    return best


def brute_lebesgue(cover_sets, space):
    """Largest lambda among realized distances (or inf) such that every open
    lambda-ball is inside some cover element, checked by direct simulation."""
    n = space.n
    sets = [set(s) for s in cover_sets]
    candidates = sorted({float(v) for v in space.dist.ravel() if v > 0})

    def ok(lam):
        for x in range(n):
            b = {y for y in range(n) if space.dist[x, y] < lam}
            if not any(b <= s for s in sets):
                return False
        return True

    if any(len(s) == n for s in sets):
        return np.inf
    best = 0.0
    for lam in candidates:
        if ok(lam):
            best = lam
    return best


@lru_cache(maxsize=None)
def _chain_position_arrays(n_others: int, size: int):
    perms = list(itertools.permutations(range(n_others), size))
    return np.array(perms, dtype=int).reshape(len(perms), size)


def brute_minimax(space):
    """All-chains minimax: minimum over every injective chain of the largest
    hop, floored at 1 off the diagonal."""
    n = space.n
    d = space.dist
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            others = np.array([k for k in range(n) if k not in (i, j)], dtype=int)
            best = float(d[i, j])
            for size in range(1, len(others) + 1):
                pos = _chain_position_arrays(len(others), size)
                seq = others[pos]
                cnt = seq.shape[0]
                full = np.concatenate(
                    [np.full((cnt, 1), i), seq, np.full((cnt, 1), j)], axis=1
                )
                hops = d[full[:, :-1], full[:, 1:]].max(axis=1)
                best = min(best, float(hops.min()))
            out[i, j] = out[j, i] = max(1.0, best)
    return out


def closure_blocks(dist, r):
    """Components of d <= r by matrix squaring (transitive closure)."""
    a = (np.asarray(dist) <= r)
    np.fill_diagonal(a, True)
    cur = a.astype(np.float32)
    while True:
        nxt = ((cur @ cur) > 0).astype(np.float32)
        if np.array_equal(nxt, cur):
            break
        cur = nxt
    a = cur > 0
    reps = a.argmax(axis=1)  # first reachable index = canonical representative
    blocks = {}
    for i, rep in enumerate(reps):
        blocks.setdefault(int(rep), []).append(i)
    return tuple(tuple(blocks[k]) for k in sorted(blocks))


def random_cover_sets(rng, space, elements=4):
    """Random covering collection: a few random balls patched with
    singletons for anything left uncovered."""
    n = space.n
    sets = []
    for _ in range(elements):
        c = int(rng.integers(0, n))
        radius = float(rng.integers(0, int(space.diameter()) + 1))
        sets.append(tuple(int(i) for i in np.nonzero(space.dist[c] <= radius)[0]))
    covered = set().union(*[set(s) for s in sets]) if sets else set()
    for i in range(n):
        if i not in covered:
            sets.append((i,))
    return sets
