import numpy as np
import pytest

from coarsekit.decomposition import (
    DecompositionCertificate,
    FiberingWitness,
    MemberDecomposition,
    ball_preimage_family,
    brute_force_decomposable,
    check_decomposition,
    check_fibering_witness,
    decomposition_to_cover,
    piece_family,
    r_components,
    search_decomposition,
    union_separator_map,
)
from coarsekit.covers import cover_dimension, lebesgue_number, mesh
from coarsekit.errors import PreconditionError
from coarsekit.generators import (
    grid_projection_fixture,
    integer_grid,
    path_asdim_certificate,
    path_decomposition,
    unit_path,
)
from coarsekit.maps import FamilyMap, MapFunction
from coarsekit.metric import FiniteMetricSpace, PointSubset
from support import (
    closure_blocks,
    family_of,
    integer_points_space,
    line_space,
    random_symmetric_matrix,
    space_from_matrix,
)


class TestComponents:
    def test_two_clusters(self):
        s = line_space([0, 1, 5, 6])
        part = r_components(s, 2)
        assert part.blocks == ((0, 1), (2, 3))

    def test_r_at_least_diameter_is_one_block(self):
        s = line_space([0, 1, 5, 6])
        assert r_components(s, 6).blocks == ((0, 1, 2, 3),)

    def test_r_zero_with_positive_distances_is_singletons(self):
        s = line_space([0, 1, 5, 6])
        assert r_components(s, 0).blocks == ((0,), (1,), (2,), (3,))

    def test_ties_at_r_merge(self):
        s = line_space([0, 2, 4])
        assert r_components(s, 2).blocks == ((0, 1, 2),)

    def test_against_transitive_closure(self):
        rng = np.random.default_rng(4)
        for trial in range(40):
            n = int(rng.integers(2, 60))
            m = random_symmetric_matrix(rng, n)
            s = FiniteMetricSpace(f"s{trial}", tuple(map(str, range(n))), m, pseudo=True)
            r = float(rng.integers(0, 120))
            assert r_components(s, r).blocks == closure_blocks(m, r)

    def test_monotone_coarsening(self):
        rng = np.random.default_rng(9)
        for trial in range(10):
            n = int(rng.integers(2, 40))
            m = random_symmetric_matrix(rng, n)
            s = FiniteMetricSpace(f"s{trial}", tuple(map(str, range(n))), m, pseudo=True)
            radii = sorted(rng.integers(0, 120, size=4))
            parts = [r_components(s, float(r)).blocks for r in radii]
            for fine, coarse in zip(parts, parts[1:]):
                for blk in fine:
                    assert any(set(blk) <= set(cb) for cb in coarse)


class TestCheckDecomposition:
    def test_unit_path_alternating_blocks(self):
        for r in (1, 2, 5):
            s = unit_path(30, "p")
            cert = path_decomposition(s, r)
            assert check_decomposition(cert, family_of(s, family_id=s.id)).passed

    def test_connected_path_fails_n0_with_small_bound(self):
        s = unit_path(10, "p")
        whole = PointSubset(s.id, tuple(range(10)))
        cert = DecompositionCertificate(
            "p", 1.0, 0, (MemberDecomposition("p", ((whole,),)),), leaf_bound=5.0
        )
        v = check_decomposition(cert, family_of(s, family_id="p"))
        assert not v.passed
        assert any("bound" in item.path for item in v.failures)

    def test_two_stage_grid_certificate(self):
        g = integer_grid(8, 8, "grid")
        fam = family_of(g, family_id="grid")
        r, width = 2.0, 3
        col = {i: int(lbl.partition(",")[2]) for i, lbl in enumerate(g.points)}
        row = {i: int(lbl.partition(",")[0]) for i, lbl in enumerate(g.points)}

        def bands(indices, coord, space_id):
            groups = [[], []]
            start, color = 0, 0
            while start < 8:
                band = tuple(i for i in indices if start <= coord[i] < start + width)
                if band:
                    groups[color].append(PointSubset(space_id, band))
                start += width
                color ^= 1
            return tuple(tuple(g) for g in groups)

        stage1 = MemberDecomposition("grid", bands(range(g.n), row, "grid"))
        parent = DecompositionCertificate("grid", r, 1, (stage1,), leaf_bound=0.0)
        pieces = piece_family(parent, fam)
        child_members = []
        for member in pieces.members:
            orig = {p: g.index(lbl) for p, lbl in enumerate(member.points)}
            coord = {p: col[orig[p]] for p in range(member.n)}
            child_members.append(MemberDecomposition(member.id, bands(range(member.n), coord, member.id)))
        child = DecompositionCertificate(pieces.id, r, 1, tuple(child_members), leaf_bound=4.0)
        cert = DecompositionCertificate("grid", r, 1, (stage1,), child=child)
        assert cert.depth() == 2
        assert check_decomposition(cert, fam).passed

    def test_round_trip_to_cover(self):
        s = unit_path(30, "p")
        cert = path_decomposition(s, 3)
        cov = decomposition_to_cover(cert, s)
        assert cover_dimension(cov, s) <= cert.n
        assert mesh(cov, s) <= cert.leaf_bound
        assert lebesgue_number(cov, s) >= 1


def corner_square(side):
    # four corners of an l^1 square with the given side length
    return space_from_matrix(
        [
            [0, side, side, 2 * side],
            [side, 0, 2 * side, side],
            [side, 2 * side, 0, side],
            [2 * side, side, side, 0],
        ],
        labels=("00", "01", "10", "11"),
        space_id="square",
    )


class TestSearch:
    def test_square_two_colors_found(self):
        s = corner_square(2)  # side r, so each side is one r-connected piece
        result = search_decomposition(s, 2, 1, 3)
        assert result.decided and result.certificate is not None
        assert check_decomposition(result.certificate, family_of(s, family_id=s.id)).passed

    def test_square_one_color_impossible(self):
        s = corner_square(2)
        result = search_decomposition(s, 2, 0, 3)  # bound below the diagonal 4
        assert result.decided and result.certificate is None
        assert not brute_force_decomposable(s, 2, 0, 3)

    def test_single_point_always_decomposes(self):
        s = line_space([0], space_id="pt")
        for r in (0, 1, 10):
            for n in (0, 1, 2):
                res = search_decomposition(s, r, n, 0)
                assert res.certificate is not None

    def test_ceiling_suggests_greedy(self):
        s = unit_path(25, "p")
        with pytest.raises(PreconditionError) as err:
            search_decomposition(s, 1, 1, 1)
        assert "greedy" in str(err.value)

    def test_exact_mode_caps_color_count(self):
        s = unit_path(8, "p")
        with pytest.raises(PreconditionError):
            search_decomposition(s, 1, 4, 1)
        assert search_decomposition(s, 1, 4, 8, mode="greedy").certificate is not None

    def test_greedy_certificates_always_verify(self):
        rng = np.random.default_rng(31)
        for trial in range(10):
            s = integer_points_space(rng, 30, space_id=f"s{trial}")
            res = search_decomposition(s, 2, 2, s.diameter(), mode="greedy")
            if res.certificate is not None:
                assert check_decomposition(res.certificate, family_of(s, family_id=s.id)).passed
            else:
                assert not res.decided  # greedy misses are unknown, never "none"

    def test_exact_agrees_with_subset_dp_oracle(self):
        rng = np.random.default_rng(41)
        for trial in range(25):
            s = integer_points_space(rng, int(rng.integers(2, 8)), dim=1, coord_range=8, space_id=f"s{trial}")
            r = float(rng.integers(0, 8))
            n = int(rng.integers(0, 3))
            bound = float(rng.integers(0, 10))
            res = search_decomposition(s, r, n, bound)
            assert res.decided
            exists = brute_force_decomposable(s, r, n, bound)
            assert (res.certificate is not None) == exists
            if res.certificate is not None:
                assert check_decomposition(res.certificate, family_of(s, family_id=s.id)).passed


class TestFibering:
    def test_grid_projection_passes(self):
        src, tgt, fmap, witness = grid_projection_fixture(6, schedule=(1, 2, 5))
        assert check_fibering_witness(witness, src, tgt).passed

    def test_identity_map_with_trivial_inner_certificates(self):
        s = unit_path(8, "p")
        fam = family_of(s, family_id="P")
        fmap = FamilyMap("P", "P", (MapFunction("p", "p", tuple(range(8))),))
        target_cert = path_asdim_certificate(fam, [1, 2])
        inner = []
        for radius in (7.0,):
            pre_fam, _ = ball_preimage_family(fmap, fam, fam, radius)
            members = tuple(
                MemberDecomposition(m.id, ((PointSubset(m.id, tuple(range(m.n))),),))
                for m in pre_fam.members
            )
            inner.append(
                (radius, DecompositionCertificate(pre_fam.id, 0.0, 0, members, leaf_bound=7.0))
            )
        witness = FiberingWitness(fmap, (7.0,), tuple(inner), target_cert)
        assert check_fibering_witness(witness, fam, fam).passed

    def test_missing_radius_fails_with_radius_named(self):
        src, tgt, fmap, witness = grid_projection_fixture(6, schedule=(1, 2, 5))
        pruned = FiberingWitness(
            witness.fmap,
            witness.radius_schedule,
            tuple((r, c) for r, c in witness.inner if r != 2.0),
            witness.target_certificate,
        )
        v = check_fibering_witness(pruned, src, tgt)
        assert not v.passed
        assert any("radius2" in item.path and "missing" in item.detail for item in v.failures)

    def test_schedule_must_reach_target_diameter(self):
        src, tgt, fmap, witness = grid_projection_fixture(6, schedule=(1, 2))
        v = check_fibering_witness(witness, src, tgt)
        assert not v.passed
        assert any(item.path == "schedule" for item in v.failures)


class TestSeparator:
    def test_equal_halves_give_zero_map(self):
        s = unit_path(5, "p")
        whole = PointSubset("p", tuple(range(5)))
        line, fmap, values = union_separator_map(s, whole, whole)
        assert values == (0.0,) * 5

    def test_path_split_example(self):
        s = unit_path(11, "p")
        x1 = PointSubset("p", tuple(range(0, 6)))
        x2 = PointSubset("p", tuple(range(5, 11)))
        _, _, values = union_separator_map(s, x1, x2)
        assert values[0] == 5 and values[10] == -5 and values[5] == 0

    def test_two_lipschitz_and_sublevel_sets(self):
        rng = np.random.default_rng(13)
        for trial in range(20):
            s = integer_points_space(rng, int(rng.integers(3, 15)), space_id=f"s{trial}")
            idx = list(range(s.n))
            rng.shuffle(idx)
            cut = int(rng.integers(1, s.n))
            overlap = int(rng.integers(0, 3))
            a = sorted(idx[: cut + overlap])
            b = sorted(idx[cut:] + idx[:overlap])
            if not a or not b:
                continue
            x1, x2 = PointSubset(s.id, tuple(a)), PointSubset(s.id, tuple(b))
            _, _, values = union_separator_map(s, x1, x2)
            for i in range(s.n):
                for j in range(s.n):
                    assert abs(values[i] - values[j]) <= 2 * s.dist[i, j]
            for bound in (0.0, 1.0, 3.0, float(s.diameter())):
                sub = {i for i in range(s.n) if values[i] <= bound}
                balls2 = {i for i in range(s.n) if min(s.dist[i, j] for j in x2.indices) <= bound}
                assert sub == balls2
                sup = {i for i in range(s.n) if values[i] >= -bound}
                balls1 = {i for i in range(s.n) if min(s.dist[i, j] for j in x1.indices) <= bound}
                assert sup == balls1

    def test_cover_precondition(self):
        s = unit_path(4, "p")
        with pytest.raises(PreconditionError):
            union_separator_map(s, PointSubset("p", (0,)), PointSubset("p", (1,)))
