import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blindspot import nn
from blindspot.runtime import set_thread_count


class TestBuildAndTrivialQueries:
    def test_empty_index_answers_infinity(self):
        tree = nn.build(np.empty((0, 3)))
        res = nn.nearest(tree, (1.0, 2.0, 3.0))
        assert res.distance == np.inf
        assert res.index == -1

    def test_single_point(self):
        tree = nn.build([[1.0, 1.0, 1.0]])
        res = nn.nearest(tree, (1.0, 1.0, 2.0))
        assert res.distance == pytest.approx(1.0)
        assert res.index == 0

    def test_indexed_point_query_is_zero(self):
        pts = np.random.default_rng(0).uniform(size=(500, 3))
        tree = nn.build(pts)
        d, i = nn.nearest_batch(tree, pts)
        assert np.all(d == 0.0)
        np.testing.assert_array_equal(i, np.arange(500))

    def test_two_points_example(self):
        tree = nn.build([[0.0, 0, 0], [10.0, 0, 0]])
        res = nn.nearest(tree, (4.0, 0, 0))
        assert res.distance == pytest.approx(4.0)
        assert res.index == 0

    def test_self_query_large(self):
        pts = np.random.default_rng(1).uniform(-100, 100, size=(100_000, 3))
        tree = nn.build(pts)
        d = nn.query_distances(tree, pts)
        assert np.all(d == 0.0)


class TestTieRule:
    def test_symmetric_tie_picks_lowest_index(self):
        tree = nn.build([[1.0, 0, 0], [-1.0, 0, 0], [0.0, 1.0, 0]])
        assert nn.nearest(tree, (0.0, 0.0, 0.0)).index == 0

    def test_duplicate_points(self):
        tree = nn.build([[5.0, 5, 5], [2.0, 2, 2], [2.0, 2, 2]])
        res = nn.nearest(tree, (2.1, 2.0, 2.0))
        assert res.index == 1

    def test_grid_tie_matches_brute_force(self):
        # integer lattice makes exact ties common
        g = np.arange(4, dtype=np.float64)
        pts = np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1).reshape(-1, 3)
        qs = pts[:27] + 0.5  # each query equidistant to 8 lattice corners
        tree = nn.build(pts)
        d, i = nn.nearest_batch(tree, qs)
        db, ib = nn.brute_force_nearest(pts, qs)
        np.testing.assert_array_equal(d, db)
        np.testing.assert_array_equal(i, ib)


class TestAgainstBruteForce:
    def test_large_random_instance(self):
        rng = np.random.default_rng(7)
        pts = rng.uniform(-50, 50, size=(10_000, 3))
        qs = rng.uniform(-60, 60, size=(10_000, 3))
        tree = nn.build(pts)
        d, i = nn.nearest_batch(tree, qs)
        db, ib = nn.brute_force_nearest(pts, qs)
        assert np.max(np.abs(d - db)) < 1e-12
        np.testing.assert_array_equal(i, ib)

    @settings(deadline=None, max_examples=30)
    @given(seed=st.integers(0, 10_000), n=st.integers(1, 400), m=st.integers(1, 300))
    def test_property_matches_brute_force(self, seed, n, m):
        rng = np.random.default_rng(seed)
        pts = rng.uniform(-10, 10, size=(n, 3))
        if n > 4:  # sprinkle duplicates to exercise ties
            pts[n // 2] = pts[0]
        qs = rng.uniform(-12, 12, size=(m, 3))
        d, i = nn.nearest_batch(nn.build(pts), qs)
        db, ib = nn.brute_force_nearest(pts, qs)
        assert np.max(np.abs(d - db)) < 1e-12
        np.testing.assert_array_equal(i, ib)

    def test_structured_scan_cloud(self):
        # rings plus a vertical face, the shape this index exists for
        rng = np.random.default_rng(8)
        az = np.linspace(0, 2 * np.pi, 720, endpoint=False)
        rings = []
        for r in (2, 5, 9, 14, 20, 27):
            rings.append(np.stack([r * np.cos(az), r * np.sin(az), np.zeros_like(az)], -1))
        face_y, face_z = np.meshgrid(np.linspace(-2, 2, 40), np.linspace(0, 2, 20))
        face = np.stack([np.full(face_y.size, 12.0), face_y.ravel(), face_z.ravel()], -1)
        pts = np.vstack(rings + [face])
        qs = rng.uniform([-5, -30, 0], [35, 30, 2.5], size=(5000, 3))
        d, i = nn.nearest_batch(nn.build(pts), qs)
        db, ib = nn.brute_force_nearest(pts, qs)
        assert np.max(np.abs(d - db)) < 1e-12
        np.testing.assert_array_equal(i, ib)


class TestBatchSemantics:
    def test_empty_query_list(self):
        tree = nn.build(np.random.default_rng(0).uniform(size=(10, 3)))
        d, i = nn.nearest_batch(tree, np.empty((0, 3)))
        assert d.shape == (0,)
        assert i.shape == (0,)

    def test_batch_of_one_equals_nearest(self):
        rng = np.random.default_rng(9)
        pts = rng.uniform(size=(128, 3))
        tree = nn.build(pts)
        q = rng.uniform(size=3)
        res = nn.nearest(tree, q)
        d, i = nn.nearest_batch(tree, q[None, :])
        assert d[0] == res.distance
        assert i[0] == res.index

    def test_results_follow_query_order(self):
        rng = np.random.default_rng(10)
        pts = rng.uniform(size=(512, 3))
        qs = rng.uniform(size=(64, 3))
        tree = nn.build(pts)
        d, i = nn.nearest_batch(tree, qs)
        perm = rng.permutation(64)
        d2, i2 = nn.nearest_batch(tree, qs[perm])
        np.testing.assert_array_equal(d2, d[perm])
        np.testing.assert_array_equal(i2, i[perm])

    def test_thread_count_does_not_change_results(self):
        rng = np.random.default_rng(11)
        pts = rng.uniform(size=(20_000, 3))
        qs = rng.uniform(size=(30_000, 3))
        tree = nn.build(pts)
        outs = []
        for threads in (1, 2):
            set_thread_count(threads)
            outs.append(nn.nearest_batch(tree, qs))
        set_thread_count(None)
        np.testing.assert_array_equal(outs[0][0], outs[1][0])
        np.testing.assert_array_equal(outs[0][1], outs[1][1])


class TestMonotonicity:
    def test_adding_points_never_increases_distance(self):
        rng = np.random.default_rng(12)
        pts = rng.uniform(size=(2000, 3))
        qs = rng.uniform(size=(500, 3))
        d_prev = np.full(500, np.inf)
        for n in (1, 10, 100, 1000, 2000):
            d = nn.query_distances(nn.build(pts[:n]), qs)
            assert np.all(d <= d_prev)
            d_prev = d
