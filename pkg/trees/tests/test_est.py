import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import ndimage
from scipy.spatial import cKDTree

from trees.est import (
    PointSet, check_vacant_separation, delaunay_graph, droplet_components, droplet_crossing_exists,
    droplet_threshold, est_region_graph, euclidean_mst, sample_poisson, segment_distances,
    vacant_crossing_exists,
)
from trees.grid import AnnulusSpec, Boundary, Rect, RegionGraph
from trees.mst import kruskal_mst
from trees.structures import UnionFind


def _pairs(g, edge_ids):
    return {tuple(sorted(int(x) for x in g.edges[e])) for e in edge_ids}


def raster_vacant_crossing(points, radius, rect, step, direction):
    """Flood fill over pixel centres at distance >= radius from every point."""
    xs = np.arange(rect.x0 + step / 2, rect.x1, step)
    ys = np.arange(rect.y0 + step / 2, rect.y1, step)
    gx, gy = np.meshgrid(xs, ys, indexing='ij')
    centres = np.column_stack([gx.ravel(), gy.ravel()])
    clearance = cKDTree(points).query(centres)[0] if len(points) else np.full(len(centres), np.inf)
    vacant = (clearance >= radius).reshape(gx.shape)
    labels, _ = ndimage.label(vacant)
    if direction == 'vertical':
        labels = labels.T
    start, end = set(labels[0].tolist()), set(labels[-1].tolist())
    return bool((start & end) - {0})


class PoissonTests(SimpleTestCase):

    def test_rectangle_counts_and_containment(self):
        rect = Rect(0, 0, 10, 10)
        counts = []
        for seed in range(20):
            pts = sample_poisson(rect, 0.5, np.random.default_rng(seed))
            self.assertTrue(rect.contains(pts.points).all())
            counts.append(len(pts))
        # mean 400, standard error of the average about 4.5
        self.assertLess(abs(np.mean(counts) - 400), 20)

    def test_annulus_radii(self):
        spec = AnnulusSpec((1, -1), 1.0, 3.0)
        pts = sample_poisson(spec, 0.2, np.random.default_rng(0))
        d = spec.distance(pts.points)
        self.assertTrue(((d >= 1.0 - 1e-12) & (d <= 3.0 + 1e-12)).all())
        self.assertEqual(pts.intensity, 25.0)

    def test_points_outside_the_region(self):
        with self.assertRaises(ValueError):
            PointSet(np.array([[5.0, 5.0]]), Rect(0, 0, 1, 1))


class DelaunayTests(SimpleTestCase):

    def test_collinear_points_give_a_path(self):
        xs = np.array([3.0, 0.0, 2.0, 1.0])
        g = delaunay_graph(np.column_stack([xs, 2 * xs]))
        self.assertIsNone(g.dual)
        self.assertEqual(_pairs(g, range(g.n_edges)), {(1, 3), (2, 3), (0, 2)})

    def test_voronoi_dual_pairs_edges(self):
        pts = sample_poisson(Rect(0, 0, 5, 5), 0.5, np.random.default_rng(3))
        g = delaunay_graph(pts)
        self.assertEqual(g.dual.n_edges, g.n_edges)
        self.assertIs(g.dual.dual, g)
        self.assertTrue(g.is_connected())
        hull = (g.dual.edges == g.dual.wired_vertex).any(axis=1)
        self.assertTrue(np.isinf(g.dual.lengths[hull]).all())

    def test_cocircular_lattice_points(self):
        xs, ys = np.meshgrid(np.arange(3.0), np.arange(3.0), indexing='ij')
        points = np.column_stack([xs.ravel(), ys.ravel()])
        g = delaunay_graph(points)
        self.assertEqual(g.n_edges, 16)
        self.assertEqual(g.dual.n_edges, 16)
        self.assertTrue(g.is_connected())
        sides = np.isclose(g.lengths, 1.0)
        self.assertEqual(int(sides.sum()), 12)
        self.assertTrue(np.allclose(g.lengths[~sides], math.sqrt(2)))
        squares = {tuple(points[list(g.edges[e])].min(axis=0)) for e in np.flatnonzero(~sides)}
        self.assertEqual(squares, {(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)})

    @given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=3, max_value=10))
    @settings(max_examples=60, deadline=None)
    def test_emst_matches_complete_graph_kruskal(self, seed, n):
        rect = Rect(0, 0, 1, 1)
        points = np.random.default_rng(seed).random((n, 2))
        tree = euclidean_mst(PointSet(points, rect))
        complete = np.array([(i, j) for i in range(n) for j in range(i + 1, n)], dtype=np.int64)
        lengths = np.linalg.norm(points[complete[:, 0]] - points[complete[:, 1]], axis=1)
        full = RegionGraph(points, complete, lengths)
        expected = kruskal_mst(full, lengths)
        self.assertEqual(_pairs(tree.graph, tree.edges), _pairs(full, expected.edges))


class BoundaryRuleTests(SimpleTestCase):

    def test_wired_boundary_adds_one_edge_per_point(self):
        spec = AnnulusSpec((0, 0), 1.0, 3.0)
        pts = sample_poisson(spec, 0.3, np.random.default_rng(5))
        free = est_region_graph(pts, Boundary.FREE, Boundary.FREE)
        wired = est_region_graph(pts, Boundary.FREE, Boundary.WIRED)
        self.assertIsNone(free.wired_vertex)
        self.assertEqual(wired.n_edges, free.n_edges + len(pts))
        spokes = wired.lengths[free.n_edges:]
        self.assertTrue(np.allclose(spokes, 3.0 - spec.distance(pts.points)))
        self.assertTrue(wired.inner_boundary)
        self.assertFalse(wired.outer_boundary)

    def test_wired_emst_spans_the_wired_vertex(self):
        spec = AnnulusSpec((0, 0), 1.0, 3.0)
        pts = sample_poisson(spec, 0.3, np.random.default_rng(6))
        t = euclidean_mst(pts, Boundary.FREE, Boundary.WIRED)
        self.assertTrue(t.is_spanning_tree())
        self.assertEqual(t.root, len(pts))


class DropletTests(SimpleTestCase):

    @given(st.integers(min_value=0, max_value=2**32 - 1), st.floats(min_value=0.05, max_value=1.5))
    @settings(max_examples=50, deadline=None)
    def test_components_match_all_pairs(self, seed, p):
        points = np.random.default_rng(seed).random((30, 2)) * 4
        labels = droplet_components(points, p, 0.5)
        uf = UnionFind(len(points))
        for i in range(len(points)):
            for j in range(i + 1, len(points)):
                if np.linalg.norm(points[i] - points[j]) < 2 * p * 0.5:
                    uf.union(i, j)
        for i in range(len(points)):
            for j in range(i + 1, len(points)):
                self.assertEqual(labels[i] == labels[j], uf.connected(i, j))
        self.assertEqual(labels[0], 0)

    @given(st.integers(min_value=0, max_value=2**32 - 1), st.floats(min_value=0.05, max_value=1.0),
           st.floats(min_value=1.0, max_value=3.0))
    @settings(max_examples=50, deadline=None)
    def test_components_only_merge_as_p_grows(self, seed, p, factor):
        points = np.random.default_rng(seed).random((30, 2)) * 4
        small = droplet_components(points, p, 0.5)
        large = droplet_components(points, p * factor, 0.5)
        for label in np.unique(small):
            self.assertEqual(len(np.unique(large[small == label])), 1)
        self.assertLessEqual(large.max(), small.max())

    def test_threshold_is_sharp(self):
        rect = Rect(0, 0, 4, 2)
        for seed in range(5):
            pts = sample_poisson(rect, 0.5, np.random.default_rng(seed))
            th = droplet_threshold(pts, 0.5, rect)
            self.assertTrue(math.isfinite(th))
            self.assertTrue(droplet_crossing_exists(pts, th * (1 + 1e-9), 0.5, rect))
            self.assertFalse(droplet_crossing_exists(pts, th * (1 - 1e-9), 0.5, rect))

    def test_no_points(self):
        rect = Rect(0, 0, 1, 1)
        empty = PointSet(np.empty((0, 2)), rect)
        self.assertEqual(droplet_threshold(empty, 1.0, rect), math.inf)
        self.assertFalse(droplet_crossing_exists(empty, 1.0, 1.0, rect))
        self.assertTrue(vacant_crossing_exists(empty, 1.0, 1.0, rect))


class VacantTests(SimpleTestCase):

    def test_wall_of_discs_blocks_one_direction(self):
        rect = Rect(0, 0, 4, 2)
        wall = np.column_stack([np.full(11, 2.0), np.linspace(0, 2, 11)])
        self.assertFalse(vacant_crossing_exists(wall, 0.2, 1.0, rect, 'horizontal'))
        self.assertTrue(vacant_crossing_exists(wall, 0.2, 1.0, rect, 'vertical'))
        self.assertTrue(vacant_crossing_exists(wall, 0.05, 1.0, rect, 'horizontal'))

    def test_ring_of_discs_blocks_the_annulus(self):
        spec = AnnulusSpec((0, 0), 1.0, 3.0)
        angle = np.linspace(0, 2 * math.pi, 40, endpoint=False)
        ring = 2.0 * np.column_stack([np.cos(angle), np.sin(angle)])
        self.assertFalse(vacant_crossing_exists(ring, 0.2, 1.0, spec))
        self.assertTrue(vacant_crossing_exists(ring, 0.1, 1.0, spec))

    def test_agrees_with_a_raster_flood_fill(self):
        rect = Rect(0.0, 0.0, 2.0, 1.0)
        delta, margin = 0.25, 0.25
        compared = 0
        for seed in range(200):
            rng = np.random.default_rng(seed)
            pts = sample_poisson(rect, delta, rng)
            p = float(rng.uniform(0.2, 0.8))
            radius = p * delta
            step = radius / 8
            for direction in ('horizontal', 'vertical'):
                exact = vacant_crossing_exists(pts, p, delta, rect, direction)
                # clearance within 2 pixels of radius is left undecided by the raster
                if raster_vacant_crossing(pts.points, radius * (1 + margin), rect, step, direction):
                    self.assertTrue(exact, (seed, direction))
                    compared += 1
                elif not raster_vacant_crossing(pts.points, radius * (1 - margin), rect, step, direction):
                    self.assertFalse(exact, (seed, direction))
                    compared += 1
        self.assertGreater(compared, 200)

    def test_segment_distances(self):
        starts = np.array([[0.0, -1.0], [0.0, 1.0], [3.0, 0.0]])
        ends = np.array([[0.0, 1.0], [1.0, 1.0], [4.0, 0.0]])
        d = segment_distances((-1, 0), (1, 0), starts, ends)
        self.assertTrue(np.allclose(d, [0.0, 1.0, 2.0]))

    def test_separation_report(self):
        pts = sample_poisson(Rect(0, 0, 6, 6), 0.5, np.random.default_rng(9))
        report = check_vacant_separation(pts, 0.3)
        self.assertEqual(report.name, 'vacant_separation')
        self.assertGreater(report.checked, 0)
        self.assertAlmostEqual(report.details['threshold'], 0.075)
