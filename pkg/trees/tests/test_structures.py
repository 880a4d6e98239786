import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from trees.exceptions import DegenerateInputError
from trees.grid import Rect, build_lattice_box
from trees.structures import CheckReport, Curve, SpanningTree, UnionFind


class UnionFindTests(SimpleTestCase):

    @given(st.lists(st.tuples(st.integers(0, 19), st.integers(0, 19)), max_size=40))
    @settings(max_examples=200, deadline=None)
    def test_agrees_with_naive_merging(self, pairs):
        uf = UnionFind(20)
        groups = [{v} for v in range(20)]
        for a, b in pairs:
            ga = next(g for g in groups if a in g)
            gb = next(g for g in groups if b in g)
            self.assertEqual(uf.union(a, b), ga is not gb)
            if ga is not gb:
                groups.remove(gb)
                ga |= gb
        self.assertEqual(uf.components, len(groups))
        for group in groups:
            members = sorted(group)
            self.assertTrue(all(uf.connected(members[0], v) for v in members))
        labels = uf.labels()
        self.assertEqual(len(set(labels.tolist())), len(groups))


class CurveTests(SimpleTestCase):

    def test_consecutive_duplicates_collapse(self):
        c = Curve(np.array([[0, 0], [0, 0], [1, 0], [1, 0], [1, 1]], dtype=float))
        self.assertEqual(len(c), 3)
        self.assertEqual(c.length(), 2.0)
        self.assertEqual(c.reversed().points.tolist(), [[1, 1], [1, 0], [0, 0]])

    def test_refine(self):
        c = Curve(np.array([[0.0, 0.0], [1.0, 0.0]])).refine(0.25)
        self.assertEqual(len(c), 5)
        self.assertTrue(np.all(np.diff(c.points[:, 0]) <= 0.25 + 1e-12))
        with self.assertRaises(DegenerateInputError):
            c.refine(0)

    def test_empty(self):
        with self.assertRaises(DegenerateInputError):
            Curve(np.empty((0, 2)))


class SpanningTreeTests(SimpleTestCase):

    def test_path_between_corners(self):
        g = build_lattice_box(1.0, Rect(0, 0, 2, 1))
        # comb: the bottom row plus every vertical edge
        edges = [e for e in range(g.n_edges)
                 if g.coords[g.edges[e, 0], 1] != g.coords[g.edges[e, 1], 1] or g.coords[g.edges[e, 0], 1] == 0]
        t = SpanningTree.from_edges(g, edges)
        self.assertTrue(t.is_spanning_tree())
        a, b = g.nearest_vertex((0, 1)), g.nearest_vertex((2, 1))
        path = t.path(a, b)
        self.assertEqual([tuple(g.coords[v]) for v in path], [(0, 1), (0, 0), (1, 0), (2, 0), (2, 1)])
        self.assertEqual(t.degree(g.nearest_vertex((1, 0))), 3)

    def test_forest_is_not_spanning(self):
        g = build_lattice_box(1.0, Rect(0, 0, 2, 1))
        t = SpanningTree.from_edges(g, [0])
        self.assertFalse(t.is_spanning_tree())
        self.assertEqual(t.path(0, g.n_vertices - 1), [])


class CheckReportTests(SimpleTestCase):

    def test_merge_and_summary(self):
        a = CheckReport('dual_mst', checked=3)
        b = CheckReport('dual_mst', checked=2, violations=[{'edge': 1}])
        self.assertTrue(a.passed)
        a.merge(b)
        self.assertFalse(a.passed)
        self.assertEqual(a.summary(), 'dual_mst: 5 checked, 1 violation(s)')
