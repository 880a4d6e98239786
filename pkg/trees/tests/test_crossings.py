import itertools

import networkx as nx
import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from trees.crossings import (
    CrossingQuery, crossing_exists, long_edge_crossings, max_disjoint_crossings, percolation_crossing_count,
    semipath_crossing_count, tree_traversal_count,
)
from trees.exceptions import GeometryError
from trees.grid import AnnulusSpec, Boundary, Rect, RegionGraph, build_lattice_annulus, build_lattice_box
from trees.mst import draw_call_numbers, kruskal_mst, occupied_subgraph
from trees.structures import SpanningTree


def brute_force_crossings(n, edges, sources, sinks):
    """Largest family of vertex-disjoint source-sink paths, by exhaustive search."""
    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    graph.add_edges_from(edges)
    ends = sources | sinks
    paths = set()
    for s in sources:
        for t in sinks:
            for path in nx.all_simple_paths(graph, s, t):
                if not ends & set(path[1:-1]):
                    paths.add(frozenset(path))
    paths = sorted(paths, key=sorted)

    def best(start, used):
        top = 0
        for i in range(start, len(paths)):
            if not paths[i] & used:
                top = max(top, 1 + best(i + 1, used | paths[i]))
        return top

    return best(0, frozenset())


@st.composite
def small_queries(draw):
    n = draw(st.integers(min_value=2, max_value=6))
    pairs = list(itertools.combinations(range(n), 2))
    edges = [pair for pair in pairs if draw(st.booleans())]
    roles = draw(st.lists(st.sampled_from(['source', 'sink', 'none']), min_size=n, max_size=n))
    sources = frozenset(v for v, role in enumerate(roles) if role == 'source')
    sinks = frozenset(v for v, role in enumerate(roles) if role == 'sink')
    return n, edges, sources, sinks


class MaxFlowTests(SimpleTestCase):

    @given(small_queries())
    @settings(max_examples=150, deadline=None)
    def test_matches_exhaustive_search(self, query):
        n, edges, sources, sinks = query
        q = CrossingQuery(n, np.array(edges, dtype=np.int64).reshape(-1, 2), sources, sinks)
        self.assertEqual(max_disjoint_crossings(q), brute_force_crossings(n, edges, sources, sinks))

    def test_exempt_hub_is_shared(self):
        edges = [(0, 2), (1, 2), (2, 3), (2, 4)]
        plain = CrossingQuery(5, edges, {0, 1}, {3, 4})
        hub = CrossingQuery(5, edges, {0, 1}, {3, 4}, exempt={2})
        self.assertEqual(max_disjoint_crossings(plain), 1)
        self.assertEqual(max_disjoint_crossings(hub), 2)

    def test_shared_terminal(self):
        with self.assertRaises(GeometryError):
            CrossingQuery(3, [(0, 1)], {0, 1}, {1, 2})

    def test_no_sources(self):
        self.assertEqual(max_disjoint_crossings(CrossingQuery(2, [(0, 1)], set(), {1}, direct=2)), 2)


class RectangleTests(SimpleTestCase):

    def setUp(self):
        self.g = build_lattice_box(1.0, Rect(0, 0, 3, 2))

    def test_full_box(self):
        everything = np.arange(self.g.n_edges)
        self.assertEqual(percolation_crossing_count(self.g, everything, direction='horizontal'), 3)
        self.assertEqual(percolation_crossing_count(self.g, everything, direction='vertical'), 4)
        self.assertEqual(percolation_crossing_count(self.g, []), 0)
        self.assertFalse(crossing_exists(self.g, []))

    def test_existence_agrees_with_counts(self):
        g = build_lattice_box(1.0, Rect(0, 0, 6, 6))
        for seed in range(20):
            occupied = occupied_subgraph(g, draw_call_numbers(g, np.random.default_rng(seed)), 0.5)
            for direction in ('horizontal', 'vertical'):
                self.assertEqual(crossing_exists(g, occupied, direction=direction),
                                 percolation_crossing_count(g, occupied, direction=direction) > 0)


class AnnulusTests(SimpleTestCase):

    def setUp(self):
        self.g = build_lattice_annulus(0.25, AnnulusSpec((0, 0), 1.0, 3.0, Boundary.FREE, Boundary.WIRED))

    def test_spanning_tree_crosses_its_own_annulus(self):
        t = kruskal_mst(self.g, draw_call_numbers(self.g, np.random.default_rng(0)))
        self.assertGreaterEqual(tree_traversal_count(t), 1)
        self.assertEqual(long_edge_crossings(t, self.g.region), [])

    def test_sub_shell_count_of_a_lattice_tree(self):
        g = build_lattice_annulus(0.25, AnnulusSpec((0, 0), 0.5, 4.0, Boundary.FREE, Boundary.WIRED))
        t = kruskal_mst(g, draw_call_numbers(g, np.random.default_rng(1)))
        sub = AnnulusSpec((0, 0), 1.0, 3.0)
        self.assertGreaterEqual(tree_traversal_count(t, sub), 1)
        self.assertEqual(long_edge_crossings(t, sub), [])

    def test_semipaths_dominate_primal_paths(self):
        for seed in range(10):
            u = draw_call_numbers(self.g, np.random.default_rng(seed))
            occupied = occupied_subgraph(self.g, u, 0.5)
            self.assertGreaterEqual(semipath_crossing_count(self.g, u),
                                    percolation_crossing_count(self.g, occupied))

    def test_long_edge_counts_as_a_traversal(self):
        region = AnnulusSpec((0, 0), 0.25, 4.0, Boundary.FREE, Boundary.FREE)
        g = RegionGraph(np.array([[0.5, 0.0], [3.5, 0.0]]), [(0, 1)], [3.0], region=region)
        t = SpanningTree.from_edges(g, [0])
        sub = AnnulusSpec((0, 0), 1.0, 3.0)
        self.assertEqual(long_edge_crossings(t, sub), [0])
        self.assertEqual(tree_traversal_count(t, sub), 1)
