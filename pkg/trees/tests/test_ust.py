from collections import Counter, deque

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from trees.exceptions import DegenerateInputError, ForcedTreeError
from trees.grid import AnnulusSpec, Boundary, Rect, build_lattice_annulus, build_lattice_box
from trees.structures import Curve, enumerate_spanning_trees
from trees.ust import choking_start, choking_walk, loop_erase, ust_branch, wilson_ust, wilson_ust_conditioned


def last_exit_erasure(walk):
    """Loop erasure by last exits: after each kept vertex jump past its final visit."""
    out = []
    i = 0
    while True:
        v = walk[i]
        out.append(v)
        last = max(j for j, x in enumerate(walk) if x == v)
        if last == len(walk) - 1:
            return out
        i = last + 1


class LoopEraseTests(SimpleTestCase):

    def test_examples(self):
        self.assertEqual(loop_erase([0, 1, 2, 1, 3]), [0, 1, 3])
        self.assertEqual(loop_erase([0, 1, 0]), [0])
        self.assertEqual(loop_erase([5]), [5])

    def test_empty_walk(self):
        with self.assertRaises(DegenerateInputError):
            loop_erase([])

    def test_curve_input(self):
        walk = Curve(np.array([[0, 0], [1, 0], [1, 1], [1, 0], [2, 0]], dtype=float))
        erased = loop_erase(walk)
        self.assertIsInstance(erased, Curve)
        self.assertEqual(erased.points.tolist(), [[0, 0], [1, 0], [2, 0]])

    @given(st.lists(st.integers(min_value=0, max_value=6), min_size=1, max_size=60))
    @settings(max_examples=300, deadline=None)
    def test_matches_last_exit_erasure(self, walk):
        erased = loop_erase(walk)
        self.assertEqual(erased, last_exit_erasure(walk))
        self.assertEqual(len(erased), len(set(erased)))
        self.assertEqual(erased[0], walk[0])
        self.assertEqual(erased[-1], walk[-1])


class WilsonTests(SimpleTestCase):

    def test_spanning_tree(self):
        g = build_lattice_box(1.0, Rect(0, 0, 4, 4))
        t = wilson_ust(g, rng=np.random.default_rng(3))
        self.assertTrue(t.is_spanning_tree())
        self.assertEqual(len(t), g.n_vertices - 1)

    def test_same_seed_same_tree(self):
        g = build_lattice_annulus(0.25, AnnulusSpec((0, 0), 1.0, 3.0))
        a = wilson_ust(g, rng=np.random.default_rng(11))
        b = wilson_ust(g, rng=np.random.default_rng(11))
        self.assertEqual(a.edge_set, b.edge_set)
        self.assertEqual(a.root, g.wired_vertex)

    def test_uniform_on_a_small_grid(self):
        g = build_lattice_box(1.0, Rect(0, 0, 2, 1))
        trees = enumerate_spanning_trees(g)
        self.assertEqual(len(trees), 15)
        rng = np.random.default_rng(2024)
        counts = Counter(frozenset(wilson_ust(g, root=2, rng=rng).edge_set) for _ in range(6000))
        self.assertTrue(set(counts) <= set(trees))
        observed = [counts[t] for t in trees]
        self.assertGreater(stats.chisquare(observed).pvalue, 1e-4)

    def test_conditioned_keeps_forced_edges(self):
        g = build_lattice_box(1.0, Rect(0, 0, 3, 3))
        forced = [0, 1]
        t = wilson_ust_conditioned(g, forced, rng=np.random.default_rng(5))
        self.assertTrue(t.is_spanning_tree())
        self.assertTrue(set(forced) <= t.edge_set)

    def test_conditioned_rejects_cycles_and_gaps(self):
        g = build_lattice_box(1.0, Rect(0, 0, 1, 1))
        with self.assertRaises(ForcedTreeError):
            wilson_ust_conditioned(g, [0, 1, 2, 3])
        h = build_lattice_box(1.0, Rect(0, 0, 3, 3))
        far = [e for e in range(h.n_edges) if not set(h.edges[e].tolist()) & set(h.edges[0].tolist())][0]
        with self.assertRaises(ForcedTreeError):
            wilson_ust_conditioned(h, [0, far])


class BranchTests(SimpleTestCase):

    def test_branch_is_a_simple_lattice_path(self):
        g = build_lattice_box(1.0, Rect(0, 0, 8, 8))
        a, b = g.nearest_vertex((0, 0)), g.nearest_vertex((8, 8))
        path, curve = ust_branch(g, a, b, np.random.default_rng(9))
        self.assertEqual(path[0], a)
        self.assertEqual(path[-1], b)
        self.assertEqual(len(path), len(set(path)))
        neighbours = [{w for w, _e in g.incidence[v]} for v in range(g.n_vertices)]
        self.assertTrue(all(y in neighbours[x] for x, y in zip(path, path[1:])))
        self.assertEqual(len(curve), len(path))


class ChokingTests(SimpleTestCase):

    def setUp(self):
        self.g = build_lattice_annulus(0.125, AnnulusSpec((0, 0), 1.0, 3.0, Boundary.FREE, Boundary.WIRED))

    def _separates(self, loop):
        g = self.g
        blocked = set(loop)
        seen = set(g.inner_boundary)
        queue = deque(seen)
        while queue:
            v = queue.popleft()
            for w, _e in g.incidence[v]:
                if w not in seen and w not in blocked:
                    seen.add(w)
                    queue.append(w)
        return g.wired_vertex not in seen

    def test_successful_walks_close_a_separating_loop(self):
        start = choking_start(self.g, self.g.region)
        successes = 0
        for seed in range(200):
            outcome = choking_walk(self.g, start, (0.0, 0.0), np.random.default_rng(seed))
            self.assertGreater(outcome.steps, 0)
            if not outcome.success:
                self.assertEqual(outcome.loop, [])
                continue
            successes += 1
            loop = outcome.loop
            neighbours = {w for w, _e in self.g.incidence[loop[-1]]}
            self.assertIn(loop[0], neighbours)
            self.assertTrue(self._separates(loop))
        self.assertGreater(successes, 0)

    def test_start_on_the_boundary_fails_at_once(self):
        start = next(iter(self.g.inner_boundary))
        outcome = choking_walk(self.g, start, (0.0, 0.0), np.random.default_rng(0))
        self.assertFalse(outcome.success)
        self.assertEqual(outcome.steps, 0)
