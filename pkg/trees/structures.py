"""
Shared containers for the sampling core: union-find, curves, spanning trees
and the report returned by every deterministic or statistical check.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING, Iterable

import numpy as np

from .exceptions import DegenerateInputError

if TYPE_CHECKING:
    from .grid import RegionGraph


class UnionFind:
    """Disjoint sets over 0..n-1 with union by size and path halving."""

    def __init__(self, n):
        self.parent = list(range(n))
        self.size = [1] * n
        self.components = n

    def find(self, x):
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a, b):
        """Merge the sets of a and b. Returns False if they were already joined."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.components -= 1
        return True

    def connected(self, a, b):
        return self.find(a) == self.find(b)

    def labels(self):
        """Canonical component labels, numbered by first appearance."""
        seen = {}
        out = np.empty(len(self.parent), dtype=np.int64)
        for v in range(len(self.parent)):
            out[v] = seen.setdefault(self.find(v), len(seen))
        return out


@dataclass(frozen=True, eq=False)
class Curve:
    """
    Ordered polyline of 2D points. Consecutive duplicates are collapsed on
    construction, so the stored representative never stalls.
    """
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if len(pts) == 0:
            raise DegenerateInputError('A curve needs at least one point.')
        if len(pts) > 1:
            keep = np.ones(len(pts), dtype=bool)
            keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
            pts = pts[keep]
        pts.setflags(write=False)
        object.__setattr__(self, 'points', pts)

    def __len__(self):
        return len(self.points)

    def __eq__(self, other):
        return isinstance(other, Curve) and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash(self.points.tobytes())

    def reversed(self):
        return Curve(self.points[::-1])

    @property
    def start(self):
        return self.points[0]

    @property
    def end(self):
        return self.points[-1]

    def length(self):
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())

    def refine(self, step):
        """Insert points so consecutive points are at most `step` apart."""
        if step <= 0:
            raise DegenerateInputError('Refinement step must be positive.')
        if len(self.points) == 1:
            return self
        pieces = []
        for a, b in zip(self.points[:-1], self.points[1:]):
            n = max(1, int(np.ceil(np.linalg.norm(b - a) / step)))
            t = np.arange(n)[:, None] / n
            pieces.append(a + t * (b - a))
        pieces.append(self.points[-1:])
        return Curve(np.vstack(pieces))


@dataclass(eq=False)
class SpanningTree:
    """
    Edge subset of a RegionGraph forming a spanning tree (or forest), with
    parent edges pointing toward the root of each component.
    """
    graph: 'RegionGraph'
    edges: np.ndarray
    root: int
    parent_edge: np.ndarray

    @classmethod
    def from_edges(cls, graph, edges: Iterable[int], root=0):
        edges = np.array(sorted(set(int(e) for e in edges)), dtype=np.int64)
        parent_edge = np.full(graph.n_vertices, -1, dtype=np.int64)
        adjacency = _tree_adjacency(graph, edges)
        seen = np.zeros(graph.n_vertices, dtype=bool)
        order = [root] + [v for v in range(graph.n_vertices) if v != root]
        for start in order:
            if seen[start]:
                continue
            seen[start] = True
            queue = deque([start])
            while queue:
                v = queue.popleft()
                for w, e in adjacency[v]:
                    if not seen[w]:
                        seen[w] = True
                        parent_edge[w] = e
                        queue.append(w)
        return cls(graph=graph, edges=edges, root=root, parent_edge=parent_edge)

    def __len__(self):
        return len(self.edges)

    @cached_property
    def edge_set(self):
        return frozenset(int(e) for e in self.edges)

    @cached_property
    def adjacency(self):
        return _tree_adjacency(self.graph, self.edges)

    def parent(self, v):
        e = self.parent_edge[v]
        if e < 0:
            return -1
        return self.graph.other_end(e, v)

    def path_to_root(self, v):
        path = [v]
        while self.parent_edge[path[-1]] >= 0:
            path.append(self.parent(path[-1]))
        return path

    def path(self, a, b):
        """Vertices of the tree path from a to b, or [] if they lie in different components."""
        up_a = self.path_to_root(a)
        up_b = self.path_to_root(b)
        if up_a[-1] != up_b[-1]:
            return []
        on_a = {v: i for i, v in enumerate(up_a)}
        for j, v in enumerate(up_b):
            if v in on_a:
                return up_a[:on_a[v] + 1] + up_b[:j][::-1]
        return []

    def degree(self, v):
        return len(self.adjacency[v])

    def is_spanning_tree(self):
        n = self.graph.n_vertices
        if len(self.edges) != n - 1:
            return False
        uf = UnionFind(n)
        for e in self.edges:
            a, b = self.graph.edges[e]
            if not uf.union(int(a), int(b)):
                return False
        return uf.components == 1


def _tree_adjacency(graph, edges):
    adjacency = [[] for _ in range(graph.n_vertices)]
    for e in edges:
        a, b = (int(x) for x in graph.edges[e])
        adjacency[a].append((b, int(e)))
        adjacency[b].append((a, int(e)))
    return adjacency


def enumerate_spanning_trees(graph):
    """All spanning trees of a small graph as frozensets of edge indices (brute force)."""
    n = graph.n_vertices
    found = []
    for subset in itertools.combinations(range(graph.n_edges), n - 1):
        uf = UnionFind(n)
        if all(uf.union(*(int(x) for x in graph.edges[e])) for e in subset):
            found.append(frozenset(subset))
    return found


@dataclass
class CheckReport:
    """Outcome of a structural or statistical check: what was checked and what failed."""
    name: str
    checked: int = 0
    violations: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return not self.violations

    def merge(self, other):
        self.checked += other.checked
        self.violations.extend(other.violations)
        return self

    def summary(self):
        status = 'passed' if self.passed else f'{len(self.violations)} violation(s)'
        return f'{self.name}: {self.checked} checked, {status}'
