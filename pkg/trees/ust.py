"""
Uniform spanning trees by Wilson's algorithm, loop-erased random walk and
the winding walk that produces choking surfaces around an annulus hole.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateInputError, DisconnectedGraphError, ForcedTreeError
from .structures import Curve, SpanningTree, UnionFind

logger = logging.getLogger(__name__)

WINDING_TOLERANCE = 1e-9


class _UniformBuffer:
    """Hands out uniforms from rng in blocks; a Python float per step is the hot path."""

    def __init__(self, rng, size=8192):
        self.rng = rng
        self.size = size
        self.values = []
        self.pos = 0

    def next(self):
        if self.pos >= len(self.values):
            self.values = self.rng.random(self.size).tolist()
            self.pos = 0
        x = self.values[self.pos]
        self.pos += 1
        return x


def _step(incidence, v, buf):
    nbrs = incidence[v]
    return nbrs[int(buf.next() * len(nbrs))]


def loop_erase(walk):
    """
    Chronological loop erasure. Accepts a Curve or a sequence of hashable
    vertices and returns the same kind of object.
    """
    if isinstance(walk, Curve):
        erased = loop_erase([tuple(p) for p in walk.points.tolist()])
        return Curve(np.array(erased, dtype=float))
    walk = list(walk)
    if not walk:
        raise DegenerateInputError('Cannot loop-erase an empty walk.')
    out = []
    pos = {}
    for x in walk:
        i = pos.get(x)
        if i is None:
            pos[x] = len(out)
            out.append(x)
            continue
        for y in out[i + 1:]:
            del pos[y]
        del out[i + 1:]
    return out


def _default_root(g):
    return g.wired_vertex if g.wired_vertex is not None else 0


def _run_wilson(g, in_tree, parent_edge, rng):
    incidence = g.incidence
    buf = _UniformBuffer(rng)
    n = g.n_vertices
    next_edge = [-1] * n
    next_vertex = [-1] * n
    for start in range(n):
        v = start
        while not in_tree[v]:
            w, e = _step(incidence, v, buf)
            next_edge[v] = e
            next_vertex[v] = w
            v = w
        v = start
        while not in_tree[v]:
            in_tree[v] = True
            parent_edge[v] = next_edge[v]
            v = next_vertex[v]


def _check_connected(g):
    if not g.is_connected():
        raise DisconnectedGraphError('Wilson sampling needs a connected graph.')


def wilson_ust(g, root=None, rng=None):
    """Uniform spanning tree of g, grown from `root` by loop-erased random walks."""
    rng = rng if rng is not None else np.random.default_rng()
    root = _default_root(g) if root is None else root
    _check_connected(g)
    in_tree = [False] * g.n_vertices
    in_tree[root] = True
    parent_edge = [-1] * g.n_vertices
    _run_wilson(g, in_tree, parent_edge, rng)
    parent_edge = np.array(parent_edge, dtype=np.int64)
    return SpanningTree(g, np.sort(parent_edge[parent_edge >= 0]), root, parent_edge)


def wilson_ust_conditioned(g, forced, rng=None):
    """
    Uniform spanning tree of g conditioned to contain the connected acyclic
    edge set `forced` (edge indices or a SpanningTree), by starting Wilson's
    algorithm with `forced` as the current tree.
    """
    rng = rng if rng is not None else np.random.default_rng()
    if isinstance(forced, SpanningTree):
        forced = forced.edges
    forced = sorted(set(int(e) for e in forced))
    if not forced:
        return wilson_ust(g, rng=rng)
    _check_connected(g)

    uf = UnionFind(g.n_vertices)
    touched = set()
    for e in forced:
        a, b = (int(x) for x in g.edges[e])
        if not uf.union(a, b):
            raise ForcedTreeError(f'Forced edges contain a cycle (edge {e}).')
        touched.update((a, b))
    if len({uf.find(v) for v in touched}) != 1:
        raise ForcedTreeError('Forced edges do not form a connected fragment.')

    root = g.wired_vertex if g.wired_vertex in touched else min(touched)
    adjacency = {v: [] for v in touched}
    for e in forced:
        a, b = (int(x) for x in g.edges[e])
        adjacency[a].append((b, e))
        adjacency[b].append((a, e))
    in_tree = [False] * g.n_vertices
    parent_edge = [-1] * g.n_vertices
    in_tree[root] = True
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for w, e in adjacency[v]:
            if not in_tree[w]:
                in_tree[w] = True
                parent_edge[w] = e
                queue.append(w)
    _run_wilson(g, in_tree, parent_edge, rng)
    parent_edge = np.array(parent_edge, dtype=np.int64)
    return SpanningTree(g, np.sort(parent_edge[parent_edge >= 0]), root, parent_edge)


def ust_branch(g, a, b, rng):
    """
    The UST path from a to b, sampled as the loop erasure of a random walk
    from a stopped on hitting b. Returns the vertex list and its Curve.
    """
    buf = _UniformBuffer(rng)
    incidence = g.incidence
    path = [a]
    pos = {a: 0}
    v = a
    while v != b:
        w, _e = _step(incidence, v, buf)
        i = pos.get(w)
        if i is None:
            pos[w] = len(path)
            path.append(w)
        else:
            for y in path[i + 1:]:
                del pos[y]
            del path[i + 1:]
        v = w
    return path, Curve(g.coords[path])


def _wrap(angle):
    return (angle + math.pi) % (2 * math.pi) - math.pi


@dataclass
class ChokingOutcome:
    success: bool
    steps: int
    loop: list = field(default_factory=list)


def choking_start(g, spec):
    """Lattice vertex closest to radius 2r on the positive horizontal axis."""
    cx, cy = spec.center
    return g.nearest_vertex((cx + 2 * spec.r, cy))


def choking_walk(g, start, center, rng):
    """
    Random walk from `start` until it hits a boundary (failure) or its loop
    erasure closes a loop winding once around `center` (success). On success
    the loop's vertices form a choking surface separating the two boundaries.
    """
    stop = set(g.inner_boundary) | set(g.outer_boundary)
    if g.wired_vertex is not None:
        stop.add(g.wired_vertex)
    if start in stop:
        return ChokingOutcome(False, 0)
    theta = np.arctan2(g.coords[:, 1] - center[1], g.coords[:, 0] - center[0]).tolist()
    buf = _UniformBuffer(rng)
    incidence = g.incidence
    path = [start]
    pos = {start: 0}
    wind = [0.0]
    v = start
    steps = 0
    while True:
        w, _e = _step(incidence, v, buf)
        steps += 1
        if w in stop:
            return ChokingOutcome(False, steps)
        turn = _wrap(theta[w] - theta[v])
        i = pos.get(w)
        if i is None:
            pos[w] = len(path)
            path.append(w)
            wind.append(wind[-1] + turn)
        else:
            total = wind[-1] + turn - wind[i]
            if abs(total) >= 2 * math.pi - WINDING_TOLERANCE:
                return ChokingOutcome(True, steps, path[i:])
            for y in path[i + 1:]:
                del pos[y]
            del path[i + 1:]
            del wind[i + 1:]
        v = w
