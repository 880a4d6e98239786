"""
Counting disjoint traversals of annuli and rectangles.

Every count reduces to Menger's theorem: the maximal number of
vertex-disjoint source-to-sink paths is a max-flow on the vertex-split
digraph, where each vertex becomes an in/out pair joined by a unit arc.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import networkx as nx
import numpy as np
from networkx.algorithms.flow import dinitz

from .exceptions import GeometryError
from .grid import BOUNDARY_TOLERANCE, AnnulusSpec, Boundary, Rect, Side, planar_dual
from .structures import UnionFind

logger = logging.getLogger(__name__)

_ENDS = {'horizontal': ('left', 'right'), 'vertical': ('bottom', 'top')}


@dataclass(frozen=True)
class CrossingQuery:
    """
    Which edges may be used, where paths start and end, and which vertices
    (wired boundary vertices) may be shared by any number of paths.
    `direct` counts traversals already resolved outside the flow network:
    single vertices lying on both boundaries and edges jumping the region.
    """
    n_vertices: int
    edges: np.ndarray
    sources: frozenset
    sinks: frozenset
    exempt: frozenset = frozenset()
    directed: bool = False
    direct: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'edges', np.asarray(self.edges, dtype=np.int64).reshape(-1, 2))
        object.__setattr__(self, 'sources', frozenset(int(v) for v in self.sources))
        object.__setattr__(self, 'sinks', frozenset(int(v) for v in self.sinks))
        object.__setattr__(self, 'exempt', frozenset(int(v) for v in self.exempt))
        if self.sources & self.sinks:
            raise GeometryError('A crossing query cannot use a vertex as both source and sink.')


def _split_network(q: CrossingQuery):
    n = q.n_vertices
    source, sink = 2 * n, 2 * n + 1
    big = n + 1
    net = nx.DiGraph()
    net.add_nodes_from((source, sink))
    used = set(q.sources) | set(q.sinks) | set(q.edges.ravel().tolist())
    net.add_edges_from(
        (2 * v, 2 * v + 1, {'capacity': big if v in q.exempt else 1}) for v in used
    )
    arcs = [(2 * a + 1, 2 * b, {'capacity': big}) for a, b in q.edges.tolist() if a != b]
    if not q.directed:
        arcs += [(2 * b + 1, 2 * a, {'capacity': big}) for a, b in q.edges.tolist() if a != b]
    net.add_edges_from(arcs)
    net.add_edges_from((source, 2 * s, {'capacity': big}) for s in q.sources)
    net.add_edges_from((2 * t + 1, sink, {'capacity': big}) for t in q.sinks)
    return net, source, sink


def max_disjoint_crossings(q: CrossingQuery):
    """Maximal number of vertex-disjoint source-to-sink paths in the query's edge set."""
    if not q.sources or not q.sinks:
        return q.direct
    net, source, sink = _split_network(q)
    flow = nx.maximum_flow_value(net, source, sink, flow_func=dinitz)
    return int(round(flow)) + q.direct


def _same_annulus(spec, region):
    return (isinstance(region, AnnulusSpec) and spec.center == region.center
            and spec.r == region.r and spec.R == region.R)


def _finalize(g, edges, in_play, sources, sinks, exempt, extra=0):
    both = (sources & sinks) - exempt
    if (sources & sinks) & exempt:
        raise GeometryError('A wired vertex cannot serve as both boundaries of a crossing.')
    sources = sources - both
    sinks = sinks - both
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    keep = in_play[edges[:, 0]] & in_play[edges[:, 1]]
    if both:
        blocked = np.isin(edges, list(both)).any(axis=1)
        keep &= ~blocked
    return CrossingQuery(g.n_vertices, edges[keep], sources, sinks, exempt, direct=len(both) + extra)


def annulus_query(g, edge_ids, spec: AnnulusSpec | None = None):
    """
    Crossing query for the shell `spec` using edges `edge_ids` of g.

    When `spec` is g's own region every vertex takes part: free sides
    contribute their tagged boundary vertices and wired sides the wired
    vertex itself. For a sub-shell, only vertices inside it take part and
    a vertex is on a boundary when it has a g-neighbour beyond that boundary.
    """
    spec = g.region if spec is None else spec
    if not isinstance(spec, AnnulusSpec):
        raise GeometryError('Annulus crossings need an annulus.')
    if spec.is_disc:
        raise GeometryError('A disc has no inner boundary to cross from.')
    edge_ids = np.asarray(edge_ids, dtype=np.int64)
    edges = g.edges[edge_ids] if len(edge_ids) else np.empty((0, 2), dtype=np.int64)

    if _same_annulus(spec, g.region):
        in_play = np.ones(g.n_vertices, dtype=bool)
        sources, sinks, exempt = set(), set(), set()
        for side, target in ((Side.INNER, sources), (Side.OUTER, sinks)):
            bc = (g.bc_inner if side == Side.INNER else g.bc_outer) or g.bc_outer
            if bc == Boundary.WIRED and g.wired_vertex is not None:
                target.add(g.wired_vertex)
                exempt.add(g.wired_vertex)
            else:
                target.update(g.inner_boundary if side == Side.INNER else g.outer_boundary)
        return _finalize(g, edges, in_play, frozenset(sources), frozenset(sinks), frozenset(exempt))

    tol = BOUNDARY_TOLERANCE * (g.delta or 1.0)
    d = spec.distance(g.coords)
    with np.errstate(invalid='ignore'):
        in_shell = (d >= spec.r - tol) & (d <= spec.R + tol)
        inside = d < spec.r - tol
        outside = d > spec.R + tol
    wired_side = np.zeros(g.n_edges, dtype=np.int8)
    if g.wired_vertex is not None:
        at_wired = (g.edges == g.wired_vertex).any(axis=1)
        wired_side[at_wired] = g.edge_sides[at_wired]
    sources, sinks = set(), set()
    for e, (a, b) in enumerate(g.edges.tolist()):
        for x, y in ((a, b), (b, a)):
            if not in_shell[x]:
                continue
            if inside[y] or (y == g.wired_vertex and wired_side[e] == Side.INNER):
                sources.add(x)
            elif outside[y] or (y == g.wired_vertex and wired_side[e] == Side.OUTER):
                sinks.add(x)
    sources.update(v for v in g.inner_boundary if in_shell[v])
    sinks.update(v for v in g.outer_boundary if in_shell[v])
    extra = len(_jumping_edges(g, edge_ids, spec, inside, outside, wired_side))
    return _finalize(g, edges, in_shell, frozenset(sources), frozenset(sinks), frozenset(), extra)


def _jumping_edges(g, edge_ids, spec, inside, outside, wired_side):
    out = []
    for e in np.asarray(edge_ids, dtype=np.int64).tolist():
        a, b = g.edges[e]
        ends = []
        for x in (a, b):
            if x == g.wired_vertex:
                ends.append('in' if wired_side[e] == Side.INNER else 'out')
            elif inside[x]:
                ends.append('in')
            elif outside[x]:
                ends.append('out')
            else:
                ends.append(None)
        if set(ends) == {'in', 'out'}:
            out.append(int(e))
    return out


def long_edge_crossings(tree, spec: AnnulusSpec):
    """
    Tree edges that jump across the shell: one end inside the inner circle,
    the other beyond the outer one. They have no vertex in the shell.
    """
    g = tree.graph
    if _same_annulus(spec, g.region):
        return []
    tol = BOUNDARY_TOLERANCE * (g.delta or 1.0)
    d = spec.distance(g.coords)
    with np.errstate(invalid='ignore'):
        inside = d < spec.r - tol
        outside = d > spec.R + tol
    wired_side = np.zeros(g.n_edges, dtype=np.int8)
    if g.wired_vertex is not None:
        at_wired = (g.edges == g.wired_vertex).any(axis=1)
        wired_side[at_wired] = g.edge_sides[at_wired]
    found = _jumping_edges(g, tree.edges, spec, inside, outside, wired_side)
    if found:
        logger.debug('%d edge(s) jump across %s', len(found), spec.describe())
    return found


def rect_query(g, edge_ids, rect: Rect | None = None, direction='horizontal'):
    """Crossing query between opposite sides of a rectangle; wired vertices never take part."""
    rect = g.region if rect is None else rect
    if not isinstance(rect, Rect):
        raise GeometryError('Rectangle crossings need a rectangle.')
    a, b = _ENDS[direction]
    edge_ids = np.asarray(edge_ids, dtype=np.int64)
    edges = g.edges[edge_ids] if len(edge_ids) else np.empty((0, 2), dtype=np.int64)
    if rect == g.region and g.sides:
        in_play = np.ones(g.n_vertices, dtype=bool)
        if g.wired_vertex is not None:
            in_play[g.wired_vertex] = False
        sources, sinks = g.sides[a], g.sides[b]
    else:
        tol = BOUNDARY_TOLERANCE * (g.delta or 1.0)
        with np.errstate(invalid='ignore'):
            in_play = rect.contains(g.coords, tol=tol)
        near = (g.delta or 1.0) * (1 - 1e-6)
        dist = rect.side_distances(g.coords)
        with np.errstate(invalid='ignore'):
            sources = frozenset(np.flatnonzero(in_play & (dist[a] < near)).tolist())
            sinks = frozenset(np.flatnonzero(in_play & (dist[b] < near)).tolist())
    return _finalize(g, edges, in_play, frozenset(sources), frozenset(sinks), frozenset())


def _query(g, edge_ids, region, direction):
    region = g.region if region is None else region
    if isinstance(region, Rect):
        return rect_query(g, edge_ids, region, direction)
    return annulus_query(g, edge_ids, region)


def tree_traversal_count(t, spec: AnnulusSpec | None = None):
    """Maximal number of disjoint traversals of the shell by paths of the tree."""
    return max_disjoint_crossings(annulus_query(t.graph, t.edges, spec))


def percolation_crossing_count(g, edge_ids, region=None, direction='horizontal'):
    """Disjoint crossings of an annulus or rectangle by an occupied edge set."""
    return max_disjoint_crossings(_query(g, edge_ids, region, direction))


def crossing_exists(g, edge_ids, region=None, direction='horizontal'):
    """Is there at least one crossing? Answered by union-find, without a flow."""
    q = _query(g, edge_ids, region, direction)
    if q.direct:
        return True
    if not q.sources or not q.sinks:
        return False
    n = q.n_vertices
    uf = UnionFind(n + 2)
    for s in q.sources:
        uf.union(n, s)
    for t in q.sinks:
        uf.union(n + 1, t)
    for a, b in q.edges.tolist():
        uf.union(a, b)
        if uf.connected(n, n + 1):
            return True
    return uf.connected(n, n + 1)


def semipath_query(g, u, spec: AnnulusSpec | None = None):
    """
    Layered digraph of p_c-semipaths: occupied dual edges (u >= 1/2) among
    dual vertices, occupied primal edges (u < 1/2) among primal vertices,
    and one-way junction arcs from the ends of each occupied dual edge b*
    to the ends of its primal partner b. Dual vertex f is node n + f.
    """
    dual = g.dual
    if dual is None:
        if g.keys is None:
            raise GeometryError('Semipath counts need a graph with a planar dual.')
        dual = planar_dual(g)
    values = u.values if hasattr(u, 'values') else np.asarray(u, dtype=float)
    if len(values) != g.n_edges:
        raise ValueError(f'{len(values)} call numbers for a graph with {g.n_edges} edges.')
    spec = g.region if spec is None else spec
    occupied = np.flatnonzero(values < 0.5)
    dual_occupied = np.flatnonzero(values >= 0.5)
    primal = annulus_query(g, occupied, spec)
    dual_spec = dual.region if _same_annulus(spec, g.region) else spec
    dual_q = annulus_query(dual, dual_occupied, dual_spec)

    n = g.n_vertices
    shift = n
    sources = set(primal.sources) | {v + shift for v in dual_q.sources}
    sinks = set(primal.sinks) | {v + shift for v in dual_q.sinks}
    exempt = set(primal.exempt) | {v + shift for v in dual_q.exempt}
    arcs = [(a, b) for a, b in primal.edges.tolist()] + [(b, a) for a, b in primal.edges.tolist()]
    arcs += [(a + shift, b + shift) for a, b in dual_q.edges.tolist() if a != b]
    arcs += [(b + shift, a + shift) for a, b in dual_q.edges.tolist() if a != b]

    primal_used = set(primal.sources) | set(primal.sinks) | set(primal.edges.ravel().tolist())
    dual_used = set(dual_q.sources) | set(dual_q.sinks) | set(dual_q.edges.ravel().tolist())
    for e in dual_occupied.tolist():
        for f in set(dual.edges[e].tolist()):
            if f not in dual_used:
                continue
            for v in set(g.edges[e].tolist()):
                if v not in primal_used:
                    continue
                if f + shift in exempt and v in exempt:
                    continue
                arcs.append((f + shift, v))
    return CrossingQuery(
        n + dual.n_vertices,
        np.array(arcs, dtype=np.int64).reshape(-1, 2),
        frozenset(sources),
        frozenset(sinks),
        frozenset(exempt),
        directed=True,
        direct=primal.direct + dual_q.direct,
    )


def semipath_crossing_count(g, u, spec: AnnulusSpec | None = None):
    """Maximal number of vertex-disjoint crossings of the shell by p_c-semipaths."""
    return max_disjoint_crossings(semipath_query(g, u, spec))
