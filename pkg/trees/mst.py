"""
Minimal spanning trees driven by i.i.d. call numbers, the invasion
construction, and the deterministic couplings between MST, Bernoulli
percolation, the dual tree and sub-region trees.
"""
from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import DisconnectedGraphError, GeometryError
from .grid import AnnulusSpec, Boundary, Rect, build_lattice_annulus, build_lattice_box, planar_dual
from .structures import CheckReport, SpanningTree, UnionFind

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CallNumbers:
    """One value in [0, 1] per edge. Ties are broken by edge index."""
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.size and (values.min() < 0 or values.max() > 1):
            raise ValueError('Call numbers must lie in [0, 1].')
        object.__setattr__(self, 'values', values)

    def __len__(self):
        return len(self.values)

    @cached_property
    def order(self):
        """Edge indices sorted by (value, index)."""
        return np.lexsort((np.arange(len(self.values)), self.values))

    @cached_property
    def rank(self):
        rank = np.empty(len(self.values), dtype=np.int64)
        rank[self.order] = np.arange(len(self.values))
        return rank

    def dual(self):
        return CallNumbers(1.0 - self.values)

    def transformed(self, fn):
        """Apply a strictly increasing map; the MST only sees the ordering."""
        return CallNumbers(np.clip(fn(self.values), 0.0, 1.0))


def draw_call_numbers(g, rng):
    return CallNumbers(rng.random(g.n_edges))


def _check_sizes(g, u):
    if len(u) != g.n_edges:
        raise ValueError(f'{len(u)} weights for a graph with {g.n_edges} edges.')


def _order(u):
    """Edge order for call numbers or plain edge lengths, ties broken by index."""
    if isinstance(u, CallNumbers):
        return u.order
    u = np.asarray(u, dtype=float)
    return np.lexsort((np.arange(len(u)), u))


def _values(u):
    return u.values if isinstance(u, CallNumbers) else np.asarray(u, dtype=float)


def kruskal_mst(g, u, root=0):
    """
    The unique minimal spanning tree of g under u (Kruskal with union-find).
    `u` is a CallNumbers or an array of edge lengths.
    """
    _check_sizes(g, u)
    uf = UnionFind(g.n_vertices)
    chosen = []
    edges = g.edges.tolist()
    for e in _order(u).tolist():
        a, b = edges[e]
        if uf.union(a, b):
            chosen.append(e)
            if len(chosen) == g.n_vertices - 1:
                break
    if uf.components != 1:
        raise DisconnectedGraphError(f'Graph has {uf.components} components; no spanning tree exists.')
    return SpanningTree.from_edges(g, chosen, root)


def invasion_tree(g, u: CallNumbers, root=0):
    """Grow from root, always adjoining the cheapest frontier edge that closes no cycle."""
    _check_sizes(g, u)
    rank = u.rank.tolist()
    incidence = g.incidence
    in_tree = [False] * g.n_vertices
    in_tree[root] = True
    parent_edge = [-1] * g.n_vertices
    frontier = [(rank[e], e, w) for w, e in incidence[root]]
    heapq.heapify(frontier)
    added = 0
    while frontier and added < g.n_vertices - 1:
        _, e, w = heapq.heappop(frontier)
        if in_tree[w]:
            continue
        in_tree[w] = True
        parent_edge[w] = e
        added += 1
        for x, f in incidence[w]:
            if not in_tree[x]:
                heapq.heappush(frontier, (rank[f], f, x))
    if added != g.n_vertices - 1:
        raise DisconnectedGraphError('Invasion from the root did not reach every vertex.')
    parent_edge = np.array(parent_edge, dtype=np.int64)
    return SpanningTree(g, np.sort(parent_edge[parent_edge >= 0]), root, parent_edge)


def occupied_subgraph(g, u: CallNumbers, p):
    """Indices of the p-occupied edges, those with u_b < p."""
    _check_sizes(g, u)
    return np.flatnonzero(u.values < p)


def verify_vacancy_cycle_property(g, u, t: SpanningTree):
    """
    Every vacant edge's endpoints must already be joined by edges with
    smaller call numbers (or lengths). Violations are reported, not raised.
    """
    _check_sizes(g, u)
    if t.graph is not g or not t.is_spanning_tree():
        raise GeometryError('The tree under test is not a spanning tree of this graph.')
    values = _values(u)
    report = CheckReport('vacancy_cycle')
    tree_edges = t.edge_set
    uf = UnionFind(g.n_vertices)
    edges = g.edges.tolist()
    for e in _order(u).tolist():
        a, b = edges[e]
        if e not in tree_edges:
            report.checked += 1
            if not uf.connected(a, b):
                report.violations.append({'edge': e, 'u': float(values[e])})
        uf.union(a, b)
    return report


def dual_mst_check(g, u: CallNumbers, dual_u: CallNumbers | None = None):
    """
    The duals of the MST-vacant edges of g must form the MST of the planar
    dual under 1 - u. `dual_u` substitutes other dual call numbers.
    """
    dual = planar_dual(g)
    t = kruskal_mst(g, u)
    vacant = set(range(g.n_edges)) - t.edge_set
    dual_tree = kruskal_mst(dual, dual_u if dual_u is not None else u.dual())
    report = CheckReport('dual_mst', checked=g.n_edges)
    for e in sorted(vacant ^ dual_tree.edge_set):
        report.violations.append({'edge': e, 'in_dual_tree': e in dual_tree.edge_set})
    return report


def restrict_call_numbers(g, u: CallNumbers, sub):
    """
    Call numbers for a lattice sub-region graph: each sub edge keeps the value
    of the g edge with the same lattice key. Wired sub edges with no
    counterpart in g sit on g's own free boundary and get the maximal value 1.
    """
    index = g.edge_index_by_key
    missing = [tuple(k) for k in sub.keys[sub.lattice_vertices].tolist()
               if tuple(k) not in g.vertex_index_by_key]
    if missing:
        raise GeometryError(f'Sub-region has {len(missing)} vertices outside the region, e.g. {missing[0]}.')
    values = np.ones(sub.n_edges)
    for e, key in enumerate(sub.edge_keys):
        f = index.get(key)
        if f is not None:
            values[e] = u.values[f]
        elif sub.edge_sides[e] == 0:
            raise GeometryError(f'Sub-region edge {key} has no counterpart in the region.')
    return CallNumbers(values)


def _interior_keys(sub):
    """Lattice keys of edges whose endpoints both have all four neighbours in the sub-region."""
    keyset = sub.vertex_index_by_key
    inside = set()
    for (i, j), v in keyset.items():
        if all((i + di, j + dj) in keyset for di, dj in ((1, 0), (0, 1), (-1, 0), (0, -1))):
            inside.add((i, j))
    return {k for k in sub.edge_keys if k[:2] in inside and k[2:] in inside}


def _keys_of(tree):
    keys = tree.graph.edge_keys
    return {keys[e] for e in tree.edges}


def _sub_graphs(delta, sub):
    if isinstance(sub, Rect):
        return (build_lattice_box(delta, sub, Boundary.FREE),
                build_lattice_box(delta, sub, Boundary.WIRED))
    return (build_lattice_annulus(delta, sub.with_boundaries(Boundary.FREE, Boundary.FREE)),
            build_lattice_annulus(delta, sub.with_boundaries(Boundary.WIRED, Boundary.WIRED)))


def _shuffled(u, rng):
    return CallNumbers(rng.permutation(u.values)) if rng is not None else u


def _containment(report, label, smaller, larger, interior):
    for key in sorted((smaller - larger) & interior):
        report.violations.append({'relation': label, 'edge': key})
    report.checked += len(interior)


def bracketing_check(g, u: CallNumbers, sub: AnnulusSpec | Rect, shuffle_rng=None):
    """
    With shared call numbers, the wired sub-region tree, the full tree and
    the free sub-region tree are nested on interior edges. `shuffle_rng`
    permutes the copies' call numbers, which breaks the coupling.
    """
    sub_free, sub_wired = _sub_graphs(g.delta, sub)
    u_free = _shuffled(restrict_call_numbers(g, u, sub_free), shuffle_rng)
    u_wired = _shuffled(restrict_call_numbers(g, u, sub_wired), shuffle_rng)
    full = _keys_of(kruskal_mst(g, u))
    free = _keys_of(kruskal_mst(sub_free, u_free))
    wired = _keys_of(kruskal_mst(sub_wired, u_wired))
    interior = _interior_keys(sub_free)
    report = CheckReport('bracketing')
    _containment(report, 'wired<=full', wired, full, interior)
    _containment(report, 'full<=free', full, free, interior)
    return report


def fw_factorization_sample(g, u: CallNumbers, cut, shuffle_rng=None):
    """
    Split the annulus region of g at radius `cut` into C (inside, free at the
    cut) and D (outside, wired at the cut). The free tree on C dominates the
    full tree inside C, and the wired tree on D is dominated by it inside D.
    The two factor trees use disjoint call numbers.
    """
    spec = g.region
    if not isinstance(spec, AnnulusSpec):
        raise GeometryError('Free-wired factorization is defined on annulus regions.')
    report = CheckReport('fw_factorization')
    full = _keys_of(kruskal_mst(g, u))
    if cut >= spec.R or cut <= spec.r:
        # One side is empty: the other piece is the whole region.
        whole = _keys_of(kruskal_mst(g, _shuffled(u, shuffle_rng)))
        _containment(report, 'identity', full ^ whole, set(), set(g.edge_keys))
        report.details['identity'] = True
        return report

    inner_spec = AnnulusSpec(spec.center, spec.r, cut, spec.bc_inner, Boundary.FREE)
    outer_spec = AnnulusSpec(spec.center, cut, spec.R, Boundary.WIRED, spec.bc_outer)
    part_c = build_lattice_annulus(g.delta, inner_spec)
    part_d = build_lattice_annulus(g.delta, outer_spec)
    u_c = _shuffled(restrict_call_numbers(g, u, part_c), shuffle_rng)
    u_d = _shuffled(restrict_call_numbers(g, u, part_d), shuffle_rng)
    tree_c = _keys_of(kruskal_mst(part_c, u_c))
    tree_d = _keys_of(kruskal_mst(part_d, u_d))
    _containment(report, 'full<=free(C)', full, tree_c, _interior_keys(part_c))
    _containment(report, 'wired(D)<=full', tree_d, full, _interior_keys(part_d))
    shared = set(part_c.edge_keys) & set(part_d.edge_keys)
    report.details['shared_keys'] = len(shared)
    return report
