"""
Euclidean minimal spanning trees on Poisson points, Delaunay/Voronoi
graphs, and droplet (Boolean disc) and vacant continuum percolation.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import Delaunay, QhullError, cKDTree

from .grid import AnnulusSpec, Boundary, Rect, RegionGraph, Side
from .mst import kruskal_mst
from .structures import CheckReport, UnionFind

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PointSet:
    """Points of a Poisson process with intensity delta**-2 inside `region`."""
    points: np.ndarray
    region: AnnulusSpec | Rect | None = None
    delta: float = 1.0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        object.__setattr__(self, 'points', pts)
        if self.region is not None and len(pts):
            if not self.region.contains(pts, tol=1e-12).all():
                raise ValueError('Every point must lie inside the region.')

    def __len__(self):
        return len(self.points)

    @property
    def intensity(self):
        return self.delta ** -2


def _as_points(pts):
    return pts.points if isinstance(pts, PointSet) else np.asarray(pts, dtype=float).reshape(-1, 2)


def sample_poisson(region, delta, rng):
    """Homogeneous Poisson points with density delta**-2 in a rectangle or annulus."""
    count = rng.poisson(region.area / delta ** 2) if region.area > 0 else 0
    if isinstance(region, Rect):
        xy = rng.random((count, 2))
        points = np.column_stack([region.x0 + xy[:, 0] * region.width,
                                  region.y0 + xy[:, 1] * region.height])
    else:
        radius = np.sqrt(region.r ** 2 + rng.random(count) * (region.R ** 2 - region.r ** 2))
        angle = rng.random(count) * 2 * math.pi
        points = np.column_stack([region.center[0] + radius * np.cos(angle),
                                  region.center[1] + radius * np.sin(angle)])
    return PointSet(points, region, delta)


def _collinear(points):
    if len(points) < 3:
        return True
    centered = points - points.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    return s[1] <= 1e-12 * max(s[0], 1e-300)


def _path_edges(points):
    if len(points) < 2:
        return np.empty((0, 2), dtype=np.int64)
    centered = points - points.mean(axis=0)
    direction = np.linalg.svd(centered)[2][0]
    order = np.argsort(centered @ direction, kind='stable')
    return np.column_stack([order[:-1], order[1:]]).astype(np.int64)


def _circumcenters(points, simplices):
    a, b, c = (points[simplices[:, k]] for k in range(3))
    d = 2 * (a[:, 0] * (b[:, 1] - c[:, 1]) + b[:, 0] * (c[:, 1] - a[:, 1]) + c[:, 0] * (a[:, 1] - b[:, 1]))
    sa, sb, sc = (np.sum(p * p, axis=1) for p in (a, b, c))
    ux = (sa * (b[:, 1] - c[:, 1]) + sb * (c[:, 1] - a[:, 1]) + sc * (a[:, 1] - b[:, 1])) / d
    uy = (sa * (c[:, 0] - b[:, 0]) + sb * (a[:, 0] - c[:, 0]) + sc * (b[:, 0] - a[:, 0])) / d
    return np.column_stack([ux, uy])


def delaunay_graph(pts):
    """
    Delaunay graph of the points with Euclidean edge lengths, paired with its
    Voronoi dual: circumcentres as dual vertices plus one vertex at infinity
    for hull edges. Collinear input yields the path along the line.

    Qhull is run with scipy's defaults, which always triangulate the output:
    four or more cocircular points get split into triangles by whichever
    diagonals Qhull picks for that input order. Both diagonals have the same
    circumcircle, so any choice is a valid Delaunay graph, and Poisson points
    are cocircular with probability zero. Input Qhull rejects outright falls
    back to the path as well.
    """
    points = _as_points(pts)
    region = pts.region if isinstance(pts, PointSet) else None
    if _collinear(points):
        edges = _path_edges(points)
        return RegionGraph(points, edges, _lengths(points, edges), region=region)
    try:
        tri = Delaunay(points)
    except QhullError:
        edges = _path_edges(points)
        return RegionGraph(points, edges, _lengths(points, edges), region=region)

    faces = {}
    for s, simplex in enumerate(tri.simplices.tolist()):
        for k in range(3):
            a, b = sorted((simplex[(k + 1) % 3], simplex[(k + 2) % 3]))
            faces.setdefault((a, b), []).append(s)
    edge_list = sorted(faces)
    edges = np.array(edge_list, dtype=np.int64)
    g = RegionGraph(points, edges, _lengths(points, edges), region=region)

    n_tri = len(tri.simplices)
    infinity = n_tri
    dual_edges = np.array(
        [(faces[k][0], faces[k][1] if len(faces[k]) > 1 else infinity) for k in edge_list],
        dtype=np.int64,
    )
    centers = np.vstack([_circumcenters(points, tri.simplices), [np.nan, np.nan]])
    finite = (dual_edges != infinity).all(axis=1)
    dual_lengths = np.full(len(dual_edges), np.inf)
    dual_lengths[finite] = np.linalg.norm(centers[dual_edges[finite, 0]] - centers[dual_edges[finite, 1]], axis=1)
    voronoi = RegionGraph(centers, dual_edges, dual_lengths, wired_vertex=infinity, region=region)
    voronoi.dual = g
    g.dual = voronoi
    return g


def _lengths(points, edges):
    if len(edges) == 0:
        return np.empty(0)
    return np.linalg.norm(points[edges[:, 0]] - points[edges[:, 1]], axis=1)


def _free_band(points, region, side, delta):
    if isinstance(region, AnnulusSpec):
        dist = region.boundary_distance(points, sides=(side,))
    else:
        dist = region.boundary_distance(points)
    return frozenset(np.flatnonzero(dist <= delta).tolist())


def est_region_graph(pts: PointSet, bc_inner=Boundary.FREE, bc_outer=Boundary.FREE):
    """
    Delaunay graph of the points with the boundary rule for EST: each point
    gets a single edge to the wired vertex, as long as its distance to the
    nearest wired boundary. Points within delta of a free boundary are tagged.
    """
    region = pts.region
    base = delaunay_graph(pts)
    points = pts.points
    n = len(points)
    if isinstance(region, Rect):
        bc_inner = bc_outer
    bc_inner, bc_outer = Boundary(bc_inner), Boundary(bc_outer)
    disc = isinstance(region, AnnulusSpec) and region.is_disc
    wired_sides = [s for s, bc in ((Side.INNER, bc_inner), (Side.OUTER, bc_outer))
                   if bc == Boundary.WIRED and not (s == Side.INNER and (disc or isinstance(region, Rect)))]
    edges = base.edges
    lengths = base.lengths
    edge_sides = np.zeros(len(edges), dtype=np.int8)
    coords = points
    wired = None
    if wired_sides:
        wired = n
        coords = np.vstack([points, [np.nan, np.nan]])
        per_side = {s: (region.boundary_distance(points, sides=(s,)) if isinstance(region, AnnulusSpec)
                        else region.boundary_distance(points)) for s in wired_sides}
        stacked = np.vstack([per_side[s] for s in wired_sides])
        nearest = np.array(wired_sides)[np.argmin(stacked, axis=0)]
        edges = np.vstack([edges, np.column_stack([np.arange(n), np.full(n, wired)])]).astype(np.int64)
        lengths = np.concatenate([lengths, stacked.min(axis=0)])
        edge_sides = np.concatenate([edge_sides, nearest.astype(np.int8)])

    inner = frozenset()
    outer = frozenset()
    if isinstance(region, AnnulusSpec):
        if bc_inner == Boundary.FREE and not disc:
            inner = _free_band(points, region, Side.INNER, pts.delta)
        if bc_outer == Boundary.FREE:
            outer = _free_band(points, region, Side.OUTER, pts.delta)
    elif bc_outer == Boundary.FREE:
        outer = _free_band(points, region, Side.OUTER, pts.delta)
    sides = {}
    if isinstance(region, Rect):
        sides = {k: frozenset(np.flatnonzero(v <= pts.delta).tolist())
                 for k, v in region.side_distances(points).items()}
    return RegionGraph(
        coords=coords,
        edges=edges,
        lengths=lengths,
        wired_vertex=wired,
        inner_boundary=inner,
        outer_boundary=outer,
        region=region,
        delta=pts.delta,
        bc_inner=bc_inner if isinstance(region, AnnulusSpec) else None,
        bc_outer=bc_outer,
        edge_sides=edge_sides,
        sides=sides,
    )


def euclidean_mst(pts: PointSet, bc=Boundary.FREE, bc_outer=None):
    """
    Euclidean MST of the points via Kruskal on Delaunay edges. With a wired
    boundary every point may also connect to the wired vertex.
    """
    bc_outer = bc if bc_outer is None else bc_outer
    g = est_region_graph(pts, bc, bc_outer)
    root = g.wired_vertex if g.wired_vertex is not None else 0
    return kruskal_mst(g, g.lengths, root=root)


def _close_pairs(points, p, delta):
    if len(points) < 2 or p <= 0:
        return np.empty((0, 2), dtype=np.int64)
    radius = 2 * p * delta
    pairs = cKDTree(points).query_pairs(radius, output_type='ndarray')
    if len(pairs) == 0:
        return pairs.reshape(0, 2).astype(np.int64)
    dist = np.linalg.norm(points[pairs[:, 0]] - points[pairs[:, 1]], axis=1)
    return pairs[dist < radius].astype(np.int64)


def droplet_components(pts, p, delta):
    """Cluster labels of the radius p*delta discs; overlap means distance < 2*p*delta."""
    points = _as_points(pts)
    n = len(points)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    pairs = _close_pairs(points, p, delta)
    adj = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    _, first = np.unique(labels, return_index=True)
    relabel = np.empty(labels.max() + 1, dtype=np.int64)
    relabel[labels[np.sort(first)]] = np.arange(len(first))
    return relabel[labels]


def _touching(points, region, p, delta):
    """Points whose disc reaches each boundary piece, keyed by side name."""
    if isinstance(region, Rect):
        return {k: v < p * delta for k, v in region.side_distances(points).items()}
    touch = {'outer': region.boundary_distance(points, sides=(Side.OUTER,)) < p * delta}
    if not region.is_disc:
        touch['inner'] = region.boundary_distance(points, sides=(Side.INNER,)) < p * delta
    return touch


def droplet_graph(pts: PointSet, p, delta=None):
    """Occupied-disc graph of a point set, with boundary pieces its discs touch."""
    delta = pts.delta if delta is None else delta
    points = pts.points
    pairs = _close_pairs(points, p, delta)
    touch = _touching(points, pts.region, p, delta) if len(points) else {}
    inner = frozenset(np.flatnonzero(touch.get('inner', np.zeros(0, bool))).tolist())
    outer = frozenset(np.flatnonzero(touch.get('outer', np.zeros(0, bool))).tolist())
    sides = {k: frozenset(np.flatnonzero(v).tolist()) for k, v in touch.items()
             if k in ('left', 'right', 'bottom', 'top')}
    return RegionGraph(
        coords=points,
        edges=pairs,
        lengths=_lengths(points, pairs),
        inner_boundary=inner,
        outer_boundary=outer,
        region=pts.region,
        delta=delta,
        bc_inner=Boundary.FREE,
        bc_outer=Boundary.FREE,
        sides=sides,
    )


_ENDS = {'horizontal': ('left', 'right'), 'vertical': ('bottom', 'top')}
_ACROSS = {'horizontal': 'vertical', 'vertical': 'horizontal'}


def droplet_crossing_exists(pts, p, delta, region, direction='horizontal'):
    """Does one occupied cluster join the two opposite boundary pieces?"""
    points = _as_points(pts)
    if len(points) == 0:
        return False
    labels = droplet_components(points, p, delta)
    touch = _touching(points, region, p, delta)
    if isinstance(region, Rect):
        a, b = _ENDS[direction]
    else:
        a, b = 'inner', 'outer'
        if a not in touch:
            return bool(touch[b].any())
    return bool(set(labels[touch[a]].tolist()) & set(labels[touch[b]].tolist()))


def _winding_cluster(points, pairs, center):
    """True if some cluster of the disc graph contains a cycle around `center`."""
    n = len(points)
    theta = np.arctan2(points[:, 1] - center[1], points[:, 0] - center[0])
    adjacency = [[] for _ in range(n)]
    for a, b in pairs.tolist():
        adjacency[a].append(b)
        adjacency[b].append(a)
    potential = [None] * n
    for start in range(n):
        if potential[start] is not None:
            continue
        potential[start] = theta[start]
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in adjacency[v]:
                step = (theta[w] - theta[v] + math.pi) % (2 * math.pi) - math.pi
                if potential[w] is None:
                    potential[w] = potential[v] + step
                    queue.append(w)
                elif abs(potential[v] + step - potential[w]) > math.pi:
                    return True
    return False


def vacant_crossing_exists(pts, p, delta, region, direction='horizontal'):
    """
    Is there a curve crossing the region that keeps distance >= p*delta from
    every point? Decided through planar duality: the crossing exists exactly
    when no occupied cluster blocks it (a cluster joining the two other sides
    of a rectangle, or a cluster winding around the hole of an annulus).
    """
    points = _as_points(pts)
    if len(points) == 0:
        return True
    if isinstance(region, Rect):
        return not droplet_crossing_exists(points, p, delta, region, _ACROSS[direction])
    if region.is_disc:
        return not (_touching(points, region, p, delta)['outer'].any()
                    and _covers_center(points, p, delta, region))
    return not _winding_cluster(points, _close_pairs(points, p, delta), region.center)


def _covers_center(points, p, delta, region):
    return bool((region.distance(points) < p * delta).any())


def droplet_threshold(pts, delta, region: Rect, direction='horizontal'):
    """
    Smallest p at which the discs cross the rectangle in `direction`: the
    droplet crossing exists exactly for p above this value.
    """
    points = _as_points(pts)
    n = len(points)
    if n == 0:
        return math.inf
    a, b = _ENDS[direction]
    dist = region.side_distances(points)
    if n >= 3 and not _collinear(points):
        pairs = delaunay_graph(points).edges
    else:
        pairs = np.array([(i, j) for i in range(n) for j in range(i + 1, n)], dtype=np.int64).reshape(-1, 2)
    weights = _lengths(points, pairs) / (2 * delta)
    left, right = n, n + 1
    candidates = np.concatenate([weights, dist[a] / delta, dist[b] / delta])
    ends = np.vstack([
        pairs,
        np.column_stack([np.arange(n), np.full(n, left)]),
        np.column_stack([np.arange(n), np.full(n, right)]),
    ])
    uf = UnionFind(n + 2)
    for e in np.argsort(candidates, kind='stable').tolist():
        uf.union(int(ends[e, 0]), int(ends[e, 1]))
        if uf.connected(left, right):
            return float(candidates[e])
    return math.inf


def _point_segment(points, a, b):
    ab = b - a
    denom = np.sum(ab * ab, axis=-1)
    t = np.where(denom > 0, np.sum((points - a) * ab, axis=-1) / np.where(denom > 0, denom, 1), 0.0)
    t = np.clip(t, 0.0, 1.0)
    proj = a + t[..., None] * ab
    return np.linalg.norm(points - proj, axis=-1)


def _orient(a, b, c):
    return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])


def segment_distances(p, q, starts, ends):
    """Distances from segment pq to each segment starts[i]-ends[i]."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d = np.minimum.reduce([
        _point_segment(p[None, :], starts, ends),
        _point_segment(q[None, :], starts, ends),
        _point_segment(starts, p[None, :], q[None, :]),
        _point_segment(ends, p[None, :], q[None, :]),
    ])
    o1 = _orient(p, q, starts)
    o2 = _orient(p, q, ends)
    o3 = _orient(starts, ends, p[None, :])
    o4 = _orient(starts, ends, q[None, :])
    crossing = (o1 * o2 < 0) & (o3 * o4 < 0)
    return np.where(crossing, 0.0, d)


def check_vacant_separation(pts: PointSet, p, delta=None, clearance=None):
    """
    Every EST edge b keeps distance >= p*delta/2 from every segment that can
    sit inside a p-dual path avoiding b*. A dual edge qualifies when its
    Poisson pair is at least 2*clearance*delta apart (clearance defaults to p)
    and each of its endpoints has another qualifying dual edge besides b*.
    """
    delta = pts.delta if delta is None else delta
    clearance = p if clearance is None else clearance
    g = delaunay_graph(pts)
    report = CheckReport('vacant_separation')
    voronoi = g.dual
    if voronoi is None:
        return report
    tree = kruskal_mst(g, g.lengths)
    infinity = voronoi.wired_vertex
    vacant = g.lengths >= 2 * clearance * delta
    finite = (voronoi.edges != infinity).all(axis=1)
    candidates = np.flatnonzero(vacant & finite)
    if len(candidates) == 0:
        return report
    counts = np.bincount(voronoi.edges[vacant].ravel(), minlength=voronoi.n_vertices)
    cand_ends = voronoi.edges[candidates]
    starts = voronoi.coords[cand_ends[:, 0]]
    ends = voronoi.coords[cand_ends[:, 1]]
    threshold = p * delta / 2
    for b in tree.edges.tolist():
        x, y = g.edges[b]
        b_star = voronoi.edges[b]
        spare = counts[cand_ends] - 1
        if vacant[b]:
            spare = spare - (cand_ends == b_star[0]) - (cand_ends == b_star[1])
        usable = (candidates != b) & (spare >= 1).all(axis=1)
        if not usable.any():
            continue
        dist = segment_distances(g.coords[x], g.coords[y], starts[usable], ends[usable])
        report.checked += int(usable.sum())
        for i in np.flatnonzero(dist < threshold).tolist():
            report.violations.append({
                'edge': int(b),
                'dual_edge': int(candidates[usable][i]),
                'distance': float(dist[i]),
            })
    report.details['threshold'] = threshold
    return report
