"""
Finite lattice region graphs (boxes, discs and annuli of the square lattice)
with free or wired boundary conditions, and their planar duals.

Wired boundaries merge every deleted vertex on that side into one reserved
vertex placed after the lattice vertices; it has no coordinate (NaN row).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from django.db.models import IntegerChoices, TextChoices
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .exceptions import DisconnectedGraphError, GeometryError
from .structures import UnionFind

logger = logging.getLogger(__name__)

# Relative to delta; lattice points this close to a boundary circle are on it.
BOUNDARY_TOLERANCE = 1e-9

_STEPS = ((1, 0), (0, 1), (-1, 0), (0, -1))


class Boundary(TextChoices):
    FREE = 'F', 'Free'
    WIRED = 'W', 'Wired'


class Side(IntegerChoices):
    INTERIOR = 0, 'Interior'
    INNER = 1, 'Inner'
    OUTER = 2, 'Outer'


@dataclass(frozen=True)
class AnnulusSpec:
    """The closed shell r <= |x - center| <= R. r == 0 denotes the disc B(R)."""
    center: tuple = (0.0, 0.0)
    r: float = 1.0
    R: float = 2.0
    bc_inner: Boundary = Boundary.FREE
    bc_outer: Boundary = Boundary.WIRED

    def __post_init__(self):
        object.__setattr__(self, 'center', (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, 'bc_inner', Boundary(self.bc_inner))
        object.__setattr__(self, 'bc_outer', Boundary(self.bc_outer))
        if not (0 <= self.r < self.R):
            raise GeometryError(f'Annulus radii must satisfy 0 <= r < R, got r={self.r}, R={self.R}.')

    @property
    def is_disc(self):
        return self.r == 0

    @property
    def aspect(self):
        return math.inf if self.is_disc else self.R / self.r

    @property
    def area(self):
        return math.pi * (self.R ** 2 - self.r ** 2)

    def with_boundaries(self, bc_inner, bc_outer):
        return AnnulusSpec(self.center, self.r, self.R, bc_inner, bc_outer)

    def with_radii(self, r, R):
        return AnnulusSpec(self.center, r, R, self.bc_inner, self.bc_outer)

    def distance(self, points):
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        return np.hypot(points[:, 0] - self.center[0], points[:, 1] - self.center[1])

    def contains(self, points, tol=0.0):
        d = self.distance(points)
        return (d >= self.r - tol) & (d <= self.R + tol)

    def side_of(self, points):
        """Side of the shell on which points outside it lie."""
        d = self.distance(points)
        return np.where(d < self.r, Side.INNER, Side.OUTER)

    def boundary_distance(self, points, sides=(Side.INNER, Side.OUTER)):
        """Euclidean distance to the nearest of the requested boundary circles."""
        d = self.distance(points)
        out = np.full(len(d), np.inf)
        if Side.INNER in sides and not self.is_disc:
            out = np.minimum(out, np.abs(d - self.r))
        if Side.OUTER in sides:
            out = np.minimum(out, np.abs(self.R - d))
        return out

    def bc(self, side):
        return self.bc_inner if side == Side.INNER else self.bc_outer

    def describe(self):
        return f'D({self.r:g},{self.R:g}) {self.bc_inner}/{self.bc_outer}'


@dataclass(frozen=True)
class Rect:
    """Closed axis-aligned rectangle [x0, x1] x [y0, y1]."""
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise GeometryError(f'Empty rectangle [{self.x0},{self.x1}]x[{self.y0},{self.y1}].')

    @property
    def width(self):
        return self.x1 - self.x0

    @property
    def height(self):
        return self.y1 - self.y0

    @property
    def area(self):
        return self.width * self.height

    def contains(self, points, tol=0.0):
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        return ((p[:, 0] >= self.x0 - tol) & (p[:, 0] <= self.x1 + tol)
                & (p[:, 1] >= self.y0 - tol) & (p[:, 1] <= self.y1 + tol))

    def side_of(self, points):
        return np.full(len(np.asarray(points).reshape(-1, 2)), Side.OUTER)

    def side_distances(self, points):
        """Distances to the left, right, bottom and top sides, keyed by side name."""
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        return {
            'left': np.abs(p[:, 0] - self.x0),
            'right': np.abs(self.x1 - p[:, 0]),
            'bottom': np.abs(p[:, 1] - self.y0),
            'top': np.abs(self.y1 - p[:, 1]),
        }

    def boundary_distance(self, points, sides=(Side.OUTER,)):
        return np.min(np.vstack(list(self.side_distances(points).values())), axis=0)

    def describe(self):
        return f'[{self.x0:g},{self.x1:g}]x[{self.y0:g},{self.y1:g}]'


@dataclass(eq=False)
class RegionGraph:
    """
    Finite planar (multi)graph with vertex coordinates, an optional wired
    vertex, free-boundary tags and an optional companion dual graph whose
    edge i is dual to edge i here. Treated as read-only after construction.
    """
    coords: np.ndarray
    edges: np.ndarray
    lengths: np.ndarray
    wired_vertex: int | None = None
    inner_boundary: frozenset = frozenset()
    outer_boundary: frozenset = frozenset()
    region: AnnulusSpec | Rect | None = None
    delta: float | None = None
    bc_inner: Boundary | None = None
    bc_outer: Boundary | None = None
    keys: np.ndarray | None = None
    edge_keys: tuple | None = None
    edge_sides: np.ndarray | None = None
    sides: dict = field(default_factory=dict)
    allow_loops: bool = False
    dual: RegionGraph | None = field(default=None, repr=False)

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float).reshape(-1, 2)
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        self.lengths = np.asarray(self.lengths, dtype=float)
        if self.edge_sides is None:
            self.edge_sides = np.zeros(len(self.edges), dtype=np.int8)
        if len(self.lengths) != len(self.edges):
            raise GeometryError('Every edge needs a length.')
        if len(self.edges) and (self.edges.min() < 0 or self.edges.max() >= len(self.coords)):
            raise GeometryError('Edge references a vertex that does not exist.')
        loops = self.edges[:, 0] == self.edges[:, 1]
        if loops.any() and not self.allow_loops:
            raise GeometryError('Region graphs carry no self-loops.')
        plain = ~loops
        if self.wired_vertex is not None:
            plain &= (self.edges != self.wired_vertex).all(axis=1)
        pairs = np.sort(self.edges[plain], axis=1)
        if len(pairs) and len(np.unique(pairs, axis=0)) != len(pairs):
            raise GeometryError('Parallel edges are only allowed at the wired vertex.')

    @property
    def n_vertices(self):
        return len(self.coords)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def dual_map(self):
        if self.dual is None:
            return None
        return np.arange(self.n_edges)

    @cached_property
    def lattice_vertices(self):
        """Indices of vertices that carry a coordinate."""
        return np.flatnonzero(~np.isnan(self.coords[:, 0]))

    @cached_property
    def incidence(self):
        """Per vertex, the list of (neighbour, edge) pairs; loops appear once."""
        out = [[] for _ in range(self.n_vertices)]
        for e, (a, b) in enumerate(self.edges.tolist()):
            out[a].append((b, e))
            if a != b:
                out[b].append((a, e))
        return out

    @cached_property
    def degrees(self):
        return np.array([len(x) for x in self.incidence], dtype=np.int64)

    @cached_property
    def vertex_index_by_key(self):
        if self.keys is None:
            return {}
        return {tuple(k): v for v, k in enumerate(self.keys.tolist()) if v != self.wired_vertex}

    @cached_property
    def edge_index_by_key(self):
        if self.edge_keys is None:
            return {}
        return {k: e for e, k in enumerate(self.edge_keys)}

    def other_end(self, e, v):
        a, b = self.edges[e]
        return int(b) if a == v else int(a)

    def is_connected(self):
        return self.component_count() == 1

    def component_count(self):
        if self.n_vertices == 0:
            return 0
        adj = coo_matrix(
            (np.ones(self.n_edges), (self.edges[:, 0], self.edges[:, 1])),
            shape=(self.n_vertices, self.n_vertices),
        )
        n, _ = connected_components(adj, directed=False)
        return n

    def nearest_vertex(self, point):
        idx = self.lattice_vertices
        d = np.linalg.norm(self.coords[idx] - np.asarray(point, dtype=float), axis=1)
        return int(idx[np.argmin(d)])


def _edge_key(p, q):
    a, b = sorted((tuple(p), tuple(q)))
    return a + b


def _build_lattice(delta, keys, side_of, bc_for_side, region, sides=None):
    index = {k: v for v, k in enumerate(map(tuple, keys.tolist()))}
    n = len(keys)
    wired = n if Boundary.WIRED in bc_for_side.values() else None
    edges, edge_keys, edge_sides = [], [], []
    free = {Side.INNER: set(), Side.OUTER: set()}
    for v, (i, j) in enumerate(keys.tolist()):
        for di, dj in _STEPS:
            nb = (i + di, j + dj)
            w = index.get(nb)
            if w is not None:
                if (di, dj) in ((1, 0), (0, 1)):
                    edges.append((v, w))
                    edge_keys.append(_edge_key((i, j), nb))
                    edge_sides.append(Side.INTERIOR)
                continue
            side = side_of(nb)
            if bc_for_side[side] == Boundary.WIRED:
                edges.append((v, wired))
                edge_keys.append(_edge_key((i, j), nb))
                edge_sides.append(side)
            else:
                free[side].add(v)

    coords = keys * float(delta)
    all_keys = keys
    if wired is not None:
        coords = np.vstack([coords, [np.nan, np.nan]])
        all_keys = np.vstack([keys, [np.iinfo(np.int64).min] * 2])
    if isinstance(region, AnnulusSpec):
        bc_inner, bc_outer = region.bc_inner, region.bc_outer
    else:
        bc_inner, bc_outer = None, bc_for_side[Side.OUTER]
    return RegionGraph(
        coords=coords,
        edges=np.array(edges, dtype=np.int64).reshape(-1, 2),
        lengths=np.full(len(edges), float(delta)),
        wired_vertex=wired,
        inner_boundary=frozenset(free[Side.INNER]),
        outer_boundary=frozenset(free[Side.OUTER]),
        region=region,
        delta=float(delta),
        bc_inner=bc_inner,
        bc_outer=bc_outer,
        keys=all_keys.astype(np.int64),
        edge_keys=tuple(edge_keys),
        edge_sides=np.array(edge_sides, dtype=np.int8),
        sides=sides or {},
    )


def _key_range(lo, hi, delta):
    tol = BOUNDARY_TOLERANCE
    return range(math.ceil(lo / delta - tol), math.floor(hi / delta + tol) + 1)


def build_lattice_annulus(delta, spec: AnnulusSpec):
    """
    Nearest-neighbour graph on the points of delta*Z^2 in the closed shell
    described by `spec`, with the boundary conditions it names.
    """
    if delta <= 0:
        raise GeometryError('Lattice spacing must be positive.')
    if spec.is_disc:
        if delta > spec.R:
            raise GeometryError(f'delta={delta} exceeds the disc radius {spec.R}.')
    elif delta >= (spec.R - spec.r) / 4:
        raise GeometryError(
            f'delta={delta} must be smaller than (R - r)/4 = {(spec.R - spec.r) / 4:g}.'
        )
    cx, cy = spec.center
    ii = _key_range(cx - spec.R, cx + spec.R, delta)
    jj = _key_range(cy - spec.R, cy + spec.R, delta)
    grid = np.array([(i, j) for i in ii for j in jj], dtype=np.int64).reshape(-1, 2)
    keys = grid[spec.contains(grid * float(delta), tol=BOUNDARY_TOLERANCE * delta)]
    if len(keys) == 0:
        raise GeometryError(f'No lattice points in {spec.describe()} at delta={delta}.')

    def side_of(key):
        return Side.INNER if spec.side_of(np.array(key) * float(delta))[0] == Side.INNER else Side.OUTER

    bc_for_side = {Side.OUTER: spec.bc_outer}
    bc_for_side[Side.INNER] = spec.bc_outer if spec.is_disc else spec.bc_inner
    g = _build_lattice(delta, keys, side_of, bc_for_side, spec)
    if not g.is_connected():
        raise DisconnectedGraphError(
            f'{spec.describe()} at delta={delta} has {g.component_count()} components.'
        )
    logger.debug('Built %s at delta=%g: %d vertices, %d edges',
                 spec.describe(), delta, g.n_vertices, g.n_edges)
    return g


def build_lattice_box(delta, rect: Rect, bc=Boundary.FREE):
    """Induced nearest-neighbour graph on delta*Z^2 inside `rect`."""
    bc = Boundary(bc)
    if delta <= 0:
        raise GeometryError('Lattice spacing must be positive.')
    if delta > min(rect.width, rect.height) * (1 + BOUNDARY_TOLERANCE):
        raise GeometryError(f'delta={delta} exceeds the shorter side of {rect.describe()}.')
    ii = _key_range(rect.x0, rect.x1, delta)
    jj = _key_range(rect.y0, rect.y1, delta)
    if len(ii) == 0 or len(jj) == 0:
        raise GeometryError(f'No lattice points in {rect.describe()} at delta={delta}.')
    keys = np.array([(i, j) for i in ii for j in jj], dtype=np.int64)
    sides = {
        'left': frozenset(np.flatnonzero(keys[:, 0] == ii[0]).tolist()),
        'right': frozenset(np.flatnonzero(keys[:, 0] == ii[-1]).tolist()),
        'bottom': frozenset(np.flatnonzero(keys[:, 1] == jj[0]).tolist()),
        'top': frozenset(np.flatnonzero(keys[:, 1] == jj[-1]).tolist()),
    }
    g = _build_lattice(delta, keys, lambda key: Side.OUTER,
                       {Side.INNER: bc, Side.OUTER: bc}, rect, sides)
    logger.debug('Built box %s at delta=%g: %d vertices, %d edges',
                 rect.describe(), delta, g.n_vertices, g.n_edges)
    return g


def planar_dual(g: RegionGraph):
    """
    Dual of a lattice region graph. Faces become dual vertices, the face
    spanned by a free side becomes the dual's wired vertex, and faces that
    touch the wired vertex form the dual's free boundary on that side. Dual
    edge i crosses primal edge i; the dual of the dual is `g` again.
    """
    if g.dual is not None:
        return g.dual
    if g.keys is None or g.edge_keys is None:
        raise GeometryError('Planar duals are defined for embedded lattice region graphs only.')
    region = g.region
    if isinstance(region, AnnulusSpec) and not region.is_disc and region.bc_inner == region.bc_outer:
        raise GeometryError(f'{region.describe()} has no planar dual with a single wired vertex.')

    delta = g.delta
    key_to_v = g.vertex_index_by_key
    bc_for_side = {Side.INNER: g.bc_inner or g.bc_outer, Side.OUTER: g.bc_outer}
    if isinstance(region, AnnulusSpec) and region.is_disc:
        bc_for_side[Side.INNER] = g.bc_outer
    lattice_keys = g.keys[g.lattice_vertices]
    imin, jmin = lattice_keys.min(axis=0)
    imax, jmax = lattice_keys.max(axis=0)

    kinds = {}

    def corner(key):
        if key not in kinds:
            if key in key_to_v:
                kinds[key] = (None, None)
            else:
                side = Side(int(region.side_of(np.array(key) * delta)[0]))
                kinds[key] = (side, bc_for_side[side])
        return kinds[key]

    cells = {}
    cell_free = []
    cell_wired_sides = []
    for ci in range(imin - 1, imax + 1):
        for cj in range(jmin - 1, jmax + 1):
            corners = [corner(k) for k in ((ci, cj), (ci + 1, cj), (ci + 1, cj + 1), (ci, cj + 1))]
            if all(bc == Boundary.WIRED for _, bc in corners):
                continue
            cells[(ci, cj)] = len(cells)
            cell_free.append(next((s for s, bc in corners if bc == Boundary.FREE), None))
            cell_wired_sides.append({s for s, bc in corners if bc == Boundary.WIRED})

    def is_free(key):
        return corner(key)[1] == Boundary.FREE

    uf = UnionFind(len(cells))
    for (ci, cj), c in cells.items():
        right = cells.get((ci + 1, cj))
        if right is not None and (is_free((ci + 1, cj)) or is_free((ci + 1, cj + 1))):
            uf.union(c, right)
        up = cells.get((ci, cj + 1))
        if up is not None and (is_free((ci, cj + 1)) or is_free((ci + 1, cj + 1))):
            uf.union(c, up)

    free_roots = {uf.find(c) for c in range(len(cells)) if cell_free[c] is not None}
    if len(free_roots) > 1:
        raise GeometryError('Region has more than one free face; its dual is not a single-wired graph.')
    free_root = next(iter(free_roots), None)
    free_side = None
    if free_root is not None:
        free_side = next(cell_free[c] for c in range(len(cells)) if uf.find(c) == free_root)

    face_of_root = {}
    coords = []
    dual_inner, dual_outer = set(), set()
    for (ci, cj), c in cells.items():
        root = uf.find(c)
        if root == free_root or root in face_of_root:
            continue
        face = face_of_root[root] = len(coords)
        coords.append(((ci + 0.5) * delta, (cj + 0.5) * delta))
        if Side.INNER in cell_wired_sides[c]:
            dual_inner.add(face)
        if Side.OUTER in cell_wired_sides[c]:
            dual_outer.add(face)
    dual_wired = None
    if free_root is not None:
        dual_wired = face_of_root[free_root] = len(coords)
        coords.append((np.nan, np.nan))

    edges = np.empty((g.n_edges, 2), dtype=np.int64)
    sides = np.zeros(g.n_edges, dtype=np.int8)
    for e, (i1, j1, i2, j2) in enumerate(g.edge_keys):
        if j1 == j2:
            pair = ((i1, j1), (i1, j1 - 1))
        else:
            pair = ((i1, j1), (i1 - 1, j1))
        a, b = (face_of_root[uf.find(cells[p])] for p in pair)
        edges[e] = (a, b)
        if dual_wired is not None and dual_wired in (a, b):
            sides[e] = free_side

    if isinstance(region, AnnulusSpec):
        dual_region = region.with_boundaries(region.bc_outer, region.bc_inner)
        dual_bc_inner, dual_bc_outer = dual_region.bc_inner, dual_region.bc_outer
    else:
        dual_region = region
        dual_bc_inner = None
        dual_bc_outer = Boundary.WIRED if g.bc_outer == Boundary.FREE else Boundary.FREE
    dual = RegionGraph(
        coords=np.array(coords, dtype=float),
        edges=edges,
        lengths=np.full(g.n_edges, float(delta)),
        wired_vertex=dual_wired,
        inner_boundary=frozenset(dual_inner),
        outer_boundary=frozenset(dual_outer),
        region=dual_region,
        delta=delta,
        bc_inner=dual_bc_inner,
        bc_outer=dual_bc_outer,
        edge_sides=sides,
        allow_loops=True,
    )
    dual.dual = g
    g.dual = dual
    logger.debug('Dual of %s: %d faces, %d edges', getattr(region, 'describe', str)(),
                 dual.n_vertices, dual.n_edges)
    return dual
