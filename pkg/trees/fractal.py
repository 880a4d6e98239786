"""
Geometric observables of branches and trees: the compactified plane
metric, curve distance, box-counting dimension, Hoelder modulus, branching
points of a given scale, and the circle covering used to bound them.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .exceptions import DegenerateInputError
from .grid import AnnulusSpec, Rect
from .structures import Curve

logger = logging.getLogger(__name__)


def _lift(points):
    """Inverse stereographic projection onto the unit sphere; None stands for infinity."""
    if points is None:
        return np.array([[0.0, 0.0, 1.0]])
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    sq = np.sum(p * p, axis=1)
    return np.column_stack([2 * p[:, 0], 2 * p[:, 1], sq - 1]) / (sq + 1)[:, None]


def sphere_metric(u, v):
    """
    Distance for the length element |dx| / (1 + |x|^2): half the great-circle
    angle between the lifted points. Either argument may be None (infinity).
    """
    a, b = _lift(u)[0], _lift(v)[0]
    return float(math.atan2(np.linalg.norm(a - b), np.linalg.norm(a + b)))


def _pairwise_sphere(p, q):
    a, b = _lift(p), _lift(q)
    return np.arctan2(cdist(a, b), cdist(a, -b))


def _frechet(dist):
    """Discrete Frechet distance from a pairwise distance table, one anti-diagonal at a time."""
    n, m = dist.shape
    ret = np.full((n, m), np.inf)
    for k in range(n + m - 1):
        i = np.arange(max(0, k - m + 1), min(n, k + 1))
        j = k - i
        if k == 0:
            ret[0, 0] = dist[0, 0]
            continue
        best = np.full(len(i), np.inf)
        up = i > 0
        best[up] = np.minimum(best[up], ret[i[up] - 1, j[up]])
        left = j > 0
        best[left] = np.minimum(best[left], ret[i[left], j[left] - 1])
        diag = up & left
        best[diag] = np.minimum(best[diag], ret[i[diag] - 1, j[diag] - 1])
        ret[i, j] = np.maximum(best, dist[i, j])
    return float(ret[-1, -1])


def curve_distance(c1: Curve, c2: Curve, step=None):
    """
    Discrete Frechet distance under sphere_metric, minimised over both
    orientations of c2. `step` refines both polylines first.
    """
    for c in (c1, c2):
        if c is None or len(c) == 0:
            raise DegenerateInputError('Curve distance needs two non-empty curves.')
    if step is not None:
        c1, c2 = c1.refine(step), c2.refine(step)
    dist = _pairwise_sphere(c1.points, c2.points)
    return min(_frechet(dist), _frechet(dist[:, ::-1]))


@dataclass
class DimensionFit:
    scales: np.ndarray
    counts: np.ndarray
    slope: float
    stderr: float
    intercept: float
    fit_range: tuple

    def as_dict(self):
        return {
            'scales': self.scales.tolist(),
            'counts': self.counts.tolist(),
            'slope': self.slope,
            'stderr': self.stderr,
            'intercept': self.intercept,
            'fit_range': list(self.fit_range),
        }


def _typical_spacing(points):
    if len(points) < 2:
        return 0.0
    d, _ = cKDTree(points).query(points, k=2)
    return float(np.median(d[:, 1]))


def box_counting(data, scales=None, delta=None):
    """
    Box-counting dimension of a point cloud or a Curve. Occupied boxes of a
    grid anchored at the bounding-box corner are counted at dyadic scales
    from diam/8 down to 4*delta (delta defaults to the median nearest-
    neighbour spacing). Curves are refined so their segments are covered.
    """
    if isinstance(data, Curve):
        curve = data
        points = curve.points
    else:
        curve = None
        points = np.asarray(data, dtype=float).reshape(-1, 2)
    if len(points) < 2:
        raise DegenerateInputError('Box counting needs at least two points.')
    lo = points.min(axis=0)
    diam = float((points.max(axis=0) - lo).max())
    if diam == 0:
        raise DegenerateInputError('Box counting needs points that are not all equal.')
    if scales is None:
        delta = _typical_spacing(points) if delta is None else delta
        top, bottom = diam / 8, 4 * delta
        scales = []
        s = top
        while s >= bottom * (1 - 1e-12):
            scales.append(s)
            s /= 2
    scales = np.asarray(sorted(scales, reverse=True), dtype=float)
    if len(scales) < 4:
        raise DegenerateInputError(f'Box counting needs at least 4 scales, got {len(scales)}.')
    if curve is not None:
        points = curve.refine(scales.min() / 4).points
    counts = np.array([
        len(np.unique(np.floor((points - lo) / s).astype(np.int64), axis=0)) for s in scales
    ])
    fit = stats.linregress(np.log(1 / scales), np.log(counts))
    return DimensionFit(
        scales=scales,
        counts=counts,
        slope=float(fit.slope),
        stderr=float(fit.stderr),
        intercept=float(fit.intercept),
        fit_range=(float(scales.min()), float(scales.max())),
    )


def holder_modulus(c: Curve, alpha, block=512):
    """
    Largest |g(t) - g(t')| / ((1 + |g(t)|^2 + |g(t')|^2) |t - t'|^alpha) over
    index pairs, for g the curve parametrised by normalised vertex index.
    """
    points = c.points
    n = len(points)
    if n < 2:
        raise DegenerateInputError('The Hoelder modulus needs a curve with at least two points.')
    if not 0 < alpha <= 1:
        raise ValueError('alpha must lie in (0, 1].')
    t = np.arange(n) / (n - 1)
    sq = np.sum(points * points, axis=1)
    best = 0.0
    for start in range(0, n, block):
        rows = slice(start, min(n, start + block))
        disp = cdist(points[rows], points)
        dt = np.abs(t[rows, None] - t[None, :])
        weight = (1 + sq[rows, None] + sq[None, :]) * np.where(dt > 0, dt, 1.0) ** alpha
        ratio = np.where(dt > 0, disp / weight, 0.0)
        best = max(best, float(ratio.max()))
    return best


def branch_scale_degree(t, v, eps):
    """
    Number of components of the tree with v removed that reach Euclidean
    distance eps from v.
    """
    coords = t.graph.coords
    origin = coords[v]
    if np.isnan(origin).any():
        return 0
    far = 0
    for start, _e in t.adjacency[v]:
        seen = {v, start}
        queue = deque([start])
        while queue:
            w = queue.popleft()
            if np.hypot(*(coords[w] - origin)) >= eps:
                far += 1
                break
            for x, _f in t.adjacency[w]:
                if x not in seen:
                    seen.add(x)
                    queue.append(x)
    return far


def _shrink(window, margin):
    if isinstance(window, Rect):
        if window.width <= 2 * margin or window.height <= 2 * margin:
            return None
        return Rect(window.x0 + margin, window.y0 + margin, window.x1 - margin, window.y1 - margin)
    r = window.r + margin if not window.is_disc else 0.0
    R = window.R - margin
    if R <= r:
        return None
    return AnnulusSpec(window.center, r, R, window.bc_inner, window.bc_outer)


@dataclass
class BranchingCensus:
    eps: float
    vertices: list = field(default_factory=list)
    points: np.ndarray | None = None
    window: Rect | AnnulusSpec | None = None

    @property
    def count(self):
        return len(self.vertices)


def branching_census(t, eps, window=None, margin=None):
    """Vertices in the window (less a margin of 2*eps) where three or more branches reach eps."""
    g = t.graph
    window = g.region if window is None else window
    margin = 2 * eps if margin is None else margin
    inner = _shrink(window, margin) if window is not None else None
    if window is not None and inner is None:
        return BranchingCensus(eps, [], np.empty((0, 2)), None)
    idx = g.lattice_vertices
    if inner is not None:
        idx = idx[inner.contains(g.coords[idx])]
    degree = np.array([len(t.adjacency[v]) for v in idx.tolist()], dtype=np.int64)
    found = [int(v) for v in idx[degree >= 3].tolist() if branch_scale_degree(t, v, eps) >= 3]
    return BranchingCensus(eps, found, g.coords[found].reshape(-1, 2), inner)


def census_scaling(t, eps_values, window=None):
    """
    Branching counts over several scales, fitted as N_eps ~ eps^-slope where
    at least two scales have a non-empty census.
    """
    eps_values = sorted(float(e) for e in eps_values)
    counts = [branching_census(t, e, window).count for e in eps_values]
    summary = {
        'eps': eps_values,
        'counts': counts,
        'nonincreasing': all(a >= b for a, b in zip(counts, counts[1:])),
        'slope': None,
        'stderr': None,
    }
    usable = [(e, n) for e, n in zip(eps_values, counts) if n > 0]
    if len(usable) >= 3:
        fit = stats.linregress(np.log([1 / e for e, _ in usable]), np.log([n for _, n in usable]))
        summary['slope'] = float(fit.slope)
        summary['stderr'] = float(fit.stderr)
    return summary


@dataclass
class CircleCover:
    """Centres on the unit circle, the ball radius c, and families of well-separated centres."""
    centers: np.ndarray
    c: float
    sigma: float
    families: list

    @property
    def m(self):
        return len(self.families)

    def covers(self, points):
        d, _ = cKDTree(self.centers).query(np.asarray(points, dtype=float).reshape(-1, 2))
        return bool((d <= self.c * (1 + 1e-12)).all())

    def family_violations(self):
        """Pairs within a family whose sigma-dilated balls overlap."""
        out = []
        for k, members in enumerate(self.families):
            pts = self.centers[members]
            if len(pts) < 2:
                continue
            d = cdist(pts, pts)
            i, j = np.nonzero(np.triu(d < 2 * self.sigma * self.c * (1 - 1e-12), k=1))
            out.extend((k, int(members[a]), int(members[b])) for a, b in zip(i, j))
        return out


def cover_circle(c, sigma=1.0):
    """
    Evenly spaced centres whose radius-c balls cover the unit circle,
    greedily split into families whose sigma*c balls are pairwise disjoint.

    Neighbouring centres are 2*pi/n apart with n = ceil(pi / (2*asin(c/2))),
    so every point of the circle is within chord c of a centre. Since
    2*asin(c/2) >= c and c < 1, there are at most ceil(pi/c) centres.
    """
    if not 0 < c < 1:
        raise DegenerateInputError(f'Cover radius must lie in (0, 1), got {c}.')
    if sigma < 1:
        raise DegenerateInputError(f'Dilation must be at least 1, got {sigma}.')
    n = math.ceil(math.pi / (2 * math.asin(c / 2)) - 1e-12)
    n = max(n, 3)
    theta = 2 * math.pi * np.arange(n) / n
    centers = np.column_stack([np.cos(theta), np.sin(theta)])
    limit = 2 * sigma * c * (1 - 1e-12)
    families = []
    for i in range(n):
        for members in families:
            if np.linalg.norm(centers[members] - centers[i], axis=1).min() >= limit:
                members.append(i)
                break
        else:
            families.append([i])
    logger.debug('Circle cover c=%g sigma=%g: %d centres in %d families', c, sigma, n, len(families))
    return CircleCover(centers, c, sigma, [np.array(f, dtype=np.int64) for f in families])
