"""
Per-sample observables. Each task is a small picklable dataclass called as
task(index, rng); worker processes import this module without touching
the ORM. Lattice graphs are built once per process and reused.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from django.db.models import TextChoices

from trees.crossings import (crossing_exists, long_edge_crossings, percolation_crossing_count,
                             semipath_crossing_count, tree_traversal_count)
from trees.est import (check_vacant_separation, droplet_graph, droplet_threshold, est_region_graph,
                       euclidean_mst, sample_poisson, vacant_crossing_exists)
from trees.grid import AnnulusSpec, Boundary, Rect, build_lattice_annulus, build_lattice_box
from trees.mst import (bracketing_check, draw_call_numbers, dual_mst_check, fw_factorization_sample,
                       kruskal_mst, verify_vacancy_cycle_property)
from trees.structures import CheckReport
from trees.ust import choking_start, choking_walk, ust_branch, wilson_ust

ORIGIN = (0.0, 0.0)


class TreeModel(TextChoices):
    UST = 'UST', 'Uniform spanning tree'
    MST = 'MST', 'Minimal spanning tree'
    EST = 'EST', 'Euclidean minimal spanning tree'
    BERNOULLI = 'Bernoulli', 'Bernoulli bond percolation'
    DROPLET = 'Droplet', 'Droplet percolation'
    VACANT = 'Vacant', 'Vacant percolation'


TREE_MODELS = (TreeModel.UST, TreeModel.MST, TreeModel.EST)


@lru_cache(maxsize=32)
def lattice_annulus(delta, r, R, bc_inner=Boundary.FREE, bc_outer=Boundary.WIRED):
    return build_lattice_annulus(delta, AnnulusSpec(ORIGIN, r, R, bc_inner, bc_outer))


@lru_cache(maxsize=32)
def lattice_box(delta, rect: Rect, bc=Boundary.FREE):
    return build_lattice_box(delta, rect, bc)


def sample_tree(model, region, delta, rng):
    """One spanning tree of the named model on an annulus or disc region."""
    model = TreeModel(model)
    if model == TreeModel.EST:
        pts = sample_poisson(region, delta, rng)
        return euclidean_mst(pts, region.bc_inner, region.bc_outer)
    g = lattice_annulus(delta, region.r, region.R, region.bc_inner, region.bc_outer)
    if model == TreeModel.UST:
        return wilson_ust(g, rng=rng)
    if model == TreeModel.MST:
        root = g.wired_vertex if g.wired_vertex is not None else 0
        return kruskal_mst(g, draw_call_numbers(g, rng), root=root)
    raise ValueError(f'{model} is not a spanning tree model.')


@dataclass(frozen=True)
class TraversalTask:
    """Disjoint traversal counts of D(r, R) and of nested shells, all from one tree."""
    model: str
    r: float
    R: float
    delta: float
    bc_inner: str = Boundary.FREE
    bc_outer: str = Boundary.WIRED
    shells: tuple = ()

    def __call__(self, index, rng):
        region = AnnulusSpec(ORIGIN, self.r, self.R, self.bc_inner, self.bc_outer)
        t = sample_tree(self.model, region, self.delta, rng)
        out = {'count': tree_traversal_count(t), 'shells': [], 'long_edges': []}
        for a, b in self.shells:
            shell = AnnulusSpec(ORIGIN, a, b, self.bc_inner, self.bc_outer)
            out['shells'].append(tree_traversal_count(t, shell))
            out['long_edges'].append(len(long_edge_crossings(t, shell)))
        return out


@dataclass(frozen=True)
class SemipathTask:
    """MST tree traversal count and p_c-semipath count of the same F/W sample."""
    r: float
    R: float
    delta: float

    def __call__(self, index, rng):
        g = lattice_annulus(self.delta, self.r, self.R, Boundary.FREE, Boundary.WIRED)
        u = draw_call_numbers(g, rng)
        t = kruskal_mst(g, u, root=g.wired_vertex)
        return {'tree': tree_traversal_count(t), 'semipath': semipath_crossing_count(g, u)}


def rotated_rectangles(width, aspect, delta):
    """The rectangle of width `width` and length aspect*width above the origin, and its quarter turns."""
    half, lo, hi = aspect * width / 2, delta / 2, delta / 2 + width
    return [
        (Rect(-half, lo, half, hi), 'horizontal'),
        (Rect(-hi, -half, -lo, half), 'vertical'),
        (Rect(-half, -hi, half, -lo), 'horizontal'),
        (Rect(lo, -half, hi, half), 'vertical'),
    ]


@dataclass(frozen=True)
class RectangleTask:
    """Lengthwise traversals of a rectangle and its rotations by a tree on a free disc."""
    model: str
    width: float
    aspect: float
    delta: float

    def __call__(self, index, rng):
        disc = AnnulusSpec(ORIGIN, 0.0, self.aspect * self.width, Boundary.FREE, Boundary.FREE)
        t = sample_tree(self.model, disc, self.delta, rng)
        hits = [crossing_exists(t.graph, t.edges, rect, direction)
                for rect, direction in rotated_rectangles(self.width, self.aspect, self.delta)]
        return {'traversed': bool(hits[0]), 'rotations': int(sum(hits))}


@dataclass(frozen=True)
class ChokingTask:
    """Does a walk from radius 2r close a loop around the hole of D(r, 3r) before hitting a boundary?"""
    r: float
    delta: float

    def __call__(self, index, rng):
        g = lattice_annulus(self.delta, self.r, 3 * self.r, Boundary.FREE, Boundary.WIRED)
        outcome = choking_walk(g, choking_start(g, g.region), ORIGIN, rng)
        return {'success': outcome.success, 'steps': outcome.steps, 'loop': len(outcome.loop)}


@dataclass(frozen=True)
class BernoulliCrossingTask:
    """Horizontal open crossing of the (n+1) x n vertex rectangle at bond density p."""
    n_side: int
    p: float = 0.5

    def __call__(self, index, rng):
        rect = Rect(0.0, 0.0, float(self.n_side), float(self.n_side - 1))
        g = lattice_box(1.0, rect, Boundary.FREE)
        occupied = np.flatnonzero(rng.random(g.n_edges) < self.p)
        return {'success': crossing_exists(g, occupied, rect, 'horizontal')}


@dataclass(frozen=True)
class DropletThresholdTask:
    """Smallest disc scale p at which droplets cross a rectangle of Poisson points."""
    width: float
    height: float
    delta: float
    direction: str = 'horizontal'

    def __call__(self, index, rng):
        rect = Rect(0.0, 0.0, self.width, self.height)
        pts = sample_poisson(rect, self.delta, rng)
        return {'threshold': droplet_threshold(pts, self.delta, rect, self.direction), 'points': len(pts)}


@dataclass(frozen=True)
class UniformityTask:
    """Edge set of one Wilson sample on a small graph."""
    graph: object
    root: int = 0

    def __call__(self, index, rng):
        return tuple(int(e) for e in wilson_ust(self.graph, root=self.root, rng=rng).edges)


@dataclass(frozen=True)
class BranchTask:
    """UST branch between opposite corners of the n x n box."""
    n_side: int

    def __call__(self, index, rng):
        rect = Rect(0.0, 0.0, float(self.n_side), float(self.n_side))
        g = lattice_box(1.0, rect, Boundary.FREE)
        a = g.nearest_vertex((0.0, 0.0))
        b = g.nearest_vertex((float(self.n_side), float(self.n_side)))
        _path, curve = ust_branch(g, a, b, rng)
        return curve


@dataclass(frozen=True)
class LemmaSuiteTask:
    """Deterministic per-sample checks for the MST or EST couplings; returns merged violations."""
    model: str
    r: float
    R: float
    delta: float
    cut_fraction: float = 0.437
    p: float = 0.3
    checks: tuple = field(default=('vacancy', 'dual', 'bracketing', 'factorization', 'clearance'))

    def __call__(self, index, rng):
        model = TreeModel(self.model)
        region = AnnulusSpec(ORIGIN, self.r, self.R, Boundary.FREE, Boundary.WIRED)
        reports = []
        if model == TreeModel.MST:
            g = lattice_annulus(self.delta, self.r, self.R, Boundary.FREE, Boundary.WIRED)
            u = draw_call_numbers(g, rng)
            t = kruskal_mst(g, u, root=g.wired_vertex)
            if 'vacancy' in self.checks:
                reports.append(verify_vacancy_cycle_property(g, u, t))
            if 'dual' in self.checks:
                reports.append(dual_mst_check(g, u))
            if 'bracketing' in self.checks:
                mid = (self.r + self.R) / 2
                width = (self.R - self.r) / 2
                sub = Rect(mid - width / 2, -width / 2, mid + width / 2, width / 2)
                reports.append(bracketing_check(g, u, sub))
            if 'factorization' in self.checks:
                cut = self.r + self.cut_fraction * (self.R - self.r)
                reports.append(fw_factorization_sample(g, u, cut))
        elif model == TreeModel.EST:
            pts = sample_poisson(region, self.delta, rng)
            if 'vacancy' in self.checks:
                g = est_region_graph(pts, Boundary.FREE, Boundary.WIRED)
                t = kruskal_mst(g, g.lengths, root=g.wired_vertex)
                reports.append(verify_vacancy_cycle_property(g, g.lengths, t))
            if 'clearance' in self.checks:
                reports.append(check_vacant_separation(pts, self.p))
        else:
            raise ValueError(f'No deterministic checks for {model}.')
        return [(rep.name, rep.checked, rep.violations[:5], len(rep.violations)) for rep in reports]


def merge_suite(results):
    """Fold per-sample LemmaSuiteTask outputs into one CheckReport per check name."""
    merged = {}
    for sample, items in enumerate(results):
        for name, checked, violations, n_violations in items:
            rep = merged.setdefault(name, CheckReport(name))
            rep.checked += checked
            if n_violations:
                rep.violations.append({'sample': sample, 'count': n_violations, 'first': violations})
    return merged


@dataclass(frozen=True)
class PercolationTask:
    """Disjoint crossings of D(r, R) by an occupied configuration: bonds, droplets or vacant space."""
    model: str
    r: float
    R: float
    delta: float
    p: float = 0.5

    def __call__(self, index, rng):
        model = TreeModel(self.model)
        region = AnnulusSpec(ORIGIN, self.r, self.R, Boundary.FREE, Boundary.FREE)
        if model == TreeModel.BERNOULLI:
            g = lattice_annulus(self.delta, self.r, self.R, Boundary.FREE, Boundary.FREE)
            occupied = np.flatnonzero(rng.random(g.n_edges) < self.p)
            return {'count': percolation_crossing_count(g, occupied)}
        pts = sample_poisson(region, self.delta, rng)
        if model == TreeModel.DROPLET:
            g = droplet_graph(pts, self.p)
            return {'count': percolation_crossing_count(g, np.arange(g.n_edges))}
        if model == TreeModel.VACANT:
            return {'count': int(vacant_crossing_exists(pts, self.p, self.delta, region))}
        raise ValueError(f'{model} is not a percolation model.')
