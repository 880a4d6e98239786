"""
Statistical layer: crossing probabilities with Wilson intervals, exponent
fits, and the Monte Carlo checks of geometric decay, the telescopic bound,
moment generating functions, rectangle traversals and resolution stability.

Every estimator takes an integer base seed; sample i always uses
seed_stream(seed, i), so results do not depend on the worker count.
"""
import logging
import math
from collections import Counter
from itertools import combinations

import numpy as np
from django.conf import settings
from scipy import stats

from trees.exceptions import GeometryError
from trees.fractal import box_counting, census_scaling, cover_circle
from trees.grid import AnnulusSpec, Boundary, Rect
from trees.structures import CheckReport, enumerate_spanning_trees
from trees.ust import wilson_ust

from .models import EstimateRecord, ExponentFit
from .parallel import run_samples
from .sampling import (ORIGIN, BernoulliCrossingTask, BranchTask, ChokingTask, DropletThresholdTask,
                       LemmaSuiteTask, PercolationTask, RectangleTask, SemipathTask, TraversalTask,
                       TreeModel, TREE_MODELS, UniformityTask, lattice_annulus, lattice_box, merge_suite)
from .seeding import seed_stream, sub_seed

logger = logging.getLogger(__name__)

DEFAULT_ASPECTS = (2.0, 3.0, 4.5, 6.75)
RECTANGLE_BOUND = 0.75
TOLERANCE_SIGMAS = 3.0

Observable = EstimateRecord.Observable


class FitError(ValueError):
    """Too few usable cells, or cells that do not belong to one fit."""


def wilson_interval(successes, n, level=0.95):
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        return 0.0, 1.0
    z = stats.norm.ppf(0.5 + level / 2)
    p = successes / n
    denom = 1 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return min(max(0.0, center - half), p), max(min(1.0, center + half), p)


def _require_samples(n):
    if n <= 0:
        raise ValueError('At least one sample is needed.')


def probability_record(observable, model, geometry, successes, n, seed, delta, **fields):
    lo, hi = wilson_interval(successes, n)
    return EstimateRecord(
        observable=observable,
        model=model,
        geometry=geometry,
        delta=delta,
        n_samples=n,
        successes=successes,
        p_hat=successes / n if n else 0.0,
        ci_low=lo,
        ci_high=hi,
        seed=seed,
        **fields,
    )


def _annulus_fields(spec: AnnulusSpec):
    return {'r_inner': spec.r, 'r_outer': spec.R, 'bc_inner': spec.bc_inner, 'bc_outer': spec.bc_outer}


def _histogram(counts):
    return {str(k): v for k, v in sorted(Counter(int(c) for c in counts).items())}


def crossing_counts(model, spec: AnnulusSpec, delta, n, seed, shells=(), p=0.5, workers=None):
    """Per-sample traversal counts of `spec` (tree models) or crossing counts (percolation models)."""
    _require_samples(n)
    model = TreeModel(model)
    if model in TREE_MODELS:
        task = TraversalTask(model, spec.r, spec.R, delta, spec.bc_inner, spec.bc_outer, tuple(shells))
    else:
        task = PercolationTask(model, spec.r, spec.R, delta, p)
    return run_samples(task, n, seed, workers)


def records_from_counts(model, spec, delta, seed, counts, ks):
    """One record per k from a single sample set, so p_hat(k + 1) <= p_hat(k) holds exactly."""
    counts = np.asarray(counts, dtype=np.int64)
    histogram = _histogram(counts)
    return [
        probability_record(
            Observable.CROSSING_PROBABILITY, model, spec.describe(), int((counts >= k).sum()),
            len(counts), seed, delta, k=k, details={'count_histogram': histogram},
            **_annulus_fields(spec),
        )
        for k in ks
    ]


def estimate_crossing_probability(model, spec: AnnulusSpec, k, delta, n, seed, workers=None, p=0.5):
    """Fraction of n samples whose tree (or configuration) has at least k disjoint traversals."""
    _require_samples(n)
    if TreeModel(model) == TreeModel.VACANT and k > 1:
        raise ValueError('Vacant crossings are counted as existence only (k <= 1).')
    if k == 0:
        return records_from_counts(model, spec, delta, seed, np.zeros(n), [0])[0]
    results = crossing_counts(model, spec, delta, n, seed, p=p, workers=workers)
    return records_from_counts(model, spec, delta, seed, [x['count'] for x in results], [k])[0]


def fit_exponent(records, k=None, min_successes=None):
    """
    Least-squares slope of log p_hat against log(r/R). Cells with p_hat = 0
    or fewer than `min_successes` successes are dropped with a warning.
    """
    min_successes = settings.SPANTREE_MIN_SUCCESSES if min_successes is None else min_successes
    records = list(records)
    keys = {(rec.model, rec.k, rec.bc_inner, rec.bc_outer) for rec in records}
    if len(keys) > 1:
        raise FitError(f'Records mix models, k or boundary conditions: {sorted(map(str, keys))}.')
    usable, excluded = [], []
    for rec in records:
        if rec.p_hat <= 0 or rec.successes < min_successes:
            logger.warning('Excluding %s from the fit: %d successes, p_hat=%g',
                           rec.geometry, rec.successes, rec.p_hat)
            excluded.append(rec.geometry)
            continue
        usable.append(rec)
    aspects = sorted({rec.r_outer / rec.r_inner for rec in usable})
    if len(aspects) < 3:
        raise FitError(f'{len(aspects)} usable aspect ratios; an exponent fit needs at least 3.')
    x = np.array([math.log(rec.r_inner / rec.r_outer) for rec in usable])
    y = np.array([math.log(rec.p_hat) for rec in usable])
    fit = stats.linregress(x, y)
    residuals = y - (fit.intercept + fit.slope * x)
    first = usable[0]
    return ExponentFit(
        model=first.model,
        k=first.k if k is None else k,
        bc_inner=first.bc_inner,
        bc_outer=first.bc_outer,
        exponent_hat=float(fit.slope),
        stderr=float(abs(fit.stderr)),
        intercept=float(fit.intercept),
        aspect_ratios=[rec.r_outer / rec.r_inner for rec in usable],
        residuals=[float(v) for v in residuals],
        details={'excluded': excluded},
    )


def fit_gamma(model, k, delta, n, seed, r=1.0, aspects=DEFAULT_ASPECTS, workers=None, min_successes=None):
    """Estimate the F/W crossing exponent for k traversals over a grid of aspect ratios."""
    records = []
    for i, aspect in enumerate(aspects):
        spec = AnnulusSpec(ORIGIN, r, aspect * r, Boundary.FREE, Boundary.WIRED)
        cell_seed = sub_seed(seed, i)
        counts = [x['count'] for x in crossing_counts(model, spec, delta, n, cell_seed, workers=workers)]
        records.extend(records_from_counts(model, spec, delta, cell_seed, counts, [k]))
    return records, fit_exponent(records, k, min_successes)


def geometric_decay_check(model, aspect, k_max, delta, n, seed, r=1.0, margin=0.0, workers=None):
    """
    p_hat(k) for k = 1..k_max from shared samples on D(r, aspect*r) F/W. The
    successive ratios p_hat(k+1)/p_hat(k) must stay below 1 - margin: a
    ratio fails when its Bonferroni-corrected Wilson lower bound exceeds it.
    """
    spec = AnnulusSpec(ORIGIN, r, aspect * r, Boundary.FREE, Boundary.WIRED)
    counts = np.array([x['count'] for x in crossing_counts(model, spec, delta, n, seed, workers=workers)])
    ks = list(range(1, k_max + 1))
    records = records_from_counts(model, spec, delta, seed, counts, ks)
    report = CheckReport('geometric_decay')
    successes = [rec.successes for rec in records]
    for a, b, k in zip(successes, successes[1:], ks):
        report.checked += 1
        if b > a:
            report.violations.append({'k': k, 'reason': 'not monotone'})

    compared = [i for i in range(len(ks) - 1) if successes[i] > 0]
    level = 1 - 0.05 / max(1, len(compared))
    ratios = []
    for i in compared:
        lo, hi = wilson_interval(successes[i + 1], successes[i], level)
        ratio = successes[i + 1] / successes[i]
        ratios.append({'k': ks[i], 'ratio': ratio, 'ci_low': lo, 'ci_high': hi})
        report.checked += 1
        if lo > 1 - margin:
            report.violations.append({'k': ks[i], 'ratio': ratio, 'ci_low': lo})
    positive = [(k, rec.p_hat) for k, rec in zip(ks, records) if rec.p_hat > 0]
    decay = None
    if len(positive) >= 2:
        decay = -float(stats.linregress([k for k, _ in positive], [math.log(p) for _, p in positive]).slope)
    report.details.update({'p_hat': [rec.p_hat for rec in records], 'ratios': ratios,
                           'decay_rate': decay, 'margin': margin, 'level': level})
    if not report.passed:
        logger.warning('Geometric decay check failed for %s: %s', model, report.summary())
    return records, report


def _combined_se(*ses):
    return math.sqrt(sum(s * s for s in ses))


def telescopic_compare(model, radii, k, delta, n, seed, workers=None):
    """
    Compare p_hat(D(r_1, r_m), k) with the product over consecutive shells of
    p_hat(D(r_j, r_j+1), k) plus the frequency of edges jumping that shell.
    """
    radii = [float(x) for x in radii]
    if len(radii) < 2 or any(b <= a for a, b in zip(radii, radii[1:])):
        raise GeometryError('Telescopic radii must be strictly increasing, at least two of them.')
    shells = list(zip(radii, radii[1:])) if len(radii) > 2 else []
    outer = AnnulusSpec(ORIGIN, radii[0], radii[-1], Boundary.FREE, Boundary.WIRED)
    results = crossing_counts(model, outer, delta, n, seed, shells=shells, workers=workers)
    lhs = records_from_counts(model, outer, delta, seed, [x['count'] for x in results], [k])[0]
    records = [lhs]
    if not shells:
        factors = [(lhs.p_hat, lhs.stderr)]
        long_freq = [0.0]
    else:
        factors, long_freq = [], []
        for j, (a, b) in enumerate(shells):
            spec = AnnulusSpec(ORIGIN, a, b, Boundary.FREE, Boundary.WIRED)
            cell_seed = sub_seed(seed, j + 1)
            counts = [x['count'] for x in crossing_counts(model, spec, delta, n, cell_seed, workers=workers)]
            rec = records_from_counts(model, spec, delta, cell_seed, counts, [k])[0]
            records.append(rec)
            freq = float(np.mean([x['long_edges'][j] > 0 for x in results]))
            long_freq.append(freq)
            factors.append((min(1.0, rec.p_hat + freq), rec.stderr))
    product = float(np.prod([f for f, _ in factors]))
    se_product = product * _combined_se(*(se / f for f, se in factors if f > 0))
    tolerance = TOLERANCE_SIGMAS * _combined_se(lhs.stderr, se_product)
    report = CheckReport('telescopic', checked=1)
    if lhs.p_hat - product > tolerance:
        report.violations.append({'lhs': lhs.p_hat, 'product': product, 'tolerance': tolerance})
        logger.warning('Telescopic bound violated: %g > %g + %g', lhs.p_hat, product, tolerance)
    report.details.update({'lhs': lhs.p_hat, 'product': product, 'se_product': se_product,
                           'long_edge_frequency': long_freq, 'identity': not shells})
    return records, report


def _jackknife_mean_se(values):
    n = len(values)
    if n < 2:
        return 0.0
    total = values.sum()
    loo = (total - values) / (n - 1)
    return float(math.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2)))


def mgf_curve(counts, ts):
    """Sample means of exp(t * M) over the same counts for each t."""
    counts = np.asarray(counts, dtype=float)
    return [float(np.mean(np.exp(t * counts))) for t in ts]


def estimate_crossing_mgf(model, aspect, t, delta, n, seed, r=1.0, workers=None):
    """Mean of exp(t * M) for M the traversal count of D(r, aspect*r) F/W, with a jackknife error."""
    spec = AnnulusSpec(ORIGIN, r, aspect * r, Boundary.FREE, Boundary.WIRED)
    counts = np.array([x['count'] for x in crossing_counts(model, spec, delta, n, seed, workers=workers)])
    values = np.exp(t * counts.astype(float))
    mean = float(values.mean())
    se = _jackknife_mean_se(values)
    z = stats.norm.ppf(0.975)
    return EstimateRecord(
        observable=Observable.MGF,
        model=model,
        geometry=spec.describe(),
        delta=delta,
        n_samples=n,
        successes=int((counts > 0).sum()),
        p_hat=mean,
        ci_low=mean - z * se,
        ci_high=mean + z * se,
        seed=seed,
        details={'t': t, 'stderr': se, 'count_histogram': _histogram(counts)},
        **_annulus_fields(spec),
    )


def compare_growth_models(ks, gammas):
    """
    Linear against quadratic fits of gamma(k), compared by AIC, and the
    coefficient beta of gamma(k) ~ beta (k - 1)^2 fitted through the origin.
    """
    ks = np.asarray(ks, dtype=float)
    gammas = np.asarray(gammas, dtype=float)
    n = len(ks)
    if n < 3:
        raise FitError('Comparing growth models needs at least three values of k.')
    out = {}
    for name, degree in (('linear', 1), ('quadratic', 2)):
        coeffs = np.polyfit(ks, gammas, degree)
        rss = float(np.sum((np.polyval(coeffs, ks) - gammas) ** 2))
        out[f'aic_{name}'] = n * math.log(max(rss, 1e-30) / n) + 2 * (degree + 1)
        out[f'coefficients_{name}'] = [float(c) for c in coeffs]
    shifted = (ks - 1) ** 2
    out['beta'] = float(np.sum(gammas * shifted) / np.sum(shifted * shifted)) if shifted.any() else None
    out['preferred'] = 'quadratic' if out['aic_quadratic'] < out['aic_linear'] else 'linear'
    return out


def quadratic_growth_probe(model, ks, delta, n, seed, r=1.0, aspects=DEFAULT_ASPECTS, workers=None,
                           min_successes=None):
    """Fit gamma(k) for each k from shared samples per aspect, then compare growth models."""
    ks = sorted(int(k) for k in ks)
    records, fits = [], []
    per_aspect = []
    for i, aspect in enumerate(aspects):
        spec = AnnulusSpec(ORIGIN, r, aspect * r, Boundary.FREE, Boundary.WIRED)
        cell_seed = sub_seed(seed, i)
        counts = [x['count'] for x in crossing_counts(model, spec, delta, n, cell_seed, workers=workers)]
        per_aspect.append(records_from_counts(model, spec, delta, cell_seed, counts, ks))
    for j, k in enumerate(ks):
        cell = [recs[j] for recs in per_aspect]
        records.extend(cell)
        try:
            fits.append(fit_exponent(cell, k, min_successes))
        except FitError as exc:
            logger.warning('No exponent for k=%d: %s', k, exc)
    report = CheckReport('quadratic_growth')
    for a, b in zip(fits, fits[1:]):
        report.checked += 1
        if b.exponent_hat < a.exponent_hat - TOLERANCE_SIGMAS * _combined_se(a.stderr, b.stderr):
            report.violations.append({'k': b.k, 'gamma': b.exponent_hat, 'previous': a.exponent_hat})
    report.details['gammas'] = {fit.k: fit.exponent_hat for fit in fits}
    report.details['reference'] = {fit.k: (fit.k ** 2 - 1) / 4 for fit in fits}
    if len(fits) >= 3:
        report.details['growth'] = compare_growth_models([f.k for f in fits], [f.exponent_hat for f in fits])
    return records, fits, report


def rectangle_traversal_probability(model, width, aspect, delta, n, seed, workers=None):
    """
    Probability that the tree on the free disc of radius aspect*width crosses
    the width x aspect*width rectangle lengthwise. It must not exceed 3/4
    beyond tolerance, and the four quarter turns are never all crossed.
    """
    _require_samples(n)
    results = run_samples(RectangleTask(model, width, aspect, delta), n, seed, workers)
    successes = sum(x['traversed'] for x in results)
    geometry = f'rect {width:g}x{aspect * width:g} in B({aspect * width:g})'
    record = probability_record(Observable.RECTANGLE_TRAVERSAL, model, geometry, successes, n, seed, delta,
                                r_outer=aspect * width, bc_outer=Boundary.FREE)
    report = CheckReport('rectangle_traversal', checked=n)
    tolerance = TOLERANCE_SIGMAS * record.stderr
    if record.p_hat > RECTANGLE_BOUND + tolerance:
        report.violations.append({'p_hat': record.p_hat, 'bound': RECTANGLE_BOUND, 'tolerance': tolerance})
    loops = sum(1 for x in results if x['rotations'] == 4)
    if loops:
        report.violations.append({'reason': 'all four rotations crossed', 'samples': loops})
    precondition = aspect > 2 and delta <= (aspect - 2) / (4 * math.sqrt(2)) * width
    if not precondition:
        logger.warning('Rectangle traversal outside its stated regime: aspect=%g, delta=%g, width=%g',
                       aspect, delta, width)
    report.details.update({'precondition': precondition,
                           'rotation_histogram': _histogram(x['rotations'] for x in results)})
    record.details = dict(report.details)
    return record, report


def delta_stability_check(observable, deltas):
    """Run `observable(delta)` at each resolution; every pair of intervals must overlap."""
    deltas = sorted((float(d) for d in deltas), reverse=True)
    records = [observable(d) for d in deltas]
    report = CheckReport('delta_stability')
    for (d1, a), (d2, b) in combinations(zip(deltas, records), 2):
        report.checked += 1
        if max(a.ci_low, b.ci_low) > min(a.ci_high, b.ci_high):
            report.violations.append({'deltas': [d1, d2], 'estimates': [a.p_hat, b.p_hat]})
    report.details['estimates'] = {str(d): rec.p_hat for d, rec in zip(deltas, records)}
    report.details['steps'] = [abs(b.p_hat - a.p_hat) for a, b in zip(records, records[1:])]
    return records, report


def crossing_observable(model, k, aspect, r=1.0, n=1000, seed=0, workers=None):
    """Observable for delta_stability_check: p_hat(k) on D(r, aspect*r) F/W."""
    spec = AnnulusSpec(ORIGIN, r, aspect * r, Boundary.FREE, Boundary.WIRED)

    def observable(delta):
        return estimate_crossing_probability(model, spec, k, delta, n, seed, workers)
    return observable


def vertex_count_record(delta, r=1.0, aspect=3.0):
    """Number of lattice vertices of D(r, aspect*r): resolution dependent by construction."""
    g = lattice_annulus(delta, r, aspect * r, Boundary.FREE, Boundary.WIRED)
    count = float(len(g.lattice_vertices))
    return EstimateRecord(observable=Observable.VERTEX_COUNT, model=TreeModel.UST, geometry=g.region.describe(),
                          delta=delta, n_samples=1, successes=1, p_hat=count, ci_low=count, ci_high=count,
                          seed=0)


def estimate_choking_probability(delta, r, n, seed, workers=None):
    """Frequency with which the walk from radius 2r closes a loop around the hole of D(r, 3r) first."""
    _require_samples(n)
    results = run_samples(ChokingTask(r, delta), n, seed, workers)
    successes = sum(x['success'] for x in results)
    spec = AnnulusSpec(ORIGIN, r, 3 * r, Boundary.FREE, Boundary.WIRED)
    return probability_record(Observable.CHOKING_PROBABILITY, TreeModel.UST, spec.describe(), successes, n,
                              seed, delta, details={'mean_steps': float(np.mean([x['steps'] for x in results]))},
                              **_annulus_fields(spec))


def estimate_droplet_pc(width, height, delta, n, seed, direction='horizontal', tol=1e-4, level=0.95,
                        workers=None):
    """
    Critical disc scale for droplet crossings of a rectangle: bisection on p
    for a crossing frequency of 1/2, where each sample crosses exactly when
    p exceeds its own threshold. The interval comes from order statistics.
    """
    _require_samples(n)
    results = run_samples(DropletThresholdTask(width, height, delta, direction), n, seed, workers)
    thresholds = np.sort(np.array([x['threshold'] for x in results], dtype=float))
    finite = thresholds[np.isfinite(thresholds)]
    lo, hi = 0.0, (float(finite.max()) if len(finite) else 1.0) + tol
    trace = []
    while hi - lo > tol:
        mid = (lo + hi) / 2
        fraction = float(np.mean(thresholds < mid))
        trace.append([mid, fraction])
        if fraction < 0.5:
            lo = mid
        else:
            hi = mid
    pc = (lo + hi) / 2
    alpha = 1 - level
    low_index = max(int(stats.binom.ppf(alpha / 2, n, 0.5)) - 1, 0)
    high_index = min(int(stats.binom.ppf(1 - alpha / 2, n, 0.5)), n - 1)
    ci_low = min(float(thresholds[low_index]), pc)
    ci_high = max(float(thresholds[high_index]), pc)
    rect = Rect(0.0, 0.0, width, height)
    return EstimateRecord(
        observable=Observable.DROPLET_PC,
        model=TreeModel.DROPLET,
        geometry=f'{rect.describe()} {direction}',
        delta=delta,
        n_samples=n,
        successes=int((thresholds < pc).sum()),
        p_hat=pc,
        ci_low=ci_low,
        ci_high=ci_high if math.isfinite(ci_high) else pc,
        seed=seed,
        details={'trace': trace, 'mean_points': float(np.mean([x['points'] for x in results]))},
    )


def bernoulli_rectangle_crossing(n_side, n, seed, p=0.5, workers=None):
    """Open horizontal crossing of the (n+1) x n vertex rectangle; exactly 1/2 at p = 1/2."""
    _require_samples(n)
    results = run_samples(BernoulliCrossingTask(n_side, p), n, seed, workers)
    successes = sum(x['success'] for x in results)
    geometry = f'box {n_side + 1}x{n_side} vertices'
    record = probability_record(Observable.CROSSING_PROBABILITY, TreeModel.BERNOULLI, geometry, successes, n,
                                seed, 1.0, k=1, details={'p': p})
    report = CheckReport('self_dual_crossing')
    if p == 0.5:
        report.checked = 1
        tolerance = TOLERANCE_SIGMAS * math.sqrt(0.25 / n)
        if abs(record.p_hat - 0.5) > tolerance:
            report.violations.append({'p_hat': record.p_hat, 'tolerance': tolerance})
    return record, report


def ust_uniformity_check(graph, n, seed, roots=(0,), alpha=1e-3, workers=None):
    """
    Chi-square test of Wilson samples against the uniform law on the
    spanning trees of a small graph, for each root; with several roots the
    samples must also be homogeneous across roots.
    """
    _require_samples(n)
    trees = enumerate_spanning_trees(graph)
    index = {tree: i for i, tree in enumerate(trees)}
    report = CheckReport('ust_uniformity')
    table = []
    p_values = {}
    for root in roots:
        samples = run_samples(UniformityTask(graph, root), n, sub_seed(seed, root), workers)
        observed = np.zeros(len(trees), dtype=np.int64)
        for edges in samples:
            i = index.get(frozenset(edges))
            if i is None:
                report.violations.append({'root': root, 'reason': 'not a spanning tree', 'edges': list(edges)})
                continue
            observed[i] += 1
        table.append(observed)
        report.checked += n
        p_value = float(stats.chisquare(observed).pvalue) if len(trees) > 1 else 1.0
        p_values[root] = p_value
        if p_value < alpha:
            report.violations.append({'root': root, 'p_value': p_value})
    if len(table) > 1 and len(trees) > 1:
        homogeneity = float(stats.chi2_contingency(np.array(table)).pvalue)
        report.details['root_homogeneity'] = homogeneity
        if homogeneity < alpha:
            report.violations.append({'reason': 'root dependence', 'p_value': homogeneity})
    report.details.update({'n_trees': len(trees), 'p_values': p_values})
    return report


def branch_dimension(n_side, n, seed, delta=1.0, workers=None):
    """Box-counting dimension of the UST branch joining opposite corners of the n x n box."""
    _require_samples(n)
    curves = run_samples(BranchTask(n_side), n, seed, workers)
    fits = [box_counting(curve, delta=delta) for curve in curves]
    slopes = np.array([fit.slope for fit in fits])
    mean = float(slopes.mean())
    se = float(slopes.std(ddof=1) / math.sqrt(n)) if n > 1 else fits[0].stderr
    z = stats.norm.ppf(0.975)
    record = EstimateRecord(
        observable=Observable.DIMENSION,
        model=TreeModel.UST,
        geometry=f'box {n_side}x{n_side} corner branch',
        delta=delta,
        n_samples=n,
        successes=n,
        p_hat=mean,
        ci_low=mean - z * se,
        ci_high=mean + z * se,
        seed=seed,
        details={'fits': [fit.as_dict() for fit in fits]},
    )
    return record, fits


def branching_census_experiment(n_side, eps_values, seed):
    """Branching points of several scales in one UST of the n x n box."""
    rect = Rect(0.0, 0.0, float(n_side), float(n_side))
    g = lattice_box(1.0, rect, Boundary.FREE)
    t = wilson_ust(g, rng=seed_stream(seed, 0))
    summary = census_scaling(t, eps_values)
    report = CheckReport('branching_census', checked=len(eps_values))
    if not summary['nonincreasing']:
        report.violations.append({'counts': summary['counts']})
    report.details.update(summary)
    return report


def lemma_suite(model, r, R, delta, n, seed, p=0.3, workers=None):
    """Run the deterministic coupling checks on n samples; every report must be clean."""
    _require_samples(n)
    results = run_samples(LemmaSuiteTask(model, r, R, delta, p=p), n, seed, workers)
    reports = list(merge_suite(results).values())
    for rep in reports:
        if not rep.passed:
            logger.warning('Deterministic check failed: %s', rep.summary())
    return reports


def semipath_check(r, R, delta, n, seed, workers=None):
    """On MST samples with k >= 2 tree traversals there are at least k disjoint semipath crossings."""
    _require_samples(n)
    results = run_samples(SemipathTask(r, R, delta), n, seed, workers)
    report = CheckReport('semipath_domination')
    for i, x in enumerate(results):
        if x['tree'] >= 2:
            report.checked += 1
            if x['semipath'] < x['tree']:
                report.violations.append({'sample': i, **x})
    pairs = Counter(f"{x['tree']},{x['semipath']}" for x in results)
    report.details['pairs'] = dict(sorted(pairs.items()))
    return report


def cover_circle_check(cs, sigmas, n_points=10_000):
    """Coverage, family separation and size bounds of cover_circle over a grid of (c, sigma)."""
    report = CheckReport('cover_circle')
    theta = np.linspace(0, 2 * math.pi, n_points, endpoint=False)
    circle = np.column_stack([np.cos(theta), np.sin(theta)])
    for c in cs:
        for sigma in sigmas:
            cover = cover_circle(c, sigma)
            report.checked += 1
            problems = []
            if not cover.covers(circle):
                problems.append('coverage')
            if cover.family_violations():
                problems.append('separation')
            if len(cover.centers) > math.ceil(math.pi / c):
                problems.append('center count')
            if cover.m > 2 * math.ceil(2.1 * sigma) + 1:
                problems.append('family count')
            if problems:
                report.violations.append({'c': c, 'sigma': sigma, 'problems': problems})
    return report
