"""
Fan-out of independent samples over worker processes. Results come back in
sample-index order whatever the worker count, so aggregates are identical
for serial and parallel runs.
"""
import logging
import multiprocessing as mp
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from django.conf import settings

from .seeding import seed_stream

logger = logging.getLogger(__name__)


def _run_chunk(task, base_seed, start, stop):
    return [task(index, seed_stream(base_seed, index)) for index in range(start, stop)]


def _context():
    if sys.platform.startswith('linux') and 'fork' in mp.get_all_start_methods():
        return mp.get_context('fork')
    return mp.get_context('spawn')


def default_workers():
    return max(1, int(getattr(settings, 'SPANTREE_WORKERS', 1)))


def run_samples(task, n_samples, base_seed, workers=None, chunk_size=None):
    """
    Evaluate `task(index, rng)` for index in range(n_samples), each with its
    own seed_stream. `task` must be picklable when workers > 1.
    """
    workers = default_workers() if workers is None else max(1, int(workers))
    workers = min(workers, max(1, os.cpu_count() or 1))
    if n_samples <= 0:
        return []
    if workers <= 1 or n_samples < 2:
        return _run_chunk(task, base_seed, 0, n_samples)

    chunk_size = chunk_size or max(1, n_samples // (workers * 4))
    bounds = [(s, min(n_samples, s + chunk_size)) for s in range(0, n_samples, chunk_size)]
    logger.debug('Running %d samples in %d chunks on %d workers', n_samples, len(bounds), workers)
    results = []
    with ProcessPoolExecutor(max_workers=workers, mp_context=_context()) as pool:
        futures = [pool.submit(_run_chunk, task, base_seed, s, e) for s, e in bounds]
        for future in futures:
            results.extend(future.result())
    return results
