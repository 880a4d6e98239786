"""
Per-sample random streams. Each (base seed, sample index) pair names its own
Philox counter stream, so samples can run in any order on any worker.
"""
import numpy as np


def seed_stream(base_seed, index):
    """Generator for sample `index` of an experiment seeded with `base_seed`."""
    if base_seed is None or int(base_seed) < 0 or int(index) < 0:
        raise ValueError('Seeds and sample indices must be non-negative integers.')
    sequence = np.random.SeedSequence(int(base_seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(sequence))


def sub_seed(base_seed, *labels):
    """Derived integer seed for a named sub-experiment (one cell of a grid, say)."""
    sequence = np.random.SeedSequence(int(base_seed), spawn_key=tuple(int(x) for x in labels))
    return int(sequence.generate_state(1, dtype=np.uint32)[0])
