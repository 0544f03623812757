"""Seeded random streams.

Two kinds of randomness are needed.  Sparsification decisions must be a pure
function of ``(seed, key...)`` so that both arcs of an edge agree and any
vertex range can be processed independently; those use a vectorised
splitmix64 hash.  Samplers draw long sequential streams, one per worker, from
numpy's counter-based Philox generator.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def _mix64(x):
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


def keyed_bits(seed, *keys):
    """64-bit hash of ``(seed, *keys)``, broadcast over array-valued keys."""
    arrays = [np.asarray(k, dtype=np.int64).astype(np.uint64) for k in keys]
    shape = np.broadcast_shapes(*(a.shape for a in arrays)) if arrays else ()
    with np.errstate(over="ignore"):
        h = np.full(shape, np.uint64(int(seed) & _MASK64), dtype=np.uint64)
        h = _mix64(h + _GOLDEN)
        for a in arrays:
            h = _mix64((h ^ a) + _GOLDEN)
    return h


def keyed_uniform(seed, *keys):
    """Uniform doubles in [0, 1) keyed by ``(seed, *keys)``."""
    bits = keyed_bits(seed, *keys)
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def worker_generator(seed, worker_id):
    """Independent Philox stream for one sampling worker."""
    ss = np.random.SeedSequence([int(seed) & _MASK64, int(worker_id)])
    return np.random.Generator(np.random.Philox(ss))
