"""Counter-based deterministic randomness.

Every random quantity in a sampled graph is a pure function of the seed
and a stable identity: vertex attributes are keyed by (seed, stream tag,
vertex index) and edge coins by (seed, tag, min id, max id).  This makes
edge generation independent of iteration order, so the exact sampler and
the cell-list sampler produce bit-identical graphs, and an induced
subgraph on a mark range can be rebuilt from the restricted vertex set
alone.

The mixer is the splitmix64 finalizer applied after absorbing each key
word; bulk streams (Poisson counts, thinning of far pairs at scale) use
numpy's Philox generator keyed by the same hash.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

# Stream tags separating independent uses of one seed.
TAG_COUNT = 0xC0117
TAG_POSITION = 0x905171
TAG_MARK = 0x3A4B5C
TAG_EDGE = 0xED6E
TAG_PALM = 0x9A13
TAG_FAR = 0xFA12
TAG_COVER = 0xC0E4
TAG_PROFILE = 0x9B0F17
TAG_EXPERIMENT = 0xE59E

_INV_2_53 = float(2.0**-53)
_SHIFT11 = np.uint64(11)
_SHIFT30 = np.uint64(30)
_SHIFT27 = np.uint64(27)
_SHIFT31 = np.uint64(31)


def _finalize(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _SHIFT30)) * _MIX1
    z = (z ^ (z >> _SHIFT27)) * _MIX2
    return z ^ (z >> _SHIFT31)


def _absorb(h: np.ndarray, key: np.ndarray) -> np.ndarray:
    return _finalize((h + _GOLDEN) ^ key)


def hash_words(seed: int, tag: int, *keys) -> np.ndarray:
    """Hash (seed, tag, keys...) to uint64; keys broadcast as arrays."""
    with np.errstate(over="ignore"):
        h = np.atleast_1d(np.asarray(seed, dtype=np.uint64))
        h = _absorb(h, np.uint64(tag))
        for k in keys:
            h = _absorb(h, np.asarray(k).astype(np.uint64))
        return h


def to_unit(h: np.ndarray) -> np.ndarray:
    """Map uint64 hashes to uniforms in [0, 1) with 53-bit resolution."""
    return (h >> _SHIFT11).astype(np.float64) * _INV_2_53


def uniform_words(seed: int, tag: int, *keys) -> np.ndarray:
    return to_unit(hash_words(seed, tag, *keys))


def pair_uniform(seed: int, ids_a, ids_b) -> np.ndarray:
    """Order-invariant uniform coin for vertex-id pairs.

    The coin depends on the unordered pair only, so the same pair seen
    from any enumeration order, or inside any restricted vertex subset,
    draws the same value.
    """
    a = np.asarray(ids_a, dtype=np.uint64)
    b = np.asarray(ids_b, dtype=np.uint64)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    return to_unit(hash_words(seed, TAG_EDGE, lo, hi))


def stream(seed: int, tag: int, *keys) -> Generator:
    """Sequential Philox generator keyed by a hash of (seed, tag, keys)."""
    key = int(hash_words(seed, tag, *keys)[0])
    return Generator(Philox(key=key))


def poisson_count(seed: int, mean: float) -> int:
    """Poisson total-vertex count, one draw per seed."""
    return int(stream(seed, TAG_COUNT).poisson(mean))


def bernoulli_indices(rng: Generator, total: int, prob: float, batch: int = 0) -> np.ndarray:
    """Indices of successes of `total` iid Bernoulli(prob) trials.

    Uses geometric gaps from the sequential generator, so expected work is
    O(total * prob) rather than O(total).  Returns a sorted int64 array.
    """
    if total <= 0 or prob <= 0.0:
        return np.empty(0, dtype=np.int64)
    if prob >= 1.0:
        return np.arange(total, dtype=np.int64)
    if prob < 1e-9:
        # Geometric gaps would overflow int64; draw the success count and
        # then a uniform subset of slots (Floyd's algorithm), which is the
        # same Bernoulli process.
        count = int(rng.binomial(total, prob))
        if count == 0:
            return np.empty(0, dtype=np.int64)
        chosen: set = set()
        for slot in range(total - count, total):
            pick = int(rng.integers(0, slot + 1))
            chosen.add(pick if pick not in chosen else slot)
        return np.sort(np.fromiter(chosen, dtype=np.int64, count=count))
    if batch <= 0:
        expected = total * prob
        batch = int(expected + 6.0 * np.sqrt(expected + 1.0) + 16.0)
    chunks = []
    position = -1
    while position < total:
        gaps = rng.geometric(prob, size=batch)
        hits = position + np.cumsum(gaps)
        position = int(hits[-1])
        chunks.append(hits)
    hits = np.concatenate(chunks) if len(chunks) > 1 else chunks[0]
    return hits[hits < total].astype(np.int64)
