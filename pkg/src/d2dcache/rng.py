"""Deterministic random-stream derivation.

Two mechanisms, both keyed on integers only so that results never depend on
worker count, scheduling order or dict iteration order:

* ``substream(master, *path)`` -- a numpy Generator for bulk draws
  (node placement, cache placement, requests).  Derived through
  ``SeedSequence([master, *path])``.

* counter-based draws (``keyed_u01`` / ``keyed_normal``) -- stateless hashes
  of ``(master, *key arrays)`` used for per-link channel primitives, so that
  the shadowing/LOS draw of a given (realization, tx, rx) pair is a pure
  function of its indices.  Uses the splitmix64 finalizer, which is the
  standard seeding mixer and has no detectable bias at the sample sizes used
  here.
"""
from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)


def substream(master_seed: int, *path: int) -> np.random.Generator:
    """Generator for the stream identified by an integer path."""
    entropy = [int(master_seed) & 0xFFFFFFFF] + [int(p) & 0xFFFFFFFFFFFF for p in path]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def _splitmix(z: np.ndarray) -> np.ndarray:
    z = (z + _GOLDEN) & _U64_MASK
    z = (z ^ (z >> np.uint64(30))) * _MIX1 & _U64_MASK
    z = (z ^ (z >> np.uint64(27))) * _MIX2 & _U64_MASK
    return z ^ (z >> np.uint64(31))


def _hash_keys(*keys) -> np.ndarray:
    """Fold integer scalars/arrays into one uint64 per element (broadcast)."""
    arrs = np.broadcast_arrays(*[np.asarray(k, dtype=np.uint64) for k in keys])
    with np.errstate(over="ignore"):
        h = np.zeros(arrs[0].shape, dtype=np.uint64)
        for a in arrs:
            h = _splitmix(h ^ _splitmix(a))
    return h


def keyed_u01(*keys) -> np.ndarray:
    """Uniform(0,1) draws, one per broadcast element of the integer keys."""
    with np.errstate(over="ignore"):
        h = _hash_keys(*keys)
    # 53-bit mantissa; +0.5 ulp keeps the value strictly inside (0, 1)
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def keyed_normal(*keys) -> np.ndarray:
    """Standard normal draws via Box-Muller on two keyed uniforms."""
    u1 = keyed_u01(*keys, 0xA5A5)
    u2 = keyed_u01(*keys, 0x5A5A)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
