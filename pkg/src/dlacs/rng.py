"""Seed derivation for reproducible replica ensembles.

All randomness in the package descends from a single master seed (an
arbitrary Python int).  Two stream families are derived from it:

* numpy ``Generator`` streams, used by the event-driven simulator.  A
  stream for replica ``r`` (and optionally a per-origin substream ``o``)
  is built from ``SeedSequence((master, r))`` or
  ``SeedSequence((master, r, o))``.  SeedSequence hashes the key tuple,
  so streams are independent of execution order and of how many replicas
  run; replica 7 draws the same numbers whether it runs first or last,
  in one process or many.

* raw splitmix64 streams, used by the array-based root samplers (which
  also run under numba, where Generator objects are unavailable).  The
  stream for counter ``r`` starts from ``splitmix64_mix(master, r)`` and
  advances by the standard splitmix64 increment.
"""

from __future__ import annotations

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64_next(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; returns (new_state, output word)."""
    state = (state + _GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    z = z ^ (z >> 31)
    return state, z


def splitmix64_mix(master: int, counter: int) -> int:
    """Initial splitmix64 state for stream ``counter`` under ``master``.

    The master seed is folded with the counter through one splitmix64
    output step, so neighbouring counters give unrelated states.
    """
    x = (master & MASK64) ^ ((counter + 1) * _GOLDEN & MASK64)
    _, z = splitmix64_next(x)
    return z


def uniform_from_word(word: int) -> float:
    """Map a 64-bit word to a double in [0, 1) using the top 53 bits."""
    return (word >> 11) * (2.0 ** -53)


def spawn_generator(master: int, *key: int) -> np.random.Generator:
    """numpy Generator for the stream addressed by ``(master, *key)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((master, *key))))
