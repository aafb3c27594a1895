"""Deterministic random-stream management.

All randomness in the package flows through counter-based Philox generators
(stream name ``philox4x64-v1``) keyed by a user seed plus an explicit spawn
key.  Substreams are statistically independent, so work split across members,
nodes, restarts or resamples can run in any order (or in parallel) and still
reproduce bit-for-bit.

Splitting rules used by the rest of the package:

* mean-assignment draw: one substream, key ``(ZBAR,)``
* member assignment perturbation: one substream per (member, node),
  key ``(ASSIGN, m, i)``
* block parameters: one substream for the shared diagonal, ``(BLOCK_DIAG,)``,
  and one per member for off-diagonals, ``(BLOCK_OFF, m)``
* edge generation: one substream per member, key ``(EDGES, m)``
* estimator initialization: ``(INIT, restart)``
* permutation resampling: ``(RESAMPLE, r, attempt)``
"""

import numpy as np

STREAM_NAME = "philox4x64-v1"

# Spawn-key domains; keep distinct so substreams never collide across uses.
ZBAR = 1
ASSIGN = 2
BLOCK_DIAG = 3
BLOCK_OFF = 4
EDGES = 5
INIT = 6
RESAMPLE = 7
KMEANS = 8
SPLIT = 9
PREDICT = 11


def substream(seed: int, *key: int) -> np.random.Generator:
    """Return an independent generator for ``(seed, key)``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(x) for x in key))
    return np.random.Generator(np.random.Philox(ss))


def stream_seed(seed: int, *key: int) -> int:
    """Derive a 63-bit integer seed for ``(seed, key)``.

    Used where a plain integer has to be handed to a nested component that
    does its own substream splitting.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(x) for x in key))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))
