"""Counter-based per-trial random streams.

Every Monte Carlo trial owns a fixed range of Philox counter blocks derived
from (seed, trial index), so the numbers a trial sees never depend on batch
boundaries or on how many workers the simulation is split across.  Draws are
produced by inverse-CDF transforms of the per-trial uniforms, which consume a
fixed number of words per trial.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Philox
from scipy.special import ndtri

WORDS_PER_BLOCK = 4  # one Philox-4x64 counter increment yields 4 uint64 words


def blocks_per_trial(words: int) -> int:
    return -(-words // WORDS_PER_BLOCK)


def trial_raw(seed: int, first_trial: int, n_trials: int, words: int) -> np.ndarray:
    """(n_trials, words) uint64 array; trial t always receives the same words.

    Trial t occupies counter blocks [t * blocks_per_trial(words), ...), so a
    batch starting at ``first_trial`` is generated with one keyed generator
    whose counter is advanced to the batch start.
    """
    if n_trials <= 0:
        return np.empty((0, words), dtype=np.uint64)
    bpt = blocks_per_trial(words)
    start_block = first_trial * bpt
    counter = np.array([start_block & (2 ** 64 - 1), start_block >> 64, 0, 0], dtype=np.uint64)
    bg = Philox(key=np.uint64(seed), counter=counter)
    raw = bg.random_raw(n_trials * bpt * WORDS_PER_BLOCK)
    return raw.reshape(n_trials, bpt * WORDS_PER_BLOCK)[:, :words]


def trial_uniforms(seed: int, first_trial: int, n_trials: int, words: int) -> np.ndarray:
    """Per-trial doubles in the open interval (0, 1), safe for inverse CDFs."""
    raw = trial_raw(seed, first_trial, n_trials, words)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def normals_from_uniforms(u: np.ndarray) -> np.ndarray:
    """Standard normals via the inverse CDF (one uniform per normal)."""
    return ndtri(u)
