"""Synthetic separable segment task for smoke training and demos.

Positives carry a bright 16x16 block at a random position inside the
64x128 segment; negatives are background noise only. The task is linearly
separable, so any sane training configuration should reach high accuracy.
"""

from __future__ import annotations

import numpy as np

BLOCK = 16


def make_block_task(n_train: int = 200, n_test: int = 100, seed: int = 7, noise: float = 0.1):
    """Returns (train_set, test_set) of (image [64,128], label) pairs."""
    rng = np.random.default_rng(seed)

    def sample(n):
        data = []
        for i in range(n):
            img = rng.random((64, 128)) * noise
            label = i % 2
            if label:
                y = rng.integers(0, 64 - BLOCK)
                x = rng.integers(0, 128 - BLOCK)
                img[y : y + BLOCK, x : x + BLOCK] += 0.8
            data.append((np.clip(img, 0.0, 1.0), label))
        return data

    return sample(n_train), sample(n_test)
