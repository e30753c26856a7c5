"""Deterministic train/validation splitting."""

from __future__ import annotations

import math
from typing import List, Sequence, Tuple, TypeVar

import numpy as np

from ..errors import DataError

T = TypeVar("T")


def split_dataset(items: Sequence[T], train_frac: float = 0.9,
                  seed: int = 0) -> Tuple[List[T], List[T]]:
    """Shuffle and split; validation gets floor(n * (1 - train_frac)).

    The floor is taken with a tiny epsilon so decimal fractions behave the
    way the arithmetic reads: 888 items at 0.9 give 800/88, 10 give 9/1.
    """
    n = len(items)
    if n < 2:
        raise DataError(f"need at least 2 items to split, got {n}")
    if not (0.0 < train_frac < 1.0):
        raise DataError(f"train_frac must be in (0,1), got {train_frac}")
    n_val = math.floor(n * (1.0 - train_frac) + 1e-9)
    n_train = n - n_val
    perm = np.random.default_rng(seed).permutation(n)
    train = [items[i] for i in perm[:n_train]]
    val = [items[i] for i in perm[n_train:]]
    return train, val
