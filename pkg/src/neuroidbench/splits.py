"""Seeded deterministic fold assignment helpers.

Both the evaluation scenarios and the SVM's internal calibration need the
same primitive: shuffle within a class (or a subject list) and deal items
round-robin over k folds, which keeps per-fold counts within one of each
other. Everything takes an explicit numpy Generator so callers control
determinism.
"""

from __future__ import annotations

import numpy as np


def stratified_fold_ids(y, k, rng) -> np.ndarray:
    """Assign each row a fold in 0..k-1, stratified by the binary label.

    Per class the row indices are shuffled and dealt cyclically, so every
    fold's class counts differ by at most one row from any other fold.
    """
    y = np.asarray(y)
    fold_ids = np.empty(y.shape[0], dtype=int)
    for value in np.unique(y):
        members = np.flatnonzero(y == value)
        members = members[rng.permutation(members.size)]
        fold_ids[members] = np.arange(members.size) % k
    return fold_ids


def group_fold_ids(groups, k, rng) -> dict:
    """Assign each distinct group label a fold in 0..k-1, balanced by count.

    Labels are sorted before shuffling so the outcome depends only on the
    rng state, not on input order.
    """
    unique = sorted(set(groups))
    order = rng.permutation(len(unique))
    return {unique[idx]: pos % k for pos, idx in enumerate(order)}
