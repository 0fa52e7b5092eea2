"""Maximum-credit one-to-one matching on a weight matrix.

Backed by scipy's Hungarian solver; zero-weight pairs are excluded from the
returned matching. A tiny bias toward earlier column indices makes tie
resolution deterministic without disturbing genuinely different optima.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

_TIE_EPS = 1e-12


def max_credit_matching(weights: "np.ndarray | list[list[float]]") -> tuple[float, list[tuple[int, int]]]:
    """Return (total credit, [(row, col), ...]) maximizing the credit sum.

    ``weights`` is rows x cols (predictions x golds); rectangular is fine.
    Pairs whose weight is 0 never appear in the result.
    """
    w = np.asarray(weights, dtype=float)
    if w.size == 0:
        return 0.0, []
    biased = w + _TIE_EPS * (w.shape[1] - np.arange(w.shape[1]))[None, :] * (w > 0)
    rows, cols = linear_sum_assignment(biased, maximize=True)
    pairs = [(int(r), int(c)) for r, c in zip(rows, cols) if w[r, c] > 0]
    credit = float(sum(w[r, c] for r, c in pairs))
    return credit, pairs
