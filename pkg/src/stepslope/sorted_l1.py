"""Sorted-L1 norm, its exact proximal operator, and dual feasibility.

The sorted-L1 norm pairs the magnitudes of a vector, ordered decreasingly,
with a non-increasing weight vector: J_w(b) = sum_i w_i |b|_(i).  Its prox
reduces to a projection computable in one pass of pool-adjacent-violators
over the weight-shifted sorted magnitudes.
"""

import numpy as np


def _weights(lam, m):
    w = np.asarray(getattr(lam, "values", lam), dtype=float)
    if w.ndim != 1 or w.size != m:
        raise ValueError(f"weight vector has length {w.size}, expected {m}")
    return w


def sorted_l1_norm(beta, lam):
    """J_w(beta) = sum of w_i times the i-th largest |beta| entry."""
    b = np.asarray(beta, dtype=float)
    w = _weights(lam, b.size)
    mags = np.sort(np.abs(b))[::-1]
    return float(mags @ w)


def prox_sorted_l1(v, lam):
    """Proximal operator of the sorted-L1 norm.

    Computes argmin_b 0.5*||b - v||^2 + J_w(b).  The weights must be
    non-negative and non-increasing.  Zeros in the result are exact: the
    clip at the end produces literal 0.0 entries, so supports can be read
    off without thresholds.

    Parameters
    ----------
    v : array_like
        Input vector.
    lam : array_like or LambdaSchedule
        Non-increasing, non-negative weights, same length as v.

    Returns
    -------
    ndarray
        The prox point, same shape as v.
    """
    v = np.asarray(v, dtype=float)
    w = _weights(lam, v.size)
    if v.size == 0:
        return v.copy()
    if np.any(np.diff(w) > 0.0) or w[-1] < 0.0:
        raise ValueError("prox weights must be non-negative and non-increasing")
    # stable sort so tied magnitudes keep their original relative order
    order = np.argsort(-np.abs(v), kind="stable")
    z = np.abs(v)[order] - w

    # non-increasing isotonic regression of z, stack-based PAV; plain
    # Python lists beat ndarray indexing at these sizes
    zl = z.tolist()
    means = []
    counts = []
    for x in zl:
        cm = x
        cc = 1
        while means and means[-1] <= cm:
            pm = means.pop()
            pc = counts.pop()
            cm = (pm * pc + cm * cc) / (pc + cc)
            cc += pc
        means.append(cm)
        counts.append(cc)
    fit = np.maximum(np.repeat(means, counts), 0.0)

    out = np.empty_like(v)
    out[order] = fit
    return np.sign(v) * out


def dual_infeasibility(gradient, lam):
    """How far a gradient sits outside the sorted-L1 dual unit ball.

    Returns max(0, max_k [ sum of k largest |gradient| - sum of first k
    weights ]).  Zero exactly when every prefix of the decreasingly sorted
    absolute gradient is dominated by the matching weight prefix.
    """
    g = np.asarray(gradient, dtype=float)
    w = _weights(lam, g.size)
    if g.size == 0:
        return 0.0
    excess = np.cumsum(np.sort(np.abs(g))[::-1]) - np.cumsum(w)
    return float(max(0.0, excess.max()))
