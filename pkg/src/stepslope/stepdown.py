"""Stepdown multiple-testing baselines.

Threshold sequences for k-familywise and false-discovery-proportion
control, the stepdown rejection rule itself, and two-sided normal
p-values.  These are the testing-side counterparts of the schedule
generators and serve as reference procedures in simulations.
"""

import math

import numpy as np


def kfwer_thresholds(m, k, alpha):
    """Stepdown levels alpha_i = k*alpha/m (i <= k), k*alpha/(m+k-i) after.

    Non-decreasing in i by construction.
    """
    if int(m) != m or m < 1:
        raise ValueError(f"m must be a positive integer, got {m!r}")
    if int(k) != k or not 1 <= k <= m:
        raise ValueError(f"k must be an integer in [1, m], got {k!r}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly inside (0,1), got {alpha!r}")
    m, k = int(m), int(k)
    out = np.empty(m)
    for i in range(1, m + 1):
        out[i - 1] = k * alpha / (m if i <= k else m + k - i)
    return out


def fdp_thresholds(m, alpha, gamma):
    """Stepdown levels alpha_i = (floor(gamma*i)+1)*alpha/(m+floor(gamma*i)+1-i)."""
    if int(m) != m or m < 1:
        raise ValueError(f"m must be a positive integer, got {m!r}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly inside (0,1), got {alpha!r}")
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie strictly inside (0,1), got {gamma!r}")
    m = int(m)
    out = np.empty(m)
    for i in range(1, m + 1):
        f = math.floor(gamma * i)
        out[i - 1] = (f + 1) * alpha / (m + f + 1 - i)
    return out


def stepdown_reject(pvalues, thresholds):
    """Apply the stepdown rule: reject the r smallest p-values, where r is
    the largest count whose every prefix clears its threshold.

    Ties in the p-values are ordered by original index (stable sort), which
    only affects which equal values are labeled rejected, never how many.

    Returns
    -------
    set of int
        Original indices of the rejected hypotheses.
    """
    p = np.asarray(pvalues, dtype=float)
    thr = np.asarray(thresholds, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise ValueError("pvalues must be a non-empty 1-d array")
    if thr.shape != p.shape:
        raise ValueError(
            f"thresholds have length {thr.size}, expected {p.size}"
        )
    if not np.all(np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("pvalues must lie in [0, 1]")
    order = np.argsort(p, kind="stable")
    ok = p[order] <= thr
    r = int(ok.size if ok.all() else np.argmin(ok))
    return {int(i) for i in order[:r]}


def two_sided_pvalues(z, scale=1.0):
    """p_i = 2*(1 - Phi(|z_i| / scale)), computed as erfc(|z_i|/(scale*sqrt(2)))."""
    if not scale > 0.0:
        raise ValueError(f"scale must be positive, got {scale!r}")
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValueError("statistics contain non-finite values")
    flat = np.abs(z).ravel() / (scale * math.sqrt(2.0))
    out = np.array([math.erfc(x) for x in flat])
    return out.reshape(z.shape)
