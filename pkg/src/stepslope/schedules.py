"""Regularization schedules for sorted-L1 estimation.

Feature-level schedules turn stepdown testing levels into non-increasing
weight sequences through normal upper-tail quantiles; group-level schedules
do the same through (mixtures of) scaled chi quantiles.  Corrected variants
inflate the base sequence to account for design randomness, either with a
closed-form Wishart factor or a Monte Carlo estimate, and truncate at the
first monotonicity violation so the result stays a valid schedule.
"""

import json
import math
import warnings
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import NumericalError
from .quantiles import ChiMixture, chi_quantile, mixture_quantile, normal_quantile

RULES = (
    "BH",
    "kFWER",
    "FDP",
    "kFWER-Gaussian",
    "FDP-Gaussian",
    "kFWER-MonteCarlo",
    "FDP-MonteCarlo",
    "group-max-FDR",
    "group-kFWER",
    "group-FDP",
    "group-kFWER-corrected",
    "group-FDP-corrected",
)


@dataclass(frozen=True)
class LambdaSchedule:
    """A validated schedule: non-negative, non-increasing weights plus provenance.

    values : ndarray
        The weights, made read-only at construction.
    rule : str
        One of RULES, naming the generator that produced the values.
    params : dict
        The scalar parameters the generator was called with.
    """

    values: np.ndarray
    rule: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 1:
            raise ValueError("schedule needs at least one entry")
        if not np.all(np.isfinite(vals)):
            raise ValueError("schedule values must be finite")
        if vals[-1] < 0.0 or np.any(vals < 0.0):
            raise ValueError("schedule values must be non-negative")
        if np.any(np.diff(vals) > 0.0):
            raise ValueError("schedule values must be non-increasing")
        if self.rule not in RULES:
            raise ValueError(f"unknown schedule rule {self.rule!r}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "params", dict(self.params))

    def __len__(self):
        return self.values.size


def _check_count(name, v):
    if int(v) != v or v < 1:
        raise ValueError(f"{name} must be a positive integer, got {v!r}")
    return int(v)


def _check_level(name, v):
    v = float(v)
    if not 0.0 < v < 1.0:
        raise ValueError(f"{name} must lie strictly inside (0,1), got {v!r}")
    return v


def _check_sigma(sigma):
    sigma = float(sigma)
    if not sigma > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    return sigma


def _normal_upper(tail, what):
    # entries come from Phi^{-1}(1 - tail); tail >= 0.5 would give a
    # non-positive weight, which is a level misconfiguration, not a value
    if tail >= 0.5:
        raise ValueError(
            f"level too large: {what} implies upper-tail mass {tail} >= 0.5"
        )
    return normal_quantile(1.0 - tail)


def bh_schedule(m, q, sigma=1.0):
    """Schedule from Benjamini-Hochberg style per-index levels.

    values[i-1] = sigma * Phi^{-1}(1 - i*q / (2m)), i = 1..m.
    """
    m = _check_count("m", m)
    q = _check_level("q", q)
    sigma = _check_sigma(sigma)
    vals = [
        sigma * _normal_upper(i * q / (2.0 * m), f"q={q} at entry {i}")
        for i in range(1, m + 1)
    ]
    return LambdaSchedule(np.array(vals), "BH", {"m": m, "q": q, "sigma": sigma})


def kfwer_schedule(m, k, alpha, sigma=1.0):
    """Schedule from stepdown k-familywise levels.

    The first k entries share the level k*alpha/(2m); afterwards the
    denominator shrinks with the stepdown index:
    values[i-1] = sigma * Phi^{-1}(1 - k*alpha / (2(m+k-i))) for i > k.
    """
    m = _check_count("m", m)
    k = _check_count("k", k)
    if k > m:
        raise ValueError(f"k must not exceed m, got k={k}, m={m}")
    alpha = _check_level("alpha", alpha)
    sigma = _check_sigma(sigma)
    vals = []
    for i in range(1, m + 1):
        denom = 2.0 * m if i <= k else 2.0 * (m + k - i)
        vals.append(
            sigma * _normal_upper(k * alpha / denom, f"alpha={alpha} at entry {i}")
        )
    return LambdaSchedule(
        np.array(vals), "kFWER", {"m": m, "k": k, "alpha": alpha, "sigma": sigma}
    )


def fdp_schedule(m, alpha, gamma, sigma=1.0):
    """Schedule from stepdown false-discovery-proportion levels.

    values[i-1] = sigma * Phi^{-1}(1 - (floor(gamma*i)+1)*alpha /
    (2(m + floor(gamma*i) + 1 - i))).  The floor is the exact integer floor
    of the float product gamma*i.
    """
    m = _check_count("m", m)
    alpha = _check_level("alpha", alpha)
    gamma = _check_level("gamma", gamma)
    sigma = _check_sigma(sigma)
    vals = []
    for i in range(1, m + 1):
        f = math.floor(gamma * i)
        tail = (f + 1) * alpha / (2.0 * (m + f + 1 - i))
        vals.append(sigma * _normal_upper(tail, f"alpha={alpha} at entry {i}"))
    return LambdaSchedule(
        np.array(vals),
        "FDP",
        {"m": m, "alpha": alpha, "gamma": gamma, "sigma": sigma},
    )


_GAUSSIAN_RULE = {"kFWER": "kFWER-Gaussian", "FDP": "FDP-Gaussian"}
_MC_RULE = {"kFWER": "kFWER-MonteCarlo", "FDP": "FDP-MonteCarlo"}


def gaussian_corrected_schedule(base, n):
    """Inflate a base schedule for an independent-Gaussian design.

    Entry i multiplies base(i) by sqrt(1 + (1/(n-i)) * sum_{j<i} out(j)^2),
    accumulating the corrected values themselves.  The recursion stops at
    the first index whose corrected value exceeds its predecessor; the
    remaining entries repeat the predecessor, keeping the output
    non-increasing.

    Raises
    ------
    ValueError
        If base was not built by the kFWER or FDP rule, or if n - i - 1
        drops to zero before the truncation point (sample size too small).
    """
    if base.rule not in _GAUSSIAN_RULE:
        raise ValueError(
            f"Gaussian correction needs a kFWER or FDP base, got rule {base.rule!r}"
        )
    n = _check_count("n", n)
    bv = base.values
    out = [float(bv[0])]
    sumsq = out[0] ** 2
    m = bv.size
    for i in range(2, m + 1):
        if n - i - 1 <= 0:
            raise ValueError(
                f"sample size too small for Gaussian correction: n={n} at entry {i}"
            )
        cand = float(bv[i - 1]) * math.sqrt(1.0 + sumsq / (n - i))
        if cand > out[-1]:
            out.extend([out[-1]] * (m - i + 1))
            break
        out.append(cand)
        sumsq += cand**2
    params = dict(base.params)
    params["n"] = n
    return LambdaSchedule(np.array(out), _GAUSSIAN_RULE[base.rule], params)


def monte_carlo_corrected_schedule(base, design, replicates=100, seed=0):
    """Correct a base schedule with design-driven Monte Carlo inflation.

    Follows the same recursion and truncation as the closed-form Gaussian
    correction, but the variance term at entry i is the empirical mean over
    `replicates` draws of (x_a^T X_S (X_S^T X_S)^{-1} lam)^2, where S is a
    uniformly random set of i-1 columns of the design, a is a uniformly
    random column outside S, and lam holds the corrected values built so
    far.  Deterministic for a fixed seed; each (entry, draw) pair has its
    own derived random stream, so the result does not depend on evaluation
    order.

    Raises
    ------
    NumericalError
        If a sampled Gram matrix X_S^T X_S stays singular after 10 redraws.
    """
    if base.rule not in _MC_RULE:
        raise ValueError(
            f"Monte Carlo correction needs a kFWER or FDP base, got rule {base.rule!r}"
        )
    X = np.asarray(design, dtype=float)
    if X.ndim != 2:
        raise ValueError("design must be a 2-d array")
    if not np.all(np.isfinite(X)):
        raise ValueError("design contains non-finite entries")
    replicates = _check_count("replicates", replicates)
    if seed < 0 or int(seed) != seed:
        raise ValueError(f"seed must be a non-negative integer, got {seed!r}")
    m_cols = X.shape[1]
    bv = base.values
    m = bv.size
    if m > m_cols:
        raise ValueError(
            f"schedule length {m} exceeds design column count {m_cols}"
        )
    out = [float(bv[0])]
    for i in range(2, m + 1):
        s = i - 1
        lam = np.array(out)
        total = 0.0
        for r in range(replicates):
            rng = np.random.default_rng(np.random.SeedSequence((int(seed), i, r)))
            for attempt in range(10):
                pick = rng.choice(m_cols, size=s + 1, replace=False)
                sub = X[:, pick[:s]]
                gram = sub.T @ sub
                try:
                    coef = np.linalg.solve(gram, lam)
                except np.linalg.LinAlgError:
                    continue
                if not np.all(np.isfinite(coef)):
                    continue
                total += float(X[:, pick[s]] @ (sub @ coef)) ** 2
                break
            else:
                raise NumericalError(
                    f"singular column Gram matrix after 10 redraws at entry {i}"
                )
        cand = float(bv[i - 1]) * math.sqrt(1.0 + total / replicates)
        if cand > out[-1]:
            out.extend([out[-1]] * (m - i + 1))
            break
        out.append(cand)
    params = dict(base.params)
    params.update({"replicates": replicates, "seed": int(seed)})
    return LambdaSchedule(np.array(out), _MC_RULE[base.rule], params)


def _check_groups(ranks, weights):
    ranks = [int(l) for l in ranks]
    weights = [float(w) for w in weights]
    if len(ranks) != len(weights) or not ranks:
        raise ValueError("ranks and weights must be non-empty and equally long")
    for l in ranks:
        if l < 1:
            raise ValueError(f"group ranks must be positive integers, got {l!r}")
    for w in weights:
        if not w > 0.0:
            raise ValueError(f"group weights must be positive, got {w!r}")
    return ranks, weights


def _chi_max(tail, ranks, weights, what):
    # largest weighted per-type chi quantile; distinct (rank, weight)
    # pairs only, since duplicates cannot change the max
    if tail >= 1.0:
        raise ValueError(
            f"level too large: {what} implies upper-tail mass {tail} >= 1"
        )
    return max(
        chi_quantile(1.0 - tail, l) / w for l, w in set(zip(ranks, weights))
    )


def group_max_schedule(q, ranks, weights):
    """Group schedule from per-index FDR-style levels.

    values[i-1] = max_j (1/w_j) * F^{-1}_{chi_{l_j}}(1 - q*i/m) where m is
    the number of groups, l_j the group ranks, w_j the group weights.
    """
    ranks, weights = _check_groups(ranks, weights)
    q = _check_level("q", q)
    m = len(ranks)
    vals = [
        _chi_max(q * i / m, ranks, weights, f"q={q} at entry {i}")
        for i in range(1, m + 1)
    ]
    return LambdaSchedule(np.array(vals), "group-max-FDR", {"m": m, "q": q})


def _gk_tail(i, m, k, alpha):
    denom = 2.0 * m if i <= k else 2.0 * (m + k - i)
    return k * alpha / denom


def _gf_tail(i, m, alpha, gamma):
    f = math.floor(gamma * i)
    return (f + 1) * alpha / (2.0 * (m + f + 1 - i))


def gk_schedule(k, alpha, ranks, weights):
    """Group schedule with stepdown k-familywise levels in the chi tails."""
    ranks, weights = _check_groups(ranks, weights)
    m = len(ranks)
    k = _check_count("k", k)
    if k > m:
        raise ValueError(f"k must not exceed the number of groups, got k={k}, m={m}")
    alpha = _check_level("alpha", alpha)
    vals = [
        _chi_max(_gk_tail(i, m, k, alpha), ranks, weights, f"alpha={alpha} at entry {i}")
        for i in range(1, m + 1)
    ]
    return LambdaSchedule(np.array(vals), "group-kFWER", {"m": m, "k": k, "alpha": alpha})


def gf_schedule(alpha, gamma, ranks, weights):
    """Group schedule with stepdown false-discovery-proportion levels."""
    ranks, weights = _check_groups(ranks, weights)
    m = len(ranks)
    alpha = _check_level("alpha", alpha)
    gamma = _check_level("gamma", gamma)
    vals = [
        _chi_max(_gf_tail(i, m, alpha, gamma), ranks, weights, f"alpha={alpha} at entry {i}")
        for i in range(1, m + 1)
    ]
    return LambdaSchedule(
        np.array(vals), "group-FDP", {"m": m, "alpha": alpha, "gamma": gamma}
    )


def group_corrected_schedule(variant, n, ranks, weights, alpha, k=None, gamma=None):
    """Randomness-corrected group schedule for non-orthogonal designs.

    The first entry inverts the equal-weight mixture of the w_j^{-1} chi_{l_j}
    CDFs at its stepdown level.  Later entries inflate each component scale by

        S_j = sqrt((n - l_j(i-1))/n + w_j^2 ||lam||^2 / (n - l_j(i-1) - 1))

    with lam the entries built so far, and invert the mixture of
    (S_j/w_j) chi_{l_j} components.  A candidate above its predecessor stops
    the recursion; the tail repeats the predecessor.  Exhausted degrees of
    freedom (n - l_j(i-1) - 1 <= 0 for some group) also truncate, with a
    warning.

    Parameters
    ----------
    variant : str
        "gk" for k-familywise levels (needs k), "gf" for
        false-discovery-proportion levels (needs gamma).
    n : int
        Sample size of the design the schedule will be used with.
    """
    ranks, weights = _check_groups(ranks, weights)
    n = _check_count("n", n)
    alpha = _check_level("alpha", alpha)
    m = len(ranks)
    if variant == "gk":
        k = _check_count("k", k)
        if k > m:
            raise ValueError(f"k must not exceed the number of groups, got k={k}, m={m}")
        if gamma is not None:
            raise ValueError("gamma does not apply to the gk variant")
        tail_at = lambda i: _gk_tail(i, m, k, alpha)
        rule = "group-kFWER-corrected"
        params = {"m": m, "k": k, "alpha": alpha, "n": n}
    elif variant == "gf":
        gamma = _check_level("gamma", gamma)
        if k is not None:
            raise ValueError("k does not apply to the gf variant")
        tail_at = lambda i: _gf_tail(i, m, alpha, gamma)
        rule = "group-FDP-corrected"
        params = {"m": m, "alpha": alpha, "gamma": gamma, "n": n}
    else:
        raise ValueError(f"variant must be 'gk' or 'gf', got {variant!r}")

    def invert(scales, i):
        tail = tail_at(i)
        if tail >= 1.0:
            raise ValueError(
                f"level too large: alpha={alpha} implies upper-tail mass {tail} >= 1"
            )
        comps = tuple(
            (s / w, l) for s, w, l in zip(scales, weights, ranks)
        )
        return mixture_quantile(ChiMixture(comps), 1.0 - tail)

    out = [invert([1.0] * m, 1)]
    for i in range(2, m + 1):
        used = [l * (i - 1) for l in ranks]
        if any(n - u - 1 <= 0 for u in used):
            warnings.warn(
                f"degrees of freedom exhausted at entry {i}; schedule truncated",
                stacklevel=2,
            )
            out.extend([out[-1]] * (m - i + 1))
            break
        sumsq = sum(v * v for v in out)
        scales = [
            math.sqrt((n - u) / n + w * w * sumsq / (n - u - 1))
            for u, w in zip(used, weights)
        ]
        cand = invert(scales, i)
        if cand > out[-1]:
            out.extend([out[-1]] * (m - i + 1))
            break
        out.append(cand)
    return LambdaSchedule(np.array(out), rule, params)


@dataclass(frozen=True)
class ScheduleRequest:
    """Bag of parameters for building a schedule by rule name.

    Leave fields that the requested rule does not use at None;
    build_schedule rejects extraneous settings so a request never silently
    drops a parameter.
    """

    m: int = None
    n: int = None
    k: int = None
    alpha: float = None
    gamma: float = None
    q: float = None
    sigma: float = None
    ranks: tuple = None
    weights: tuple = None
    design: np.ndarray = None
    replicates: int = None
    seed: int = None


_RULE_FIELDS = {
    "BH": ({"m", "q"}, {"sigma"}),
    "kFWER": ({"m", "k", "alpha"}, {"sigma"}),
    "FDP": ({"m", "alpha", "gamma"}, {"sigma"}),
    "kFWER-Gaussian": ({"m", "k", "alpha", "n"}, {"sigma"}),
    "FDP-Gaussian": ({"m", "alpha", "gamma", "n"}, {"sigma"}),
    "kFWER-MonteCarlo": ({"m", "k", "alpha", "design"}, {"sigma", "replicates", "seed"}),
    "FDP-MonteCarlo": ({"m", "alpha", "gamma", "design"}, {"sigma", "replicates", "seed"}),
    "group-max-FDR": ({"q", "ranks", "weights"}, set()),
    "group-kFWER": ({"k", "alpha", "ranks", "weights"}, set()),
    "group-FDP": ({"alpha", "gamma", "ranks", "weights"}, set()),
    "group-kFWER-corrected": ({"k", "alpha", "n", "ranks", "weights"}, set()),
    "group-FDP-corrected": ({"alpha", "gamma", "n", "ranks", "weights"}, set()),
}


def build_schedule(rule, request):
    """Dispatch a ScheduleRequest to the matching generator.

    Required fields must be set and fields foreign to the rule must be
    None; optional fields (sigma, replicates, seed) fall back to their
    generator defaults.
    """
    if rule not in _RULE_FIELDS:
        raise ValueError(f"unknown schedule rule {rule!r}")
    required, optional = _RULE_FIELDS[rule]
    for name in required:
        if getattr(request, name) is None:
            raise ValueError(f"rule {rule!r} requires parameter {name!r}")
    for f in fields(request):
        if f.name in required or f.name in optional:
            continue
        if getattr(request, f.name) is not None:
            raise ValueError(f"rule {rule!r} does not accept parameter {f.name!r}")

    sigma = request.sigma if request.sigma is not None else 1.0
    if rule == "BH":
        return bh_schedule(request.m, request.q, sigma)
    if rule == "kFWER":
        return kfwer_schedule(request.m, request.k, request.alpha, sigma)
    if rule == "FDP":
        return fdp_schedule(request.m, request.alpha, request.gamma, sigma)
    if rule == "kFWER-Gaussian":
        base = kfwer_schedule(request.m, request.k, request.alpha, sigma)
        return gaussian_corrected_schedule(base, request.n)
    if rule == "FDP-Gaussian":
        base = fdp_schedule(request.m, request.alpha, request.gamma, sigma)
        return gaussian_corrected_schedule(base, request.n)
    replicates = request.replicates if request.replicates is not None else 100
    seed = request.seed if request.seed is not None else 0
    if rule == "kFWER-MonteCarlo":
        base = kfwer_schedule(request.m, request.k, request.alpha, sigma)
        return monte_carlo_corrected_schedule(base, request.design, replicates, seed)
    if rule == "FDP-MonteCarlo":
        base = fdp_schedule(request.m, request.alpha, request.gamma, sigma)
        return monte_carlo_corrected_schedule(base, request.design, replicates, seed)
    if rule == "group-max-FDR":
        return group_max_schedule(request.q, request.ranks, request.weights)
    if rule == "group-kFWER":
        return gk_schedule(request.k, request.alpha, request.ranks, request.weights)
    if rule == "group-FDP":
        return gf_schedule(request.alpha, request.gamma, request.ranks, request.weights)
    if rule == "group-kFWER-corrected":
        return group_corrected_schedule(
            "gk", request.n, request.ranks, request.weights, request.alpha, k=request.k
        )
    return group_corrected_schedule(
        "gf",
        request.n,
        request.ranks,
        request.weights,
        request.alpha,
        gamma=request.gamma,
    )


def schedule_csv_text(schedule):
    """(index, value) rows, 1-based, 17 significant digits."""
    lines = ["index,value"]
    lines.extend(
        f"{i},{v:.17g}" for i, v in enumerate(schedule.values, start=1)
    )
    return "\n".join(lines) + "\n"


def schedule_to_csv(schedule, path):
    """Write schedule_csv_text to path."""
    Path(path).write_text(schedule_csv_text(schedule))


def schedule_values_from_csv(path):
    """Read back values written by schedule_to_csv, bit-exact.

    The CSV carries no provenance, so this returns a bare array rather
    than a LambdaSchedule.
    """
    lines = Path(path).read_text().strip().splitlines()
    if not lines or lines[0].strip() != "index,value":
        raise ValueError(f"{path}: expected header 'index,value'")
    vals = []
    for row, line in enumerate(lines[1:], start=1):
        idx, _, val = line.partition(",")
        if int(idx) != row:
            raise ValueError(f"{path}: indices must run 1..m, got {idx} at row {row}")
        vals.append(float(val))
    if not vals:
        raise ValueError(f"{path}: no schedule entries")
    return np.array(vals)


def schedule_json_text(schedule):
    """Rule, params, and values; values at 17 significant digits."""
    vals = ", ".join(f"{v:.17g}" for v in schedule.values)
    return '{"rule": %s, "params": %s, "values": [%s]}\n' % (
        json.dumps(schedule.rule),
        json.dumps(schedule.params, sort_keys=True),
        vals,
    )


def schedule_to_json(schedule, path):
    """Write schedule_json_text to path."""
    Path(path).write_text(schedule_json_text(schedule))


def schedule_from_json(path):
    """Rebuild a LambdaSchedule written by schedule_to_json, bit-exact."""
    doc = json.loads(Path(path).read_text())
    for key in ("rule", "params", "values"):
        if key not in doc:
            raise ValueError(f"{path}: missing key {key!r}")
    return LambdaSchedule(np.array(doc["values"], dtype=float), doc["rule"], doc["params"])
