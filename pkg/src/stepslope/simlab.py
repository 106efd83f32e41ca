"""Simulation laboratory for selection-error control.

Experiment configurations couple a synthetic design with an estimation
method and a schedule rule; replications draw data from per-replicate
random streams derived from (seed, index), so results are independent of
execution order and reproducible bit for bit at a fixed seed.  Reports
carry per-replication selection counts plus aggregate error and power
estimates with standard errors.
"""

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .groups import (
    GroupPartition,
    group_support_metrics,
    solve_group_slope,
    standardize,
)
from .schedules import (
    bh_schedule,
    fdp_schedule,
    gaussian_corrected_schedule,
    gf_schedule,
    gk_schedule,
    group_corrected_schedule,
    group_max_schedule,
    kfwer_schedule,
    monte_carlo_corrected_schedule,
)
from .solver import DesignMatrix, solve_slope, support_metrics
from .stepdown import (
    fdp_thresholds,
    kfwer_thresholds,
    stepdown_reject,
    two_sided_pvalues,
)

DESIGNS = (
    "orthogonal-identity",
    "gaussian",
    "correlated-means",
    "group-orthogonal",
    "group-gaussian",
)
METHODS = ("slope-bh", "k-slope", "f-slope", "sd-kfwer", "sd-fdp", "gk-slope", "gf-slope")
FEATURE_DESIGNS = ("orthogonal-identity", "gaussian", "correlated-means")
GROUP_DESIGNS = ("group-orthogonal", "group-gaussian")
GROUP_METHODS = ("slope-bh", "gk-slope", "gf-slope")
STEPDOWN_METHODS = ("sd-kfwer", "sd-fdp")
CORRECTIONS = ("auto", "none", "gaussian", "monte-carlo")
NAMED_SIGNALS = ("auto", "strong", "moderate", "weak", "group-scaled")


@dataclass(frozen=True)
class ExperimentConfig:
    """One simulation cell: a design, a method, and their parameters.

    t counts relevant features on feature designs and relevant groups on
    group designs.  signal is a named strength or an explicit amplitude;
    "auto" picks the design's default.  correction selects how design
    randomness enters the schedule ("auto" maps each design to its
    standard treatment).
    """

    design: str
    method: str
    n: int
    m: int
    t: int
    signal: object = "auto"
    alpha: float = 0.1
    gamma: float = 0.1
    k: int = 5
    q: float = 0.1
    sigma: float = 1.0
    replications: int = 100
    seed: int = 0
    rho: float = 0.5
    num_groups: int = None
    group_sizes: tuple = None
    weight_scheme: str = "sqrt"
    group_scale_mode: str = "per-class"
    correction: str = "auto"
    mc_replicates: int = 100
    fit_tol: float = 1e-8
    fit_max_iter: int = 20000

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise ValueError(f"unknown design {self.design!r}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        for name in ("n", "m", "replications"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if int(self.t) != self.t or self.t < 0:
            raise ValueError(f"t must be a non-negative integer, got {self.t!r}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {self.seed!r}")
        for name in ("alpha", "gamma", "q"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie strictly inside (0,1), got {v!r}")
        if not self.sigma > 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError(f"rho must lie in [0,1), got {self.rho!r}")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        if self.correction not in CORRECTIONS:
            raise ValueError(f"unknown correction {self.correction!r}")
        if not (isinstance(self.signal, (int, float)) and not isinstance(self.signal, bool)):
            if self.signal not in NAMED_SIGNALS:
                raise ValueError(f"unknown signal {self.signal!r}")

        grouped = self.design in GROUP_DESIGNS
        if grouped:
            if self.method not in GROUP_METHODS:
                raise ValueError(
                    f"method {self.method!r} does not apply to group designs"
                )
            if self.num_groups is None or self.group_sizes is None:
                raise ValueError("group designs require num_groups and group_sizes")
            if int(self.num_groups) != self.num_groups or self.num_groups < 1:
                raise ValueError(f"num_groups must be a positive integer")
            sizes = tuple(int(s) for s in self.group_sizes)
            if not sizes or any(s < 1 for s in sizes):
                raise ValueError("group_sizes must be positive integers")
            if self.num_groups % len(sizes) != 0:
                raise ValueError(
                    f"num_groups={self.num_groups} must divide evenly into "
                    f"{len(sizes)} size classes"
                )
            object.__setattr__(self, "group_sizes", sizes)
            if self.m != sum(self.expanded_group_sizes()):
                raise ValueError(
                    f"m={self.m} must equal the total of the expanded group sizes"
                )
            if self.t > self.num_groups:
                raise ValueError(f"t={self.t} exceeds num_groups={self.num_groups}")
            if self.k > self.num_groups:
                raise ValueError(f"k={self.k} exceeds num_groups={self.num_groups}")
            if self.weight_scheme not in ("sqrt", "inv-sqrt"):
                raise ValueError(f"unknown weight_scheme {self.weight_scheme!r}")
            if self.group_scale_mode not in ("per-class", "mean-size"):
                raise ValueError(f"unknown group_scale_mode {self.group_scale_mode!r}")
            if self.correction == "monte-carlo":
                raise ValueError("monte-carlo correction applies to feature designs only")
        else:
            if self.method in ("gk-slope", "gf-slope"):
                raise ValueError(f"method {self.method!r} requires a group design")
            if self.num_groups is not None or self.group_sizes is not None:
                raise ValueError("num_groups/group_sizes apply to group designs only")
            if self.t > self.m:
                raise ValueError(f"t={self.t} exceeds m={self.m}")
            if self.k > self.m:
                raise ValueError(f"k={self.k} exceeds m={self.m}")
        if self.method in STEPDOWN_METHODS and self.design not in (
            "orthogonal-identity",
            "correlated-means",
        ):
            raise ValueError(
                f"method {self.method!r} needs marginal statistics; it runs on "
                "the orthogonal-identity and correlated-means designs only"
            )
        if (
            self.design in ("orthogonal-identity", "group-orthogonal", "correlated-means")
            and self.n != self.m
        ):
            raise ValueError(
                f"design {self.design!r} is square and needs n == m, "
                f"got n={self.n}, m={self.m}"
            )
        if self.design in ("orthogonal-identity", "correlated-means", "group-orthogonal"):
            if self.correction not in ("auto", "none"):
                raise ValueError(
                    f"correction {self.correction!r} does not apply to design {self.design!r}"
                )
        if self.design == "group-gaussian" and self.correction == "monte-carlo":
            raise ValueError("monte-carlo correction applies to feature designs only")

    def expanded_group_sizes(self):
        """Per-group sizes: each size class repeated over a contiguous block."""
        per = self.num_groups // len(self.group_sizes)
        out = []
        for s in self.group_sizes:
            out.extend([s] * per)
        return tuple(out)

    def group_weights(self):
        sizes = np.array(self.expanded_group_sizes(), dtype=float)
        if self.weight_scheme == "sqrt":
            return np.sqrt(sizes)
        return 1.0 / np.sqrt(sizes)

    def to_dict(self):
        d = asdict(self)
        if d["group_sizes"] is not None:
            d["group_sizes"] = list(d["group_sizes"])
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("group_sizes") is not None:
            d["group_sizes"] = tuple(d["group_sizes"])
        return cls(**d)

    def config_id(self):
        """First 12 hex digits of the sha256 of the canonical config JSON."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


def resolve_signal(config):
    """Resolve the signal amplitude for a feature design."""
    s = config.signal
    if isinstance(s, (int, float)) and not isinstance(s, bool):
        return float(s)
    if s == "group-scaled":
        raise ValueError("group-scaled signal applies to group designs only")
    if s == "auto":
        s = "strong" if config.design == "orthogonal-identity" else "moderate"
    if s == "strong":
        return 3.0 * math.sqrt(2.0 * math.log(config.n))
    if s == "moderate":
        return 2.0 * math.sqrt(2.0 * math.log(config.m))
    return math.sqrt(2.0 * math.log(config.m))


def resolve_group_amplitude(config):
    """Per-group amplitude a; relevant group g gets ||X_g beta_g|| = a*sqrt(|g|).

    a equates the average target norm with the average of
    sqrt(4*ln(T)/(1 - T^(-2/l)) - l) over groups, where T is the total
    group count and l is each group's size class (or the mean size when
    group_scale_mode is "mean-size").
    """
    s = config.signal
    if isinstance(s, (int, float)) and not isinstance(s, bool):
        return float(s)
    if s not in ("auto", "group-scaled"):
        raise ValueError(
            f"signal {s!r} applies to feature designs; group designs use "
            "'group-scaled', 'auto', or an explicit amplitude"
        )
    sizes = config.expanded_group_sizes()
    T = config.num_groups
    if T < 2:
        raise ValueError("group-scaled signal needs at least two groups")
    if config.group_scale_mode == "mean-size":
        ls = [sum(sizes) / len(sizes)] * len(sizes)
    else:
        ls = list(sizes)
    num = 0.0
    for l in ls:
        val = 4.0 * math.log(T) / (1.0 - T ** (-2.0 / l)) - l
        if val <= 0.0:
            raise ValueError(
                f"group-scaled amplitude undefined for size {l} with {T} groups"
            )
        num += math.sqrt(val)
    den = sum(math.sqrt(s) for s in sizes)
    return num / den


@lru_cache(maxsize=4)
def _identity_design(n):
    return DesignMatrix(np.eye(n))


@lru_cache(maxsize=4)
def _equicorr_matrices(n, rho):
    """(whitener, root) for the equicorrelation covariance (1-rho)I + rho*J.

    Both have the closed form c1*(I - J/n) + c2*(J/n) with J the all-ones
    matrix; the whitener uses c = 1/sqrt(eigenvalue), the root sqrt.
    """
    lo = 1.0 - rho
    hi = 1.0 - rho + n * rho
    def build(f):
        a = f(lo)
        b = f(hi)
        M = np.full((n, n), (b - a) / n)
        M[np.diag_indices(n)] += a
        return M
    return build(lambda e: 1.0 / math.sqrt(e)), build(math.sqrt)


@lru_cache(maxsize=8)
def _cached_partition(sizes, weight_scheme):
    sizes_arr = np.array(sizes, dtype=float)
    w = np.sqrt(sizes_arr) if weight_scheme == "sqrt" else 1.0 / np.sqrt(sizes_arr)
    return GroupPartition.from_sizes(sizes, w)


@lru_cache(maxsize=4)
def _cached_identity_standardization(sizes, weight_scheme):
    part = _cached_partition(sizes, weight_scheme)
    m = part.num_features
    return standardize(np.eye(m), part)


def _rep_rng(seed, rep):
    return np.random.default_rng(np.random.SeedSequence((int(seed), int(rep))))


def gen_orthogonal(config, rep):
    """Identity design; draw order: support, then noise."""
    rng = _rep_rng(config.seed, rep)
    m = config.m
    amp = resolve_signal(config)
    support = rng.choice(m, size=config.t, replace=False)
    beta = np.zeros(m)
    beta[support] = amp
    y = beta + config.sigma * rng.standard_normal(m)
    return _identity_design(m), beta, y, {int(i) for i in support}, y, config.sigma


def gen_gaussian(config, rep):
    """N(0, 1/n) entries, columns scaled to exactly unit norm.

    Draw order: design, then support, then noise.
    """
    rng = _rep_rng(config.seed, rep)
    n, m = config.n, config.m
    X = rng.standard_normal((n, m)) / math.sqrt(n)
    X /= np.sqrt((X * X).sum(axis=0))
    amp = resolve_signal(config)
    support = rng.choice(m, size=config.t, replace=False)
    beta = np.zeros(m)
    beta[support] = amp
    y = X @ beta + config.sigma * rng.standard_normal(n)
    return DesignMatrix(X), beta, y, {int(i) for i in support}, None, None


def gen_correlated_means(config, rep):
    """Estimate a sparse mean under equicorrelated noise via whitening.

    The raw observation ybar ~ N(mu, sigma^2 * Sigma) feeds the stepdown
    baselines directly (unit marginal variances); the sorted-L1 methods
    see the whitened regression y = W ybar against the design W, whose
    columns are deliberately not unit-norm.  mu's nonzero value is scaled
    by the whitener's column norm so the effective per-column signal
    matches the named strength.  Draw order: support, then noise.
    """
    rng = _rep_rng(config.seed, rep)
    n = config.m
    W, root = _equicorr_matrices(n, config.rho)
    col = float(math.sqrt((W[:, 0] * W[:, 0]).sum()))
    amp = resolve_signal(config) / col
    support = rng.choice(n, size=config.t, replace=False)
    mu = np.zeros(n)
    mu[support] = amp
    ybar = mu + config.sigma * (root @ rng.standard_normal(n))
    y = W @ ybar
    design = DesignMatrix(W, require_unit_columns=False)
    return design, mu, y, {int(i) for i in support}, ybar, config.sigma


def gen_group(config, rep):
    """Group design; draw order: design (gaussian case), relevant groups,
    per-group coefficients in sorted group order, then noise.

    Relevant group g gets uniform [0.1, 1.1] coefficients rescaled so the
    image norm ||X_g beta_g|| equals amplitude * sqrt(|g|).
    """
    rng = _rep_rng(config.seed, rep)
    sizes = config.expanded_group_sizes()
    part = _cached_partition(sizes, config.weight_scheme)
    m = config.m
    if config.design == "group-orthogonal":
        design = _identity_design(m)
        X = design.entries
    else:
        X = rng.standard_normal((config.n, m)) / math.sqrt(config.n)
        X /= np.sqrt((X * X).sum(axis=0))
        design = DesignMatrix(X)
    amp = resolve_group_amplitude(config)
    relevant = rng.choice(config.num_groups, size=config.t, replace=False)
    beta = np.zeros(m)
    for g in sorted(int(i) for i in relevant):
        idx = list(part.groups[g])
        u = rng.uniform(0.1, 1.1, size=len(idx))
        norm = float(np.sqrt(((X[:, idx] @ u) ** 2).sum()))
        beta[idx] = u * (amp * math.sqrt(len(idx)) / norm)
    y = X @ beta + config.sigma * rng.standard_normal(X.shape[0])
    return design, part, beta, y, {int(i) for i in relevant}


def resolve_schedule(config):
    """Build the schedule (or stepdown thresholds) a config calls for.

    Returns (mode, payload, provenance): mode "schedule" carries a built
    LambdaSchedule, "thresholds" a stepdown level array, and "mc" a base
    schedule corrected per replication against that replication's design.
    """
    method = config.method
    if method == "sd-kfwer":
        thr = kfwer_thresholds(config.m, config.k, config.alpha)
        return "thresholds", thr, {
            "type": "thresholds",
            "rule": "kfwer",
            "params": {"m": config.m, "k": config.k, "alpha": config.alpha},
        }
    if method == "sd-fdp":
        thr = fdp_thresholds(config.m, config.alpha, config.gamma)
        return "thresholds", thr, {
            "type": "thresholds",
            "rule": "fdp",
            "params": {"m": config.m, "alpha": config.alpha, "gamma": config.gamma},
        }

    if config.design in GROUP_DESIGNS:
        sizes = config.expanded_group_sizes()
        weights = tuple(config.group_weights())
        corrected = config.design == "group-gaussian" and config.correction in (
            "auto",
            "gaussian",
        )
        if method == "slope-bh":
            # the plain maximum-quantile schedule, also under random designs
            sched = group_max_schedule(config.q, sizes, weights)
        elif method == "gk-slope":
            if corrected:
                sched = group_corrected_schedule(
                    "gk", config.n, sizes, weights, config.alpha, k=config.k
                )
            else:
                sched = gk_schedule(config.k, config.alpha, sizes, weights)
        else:
            if corrected:
                sched = group_corrected_schedule(
                    "gf", config.n, sizes, weights, config.alpha, gamma=config.gamma
                )
            else:
                sched = gf_schedule(config.alpha, config.gamma, sizes, weights)
        return "schedule", sched, {
            "type": "schedule",
            "rule": sched.rule,
            "params": sched.params,
        }

    if method == "slope-bh":
        base = bh_schedule(config.m, config.q)
    elif method == "k-slope":
        base = kfwer_schedule(config.m, config.k, config.alpha)
    else:
        base = fdp_schedule(config.m, config.alpha, config.gamma)
    if config.design == "gaussian" and method in ("k-slope", "f-slope"):
        if config.correction in ("auto", "gaussian"):
            sched = gaussian_corrected_schedule(base, config.n)
            return "schedule", sched, {
                "type": "schedule",
                "rule": sched.rule,
                "params": sched.params,
            }
        if config.correction == "monte-carlo":
            return "mc", base, {
                "type": "monte-carlo",
                "rule": base.rule,
                "params": dict(base.params, replicates=config.mc_replicates),
            }
    return "schedule", base, {
        "type": "schedule",
        "rule": base.rule,
        "params": base.params,
    }


def _run_rep(config, rep, mode, payload):
    if config.design in GROUP_DESIGNS:
        design, part, beta, y, truth = gen_group(config, rep)
        std = None
        if config.design == "group-orthogonal":
            std = _cached_identity_standardization(
                config.expanded_group_sizes(), config.weight_scheme
            )
        fit = solve_group_slope(
            design,
            y,
            part,
            payload,
            sigma=config.sigma,
            tol=config.fit_tol,
            max_iter=config.fit_max_iter,
            standardized=std,
        )
        sm = group_support_metrics(fit, truth, config.k, config.gamma)
        return sm, fit.converged

    if config.design == "orthogonal-identity":
        design, beta, y, truth, stats, scale = gen_orthogonal(config, rep)
    elif config.design == "gaussian":
        design, beta, y, truth, stats, scale = gen_gaussian(config, rep)
    else:
        design, beta, y, truth, stats, scale = gen_correlated_means(config, rep)

    if mode == "thresholds":
        p = two_sided_pvalues(stats, scale)
        support = stepdown_reject(p, payload)
        return support_metrics(support, truth, config.k, config.gamma), True

    schedule = payload
    if mode == "mc":
        mc_seed = int(
            np.random.SeedSequence((int(config.seed), int(rep))).generate_state(1)[0]
        )
        schedule = monte_carlo_corrected_schedule(
            payload, design.entries, config.mc_replicates, seed=mc_seed
        )
    fit = solve_slope(
        design,
        y,
        schedule,
        sigma=config.sigma,
        tol=config.fit_tol,
        max_iter=config.fit_max_iter,
    )
    return support_metrics(fit, truth, config.k, config.gamma), fit.converged


def _rep_worker(args):
    config, rep, mode, payload = args
    try:
        return _run_rep(config, rep, mode, payload)
    except Exception as exc:
        # a failed replication must name its position in the stream
        exc.args = (f"replication {rep} (base seed {config.seed}): {exc}",)
        raise


@dataclass
class TrialReport:
    """Per-replication selection counts and their aggregates for one config."""

    config: ExperimentConfig
    v: np.ndarray
    r: np.ndarray
    tp: np.ndarray
    fdp: np.ndarray
    k_hit: np.ndarray
    fdp_exceeds: np.ndarray
    power: np.ndarray
    converged: np.ndarray
    aggregates: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def kfwer_at(self, k):
        """(estimate, se) of Prob(V >= k) from the stored per-rep counts."""
        hit = (self.v >= int(k)).astype(float)
        est = float(hit.mean())
        return est, float(math.sqrt(hit.var() / hit.size))


def _aggregate(values):
    x = np.asarray(values, dtype=float)
    est = float(x.mean())
    return est, float(math.sqrt(x.var() / x.size))


def run_experiment(config, threads=1, resolved=None):
    """Run every replication of a config and aggregate the outcomes.

    Parameters
    ----------
    threads : int
        Worker processes; 1 runs inline (fully deterministic path, used
        by the acceptance settings).  Results are merged by replication
        index, so the thread count never changes the numbers.
    resolved : optional
        A (mode, payload, provenance) triple from resolve_schedule, to
        reuse a schedule that was already built (e.g. for a manifest).

    Returns
    -------
    TrialReport
    """
    if int(threads) != threads or threads < 1:
        raise ValueError(f"threads must be a positive integer, got {threads!r}")
    mode, payload, provenance = resolved if resolved is not None else resolve_schedule(config)
    reps = config.replications
    if threads == 1:
        rows = [_rep_worker((config, r, mode, payload)) for r in range(reps)]
    else:
        with ProcessPoolExecutor(max_workers=int(threads)) as pool:
            rows = list(
                pool.map(
                    _rep_worker,
                    [(config, r, mode, payload) for r in range(reps)],
                    chunksize=max(1, reps // (4 * int(threads))),
                )
            )
    metrics = [row[0] for row in rows]
    report = TrialReport(
        config=config,
        v=np.array([sm.v for sm in metrics]),
        r=np.array([sm.r for sm in metrics]),
        tp=np.array([sm.tp for sm in metrics]),
        fdp=np.array([sm.fdp for sm in metrics]),
        k_hit=np.array([sm.k_hit for sm in metrics]),
        fdp_exceeds=np.array([sm.fdp_exceeds for sm in metrics]),
        power=np.array([sm.power for sm in metrics]),
        converged=np.array([row[1] for row in rows]),
    )
    report.aggregates = {
        "kfwer": _aggregate(report.k_hit),
        "prob_fdp": _aggregate(report.fdp_exceeds),
        "fdr": _aggregate(report.fdp),
        "power": _aggregate(report.power),
    }
    if config.design in GROUP_DESIGNS:
        amp = resolve_group_amplitude(config)
    else:
        amp = resolve_signal(config)
    report.extras = {
        "signal_value": amp,
        "schedule": provenance,
        "all_converged": bool(report.converged.all()),
    }
    if config.design in GROUP_DESIGNS:
        report.extras["group_scale_mode"] = config.group_scale_mode
    return report


_REPORT_COLUMNS = (
    "config_id",
    "design",
    "method",
    "n",
    "m",
    "t",
    "k",
    "alpha",
    "gamma",
    "q",
    "signal",
    "replications",
    "seed",
    "metric",
    "estimate",
    "se",
)


def report_rows(report):
    """One CSV row dict per aggregate metric."""
    c = report.config
    base = {
        "config_id": c.config_id(),
        "design": c.design,
        "method": c.method,
        "n": c.n,
        "m": c.m,
        "t": c.t,
        "k": c.k,
        "alpha": f"{c.alpha:.17g}",
        "gamma": f"{c.gamma:.17g}",
        "q": f"{c.q:.17g}",
        "signal": f"{report.extras['signal_value']:.17g}",
        "replications": c.replications,
        "seed": c.seed,
    }
    rows = []
    for metric in ("kfwer", "prob_fdp", "fdr", "power"):
        est, se = report.aggregates[metric]
        rows.append(dict(base, metric=metric, estimate=f"{est:.17g}", se=f"{se:.17g}"))
    return rows


def write_report_csv(reports, path):
    """Summary table: one row per (config, metric), 17 significant digits."""
    lines = [",".join(_REPORT_COLUMNS)]
    for rep in reports:
        for row in report_rows(rep):
            lines.append(",".join(str(row[col]) for col in _REPORT_COLUMNS))
    Path(path).write_text("\n".join(lines) + "\n")


def write_details_json(reports, path):
    """Per-replication counts and aggregates, deterministically serialized."""
    docs = []
    for rep in reports:
        docs.append(
            {
                "config": rep.config.to_dict(),
                "config_id": rep.config.config_id(),
                "extras": rep.extras,
                "aggregates": {
                    name: {"estimate": est, "se": se}
                    for name, (est, se) in rep.aggregates.items()
                },
                "replications": {
                    "v": rep.v.tolist(),
                    "r": rep.r.tolist(),
                    "tp": rep.tp.tolist(),
                    "fdp": rep.fdp.tolist(),
                    "k_hit": [bool(b) for b in rep.k_hit],
                    "fdp_exceeds": [bool(b) for b in rep.fdp_exceeds],
                    "power": rep.power.tolist(),
                    "converged": [bool(b) for b in rep.converged],
                },
            }
        )
    Path(path).write_text(json.dumps({"reports": docs}, sort_keys=True, indent=1) + "\n")
