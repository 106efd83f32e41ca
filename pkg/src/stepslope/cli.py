"""Command line entry points: lambda, solve, stepdown, simulate.

Exit codes: 0 success, 2 invalid input or usage, 1 numerical failure.
Design and response files are plain comma-separated numbers; schedules
travel as index,value CSV or as the JSON written by the lambda command.
"""
import functools
import hashlib
import json
import sys
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import click
import numpy as np

from . import __version__
from .errors import NumericalError
from .groups import GroupPartition, solve_group_slope
from .schedules import (
    ScheduleRequest,
    build_schedule,
    schedule_csv_text,
    schedule_from_json,
    schedule_json_text,
    schedule_values_from_csv,
)
from .simlab import (
    ExperimentConfig,
    resolve_schedule,
    run_experiment,
    write_details_json,
    write_report_csv,
)
from .solver import DesignMatrix, solve_slope
from .stepdown import fdp_thresholds, kfwer_thresholds, stepdown_reject

_RULE_TOKENS = {
    "bh": "BH",
    "kfwer": "kFWER",
    "fdp": "FDP",
    "kfwer-gaussian": "kFWER-Gaussian",
    "fdp-gaussian": "FDP-Gaussian",
    "kfwer-monte-carlo": "kFWER-MonteCarlo",
    "kfwer-montecarlo": "kFWER-MonteCarlo",
    "fdp-monte-carlo": "FDP-MonteCarlo",
    "fdp-montecarlo": "FDP-MonteCarlo",
    "group-max": "group-max-FDR",
    "group-max-fdr": "group-max-FDR",
    "group-kfwer": "group-kFWER",
    "gk": "group-kFWER",
    "group-fdp": "group-FDP",
    "gf": "group-FDP",
    "group-kfwer-corrected": "group-kFWER-corrected",
    "gk-corrected": "group-kFWER-corrected",
    "group-fdp-corrected": "group-FDP-corrected",
    "gf-corrected": "group-FDP-corrected",
}


def _resolve_rule(token):
    tag = _RULE_TOKENS.get(token.strip().lower())
    if tag is None:
        known = "bh, kfwer, fdp, kfwer-gaussian, fdp-gaussian, kfwer-monte-carlo, " \
                "fdp-monte-carlo, group-max, group-kfwer, group-fdp, " \
                "group-kfwer-corrected, group-fdp-corrected"
        raise click.UsageError(f"unknown rule {token!r}; choose from: {known}")
    return tag


def _guarded(f):
    """Map exceptions to the exit-code contract, naming the bad input."""

    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except click.ClickException:
            raise
        except NumericalError as exc:
            click.echo(f"numerical failure: {exc}", err=True)
            sys.exit(1)
        except np.linalg.LinAlgError as exc:
            click.echo(f"numerical failure (linear algebra): {exc}", err=True)
            sys.exit(1)
        except (ValueError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)

    return wrapper


def _read_matrix(path):
    try:
        X = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    except Exception as exc:
        raise ValueError(f"{path}: could not parse as a numeric CSV matrix ({exc})")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{path}: matrix contains non-finite entries")
    return X


def _read_vector(path):
    try:
        v = np.loadtxt(path, delimiter=",", dtype=float).ravel()
    except Exception as exc:
        raise ValueError(f"{path}: could not parse as a numeric CSV vector ({exc})")
    if v.size == 0:
        raise ValueError(f"{path}: empty vector")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{path}: vector contains non-finite entries")
    return v


def _parse_sizes(text, flag):
    try:
        sizes = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise click.UsageError(f"{flag} expects comma-separated integers, got {text!r}")
    if not sizes or any(s < 1 for s in sizes):
        raise click.UsageError(f"{flag} entries must be positive integers")
    return sizes


def _weights_for(sizes, scheme):
    arr = np.sqrt(np.asarray(sizes, dtype=float))
    return tuple(arr) if scheme == "sqrt" else tuple(1.0 / arr)


def _write_or_echo(text, out):
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text)


@click.group()
@click.version_option(version=__version__)
def main():
    """Sorted-L1 estimation with stepdown-derived schedules."""


@main.command("lambda")
@click.option("--rule", required=True, help="Schedule rule token, e.g. kfwer or group-fdp.")
@click.option("--m", type=int, default=None, help="Schedule length (number of features).")
@click.option("--n", type=int, default=None, help="Sample size, for corrected rules.")
@click.option("--k", type=int, default=None, help="Familywise order k.")
@click.option("--alpha", type=float, default=None, help="Error level for kFWER/FDP rules.")
@click.option("--gamma", type=float, default=None, help="FDP exceedance fraction.")
@click.option("--q", type=float, default=None, help="FDR-style level for bh/group-max.")
@click.option("--sigma", type=float, default=None, help="Noise scale multiplier (feature rules).")
@click.option("--group-sizes", default=None,
              help="Comma-separated group sizes, required for group rules.")
@click.option("--weight-scheme", type=click.Choice(["sqrt", "inv-sqrt"]), default="sqrt",
              show_default=True, help="Group weights from sizes.")
@click.option("--design", "design_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Design CSV, required for monte-carlo rules.")
@click.option("--replicates", type=int, default=None, help="Monte-carlo draws per entry.")
@click.option("--mc-seed", type=int, default=None, help="Monte-carlo seed.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Output path (.json for JSON, else CSV); stdout CSV when omitted.")
@_guarded
def lambda_cmd(rule, m, n, k, alpha, gamma, q, sigma, group_sizes, weight_scheme,
               design_path, replicates, mc_seed, out):
    """Build a regularization schedule and print or save it."""
    tag = _resolve_rule(rule)
    ranks = weights = None
    if tag.startswith("group"):
        if group_sizes is None:
            raise click.UsageError(f"rule {rule} requires --group-sizes")
        ranks = _parse_sizes(group_sizes, "--group-sizes")
        weights = _weights_for(ranks, weight_scheme)
    elif group_sizes is not None:
        raise click.UsageError(f"--group-sizes does not apply to rule {rule}")
    design = None
    if tag.endswith("MonteCarlo"):
        if design_path is None:
            raise click.UsageError(f"rule {rule} requires --design")
        design = _read_matrix(design_path)
    elif design_path is not None:
        raise click.UsageError("--design only applies to monte-carlo rules")
    request = ScheduleRequest(m=m, n=n, k=k, alpha=alpha, gamma=gamma, q=q,
                              sigma=sigma, ranks=ranks, weights=weights,
                              design=design, replicates=replicates, seed=mc_seed)
    schedule = build_schedule(tag, request)
    if out is not None and out.endswith(".json"):
        _write_or_echo(schedule_json_text(schedule), out)
    else:
        _write_or_echo(schedule_csv_text(schedule), out)


def _load_schedule_file(path):
    if path.endswith(".json"):
        return schedule_from_json(path).values
    return schedule_values_from_csv(path)


@main.command()
@click.option("--design", "design_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Design matrix CSV, one sample per row.")
@click.option("--response", "response_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Response vector CSV, one value per line.")
@click.option("--schedule", "schedule_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Schedule file (CSV or JSON) from the lambda command.")
@click.option("--rule", default=None, help="Build the schedule inline instead.")
@click.option("--k", type=int, default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--gamma", type=float, default=None)
@click.option("--q", type=float, default=None)
@click.option("--groups", "groups_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Partition CSV (feature_index,group_id[,weight]).")
@click.option("--sigma", type=float, default=1.0, show_default=True,
              help="Noise scale multiplying the penalty.")
@click.option("--tol", type=float, default=1e-8, show_default=True)
@click.option("--max-iter", type=int, default=20000, show_default=True)
@click.option("--allow-unnormalized", is_flag=True,
              help="Skip the unit-column check on the design.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Fit JSON path; stdout when omitted.")
@_guarded
def solve(design_path, response_path, schedule_path, rule, k, alpha, gamma, q,
          groups_path, sigma, tol, max_iter, allow_unnormalized, out):
    """Fit the sorted-L1 estimator (optionally with a group penalty)."""
    X = _read_matrix(design_path)
    y = _read_vector(response_path)
    if y.size != X.shape[0]:
        raise ValueError(
            f"response length {y.size} does not match design rows {X.shape[0]}"
        )
    partition = GroupPartition.from_csv(groups_path) if groups_path else None
    if (schedule_path is None) == (rule is None):
        raise click.UsageError("pass exactly one of --schedule or --rule")
    if schedule_path is not None:
        lam = _load_schedule_file(schedule_path)
    else:
        tag = _resolve_rule(rule)
        kwargs = {}
        if tag.startswith("group"):
            if partition is None:
                raise click.UsageError(f"rule {rule} requires --groups")
            kwargs["ranks"] = tuple(len(g) for g in partition.groups)
            kwargs["weights"] = tuple(partition.weights)
        else:
            kwargs["m"] = X.shape[1]
        if tag.endswith("MonteCarlo"):
            kwargs["design"] = X
        if "Gaussian" in tag or tag.endswith("corrected"):
            kwargs["n"] = X.shape[0]
        request = ScheduleRequest(k=k, alpha=alpha, gamma=gamma, q=q, **kwargs)
        lam = build_schedule(tag, request).values

    if partition is not None:
        design = DesignMatrix(X, require_unit_columns=False)
        fit = solve_group_slope(design, y, partition, lam, sigma=sigma,
                                tol=tol, max_iter=max_iter)
        doc = {
            "n": X.shape[0],
            "m": X.shape[1],
            "num_groups": len(partition.groups),
            "beta": [float(b) for b in fit.beta],
            "group_norms": [float(g) for g in fit.group_norms],
            "selected_groups": sorted(int(g) for g in fit.selected_groups),
            "support": sorted(int(i) for i in np.flatnonzero(fit.beta)),
            "iterations": int(fit.iterations),
            "final_gap": float(fit.final_gap),
            "objective": float(fit.objective),
            "converged": bool(fit.converged),
        }
    else:
        design = DesignMatrix(X, require_unit_columns=not allow_unnormalized)
        fit = solve_slope(design, y, lam, sigma=sigma, tol=tol, max_iter=max_iter)
        doc = {
            "n": X.shape[0],
            "m": X.shape[1],
            "beta": [float(b) for b in fit.beta],
            "support": sorted(int(i) for i in fit.support),
            "iterations": int(fit.iterations),
            "final_gap": float(fit.final_gap),
            "objective": float(fit.objective),
            "converged": bool(fit.converged),
        }
    _write_or_echo(json.dumps(doc, indent=1) + "\n", out)


@main.command()
@click.option("--pvalues", "pvalues_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="P-value CSV, one value per line.")
@click.option("--rule", type=click.Choice(["kfwer", "fdp"]), required=True)
@click.option("--k", type=int, default=None, help="Familywise order (kfwer rule).")
@click.option("--alpha", type=float, required=True)
@click.option("--gamma", type=float, default=None, help="Exceedance fraction (fdp rule).")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Result JSON path; stdout when omitted.")
@_guarded
def stepdown(pvalues_path, rule, k, alpha, gamma, out):
    """Run a stepdown multiple test and report the rejected indices."""
    p = _read_vector(pvalues_path)
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError(f"{pvalues_path}: p-values must lie in [0, 1]")
    m = p.size
    if rule == "kfwer":
        if k is None:
            raise click.UsageError("rule kfwer requires --k")
        if gamma is not None:
            raise click.UsageError("--gamma does not apply to rule kfwer")
        thresholds = kfwer_thresholds(m, k, alpha)
        params = {"m": m, "k": k, "alpha": alpha}
    else:
        if gamma is None:
            raise click.UsageError("rule fdp requires --gamma")
        if k is not None:
            raise click.UsageError("--k does not apply to rule fdp")
        thresholds = fdp_thresholds(m, alpha, gamma)
        params = {"m": m, "alpha": alpha, "gamma": gamma}
    rejected = sorted(stepdown_reject(p, thresholds))
    doc = {
        "rule": rule,
        "params": params,
        "thresholds": [float(t) for t in thresholds],
        "rejected": [int(i) for i in rejected],
        "num_rejected": len(rejected),
    }
    _write_or_echo(json.dumps(doc, indent=1) + "\n", out)


def _available_presets():
    base = resources.files("stepslope").joinpath("presets")
    return sorted(p.name[:-5] for p in base.iterdir() if p.name.endswith(".json"))


def _load_preset(name):
    base = resources.files("stepslope").joinpath("presets")
    candidate = base.joinpath(f"{name}.json")
    if not candidate.is_file():
        known = ", ".join(_available_presets())
        raise click.UsageError(f"unknown preset {name!r}; available presets: {known}")
    return json.loads(candidate.read_text())


_OVERRIDE_FIELDS = (
    ("design", "design"),
    ("method", "method"),
    ("n", "n"),
    ("m", "m"),
    ("t", "t"),
    ("signal", "signal"),
    ("alpha", "alpha"),
    ("gamma", "gamma"),
    ("k", "k"),
    ("q", "q"),
    ("sigma", "sigma"),
    ("reps", "replications"),
    ("seed", "seed"),
    ("rho", "rho"),
    ("num_groups", "num_groups"),
    ("group_sizes", "group_sizes"),
    ("weight_scheme", "weight_scheme"),
    ("group_scale_mode", "group_scale_mode"),
    ("correction", "correction"),
    ("mc_replicates", "mc_replicates"),
)


@main.command()
@click.option("--preset", default=None, help="Name of a bundled experiment preset.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON experiment file (single config or a list).")
@click.option("--design", default=None)
@click.option("--method", default=None)
@click.option("--n", type=int, default=None)
@click.option("--m", type=int, default=None)
@click.option("--t", type=int, default=None)
@click.option("--signal", default=None, help="Named strength or a numeric amplitude.")
@click.option("--alpha", type=float, default=None)
@click.option("--gamma", type=float, default=None)
@click.option("--k", type=int, default=None)
@click.option("--q", type=float, default=None)
@click.option("--sigma", type=float, default=None)
@click.option("--reps", type=int, default=None, help="Replications per experiment.")
@click.option("--seed", type=int, default=None, help="Base seed for every experiment.")
@click.option("--rho", type=float, default=None)
@click.option("--num-groups", "num_groups", type=int, default=None)
@click.option("--group-sizes", "group_sizes", default=None,
              help="Comma-separated size classes.")
@click.option("--weight-scheme", "weight_scheme",
              type=click.Choice(["sqrt", "inv-sqrt"]), default=None)
@click.option("--group-scale-mode", "group_scale_mode",
              type=click.Choice(["per-class", "mean-size"]), default=None)
@click.option("--correction", type=click.Choice(["auto", "gaussian", "monte-carlo", "none"]),
              default=None)
@click.option("--mc-replicates", "mc_replicates", type=int, default=None)
@click.option("--threads", type=int, default=1, show_default=True,
              help="Worker processes; results do not depend on this.")
@click.option("--out", "out_root", type=click.Path(file_okay=False), default="runs",
              show_default=True, help="Directory that run directories go under.")
@_guarded
def simulate(preset, config_path, threads, out_root, **flags):
    """Run simulation experiments and write report files to a run directory."""
    if preset is not None and config_path is not None:
        raise click.UsageError("pass --preset or --config, not both")

    overrides = {}
    for flag, field in _OVERRIDE_FIELDS:
        value = flags.get(flag)
        if value is None:
            continue
        if field == "group_sizes":
            value = list(_parse_sizes(value, "--group-sizes"))
        if field == "signal":
            try:
                value = float(value)
            except ValueError:
                pass
        overrides[field] = value

    doc = None
    if preset is not None:
        doc = _load_preset(preset)
    elif config_path is not None:
        try:
            doc = json.loads(Path(config_path).read_text())
        except json.JSONDecodeError as exc:
            raise ValueError(f"{config_path}: invalid JSON ({exc})")
        if isinstance(doc, list):
            doc = {"experiments": doc}
        elif "experiments" not in doc and "configs" in doc:
            # a run manifest replays as the experiment list it recorded
            doc = {"experiments": [
                {k: v for k, v in c.items() if k != "config_id"}
                for c in doc["configs"]
            ]}
        elif "experiments" not in doc:
            doc = {"experiments": [doc]}

    if doc is not None:
        dicts = [dict(d, **overrides) for d in doc["experiments"]]
        grid = doc.get("kfwer_grid")
    else:
        required = ("design", "method", "n", "m", "t")
        missing = [name for name in required if name not in overrides]
        if missing:
            raise click.UsageError(
                "without --preset or --config these options are required: "
                + ", ".join(f"--{name}" for name in missing)
            )
        dicts = [overrides]
        grid = None

    configs = [ExperimentConfig.from_dict(d) for d in dicts]
    resolved = [resolve_schedule(c) for c in configs]

    run_id = hashlib.sha256(
        json.dumps([c.to_dict() for c in configs], sort_keys=True).encode()
    ).hexdigest()[:12]
    run_dir = Path(out_root) / run_id
    run_dir.mkdir(parents=True, exist_ok=True)

    outputs = {"report": "report.csv", "details": "details.json"}
    if grid:
        outputs["grid"] = "kfwer_grid.csv"
    manifest = {
        "command": "simulate",
        "code_version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "preset": None if preset is None else {
            "name": doc["name"], "version": doc["version"],
        },
        "threads": int(threads),
        "configs": [dict(c.to_dict(), config_id=c.config_id()) for c in configs],
        "schedules": [prov for _, _, prov in resolved],
        "outputs": outputs,
    }
    (run_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=1, sort_keys=True) + "\n"
    )

    reports = []
    for config, triple in zip(configs, resolved):
        reports.append(run_experiment(config, threads=threads, resolved=triple))

    write_report_csv(reports, run_dir / outputs["report"])
    write_details_json(reports, run_dir / outputs["details"])
    if grid:
        _write_grid_csv(reports, grid, run_dir / outputs["grid"])
    click.echo(f"run {run_id}: " + ", ".join(
        str(run_dir / name) for name in outputs.values()
    ))


_K_SPECIFIC = ("k-slope", "gk-slope", "sd-kfwer")


def _write_grid_csv(reports, grid_ks, path):
    """Probability of at least k false selections, tabulated over k and t.

    Methods tuned to a specific k contribute one row at their own k;
    the rest are evaluated at every k in the grid.
    """
    lines = ["config_id,design,method,t,k,estimate,se"]
    for report in reports:
        c = report.config
        ks = [c.k] if c.method in _K_SPECIFIC else list(grid_ks)
        for k in ks:
            est, se = report.kfwer_at(k)
            lines.append(
                f"{c.config_id()},{c.design},{c.method},{c.t},{k},{est:.17g},{se:.17g}"
            )
    Path(path).write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
