"""Print a compact table for one simulation run directory.

Reads manifest.json and report.csv as written by `stepslope simulate` and
lays the four aggregate metrics out one row per experiment, estimates with
their standard errors in parentheses.
"""
import argparse
import csv
import json
from pathlib import Path

METRICS = ("kfwer", "prob_fdp", "fdr", "power")


def load_rows(run_dir):
    with open(run_dir / "report.csv", newline="") as fh:
        return list(csv.DictReader(fh))


def main():
    parser = argparse.ArgumentParser(description=__doc__.strip().split("\n")[0])
    parser.add_argument("run_dir", type=Path, help="one run directory")
    parser.add_argument("--digits", type=int, default=3,
                        help="decimal places for estimates")
    args = parser.parse_args()

    manifest_path = args.run_dir / "manifest.json"
    if not manifest_path.is_file():
        parser.error(f"{manifest_path} not found; pass a single run directory")
    manifest = json.loads(manifest_path.read_text())
    preset = manifest.get("preset")
    origin = f"preset {preset['name']} v{preset['version']}" if preset else "ad hoc"
    print(f"run of {len(manifest['configs'])} experiment(s), {origin}, "
          f"threads={manifest['threads']}, code {manifest['code_version']}")

    cells = {}
    labels = {}
    for row in load_rows(args.run_dir):
        cid = row["config_id"]
        labels[cid] = (row["design"], row["method"], row["n"], row["m"],
                       row["t"], row["k"], row["replications"])
        est, se = float(row["estimate"]), float(row["se"])
        cells[(cid, row["metric"])] = f"{est:.{args.digits}f} ({se:.{args.digits}f})"

    header = ("design", "method", "n", "m", "t", "k", "reps") + METRICS
    table = [header]
    for cid, label in labels.items():
        table.append(label + tuple(cells[(cid, m)] for m in METRICS))
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    for i, row in enumerate(table):
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if i == 0:
            print("  ".join("-" * w for w in widths))


if __name__ == "__main__":
    main()
