"""plots --in SWEEP_DIR --out FIG_DIR [--smooth N]

Discovers runs through sweep_manifest.json when present, otherwise by
directory layout (runs/<strategy>_<kind>_seed<s>/metrics.csv and
summaries/<strategy>_<kind>.json).
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from .figures import PlotError, plot_bars_and_cumcost, plot_learning_curves

RUN_DIR_RE = re.compile(r"^(fixed|random|greedy)_(node|link)_seed(\d+)$")


def discover(in_dir: Path):
    """Map scenario -> metrics CSV list and scenario -> summary dict."""
    csv_by_scenario = {}
    manifest_path = in_dir / "sweep_manifest.json"
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text())
        for run in manifest["runs"]:
            if run["status"] != "complete":
                continue
            path = in_dir / run["dir"] / "metrics.csv"
            if path.exists():
                csv_by_scenario.setdefault(run["scenario"], []).append(path)
    else:
        for run_dir in sorted((in_dir / "runs").glob("*")) if (
                in_dir / "runs").is_dir() else []:
            m = RUN_DIR_RE.match(run_dir.name)
            if m and (run_dir / "metrics.csv").exists():
                key = f"{m.group(1)}:{m.group(2)}"
                csv_by_scenario.setdefault(key, []).append(
                    run_dir / "metrics.csv")

    summaries = {}
    summaries_dir = in_dir / "summaries"
    if summaries_dir.is_dir():
        for path in sorted(summaries_dir.glob("*.json")):
            data = json.loads(path.read_text())
            key = data.get("scenario", path.stem.replace("_", ":"))
            summaries[key] = data
    return csv_by_scenario, summaries


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="plots", description=__doc__)
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="completed sweep directory")
    parser.add_argument("--out", dest="out_dir", required=True,
                        help="where figures are written")
    parser.add_argument("--smooth", type=int, default=50,
                        help="learning-curve smoothing window")
    args = parser.parse_args(argv)

    in_dir = Path(args.in_dir)
    if not in_dir.is_dir():
        print(f"error: {in_dir} is not a directory", file=sys.stderr)
        return 2
    try:
        csv_by_scenario, summaries = discover(in_dir)
        written = []
        if csv_by_scenario:
            written += plot_learning_curves(csv_by_scenario, args.out_dir,
                                            args.smooth)
        if summaries:
            written += plot_bars_and_cumcost(summaries, args.out_dir)
        if not written:
            print(f"error: nothing to plot under {in_dir}", file=sys.stderr)
            return 2
    except PlotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
