"""Command-line front end: run / sweep / tables / report.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

from . import harness, link_tables
from .harness import Scenario, ScenarioError


def _load_scenario(path: str) -> Scenario:
    try:
        return Scenario.from_json(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ScenarioError(f"scenario file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid scenario JSON in {path}: {exc}") from exc


def _apply_overrides(sc: Scenario, args) -> Scenario:
    from dataclasses import replace
    if args.seed is not None:
        sc = replace(sc, seed=args.seed)
    return sc


def _write_results(result: harness.ResultSet, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = result.scenario.name
    (out_dir / f"{stem}.csv").write_text(result.to_csv())
    (out_dir / f"{stem}.provenance.json").write_text(result.provenance_json())
    if result.papr_ccdf is not None:
        (out_dir / f"{stem}.papr_ccdf.csv").write_text(result.papr_ccdf_csv())


def cmd_run(args) -> int:
    sc = _apply_overrides(_load_scenario(args.scenario), args)
    result = harness.run(sc, workers=args.workers)
    _write_results(result, Path(args.out_dir))
    print(f"wrote {sc.name}.csv ({len(result.rows)} SNR points) "
          f"to {args.out_dir}")
    return 0


def cmd_sweep(args) -> int:
    scenarios = [_apply_overrides(_load_scenario(p), args)
                 for p in args.scenario]
    results = harness.sweep(scenarios, workers=args.workers)
    failures = 0
    for sc, res in zip(scenarios, results):
        if isinstance(res, Exception):
            failures += 1
            print(f"{sc.name}: FAILED ({res})", file=sys.stderr)
        else:
            _write_results(res, Path(args.out_dir))
            print(f"{sc.name}: ok")
    return 2 if failures else 0


def cmd_tables(args) -> int:
    link_tables.bicm_tables(seed=args.seed if args.seed is not None else 1234)
    for n_re in args.n_re:
        link_tables.bler_thresholds(
            n_re, seed=args.seed if args.seed is not None else 1234)
    print("tables built and cached")
    return 0


def cmd_report(args) -> int:
    out_dir = Path(args.out_dir)
    files = sorted(out_dir.glob("*.csv"))
    if not files:
        print(f"no result CSVs under {out_dir}", file=sys.stderr)
        return 1
    for path in files:
        if path.name.endswith(".papr_ccdf.csv"):
            continue
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        print(f"\n{path.stem}: {len(rows)} SNR points")
        for row in rows:
            parts = [f"snr={row['snr_db']}"]
            for key in row:
                if key == "snr_db" or key.endswith("_ci") or key.endswith("_n"):
                    continue
                if row[key]:
                    parts.append(f"{key}={row[key]}")
            print("  " + "  ".join(parts))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uplinksim",
                                description="SC-FDM/OFDM uplink link-level simulator")
    sub = p.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario")
    run_p.add_argument("--scenario", required=True)
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--workers", type=int, default=1)
    run_p.add_argument("--out-dir", default="results")
    run_p.set_defaults(fn=cmd_run)

    sweep_p = sub.add_parser("sweep", help="run several scenarios")
    sweep_p.add_argument("--scenario", required=True, nargs="+")
    sweep_p.add_argument("--seed", type=int, default=None)
    sweep_p.add_argument("--workers", type=int, default=1)
    sweep_p.add_argument("--out-dir", default="results")
    sweep_p.set_defaults(fn=cmd_sweep)

    tab_p = sub.add_parser("tables", help="build BICM and BLER caches")
    tab_p.add_argument("--seed", type=int, default=None)
    tab_p.add_argument("--n-re", type=int, nargs="*", default=[864],
                       dest="n_re", help="data REs per layer and subframe")
    tab_p.set_defaults(fn=cmd_tables)

    rep_p = sub.add_parser("report", help="summarize result CSVs")
    rep_p.add_argument("--out-dir", default="results")
    rep_p.set_defaults(fn=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ScenarioError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
