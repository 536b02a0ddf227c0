"""Command-line entry point: ``celltriage <subcommand> --input towers.csv``.

Machine-readable output goes to stdout (or ``--out``); diagnostics go to
stderr. Exit status is 0 on success, 1 on a fatal input error and 2 on a
usage error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from celltriage.errors import ConsistencyError, DomainError, InputError
from celltriage.pipeline import NEEDS_GAZETTEER, SUBCOMMAND_SECTIONS, Analysis, RunConfig
from celltriage.report import FIGURES, clusters_geojson, dumps, emit_figure_data, rows_to_csv, zones_geojson
from celltriage.temporal import EARLY_PHASE, RECENT_PHASE, format_month_range, parse_month_range
from celltriage.thresholds import QuantileConfig

log = logging.getLogger("celltriage")

EXIT_OK, EXIT_INPUT, EXIT_USAGE = 0, 1, 2
SEED_ENV = "CELLTRIAGE_SEED"

OVERRIDE_FLAGS = {
    "t_high_samples": "high_samples",
    "t_low_samples": "low_samples",
    "t_high_density": "high_density",
    "t_low_density": "low_density",
    "t_long_days": "long_active",
}


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", required=True, help="OpenCelliD-format CSV snapshot")
    common.add_argument("--gazetteer", help="offline gazetteer CSV (name,admin,lat,lon)")
    common.add_argument("--format", choices=("json", "csv", "geojson", "jsonl"), default="json")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--quarantine-out", help="also write the quarantine report as JSON lines")
    common.add_argument("-v", "--verbose", action="store_true")

    q = common.add_argument_group("thresholds")
    q.add_argument("--q-high", type=float, default=0.90)
    q.add_argument("--q-low", type=float, default=0.10)
    q.add_argument("--q-long", type=float, default=0.75)
    for flag in OVERRIDE_FLAGS:
        q.add_argument("--" + flag.replace("_", "-"), type=float, default=None, dest=flag)
    q.add_argument("--strategic-range-m", type=float, default=1000.0)
    q.add_argument("--strategic-max-samples", type=float, default=1.0)

    c = common.add_argument_group("clustering")
    c.add_argument("--k", type=int, default=20)
    c.add_argument("--seed", type=int, default=None, help=f"RNG seed (default ${SEED_ENV} or 0)")
    c.add_argument("--workers", type=int, default=1)
    c.add_argument("--priority-n", type=int, default=3)

    t = common.add_argument_group("temporal")
    t.add_argument("--phase-a", default=format_month_range(EARLY_PHASE))
    t.add_argument("--phase-b", default=format_month_range(RECENT_PHASE))
    t.add_argument("--window-days", type=int, default=365)

    p = common.add_argument_group("planning")
    p.add_argument("--n-c", type=int, default=10)
    p.add_argument("--zone-agg", choices=("max", "mean"), default="max")
    p.add_argument("--welch", action="store_true", help="Welch instead of pooled t-test")

    parser = argparse.ArgumentParser(prog="celltriage", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMAND_SECTIONS:
        sp = sub.add_parser(name, parents=[common])
        if name == "report":
            sp.add_argument("--figure", type=int, choices=FIGURES, help="emit one figure's data series instead")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    seed = args.seed
    if seed is None:
        env = os.environ.get(SEED_ENV)
        try:
            seed = int(env) if env else 0
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    try:
        return RunConfig(
            input_path=args.input,
            gazetteer_path=args.gazetteer,
            quantiles=QuantileConfig(args.q_high, args.q_low, args.q_long),
            threshold_overrides={
                field: getattr(args, flag) for flag, field in OVERRIDE_FLAGS.items() if getattr(args, flag) is not None
            },
            k=args.k,
            seed=seed,
            workers=args.workers,
            strategic_range_m=args.strategic_range_m,
            strategic_max_samples=args.strategic_max_samples,
            phase_a=parse_month_range(args.phase_a),
            phase_b=parse_month_range(args.phase_b),
            window_days=args.window_days,
            n_c=args.n_c,
            priority_n=args.priority_n,
            zone_agg=args.zone_agg,
            welch=args.welch,
        )
    except DomainError as exc:
        raise UsageError(str(exc)) from None


def render(command: str, analysis: Analysis, fmt: str, figure: int | None = None) -> str:
    if command == "report" and figure is not None:
        rep = analysis.report()
        data = emit_figure_data(rep, figure)
        if figure == 4:
            if fmt not in ("json", "geojson"):
                raise UsageError("figure 4 is GeoJSON; use --format geojson")
            return dumps(data)
        if fmt == "csv":
            return rows_to_csv(data)
        if fmt != "json":
            raise UsageError(f"--format {fmt} is not available for figure {figure}")
        return dumps(data)

    if fmt == "jsonl":
        if command != "validate":
            raise UsageError("--format jsonl is only available for validate")
        return analysis.validation.to_jsonl()

    rep = analysis.report(SUBCOMMAND_SECTIONS[command])
    if fmt == "json":
        return rep.to_json()
    if fmt == "geojson":
        if command == "cluster":
            return dumps(clusters_geojson(rep))
        if command == "zones":
            g = analysis.gazetteer
            return dumps(zones_geojson(rep, {e.name: (e.lat, e.lon) for e in g.entries}))
        raise UsageError(f"--format geojson is not available for {command}")
    # csv
    doc = rep.to_dict()
    tables = {
        "validate": lambda: doc["validation"]["quarantined"],
        "classify": lambda: doc["classification"]["towers"],
        "cluster": lambda: [
            {k: v for k, v in p.items() if k not in ("centroid", "members")}
            | {"centroid_lat": p["centroid"]["lat"], "centroid_lon": p["centroid"]["lon"]}
            for p in doc["clusters"]["profiles"]
        ],
        "temporal": lambda: doc["temporal"]["series"],
        "zones": lambda: doc["zones"]["demand_zones"],
        "baseline": lambda: doc["baseline"]["top_cells"],
    }
    if command not in tables:
        raise UsageError(f"--format csv is not available for {command}")
    return rows_to_csv(tables[command]())


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="celltriage: %(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        config = config_from_args(args)
        if args.command in NEEDS_GAZETTEER and not config.gazetteer_path:
            raise UsageError(f"{args.command} needs --gazetteer")
        analysis = Analysis.from_config(config)
        v = analysis.validation
        log.info("accepted %d of %d rows (%d quarantined)", v.accepted_count, v.total, len(v.quarantined))
        if args.quarantine_out:
            with open(args.quarantine_out, "w", encoding="utf-8") as fh:
                fh.write(v.to_jsonl())
        text = render(args.command, analysis, args.format, getattr(args, "figure", None))
    except UsageError as exc:
        print(f"celltriage: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, DomainError, ConsistencyError, OSError) as exc:
        print(f"celltriage: error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
