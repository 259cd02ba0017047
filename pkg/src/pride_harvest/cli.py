"""Command line entry point: ``pride-harvest {gen-city,simulate,attack,bench}``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import seeding
from .attack import MODES, PAPER_FAITHFUL, GridFactorTable, dumps_outcomes, harvest_session
from .experiment import ExperimentConfig, build_world, emit_report, run_experiment
from .geometry import GridMap
from .protocol import BASIC, ENHANCED, SessionTranscript, simulate_session
from .roads import CITY_PRESETS, load_roads, preset_city


def _csv_ints(s: str) -> tuple[int, ...]:
    return tuple(int(x) for x in s.split(",") if x)


def _csv_strs(s: str) -> tuple[str, ...]:
    return tuple(x for x in s.split(",") if x)


def _load_map(args) -> tuple[GridMap, object]:
    if args.roads or args.grid:
        if not (args.roads and args.grid):
            raise ValueError("--roads and --grid must be given together")
        return GridMap.load(args.grid), load_roads(args.roads)
    return preset_city(args.city, args.city_seed)


def cmd_gen_city(args) -> int:
    grids, roads = preset_city(args.city, args.city_seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grids.save(out / "grid.json")
    roads.save(out / "roads.txt")
    print(f"{CITY_PRESETS[args.city].name}: {len(grids)} cells, {len(roads)} road segments -> {out}")
    return 0


def cmd_simulate(args) -> int:
    grids, roads = _load_map(args)
    world = build_world(grids, roads, args.drivers_per_grid, seeding.rng_for(args.seed, seeding.WORLD))
    transcript, truth = simulate_session(world, 0, args.sr, args.protocol, seeding.derive_seed(args.seed, seeding.RIDER))
    text = transcript.dumps()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.truth:
        rows = [{"driver_id": i, "true": list(p),
                 "e_true": truth.secrets[i].e if i in truth.secrets else None,
                 "r_true": truth.secrets[i].r if i in truth.secrets else None}
                for i, p in truth.locations.items()]
        Path(args.truth).write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in rows))
    return 0


def cmd_attack(args) -> int:
    grids, roads = _load_map(args)
    transcript = SessionTranscript.load(args.transcript)
    outcomes = harvest_session(transcript, grids, GridFactorTable.from_grid_map(grids), roads, args.mode)
    text = dumps_outcomes(outcomes)
    if args.truth:
        truth = {}
        for line in Path(args.truth).read_text().splitlines():
            if line.strip():
                row = json.loads(line)
                truth[row.pop("driver_id")] = row
        rows = [json.loads(line) for line in text.splitlines()]
        for row in rows:
            row.update(truth.get(row["driver_id"], {}))
        text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    n_ok = sum(o.status == "recovered" for o in outcomes)
    print(f"recovered {n_ok}/{len(outcomes)} drivers", file=sys.stderr)
    return 0


def cmd_bench(args) -> int:
    cfg = {}
    if args.config:
        cfg.update(json.loads(Path(args.config).read_text()))
    overrides = {
        "cities": args.city and _csv_strs(args.city),
        "drivers_per_grid": args.drivers_per_grid and _csv_ints(args.drivers_per_grid),
        "runs": args.runs, "seed": args.seed, "mode": args.mode, "workers": args.workers,
        "city_seed": args.city_seed, "road_file": args.roads, "grid_file": args.grid,
    }
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    report = run_experiment(ExperimentConfig.from_dict(cfg))
    text = emit_report(report, args.format, args.out, include_timing=args.timing)
    if not args.out:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pride-harvest", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def city_args(sp, default="nyc"):
        sp.add_argument("--city", default=default, choices=sorted(CITY_PRESETS))
        sp.add_argument("--city-seed", type=int, default=0, help="road jitter seed")
        sp.add_argument("--roads", help="segment file (overrides --city)")
        sp.add_argument("--grid", help="grid map JSON (with --roads)")

    g = sub.add_parser("gen-city", help="write a preset's grid map and road file")
    g.add_argument("--city", default="nyc", choices=sorted(CITY_PRESETS))
    g.add_argument("--city-seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_gen_city)

    s = sub.add_parser("simulate", help="run one ride request and emit the rider's transcript")
    city_args(s)
    s.add_argument("--drivers-per-grid", type=int, default=5)
    s.add_argument("--sr", type=int, default=1)
    s.add_argument("--protocol", default=ENHANCED, choices=(BASIC, ENHANCED))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.add_argument("--truth", help="also write ground truth (driver locations, e, r)")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("attack", help="harvest driver locations from a transcript")
    city_args(a)
    a.add_argument("--transcript", required=True)
    a.add_argument("--mode", default=PAPER_FAITHFUL, choices=MODES)
    a.add_argument("--truth", help="ground-truth file from simulate, merged into the output")
    a.add_argument("--out")
    a.set_defaults(func=cmd_attack)

    b = sub.add_parser("bench", help="full recovery matrix")
    b.add_argument("--config", help="JSON key-value config; flags override it")
    b.add_argument("--city", help="comma-separated presets")
    b.add_argument("--city-seed", type=int)
    b.add_argument("--roads")
    b.add_argument("--grid")
    b.add_argument("--drivers-per-grid", help="comma-separated counts")
    b.add_argument("--runs", type=int)
    b.add_argument("--seed", type=int)
    b.add_argument("--mode", choices=MODES)
    b.add_argument("--workers", type=int)
    b.add_argument("--format", default="table", choices=("table", "delimited", "structured"))
    b.add_argument("--timing", action="store_true", help="include wall-clock attack time")
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
