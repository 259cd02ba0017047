"""Seeded recovery experiments over synthetic cities and driver densities.

One run builds a world (rider in a random interior cell, drivers on roads
in every cell), executes an enhanced session, harvests the transcript and
scores each outcome against ground truth. Runs are grouped into cells of
(city, drivers per grid) and folded in run order, so results never depend
on scheduling.

Seed paths: run ``j`` of density ``k`` in city number ``c`` uses
``(seed, c, k, j, stream)``; inside a session the blinding for driver
``i`` is drawn from ``(session_seed, BLIND, i)``.
"""
from __future__ import annotations

import csv
import io
import json
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import seeding
from .attack import (DIVISOR_SEARCH, FAILURE_E_MULTIPLE, FAILURE_R_NEGATIVE, MODES, PAPER_FAITHFUL, RECOVERED,
                     STATUSES, GridFactorTable, harvest_session, pairwise_diffs, recover_e)
from .geometry import GridMap, UtmPoint
from .protocol import BLINDING_RANGE, ENHANCED, BlindingSecret, World, simulate_session
from .roads import CITY_PRESETS, RoadNetwork, load_roads, preset_city, sample_on_road

DEFAULT_DENSITIES = (5, 15, 25)


@dataclass(frozen=True)
class ExperimentConfig:
    cities: tuple[str, ...] = tuple(CITY_PRESETS)
    drivers_per_grid: tuple[int, ...] = DEFAULT_DENSITIES
    runs: int = 10
    sr: int = 1
    blinding_range: tuple[int, int] = BLINDING_RANGE
    mode: str = PAPER_FAITHFUL
    seed: int = 0
    city_seed: int = 0
    road_file: str | None = None
    grid_file: str | None = None
    boundary_rider: bool = False
    forced_secret: tuple[int, int] | None = None  # test hook: fixed (e, r)
    use_comparand: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.runs < 1 or self.sr < 1 or not self.drivers_per_grid or min(self.drivers_per_grid) < 1:
            raise ValueError("runs, sr and driver counts must be positive")
        lo, hi = self.blinding_range
        if not 1 <= lo <= hi or hi >= 2**26:
            # hi * (max squared distance ~ 2^27) must stay far below the plaintext bound
            raise ValueError(f"blinding range {self.blinding_range} outside [1, 2^26)")
        if self.road_file is not None:
            if self.grid_file is None:
                raise ValueError("road_file needs a grid_file")
            object.__setattr__(self, "cities", ("custom",))
        else:
            unknown = set(self.cities) - set(CITY_PRESETS)
            if unknown:
                raise ValueError(f"unknown city presets {sorted(unknown)}")
        if self.forced_secret is not None:
            e, r = self.forced_secret
            if e < 1 or r < 0:
                raise ValueError("forced secret needs e >= 1 and r >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        d = dict(d)
        for k in ("cities", "drivers_per_grid", "blinding_range", "forced_secret"):
            if d.get(k) is not None:
                d[k] = tuple(d[k])
        return cls(**d)

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class CellResult:
    city: str
    drivers_per_grid: int
    runs: int = 0
    total: int = 0
    recovered: int = 0
    distance_recovered: int = 0
    wrong_location: int = 0
    corner_only_e: int = 0
    honesty_violations: int = 0
    incomplete_candidates: int = 0
    statuses: dict[str, int] = field(default_factory=lambda: dict.fromkeys(STATUSES, 0))
    seconds: list[float] = field(default_factory=list, compare=False, repr=False)
    failure_rows: list[dict] = field(default_factory=list, compare=False, repr=False)

    @property
    def pct_recovered(self) -> float:
        return 100.0 * self.recovered / self.total if self.total else 0.0

    @property
    def distance_rate(self) -> float:
        return self.distance_recovered / self.total if self.total else 0.0

    @property
    def conditional_location_rate(self) -> float:
        return self.recovered / self.distance_recovered if self.distance_recovered else 0.0

    @property
    def corner_only_rate(self) -> float:
        return self.corner_only_e / self.total if self.total else 0.0

    @property
    def failures(self) -> int:
        return self.total - self.statuses[RECOVERED]

    @property
    def max_seconds(self) -> float:
        return max(self.seconds, default=0.0)

    def add(self, run: RunResult) -> None:
        self.runs += 1
        self.total += run.total
        self.recovered += run.recovered
        self.distance_recovered += run.distance_recovered
        self.wrong_location += run.wrong_location
        self.corner_only_e += run.corner_only_e
        self.honesty_violations += run.honesty_violations
        self.incomplete_candidates += run.incomplete_candidates
        for k, v in run.statuses.items():
            self.statuses[k] += v
        self.seconds.append(run.seconds)


@dataclass
class RunResult:
    total: int
    recovered: int
    distance_recovered: int
    wrong_location: int
    corner_only_e: int
    honesty_violations: int
    incomplete_candidates: int
    statuses: dict[str, int]
    seconds: float
    drivers: int
    failures: list[dict] = field(default_factory=list)


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    cells: list[CellResult]

    def cell(self, city: str, drivers_per_grid: int) -> CellResult:
        for c in self.cells:
            if c.city == city and c.drivers_per_grid == drivers_per_grid:
                return c
        raise KeyError((city, drivers_per_grid))

    def totals(self) -> CellResult:
        tot = CellResult("all", 0)
        for c in self.cells:
            tot.runs += c.runs
            tot.total += c.total
            tot.recovered += c.recovered
            tot.distance_recovered += c.distance_recovered
            tot.wrong_location += c.wrong_location
            tot.corner_only_e += c.corner_only_e
            tot.honesty_violations += c.honesty_violations
            tot.incomplete_candidates += c.incomplete_candidates
            for k, v in c.statuses.items():
                tot.statuses[k] += v
            tot.seconds.extend(c.seconds)
        return tot


def load_city(cfg: ExperimentConfig, city: str) -> tuple[GridMap, RoadNetwork]:
    if city == "custom":
        return GridMap.load(cfg.grid_file), load_roads(cfg.road_file)
    return preset_city(city, cfg.city_seed)


def build_world(grids: GridMap, roads: RoadNetwork, drivers_per_grid: int, rng: np.random.Generator,
                boundary_rider: bool = False) -> World:
    """Rider uniform in a random (interior) cell; ``drivers_per_grid`` on-road drivers in every cell."""
    pool = [g for g in range(len(grids)) if boundary_rider or grids.is_interior(g)]
    if not pool:
        raise ValueError("grid map has no interior cell for the rider")
    rider_cell = grids.cell(int(rng.choice(pool)))
    x0, y0, x1, y1 = rider_cell.bounds
    rider = UtmPoint(int(rng.integers(x0, x1)), int(rng.integers(y0, y1)))
    drivers = []
    for g in grids:
        for _ in range(drivers_per_grid):
            # a point on a shared border is reported from the cell that owns it
            drivers.append(sample_on_road(g, roads, rng))
    return World.build(grids, drivers, [rider])


def run_once(cfg: ExperimentConfig, city_index: int, drivers_per_grid: int, run: int,
             city: tuple[GridMap, RoadNetwork] | None = None) -> RunResult:
    name = cfg.cities[city_index]
    grids, roads = city if city is not None else load_city(cfg, name)
    factors = GridFactorTable.from_grid_map(grids)
    path = (city_index, drivers_per_grid, run)
    world = build_world(grids, roads, drivers_per_grid, seeding.rng_for(cfg.seed, *path, seeding.WORLD),
                        cfg.boundary_rider)
    forced = BlindingSecret(*cfg.forced_secret) if cfg.forced_secret else None
    transcript, truth = simulate_session(world, 0, cfg.sr, ENHANCED, seeding.derive_seed(cfg.seed, *path, seeding.RIDER),
                                         forced_secret=forced, blinding_range=cfg.blinding_range)
    t0 = time.perf_counter()
    outcomes = harvest_session(transcript, grids, factors, roads, cfg.mode, use_comparand=cfg.use_comparand)
    seconds = time.perf_counter() - t0

    adjacent = [grids.cell(g) for g in grids.search_order(transcript.rider_grid_id, cfg.sr)]
    recs = {r.driver_id: r for r in transcript.records}
    stats = Counter()
    statuses = dict.fromkeys(STATUSES, 0)
    failures = []
    for o in outcomes:
        sec = truth.secrets[o.driver_id]
        rec = recs[o.driver_id]
        true_loc = truth.locations[o.driver_id]
        statuses[o.status] += 1
        stats["total"] += 1
        if o.e == sec.e and o.r == sec.r:
            stats["distance"] += 1
            stats["incomplete"] += true_loc not in o.candidates
        if o.status == RECOVERED:
            stats["recovered" if o.location == true_loc else "wrong"] += 1
        try:
            e_corner = recover_e(pairwise_diffs(rec.v_corners), adjacent, factors, PAPER_FAITHFUL)
        except ValueError:
            e_corner = None
        stats["corner_only"] += e_corner == sec.e
        honest = True
        if o.status == FAILURE_E_MULTIPLE and o.e is not None:
            honest = o.e != sec.e and o.e % sec.e == 0
        elif o.status == FAILURE_R_NEGATIVE:
            honest = rec.v_prime - o.e * rec.d_prime < 0
        stats["dishonest"] += not honest
        if o.status != RECOVERED:
            failures.append({"driver_id": o.driver_id, "status": o.status, "e": o.e, "e_true": sec.e,
                             "r": o.r, "r_true": sec.r, "v_prime": rec.v_prime, "d_prime": rec.d_prime,
                             "true": list(true_loc)})
    return RunResult(stats["total"], stats["recovered"], stats["distance"], stats["wrong"], stats["corner_only"],
                     stats["dishonest"], stats["incomplete"], statuses, seconds, len(world.drivers), failures)


def _run_task(args):
    cfg, ci, k, j = args
    return run_once(cfg, ci, k, j)


def run_experiment(cfg: ExperimentConfig, keep_failures: bool = False) -> ExperimentReport:
    """All (city, density, run) trials of ``cfg``, aggregated per (city, density)."""
    tasks = [(cfg, ci, k, j) for ci in range(len(cfg.cities)) for k in cfg.drivers_per_grid for j in range(cfg.runs)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * cfg.workers))))
    else:
        cities = {}
        results = []
        for cfg_, ci, k, j in tasks:
            if ci not in cities:
                cities[ci] = load_city(cfg, cfg.cities[ci])
            results.append(run_once(cfg_, ci, k, j, cities[ci]))
    cells: dict[tuple[int, int], CellResult] = {}
    for (_, ci, k, _), res in zip(tasks, results):
        cell = cells.setdefault((ci, k), CellResult(cfg.cities[ci], k))
        cell.add(res)
        if keep_failures:
            cell.failure_rows.extend(res.failures)
    return ExperimentReport(cfg, list(cells.values()))


def city_label(key: str) -> str:
    return CITY_PRESETS[key].name if key in CITY_PRESETS else key


def _cell_row(c: CellResult, include_timing: bool) -> dict:
    row = {
        "city": c.city,
        "drivers_per_grid": c.drivers_per_grid,
        "runs": c.runs,
        "drivers": c.total,
        "recovered": c.recovered,
        "pct_recovered": round(c.pct_recovered, 2),
        "distance_recovered": c.distance_recovered,
        "distance_rate": round(c.distance_rate, 4),
        "conditional_location_rate": round(c.conditional_location_rate, 4),
        "corner_only_e_rate": round(c.corner_only_rate, 4),
        "wrong_location": c.wrong_location,
        "honesty_violations": c.honesty_violations,
        "incomplete_candidates": c.incomplete_candidates,
        **{k: v for k, v in c.statuses.items()},
    }
    if include_timing:
        row["max_attack_seconds"] = round(c.max_seconds, 4)
    return row


def format_table(report: ExperimentReport) -> str:
    lines = [f"{'City':<16}{'Drivers per grid':>18}{'% recovered':>14}", "-" * 48]
    prev = None
    for c in report.cells:
        label = city_label(c.city) if c.city != prev else ""
        prev = c.city
        lines.append(f"{label:<16}{c.drivers_per_grid:>18}{c.pct_recovered:>14.1f}")
    return "\n".join(lines) + "\n"


def emit_report(report: ExperimentReport, fmt: str = "table", path=None, include_timing: bool = False) -> str:
    """Render ``report`` as ``table``, ``delimited`` (CSV) or ``structured`` (JSON); write to ``path`` if given."""
    if fmt == "table":
        text = format_table(report)
    elif fmt == "delimited":
        rows = [_cell_row(c, include_timing) for c in report.cells]
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else ["city"], lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
    elif fmt == "structured":
        cfg = asdict(report.config)
        cfg.pop("workers")
        doc = {
            "config": cfg,
            "cells": [_cell_row(c, include_timing) for c in report.cells],
            "totals": _cell_row(report.totals(), include_timing),
        }
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


__all__ = ["ExperimentConfig", "ExperimentReport", "CellResult", "RunResult", "run_experiment", "run_once",
           "build_world", "emit_report", "format_table", "DIVISOR_SEARCH", "PAPER_FAITHFUL"]
