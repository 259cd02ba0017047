"""Local road network: nearest-road queries, on-road sampling, synthetic cities.

Stands in for an online nearest-road service. Segments are stored as
integer UTM endpoints and indexed by a uniform bucket grid; queries expand
bucket rings until the exact minimum is certain.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .geometry import GridMap, GridRect, UtmPoint, as_point

ON_ROAD_TOLERANCE = 0.5


class RoadFileError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class RoadSegment:
    a: UtmPoint
    b: UtmPoint

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError(f"zero-length road segment at {self.a}")

    @property
    def length(self) -> float:
        return math.hypot(self.b.easting - self.a.easting, self.b.northing - self.a.northing)


def point_segment_distances(px: float, py: float, seg: np.ndarray) -> np.ndarray:
    """Euclidean distances from ``(px, py)`` to each row ``[ax, ay, bx, by]`` of ``seg``."""
    ax, ay, bx, by = seg[:, 0], seg[:, 1], seg[:, 2], seg[:, 3]
    dx, dy = bx - ax, by - ay
    t = ((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy)
    np.clip(t, 0.0, 1.0, out=t)
    return np.hypot(ax + t * dx - px, ay + t * dy - py)


def _clip_to_rect(seg, x0, y0, x1, y1):
    """Liang-Barsky clip; returns the parameter interval inside the rectangle or None."""
    ax, ay, bx, by = seg
    dx, dy = bx - ax, by - ay
    t0, t1 = 0.0, 1.0
    for p, q in ((-dx, ax - x0), (dx, x1 - ax), (-dy, ay - y0), (dy, y1 - ay)):
        if p == 0:
            if q < 0:
                return None
            continue
        t = q / p
        if p < 0:
            t0 = max(t0, t)
        else:
            t1 = min(t1, t)
        if t0 > t1:
            return None
    return (t0, t1) if t1 > t0 else None


class RoadNetwork:
    """Immutable collection of road segments with an exact nearest-road query."""

    def __init__(self, segments: Iterable[RoadSegment] = (), bucket_size: int = 250):
        self.segments: tuple[RoadSegment, ...] = tuple(segments)
        self.bucket_size = bucket_size
        self._arr = np.array([[s.a.easting, s.a.northing, s.b.easting, s.b.northing]
                              for s in self.segments], dtype=float).reshape(-1, 4)
        buckets = defaultdict(list)
        for i, (ax, ay, bx, by) in enumerate(self._arr):
            # register in every bucket the segment's bounding box touches
            i0, i1 = sorted((int(ax // bucket_size), int(bx // bucket_size)))
            j0, j1 = sorted((int(ay // bucket_size), int(by // bucket_size)))
            for bi in range(i0, i1 + 1):
                for bj in range(j0, j1 + 1):
                    buckets[bi, bj].append(i)
        self._buckets = {k: np.array(v, dtype=np.intp) for k, v in buckets.items()}
        self._pieces: dict[tuple[int, int, int, int], list] = {}
        if self._buckets:
            keys = np.array(list(self._buckets))
            self._bucket_lo = keys.min(axis=0)
            self._bucket_hi = keys.max(axis=0)

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    def _require_nonempty(self):
        if not self.segments:
            raise ValueError("road network is empty")

    def nearest(self, p) -> tuple[float, int]:
        """``(distance, segment index)`` of the closest segment to ``p``."""
        self._require_nonempty()
        px, py = (float(c) for c in as_point(p))
        bi, bj = int(px // self.bucket_size), int(py // self.bucket_size)
        # rings beyond this cover every bucket
        k_max = int(max(abs(bi - self._bucket_lo[0]), abs(bi - self._bucket_hi[0]),
                        abs(bj - self._bucket_lo[1]), abs(bj - self._bucket_hi[1])))
        best, best_i = math.inf, -1
        seen: set[int] = set()
        for k in range(k_max + 1):
            ids = []
            for di in range(-k, k + 1):
                for dj in (range(-k, k + 1) if abs(di) == k else (-k, k)):
                    b = self._buckets.get((bi + di, bj + dj))
                    if b is not None:
                        ids.append(b)
            if ids:
                cand = np.unique(np.concatenate(ids))
                cand = cand[[c not in seen for c in cand]] if seen else cand
                if cand.size:
                    seen.update(cand.tolist())
                    d = point_segment_distances(px, py, self._arr[cand])
                    j = int(np.argmin(d))
                    if d[j] < best:
                        best, best_i = float(d[j]), int(cand[j])
            # anything unvisited lies at least k buckets away
            if best <= k * self.bucket_size:
                break
        return best, best_i

    def nearest_road_distance(self, p) -> float:
        return self.nearest(p)[0]

    def brute_force_distance(self, p) -> float:
        self._require_nonempty()
        px, py = (float(c) for c in as_point(p))
        return float(point_segment_distances(px, py, self._arr).min())

    def segments_near(self, x0, y0, x1, y1) -> np.ndarray:
        """Indices of segments registered in buckets overlapping the box."""
        s = self.bucket_size
        ids = [b for (bi, bj), b in self._buckets.items()
               if x0 // s <= bi <= x1 // s and y0 // s <= bj <= y1 // s]
        return np.unique(np.concatenate(ids)) if ids else np.array([], dtype=np.intp)

    def clipped_pieces(self, grid: GridRect) -> list[tuple[int, float, float, float]]:
        """``(segment index, t0, t1, clipped length)`` for every segment crossing ``grid``."""
        cached = self._pieces.get(grid.bounds)
        if cached is not None:
            return cached
        x0, y0, x1, y1 = grid.bounds
        out = []
        for i in self.segments_near(x0, y0, x1, y1):
            span = _clip_to_rect(self._arr[i], x0, y0, x1, y1)
            if span is None:
                continue
            t0, t1 = span
            ax, ay, bx, by = self._arr[i]
            out.append((int(i), t0, t1, (t1 - t0) * math.hypot(bx - ax, by - ay)))
        self._pieces[grid.bounds] = out
        return out

    def save(self, path) -> None:
        lines = ["# ax an bx bn"]
        lines += [f"{s.a.easting} {s.a.northing} {s.b.easting} {s.b.northing}" for s in self.segments]
        Path(path).write_text("\n".join(lines) + "\n")


def nearest_road_distance(p, net: RoadNetwork) -> float:
    return net.nearest_road_distance(p)


def load_roads(path) -> RoadNetwork:
    segments = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise RoadFileError(f"{path}:{lineno}: expected 4 integers, got {len(parts)} fields")
        try:
            ax, an, bx, bn = (int(x) for x in parts)
            segments.append(RoadSegment(UtmPoint(ax, an), UtmPoint(bx, bn)))
        except (TypeError, ValueError) as exc:
            raise RoadFileError(f"{path}:{lineno}: {exc}") from exc
    return RoadNetwork(segments)


def sample_on_road(grid: GridRect, net: RoadNetwork, rng: np.random.Generator,
                   max_tries: int = 1000) -> UtmPoint:
    """Integer point of ``grid`` within half a metre of a road.

    The continuous position is drawn uniformly over the road length clipped
    to the cell and then rounded to the integer lattice; draws whose rounded
    point leaves the cell or the road tolerance are redrawn.
    """
    pieces = net.clipped_pieces(grid)
    if not pieces:
        raise ValueError(f"no road crosses grid {grid.grid_id}")
    lengths = np.array([p[3] for p in pieces])
    probs = lengths / lengths.sum()
    for _ in range(max_tries):
        i, t0, t1, _ = pieces[int(rng.choice(len(pieces), p=probs))]
        t = t0 + (t1 - t0) * rng.random()
        ax, ay, bx, by = net._arr[i]
        x, y = round(ax + t * (bx - ax)), round(ay + t * (by - ay))
        p = UtmPoint(int(x), int(y))
        if not grid.contains(p):
            continue
        if point_segment_distances(x, y, net._arr[i:i + 1])[0] < ON_ROAD_TOLERANCE:
            return p
    raise RuntimeError(f"could not place an on-road point in grid {grid.grid_id}")


@dataclass(frozen=True)
class CityPreset:
    """Lattice parameters for one synthetic city."""

    name: str
    cell_width: int
    cell_height: int
    road_spacing: int
    spacing_jitter: float  # fraction of road_spacing
    tilt_deg: float  # max rotation of each road line
    wobble: int  # max lateral vertex displacement (m)
    diagonals: int  # long avenues cutting across the lattice
    rows: int = 8
    cols: int = 8


# Cell sides are close to 2 km (about 4 km^2 per cell) but never square.
# The side lengths set which small primes every corner difference shares,
# and so how often the blinding GCD collapses to e (see README).
CITY_PRESETS: dict[str, CityPreset] = {
    "la": CityPreset("Los Angeles", 2001, 1999, road_spacing=320, spacing_jitter=0.2,
                     tilt_deg=1.0, wobble=10, diagonals=1),
    "london": CityPreset("London", 1997, 2001, road_spacing=180, spacing_jitter=0.45,
                         tilt_deg=8.0, wobble=30, diagonals=2),
    "nyc": CityPreset("New York City", 1999, 2003, road_spacing=160, spacing_jitter=0.1,
                      tilt_deg=1.0, wobble=5, diagonals=1),
    "paris": CityPreset("Paris", 2005, 2009, road_spacing=220, spacing_jitter=0.35,
                        tilt_deg=6.0, wobble=20, diagonals=4),
}


def _lattice_lines(rng, start, stop, spacing, jitter):
    pos = start + rng.uniform(0.1, 0.9) * spacing
    out = []
    while pos < stop:
        out.append(pos)
        pos += spacing * (1.0 + rng.uniform(-jitter, jitter))
    return out


def _polyline(points) -> list[RoadSegment]:
    segs = []
    pts = [UtmPoint(int(round(x)), int(round(y))) for x, y in points]
    for a, b in zip(pts, pts[1:]):
        if a != b:
            segs.append(RoadSegment(a, b))
    return segs


def synth_city(rows: int, cols: int, cell_size, road_spacing: int, jitter_seed: int, *,
               spacing_jitter: float = 0.25, tilt_deg: float = 2.0, wobble: int = 15,
               diagonals: int = 0, vertex_step: int = 400,
               origin=(500000, 4400000)) -> tuple[GridMap, RoadNetwork]:
    """Manhattan-style road lattice over a ``rows x cols`` grid map.

    ``cell_size`` is one side length or a ``(width, height)`` pair. Road
    lines get jittered spacing, a small random tilt and per-vertex wobble;
    ``diagonals`` adds long avenues at random angles. The result depends
    only on the arguments.
    """
    if isinstance(cell_size, int):
        cw = ch = cell_size
    else:
        cw, ch = cell_size
    if min(rows, cols, cw, ch, road_spacing, vertex_step) <= 0:
        raise ValueError("synth_city parameters must be positive")
    gmap = GridMap(as_point(origin), cw, ch, rows, cols)
    x0, y0, x1, y1 = gmap.bounds
    rng = np.random.default_rng(jitter_seed)
    tilt = math.radians(tilt_deg)
    segments: list[RoadSegment] = []

    def clamp(x, lo, hi):
        return min(max(x, lo), hi)

    # north-south roads
    for x in _lattice_lines(rng, x0, x1, road_spacing, spacing_jitter):
        slope = math.tan(rng.uniform(-tilt, tilt))
        n = max(2, int((y1 - y0) / vertex_step) + 1)
        ys = np.linspace(y0, y1, n)
        pts = [(clamp(x + slope * (y - y0) + rng.integers(-wobble, wobble + 1), x0, x1), y) for y in ys]
        segments += _polyline(pts)
    # east-west roads
    for y in _lattice_lines(rng, y0, y1, road_spacing, spacing_jitter):
        slope = math.tan(rng.uniform(-tilt, tilt))
        n = max(2, int((x1 - x0) / vertex_step) + 1)
        xs = np.linspace(x0, x1, n)
        pts = [(x, clamp(y + slope * (x - x0) + rng.integers(-wobble, wobble + 1), y0, y1)) for x in xs]
        segments += _polyline(pts)
    for _ in range(diagonals):
        cx, cy = rng.uniform(x0, x1), rng.uniform(y0, y1)
        ang = rng.uniform(0, math.pi)
        half = math.hypot(x1 - x0, y1 - y0)
        ends = (cx - half * math.cos(ang), cy - half * math.sin(ang)), (cx + half * math.cos(ang), cy + half * math.sin(ang))
        seg = _clip_to_rect((*ends[0], *ends[1]), x0, y0, x1, y1)
        if seg is None:
            continue
        (ax, ay), (bx, by) = ends
        t0, t1 = seg
        n = max(2, int((t1 - t0) * 2 * half / vertex_step) + 1)
        ts = np.linspace(t0, t1, n)
        pts = [(clamp(ax + t * (bx - ax), x0, x1), clamp(ay + t * (by - ay), y0, y1)) for t in ts]
        segments += _polyline(pts)
    return gmap, RoadNetwork(segments)


def preset_city(name: str, jitter_seed: int = 0) -> tuple[GridMap, RoadNetwork]:
    p = CITY_PRESETS[name]
    return synth_city(p.rows, p.cols, (p.cell_width, p.cell_height), p.road_spacing, jitter_seed,
                      spacing_jitter=p.spacing_jitter, tilt_deg=p.tilt_deg, wobble=p.wobble,
                      diagonals=p.diagonals)
