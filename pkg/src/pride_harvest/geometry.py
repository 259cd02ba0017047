"""Exact integer geometry on UTM-encoded planar coordinates.

Everything here works on Python ints: squared distances, rectangular grid
cells, the published grid map, and recovery of the points that are
consistent with an unordered set of four corner distances.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

MAX_NORTHING = 10**7

CORNERS = ("ll", "lu", "rl", "ru")
CORNER_PAIRS = tuple(itertools.combinations(CORNERS, 2))


@dataclass(frozen=True, slots=True, order=True)
class UtmPoint:
    easting: int
    northing: int

    def __post_init__(self):
        if not (isinstance(self.easting, int) and isinstance(self.northing, int)):
            raise TypeError(f"UTM coordinates must be integers, got {self.easting!r}, {self.northing!r}")
        if not 0 <= self.northing < MAX_NORTHING:
            raise ValueError(f"northing {self.northing} outside [0, {MAX_NORTHING})")

    def __iter__(self) -> Iterator[int]:
        yield self.easting
        yield self.northing

    def __repr__(self) -> str:
        return f"UtmPoint({self.easting}, {self.northing})"


def as_point(p) -> UtmPoint:
    """Coerce an ``(easting, northing)`` pair to a :class:`UtmPoint`."""
    if isinstance(p, UtmPoint):
        return p
    e, n = p
    return UtmPoint(int(e), int(n))


class CornerDistances(NamedTuple):
    """Squared distances from a point to the four corners of its cell."""

    ll: int
    lu: int
    rl: int
    ru: int


@dataclass(frozen=True, slots=True)
class GridRect:
    """Axis-aligned rectangular cell.

    Corners are named by (left/right, lower/upper): ``ll`` is the
    south-west corner, ``lu`` the north-west, ``rl`` the south-east and
    ``ru`` the north-east.
    """

    grid_id: int
    ll: UtmPoint
    lu: UtmPoint
    rl: UtmPoint
    ru: UtmPoint

    def __post_init__(self):
        if not (self.ll.easting == self.lu.easting and self.rl.easting == self.ru.easting
                and self.ll.northing == self.rl.northing and self.lu.northing == self.ru.northing):
            raise ValueError("grid corners are not axis-aligned")
        if not (self.ll.easting < self.rl.easting and self.ll.northing < self.lu.northing):
            raise ValueError("degenerate grid rectangle")

    @classmethod
    def from_bounds(cls, grid_id: int, x0: int, y0: int, x1: int, y1: int) -> GridRect:
        return cls(grid_id, UtmPoint(x0, y0), UtmPoint(x0, y1), UtmPoint(x1, y0), UtmPoint(x1, y1))

    @property
    def bounds(self) -> tuple[int, int, int, int]:
        return self.ll.easting, self.ll.northing, self.ru.easting, self.ru.northing

    @property
    def width(self) -> int:
        return self.rl.easting - self.ll.easting

    @property
    def height(self) -> int:
        return self.lu.northing - self.ll.northing

    @property
    def diagonal_sq(self) -> int:
        """Squared length of the cell diagonal."""
        return self.width**2 + self.height**2

    @property
    def is_square(self) -> bool:
        return self.width == self.height

    def corner(self, name: str) -> UtmPoint:
        return getattr(self, name)

    def corners(self) -> tuple[UtmPoint, UtmPoint, UtmPoint, UtmPoint]:
        return self.ll, self.lu, self.rl, self.ru

    def contains(self, p: UtmPoint) -> bool:
        """Closed containment (points on the border belong to the cell)."""
        x0, y0, x1, y1 = self.bounds
        return x0 <= p.easting <= x1 and y0 <= p.northing <= y1


def squared_distance(p: UtmPoint, q: UtmPoint) -> int:
    de = p.easting - q.easting
    dn = p.northing - q.northing
    return de * de + dn * dn


def corner_distances(p: UtmPoint, g: GridRect) -> CornerDistances:
    if not g.contains(p):
        raise ValueError(f"{p} lies outside grid {g.grid_id} {g.bounds}")
    return CornerDistances(*(squared_distance(p, c) for c in g.corners()))


def max_corner_distance(p: UtmPoint, g: GridRect) -> int:
    """Squared distance from ``p`` to the farthest corner of ``g``."""
    return max(corner_distances(p, g))


def _solve_axis(d_a: int, d_b: int, c_a: int, c_b: int) -> int | None:
    # D_a - D_b = (c_a - c_b)(c_a + c_b - 2t)  ->  t, or None if not integral
    q, rem = divmod(d_a - d_b, c_a - c_b)
    if rem:
        return None
    two_t = c_a + c_b - q
    if two_t % 2:
        return None
    return two_t // 2


def candidate_points(g: GridRect, ds: Iterable[int]) -> frozenset[UtmPoint]:
    """Integer points of ``g`` whose corner distances equal ``ds`` as a multiset.

    Every assignment of the four values to the corners that satisfies the
    opposite-corner sum identity is linearised into one easting and one
    northing, which are then checked exactly. An empty result means ``ds``
    is inconsistent with the cell.
    """
    ds = tuple(int(d) for d in ds)
    if len(ds) != 4:
        raise ValueError("need exactly four corner distances")
    if min(ds) < 0:
        return frozenset()
    x0, y0, x1, y1 = g.bounds
    found = set()
    for d_ll, d_lu, d_rl, d_ru in set(itertools.permutations(ds)):
        if d_ll + d_ru != d_lu + d_rl:
            continue
        y = _solve_axis(d_ll, d_lu, y0, y1)
        x = _solve_axis(d_ll, d_rl, x0, x1)
        if x is None or y is None or not (x0 <= x <= x1 and y0 <= y <= y1):
            continue
        p = UtmPoint(x, y)
        if corner_distances(p, g) == (d_ll, d_lu, d_rl, d_ru):
            found.add(p)
    return frozenset(found)


def brute_force_candidates(g: GridRect, ds: Iterable[int]) -> frozenset[UtmPoint]:
    """Reference answer for :func:`candidate_points` by trying every integer point."""
    target = sorted(int(d) for d in ds)
    x0, y0, x1, y1 = g.bounds
    out = set()
    for x in range(x0, x1 + 1):
        for y in range(y0, y1 + 1):
            p = UtmPoint(x, y)
            if sorted(corner_distances(p, g)) == target:
                out.add(p)
    return frozenset(out)


@dataclass(frozen=True)
class GridMap:
    """Regular tiling of the operation area published by the service provider.

    Cell ids are ``row * cols + col`` with row 0 at the southern edge.
    """

    origin: UtmPoint
    cell_width: int
    cell_height: int
    rows: int
    cols: int

    def __post_init__(self):
        if min(self.cell_width, self.cell_height, self.rows, self.cols) <= 0:
            raise ValueError("grid map dimensions must be positive")
        top = self.origin.northing + self.rows * self.cell_height
        if top >= MAX_NORTHING:
            raise ValueError("grid map extends past the northing bound")

    def __len__(self) -> int:
        return self.rows * self.cols

    def __iter__(self) -> Iterator[GridRect]:
        return (self.cell(i) for i in range(len(self)))

    @property
    def bounds(self) -> tuple[int, int, int, int]:
        x0, y0 = self.origin
        return x0, y0, x0 + self.cols * self.cell_width, y0 + self.rows * self.cell_height

    def row_col(self, grid_id: int) -> tuple[int, int]:
        if not 0 <= grid_id < len(self):
            raise KeyError(grid_id)
        return divmod(grid_id, self.cols)

    def cell(self, grid_id: int) -> GridRect:
        row, col = self.row_col(grid_id)
        x0 = self.origin.easting + col * self.cell_width
        y0 = self.origin.northing + row * self.cell_height
        return GridRect.from_bounds(grid_id, x0, y0, x0 + self.cell_width, y0 + self.cell_height)

    def __getitem__(self, grid_id: int) -> GridRect:
        return self.cell(grid_id)

    def locate(self, p: UtmPoint) -> int:
        """Id of the cell owning ``p``; cells are half-open except on the outer edge."""
        x0, y0, x1, y1 = self.bounds
        if not (x0 <= p.easting <= x1 and y0 <= p.northing <= y1):
            raise ValueError(f"{p} is outside the operation area")
        col = min((p.easting - x0) // self.cell_width, self.cols - 1)
        row = min((p.northing - y0) // self.cell_height, self.rows - 1)
        return row * self.cols + col

    def is_interior(self, grid_id: int) -> bool:
        row, col = self.row_col(grid_id)
        return 0 < row < self.rows - 1 and 0 < col < self.cols - 1

    def neighbors(self, grid_id: int) -> list[int]:
        """Existing 4-neighbours in the order N, E, S, W."""
        row, col = self.row_col(grid_id)
        out = []
        for dr, dc in ((1, 0), (0, 1), (-1, 0), (0, -1)):
            r, c = row + dr, col + dc
            if 0 <= r < self.rows and 0 <= c < self.cols:
                out.append(r * self.cols + c)
        return out

    def search_order(self, grid_id: int, radius: int = 1) -> list[int]:
        """Cells within Manhattan distance ``radius``, own cell excluded.

        Rings are visited nearest first; within a ring cells go clockwise
        starting from due north, so ``radius=1`` equals :meth:`neighbors`.
        """
        if radius < 1:
            raise ValueError("search radius must be >= 1")
        row, col = self.row_col(grid_id)
        out = []
        for k in range(1, radius + 1):
            # clockwise walk N -> E -> S -> W around the diamond of radius k
            ring = []
            for i in range(k):
                ring.append((k - i, i))
            for i in range(k):
                ring.append((-i, k - i))
            for i in range(k):
                ring.append((-(k - i), -i))
            for i in range(k):
                ring.append((i, -(k - i)))
            for dr, dc in ring:
                r, c = row + dr, col + dc
                if 0 <= r < self.rows and 0 <= c < self.cols:
                    out.append(r * self.cols + c)
        return out

    def to_dict(self) -> dict:
        return {
            "origin": [self.origin.easting, self.origin.northing],
            "cell_width": self.cell_width,
            "cell_height": self.cell_height,
            "rows": self.rows,
            "cols": self.cols,
        }

    @classmethod
    def from_dict(cls, d: dict) -> GridMap:
        return cls(as_point(d["origin"]), int(d["cell_width"]), int(d["cell_height"]),
                   int(d["rows"]), int(d["cols"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> GridMap:
        return cls.from_dict(json.loads(Path(path).read_text()))
