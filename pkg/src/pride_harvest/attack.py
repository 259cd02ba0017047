"""Driver-location harvesting by an honest-but-curious rider.

Per responding driver the rider holds five decrypted values blinded with
one shared secret, ``V = e*D + r``. Differences cancel ``r`` and are all
multiples of ``e``; their GCD, cleaned of the factors that the published
grid geometry forces into every corner difference, yields ``e``. The known
comparand ``D'`` then gives ``r``, the four corner distances come out
exactly, and intersecting the corner circles in each candidate cell with
the rider's own distance circle pins down the driver.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from math import gcd
from typing import Callable, Iterable, Sequence

import sympy

from .geometry import CORNER_PAIRS, GridMap, GridRect, UtmPoint, candidate_points, squared_distance
from .protocol import DriverRecord, SessionTranscript, SessionTruth
from .roads import RoadNetwork

PAPER_FAITHFUL = "paper_faithful"
DIVISOR_SEARCH = "divisor_search"
MODES = (PAPER_FAITHFUL, DIVISOR_SEARCH)

RECOVERED = "recovered"
FAILURE_E_MULTIPLE = "failure_e_multiple"
FAILURE_R_NEGATIVE = "failure_r_negative"
FAILURE_NO_CANDIDATE = "failure_no_candidate"
FAILURE_AMBIGUOUS = "failure_ambiguous"
STATUSES = (RECOVERED, FAILURE_E_MULTIPLE, FAILURE_R_NEGATIVE, FAILURE_NO_CANDIDATE, FAILURE_AMBIGUOUS)

ROAD_TIE_TOLERANCE = 1.0  # metres


class RecoveryError(Exception):
    def __init__(self, status: str, message: str = ""):
        super().__init__(message or status)
        self.status = status


@dataclass(frozen=True)
class DiffSet:
    """The six pairwise differences of the four blinded corner values."""

    values: tuple[int, int, int, int, int, int]

    def __iter__(self):
        return iter(self.values)

    def gcd(self) -> int:
        return gcd(*(abs(v) for v in self.values))


def pairwise_diffs(v: Sequence[int]) -> DiffSet:
    """``v[i] - v[j]`` for ``i < j`` in received order: (0,1), (0,2), (0,3), (1,2), (1,3), (2,3)."""
    if len(v) != 4:
        raise ValueError("need four blinded corner values")
    return DiffSet(tuple(a - b for a, b in itertools.combinations(v, 2)))


def pair_factor(a: UtmPoint, b: UtmPoint) -> int:
    """Integer that divides ``D_a - D_b`` for every integer point: gcd(dx, dy) * gcd(2, sx, sy)."""
    return gcd(a.easting - b.easting, a.northing - b.northing) * gcd(2, a.easting + b.easting, a.northing + b.northing)


class GridFactorTable:
    """Per-cell corner-pair factors, computed once from the published grid."""

    def __init__(self, grids: Iterable[GridRect]):
        self.pair_factors: dict[int, dict[tuple[str, str], int]] = {}
        self._common: dict[int, int] = {}
        for g in grids:
            table = {(a, b): pair_factor(g.corner(a), g.corner(b)) for a, b in CORNER_PAIRS}
            self.pair_factors[g.grid_id] = table
            self._common[g.grid_id] = gcd(*table.values())

    @classmethod
    def from_grid_map(cls, grids: GridMap) -> GridFactorTable:
        return cls(grids)

    def common(self, grid_id: int) -> int:
        """Factor shared by all six pairs, i.e. safe to remove under any corner assignment."""
        return self._common[grid_id]

    def common_for(self, grid_ids: Iterable[int]) -> int:
        return gcd(*(self._common[g] for g in grid_ids))


def _as_grid_list(grid) -> list[GridRect]:
    return [grid] if isinstance(grid, GridRect) else list(grid)


def recover_e(diffs: DiffSet, grid: GridRect | Sequence[GridRect], factors: GridFactorTable,
              mode: str = PAPER_FAITHFUL, validator: Callable[[int], bool] | None = None,
              comparand_diffs: Sequence[int] = ()) -> int:
    """Blinding multiplier from the corner differences.

    ``comparand_diffs`` are the rider-formed ``V' - V_x`` values; each is
    ``e`` times a difference involving the known comparand, so it joins the
    GCD. ``grid`` may be several cells when the driver's cell is unknown;
    only the factor common to all of them is removed.

    ``paper_faithful`` returns the cleaned GCD, which is a stated multiple
    of ``e`` when the geometry leaves a residual common factor.
    ``divisor_search`` walks the divisors of the raw GCD from the largest
    down and returns the first one ``validator`` accepts, raising
    :class:`RecoveryError` if none does.
    """
    g_corner = diffs.gcd()
    if g_corner == 0:
        raise ValueError("all corner differences are zero")
    comp = gcd(*(abs(c) for c in comparand_diffs)) if comparand_diffs else 0
    if mode == PAPER_FAITHFUL:
        f = factors.common_for(g.grid_id for g in _as_grid_list(grid))
        e = g_corner // gcd(g_corner, f)
        return gcd(e, comp) if comparand_diffs else e
    if mode == DIVISOR_SEARCH:
        if validator is None:
            raise ValueError("divisor_search needs a validator")
        for d in reversed(sympy.divisors(gcd(g_corner, comp))):
            if validator(d):
                return d
        raise RecoveryError(FAILURE_E_MULTIPLE, "no divisor of the difference GCD validates")
    raise ValueError(f"unknown mode {mode!r}")


def recover_r(v_prime: int, e: int, d_prime: int) -> int:
    r = v_prime - e * d_prime
    if r < 0:
        raise RecoveryError(FAILURE_R_NEGATIVE, f"r = {r} < 0 for e = {e}")
    return r


def unblind(v: Sequence[int], e: int, r: int) -> tuple[int, ...]:
    """``(v_i - r) / e`` for each value; any negative or inexact quotient means ``e`` is wrong."""
    if e < 1 or r < 0:
        raise ValueError("unblind needs e >= 1 and r >= 0")
    out = []
    for x in v:
        q, rem = divmod(x - r, e)
        if rem or q < 0:
            raise RecoveryError(FAILURE_E_MULTIPLE, f"{x} does not unblind under e={e}, r={r}")
        out.append(q)
    return tuple(out)


@dataclass(frozen=True)
class RecoveryOutcome:
    status: str
    location: UtmPoint | None = None
    e: int | None = None
    r: int | None = None
    driver_id: int | None = None
    distances: tuple[int, ...] | None = None
    candidates: tuple[UtmPoint, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")
        if (self.location is not None) != (self.status == RECOVERED):
            raise ValueError("location is present exactly when the driver was recovered")


def circle_candidates(ds: Sequence[int], grids: Sequence[GridRect], rider: UtmPoint, delta: int,
                      circle_tol: int = 0) -> tuple[list[UtmPoint], list[UtmPoint]]:
    """``(all candidates, candidates on the rider circle)`` across ``grids``."""
    pts = set()
    for g in grids:
        pts |= candidate_points(g, ds)
    allc = sorted(pts)
    return allc, [p for p in allc if abs(squared_distance(rider, p) - delta) <= circle_tol]


def locate_driver(ds: Sequence[int], adjacent_grids: Sequence[GridRect], rider: UtmPoint, delta: int,
                  roads: RoadNetwork | None, tol: float = ROAD_TIE_TOLERANCE, circle_tol: int = 0) -> RecoveryOutcome:
    """Pick the driver position from unblinded corner distances.

    Candidates from every adjacent cell are filtered by the rider circle.
    Several survivors are ranked by distance to the nearest road; if the
    best two are within ``tol`` metres the result is reported ambiguous.
    """
    allc, on_circle = circle_candidates(ds, adjacent_grids, rider, delta, circle_tol)
    ds = tuple(ds)
    if not on_circle:
        return RecoveryOutcome(FAILURE_NO_CANDIDATE, distances=ds, candidates=tuple(allc))
    if len(on_circle) == 1:
        return RecoveryOutcome(RECOVERED, on_circle[0], distances=ds, candidates=tuple(allc))
    if roads is None or len(roads) == 0:
        return RecoveryOutcome(FAILURE_AMBIGUOUS, distances=ds, candidates=tuple(allc))
    ranked = sorted((roads.nearest_road_distance(p), p) for p in on_circle)
    if ranked[1][0] - ranked[0][0] < tol:
        return RecoveryOutcome(FAILURE_AMBIGUOUS, distances=ds, candidates=tuple(allc))
    return RecoveryOutcome(RECOVERED, ranked[0][1], distances=ds, candidates=tuple(allc))


def _with(outcome: RecoveryOutcome, **kw) -> RecoveryOutcome:
    return RecoveryOutcome(**{**outcome.__dict__, **kw})


def harvest_driver(rec: DriverRecord, rider: UtmPoint, adjacent_grids: Sequence[GridRect],
                   factors: GridFactorTable, roads: RoadNetwork | None, mode: str = PAPER_FAITHFUL,
                   d_prime: int | None = None, use_comparand: bool = True,
                   tol: float = ROAD_TIE_TOLERANCE) -> RecoveryOutcome:
    """Full pipeline for one driver: ``e``, ``r``, corner distances, location."""
    if not rec.has_tuple:
        raise ValueError(f"driver {rec.driver_id} has no blinded tuple")
    v = rec.v_corners
    vp = rec.v_prime
    dp = rec.d_prime if d_prime is None else d_prime
    diffs = pairwise_diffs(v)
    comp = tuple(vp - x for x in v) if use_comparand else ()
    delta = rec.distance
    fail = {"driver_id": rec.driver_id}

    def validates(d: int) -> bool:
        try:
            ds = unblind(v, d, recover_r(vp, d, dp))
        except RecoveryError:
            return False
        return bool(circle_candidates(ds, adjacent_grids, rider, delta)[1])

    try:
        e = recover_e(diffs, adjacent_grids, factors, mode, validator=validates, comparand_diffs=comp)
    except RecoveryError as exc:
        return RecoveryOutcome(exc.status, **fail)
    except ValueError:
        # driver at the exact cell centre: every corner difference is zero
        return RecoveryOutcome(FAILURE_E_MULTIPLE, **fail)
    fail["e"] = e
    try:
        r = recover_r(vp, e, dp)
        fail["r"] = r
        ds = unblind(v, e, r)
    except RecoveryError as exc:
        return RecoveryOutcome(exc.status, **fail)
    out = locate_driver(ds, adjacent_grids, rider, delta, roads, tol=tol)
    return _with(out, **fail)


def harvest_session(transcript: SessionTranscript, grids: GridMap, factors: GridFactorTable,
                    roads: RoadNetwork | None, mode: str = PAPER_FAITHFUL, use_comparand: bool = True,
                    tol: float = ROAD_TIE_TOLERANCE) -> list[RecoveryOutcome]:
    """Attack every driver in the transcript that came with a blinded tuple.

    The driver's own cell id is not used: every cell the SP searched is a
    candidate, as for an attacker who only knows the search order.
    """
    recs = [r for r in transcript.records if r.has_tuple]
    if not recs:
        return []
    adjacent = [grids.cell(g) for g in grids.search_order(transcript.rider_grid_id, transcript.search_radius)]
    d0 = min(r.distance for r in transcript.records)
    out = []
    for rec in recs:
        dp = rec.d_prime if rec.d_prime is not None else 2 * d0 - rec.distance
        out.append(harvest_driver(rec, transcript.rider, adjacent, factors, roads, mode, d_prime=dp,
                                  use_comparand=use_comparand, tol=tol))
    return out


def outcome_records(outcomes: Sequence[RecoveryOutcome], truth: SessionTruth | None = None) -> list[dict]:
    """Plain dicts for the outcome file; truth fields are filled when the harness has them."""
    rows = []
    for o in outcomes:
        row = {
            "driver_id": o.driver_id,
            "status": o.status,
            "recovered": list(o.location) if o.location is not None else None,
            "e_recovered": o.e,
            "r_recovered": o.r,
        }
        if truth is not None and o.driver_id in truth.locations:
            sec = truth.secrets.get(o.driver_id)
            row.update({
                "true": list(truth.locations[o.driver_id]),
                "e_true": sec.e if sec else None,
                "r_true": sec.r if sec else None,
            })
        rows.append(row)
    return rows


def dumps_outcomes(outcomes: Sequence[RecoveryOutcome], truth: SessionTruth | None = None) -> str:
    return "".join(json.dumps(row, sort_keys=True) + "\n" for row in outcome_records(outcomes, truth))
