"""Basic and enhanced pRide ride matching between SP, rider and drivers.

All parties are honest-but-curious: they run the protocol exactly, and the
rider's :class:`SessionTranscript` records everything she legitimately
sees. The SP-side blinding secrets and true driver positions are kept in a
separate :class:`SessionTruth` that only the experiment harness reads.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import seeding
from .geometry import GridMap, GridRect, UtmPoint, as_point, corner_distances, max_corner_distance
from .she import Ciphertext, KeyPair, PublicKey, keygen

BASIC = "basic"
ENHANCED = "enhanced"
BLINDING_RANGE = (1, 2**24)


@dataclass(frozen=True)
class RideRequest:
    rider_grid_id: int
    enc_easting: Ciphertext
    enc_northing: Ciphertext
    public_key: PublicKey
    search_radius: int = 1

    def __post_init__(self):
        if self.search_radius < 1:
            raise ValueError("search radius must be >= 1")
        if not (self.enc_easting.key_id == self.enc_northing.key_id == self.public_key.key_id):
            raise ValueError("rider coordinates are not encrypted under the request key")


@dataclass(frozen=True)
class DriverResponse:
    driver_id: int
    grid_id: int
    enc_easting: Ciphertext
    enc_northing: Ciphertext
    corner_cts: tuple[Ciphertext, ...] = ()  # enhanced mode only, shuffled


@dataclass(frozen=True)
class BlindingSecret:
    e: int
    r: int


@dataclass(frozen=True)
class BlindedTuple:
    driver_id: int
    v_prime: Ciphertext
    corners: tuple[Ciphertext, Ciphertext, Ciphertext, Ciphertext]


class PredictionStub:
    """Predicted new-request counts PR(g); zero for grids not listed."""

    def __init__(self, values: Mapping[int, int] | None = None):
        self.values = dict(values or {})
        if any(v < 0 for v in self.values.values()):
            raise ValueError("PR(g) must be non-negative")

    def __call__(self, grid_id: int) -> int:
        return self.values.get(grid_id, 0)

    @classmethod
    def random(cls, grid_ids: Iterable[int], rng: np.random.Generator, p_zero: float = 0.5,
               high: int = 5) -> PredictionStub:
        vals = {}
        for g in grid_ids:
            vals[g] = 0 if rng.random() < p_zero else int(rng.integers(1, high + 1))
        return cls(vals)


class DriverDistributionMap:
    """grid id -> ids of the available drivers reporting that grid."""

    def __init__(self):
        self._by_grid: dict[int, set[int]] = {}
        self._grid_of: dict[int, int] = {}

    def report(self, driver_id: int, grid_id: int) -> None:
        old = self._grid_of.get(driver_id)
        if old is not None:
            self._by_grid[old].discard(driver_id)
        self._grid_of[driver_id] = grid_id
        self._by_grid.setdefault(grid_id, set()).add(driver_id)

    def drivers_in(self, grid_id: int) -> set[int]:
        return set(self._by_grid.get(grid_id, ()))

    def grid_of(self, driver_id: int) -> int:
        return self._grid_of[driver_id]

    def __len__(self) -> int:
        return len(self._grid_of)


@dataclass
class Driver:
    driver_id: int
    location: UtmPoint
    grid: GridRect

    def respond(self, request: RideRequest, enhanced: bool, rng: np.random.Generator) -> DriverResponse:
        pk = request.public_key
        corner_cts: tuple[Ciphertext, ...] = ()
        if enhanced:
            ds = list(corner_distances(self.location, self.grid))
            order = rng.permutation(4)
            corner_cts = tuple(pk.encrypt(ds[k]) for k in order)
        return DriverResponse(self.driver_id, self.grid.grid_id, pk.encrypt(self.location.easting),
                              pk.encrypt(self.location.northing), corner_cts)


def sp_candidate_search(req: RideRequest, dmap: DriverDistributionMap, grids: GridMap) -> list[int]:
    """Candidate driver ids from the cells around the rider, own cell excluded."""
    out = []
    for g in grids.search_order(req.rider_grid_id, req.search_radius):
        out.extend(sorted(dmap.drivers_in(g)))
    return out


def sp_compute_distance(rider_cts: Sequence[Ciphertext], driver_cts: Sequence[Ciphertext]) -> Ciphertext:
    """Encrypted squared distance between two encrypted ``(easting, northing)`` pairs."""
    de = rider_cts[0] - driver_cts[0]
    dn = rider_cts[1] - driver_cts[1]
    return de * de + dn * dn


def sp_blind_tuple(d_prime_ct: Ciphertext, corner_cts: Sequence[Ciphertext], rng: np.random.Generator | None = None,
                   driver_id: int = -1, blinding_range=BLINDING_RANGE,
                   secret: BlindingSecret | None = None) -> tuple[BlindedTuple, BlindingSecret]:
    """Blind D' and the four corner distances with one shared ``V = e*D + r``.

    ``secret`` forces specific blinding values (tests only).
    """
    key = d_prime_ct.key_id
    if any(c.key_id != key for c in corner_cts) or len(corner_cts) != 4:
        raise ValueError("need four corner ciphertexts under the rider's key")
    if secret is None:
        lo, hi = blinding_range
        secret = BlindingSecret(int(rng.integers(lo, hi, endpoint=True)), int(rng.integers(lo, hi, endpoint=True)))
    r_ct = PublicKey(key).encrypt(secret.r)

    def blind(c):
        return c * secret.e + r_ct

    tup = BlindedTuple(driver_id, blind(d_prime_ct), tuple(blind(c) for c in corner_cts))
    return tup, secret


def rider_basic_select(distances: Sequence[tuple[int, int]], d_diag: int, pr: Mapping[int, int]) -> int:
    """First driver (by distance) passing ``2*D_0 - D_i > D_diag`` with PR = 0, else the nearest."""
    if not distances:
        raise ValueError("no distances to select from")
    ranked = sorted(distances, key=lambda t: (t[1], t[0]))
    d0 = ranked[0][1]
    for i, d in ranked:
        if 2 * d0 - d > d_diag and pr.get(i, 0) == 0:
            return i
    return ranked[0][0]


def rider_enhanced_compare(v_prime: int, v_ll: int, v_lu: int, v_rl: int, v_ru: int) -> bool:
    return v_prime > max(v_ll, v_lu, v_rl, v_ru)


@dataclass
class World:
    """Everything needed to run sessions: grids, drivers, riders, predictions."""

    grids: GridMap
    drivers: dict[int, Driver]
    riders: dict[int, UtmPoint]
    prediction: PredictionStub = field(default_factory=PredictionStub)

    @classmethod
    def build(cls, grids: GridMap, driver_locations: Mapping[int, UtmPoint] | Sequence[UtmPoint],
              riders: Mapping[int, UtmPoint] | Sequence[UtmPoint], prediction: PredictionStub | None = None) -> World:
        if not isinstance(driver_locations, Mapping):
            driver_locations = dict(enumerate(driver_locations))
        if not isinstance(riders, Mapping):
            riders = dict(enumerate(riders))
        drivers = {}
        for i, p in driver_locations.items():
            p = as_point(p)
            drivers[i] = Driver(i, p, grids.cell(grids.locate(p)))
        return cls(grids, drivers, {k: as_point(v) for k, v in riders.items()}, prediction or PredictionStub())

    def distribution_map(self) -> DriverDistributionMap:
        dmap = DriverDistributionMap()
        for d in self.drivers.values():
            dmap.report(d.driver_id, d.grid.grid_id)
        return dmap


@dataclass(frozen=True)
class DriverRecord:
    """What the rider learns about one responding driver."""

    driver_id: int
    grid_id: int
    distance: int
    pr: int
    d_prime: int | None = None
    v_prime: int | None = None
    v_corners: tuple[int, int, int, int] | None = None

    @property
    def has_tuple(self) -> bool:
        return self.v_corners is not None


@dataclass(frozen=True)
class SessionTranscript:
    rider: UtmPoint
    rider_grid_id: int
    search_radius: int
    mode: str
    status: str
    selected: int | None
    records: tuple[DriverRecord, ...] = ()

    def __len__(self) -> int:
        return len(self.records)

    def to_lines(self) -> list[str]:
        head = {"type": "session", "rider": list(self.rider), "rider_grid_id": self.rider_grid_id,
                "search_radius": self.search_radius, "mode": self.mode, "status": self.status,
                "selected": self.selected}
        lines = [json.dumps(head, sort_keys=True)]
        for rec in self.records:
            d = {"type": "driver", **asdict(rec)}
            if rec.v_corners is not None:
                d["v_corners"] = list(rec.v_corners)
            lines.append(json.dumps(d, sort_keys=True))
        return lines

    def dumps(self) -> str:
        return "\n".join(self.to_lines()) + "\n"

    @classmethod
    def loads(cls, text: str) -> SessionTranscript:
        lines = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not lines or lines[0].get("type") != "session":
            raise ValueError("transcript must start with a session record")
        head = lines[0]
        records = []
        for d in lines[1:]:
            if d.pop("type") != "driver":
                raise ValueError("unexpected record type in transcript")
            if d.get("v_corners") is not None:
                d["v_corners"] = tuple(d["v_corners"])
            records.append(DriverRecord(**d))
        return cls(as_point(head["rider"]), head["rider_grid_id"], head["search_radius"], head["mode"],
                   head["status"], head["selected"], tuple(records))

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> SessionTranscript:
        return cls.loads(Path(path).read_text())


@dataclass(frozen=True)
class SessionTruth:
    """SP and driver secrets for scoring; never part of the rider's view."""

    locations: dict[int, UtmPoint]
    secrets: dict[int, BlindingSecret]
    max_corner: dict[int, int]


def simulate_session(world: World, rider_id: int, sr: int = 1, mode: str = ENHANCED, seed: int = 0,
                     collect_all: bool = True,
                     forced_secret: BlindingSecret | None = None,
                     blinding_range=BLINDING_RANGE) -> tuple[SessionTranscript, SessionTruth]:
    """Run one ride request end to end.

    With ``collect_all`` (the adversary's behaviour) the rider keeps
    requesting comparisons after the optimum driver is found, so every
    candidate yields a blinded tuple. Each comparison round draws a fresh
    blinding secret from the stream ``(seed, BLIND, driver_id)``.
    """
    if mode not in (BASIC, ENHANCED):
        raise ValueError(f"unknown mode {mode!r}")
    enhanced = mode == ENHANCED
    grids = world.grids
    rider_loc = world.riders[rider_id]
    rider_grid = grids.locate(rider_loc)

    # rider: keys and encrypted location
    keys: KeyPair = keygen(seeding.derive_seed(seed, seeding.KEYS))
    pk, sk = keys.public_key, keys.secret_key
    req = RideRequest(rider_grid, pk.encrypt(rider_loc.easting), pk.encrypt(rider_loc.northing), pk, sr)

    # SP: candidate search and homomorphic distances
    candidates = sp_candidate_search(req, world.distribution_map(), grids)
    if not candidates:
        empty = SessionTranscript(rider_loc, rider_grid, sr, mode, "no_candidates", None)
        return empty, SessionTruth({}, {}, {})
    responses = {}
    for i in candidates:
        drv = world.drivers[i]
        responses[i] = drv.respond(req, enhanced, seeding.rng_for(seed, seeding.SHUFFLE, i))
    rider_cts = (req.enc_easting, req.enc_northing)
    dist_cts = {i: sp_compute_distance(rider_cts, (r.enc_easting, r.enc_northing)) for i, r in responses.items()}

    # rider: decrypt and rank
    distances = {i: sk.decrypt(c) for i, c in dist_cts.items()}
    prs = {i: world.prediction(responses[i].grid_id) for i in candidates}
    ranked = sorted(candidates, key=lambda i: (distances[i], i))
    d0 = distances[ranked[0]]

    records = {i: DriverRecord(i, responses[i].grid_id, distances[i], prs[i]) for i in candidates}
    secrets: dict[int, BlindingSecret] = {}
    selected = None
    if not enhanced:
        d_diag = grids.cell(responses[ranked[0]].grid_id).diagonal_sq
        selected = rider_basic_select([(i, distances[i]) for i in candidates], d_diag, prs)
    else:
        for i in ranked:
            d_prime = 2 * d0 - distances[i]
            tup, sec = sp_blind_tuple(pk.encrypt(d_prime), responses[i].corner_cts,
                                      seeding.rng_for(seed, seeding.BLIND, i), driver_id=i,
                                      blinding_range=blinding_range, secret=forced_secret)
            secrets[i] = sec
            v_prime = sk.decrypt(tup.v_prime)
            v_corners = tuple(sk.decrypt(c) for c in tup.corners)
            records[i] = DriverRecord(i, responses[i].grid_id, distances[i], prs[i], d_prime, v_prime, v_corners)
            if selected is None and rider_enhanced_compare(v_prime, *v_corners) and prs[i] == 0:
                selected = i
                if not collect_all:
                    break
        if selected is None:
            selected = ranked[0]

    truth = SessionTruth(
        {i: world.drivers[i].location for i in candidates},
        secrets,
        {i: max_corner_distance(world.drivers[i].location, world.drivers[i].grid) for i in candidates},
    )
    transcript = SessionTranscript(rider_loc, rider_grid, sr, mode, "ok", selected,
                                   tuple(records[i] for i in candidates))
    return transcript, truth


def run_session(world: World, rider_id: int, sr: int = 1, mode: str = ENHANCED, seed: int = 0,
                **kwargs) -> SessionTranscript:
    return simulate_session(world, rider_id, sr, mode, seed, **kwargs)[0]


__all__ = [
    "BASIC", "ENHANCED", "BLINDING_RANGE", "RideRequest", "DriverResponse", "BlindingSecret", "BlindedTuple",
    "PredictionStub", "DriverDistributionMap", "Driver", "World", "DriverRecord", "SessionTranscript",
    "SessionTruth", "sp_candidate_search", "sp_compute_distance", "sp_blind_tuple", "rider_basic_select",
    "rider_enhanced_compare", "simulate_session", "run_session",
]
