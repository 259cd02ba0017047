import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pride_harvest.geometry import GridMap, GridRect, UtmPoint, corner_distances
from pride_harvest.protocol import (
    BASIC, ENHANCED, BlindingSecret, DriverDistributionMap, PredictionStub, RideRequest, SessionTranscript,
    World, rider_basic_select, rider_enhanced_compare, simulate_session, sp_blind_tuple,
    sp_candidate_search, sp_compute_distance,
)
from pride_harvest.she import keygen


@pytest.fixture
def keys():
    return keygen(3)


@pytest.fixture
def gmap():
    return GridMap(UtmPoint(0, 0), 100, 100, rows=3, cols=3)


def five_per_cell(gmap):
    locs = []
    for g in gmap:
        x0, y0, _, _ = g.bounds
        locs += [UtmPoint(x0 + 10 + 15 * k, y0 + 20 + 5 * k) for k in range(5)]
    return locs


def test_candidate_search_excludes_own_cell(gmap, keys):
    world = World.build(gmap, five_per_cell(gmap), [UtmPoint(150, 150)])
    dmap = world.distribution_map()
    pk = keys.public_key
    req = RideRequest(4, pk.encrypt(150), pk.encrypt(150), pk)
    cands = sp_candidate_search(req, dmap, gmap)
    assert len(cands) == 20
    assert not dmap.drivers_in(4) & set(cands)
    corner = RideRequest(0, pk.encrypt(1), pk.encrypt(1), pk)
    assert len(sp_candidate_search(corner, dmap, gmap)) == 10


def test_distribution_map_moves_driver():
    dmap = DriverDistributionMap()
    dmap.report(1, 3)
    dmap.report(1, 4)
    assert dmap.drivers_in(3) == set() and dmap.drivers_in(4) == {1} and len(dmap) == 1


def test_request_validation(keys):
    pk = keys.public_key
    with pytest.raises(ValueError):
        RideRequest(0, pk.encrypt(1), pk.encrypt(1), pk, search_radius=0)
    other = keygen(9).public_key
    with pytest.raises(ValueError):
        RideRequest(0, other.encrypt(1), pk.encrypt(1), pk)


@pytest.mark.parametrize("rider, driver, expected", [
    ((0, 0), (3, 4), 25), ((7, 7), (7, 7), 0), ((-5, 4), (3, 4), 64),
])
def test_encrypted_distance(keys, rider, driver, expected):
    pk, sk = keys.public_key, keys.secret_key
    c = sp_compute_distance([pk.encrypt(v) for v in rider], [pk.encrypt(v) for v in driver])
    assert sk.decrypt(c) == expected


def test_basic_select():
    # D0 = 80 and 2*80 - 100 = 60 > 50, so the far driver passes when PR allows
    assert rider_basic_select([(1, 80), (2, 100)], 50, {}) == 1
    assert rider_basic_select([(1, 80), (2, 100)], 50, {1: 3}) == 2
    assert rider_basic_select([(1, 80), (2, 100)], 200, {}) == 1
    with pytest.raises(ValueError):
        rider_basic_select([], 1, {})


def test_blind_tuple_example(keys):
    pk, sk = keys.public_key, keys.secret_key
    tup, sec = sp_blind_tuple(pk.encrypt(60), [pk.encrypt(d) for d in (25, 65, 265, 305)],
                              secret=BlindingSecret(7, 11))
    assert sec == BlindingSecret(7, 11)
    assert sk.decrypt(tup.v_prime) == 431
    assert [sk.decrypt(c) for c in tup.corners] == [186, 466, 1866, 2146]


def test_blind_tuple_draws_in_range(keys):
    pk = keys.public_key
    rng = np.random.default_rng(0)
    for _ in range(50):
        _, sec = sp_blind_tuple(pk.encrypt(0), [pk.encrypt(0)] * 4, rng, blinding_range=(1, 5))
        assert 1 <= sec.e <= 5 and 1 <= sec.r <= 5


def test_blind_tuple_rejects_foreign_key(keys):
    pk = keys.public_key
    other = keygen(11).public_key
    with pytest.raises(ValueError):
        sp_blind_tuple(pk.encrypt(0), [pk.encrypt(0)] * 3 + [other.encrypt(0)], secret=BlindingSecret(1, 1))


@pytest.mark.parametrize("vp, corners, expected", [
    (10, (1, 2, 3, 9), True),
    (9, (1, 2, 3, 9), False),
    (5, (1, 2, 3, 9), False),
])
def test_enhanced_compare(vp, corners, expected):
    assert rider_enhanced_compare(vp, *corners) is expected


@given(st.integers(-10**9, 10**9), st.lists(st.integers(0, 10**9), min_size=4, max_size=4),
       st.integers(1, 2**24), st.integers(1, 2**24))
def test_blinding_preserves_order(a, bs, e, r):
    blinded = [e * b + r for b in bs]
    assert rider_enhanced_compare(e * a + r, *blinded) == (a > max(bs))


def test_single_driver_session(gmap):
    world = World.build(gmap, {7: UtmPoint(130, 260)}, [UtmPoint(150, 150)])
    t, truth = simulate_session(world, 0, seed=1)
    assert t.status == "ok" and t.selected == 7 and len(t) == 1
    rec = t.records[0]
    assert rec.distance == 20**2 + 110**2
    assert rec.d_prime == rec.distance
    sec = truth.secrets[7]
    assert rec.v_prime == sec.e * rec.d_prime + sec.r
    true_ds = corner_distances(UtmPoint(130, 260), gmap.cell(7))
    assert sorted(rec.v_corners) == sorted(sec.e * d + sec.r for d in true_ds)


def test_session_fresh_secrets_and_selection(gmap):
    pred = PredictionStub({1: 2})
    world = World.build(gmap, five_per_cell(gmap), [UtmPoint(150, 150)], pred)
    t, truth = simulate_session(world, 0, seed=4)
    assert len(t) == 20 and all(r.has_tuple for r in t.records)
    assert len({(s.e, s.r) for s in truth.secrets.values()}) == 20
    ranked = sorted(t.records, key=lambda r: (r.distance, r.driver_id))
    expected = next((r.driver_id for r in ranked
                     if r.d_prime > truth.max_corner[r.driver_id] and r.pr == 0), ranked[0].driver_id)
    assert t.selected == expected
    for r in t.records:
        assert rider_enhanced_compare(r.v_prime, *r.v_corners) == (r.d_prime > truth.max_corner[r.driver_id])


def test_basic_session_has_no_tuples(gmap):
    world = World.build(gmap, five_per_cell(gmap), [UtmPoint(150, 150)])
    t, truth = simulate_session(world, 0, mode=BASIC, seed=2)
    assert t.mode == BASIC and not any(r.has_tuple for r in t.records) and truth.secrets == {}
    assert t.selected in {r.driver_id for r in t.records}


def test_session_without_candidates(gmap):
    world = World.build(gmap, [UtmPoint(150, 150)], [UtmPoint(151, 151)])
    t, _ = simulate_session(world, 0)
    assert t.status == "no_candidates" and t.selected is None and len(t) == 0


def test_session_deterministic(gmap):
    world = World.build(gmap, five_per_cell(gmap), [UtmPoint(150, 150)])
    assert simulate_session(world, 0, seed=8)[0] == simulate_session(world, 0, seed=8)[0]
    assert simulate_session(world, 0, seed=8)[0] != simulate_session(world, 0, seed=9)[0]


def test_forced_secret(gmap):
    world = World.build(gmap, five_per_cell(gmap), [UtmPoint(150, 150)])
    _, truth = simulate_session(world, 0, forced_secret=BlindingSecret(1, 0))
    assert set(truth.secrets.values()) == {BlindingSecret(1, 0)}


def test_transcript_roundtrip(gmap, tmp_path):
    world = World.build(gmap, five_per_cell(gmap), [UtmPoint(150, 150)])
    t, _ = simulate_session(world, 0, seed=5)
    assert SessionTranscript.loads(t.dumps()) == t
    t.save(tmp_path / "t.jsonl")
    assert SessionTranscript.load(tmp_path / "t.jsonl") == t
    with pytest.raises(ValueError):
        SessionTranscript.loads('{"type": "driver"}\n')


def test_prediction_stub():
    assert PredictionStub({3: 2})(3) == 2 and PredictionStub()(3) == 0
    with pytest.raises(ValueError):
        PredictionStub({1: -1})
    p = PredictionStub.random(range(10), np.random.default_rng(0))
    assert all(v >= 0 for v in p.values.values())
