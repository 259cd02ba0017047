import numpy as np
import pytest
from scipy import stats

from pride_harvest.geometry import GridRect, UtmPoint
from pride_harvest.roads import (
    CITY_PRESETS, ON_ROAD_TOLERANCE, RoadFileError, RoadNetwork, RoadSegment, load_roads,
    nearest_road_distance, preset_city, sample_on_road, synth_city,
)


def seg(ax, ay, bx, by):
    return RoadSegment(UtmPoint(ax, ay), UtmPoint(bx, by))


@pytest.fixture
def one_road():
    return RoadNetwork([seg(0, 0, 10, 0)])


@pytest.mark.parametrize("p, expected", [((5, 0), 0.0), ((5, 5), 5.0), ((13, 4), 5.0)])
def test_nearest_road_distance(one_road, p, expected):
    assert nearest_road_distance(UtmPoint(*p), one_road) == pytest.approx(expected)


def test_empty_network_raises():
    with pytest.raises(ValueError):
        RoadNetwork([]).nearest(UtmPoint(0, 0))


def test_degenerate_segment():
    with pytest.raises(ValueError):
        seg(1, 1, 1, 1)


def test_index_matches_brute_force():
    rng = np.random.default_rng(7)
    segs = []
    while len(segs) < 2000:
        a = rng.integers(0, 20_000, 2)
        b = a + rng.integers(-600, 601, 2)
        if (a != b).any() and b.min() >= 0:
            segs.append(seg(*map(int, a), *map(int, b)))
    net = RoadNetwork(segs)
    for _ in range(300):
        p = UtmPoint(*map(int, rng.integers(-2000, 22_000, 2).clip(0)))
        assert net.nearest_road_distance(p) == pytest.approx(net.brute_force_distance(p), abs=1e-9)


def test_sample_invariants():
    grids, roads = preset_city("paris")
    rng = np.random.default_rng(0)
    for g in list(grids)[:10]:
        for _ in range(20):
            p = sample_on_road(g, roads, rng)
            assert g.contains(p) and roads.nearest_road_distance(p) < ON_ROAD_TOLERANCE


def test_sample_uniform_along_road():
    net = RoadNetwork([seg(0, 500, 1000, 500)])
    g = GridRect.from_bounds(0, 0, 0, 1000, 1000)
    rng = np.random.default_rng(1)
    xs = np.array([sample_on_road(g, net, rng).easting for _ in range(10_000)])
    # 20 bins of 50 m; rounding puts weight 0.5 on each end point, so drop them
    counts, _ = np.histogram(xs[(xs > 0) & (xs < 1000)], bins=20, range=(0.5, 999.5))
    assert stats.chisquare(counts).pvalue > 0.01


def test_sample_needs_road():
    g = GridRect.from_bounds(0, 5000, 5000, 6000, 6000)
    with pytest.raises(ValueError):
        sample_on_road(g, RoadNetwork([seg(0, 0, 10, 0)]), np.random.default_rng(0))


def test_load_save_roundtrip(tmp_path):
    net = RoadNetwork([seg(0, 0, 10, 0), seg(3, 4, 3, 90)])
    net.save(tmp_path / "r.txt")
    back = load_roads(tmp_path / "r.txt")
    assert back.segments == net.segments


def test_load_skips_comments(tmp_path):
    (tmp_path / "r.txt").write_text("# header\n\n1 2 3 4\n")
    assert load_roads(tmp_path / "r.txt").segments == (seg(1, 2, 3, 4),)


def test_load_malformed_reports_line(tmp_path):
    (tmp_path / "r.txt").write_text("1 2 3 4\n1 2 x 4\n")
    with pytest.raises(RoadFileError, match=":2:"):
        load_roads(tmp_path / "r.txt")


def test_synth_city_deterministic():
    a = synth_city(3, 3, 500, 120, 5)
    b = synth_city(3, 3, 500, 120, 5)
    c = synth_city(3, 3, 500, 120, 6)
    assert a[0] == b[0] and a[1].segments == b[1].segments
    assert a[1].segments != c[1].segments


def test_presets_distinct_and_sized():
    networks = set()
    for key, preset in CITY_PRESETS.items():
        grids, roads = preset_city(key)
        assert (grids.rows, grids.cols) == (8, 8)
        assert abs(grids.cell_width - 2000) < 20 and abs(grids.cell_height - 2000) < 20
        assert grids.cell_width != grids.cell_height
        x0, y0, x1, y1 = grids.bounds
        for s in roads:
            for p in (s.a, s.b):
                assert x0 <= p.easting <= x1 and y0 <= p.northing <= y1
        assert all(roads.clipped_pieces(g) for g in grids)
        networks.add(roads.segments)
    assert len(networks) == 4
