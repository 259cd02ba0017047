"""Synthetic road networks and on-road driver placement."""
# %%
import numpy as np

from pride_harvest.roads import CITY_PRESETS, preset_city, sample_on_road

for key, preset in CITY_PRESETS.items():
    grids, roads = preset_city(key)
    total = sum(s.length for s in roads) / 1000
    print(f"{preset.name:<14} cells {grids.cell_width}x{grids.cell_height} m, "
          f"{len(roads):4d} segments, {total:6.1f} km of road")

# %%
grids, roads = preset_city("london")
rng = np.random.default_rng(0)
cell = grids.cell(27)
pts = [sample_on_road(cell, roads, rng) for _ in range(5)]
for p in pts:
    print(p, f"{roads.nearest_road_distance(p):.3f} m from the nearest road")

# %%
# the index answers exactly what a scan over all segments would
p = pts[0]
print(roads.nearest_road_distance(p) == roads.brute_force_distance(p))
