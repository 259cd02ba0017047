"""Corner distances and the points they pin down.

A driver inside a rectangular cell reports its squared distance to the four
corners. Those four numbers alone fix the position up to reflection through
the cell's midlines.
"""
# %%
from pride_harvest.geometry import GridMap, GridRect, UtmPoint, candidate_points, corner_distances

cell = GridRect.from_bounds(0, 0, 0, 10, 20)
driver = UtmPoint(3, 4)
ds = corner_distances(driver, cell)
print("corner distances (ll, lu, rl, ru):", tuple(ds))

# %%
# the sums across the two diagonals always agree
print("ll + ru =", ds.ll + ds.ru, " lu + rl =", ds.lu + ds.rl)

# %%
# the corner labels are shuffled before anyone sees them, so only the
# multiset of values matters; solving gives the four mirror images
shuffled = sorted(ds)
print("candidates:", sorted(candidate_points(cell, shuffled)))

# %%
# a published grid map: 3 x 4 cells of 10 x 20 m
gmap = GridMap(UtmPoint(1000, 5000), 10, 20, rows=3, cols=4)
home = gmap.locate(UtmPoint(1015, 5025))
print("cell", home, "bounds", gmap.cell(home).bounds)
print("searched first (N, E, S, W):", gmap.search_order(home, 1))
print("search radius 2:", gmap.search_order(home, 2))
