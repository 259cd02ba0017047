"""Undoing the blinding for a single driver.

Every blinded value shares ``e`` and ``r``. Differences remove ``r``, their
GCD exposes ``e`` once the factors forced by the grid geometry are stripped,
and the rider's own comparand then gives ``r``. What remains are exact
corner distances, hence a handful of mirror-image candidates, of which the
rider's distance circle keeps one.
"""
# %%
from pride_harvest.attack import (
    DIVISOR_SEARCH, GridFactorTable, harvest_driver, pairwise_diffs, recover_e, recover_r, unblind,
)
from pride_harvest.geometry import GridRect, UtmPoint
from pride_harvest.protocol import DriverRecord

cell = GridRect.from_bounds(0, 0, 0, 10, 20)
factors = GridFactorTable([cell])
rider = UtmPoint(-5, 4)
v_corners = (186, 466, 1866, 2146)  # 7*D + 11 for D = 25, 65, 265, 305
v_prime, d_prime, delta = 431, 60, 64

# %%
diffs = pairwise_diffs(v_corners)
print("pairwise differences:", diffs.values, "gcd", diffs.gcd())
print("cell factor removed:", factors.common(0))
print("corner differences only ->", recover_e(diffs, cell, factors))
comp = [v_prime - v for v in v_corners]
e = recover_e(diffs, cell, factors, comparand_diffs=comp)
r = recover_r(v_prime, e, d_prime)
print(f"with the comparand -> e={e}, r={r}, distances {unblind(v_corners, e, r)}")

# %%
rec = DriverRecord(0, 0, delta, 0, d_prime, v_prime, v_corners)
out = harvest_driver(rec, rider, [cell], factors, roads=None)
print(out.status, out.location, "from candidates", out.candidates)

# %%
# an unlucky comparand keeps a factor 2 in every difference; the default
# mode reports the overestimate, the divisor search tries smaller e instead
bad = DriverRecord(0, 0, delta, 0, -41, -276, v_corners)
print(harvest_driver(bad, rider, [cell], factors, roads=None))
print(harvest_driver(bad, rider, [cell], factors, roads=None, mode=DIVISOR_SEARCH))
