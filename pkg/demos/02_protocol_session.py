"""One enhanced ride request, step by step.

The rider encrypts their location with a fresh key, the service provider
computes encrypted squared distances to the drivers around the rider, and
each candidate is checked with a blinded comparison: the provider scales
and shifts the rider's comparand and the driver's four corner distances
by the same secret ``(e, r)`` so only their order is meant to leak.
"""
# %%
import numpy as np

from pride_harvest.geometry import GridMap, UtmPoint, corner_distances
from pride_harvest.protocol import (
    BlindingSecret, World, rider_enhanced_compare, simulate_session, sp_blind_tuple,
)
from pride_harvest.she import keygen

# %%
# the blinding arithmetic on its own
keys = keygen(7)
pk, sk = keys.public_key, keys.secret_key
tup, secret = sp_blind_tuple(pk.encrypt(60), [pk.encrypt(d) for d in (25, 65, 265, 305)],
                             secret=BlindingSecret(e=7, r=11))
vp = sk.decrypt(tup.v_prime)
vs = [sk.decrypt(c) for c in tup.corners]
print("rider sees V' =", vp, "and corners", vs)
print("V' beats every corner:", rider_enhanced_compare(vp, *vs), "(60 <= 305, so no)")

# %%
# a small world: 3 x 3 cells of 100 x 100 m, rider in the middle
gmap = GridMap(UtmPoint(0, 0), 100, 100, rows=3, cols=3)
rng = np.random.default_rng(0)
drivers = [UtmPoint(int(x), int(y)) for x, y in rng.integers(0, 300, (30, 2))]
world = World.build(gmap, drivers, [UtmPoint(150, 150)])
transcript, truth = simulate_session(world, 0, seed=1)

print(f"{len(transcript)} candidates, selected driver {transcript.selected}")
for rec in sorted(transcript.records, key=lambda r: r.distance)[:5]:
    passes = rider_enhanced_compare(rec.v_prime, *rec.v_corners)
    print(f"  driver {rec.driver_id:2d}  D={rec.distance:6d}  D'={rec.d_prime:6d}  pass={passes}"
          f"  max corner={truth.max_corner[rec.driver_id]}")

# %%
# the transcript is what a curious rider keeps; it round-trips through JSON lines
print(transcript.dumps().splitlines()[0])
