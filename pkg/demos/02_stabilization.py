"""
Rotor labels at box-exit times
==============================

Snapshot the rotors in [-3, 3]^3 each time the walk first leaves a larger
box, and find the exit radius after which each site's label stops changing.
"""

from collections import Counter

from rotorlab import ConfigRule
from rotorlab.experiments import stabilization_study

rows = stabilization_study(15, 3, ConfigRule.toward_origin(3))

hist = Counter(r.stabilized_at for r in rows)
for m0 in sorted(hist, key=lambda v: (v is None, v)):
    print(f"stabilized at exit radius {m0}: {hist[m0]} sites")

origin = next(r for r in rows if r.site == (0, 0, 0))
print("origin labels at exits 0..15:", origin.labels_at_exits)
