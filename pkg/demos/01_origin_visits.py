"""
Origin visits before each box exit in Z^3
=========================================

A single rotor walk from the origin, recorded at the first time it leaves
each box [-n, n]^3. Under the toward-origin configuration the origin is
visited 6n+1 times before the walk leaves the box of radius n.
"""

from rotorlab import ConfigRule
from rotorlab.experiments import conjecture_sweep

# The configuration sends every first-time visitor one step toward the origin.
rule = ConfigRule.toward_origin(3)
rows = conjecture_sweep(20, rule)

print(" n  visits  6n+1  first exit step")
for r in rows:
    print(f"{r.n:2d}  {r.origin_visits:6d}  {r.expected:4d}  {r.first_exit_step:15d}")

# The literal case table, with its two flipped lines, behaves very differently:
# the walk escapes after a handful of origin visits.
literal = conjecture_sweep(20, ConfigRule.paper_literal(3))
print("\npaper-literal visits:", [r.origin_visits for r in literal])

# Exit steps grow roughly like n^4, so radius 250 takes tens of billions of
# steps. For runs that long use checkpoints:
#   rotorlab conjecture --n-max 250 --checkpoint-every 10^9 --out runs/250
