"""
Rotor-router aggregation against IDLA
=====================================

Release particles from the origin one at a time; each stops at the first
site outside the cluster and joins it. Compare cluster roundness (inf-norm
inradius / outradius) for the rotor and random versions.
"""

import numpy as np

from rotorlab import ConfigRule
from rotorlab.aggregation import aggregate, idla_baseline, shape_report

k = 500
cluster = aggregate(k, ConfigRule.toward_origin(2))
rep = shape_report(cluster)
print(f"rotor cluster: inradius {rep.inradius}, outradius {rep.outradius}, "
      f"sphericity {float(rep.sphericity):.3f}")

idla = idla_baseline(k, seed=1, trials=20)
print(f"IDLA (20 trials): mean {idla.mean_sphericity:.3f}, "
      f"range {idla.min_sphericity:.3f}-{idla.max_sphericity:.3f}")

# A quick text picture of the rotor cluster.
r = rep.outradius
grid = np.full((2 * r + 1, 2 * r + 1), ".")
for x, y in cluster.occupied:
    grid[r - y, x + r] = "#"
print("\n".join("".join(row) for row in grid))
