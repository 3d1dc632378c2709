"""
Rotor walk versus simple random walk
====================================

Each rotor sends its departures round the six directions in turn, so per-site
direction counts never differ by more than one. The random walk baseline
shows how different the origin-visit count is for a transient walk.
"""

from rotorlab import ConfigRule
from rotorlab.experiments import balance_report, srw_comparison, walk_exits

state = None
for _, state in walk_exits(10, ConfigRule.toward_origin(3), instrument=True):
    pass
rows = balance_report(state)
busiest = max(rows, key=lambda r: r.departures)
print(f"{len(rows)} sites departed from, {sum(not r.ok for r in rows)} balance violations")
print(f"busiest site {busiest.site}: {busiest.departures} departures, counts {busiest.counts}")

srw = srw_comparison(20, 10_000, seed=42)
print(f"\nSRW, n=20: mean origin visits {srw.mean_origin_visits:.4f} "
      f"(+/- {srw.std_error:.4f}), max {srw.max}; rotor walk: {6 * 20 + 1}")
