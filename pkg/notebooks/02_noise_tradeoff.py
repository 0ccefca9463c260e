"""
How delta trades privacy for accuracy
=====================================

The release rule adds one uniform draw from the noise set to each tally and
reports the cell when the sum reaches T. Smaller delta means a wider set,
so tallies near T are reported less reliably.
"""

from fractions import Fraction

import numpy as np

from haze import harness
from haze.tally import build_noise_set, dp_mechanism_oracle

T = 11
for d in (Fraction(1, 2), Fraction(1, 4), Fraction(1, 10)):
    ns = build_noise_set(d)
    curve = [dp_mechanism_oracle(s, T, ns) for s in range(0, 2 * T)]
    step = max(b - a for a, b in zip(curve, curve[1:]))
    print(f"delta={d}: noise {ns.min}..{ns.max}, largest one-vote change {step}")
    print("   P[report] for tally 0..21:", np.round([float(p) for p in curve], 2).tolist())

# %%
# Precision and recall on synthetic rush-hour traffic (oracle mode)
config = harness.sweep_config(authorities=1)
records = harness.synth_traffic(config, seed=0, profile=harness.Congested(0, 0.5), windows=200)
results = harness.sweep(records, config, [Fraction(1, 2), Fraction(1, 4), Fraction(1, 10)], harness.windows_of(200))
for row in harness.evaluate(results):
    print(f"delta={row['delta']:<5} precision={row['precision']:.3f} recall={row['recall']:.3f}")
