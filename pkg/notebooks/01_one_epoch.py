"""
One epoch, end to end
=====================

Twelve drivers on three road segments, four of them acting as authorities.
We run setup, upload and aggregation, then open the noise with every key
share (something no real party can do) to check the report by hand.
"""

from fractions import Fraction

from haze.protocol import (
    ProtocolConfig,
    UserObservation,
    plaintext_report,
    plaintext_tallies,
    realized_noise,
    run_epoch,
)

config = ProtocolConfig(roads=3, users=12, authorities=4, thresholds=2, delta=Fraction(1, 4), rounds=10)

# (road, speed in mph) for each driver
trips = [(0, 12), (0, 18), (0, 25), (0, 44), (1, 61), (1, 70), (1, 35),
         (2, 8), (2, 14), (2, 75), (2, 88), (0, 52)]
obs = [UserObservation(u, road, speed) for u, (road, speed) in enumerate(trips)]

run = run_epoch(config, obs)
print("authorities (user ids):", run.setup.authorities)
print("envelopes on the server log:", len(run.bus.log))

# %%
# Plaintext view, for the demo only
tallies = plaintext_tallies(config, obs)
noise = realized_noise(run)
for i, row in enumerate(tallies):
    print(f"road {i}: tallies {row}, noise {[noise[(i, c)] for c in range(3)]}")

print("reported cells:", sorted(run.report.reported))
assert run.report.reported == plaintext_report(config, obs, noise)
