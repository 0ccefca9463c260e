"""
Catching misbehaviour
=====================

A mixer that swaps in its own ciphertext is caught by the cut-and-choose
proof and dropped; a driver who votes twice is excluded by the ballot proof.
The public transcript re-verifies offline, and any edit to it is flagged.
"""

import copy
import json
from fractions import Fraction

from haze.encoding import dumps
from haze.protocol import FaultSchedule, ProtocolConfig, UserObservation, run_epoch, select_authorities
from haze.transcript import verify_transcript

config = ProtocolConfig(roads=2, users=8, authorities=4, thresholds=2, delta=Fraction(1, 2), rounds=10)
obs = [UserObservation(u, u % 2, 10 + 9 * u) for u in range(8)]
cheater = select_authorities(config.beacon_seed, config.users, config.authorities)[1]

faults = FaultSchedule(config).tamper_mix(cheater).malform_ballot(5, "two_roads")
run = run_epoch(config, obs, faults)
print("excluded authorities:", run.excluded_authorities[:1])
print("excluded ballots:", run.excluded_users)

doc = json.loads(dumps(run.transcript()))
print("verify honest transcript:", verify_transcript(doc) or "ok")

# %%
# Now edit one accepted mix hop and re-verify
forged = copy.deepcopy(doc)
hop = [e for e in forged["envelopes"] if e["kind"] == "mix-hop"][-1]
items = hop["payload"]["items"]
items[0], items[1] = items[1], items[0]
print("verify forged transcript:", verify_transcript(forged))
