"""Offline re-verification of an epoch transcript.

Replays the public part of the server log: authority selection, DKG
commitments and verdicts, every ballot proof, every mix hop, every PET
contribution and decryption share, and finally the report itself.
"""

import json
from collections import defaultdict

from .dkg import commitments_from_json, public_share_commitment
from .encoding import frame, from_hex
from .group import Ciphertext, PublicKey, identity, preset_params, trivial
from .mixnet import MixBatch, ShuffleProof, verify_mix
from .proofs import Ballot, BallotProof, EqExpProof, verify_ballot, verify_eq_exp
from .protocol import TRANSCRIPT_FORMAT, ProtocolConfig, ballot_context, select_authorities
from .tally import BLIND_TAG, build_noise_set, candidate_lineage, noise_lineage
from .threshold import combine_shares, verify_decryption_share


def load(path):
    with open(path) as fh:
        return json.load(fh)


def verify_transcript(doc):
    """Return a list of human-readable problems; empty means the epoch checks out."""
    try:
        return _Replay(doc).run()
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        return [f"malformed transcript: {type(exc).__name__}: {exc}"]


class _Replay:
    def __init__(self, doc):
        if doc.get("format") != TRANSCRIPT_FORMAT:
            raise ValueError(f"unsupported transcript format {doc.get('format')!r}")
        self.envs = doc["envelopes"]
        self.problems = []

    def public(self, kind):
        return [e for e in self.envs if e["kind"] == kind and "payload" in e]

    def one(self, kind):
        found = self.public(kind)
        if len(found) != 1:
            raise ValueError(f"expected one {kind!r} envelope, found {len(found)}")
        return found[0]["payload"]

    def fail(self, msg):
        self.problems.append(msg)

    def run(self):
        self.config = ProtocolConfig.from_dict(self.one("config"))
        cfg = self.config
        self.params = preset_params(cfg.group_bits)
        self.t = cfg.decryption_threshold

        auth = self.one("authorities")
        expected = list(select_authorities(cfg.beacon_seed, cfg.users, cfg.authorities))
        if auth["users"] != expected:
            self.fail("authority set does not match the beacon")
        self.user_of = {k: u for k, u in enumerate(auth["users"], start=1)}
        self.index_of = {u: k for k, u in self.user_of.items()}

        self.check_dkg()
        grid = self.check_ballots()
        noise = self.check_noise(grid)
        if noise is not None:
            self.check_report(noise)
        return self.problems

    # setup
    def check_dkg(self):
        cfg, params = self.config, self.params
        commitments = {}
        for env in self.public("dkg-commitments"):
            dealer = env["payload"]["dealer"]
            if self.user_of.get(dealer) != env["sender"]:
                self.fail(f"dkg commitments for dealer {dealer} sent by {env['sender']}")
            commitments[dealer] = commitments_from_json(env["payload"]["commitments"])
        complaints = set()
        for env in self.public("dkg-verdicts"):
            for dealer, ok in env["payload"]["accept"].items():
                if not ok:
                    complaints.add(int(dealer))
        qualified = sorted(
            k for k, cs in commitments.items()
            if k not in complaints and len(cs) == self.t and all(params.is_element(c) for c in cs)
        )
        posted = self.one("public-key")
        if posted["qualified"] != qualified:
            self.fail(f"qualified set {posted['qualified']} != recomputed {qualified}")
        h = 1
        for k in qualified:
            h = h * commitments[k][0] % params.p
        if from_hex(posted["h"]) != h:
            self.fail("public key is not the product of qualified commitments")
        self.pk = PublicKey(params, h)
        lists = [commitments[k] for k in qualified]
        self.share_commitments = {
            k: public_share_commitment(params, lists, k) for k in range(1, cfg.authorities + 1)
        }

    # upload
    def check_ballots(self):
        cfg, params, pk = self.config, self.params, self.pk
        grid = [[identity(params) for _ in range(cfg.n_categories)] for _ in range(cfg.roads)]
        seen = set()
        excluded = []
        for env in self.public("ballot"):
            if env["phase"] != "upload":
                self.fail(f"ballot envelope {env['seq']} outside upload phase")
            user = env["payload"]["user"]
            if user != env["sender"] or user in seen:
                continue
            seen.add(user)
            ballot = Ballot.from_json(params, env["payload"]["ballot"])
            proof = BallotProof.from_json(env["payload"]["proof"])
            if not verify_ballot(pk, ballot, proof, ballot_context(cfg.epoch, user), (cfg.roads, cfg.n_categories)):
                excluded.append(user)
                continue
            for i, c, ct in ballot.cells():
                grid[i][c] = grid[i][c] + ct
        posted = self.one("tally")
        if sorted(u for u, _ in posted["excluded"]) != sorted(excluded):
            self.fail(f"excluded users {[u for u, _ in posted['excluded']]} != recomputed {excluded}")
        if posted["cells"] != [[ct.to_json() for ct in row] for row in grid]:
            self.fail("encrypted tally does not match the verified ballots")
        return grid

    # aggregation
    def chains(self):
        out = defaultdict(lambda: {"input": None, "hops": [], "verdicts": defaultdict(list)})
        for env in self.envs:
            if "payload" not in env:
                continue
            p = env["payload"]
            if env["kind"] == "mix-input":
                out[p["lineage"]]["input"] = p
            elif env["kind"] == "mix-hop":
                out[p["lineage"]]["hops"].append(p)
            elif env["kind"] == "mix-verdict":
                out[p["lineage"]]["verdicts"][(p["stage"], p["mixer"])].append(p["accept"])
        return out

    def replay_chain(self, lineage, values):
        """Final batch of a chain, or None if it cannot be trusted."""
        chain = self._chains.get(lineage)
        if chain is None or chain["input"] is None:
            self.fail(f"missing mix chain {lineage}")
            return None
        params, pk = self.params, self.pk
        current = MixBatch.from_json(params, chain["input"])
        expected = MixBatch(tuple(trivial(params, v) for v in values), 0, lineage)
        if current != expected:
            self.fail(f"mix chain {lineage}: input is not the trivial encryption of {list(values)}")
            return None
        for hop in chain["hops"]:
            after = MixBatch(tuple(Ciphertext.from_json(params, c) for c in hop["items"]), hop["stage"], lineage)
            proof = ShuffleProof.from_json(params, hop["proof"])
            ok = verify_mix(pk, current, after, proof, self.config.min_rounds)
            votes = chain["verdicts"].get((hop["stage"], hop["mixer"]), [])
            accepted = sum(votes) * 2 > len(votes) if votes else ok
            where = f"mix hop {lineage} stage {hop['stage']} by authority {hop['mixer']}"
            if accepted and not ok:
                self.fail(f"{where} failed verification")
                return None
            if ok and not accepted:
                self.fail(f"{where} verifies but was rejected")
            if ok and accepted:
                current = after
        if current.stage == 0 and len(values):
            self.fail(f"mix chain {lineage}: no accepted hop")
            return None
        return current

    def check_noise(self, grid):
        cfg = self.config
        self._chains = self.chains()
        noise_set = build_noise_set(cfg.delta)
        self.noise_set = noise_set
        noised = []
        ok = True
        for i in range(cfg.roads):
            row = []
            for c in range(cfg.n_categories):
                batch = self.replay_chain(noise_lineage(cfg.epoch, i, c), noise_set.values)
                if batch is None:
                    ok = False
                    row.append(None)
                    continue
                row.append(grid[i][c] + batch.items[0])
            noised.append(row)
        if not ok:
            return None
        posted = self.one("noised-tally")["cells"]
        if posted != [[ct.to_json() for ct in row] for row in noised]:
            self.fail("noised tally does not equal tally plus first mixed noise")
        return noised

    def check_pet(self, e, item, pet):
        params = self.params
        lineage, pos = pet["lineage"], pet["position"]
        where = f"PET {lineage} position {pos}"
        d = e - item
        ctx = frame(frame(lineage, pos), d)
        blinded = None
        for user, dk_json, proof_json in pet["blinds"]:
            k = self.index_of.get(user)
            dk = Ciphertext.from_json(params, dk_json)
            proof = EqExpProof.from_json(proof_json)
            if k is None or not verify_eq_exp(params, proof, (d.a, d.b), (dk.a, dk.b), frame(BLIND_TAG, k, ctx)):
                self.fail(f"{where}: invalid blinding from authority {user}")
                return None
            blinded = dk if blinded is None else blinded + dk
        if blinded is None:
            self.fail(f"{where}: no blinding contributions")
            return None
        shares = []
        for user, value_hex, proof_json in pet["shares"]:
            k = self.index_of.get(user)
            value = from_hex(value_hex)
            proof = EqExpProof.from_json(proof_json)
            if k is None or not verify_decryption_share(blinded, k, self.share_commitments[k], value, proof, ctx):
                self.fail(f"{where}: invalid decryption share from authority {user}")
                return None
            shares.append((k, value))
        if len(shares) < self.t:
            self.fail(f"{where}: {len(shares)} decryption shares < threshold {self.t}")
            return None
        result = combine_shares(blinded, shares, self.t)
        if from_hex(pet["result"]) != result or pet["equal"] != (result == 1):
            self.fail(f"{where}: posted result does not match the shares")
            return None
        return result == 1

    def check_report(self, noised):
        cfg = self.config
        pets = defaultdict(dict)
        for env in self.public("pet"):
            p = env["payload"]
            pets[p["lineage"]][p["position"]] = p
        reported = []
        for i in range(cfg.roads):
            candidates = list(range(self.noise_set.min, cfg.thresholds[i]))
            for c in range(cfg.n_categories):
                if not candidates:
                    reported.append([i, c])
                    continue
                lineage = candidate_lineage(cfg.epoch, i, c)
                batch = self.replay_chain(lineage, candidates)
                if batch is None:
                    return
                matched = False
                for pos, item in enumerate(batch.items):
                    pet = pets[lineage].get(pos)
                    if pet is None:
                        self.fail(f"missing PET {lineage} position {pos}")
                        return
                    eq = self.check_pet(noised[i][c], item, pet)
                    if eq is None:
                        return
                    matched = matched or eq
                if not matched:
                    reported.append([i, c])
        posted = self.one("report")
        if posted["epoch"] != cfg.epoch or posted["reported"] != reported:
            self.fail(f"report {posted['reported']} != recomputed {reported}")
