"""Re-encryption mixnet with a cut-and-choose shuffle proof.

A hop maps ``before`` to ``after`` by ``after[i] = reenc(before[perm[i]], r_i)``.
To prove it, the mixer also builds ``rounds`` shadow shuffles of ``before``
and derives one challenge bit per shadow from a hash of everything. For bit
0 it opens the shadow (permutation and randomness, so the shadow is a correct
shuffle of ``before``); for bit 1 it opens how ``after`` is obtained from the
shadow. A mixer whose output is not a shuffle of its input can satisfy only
one of the two openings per round, so it survives with probability
``2**-rounds``.
"""

import logging
from dataclasses import dataclass

from .encoding import frame
from .errors import ChainFailure
from .group import Ciphertext, encrypt, hash_to_scalar, reencrypt, trivial

log = logging.getLogger(__name__)

SHUFFLE_TAG = b"haze/shuffle"
DEFAULT_ROUNDS = 40


@dataclass(frozen=True)
class MixBatch:
    items: tuple
    stage: int = 0
    lineage: str = ""

    def __len__(self):
        return len(self.items)

    def to_json(self):
        return {"lineage": self.lineage, "stage": self.stage, "items": [c.to_json() for c in self.items]}

    @classmethod
    def from_json(cls, params, obj):
        return cls(tuple(Ciphertext.from_json(params, c) for c in obj["items"]), obj["stage"], obj["lineage"])


@dataclass(frozen=True)
class ShuffleProof:
    shadows: tuple  # rounds x n Ciphertext
    bits: tuple
    openings: tuple  # per round: (permutation, randomness)

    @property
    def rounds(self):
        return len(self.shadows)

    def to_json(self):
        return {
            "shadows": [[c.to_json() for c in row] for row in self.shadows],
            "bits": list(self.bits),
            "openings": [{"perm": list(perm), "rand": [format(r, "x") for r in rand]} for perm, rand in self.openings],
        }

    @classmethod
    def from_json(cls, params, obj):
        return cls(
            tuple(tuple(Ciphertext.from_json(params, c) for c in row) for row in obj["shadows"]),
            tuple(obj["bits"]),
            tuple((tuple(o["perm"]), tuple(int(r, 16) for r in o["rand"])) for o in obj["openings"]),
        )


@dataclass(frozen=True)
class Hop:
    mixer: object
    after: MixBatch
    proof: ShuffleProof
    accepted: bool


@dataclass(frozen=True)
class ChainResult:
    batch: MixBatch
    hops: tuple

    @property
    def accepted_hops(self):
        return tuple(h for h in self.hops if h.accepted)


def initial_batch(params, values, lineage=""):
    """Trivial (non-hiding) encryptions that anyone can recompute."""
    return MixBatch(tuple(trivial(params, v) for v in values), 0, lineage)


def _permute(pk, items, perm, rands):
    return tuple(reencrypt(pk, items[j], r) for j, r in zip(perm, rands))


def shuffle(pk, items, rng):
    """Uniform permutation plus fresh re-encryption; returns the witness too."""
    n = len(items)
    perm = list(range(n))
    rng.shuffle(perm)
    rands = [pk.params.random_scalar(rng) for _ in range(n)]
    return _permute(pk, items, perm, rands), tuple(perm), tuple(rands)


def challenge_bits(pk, before, after_items, shadows, rounds):
    data = frame(
        pk,
        before.lineage,
        before.stage,
        [c.to_bytes() for c in before.items],
        [c.to_bytes() for c in after_items],
        [[c.to_bytes() for c in row] for row in shadows],
    )
    bits = []
    ctr = 0
    while len(bits) < rounds:
        x = hash_to_scalar(pk.params, frame(data, ctr), SHUFFLE_TAG)
        bits.extend((x >> i) & 1 for i in range(min(128, rounds - len(bits))))
        ctr += 1
    return tuple(bits)


def prove_shuffle(pk, before, after_items, perm, rands, rng, rounds=DEFAULT_ROUNDS):
    q = pk.params.q
    n = len(before.items)
    shadow_witness = []
    shadows = []
    for _ in range(rounds):
        items, sigma, s = shuffle(pk, before.items, rng)
        shadows.append(items)
        shadow_witness.append((sigma, s))
    bits = challenge_bits(pk, before, after_items, shadows, rounds)
    openings = []
    for bit, (sigma, s) in zip(bits, shadow_witness):
        if bit == 0:
            openings.append((sigma, s))
        else:
            inv_sigma = [0] * n
            for i, j in enumerate(sigma):
                inv_sigma[j] = i
            tau = tuple(inv_sigma[perm[i]] for i in range(n))
            u = tuple((rands[i] - s[tau[i]]) % q for i in range(n))
            openings.append((tau, u))
    return ShuffleProof(tuple(shadows), bits, tuple(openings))


def mix(batch, rng, pk, rounds=DEFAULT_ROUNDS):
    """Shuffle and re-encrypt ``batch``; returns the next-stage batch and its proof."""
    items, perm, rands = shuffle(pk, batch.items, rng)
    proof = prove_shuffle(pk, batch, items, perm, rands, rng, rounds)
    return MixBatch(items, batch.stage + 1, batch.lineage), proof


def tampered_mix(batch, rng, pk, rounds=DEFAULT_ROUNDS, replacement=7, position=0):
    """A cheating mixer: replaces one output by ``Enc(replacement)`` and proves
    with its honest witness, passing only the rounds whose bit is 0."""
    items, perm, rands = shuffle(pk, batch.items, rng)
    if items:
        items = list(items)
        items[position % len(items)] = encrypt(pk, replacement, rng=rng)
        items = tuple(items)
    proof = prove_shuffle(pk, batch, items, perm, rands, rng, rounds)
    return MixBatch(items, batch.stage + 1, batch.lineage), proof


def _is_permutation(perm, n):
    return len(perm) == n and sorted(perm) == list(range(n))


def verify_mix(pk, before, after, proof, min_rounds=1):
    """Accept iff every round opens consistently with its challenge bit."""
    params = pk.params
    n = len(before.items)
    if after.lineage != before.lineage or after.stage != before.stage + 1 or len(after.items) != n:
        return False
    rounds = len(proof.shadows)
    if rounds < max(1, min_rounds) or len(proof.bits) != rounds or len(proof.openings) != rounds:
        return False
    if any(len(row) != n for row in proof.shadows):
        return False
    if not all(c.params == params and c.is_valid() for c in after.items):
        return False
    if tuple(proof.bits) != challenge_bits(pk, before, after.items, proof.shadows, rounds):
        return False
    for bit, shadow, (perm, rands) in zip(proof.bits, proof.shadows, proof.openings):
        if not _is_permutation(perm, n) or len(rands) != n or not all(0 <= r < params.q for r in rands):
            return False
        if bit == 0:
            if _permute(pk, before.items, perm, rands) != tuple(shadow):
                return False
        elif _permute(pk, shadow, perm, rands) != tuple(after.items):
            return False
    return True


def hop_payload(hop, before):
    return {
        "lineage": before.lineage,
        "mixer": hop.mixer,
        "stage": before.stage + 1,
        "items": [c.to_json() for c in hop.after.items],
        "proof": hop.proof.to_json(),
    }


def run_chain(batch, committee, phase="aggregation"):
    """Pass ``batch`` through every live authority in order.

    Each hop is checked by the other live authorities. A hop they reject is
    discarded, its mixer is excluded from the committee, and the next
    authority mixes the last accepted batch instead. ``verify_mix`` is a pure
    function, so the verdict is computed once and every honest verifier
    reports it.
    """
    pk = committee.pk
    mixers = list(committee.live)
    if not mixers:
        raise ChainFailure(f"no live authority to mix {batch.lineage!r}")
    committee.post("server", phase, "mix-input", batch.to_json())
    current = batch
    hops = []
    for index in mixers:
        if index not in committee.live:
            continue
        rng = committee.rng_for(index, "mix", batch.lineage)
        if index in committee.tamperers:
            after, proof = tampered_mix(current, rng, pk, committee.rounds)
        else:
            after, proof = mix(current, rng, pk, committee.rounds)
        ok = verify_mix(pk, current, after, proof, committee.min_rounds)
        hop = Hop(committee.name(index), after, proof, ok)
        committee.post(committee.name(index), phase, "mix-hop", hop_payload(hop, current))
        for other in committee.live:
            if other != index:
                committee.post(
                    committee.name(other),
                    phase,
                    "mix-verdict",
                    {"lineage": batch.lineage, "stage": current.stage + 1, "mixer": hop.mixer, "accept": ok},
                )
        hops.append(hop)
        if ok:
            current = after
        else:
            committee.exclude(index, f"mix hop {batch.lineage} stage {current.stage + 1} failed verification")
    if current.stage == batch.stage and mixers:
        raise ChainFailure(f"every authority failed to mix {batch.lineage!r}")
    return ChainResult(current, tuple(hops))
