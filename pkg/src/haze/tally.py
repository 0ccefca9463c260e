"""Homomorphic tallying, the uniform threshold-noise mechanism, PETs and the
mixed inequality test.

The noise mechanism: draw ``q`` uniformly from
``{-floor(1/(2 delta)) + 1, ..., floor(1/(2 delta))}`` and report a cell iff
``tally + q >= T``. Moving one vote changes the reporting probability by at
most ``1/|set| <= delta``.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

from .encoding import frame, hex_int
from .errors import ConfigError, ProtocolError
from .group import Ciphertext, identity, trivial
from .mixnet import initial_batch, run_chain
from .proofs import prove_eq_exp, verify_ballot, verify_eq_exp
from .threshold import combine_shares, decryption_share, verify_decryption_share

log = logging.getLogger(__name__)

BLIND_TAG = b"haze/pet-blind"


def _as_fraction(delta):
    if isinstance(delta, Fraction):
        return delta
    if isinstance(delta, float):
        return Fraction(repr(delta))
    return Fraction(delta)


@dataclass(frozen=True)
class NoiseSet:
    delta: Fraction
    values: tuple

    @property
    def min(self):
        return self.values[0]

    @property
    def max(self):
        return self.values[-1]

    def __len__(self):
        return len(self.values)


def build_noise_set(delta):
    """Contiguous set of ``2 * floor(1/(2 delta))`` integers.

    Its size equals ``1/delta`` only when ``1/(2 delta)`` is an integer.
    """
    d = _as_fraction(delta)
    if not 0 < d <= 1:
        raise ConfigError(f"delta must be in (0, 1], got {delta}")
    half = math.floor(1 / (2 * d))
    if half < 1:
        raise ConfigError(f"delta={delta} gives an empty noise set")
    return NoiseSet(d, tuple(range(-half + 1, half + 1)))


def dp_mechanism_oracle(total, threshold, noise_set):
    """Exact ``P[total + q >= threshold]`` for ``q`` uniform on the noise set."""
    if total < 0:
        raise ValueError("tally must be non-negative")
    hits = sum(1 for q in noise_set.values if total + q >= threshold)
    return Fraction(hits, len(noise_set))


def noise_lineage(epoch, i, c):
    return f"e{epoch}/noise/{i}/{c}"


def candidate_lineage(epoch, i, c):
    return f"e{epoch}/below/{i}/{c}"


@dataclass(frozen=True)
class TallyGrid:
    cells: tuple  # N x C Ciphertext
    verified_users: int = 0
    excluded: tuple = ()  # (user, reason)
    noised: bool = False

    @property
    def shape(self):
        return (len(self.cells), len(self.cells[0]) if self.cells else 0)

    def to_json(self):
        return [[c.to_json() for c in row] for row in self.cells]


@dataclass(frozen=True)
class StatReport:
    epoch: int
    reported: frozenset

    def to_json(self):
        return {"epoch": self.epoch, "reported": [list(x) for x in sorted(self.reported)]}


def aggregate_votes(ballots, pk, n_roads, n_categories, context_for=None):
    """Sum the ballots whose proofs verify; the rest are named in ``excluded``.

    ``ballots`` is a sequence of ``(user, Ballot, BallotProof)``.
    """
    params = pk.params
    acc = [[identity(params) for _ in range(n_categories)] for _ in range(n_roads)]
    excluded = []
    verified = 0
    for user, ballot, proof in ballots:
        ctx = context_for(user) if context_for else b""
        if not verify_ballot(pk, ballot, proof, ctx, shape=(n_roads, n_categories)):
            excluded.append((user, "ballot proof rejected"))
            log.info("ballot from user %s excluded", user)
            continue
        verified += 1
        for i, c, ct in ballot.cells():
            acc[i][c] = acc[i][c] + ct
    return TallyGrid(tuple(tuple(row) for row in acc), verified, tuple(excluded))


def add_noise(grid, noise_batches, epoch=0):
    """``E'[i][c] = E[i][c] + batch[i,c].items[0]`` after a lineage check."""
    if grid.noised:
        raise ProtocolError("noise already added to this grid")
    rows = []
    for i, row in enumerate(grid.cells):
        out = []
        for c, ct in enumerate(row):
            batch = noise_batches[(i, c)]
            if batch.lineage != noise_lineage(epoch, i, c):
                raise ProtocolError(f"noise batch {batch.lineage!r} used for cell {(i, c)}")
            if not batch.items:
                raise ProtocolError(f"empty noise batch for cell {(i, c)}")
            out.append(ct + batch.items[0])
        rows.append(tuple(out))
    return TallyGrid(tuple(rows), grid.verified_users, grid.excluded, noised=True)


@dataclass(frozen=True)
class PetRecord:
    """Public evidence of one plaintext-equality test."""

    difference: Ciphertext
    blinds: tuple  # (authority, Ciphertext, EqExpProof)
    blinded: Ciphertext
    shares: tuple  # (authority, value, EqExpProof)
    result: int
    equal: bool

    def to_json(self, committee):
        return {
            "blinds": [[committee.name(k), d.to_json(), pr.to_json()] for k, d, pr in self.blinds],
            "shares": [[committee.name(k), hex_int(v), pr.to_json()] for k, v, pr in self.shares],
            "result": hex_int(self.result),
            "equal": self.equal,
        }


def pet(e, m, committee, context=b""):
    """Distributed test of whether ``e`` encrypts ``m`` (an int or a ciphertext).

    Every live authority raises ``d = e - m`` to a fresh nonzero exponent
    and proves it did so consistently; the product is threshold-decrypted and
    the test is "equal" iff that yields the identity. A non-match reveals only
    a uniformly blinded group element.
    """
    params = committee.params
    other = m if isinstance(m, Ciphertext) else trivial(params, m)
    d = e - other
    ctx = frame(context, d)

    blinds = []
    for k in list(committee.live):
        rng = committee.rng_for(k, "pet", context)
        z = params.random_nonzero_scalar(rng)
        dk = Ciphertext(params.exp(d.a, z), params.exp(d.b, z), params)
        proof = prove_eq_exp(params, z, (d.a, d.b), (dk.a, dk.b), frame(BLIND_TAG, k, ctx), rng)
        if verify_eq_exp(params, proof, (d.a, d.b), (dk.a, dk.b), frame(BLIND_TAG, k, ctx)):
            blinds.append((k, dk, proof))
        else:
            committee.exclude(k, "invalid PET blinding proof")
    committee.require_quorum("PET blinding")

    blinded = blinds[0][1]
    for _, dk, _ in blinds[1:]:
        blinded = blinded + dk

    shares = []
    for k in list(committee.live):
        rng = committee.rng_for(k, "pet-share", context)
        value, proof = decryption_share(committee.shares[k], blinded, rng, ctx)
        if verify_decryption_share(blinded, k, committee.commitments[k], value, proof, ctx):
            shares.append((k, value, proof))
        else:
            committee.exclude(k, "invalid decryption share")
    committee.require_quorum("PET decryption")

    result = combine_shares(blinded, [(k, v) for k, v, _ in shares], committee.threshold)
    return PetRecord(d, tuple(blinds), blinded, tuple(shares), result, result == 1)


def inequality_test(e_noised, threshold, noise_min, committee, lineage="", phase="aggregation"):
    """True iff the plaintext of ``e_noised`` is at least ``threshold``.

    The below-threshold candidates run from ``noise_min`` (the smallest value a
    noised tally can take) to ``threshold - 1``. Starting at 0 instead would
    report a zero tally with negative noise as above threshold. An equivalent
    fix is shifting all noise to be non-negative and the threshold with it;
    extending the candidate set keeps the mechanism as defined.

    The candidates are mixed before the PETs so a match position says nothing
    about which value matched.
    """
    candidates = list(range(noise_min, threshold))
    if not candidates:
        return True
    batch = initial_batch(committee.params, candidates, lineage)
    chain = run_chain(batch, committee, phase)
    records = []
    for pos, item in enumerate(chain.batch.items):
        rec = pet(e_noised, item, committee, frame(lineage, pos))
        records.append(rec)
        committee.post(
            "server", phase, "pet", {"lineage": lineage, "position": pos, **rec.to_json(committee)}
        )
    return not any(r.equal for r in records)


def report(grid_noised, thresholds, noise_set, committee, epoch=0, phase="aggregation"):
    """Run the inequality test on every cell and collect those above threshold."""
    if not grid_noised.noised:
        raise ProtocolError("statistics cannot be extracted before noise is added")
    reported = set()
    for i, row in enumerate(grid_noised.cells):
        for c, ct in enumerate(row):
            above = inequality_test(
                ct, thresholds[i], noise_set.min, committee, candidate_lineage(epoch, i, c), phase
            )
            if above:
                reported.add((i, c))
    return StatReport(epoch, frozenset(reported))

