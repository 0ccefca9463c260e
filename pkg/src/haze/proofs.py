"""Non-interactive sigma proofs (Fiat-Shamir over SHA-256).

* ``EqExpProof``: Chaum-Pedersen equality of discrete logs, used for
  decryption shares and PET blinding.
* ``BinaryVoteProof``: disjunctive proof that a ciphertext encrypts 0 or 1.
* ``BallotProof``: one binary proof per vote plus one on the homomorphic sum
  of the whole ballot, which together mean "every vote is 0/1 and at most one
  vote is 1".

Each challenge hashes a domain tag, the public key, the statement and the
prover's commitments, all length-prefixed, plus caller context bytes (for
ballots: epoch and user id).
"""

from dataclasses import dataclass

from .encoding import frame, from_hex, hex_int
from .group import Ciphertext, encode_exponent, hash_to_scalar

EQ_EXP_TAG = b"haze/eq-exp"
BINARY_TAG = b"haze/binary-vote"


@dataclass(frozen=True)
class EqExpProof:
    commit1: int
    commit2: int
    challenge: int
    response: int

    def to_json(self):
        return [hex_int(x) for x in (self.commit1, self.commit2, self.challenge, self.response)]

    @classmethod
    def from_json(cls, obj):
        return cls(*[from_hex(x) for x in obj])


def _eq_exp_challenge(params, bases, images, commits, context):
    return hash_to_scalar(params, frame(list(bases), list(images), list(commits), context), EQ_EXP_TAG)


def prove_eq_exp(params, witness, bases, images, context=b"", rng=None):
    """Prove ``log_{g1} y1 == log_{g2} y2`` without revealing the exponent."""
    g1, g2 = bases
    w = params.random_scalar(rng)
    commits = (params.exp(g1, w), params.exp(g2, w))
    c = _eq_exp_challenge(params, bases, images, commits, context)
    z = (w + c * witness) % params.q
    return EqExpProof(commits[0], commits[1], c, z)


def check_eq_exp_equations(params, proof, bases, images):
    """The sigma-protocol verification equations, without the hash check."""
    g1, g2 = bases
    y1, y2 = images
    p = params.p
    return (
        params.exp(g1, proof.response) == proof.commit1 * params.exp(y1, proof.challenge) % p
        and params.exp(g2, proof.response) == proof.commit2 * params.exp(y2, proof.challenge) % p
    )


def verify_eq_exp(params, proof, bases, images, context=b""):
    if not isinstance(proof, EqExpProof):
        return False
    if not all(0 <= x < params.q for x in (proof.challenge, proof.response)):
        return False
    if not all(0 < x < params.p for x in (proof.commit1, proof.commit2, *images)):
        return False
    c = _eq_exp_challenge(params, bases, images, (proof.commit1, proof.commit2), context)
    if c != proof.challenge:
        return False
    return check_eq_exp_equations(params, proof, bases, images)


def simulate_eq_exp(params, bases, images, challenge, rng=None):
    """Honest-verifier simulator: a transcript for a chosen challenge, no witness."""
    g1, g2 = bases
    y1, y2 = images
    z = params.random_scalar(rng)
    a1 = params.exp(g1, z) * params.inv(params.exp(y1, challenge)) % params.p
    a2 = params.exp(g2, z) * params.inv(params.exp(y2, challenge)) % params.p
    return EqExpProof(a1, a2, challenge % params.q, z)


@dataclass(frozen=True)
class BinaryVoteProof:
    """OR-proof transcript; branch ``v`` proves ``(a, b / g^v)`` is ``(g^r, h^r)``."""

    commitments: tuple  # ((A0, B0), (A1, B1))
    challenges: tuple  # (c0, c1), c0 + c1 == H(...)
    responses: tuple  # (z0, z1)

    def to_json(self):
        return {
            "A": [[hex_int(x) for x in pair] for pair in self.commitments],
            "c": [hex_int(x) for x in self.challenges],
            "z": [hex_int(x) for x in self.responses],
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            tuple(tuple(from_hex(x) for x in pair) for pair in obj["A"]),
            tuple(from_hex(x) for x in obj["c"]),
            tuple(from_hex(x) for x in obj["z"]),
        )


def _binary_challenge(pk, c, commitments, context):
    return hash_to_scalar(pk.params, frame(pk, c, [list(x) for x in commitments], context), BINARY_TAG)


def prove_binary(pk, c, m, r, rng=None, context=b""):
    """Disjunctive proof that ``c = Enc(m; r)`` with ``m`` in {0, 1}.

    A plaintext outside {0, 1} still yields a proof object; it just fails
    verification.
    """
    params = pk.params
    q, p = params.q, params.p
    real = 1 if m == 1 else 0
    fake = 1 - real
    commitments = [None, None]
    challenges = [0, 0]
    responses = [0, 0]

    # simulated branch
    cf = params.random_scalar(rng)
    zf = params.random_scalar(rng)
    bf = c.b * params.inv(encode_exponent(params, fake)) % p
    commitments[fake] = (
        params.exp(params.g, zf) * params.inv(params.exp(c.a, cf)) % p,
        params.exp(pk.h, zf) * params.inv(params.exp(bf, cf)) % p,
    )
    challenges[fake] = cf
    responses[fake] = zf

    w = params.random_scalar(rng)
    commitments[real] = (params.exp(params.g, w), params.exp(pk.h, w))

    total = _binary_challenge(pk, c, commitments, context)
    challenges[real] = (total - cf) % q
    responses[real] = (w + challenges[real] * r) % q
    return BinaryVoteProof(tuple(commitments), tuple(challenges), tuple(responses))


def verify_binary(pk, c, proof, context=b""):
    params = pk.params
    q, p = params.q, params.p
    try:
        (A0, B0), (A1, B1) = proof.commitments
        c0, c1 = proof.challenges
        z0, z1 = proof.responses
    except (TypeError, ValueError, AttributeError):
        return False
    if not all(0 <= x < q for x in (c0, c1, z0, z1)):
        return False
    if not all(0 < x < p for x in (A0, B0, A1, B1)):
        return False
    if (c0 + c1) % q != _binary_challenge(pk, c, proof.commitments, context):
        return False
    for v, (A, B), cv, zv in ((0, (A0, B0), c0, z0), (1, (A1, B1), c1, z1)):
        bv = c.b * params.inv(encode_exponent(params, v)) % p
        if params.exp(params.g, zv) != A * params.exp(c.a, cv) % p:
            return False
        if params.exp(pk.h, zv) != B * params.exp(bv, cv) % p:
            return False
    return True


@dataclass(frozen=True)
class Ballot:
    """``votes[i][c]`` encrypts the user's 0/1 vote for road ``i``, category ``c``."""

    votes: tuple

    @property
    def shape(self):
        return (len(self.votes), len(self.votes[0]) if self.votes else 0)

    def cells(self):
        for i, row in enumerate(self.votes):
            for c, ct in enumerate(row):
                yield i, c, ct

    def total(self):
        it = (ct for _, _, ct in self.cells())
        acc = next(it)
        for ct in it:
            acc = acc + ct
        return acc

    def to_json(self):
        return [[ct.to_json() for ct in row] for row in self.votes]

    @classmethod
    def from_json(cls, params, obj):
        return cls(tuple(tuple(Ciphertext.from_json(params, ct) for ct in row) for row in obj))


@dataclass(frozen=True)
class BallotProof:
    votes: tuple  # N x C BinaryVoteProof
    total: BinaryVoteProof

    def to_json(self):
        return {
            "votes": [[pr.to_json() for pr in row] for row in self.votes],
            "total": self.total.to_json(),
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            tuple(tuple(BinaryVoteProof.from_json(pr) for pr in row) for row in obj["votes"]),
            BinaryVoteProof.from_json(obj["total"]),
        )


def prove_votes(pk, ballot, plaintexts, randomness, rng=None, context=b""):
    """Ballot proof for an arbitrary plaintext grid.

    Grids that are not all-zero-or-single-one produce proofs that fail
    verification; ``prove_ballot`` is the honest entry point.
    """
    q = pk.params.q
    rows = []
    for i, row in enumerate(ballot.votes):
        rows.append(tuple(
            prove_binary(pk, ct, plaintexts[i][c], randomness[i][c], rng, frame(context, i, c))
            for c, ct in enumerate(row)
        ))
    total_r = sum(r for row in randomness for r in row) % q
    total_m = sum(m for row in plaintexts for m in row)
    total = prove_binary(pk, ballot.total(), total_m, total_r, rng, frame(context, "total"))
    return BallotProof(tuple(rows), total)


def prove_ballot(pk, ballot, real_position, randomness, rng=None, context=b""):
    """Prove a ballot is all zeros, or has a single 1 at ``real_position``.

    ``randomness[i][c]`` is the encryption nonce of each vote.
    """
    plaintexts = [
        [1 if real_position == (i, c) else 0 for c in range(len(row))]
        for i, row in enumerate(ballot.votes)
    ]
    return prove_votes(pk, ballot, plaintexts, randomness, rng, context)


def verify_ballot(pk, ballot, proof, context=b"", shape=None):
    """Accept iff every vote is 0/1 and the ballot sum is 0/1."""
    try:
        n_rows, n_cols = ballot.shape
        if shape is not None and (n_rows, n_cols) != tuple(shape):
            return False
        if n_rows == 0 or n_cols == 0:
            return False
        if any(len(row) != n_cols for row in ballot.votes):
            return False
        if len(proof.votes) != n_rows or any(len(row) != n_cols for row in proof.votes):
            return False
    except (AttributeError, TypeError):
        return False
    for i, c, ct in ballot.cells():
        if not ct.is_valid():
            return False
        if not verify_binary(pk, ct, proof.votes[i][c], frame(context, i, c)):
            return False
    return verify_binary(pk, ballot.total(), proof.total, frame(context, "total"))
