import random
from dataclasses import replace

import pytest

from haze.encoding import frame
from haze.group import Ciphertext, encrypt
from haze.proofs import (
    Ballot,
    BallotProof,
    BinaryVoteProof,
    EqExpProof,
    check_eq_exp_equations,
    prove_ballot,
    prove_binary,
    prove_eq_exp,
    prove_votes,
    simulate_eq_exp,
    verify_ballot,
    verify_binary,
    verify_eq_exp,
)


def _eq_statement(params, rng):
    x = params.random_scalar(rng)
    g2 = params.exp(params.g, params.random_scalar(rng))
    return x, (params.g, g2), (params.exp(params.g, x), params.exp(g2, x))


def test_eq_exp_completeness(params):
    rng = random.Random(0)
    for _ in range(1000):
        x, bases, images = _eq_statement(params, rng)
        proof = prove_eq_exp(params, x, bases, images, b"ctx", rng)
        assert verify_eq_exp(params, proof, bases, images, b"ctx")


def test_binary_completeness(pk):
    rng = random.Random(1)
    for trial in range(1000):
        m = trial % 2
        r = pk.params.random_scalar(rng)
        c = encrypt(pk, m, r)
        assert verify_binary(pk, c, prove_binary(pk, c, m, r, rng, b"x"), b"x")


def test_eq_exp_rejects_wrong_witness(params):
    rng = random.Random(2)
    x, bases, images = _eq_statement(params, rng)
    bad_images = (images[0], images[1] * params.g % params.p)
    proof = prove_eq_exp(params, x, bases, bad_images, b"", rng)
    assert not verify_eq_exp(params, proof, bases, bad_images)


@pytest.mark.parametrize("field", ["commit1", "commit2", "challenge", "response"])
def test_eq_exp_field_corruption(params, field):
    rng = random.Random(3)
    x, bases, images = _eq_statement(params, rng)
    proof = prove_eq_exp(params, x, bases, images, b"", rng)
    bad = replace(proof, **{field: (getattr(proof, field) + 1) % params.q})
    assert not verify_eq_exp(params, bad, bases, images)


def test_eq_exp_context_binding(params):
    rng = random.Random(4)
    x, bases, images = _eq_statement(params, rng)
    proof = prove_eq_exp(params, x, bases, images, b"epoch-1", rng)
    assert not verify_eq_exp(params, proof, bases, images, b"epoch-2")
    assert not verify_eq_exp(params, "not a proof", bases, images)


def test_eq_exp_roundtrip(params):
    rng = random.Random(5)
    x, bases, images = _eq_statement(params, rng)
    proof = prove_eq_exp(params, x, bases, images, b"", rng)
    assert EqExpProof.from_json(proof.to_json()) == proof


def test_simulator_is_witness_free(params):
    # simulated transcripts satisfy the verification equations for any
    # challenge, and responses are uniform exactly as in real proofs
    rng = random.Random(6)
    _, bases, images = _eq_statement(params, rng)
    for ch in (0, 1, params.q - 1, rng.randrange(params.q)):
        sim = simulate_eq_exp(params, bases, images, ch, rng)
        assert sim.challenge == ch % params.q
        assert check_eq_exp_equations(params, sim, bases, images)
    # a false statement can still be simulated, which is why the hash matters
    false_images = (images[0], images[1] * params.g % params.p)
    sim = simulate_eq_exp(params, bases, false_images, 12345, rng)
    assert check_eq_exp_equations(params, sim, bases, false_images)
    assert not verify_eq_exp(params, sim, bases, false_images)


@pytest.mark.parametrize("m", [2, -1, 5])
def test_binary_rejects_out_of_range(pk, m):
    rng = random.Random(7)
    r = pk.params.random_scalar(rng)
    c = encrypt(pk, m, r)
    assert not verify_binary(pk, c, prove_binary(pk, c, m, r, rng))


def test_binary_corruptions(pk):
    rng = random.Random(8)
    r = pk.params.random_scalar(rng)
    c = encrypt(pk, 1, r)
    proof = prove_binary(pk, c, 1, r, rng, b"u1")
    assert verify_binary(pk, c, proof, b"u1")
    q = pk.params.q
    c0, c1 = proof.challenges
    z0, z1 = proof.responses
    bad = [
        replace(proof, challenges=((c0 + 1) % q, (c1 - 1) % q)),
        replace(proof, responses=(z0, (z1 + 1) % q)),
        replace(proof, commitments=(proof.commitments[1], proof.commitments[0])),
        replace(proof, challenges=(c0,)),
        replace(proof, responses=(q, z1)),
    ]
    for b in bad:
        assert not verify_binary(pk, c, b, b"u1")
    assert not verify_binary(pk, c, proof, b"u2")
    other = encrypt(pk, 1, rng=rng)
    assert not verify_binary(pk, other, proof, b"u1")
    assert BinaryVoteProof.from_json(proof.to_json()) == proof


def _ballot(pk, shape, real, rng):
    n, cats = shape
    rand = [[pk.params.random_scalar(rng) for _ in range(cats)] for _ in range(n)]
    votes = tuple(
        tuple(encrypt(pk, 1 if (i, c) == real else 0, rand[i][c]) for c in range(cats)) for i in range(n)
    )
    ballot = Ballot(votes)
    return ballot, prove_ballot(pk, ballot, real, rand, rng, b"ctx"), rand


@pytest.mark.parametrize("real", [None, (0, 0), (1, 2), (2, 1)])
def test_ballot_accept(pk, real):
    ballot, proof, _ = _ballot(pk, (3, 3), real, random.Random(9))
    assert verify_ballot(pk, ballot, proof, b"ctx", shape=(3, 3))
    assert not verify_ballot(pk, ballot, proof, b"other", shape=(3, 3))
    assert not verify_ballot(pk, ballot, proof, b"ctx", shape=(3, 4))
    assert Ballot.from_json(pk.params, ballot.to_json()) == ballot
    assert BallotProof.from_json(proof.to_json()) == proof


@pytest.mark.parametrize(
    "grid",
    [
        [[2, 0], [0, 0]],
        [[1, 0], [1, 0]],
        [[1, 1], [0, 0]],
        [[-1, 0], [0, 1]],
    ],
    ids=["vote-two", "two-roads", "two-categories", "negative"],
)
def test_ballot_reject_catalog(pk, grid):
    rng = random.Random(10)
    rand = [[pk.params.random_scalar(rng) for _ in row] for row in grid]
    ballot = Ballot(tuple(tuple(encrypt(pk, m, r) for m, r in zip(row, rr)) for row, rr in zip(grid, rand)))
    proof = prove_votes(pk, ballot, grid, rand, rng, b"ctx")
    assert not verify_ballot(pk, ballot, proof, b"ctx")


def test_ballot_proof_ciphertext_mismatch(pk):
    rng = random.Random(11)
    ballot, proof, _ = _ballot(pk, (2, 3), (0, 1), rng)
    other, _, _ = _ballot(pk, (2, 3), (0, 1), rng)
    assert not verify_ballot(pk, other, proof, b"ctx")
    # swapping a single vote ciphertext also breaks it
    votes = [list(row) for row in ballot.votes]
    votes[1][2] = other.votes[1][2]
    assert not verify_ballot(pk, Ballot(tuple(map(tuple, votes))), proof, b"ctx")


def test_ballot_structural_rejects(pk, params):
    ballot, proof, _ = _ballot(pk, (2, 2), (0, 0), random.Random(12))
    ragged = Ballot((ballot.votes[0], ballot.votes[1][:1]))
    assert not verify_ballot(pk, ragged, proof, b"ctx")
    assert not verify_ballot(pk, Ballot(()), proof, b"ctx")
    invalid = Ballot(((Ciphertext(0, 1, params), ballot.votes[0][1]), ballot.votes[1]))
    assert not verify_ballot(pk, invalid, proof, b"ctx")
    assert not verify_ballot(pk, ballot, None, b"ctx")


def test_vote_context_is_per_cell(pk):
    # a per-vote proof cannot be moved to another cell
    rng = random.Random(13)
    ballot, proof, _ = _ballot(pk, (1, 2), (0, 0), rng)
    c = ballot.votes[0][0]
    assert verify_binary(pk, c, proof.votes[0][0], frame(b"ctx", 0, 0))
    assert not verify_binary(pk, c, proof.votes[0][0], frame(b"ctx", 0, 1))
