import random
from collections import Counter
from dataclasses import replace

import pytest
from scipy.stats import chisquare

from haze.bus import Bus
from haze.errors import ChainFailure, ConfigError
from haze.mixnet import (
    MixBatch,
    ShuffleProof,
    initial_batch,
    mix,
    run_chain,
    tampered_mix,
    verify_mix,
)
from haze.protocol import ProtocolConfig

from conftest import decrypt_small, make_committee

VALUES = (-1, 0, 1, 2)


def test_honest_mix_preserves_multiset(committee, params):
    batch = initial_batch(params, VALUES, "t/honest")
    after, proof = mix(batch, random.Random(0), committee.pk, rounds=10)
    assert verify_mix(committee.pk, batch, after, proof, min_rounds=10)
    assert sorted(decrypt_small(committee, c) for c in after.items) == sorted(VALUES)
    assert after.stage == 1 and after.lineage == "t/honest"
    # chained hops keep the multiset too
    after2, proof2 = mix(after, random.Random(1), committee.pk, rounds=10)
    assert verify_mix(committee.pk, after, after2, proof2)
    assert sorted(decrypt_small(committee, c) for c in after2.items) == sorted(VALUES)


def test_proof_roundtrip(committee, params):
    batch = initial_batch(params, VALUES, "t/json")
    after, proof = mix(batch, random.Random(2), committee.pk, rounds=6)
    assert ShuffleProof.from_json(params, proof.to_json()) == proof
    assert MixBatch.from_json(params, after.to_json()) == after


def _detected(committee, params, rounds, trials, seed):
    batch = initial_batch(params, VALUES, "t/sound")
    caught = 0
    for k in range(trials):
        after, proof = tampered_mix(batch, random.Random(seed * 100003 + k), committee.pk, rounds)
        caught += not verify_mix(committee.pk, batch, after, proof)
    return caught


def test_soundness_lambda5(committee, params):
    # expected escapes 200/32 = 6.25, sigma ~ 2.46; allow +3 sigma
    caught = _detected(committee, params, 5, 200, 1)
    assert 200 - caught <= 13


def test_soundness_lambda10(committee, params):
    assert _detected(committee, params, 10, 100, 2) >= 99


def test_unlinkability_chi_square(committee, params):
    # where input 0 lands after one honest hop is uniform over positions
    batch = initial_batch(params, (7, 0, 0, 0), "t/link")
    landing = Counter()
    for k in range(400):
        after, _ = mix(batch, random.Random(k), committee.pk, rounds=1)
        landing[next(i for i, c in enumerate(after.items) if decrypt_small(committee, c, 0, 7) == 7)] += 1
    counts = [landing[i] for i in range(4)]
    assert chisquare(counts).pvalue > 0.001


def test_zero_rounds_rejected(committee, params):
    batch = initial_batch(params, VALUES, "t/zero")
    after, proof = mix(batch, random.Random(3), committee.pk, rounds=0)
    assert not verify_mix(committee.pk, batch, after, proof)
    with pytest.raises(ConfigError):
        ProtocolConfig(roads=1, users=4, authorities=2, thresholds=1, rounds=0, min_rounds=0)


def test_min_rounds_enforced(committee, params):
    batch = initial_batch(params, VALUES, "t/min")
    after, proof = mix(batch, random.Random(4), committee.pk, rounds=5)
    assert verify_mix(committee.pk, batch, after, proof, min_rounds=5)
    assert not verify_mix(committee.pk, batch, after, proof, min_rounds=6)


def test_binding_to_lineage_and_stage(committee, params):
    batch = initial_batch(params, VALUES, "t/a")
    after, proof = mix(batch, random.Random(5), committee.pk, rounds=8)
    assert not verify_mix(committee.pk, replace(batch, lineage="t/b"), replace(after, lineage="t/b"), proof)
    assert not verify_mix(committee.pk, batch, replace(after, stage=2), proof)
    swapped = replace(after, items=after.items[1:] + after.items[:1])
    assert not verify_mix(committee.pk, batch, swapped, proof)
    flipped = replace(proof, bits=tuple(1 - b for b in proof.bits))
    assert not verify_mix(committee.pk, batch, after, flipped)
    short = replace(after, items=after.items[:-1])
    assert not verify_mix(committee.pk, batch, short, proof)


def test_chain_excludes_tamperer(params):
    comm = make_committee(params, n=4, seed=3, rounds=10, bus=Bus("aggregation"))
    comm.tamperers = frozenset({2})
    chain = run_chain(initial_batch(params, VALUES, "t/chain"), comm)
    assert [h.accepted for h in chain.hops] == [True, False, True, True]
    assert 2 not in comm.live
    assert comm.excluded[0][0] == 2
    assert chain.batch.stage == 3
    assert sorted(decrypt_small(comm, c) for c in chain.batch.items) == sorted(VALUES)
    kinds = Counter(e.kind for e in comm.bus.log)
    assert kinds["mix-input"] == 1 and kinds["mix-hop"] == 4
    # three verifiers judge hop 1 and 2, two judge hops 3 and 4
    assert kinds["mix-verdict"] == 3 + 3 + 2 + 2


def test_chain_failure_when_nobody_mixes(params):
    comm = make_committee(params, n=2, seed=4, rounds=10)
    comm.tamperers = frozenset({1, 2})
    with pytest.raises(ChainFailure):
        run_chain(initial_batch(params, VALUES, "t/none"), comm)
    comm.live = []
    with pytest.raises(ChainFailure):
        run_chain(initial_batch(params, VALUES, "t/none"), comm)
