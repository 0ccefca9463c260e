import random

import pytest

from haze import dkg
from haze.group import preset_params
from haze.threshold import Committee, default_threshold


@pytest.fixture(scope="session")
def params():
    return preset_params(512)


def make_committee(params, n=4, t=None, seed=0, rounds=10, bus=None):
    """Committee from an honest in-memory DKG, no bus traffic."""
    t = t or default_threshold(n)
    rng = random.Random(seed)
    dealings = [dkg.deal(params, k, n, t, rng) for k in range(1, n + 1)]
    transcript, shares = dkg.finalize(params, dealings, n, t)
    commitments = {k: transcript.share_commitment(k) for k in range(1, n + 1)}
    return Committee(
        pk=transcript.public_key,
        shares=shares,
        commitments=commitments,
        threshold=t,
        live=list(range(1, n + 1)),
        seed=seed,
        bus=bus,
        rounds=rounds,
    )


@pytest.fixture(scope="session")
def committee(params):
    return make_committee(params)


@pytest.fixture
def fresh_committee(params):
    return make_committee(params, seed=1)


@pytest.fixture(scope="session")
def pk(committee):
    return committee.pk


def decrypt_small(committee, c, lo=-200, hi=320):
    """Full-share decryption by table lookup over a small range (test helper)."""
    from haze.group import encode_exponent
    from haze.threshold import combine_shares

    params = c.params
    shares = [(k, params.exp(c.a, s.s)) for k, s in committee.shares.items()]
    gm = combine_shares(c, shares, committee.threshold)
    for m in range(lo, hi + 1):
        if encode_exponent(params, m) == gm:
            return m
    raise AssertionError("plaintext outside lookup range")
