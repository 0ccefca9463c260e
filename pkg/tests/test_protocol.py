import json
from collections import Counter
from fractions import Fraction

import pytest
from scipy.stats import chisquare

from haze.bus import Bus
from haze.encoding import derive_rng, dumps
from haze.errors import ConfigError, InsufficientSharesError, ProtocolError
from haze.protocol import (
    MALFORM_MODES,
    FaultSchedule,
    PhaseState,
    ProtocolConfig,
    UserObservation,
    build_ballot,
    fault_inject,
    plaintext_report,
    realized_noise,
    run_epoch,
    run_setup,
    select_authorities,
    vote_pattern,
)

from conftest import decrypt_small


def small_config(**kw):
    base = dict(roads=2, users=8, authorities=4, thresholds=2, delta=Fraction(1, 2), rounds=4, min_rounds=2)
    base.update(kw)
    return ProtocolConfig(**base)


OBS = [UserObservation(u, u % 2, v) for u, v in enumerate([10, 12, 45, 20, 75, 5, 40, 18])]


def _check_oracle(run, obs):
    noise = realized_noise(run)
    assert run.report.reported == plaintext_report(run.config, obs, noise, run.excluded_users)


def test_config_validation():
    with pytest.raises(ConfigError):
        small_config(authorities=9)
    with pytest.raises(ConfigError):
        small_config(thresholds=(1, 2, 3))
    with pytest.raises(ConfigError):
        small_config(thresholds=0)
    with pytest.raises(ConfigError):
        small_config(categories=((0, 30), (20, 60)))
    with pytest.raises(ConfigError):
        small_config(delta=2)
    with pytest.raises(ConfigError):
        small_config(group_bits=300)
    with pytest.raises(ConfigError):
        ProtocolConfig.from_dict({"N": 1, "M": 2, "A": 1, "T": 1, "bogus": 3})


def test_config_roundtrip_and_aliases():
    cfg = small_config(delta=0.25)
    assert cfg.delta == Fraction(1, 4)
    assert ProtocolConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg
    alias = ProtocolConfig.from_dict({"N": 2, "M": 8, "A": 4, "T": 2, "lambda": 4, "min_rounds": 2})
    assert alias == small_config()


def test_category_boundaries():
    cfg = small_config()
    assert [cfg.category_of(v) for v in (0, 29.99, 30, 59, 60, 89.9, 90, -1)] == [0, 0, 1, 1, 2, 2, None, None]


def test_selection_deterministic_and_fair():
    assert select_authorities(5, 10, 3) == select_authorities(5, 10, 3)
    assert select_authorities(5, 10, 3) != select_authorities(6, 10, 3)
    counts = Counter()
    for beacon in range(3000):
        counts.update(select_authorities(beacon, 10, 3))
    assert chisquare([counts[u] for u in range(10)]).pvalue > 0.001
    with pytest.raises(ConfigError):
        select_authorities(0, 2, 3)


def test_vote_pattern_18mph():
    cfg = small_config(roads=3)
    assert vote_pattern(UserObservation(0, 1, 18), cfg) == [[0, 0, 0], [1, 0, 0], [0, 0, 0]]
    assert vote_pattern(UserObservation(0, 1, 95), cfg) == [[0, 0, 0]] * 3


def test_ballot_encrypts_pattern():
    cfg = small_config(roads=3)
    setup = run_setup(cfg, Bus())
    ballot, _ = build_ballot(UserObservation(3, 1, 18), setup.public_key, cfg, derive_rng(0, "b"))
    plain = [[decrypt_small(setup.committee, ct, 0, 2) for ct in row] for row in ballot.votes]
    assert plain == [[0, 0, 0], [1, 0, 0], [0, 0, 0]]
    with pytest.raises(ConfigError):
        build_ballot(UserObservation(3, 5, 18), setup.public_key, cfg, derive_rng(0, "b"))


def test_honest_epoch_matches_oracle():
    run = run_epoch(small_config(), OBS)
    _check_oracle(run, OBS)
    assert run.excluded_users == ()
    assert run.setup.state.phase == "done"


@pytest.mark.parametrize("mode", MALFORM_MODES)
def test_malformed_ballot_excluded(mode):
    cfg = small_config()
    run = run_epoch(cfg, OBS, FaultSchedule(cfg).malform_ballot(2, mode))
    assert [u for u, _ in run.excluded_users] == [2]
    _check_oracle(run, OBS)


def test_duplicate_ballot_counted_once():
    cfg = small_config()
    run = run_epoch(cfg, OBS, fault_inject(FaultSchedule(cfg), "duplicate_ballot", 3))
    ballots = [e for e in run.bus.public("ballot") if e.sender == 3]
    assert len(ballots) == 2
    _check_oracle(run, OBS)


def test_upload_timeout_drops_late_ballots():
    cfg = small_config(upload_timeout=5)
    run = run_epoch(cfg, OBS)
    senders = {e.sender for e in run.bus.public("ballot")}
    assert len(senders) == 5
    _check_oracle(run, [o for o in OBS if o.user in senders])


def test_tampering_mixer_excluded():
    cfg = small_config()
    auth = select_authorities(cfg.beacon_seed, cfg.users, cfg.authorities)
    run = run_epoch(cfg, OBS, FaultSchedule(cfg).tamper_mix(auth[1]))
    assert [k for k, _ in run.excluded_authorities] == [2]
    _check_oracle(run, OBS)


@pytest.mark.parametrize("phase", ["setup", "upload", "aggregation"])
def test_one_authority_drop_tolerated(phase):
    cfg = small_config()
    auth = select_authorities(cfg.beacon_seed, cfg.users, cfg.authorities)
    run = run_epoch(cfg, OBS, FaultSchedule(cfg).drop_authority(auth[3], phase))
    _check_oracle(run, [o for o in OBS if phase == "aggregation" or o.user != auth[3]])


def test_two_drops_abort():
    cfg = small_config()
    auth = select_authorities(cfg.beacon_seed, cfg.users, cfg.authorities)
    faults = FaultSchedule(cfg).drop_authority(auth[0]).drop_authority(auth[2])
    with pytest.raises(InsufficientSharesError, match="need 3, have 2"):
        run_epoch(cfg, OBS, faults)


def test_fault_schedule_rejects_unknown_parties():
    cfg = small_config()
    auth = set(select_authorities(cfg.beacon_seed, cfg.users, cfg.authorities))
    plain_user = next(u for u in range(cfg.users) if u not in auth)
    with pytest.raises(ConfigError):
        FaultSchedule(cfg).tamper_mix(plain_user)
    with pytest.raises(ConfigError):
        FaultSchedule(cfg).malform_ballot(99, "vote_two")
    with pytest.raises(ConfigError):
        FaultSchedule(cfg).malform_ballot(1, "nonsense")
    with pytest.raises(ConfigError):
        fault_inject(FaultSchedule(cfg), "explode", 1)


def test_determinism_and_parallel():
    cfg = small_config(seed=11)
    a = run_epoch(cfg, OBS)
    b = run_epoch(cfg, OBS)
    c = run_epoch(cfg, OBS, parallel=True)
    ta = dumps(a.transcript())
    assert ta == dumps(b.transcript()) == dumps(c.transcript())
    assert a.report == b.report == c.report
    assert dumps(run_epoch(small_config(seed=12), OBS).transcript()) != ta


def test_transcript_is_oblivious():
    # the public log carries no location or speed in the clear, and every
    # ballot has the same shape whichever cell the user voted for
    cfg = small_config()
    run = run_epoch(cfg, OBS)
    for env in run.transcript()["envelopes"]:
        text = json.dumps(env.get("payload", {}))
        for word in ("road", "speed", "value", "segment"):
            assert f'"{word}"' not in text
    shapes = {
        (len(e.payload["ballot"]), len(e.payload["ballot"][0])) for e in run.bus.public("ballot")
    }
    assert shapes == {(2, 3)}


def test_phase_safety():
    bus = Bus("aggregation")
    with pytest.raises(ProtocolError):
        bus.post(1, "upload", "ballot", {})
    with pytest.raises(ProtocolError):
        bus.advance("upload")
    state = PhaseState("aggregation", [1], 0)
    with pytest.raises(ProtocolError):
        state.advance("setup")
