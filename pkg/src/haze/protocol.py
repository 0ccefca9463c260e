"""One epoch of the protocol over the simulated server bus.

Setup selects authorities from a public beacon and runs the DKG; upload has
every user send an encrypted N x C ballot with its validity proof; aggregation
verifies and sums ballots, mixes one noise set per cell, adds the first mixed
noise to each tally and runs the inequality test per cell.

All randomness is derived from ``config.seed`` with per-party labels, so a run
is reproducible byte for byte.
"""

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction

from . import dkg
from .bus import Bus
from .encoding import derive_rng, frame, hex_int
from .errors import ConfigError, ProtocolError
from .group import encode_exponent, encrypt, preset_params
from .mixnet import DEFAULT_ROUNDS, initial_batch, run_chain
from .proofs import Ballot, BallotProof, prove_ballot, prove_votes
from .tally import (
    StatReport,
    add_noise,
    aggregate_votes,
    build_noise_set,
    candidate_lineage,
    inequality_test,
    noise_lineage,
)
from .threshold import Committee, combine_shares, resolve_threshold

log = logging.getLogger(__name__)

DEFAULT_CATEGORIES = ((0, 30), (30, 60), (60, 90))
TRANSCRIPT_FORMAT = "haze-transcript/1"

_ALIASES = {"N": "roads", "C_bounds": "categories", "T": "thresholds", "M": "users", "A": "authorities", "lambda": "rounds"}


@dataclass(frozen=True)
class ProtocolConfig:
    roads: int
    users: int
    authorities: int
    thresholds: tuple
    delta: object = Fraction(1, 2)
    categories: tuple = DEFAULT_CATEGORIES
    rounds: int = DEFAULT_ROUNDS
    min_rounds: int = 10
    group_bits: int = 512
    seed: int = 0
    beacon_seed: object = 0
    epoch: int = 0
    threshold: object = None  # only lower than the default, for tests
    upload_timeout: object = None  # ballots accepted before upload closes

    def __post_init__(self):
        thresholds = self.thresholds
        if isinstance(thresholds, int):
            thresholds = (thresholds,) * self.roads
        object.__setattr__(self, "thresholds", tuple(int(t) for t in thresholds))
        object.__setattr__(self, "categories", tuple((lo, hi) for lo, hi in self.categories))
        if isinstance(self.delta, float):
            object.__setattr__(self, "delta", Fraction(repr(self.delta)))
        elif isinstance(self.delta, str):
            object.__setattr__(self, "delta", Fraction(self.delta))
        self.validate()

    def validate(self):
        if self.roads < 1:
            raise ConfigError("need at least one road segment")
        if not self.categories:
            raise ConfigError("need at least one category")
        for (lo, hi), nxt in zip(self.categories, self.categories[1:] + ((None, None),)):
            if not lo < hi:
                raise ConfigError(f"category ({lo}, {hi}) is empty")
            if nxt[0] is not None and nxt[0] < hi:
                raise ConfigError("categories must be ordered and non-overlapping")
        if len(self.thresholds) != self.roads:
            raise ConfigError(f"{len(self.thresholds)} thresholds for {self.roads} roads")
        if any(t < 1 for t in self.thresholds):
            raise ConfigError("thresholds must be >= 1")
        if not 1 <= self.authorities <= self.users:
            raise ConfigError(f"need 1 <= A <= M, got A={self.authorities}, M={self.users}")
        if self.min_rounds < 1 or self.rounds < self.min_rounds:
            raise ConfigError(f"shuffle proof rounds {self.rounds} below minimum {self.min_rounds}")
        build_noise_set(self.delta)
        preset_params(self.group_bits)

    @property
    def n_categories(self):
        return len(self.categories)

    @property
    def decryption_threshold(self):
        return resolve_threshold(self.authorities, self.threshold)

    def category_of(self, value):
        for c, (lo, hi) in enumerate(self.categories):
            if lo <= value < hi:
                return c
        return None

    def to_dict(self):
        d = asdict(self)
        d["delta"] = str(self.delta)
        d["categories"] = [list(x) for x in self.categories]
        d["thresholds"] = list(self.thresholds)
        return d

    @classmethod
    def from_dict(cls, d):
        d = {_ALIASES.get(k, k): v for k, v in d.items()}
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class UserObservation:
    user: int
    road: int
    value: float


@dataclass
class PhaseState:
    phase: str
    live: list
    epoch: int

    def advance(self, phase, bus=None):
        order = ("setup", "upload", "aggregation", "done")
        if order.index(phase) < order.index(self.phase):
            raise ProtocolError(f"cannot go back from {self.phase} to {phase}")
        self.phase = phase
        if bus is not None:
            bus.advance(phase)


def select_authorities(beacon_seed, n_users, n_authorities):
    """Users sorted by ``SHA-256(beacon || user id)``; the first ``A`` are authorities.

    Anyone holding the beacon value can recompute the selection.
    """
    if n_authorities > n_users:
        raise ConfigError(f"cannot select {n_authorities} authorities from {n_users} users")
    key = lambda u: hashlib.sha256(frame(str(beacon_seed), u)).digest()
    return tuple(sorted(range(n_users), key=key)[:n_authorities])


MALFORM_MODES = ("vote_two", "two_roads", "two_categories", "proof_mismatch", "bad_shape")
DROP_PHASES = ("setup", "upload", "aggregation")


class FaultSchedule:
    """Deterministic misbehaviour of named parties, fixed before the run."""

    def __init__(self, config):
        self.config = config
        self.authorities = select_authorities(config.beacon_seed, config.users, config.authorities)
        self.dropped = {}  # user -> phase
        self.malformed = {}  # user -> mode
        self.tamperers = set()
        self.corrupt_dealers = set()
        self.duplicates = set()

    def _user(self, user):
        if not 0 <= user < self.config.users:
            raise ConfigError(f"unknown party {user}")
        return user

    def _authority(self, user):
        if self._user(user) not in self.authorities:
            raise ConfigError(f"party {user} is not an authority this epoch")
        return user

    def drop_authority(self, user, phase="aggregation"):
        if phase not in DROP_PHASES:
            raise ConfigError(f"unknown phase {phase!r}")
        self.dropped[self._authority(user)] = phase
        return self

    def malform_ballot(self, user, mode):
        if mode not in MALFORM_MODES:
            raise ConfigError(f"unknown malformation {mode!r}; choose from {MALFORM_MODES}")
        self.malformed[self._user(user)] = mode
        return self

    def tamper_mix(self, user):
        self.tamperers.add(self._authority(user))
        return self

    def corrupt_dealing(self, user):
        self.corrupt_dealers.add(self._authority(user))
        return self

    def duplicate_ballot(self, user):
        self.duplicates.add(self._user(user))
        return self

    def offline_in(self, phase):
        order = DROP_PHASES
        return {u for u, p in self.dropped.items() if order.index(p) <= order.index(phase)}


def fault_inject(schedule, kind, *args, **kwargs):
    """Register a fault by name: ``drop_authority``, ``malform_ballot``,
    ``tamper_mix``, ``corrupt_dealing`` or ``duplicate_ballot``."""
    kinds = ("drop_authority", "malform_ballot", "tamper_mix", "corrupt_dealing", "duplicate_ballot")
    if kind not in kinds:
        raise ConfigError(f"unknown fault kind {kind!r}")
    return getattr(schedule, kind)(*args, **kwargs)


@dataclass
class SetupResult:
    public_key: object
    shares: dict  # authority index -> KeyShare
    state: PhaseState
    dkg: object
    authorities: tuple  # user ids, index k is authorities[k - 1]
    committee: Committee


def ballot_context(epoch, user):
    return frame("ballot", epoch, user)


def run_setup(config, bus, faults=None):
    """Select authorities, run the DKG over the bus and publish the key."""
    faults = faults or FaultSchedule(config)
    params = preset_params(config.group_bits)
    authorities = select_authorities(config.beacon_seed, config.users, config.authorities)
    n = len(authorities)
    t = config.decryption_threshold
    user_of = {k: u for k, u in enumerate(authorities, start=1)}
    offline = faults.offline_in("setup")
    state = PhaseState("setup", [k for k, u in user_of.items() if u not in offline], config.epoch)

    bus.post("server", "setup", "config", config.to_dict())
    bus.post("server", "setup", "authorities", {"beacon": str(config.beacon_seed), "users": list(authorities)})

    dealings = []
    for k in state.live:
        rng = derive_rng(config.seed, config.epoch, "authority", k, "dkg")
        d = dkg.deal(params, k, n, t, rng)
        if user_of[k] in faults.corrupt_dealers:
            victim = k % n + 1
            shares = dict(d.shares_out)
            shares[victim] = (shares[victim] + 1) % params.q
            d = dkg.Dealing(d.dealer, d.coeff_commitments, shares)
        dealings.append(d)
        bus.post(user_of[k], "setup", "dkg-commitments", {"dealer": k, "commitments": d.commitments_json()})
        for j in range(1, n + 1):
            bus.post(user_of[k], "setup", "dkg-share", {"dealer": k, "share": hex_int(d.shares_out[j])}, recipient=user_of[j])

    verdicts = {}
    for j in state.live:
        mine = {}
        for env in bus.inbox(user_of[j]):
            if env.kind != "dkg-share":
                continue
            dealer = env.payload["dealer"]
            d = next(x for x in dealings if x.dealer == dealer)
            ok = dkg.verify_dealing(params, d, j, t)
            verdicts[(j, dealer)] = ok
            mine[str(dealer)] = ok
        bus.post(user_of[j], "setup", "dkg-verdicts", {"receiver": j, "accept": mine})

    transcript, shares = dkg.finalize(params, dealings, n, t, verdicts)
    pk = transcript.public_key
    commitments = {k: transcript.share_commitment(k) for k in range(1, n + 1)}
    bus.post(
        "server",
        "setup",
        "public-key",
        {"h": hex_int(pk.h), "qualified": list(transcript.qualified), "excluded": list(transcript.excluded)},
    )
    committee = Committee(
        pk=pk,
        shares=shares,
        commitments=commitments,
        threshold=t,
        live=list(state.live),
        seed=config.seed,
        epoch=config.epoch,
        bus=bus,
        rounds=config.rounds,
        min_rounds=config.min_rounds,
        tamperers=frozenset(k for k, u in user_of.items() if u in faults.tamperers),
        names=user_of,
    )
    state.advance("upload", bus)
    return SetupResult(pk, shares, state, transcript, authorities, committee)


def vote_pattern(obs, config):
    """Plaintext grid for one observation: a single 1, or all zeros to abstain."""
    grid = [[0] * config.n_categories for _ in range(config.roads)]
    c = config.category_of(obs.value)
    if c is not None:
        grid[obs.road][c] = 1
    return grid


def build_ballot(obs, pk, config, rng, epoch=None):
    """Encrypt the vote pattern of ``obs`` across all N x C cells and prove it."""
    if not 0 <= obs.road < config.roads:
        raise ConfigError(f"road {obs.road} outside [0, {config.roads})")
    epoch = config.epoch if epoch is None else epoch
    grid = vote_pattern(obs, config)
    ballot, randomness = _encrypt_grid(pk, grid, rng)
    real = next(((i, c) for i, row in enumerate(grid) for c, v in enumerate(row) if v), None)
    proof = prove_ballot(pk, ballot, real, randomness, rng, ballot_context(epoch, obs.user))
    return ballot, proof


def _encrypt_grid(pk, grid, rng):
    randomness = [[pk.params.random_scalar(rng) for _ in row] for row in grid]
    votes = tuple(tuple(encrypt(pk, m, r) for m, r in zip(row, rrow)) for row, rrow in zip(grid, randomness))
    return Ballot(votes), randomness


def _malformed_ballot(obs, pk, config, rng, mode):
    grid = vote_pattern(obs, config)
    c = config.category_of(obs.value)
    c = 0 if c is None else c
    grid[obs.road][c] = 1
    ctx = ballot_context(config.epoch, obs.user)
    if mode == "vote_two":
        grid[obs.road][c] = 2
    elif mode == "two_roads":
        grid[(obs.road + 1) % config.roads][c] = 1
    elif mode == "two_categories":
        grid[obs.road][(c + 1) % config.n_categories] = 1
    ballot, randomness = _encrypt_grid(pk, grid, rng)
    proof = prove_votes(pk, ballot, grid, randomness, rng, ctx)
    if mode == "proof_mismatch":
        other, _ = _encrypt_grid(pk, grid, rng)
        ballot = other
    elif mode == "bad_shape":
        ballot = Ballot(ballot.votes[:-1] or (ballot.votes[0][:-1],))
    return ballot, proof


def run_upload(observations, setup, config, bus, faults=None):
    """Every user sends one ballot; the server relays the first per user."""
    faults = faults or FaultSchedule(config)
    pk = setup.public_key
    offline = faults.offline_in("upload")
    order = sorted(observations, key=lambda o: o.user)
    derive_rng(config.seed, config.epoch, "interleave").shuffle(order)
    accepted_count = 0
    for obs in order:
        if obs.user in offline:
            continue
        copies = 2 if obs.user in faults.duplicates else 1
        for copy in range(copies):
            rng = derive_rng(config.seed, config.epoch, "user", obs.user, copy)
            if obs.user in faults.malformed:
                ballot, proof = _malformed_ballot(obs, pk, config, rng, faults.malformed[obs.user])
            else:
                ballot, proof = build_ballot(obs, pk, config, rng)
            if config.upload_timeout is not None and accepted_count >= config.upload_timeout:
                log.info("ballot from user %s arrived after upload closed", obs.user)
                continue
            bus.post(obs.user, "upload", "ballot", {"user": obs.user, "ballot": ballot.to_json(), "proof": proof.to_json()})
            accepted_count += 1
    setup.state.advance("aggregation", bus)
    return collect_ballots(bus, pk.params)


def collect_ballots(bus, params):
    """Ballots as relayed by the server, first submission per user."""
    seen = set()
    out = []
    for env in bus.public("ballot"):
        user = env.payload["user"]
        if user in seen or user != env.sender:
            continue
        seen.add(user)
        ballot = Ballot.from_json(params, env.payload["ballot"])
        proof = BallotProof.from_json(env.payload["proof"])
        out.append((user, ballot, proof))
    return out


def _cell_jobs(config):
    return [(i, c) for i in range(config.roads) for c in range(config.n_categories)]


def _run_cells(committee, jobs, fn, parallel):
    """Run ``fn(child_committee, job)`` per job; merge bus output in job order.

    Each job gets its own bus and live list. Exclusions from any job are
    applied afterwards, and random streams are keyed by lineage, so the
    outcome does not depend on execution order.
    """
    if not parallel:
        return [fn(committee, job) for job in jobs]

    def child():
        sub = replace(committee, live=list(committee.live), excluded=[], bus=Bus(committee.bus.phase) if committee.bus else None)
        return sub

    children = [child() for _ in jobs]
    with ThreadPoolExecutor() as pool:
        results = list(pool.map(fn, children, jobs))
    for sub in children:
        if committee.bus is not None:
            committee.bus.extend(sub.bus.log)
        for k, reason in sub.excluded:
            committee.exclude(k, reason)
    return results


@dataclass
class EpochRun:
    config: ProtocolConfig
    report: StatReport
    bus: Bus
    setup: SetupResult
    tally: object
    noised: object
    noise_batches: dict
    excluded_users: tuple = ()
    excluded_authorities: tuple = field(default_factory=tuple)

    def transcript(self):
        return {"format": TRANSCRIPT_FORMAT, "envelopes": self.bus.to_json()}


def run_aggregation(ballots, setup, config, bus, faults=None, parallel=False):
    """Verify and sum ballots, mix noise, add it, and report cells above threshold."""
    faults = faults or FaultSchedule(config)
    committee = setup.committee
    offline = faults.offline_in("aggregation")
    for k, u in committee.names.items():
        if u in offline:
            committee.exclude(k, "offline")
    committee.require_quorum("aggregation needs a strict majority of authorities")
    epoch = config.epoch
    n, cats = config.roads, config.n_categories
    pk = setup.public_key

    grid = aggregate_votes(ballots, pk, n, cats, lambda u: ballot_context(epoch, u))
    bus.post("server", "aggregation", "tally", {
        "cells": grid.to_json(),
        "excluded": [[u, why] for u, why in grid.excluded],
    })

    noise_set = build_noise_set(config.delta)

    def noise_job(comm, cell):
        batch = initial_batch(pk.params, noise_set.values, noise_lineage(epoch, *cell))
        return run_chain(batch, comm).batch

    jobs = _cell_jobs(config)
    batches = dict(zip(jobs, _run_cells(committee, jobs, noise_job, parallel)))
    noised = add_noise(grid, batches, epoch)
    bus.post("server", "aggregation", "noised-tally", {"cells": noised.to_json()})

    def report_job(comm, cell):
        i, c = cell
        return inequality_test(
            noised.cells[i][c], config.thresholds[i], noise_set.min, comm, candidate_lineage(epoch, i, c)
        )

    above = _run_cells(committee, jobs, report_job, parallel)
    report = StatReport(epoch, frozenset(cell for cell, ok in zip(jobs, above) if ok))
    bus.post("server", "aggregation", "report", report.to_json())
    setup.state.advance("done", bus)
    return report, grid, noised, batches


def run_epoch(config, observations, faults=None, parallel=False):
    """Setup, upload and aggregation for one epoch; returns everything produced."""
    faults = faults or FaultSchedule(config)
    bus = Bus("setup")
    setup = run_setup(config, bus, faults)
    ballots = run_upload(observations, setup, config, bus, faults)
    report, grid, noised, batches = run_aggregation(ballots, setup, config, bus, faults, parallel)
    return EpochRun(
        config=config,
        report=report,
        bus=bus,
        setup=setup,
        tally=grid,
        noised=noised,
        noise_batches=batches,
        excluded_users=grid.excluded,
        excluded_authorities=tuple(setup.committee.excluded),
    )


def realized_noise(run):
    """Noise added to each cell, recovered with every key share.

    Simulation-only: no party holds all shares, and the protocol never calls
    this. Tests use it to build the plaintext oracle for the same draw.
    """
    params = run.setup.public_key.params
    noise_set = build_noise_set(run.config.delta)
    lookup = {encode_exponent(params, v): v for v in noise_set.values}
    shares = run.setup.shares
    t = run.setup.committee.threshold
    out = {}
    for cell, batch in run.noise_batches.items():
        ct = batch.items[0]
        gm = combine_shares(ct, [(k, params.exp(ct.a, s.s)) for k, s in shares.items()], t)
        out[cell] = lookup[gm]
    return out


def plaintext_report(config, observations, noise, excluded_users=()):
    """Oracle: the report the protocol must produce given per-cell noise."""
    skip = {u for u, _ in excluded_users}
    tallies = plaintext_tallies(config, [o for o in observations if o.user not in skip])
    return frozenset(
        (i, c)
        for i in range(config.roads)
        for c in range(config.n_categories)
        if tallies[i][c] + noise[(i, c)] >= config.thresholds[i]
    )


def plaintext_tallies(config, observations):
    seen = set()
    grid = [[0] * config.n_categories for _ in range(config.roads)]
    for obs in observations:
        if obs.user in seen:
            continue
        seen.add(obs.user)
        c = config.category_of(obs.value)
        if c is not None:
            grid[obs.road][c] += 1
    return grid
