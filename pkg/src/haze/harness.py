"""Traffic data, epoch execution and precision/recall evaluation.

Oracle mode replaces the cryptography by its plaintext equivalent (exact
tallies plus one uniform draw from the noise set per cell), which is what the
protocol computes; crypto mode runs the full protocol.
"""

import csv
import json
import logging
import os
from bisect import bisect_left
from dataclasses import dataclass, field, replace

import numpy as np

from .encoding import derive_rng
from .errors import ConfigError, HazeError
from .protocol import ProtocolConfig, UserObservation, plaintext_tallies, run_epoch
from .tally import StatReport, build_noise_set

log = logging.getLogger(__name__)

CSV_HEADER = ["user_id", "timestamp", "segment_id", "speed_mph"]


class IngestError(HazeError):
    """A trajectory file with no usable rows."""

    def __init__(self, path, diagnostics):
        self.diagnostics = list(diagnostics)
        head = "; ".join(self.diagnostics[:5])
        super().__init__(f"{path}: no valid records ({head})")


@dataclass(frozen=True, order=True)
class TrajectoryRecord:
    timestamp: float
    user: int
    segment: int
    speed: float


def ingest_csv(path, roads=None, errors=None):
    """Read ``user_id,timestamp,segment_id,speed_mph`` rows.

    Bad rows are skipped and described in ``errors`` (if a list is given);
    the file only fails as a whole when nothing valid remains.
    """
    diagnostics = [] if errors is None else errors
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            diagnostics.append("empty file")
            raise IngestError(path, diagnostics)
        if [h.strip() for h in header] != CSV_HEADER:
            diagnostics.append(f"line 1: expected header {','.join(CSV_HEADER)}")
            raise IngestError(path, diagnostics)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                user, ts, seg, speed = row
                rec = TrajectoryRecord(float(ts), int(user), int(seg), float(speed))
            except ValueError:
                diagnostics.append(f"line {lineno}: unparseable row {row!r}")
                continue
            if rec.speed < 0 or not np.isfinite(rec.speed):
                diagnostics.append(f"line {lineno}: negative speed {rec.speed}")
                continue
            if rec.segment < 0 or (roads is not None and rec.segment >= roads):
                diagnostics.append(f"line {lineno}: segment {rec.segment} out of range")
                continue
            records.append(rec)
    if not records:
        raise IngestError(path, diagnostics)
    for msg in diagnostics:
        log.warning("%s: %s", path, msg)
    return records


def write_csv(records, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow([r.user, f"{r.timestamp:.3f}", r.segment, f"{r.speed:.2f}"])


@dataclass(frozen=True)
class Congested:
    segment: int
    fraction: float


def synth_traffic(config, seed, profile="uniform", windows=100, window_seconds=60.0,
                  trip_seconds=(20.0, 90.0), ping_seconds=15.0):
    """Synthetic trajectories for ``config.users`` drivers over ``windows`` windows.

    Each driver makes one trip on one segment, pinging every ``ping_seconds``.
    Trip starts follow a rush-hour ramp (density rising over the horizon), so
    per-window counts sweep from light to heavy traffic. ``uniform`` spreads
    drivers over segments with free-flow speeds; ``Congested(segment,
    fraction)`` puts that fraction of drivers on ``segment`` at low speed.
    """
    if isinstance(profile, tuple) and profile and profile[0] == "congested":
        profile = Congested(*profile[1:])
    if isinstance(profile, Congested) and not 0 <= profile.segment < config.roads:
        raise ConfigError(f"congested segment {profile.segment} outside [0, {config.roads})")
    rng = np.random.default_rng(derive_rng(seed, "synth").getrandbits(64))
    horizon = windows * window_seconds
    m = config.users
    top = config.categories[-1][1]

    slow = np.zeros(m, dtype=bool)
    segments = rng.integers(0, config.roads, size=m)
    if isinstance(profile, Congested):
        k = int(round(profile.fraction * m))
        slow[rng.permutation(m)[:k]] = True
        segments[slow] = profile.segment
    elif profile != "uniform":
        raise ConfigError(f"unknown traffic profile {profile!r}")

    # rush-hour ramp: start density proportional to time
    starts = horizon * np.sqrt(rng.random(m))
    durations = rng.uniform(*trip_seconds, size=m)
    base_speed = np.where(slow, rng.gamma(4.0, 4.5, size=m), rng.uniform(0, top, size=m))

    records = []
    for u in range(m):
        t = starts[u]
        end = min(starts[u] + durations[u], horizon)
        while t < end:
            speed = max(0.0, base_speed[u] + rng.normal(0, 2.0))
            records.append(TrajectoryRecord(float(t), u, int(segments[u]), float(speed)))
            t += ping_seconds
    records.sort()
    return records


def observations_in(records, window):
    """Latest record per user with ``t0 <= timestamp < t1``."""
    t0, t1 = window
    if not t1 > t0:
        raise ConfigError(f"empty window {window}")
    times = [r.timestamp for r in records]
    lo, hi = bisect_left(times, t0), bisect_left(times, t1)
    latest = {}
    for r in records[lo:hi]:
        latest[r.user] = r
    return [UserObservation(u, r.segment, r.speed) for u, r in sorted(latest.items())]


@dataclass(frozen=True)
class EpochResult:
    reported: StatReport
    ground_truth: frozenset
    delta: object
    window: tuple = (0, 0)
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def precision(self):
        if not self.reported.reported:
            return 1.0
        return len(self.reported.reported & self.ground_truth) / len(self.reported.reported)

    @property
    def recall(self):
        if not self.ground_truth:
            return 1.0
        return len(self.reported.reported & self.ground_truth) / len(self.ground_truth)


def ground_truth(config, observations):
    tallies = plaintext_tallies(config, observations)
    return frozenset(
        (i, c)
        for i in range(config.roads)
        for c in range(config.n_categories)
        if tallies[i][c] >= config.thresholds[i]
    ), tallies


def epoch(records, window, config, mode="oracle", seed=0, noise=None, faults=None, epoch_id=0):
    """Run one window through the oracle or the full protocol.

    ``noise`` fixes the per-cell oracle draw, e.g. to replay the noise a
    crypto run actually used. Ground truth is exact thresholding without
    noise and is never shown to the crypto path.
    """
    obs = observations_in(records, window) if records and isinstance(records[0], TrajectoryRecord) else list(records)
    truth, tallies = ground_truth(config, obs)
    if mode == "oracle":
        noise_set = build_noise_set(config.delta)
        reported = set()
        for i in range(config.roads):
            for c in range(config.n_categories):
                if noise is not None:
                    q = noise[(i, c)]
                else:
                    q = derive_rng(seed, epoch_id, "oracle-noise", i, c).choice(noise_set.values)
                if tallies[i][c] + q >= config.thresholds[i]:
                    reported.add((i, c))
        return EpochResult(StatReport(epoch_id, frozenset(reported)), truth, config.delta, tuple(window))
    if mode == "crypto":
        cfg = replace(config, seed=seed, epoch=epoch_id)
        run = run_epoch(cfg, obs, faults)
        return EpochResult(run.report, truth, config.delta, tuple(window), {"run": run})
    raise ConfigError(f"unknown mode {mode!r}")


def windows_of(n, window_seconds=60.0, start=0.0):
    return [(start + k * window_seconds, start + (k + 1) * window_seconds) for k in range(n)]


def sweep(records, config, deltas, windows, seed=0, mode="oracle"):
    """Run every window at every delta; returns all ``EpochResult`` objects."""
    results = []
    for delta in deltas:
        cfg = replace(config, delta=delta)
        for k, w in enumerate(windows):
            results.append(epoch(records, w, cfg, mode, seed=seed, epoch_id=k))
    return results


def evaluate(results):
    """Mean precision and recall per delta, highest delta first."""
    if not results:
        raise ValueError("evaluate needs at least one epoch")
    by_delta = {}
    for r in results:
        by_delta.setdefault(r.delta, []).append(r)
    rows = []
    for delta in sorted(by_delta, reverse=True):
        group = by_delta[delta]
        rows.append({
            "delta": float(delta),
            "precision": float(np.mean([r.precision for r in group])),
            "recall": float(np.mean([r.recall for r in group])),
            "epochs": len(group),
        })
    return rows


def write_summary(rows, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["delta", "precision", "recall", "epochs"])
        w.writeheader()
        for row in rows:
            w.writerow({**row, "precision": f"{row['precision']:.6f}", "recall": f"{row['recall']:.6f}"})
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(rows, fh, indent=1, sort_keys=True)
        fh.write("\n")


def sweep_config(**overrides):
    """Single-road, three-range setup used for the precision/recall sweep."""
    base = dict(roads=1, users=4000, authorities=10, thresholds=11, delta=0.5)
    base.update(overrides)
    return ProtocolConfig(**base)
