"""Command line: ``simulate``, ``eval-dp`` and ``verify``.

Exit codes: 0 success, 1 verification failure, 2 configuration error.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from fractions import Fraction

from . import harness
from .encoding import dumps
from .errors import ConfigError, HazeError
from .protocol import ProtocolConfig
from .tally import build_noise_set, dp_mechanism_oracle
from .transcript import load, verify_transcript

SWEEP_DELTAS = ("0.5", "0.25", "0.1")

EXAMPLE_CONFIG = """\
{
 "roads": 3, "users": 12, "authorities": 4, "thresholds": 2,
 "delta": "1/4", "rounds": 10,
 "traffic": {"profile": ["congested", 0, 0.5], "windows": 2, "window_seconds": 60}
}"""


def _load_config(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    traffic = raw.pop("traffic", {})
    return ProtocolConfig.from_dict(raw), traffic


def _records(config, traffic, seed):
    if "csv" in traffic:
        errors = []
        try:
            recs = harness.ingest_csv(traffic["csv"], roads=config.roads, errors=errors)
        except harness.IngestError as exc:
            raise ConfigError(str(exc)) from exc
        return sorted(recs)
    profile = traffic.get("profile", "uniform")
    if isinstance(profile, list):
        profile = tuple(profile)
    return harness.synth_traffic(
        config, seed, profile,
        windows=int(traffic.get("windows", 1)),
        window_seconds=float(traffic.get("window_seconds", 60.0)),
    )


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def cmd_simulate(args):
    config, traffic = _load_config(args.config)
    config = replace(config, seed=args.seed)
    known = {"csv", "profile", "windows", "window_seconds", "start"}
    if set(traffic) - known:
        raise ConfigError(f"unknown traffic fields {sorted(set(traffic) - known)}")
    records = _records(config, traffic, args.seed)
    n = int(traffic.get("windows", 1))
    width = float(traffic.get("window_seconds", 60.0))
    start = float(traffic.get("start", 0.0))
    if n < 1 or width <= 0:
        raise ConfigError("need windows >= 1 and window_seconds > 0")

    os.makedirs(args.out, exist_ok=True)
    results = []
    for k, window in enumerate(harness.windows_of(n, width, start)):
        res = harness.epoch(records, window, config, args.mode, seed=args.seed, epoch_id=k)
        results.append(res)
        edir = os.path.join(args.out, f"epoch-{k:04d}")
        os.makedirs(edir, exist_ok=True)
        _write(os.path.join(edir, "report.json"), dumps(res.reported.to_json()))
        if args.mode == "crypto":
            _write(os.path.join(edir, "transcript.json"), dumps(res.extra["run"].transcript()))
        print(f"epoch {k}: reported {sorted(res.reported.reported)} "
              f"precision {res.precision:.3f} recall {res.recall:.3f}")
    harness.write_summary(harness.evaluate(results), args.out)
    return 0


def _parse_delta(text):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad delta {text!r}") from exc


def cmd_eval_dp(args):
    if args.sweep:
        deltas = [_parse_delta(d) for d in SWEEP_DELTAS]
    elif args.delta is not None:
        deltas = [_parse_delta(args.delta)]
    else:
        raise ConfigError("give --delta D or --sweep")
    if args.trials < 1:
        raise ConfigError("--trials must be >= 1")

    # exact mechanism check over every neighbouring pair of tallies
    for d in deltas:
        ns = build_noise_set(d)
        worst = max(
            abs(dp_mechanism_oracle(s + 1, args.threshold, ns) - dp_mechanism_oracle(s, args.threshold, ns))
            for s in range(0, 3 * args.threshold + len(ns))
        )
        status = "ok" if worst <= d else "VIOLATED"
        print(f"delta {d}: noise set {ns.min}..{ns.max}, max |dP| = {worst} ({status})")

    config = harness.sweep_config(users=args.users, thresholds=args.threshold, authorities=1)
    records = harness.synth_traffic(config, args.seed, harness.Congested(0, args.fraction), windows=args.trials)
    results = harness.sweep(records, config, deltas, harness.windows_of(args.trials), seed=args.seed)
    rows = harness.evaluate(results)
    print("delta,precision,recall,epochs")
    for r in rows:
        print(f"{r['delta']},{r['precision']:.4f},{r['recall']:.4f},{r['epochs']}")
    if args.out:
        harness.write_summary(rows, args.out)
    return 0


def cmd_verify(args):
    try:
        doc = load(args.transcript)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read transcript: {exc}", file=sys.stderr)
        return 2
    problems = verify_transcript(doc)
    for p in problems:
        print(p, file=sys.stderr)
    if problems:
        return 1
    print("transcript verified")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="haze", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run epochs over synthetic or CSV traffic",
                       epilog="example config:\n" + EXAMPLE_CONFIG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("oracle", "crypto"), default="oracle")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval-dp", help="noise mechanism check and precision/recall sweep")
    p.add_argument("--delta")
    p.add_argument("--sweep", action="store_true", help=f"deltas {', '.join(SWEEP_DELTAS)}")
    p.add_argument("--users", type=int, default=4000)
    p.add_argument("--threshold", type=int, default=11)
    p.add_argument("--trials", type=int, default=200, help="one-minute windows")
    p.add_argument("--fraction", type=float, default=0.5, help="share of congested drivers")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_dp)

    p = sub.add_parser("verify", help="re-check every proof in an epoch transcript")
    p.add_argument("--transcript", required=True)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except HazeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
