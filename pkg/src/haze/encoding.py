"""Canonical byte and JSON encodings.

Every integer is written big-endian with a 4-byte length prefix, and every
framed field carries its own prefix, so two different field lists can never
serialize to the same bytes.
"""

import hashlib
import json
import random


def int_bytes(x):
    if x < 0:
        raise ValueError("canonical encoding is defined for non-negative integers")
    raw = x.to_bytes((x.bit_length() + 7) // 8, "big")
    return len(raw).to_bytes(4, "big") + raw


def frame(*parts):
    """Length-prefix each part and concatenate.

    Parts may be bytes, str, int, or anything with a ``to_bytes()`` method
    (group objects). Nested lists/tuples are framed recursively.
    """
    out = bytearray()
    for part in parts:
        if isinstance(part, bool):
            part = int(part)
        if isinstance(part, int):
            chunk = int_bytes(part)
        elif isinstance(part, str):
            chunk = part.encode("utf8")
        elif isinstance(part, (bytes, bytearray)):
            chunk = bytes(part)
        elif isinstance(part, (list, tuple)):
            chunk = len(part).to_bytes(4, "big") + frame(*part)
        else:
            chunk = part.to_bytes()
        out += len(chunk).to_bytes(4, "big")
        out += chunk
    return bytes(out)


def hex_int(x):
    return format(x, "x")


def from_hex(s):
    return int(s, 16)


def dumps(obj):
    """Stable JSON: sorted keys, fixed separators, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=1, separators=(",", ": ")) + "\n"


def derive_rng(seed, *labels):
    """A ``random.Random`` seeded from ``seed`` and a label path.

    Streams for different labels are independent, so the order in which
    parties draw randomness never affects another party's stream.
    """
    digest = hashlib.sha256(frame(str(seed), *[str(x) for x in labels])).digest()
    return random.Random(int.from_bytes(digest, "big"))
