"""Prime-order subgroup arithmetic and exponential El Gamal.

Plaintexts live in the exponent: ``Enc(m; r) = (g^r, g^m h^r)``. Multiplying
ciphertexts adds plaintexts, which is all the tallying needs; plaintexts are
only ever compared for equality, never discrete-log extracted.

Group elements and scalars are plain ``int`` values; the owning
``GroupParams`` travels with ciphertexts and keys.
"""

import hashlib
import secrets
from dataclasses import dataclass
from functools import lru_cache

import gmpy2

from ._presets import PRESETS
from .encoding import frame, from_hex, hex_int
from .errors import ConfigError, ContextError, EncodingError


def powmod(base, exp, mod):
    return int(gmpy2.powmod(base, exp, mod))


@dataclass(frozen=True)
class GroupParams:
    """Order-``q`` subgroup of ``Z_p^*`` with ``p = 2qk + 1``."""

    p: int
    q: int
    k: int
    g: int
    bits: int

    def __post_init__(self):
        if self.p != 2 * self.q * self.k + 1:
            raise ConfigError("p != 2qk + 1")
        if not gmpy2.is_prime(self.q, 40) or not gmpy2.is_prime(self.p, 40):
            raise ConfigError("p and q must both be prime")
        if self.g in (0, 1) or powmod(self.g, self.q, self.p) != 1:
            raise ConfigError("g does not generate the order-q subgroup")

    def random_scalar(self, rng=None):
        rng = rng or secrets.SystemRandom()
        return rng.randrange(self.q)

    def random_nonzero_scalar(self, rng=None):
        rng = rng or secrets.SystemRandom()
        return rng.randrange(1, self.q)

    def exp(self, base, e):
        return powmod(base, e, self.p)

    def mul(self, x, y):
        return x * y % self.p

    def inv(self, x):
        return int(gmpy2.invert(x, self.p))

    def is_element(self, x):
        return 0 < x < self.p and powmod(x, self.q, self.p) == 1

    @property
    def max_plaintext(self):
        # signed range |m| < q/2
        return (self.q - 1) // 2

    def fingerprint(self):
        return hashlib.sha256(frame(self.p, self.q, self.g)).hexdigest()[:16]

    def to_bytes(self):
        return frame(self.p, self.q, self.g)


def _expand(label, nbytes):
    out = b""
    ctr = 0
    while len(out) < nbytes:
        out += hashlib.sha256(label + ctr.to_bytes(4, "big")).digest()
        ctr += 1
    return int.from_bytes(out[:nbytes], "big")


def derive_params(bits):
    """Deterministically derive ``(q, k, g)`` for a size label.

    ``q`` is the first prime after a hash-derived ``bits``-bit odd integer,
    ``k`` the smallest cofactor making ``2qk + 1`` prime, and ``g`` a
    hash-derived element raised to ``2k``.
    """
    label = b"haze-params-%d" % bits
    x = _expand(label + b"/q", bits // 8) | (1 << (bits - 1)) | 1
    q = int(gmpy2.next_prime(x))
    k = 1
    while not gmpy2.is_prime(2 * q * k + 1, 50):
        k += 1
    p = 2 * q * k + 1
    ctr = 0
    while True:
        h = _expand(label + b"/g" + ctr.to_bytes(4, "big"), (p.bit_length() + 7) // 8 + 16) % p
        g = powmod(h, 2 * k, p)
        if g != 1:
            return dict(q=q, k=k, g=g)
        ctr += 1


@lru_cache(maxsize=None)
def preset_params(bits):
    """Return the checked-in parameters for ``bits`` in {512, 1024, 2048}.

    The 512-bit preset is for tests and desk-scale simulation only.
    """
    if bits not in PRESETS:
        raise ConfigError(f"unknown group preset {bits!r}; choose from {sorted(PRESETS)}")
    c = PRESETS[bits]
    return GroupParams(p=2 * c["q"] * c["k"] + 1, q=c["q"], k=c["k"], g=c["g"], bits=bits)


def encode_exponent(params, m):
    """``g^m``; negative ``m`` maps to the inverse of ``g^|m|``."""
    if abs(m) > params.max_plaintext:
        raise EncodingError(f"plaintext {m} outside signed range |m| < q/2")
    if m >= 0:
        return powmod(params.g, m, params.p)
    return params.inv(powmod(params.g, -m, params.p))


@dataclass(frozen=True)
class PublicKey:
    params: GroupParams
    h: int

    def to_bytes(self):
        return frame(self.params, self.h)

    def to_json(self):
        return hex_int(self.h)


@dataclass(frozen=True)
class Ciphertext:
    a: int
    b: int
    params: GroupParams

    def __add__(self, other):
        return add(self, other)

    def __neg__(self):
        return negate(self)

    def __sub__(self, other):
        return add(self, negate(other))

    def to_bytes(self):
        return frame(self.a, self.b)

    def to_json(self):
        return [hex_int(self.a), hex_int(self.b)]

    @classmethod
    def from_json(cls, params, obj):
        a, b = obj
        return cls(from_hex(a), from_hex(b), params)

    def is_valid(self):
        return self.params.is_element(self.a) and self.params.is_element(self.b)


def _check_context(x, y):
    if x.params is not y.params and x.params != y.params:
        raise ContextError("operands use different group parameters")


def encrypt(pk, m, r=None, rng=None):
    """``(g^r, g^m h^r)``. With ``r=0`` the result is the public trivial encryption."""
    params = pk.params
    if r is None:
        r = params.random_scalar(rng)
    gm = encode_exponent(params, m)
    return Ciphertext(
        powmod(params.g, r, params.p),
        gm * powmod(pk.h, r, params.p) % params.p,
        params,
    )


def trivial(params, m):
    """Encryption of ``m`` with zero randomness; needs no key."""
    return Ciphertext(1, encode_exponent(params, m), params)


def add(c1, c2):
    _check_context(c1, c2)
    p = c1.params.p
    return Ciphertext(c1.a * c2.a % p, c1.b * c2.b % p, c1.params)


def negate(c):
    return Ciphertext(c.params.inv(c.a), c.params.inv(c.b), c.params)


def reencrypt(pk, c, r=None, rng=None):
    if pk.params != c.params:
        raise ContextError("ciphertext and key use different group parameters")
    return add(c, encrypt(pk, 0, r=r, rng=rng))


def identity(params):
    return Ciphertext(1, 1, params)


def hash_to_scalar(params, transcript, tag=b""):
    """Fiat-Shamir challenge in ``[0, q)`` from SHA-256 in counter mode.

    ``tag`` separates proof types; enough output is drawn that the reduction
    mod ``q`` is statistically uniform.
    """
    if isinstance(tag, str):
        tag = tag.encode()
    data = frame(tag, transcript)
    nbytes = (params.q.bit_length() + 128 + 7) // 8
    return _expand(data, nbytes) % params.q
