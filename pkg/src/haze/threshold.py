"""Threshold decryption shares, Lagrange combination, and the authority committee."""

import logging
import warnings
from dataclasses import dataclass, field

from .encoding import derive_rng, frame
from .errors import ConfigError, InsufficientSharesError
from .proofs import prove_eq_exp, verify_eq_exp

log = logging.getLogger(__name__)

DECRYPTION_TAG = b"haze/decryption-share"


def default_threshold(n_authorities):
    """Smallest strict majority: a coalition of half the authorities cannot decrypt."""
    return n_authorities // 2 + 1


def resolve_threshold(n_authorities, override=None):
    t = default_threshold(n_authorities)
    if override is None:
        return t
    if not 1 <= override <= t:
        raise ConfigError(f"threshold override {override} must be in [1, {t}]")
    if override < t:
        warnings.warn(
            f"threshold lowered to {override} (< {t}); honest-majority guarantee no longer holds",
            stacklevel=2,
        )
    return override


@dataclass(frozen=True)
class KeyShare:
    index: int
    s: int
    commitment: int  # g^s


def decryption_share(share, c, rng=None, context=b""):
    """``(a^s, proof)`` where the proof shows ``log_g(commitment) == log_a(a^s)``."""
    params = c.params
    value = params.exp(c.a, share.s)
    proof = prove_eq_exp(
        params, share.s, (params.g, c.a), (share.commitment, value), frame(DECRYPTION_TAG, share.index, context), rng
    )
    return value, proof


def verify_decryption_share(c, index, commitment, value, proof, context=b""):
    params = c.params
    return verify_eq_exp(
        params, proof, (params.g, c.a), (commitment, value), frame(DECRYPTION_TAG, index, context)
    )


def lagrange_at_zero(indices, q):
    coeffs = {}
    for i in indices:
        num, den = 1, 1
        for j in indices:
            if j != i:
                num = num * j % q
                den = den * (j - i) % q
        coeffs[i] = num * pow(den, -1, q) % q
    return coeffs


def combine_shares(c, shares, t):
    """Interpolate ``a^sk`` from ``(index, a^s_index)`` pairs and return ``b / a^sk = g^m``.

    The caller compares the result with ``encode_exponent`` or tests for the
    identity; no discrete log is taken here.
    """
    shares = dict(shares)
    if len(shares) < t:
        raise InsufficientSharesError(t, len(shares))
    params = c.params
    lam = lagrange_at_zero(sorted(shares), params.q)
    a_sk = 1
    for i, value in shares.items():
        a_sk = a_sk * params.exp(value, lam[i]) % params.p
    return c.b * params.inv(a_sk) % params.p


@dataclass
class Committee:
    """Live authorities of one epoch with their key material and duties.

    ``shares`` holds every authority's secret share because all parties run in
    one process; each share is only ever used on behalf of its own index.
    ``commitments`` are the public ``g^{s_j}`` values derived from the DKG.
    """

    pk: object
    shares: dict
    commitments: dict
    threshold: int
    live: list
    seed: object = 0
    epoch: int = 0
    bus: object = None
    rounds: int = 40
    min_rounds: int = 1
    tamperers: frozenset = frozenset()
    names: dict = field(default_factory=dict)
    excluded: list = field(default_factory=list)

    @property
    def params(self):
        return self.pk.params

    def rng_for(self, index, *labels):
        return derive_rng(self.seed, self.epoch, "authority", index, *labels)

    def name(self, index):
        return self.names.get(index, index)

    def exclude(self, index, reason):
        if index in self.live:
            self.live.remove(index)
            self.excluded.append((index, reason))
            log.info("authority %s excluded: %s", self.name(index), reason)

    def require_quorum(self, detail=""):
        if len(self.live) < self.threshold:
            raise InsufficientSharesError(self.threshold, len(self.live), detail)

    def post(self, sender, phase, kind, payload):
        if self.bus is not None:
            self.bus.post(sender, phase, kind, payload)
