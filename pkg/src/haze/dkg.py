"""Dealerless key generation with Feldman-verified Shamir dealings.

Every authority deals a random degree ``t-1`` polynomial; receivers check
their evaluation against the dealer's coefficient commitments. Any dealer
with a rejected share is excluded, the rest form the qualified set, and each
authority's key share is the sum of the evaluations it received from
qualified dealers.
"""

from dataclasses import dataclass

from .encoding import from_hex, hex_int
from .errors import ConfigError, DkgFailure, ProtocolError
from .group import PublicKey
from .threshold import KeyShare


@dataclass(frozen=True)
class Dealing:
    dealer: int
    coeff_commitments: tuple
    shares_out: dict  # receiver index -> f(receiver)

    def commitments_json(self):
        return [hex_int(x) for x in self.coeff_commitments]


@dataclass(frozen=True)
class DkgTranscript:
    dealings: tuple
    qualified: tuple
    public_key: PublicKey
    excluded: tuple = ()

    def share_commitment(self, index):
        return public_share_commitment(
            self.public_key.params, [d.coeff_commitments for d in self.dealings if d.dealer in self.qualified], index
        )


def _eval_poly(coeffs, x, q):
    y = 0
    for a in reversed(coeffs):
        y = (y * x + a) % q
    return y


def feldman_eval(params, commitments, j):
    """``prod_i C_i^(j^i)``, which equals ``g^f(j)`` for an honest dealing."""
    acc = 1
    e = 1
    for C in commitments:
        acc = acc * params.exp(C, e) % params.p
        e = e * j % params.q
    return acc


def deal(params, dealer, n, t, rng=None):
    if not 1 <= t <= n:
        raise ConfigError(f"threshold t={t} must satisfy 1 <= t <= A={n}")
    coeffs = [params.random_scalar(rng) for _ in range(t)]
    commitments = tuple(params.exp(params.g, a) for a in coeffs)
    shares = {j: _eval_poly(coeffs, j, params.q) for j in range(1, n + 1)}
    return Dealing(dealer, commitments, shares)


def verify_dealing(params, dealing, receiver, t=None):
    """True iff the receiver's share matches the commitments."""
    commitments = dealing.coeff_commitments
    if not commitments or (t is not None and len(commitments) != t):
        return False
    if receiver not in dealing.shares_out:
        return False
    s = dealing.shares_out[receiver]
    if not 0 <= s < params.q:
        return False
    if not all(params.is_element(C) for C in commitments):
        return False
    return params.exp(params.g, s) == feldman_eval(params, commitments, receiver)


def public_share_commitment(params, commitment_lists, index):
    """``g^{s_index}`` computed from public commitments only."""
    acc = 1
    for commitments in commitment_lists:
        acc = acc * feldman_eval(params, commitments, index) % params.p
    return acc


def finalize(params, dealings, n, t, verdicts=None):
    """Fold a complete dealing set into a transcript and per-authority shares.

    ``verdicts`` maps ``(receiver, dealer) -> bool``; when omitted every
    receiver in ``1..n`` checks every dealing here.
    """
    seen = set()
    for d in dealings:
        if d.dealer in seen:
            raise ProtocolError(f"dealer {d.dealer} contributed more than one dealing")
        seen.add(d.dealer)

    excluded = []
    qualified = []
    for d in sorted(dealings, key=lambda d: d.dealer):
        ok = all(
            verdicts[(j, d.dealer)] if verdicts is not None and (j, d.dealer) in verdicts
            else verify_dealing(params, d, j, t)
            for j in range(1, n + 1)
        )
        (qualified if ok else excluded).append(d.dealer)

    if len(qualified) < t:
        raise DkgFailure(qualified, excluded, t)

    by_dealer = {d.dealer: d for d in dealings}
    h = 1
    for k in qualified:
        h = h * by_dealer[k].coeff_commitments[0] % params.p
    pk = PublicKey(params, h)

    shares = {}
    for j in range(1, n + 1):
        s = sum(by_dealer[k].shares_out[j] for k in qualified) % params.q
        shares[j] = KeyShare(j, s, params.exp(params.g, s))

    transcript = DkgTranscript(
        dealings=tuple(by_dealer[k] for k in sorted(by_dealer)),
        qualified=tuple(qualified),
        public_key=pk,
        excluded=tuple(excluded),
    )
    return transcript, shares


def commitments_from_json(obj):
    return tuple(from_hex(x) for x in obj)
