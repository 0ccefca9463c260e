"""In-memory server relay.

All parties talk through the server. The server keeps an append-only log of
every envelope it relays; that log is the epoch transcript. Point-to-point
envelopes model an encrypted channel: the log keeps their metadata and a
payload digest, never the payload itself.
"""

import hashlib
from dataclasses import dataclass

from .encoding import dumps
from .errors import ProtocolError

PHASES = ("setup", "upload", "aggregation", "done")


def _canonical(payload):
    return dumps(payload).encode("utf8")


@dataclass(frozen=True)
class Envelope:
    seq: int
    sender: object
    phase: str
    kind: str
    payload: object
    recipient: object = None
    signature: str = ""

    @property
    def private(self):
        return self.recipient is not None

    def payload_bytes(self):
        return _canonical(self.payload)

    def to_json(self):
        out = {
            "seq": self.seq,
            "sender": self.sender,
            "phase": self.phase,
            "kind": self.kind,
            "signature": self.signature,
        }
        if self.private:
            out["recipient"] = self.recipient
            out["digest"] = hashlib.sha256(self.payload_bytes()).hexdigest()
        else:
            out["payload"] = self.payload
        return out


def sign_placeholder(sender, payload_bytes):
    # stands in for a certified user signature; valid by construction
    return "sig:" + hashlib.sha256(str(sender).encode() + b"|" + payload_bytes).hexdigest()[:32]


class Bus:
    """Server-relayed message log with a phase gate.

    Envelopes posted for a phase other than the current one are refused,
    which enforces "no ballot after upload closes".
    """

    def __init__(self, phase="setup"):
        self.log = []
        self.inboxes = {}
        self.phase = phase
        self.tick = 0

    def advance(self, phase):
        if PHASES.index(phase) < PHASES.index(self.phase):
            raise ProtocolError(f"phase cannot move back from {self.phase} to {phase}")
        self.phase = phase

    def post(self, sender, phase, kind, payload, recipient=None):
        if phase != self.phase:
            raise ProtocolError(f"{kind} from {sender} for phase {phase!r} refused; server is in {self.phase!r}")
        env = Envelope(
            seq=len(self.log),
            sender=sender,
            phase=phase,
            kind=kind,
            payload=payload,
            recipient=recipient,
            signature=sign_placeholder(sender, _canonical(payload)),
        )
        self.log.append(env)
        self.tick += 1
        if recipient is not None:
            self.inboxes.setdefault(recipient, []).append(env)
        return env

    def extend(self, envelopes):
        """Append envelopes recorded on a child bus, renumbering them in order."""
        for env in envelopes:
            self.post(env.sender, env.phase, env.kind, env.payload, env.recipient)

    def public(self, kind=None):
        return [e for e in self.log if not e.private and (kind is None or e.kind == kind)]

    def inbox(self, recipient):
        return list(self.inboxes.get(recipient, ()))

    def to_json(self):
        return [e.to_json() for e in self.log]
