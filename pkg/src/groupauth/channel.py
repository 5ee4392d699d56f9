"""Adversary-controlled broadcast channel with deterministic delivery.

The simulator is a single-threaded event queue. Honest parties broadcast
envelopes; a registered adversary may tap every send, block configured
links, and inject envelopes with any claimed sender to any recipient set.
Messages carry no transport authentication, so a forged envelope is
indistinguishable from a genuine one at the receiving party.

Delivery is asynchronous in the adversary's favour: taps fire at send
time, and reactions enqueue after everything already pending, so the
adversary can always speak last within a round. Every send and every
decision is appended to a JSONL-serialisable transcript that records both
the claimed sender and the true origin.
"""

import json
from dataclasses import dataclass, field, replace

from .errors import (
    MalformedTranscript,
    SimulationDiverged,
    UnknownParty,
)

ROUND_INVITATION = "invitation"
ROUND_COMMITMENT = "commitment"
ROUND_TOKEN = "token"

ADVERSARY_ID = 0
WILDCARD = "*"

REASON_QUORUM = "quorum"
REASON_HASH_MISMATCH = "hash-mismatch"
REASON_SESSION_EXHAUSTED = "session-exhausted"


# ---------------------------------------------------------------------------
# wire encoding helpers


def hex_width(modulus: int) -> int:
    """Fixed hex-digit width for residues mod `modulus`."""
    return (modulus.bit_length() + 3) // 4


def encode_residue_hex(value: int, modulus: int) -> str:
    """Lowercase fixed-width hex of a canonical residue."""
    if not 0 <= value < modulus:
        raise ValueError("value is not a canonical residue")
    return format(value, "0%dx" % hex_width(modulus))


def decode_residue_hex(text: str, modulus: int) -> int:
    """Inverse of encode_residue_hex; width and range are enforced."""
    if len(text) != hex_width(modulus) or text != text.lower():
        raise MalformedTranscript("bad residue encoding %r" % text)
    try:
        value = int(text, 16)
    except ValueError as exc:
        raise MalformedTranscript("bad residue encoding %r" % text) from exc
    if value >= modulus:
        raise MalformedTranscript("residue %d out of range" % value)
    return value


def encode_json_hex(obj) -> str:
    """Canonical JSON, utf-8, hex; used for structured payloads."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return blob.encode("utf-8").hex()


def decode_json_hex(text: str):
    try:
        return json.loads(bytes.fromhex(text).decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise MalformedTranscript("bad structured payload") from exc


# ---------------------------------------------------------------------------
# messages, beliefs, policy


@dataclass(frozen=True)
class Envelope:
    """One broadcast message as seen on the wire.

    claimed_sender is just a field: nothing binds it to whoever handed
    the envelope to the channel. session is (scheme tag, session id).
    seq is stamped by the channel when the envelope is accepted.
    """

    claimed_sender: int
    session: tuple
    round: str
    payload: str
    seq: int | None = None

    def with_seq(self, seq: int) -> "Envelope":
        return replace(self, seq=seq)


@dataclass(frozen=True)
class BeliefState:
    """What one participant concluded from one session."""

    accepted: bool
    members: frozenset | None = None
    reason: str | None = None

    def to_json(self) -> dict:
        return {
            "accepted": self.accepted,
            "members": sorted(self.members) if self.members else None,
            "reason": self.reason,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BeliefState":
        members = obj.get("members")
        return cls(
            accepted=bool(obj["accepted"]),
            members=frozenset(members) if members is not None else None,
            reason=obj.get("reason"),
        )


@dataclass
class AdversaryPolicy:
    """Static channel powers: link blocking and a global tap.

    blocked_links holds (sender, recipient) pairs; the sender slot may be
    the wildcard "*" to cut all honest traffic toward a recipient.
    Injected envelopes are never blocked.
    """

    blocked_links: set = field(default_factory=set)
    tap: bool = False

    def blocks(self, sender: int, recipient: int) -> bool:
        return (
            (sender, recipient) in self.blocked_links
            or (WILDCARD, recipient) in self.blocked_links
        )


# ---------------------------------------------------------------------------
# transcript


@dataclass
class Transcript:
    """Append-only log of channel activity plus party decisions."""

    records: list = field(default_factory=list)

    def append_envelope(self, envelope: Envelope, true_origin: int,
                        recipients: list) -> None:
        self.records.append({
            "type": "envelope",
            "seq": envelope.seq,
            "claimed_sender": envelope.claimed_sender,
            "true_origin": true_origin,
            "session": list(envelope.session),
            "round": envelope.round,
            "payload_hex": envelope.payload,
            "recipients": sorted(recipients),
        })

    def append_decision(self, seq: int, party: int, session: tuple,
                        belief: BeliefState) -> None:
        entry = {"type": "decision", "seq": seq, "party": party,
                 "session": list(session)}
        entry.update(belief.to_json())
        self.records.append(entry)

    def envelopes(self) -> list:
        return [r for r in self.records if r["type"] == "envelope"]

    def decisions(self) -> list:
        return [r for r in self.records if r["type"] == "decision"]

    def envelope_objects(self) -> list:
        """Rebuild Envelope values (origin information dropped)."""
        return [
            Envelope(
                claimed_sender=r["claimed_sender"],
                session=tuple(r["session"]),
                round=r["round"],
                payload=r["payload_hex"],
                seq=r["seq"],
            )
            for r in self.envelopes()
        ]

    def forged(self) -> list:
        return [
            r for r in self.envelopes()
            if r["claimed_sender"] != r["true_origin"]
        ]

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n"
            for r in self.records
        )

    def write_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(self.to_jsonl())

    @classmethod
    def read_jsonl(cls, path) -> "Transcript":
        records = []
        with open(path, "r", encoding="utf-8") as handle:
            for line_no, line in enumerate(handle, 1):
                if not line.endswith("\n"):
                    raise MalformedTranscript(
                        "truncated transcript at line %d" % line_no
                    )
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise MalformedTranscript(
                        "unparseable transcript line %d" % line_no
                    ) from exc
                if record.get("type") not in ("envelope", "decision"):
                    raise MalformedTranscript(
                        "unknown record type at line %d" % line_no
                    )
                records.append(record)
        return cls(records=records)


# ---------------------------------------------------------------------------
# simulator


class PartyAPI:
    """Capabilities handed to one honest party; binds its true origin."""

    def __init__(self, simulator: "ChannelSimulator", party_id: int):
        self._simulator = simulator
        self.party_id = party_id

    def broadcast(self, envelope: Envelope) -> None:
        self._simulator.broadcast(self.party_id, envelope)

    def decide(self, session: tuple, belief: BeliefState) -> None:
        self._simulator.record_decision(self.party_id, session, belief)


class AdversaryAPI:
    """Capabilities handed to the adversary script."""

    def __init__(self, simulator: "ChannelSimulator"):
        self._simulator = simulator
        self.adversary_id = ADVERSARY_ID

    def inject(self, envelope: Envelope, recipients) -> None:
        self._simulator.inject(envelope, recipients)


class DeliverySchedule:
    """Pending deliveries ordered by (priority, seq, enqueue order).

    An optional seeded rng shuffles the fan-out order of a single
    broadcast; with the default FIFO order transcripts are reproducible
    either way because the rng itself is seeded.
    """

    def __init__(self, rng=None, shuffle: bool = False):
        self._pending = []
        self._counter = 0
        self._rng = rng
        self._shuffle = shuffle

    def push_fanout(self, priority: int, envelope: Envelope,
                    recipients: list) -> None:
        order = list(recipients)
        if self._shuffle and self._rng is not None and len(order) > 1:
            self._rng.shuffle(order)
        for recipient in order:
            self._pending.append(
                (priority, envelope.seq, self._counter, envelope, recipient)
            )
            self._counter += 1
        self._pending.sort(key=lambda item: item[:3])

    def pop(self):
        return self._pending.pop(0)

    def __len__(self):
        return len(self._pending)


class ChannelSimulator:
    """Deterministic single-queue broadcast world."""

    def __init__(self, policy: AdversaryPolicy | None = None,
                 schedule: DeliverySchedule | None = None,
                 max_events: int = 1_000_000):
        self.policy = policy if policy is not None else AdversaryPolicy()
        self.schedule = schedule if schedule is not None else DeliverySchedule()
        self.transcript = Transcript()
        self.max_events = max_events
        self._parties = {}
        self._apis = {}
        self._adversary = None
        self._adversary_api = None
        self._seq = 0

    # -- registration ------------------------------------------------------

    def register(self, party) -> PartyAPI:
        pid = party.party_id
        if pid == ADVERSARY_ID:
            raise UnknownParty("party id 0 is reserved for the adversary")
        if pid in self._parties:
            raise UnknownParty("party %d registered twice" % pid)
        self._parties[pid] = party
        api = PartyAPI(self, pid)
        self._apis[pid] = api
        return api

    def register_adversary(self, script) -> AdversaryAPI:
        self._adversary = script
        self._adversary_api = AdversaryAPI(self)
        return self._adversary_api

    @property
    def party_ids(self) -> list:
        return sorted(self._parties)

    # -- channel operations -------------------------------------------------

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def broadcast(self, sender: int, envelope: Envelope) -> None:
        """Fan an envelope out to every registered party except the sender.

        Blocked links are dropped silently; the tap sees the envelope even
        when every delivery is blocked.
        """
        if sender not in self._parties:
            raise UnknownParty("broadcast from unregistered party %r" % sender)
        stamped = envelope.with_seq(self._next_seq())
        recipients = [
            pid for pid in self.party_ids
            if pid != sender and not self.policy.blocks(sender, pid)
        ]
        self.transcript.append_envelope(stamped, sender, recipients)
        self.schedule.push_fanout(0, stamped, recipients)
        if self.policy.tap and self._adversary is not None:
            self._adversary.on_tap(stamped, self._adversary_api)

    def inject(self, envelope: Envelope, recipients) -> None:
        """Adversary-only: deliver to an exact recipient set, unblocked."""
        if self._adversary is None:
            raise UnknownParty("no adversary registered on this channel")
        recipients = list(recipients)
        for pid in recipients:
            if pid not in self._parties:
                raise UnknownParty("cannot inject to unknown party %r" % pid)
        stamped = envelope.with_seq(self._next_seq())
        self.transcript.append_envelope(stamped, ADVERSARY_ID, recipients)
        self.schedule.push_fanout(0, stamped, recipients)

    def record_decision(self, party_id: int, session: tuple,
                        belief: BeliefState) -> None:
        self.transcript.append_decision(
            self._next_seq(), party_id, session, belief
        )

    def run_until_quiescent(self) -> Transcript:
        """Deliver queued envelopes until nothing is pending."""
        delivered = 0
        while len(self.schedule):
            if delivered >= self.max_events:
                raise SimulationDiverged(
                    "delivery budget of %d exhausted" % self.max_events
                )
            _, _, _, envelope, recipient = self.schedule.pop()
            party = self._parties.get(recipient)
            if party is None:
                continue
            party.on_envelope(envelope, self._apis[recipient])
            delivered += 1
        return self.transcript
