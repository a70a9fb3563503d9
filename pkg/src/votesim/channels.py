"""Communication substrate for protocol runs.

A Session owns the parties, a transcript, and a simultaneous-broadcast
transport. Private channels are perfectly authentic and confidential;
delivery is synchronous. The simultaneous-broadcast contract is
collect-then-reveal: nothing submitted to a round is observable by anyone
until every expected participant has submitted, after which the whole
round becomes public atomically (voters may read authority rounds as
passive listeners).

Two interchangeable transports realise that contract. The in-memory one
is the reference: a trusted round object that refuses to reveal early.
The commit-reveal one replaces the trusted collection with two plain
broadcast rounds, hash commitments first and openings second, which is
how the channel can be built from temporary computational assumptions.

Every message is logged with its exact payload bit length, which is what
the accounting report adds up.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, ProtocolAbort
from .wire import pack_bits

__all__ = [
    "PartyId",
    "voter",
    "authority",
    "PRIVATE",
    "SIMBROADCAST",
    "BROADCAST",
    "Event",
    "RoundRecord",
    "Transcript",
    "SimBroadcastRound",
    "Commitment",
    "make_commitment",
    "Session",
    "accounting_report",
    "AccountingReport",
]

PRIVATE = "private"
SIMBROADCAST = "simultaneous-broadcast"
BROADCAST = "broadcast"

_ROLES = ("voter", "authority")


@dataclass(frozen=True, order=True)
class PartyId:
    role: str
    index: int  # 1-based ordinal within the role

    def __post_init__(self):
        if self.role not in _ROLES:
            raise ConfigurationError(f"unknown role {self.role!r}")
        if self.index < 1:
            raise ConfigurationError("party indices are 1-based")

    def __str__(self):
        return f"{self.role}:{self.index}"

    @classmethod
    def parse(cls, text: str) -> "PartyId":
        try:
            role, index = text.split(":")
            return cls(role, int(index))
        except (ValueError, TypeError):
            raise ConfigurationError(f"cannot parse party id {text!r}") from None


def voter(index: int) -> PartyId:
    return PartyId("voter", index)


def authority(index: int) -> PartyId:
    return PartyId("authority", index)


@dataclass
class Event:
    phase: str
    kind: str
    sender: PartyId
    receivers: tuple
    bits: int
    payload: np.ndarray | None = None
    round_id: int | None = None


@dataclass
class RoundRecord:
    round_id: int
    phase: str
    participants: frozenset
    submit_indices: list = field(default_factory=list)
    revealed_at: int | None = None


class Transcript:
    """Append-only event log plus a registry of broadcast rounds."""

    def __init__(self):
        self.events: list[Event] = []
        self.rounds: dict[int, RoundRecord] = {}

    def append(self, event: Event) -> int:
        self.events.append(event)
        return len(self.events) - 1

    def view_for(self, party: PartyId) -> list:
        """Redacted copy of the log as seen by one party: bit lengths are
        always visible, payloads only on the party's own private channels
        and in revealed broadcast rounds."""
        out = []
        for ev in self.events:
            visible = False
            if ev.kind == PRIVATE:
                visible = party == ev.sender or party in ev.receivers
            else:
                record = self.rounds.get(ev.round_id)
                visible = record is None or record.revealed_at is not None
            out.append(
                Event(ev.phase, ev.kind, ev.sender, ev.receivers, ev.bits,
                      ev.payload if visible else None, ev.round_id)
            )
        return out

    def write(self, destination) -> None:
        """One line per event: phase, kind, sender, receivers, bits and,
        when recorded, the hex payload, tab-separated."""
        with open(destination, "w") as fh:
            for ev in self.events:
                fields = [
                    ev.phase,
                    ev.kind,
                    str(ev.sender),
                    ",".join(str(r) for r in ev.receivers),
                    str(ev.bits),
                ]
                if ev.payload is not None:
                    fields.append(pack_bits(ev.payload).hex())
                fh.write("\t".join(fields) + "\n")


class SimBroadcastRound:
    """One collect-then-reveal round. Submissions are invisible until the
    last expected participant has submitted."""

    COLLECTING = "collecting"
    REVEALED = "revealed"

    def __init__(self, round_id: int, phase: str, expected):
        self.round_id = round_id
        self.phase = phase
        self.expected = frozenset(expected)
        if not self.expected:
            raise ConfigurationError("a broadcast round needs participants")
        self.submissions: dict[PartyId, np.ndarray] = {}
        self.state = self.COLLECTING

    def submit(self, party: PartyId, bits) -> None:
        if self.state != self.COLLECTING:
            raise ProtocolAbort(f"round {self.round_id} already revealed")
        if party not in self.expected:
            raise ProtocolAbort(f"{party} is not a participant of round {self.round_id}", [party])
        if party in self.submissions:
            raise ProtocolAbort(f"{party} submitted twice in round {self.round_id}", [party])
        self.submissions[party] = np.asarray(bits, dtype=np.uint8).ravel()

    def observe(self, party: PartyId):
        """What `party` can read right now: nothing before the reveal."""
        if self.state != self.REVEALED:
            return None
        return dict(self.submissions)

    def reveal(self) -> dict:
        missing = self.expected - set(self.submissions)
        if missing:
            names = ", ".join(str(p) for p in sorted(missing))
            raise ProtocolAbort(f"round {self.round_id} missing submissions from {names}",
                                sorted(missing))
        self.state = self.REVEALED
        return dict(self.submissions)


_COMMIT_DOMAIN = b"votesim/simbroadcast-commit/v1"
COMMITMENT_BITS = 256
NONCE_BITS = 256


@dataclass(frozen=True)
class Commitment:
    digest: bytes

    def verify(self, round_id: int, sender: PartyId, value_bits, nonce: bytes) -> bool:
        return make_commitment(round_id, sender, value_bits, nonce) == self


def make_commitment(round_id: int, sender: PartyId, value_bits, nonce: bytes) -> Commitment:
    value_bits = np.asarray(value_bits, dtype=np.uint8).ravel()
    hasher = hashlib.sha256()
    hasher.update(_COMMIT_DOMAIN)
    hasher.update(struct.pack("<Q", round_id))
    hasher.update(str(sender).encode())
    hasher.update(b"\x00")
    hasher.update(struct.pack("<Q", value_bits.size))
    hasher.update(pack_bits(value_bits))
    hasher.update(nonce)
    return Commitment(hasher.digest())


class Session:
    """Parties, transcript, and channel operations for one protocol run.

    Single-threaded and deterministic given its seed source; distinct
    sessions are independent. record_payloads keeps full payload copies in
    the transcript (off by default; lengths are always kept).
    """

    def __init__(self, parties, transport: str = "memory", nonce_root=None,
                 record_payloads: bool = False):
        if transport not in ("memory", "commit-reveal"):
            raise ConfigurationError(f"unknown transport {transport!r}")
        if transport == "commit-reveal" and nonce_root is None:
            raise ConfigurationError("commit-reveal transport needs a nonce source")
        self.parties = tuple(sorted(parties))
        if len(set(self.parties)) != len(self.parties):
            raise ConfigurationError("duplicate party ids")
        self.transport = transport
        self.transcript = Transcript()
        self.record_payloads = record_payloads
        self._round_counter = 0
        self._nonce_sources = {}
        if nonce_root is not None:
            for party in self.parties:
                self._nonce_sources[party] = nonce_root.spawn(f"nonce/{party}")

    def _known(self, party: PartyId):
        if party not in self.parties:
            raise ConfigurationError(f"{party} is not part of this session")

    def _log(self, phase, kind, sender, receivers, bits_len, payload, round_id=None) -> int:
        return self.transcript.append(Event(
            phase, kind, sender, tuple(receivers), int(bits_len),
            payload if self.record_payloads else None, round_id,
        ))

    def send_private(self, sender: PartyId, receiver: PartyId, payload, phase: str) -> np.ndarray:
        """Deliver `payload` bits over the private authentic channel.
        Returns the delivered payload; the transcript records its length."""
        self._known(sender)
        self._known(receiver)
        payload = np.asarray(payload, dtype=np.uint8).ravel()
        self._log(phase, PRIVATE, sender, (receiver,), payload.size, payload)
        return payload

    def new_round(self, phase: str, participants) -> SimBroadcastRound:
        self._round_counter += 1
        round_ = SimBroadcastRound(self._round_counter, phase, participants)
        self.transcript.rounds[round_.round_id] = RoundRecord(
            round_.round_id, phase, round_.expected
        )
        return round_

    def simultaneous_broadcast(self, phase: str, submissions: dict, _openings=None) -> dict:
        """Run one simultaneous-broadcast round over the configured
        transport and return the revealed map.

        `_openings` is a test seam for the commit-reveal transport: a map
        of per-party values to open when they differ from what was
        committed (honest parties open what they committed).
        """
        for party in submissions:
            self._known(party)
        if self.transport == "memory":
            return self._memory_round(phase, submissions)
        return self._commit_reveal_round(phase, submissions, _openings)

    def _memory_round(self, phase, submissions) -> dict:
        round_ = self.new_round(phase, submissions.keys())
        record = self.transcript.rounds[round_.round_id]
        for party in sorted(submissions):
            round_.submit(party, submissions[party])
            idx = self._log(phase, SIMBROADCAST, party, sorted(round_.expected),
                            round_.submissions[party].size, round_.submissions[party],
                            round_.round_id)
            record.submit_indices.append(idx)
        revealed = round_.reveal()
        record.revealed_at = len(self.transcript.events)
        return revealed

    def _commit_reveal_round(self, phase, submissions, openings=None) -> dict:
        values = {p: np.asarray(v, dtype=np.uint8).ravel() for p, v in submissions.items()}
        if openings is None:
            openings = values
        participants = sorted(values)
        nonces = {p: self._nonce_sources[p].raw_bytes(NONCE_BITS // 8) for p in participants}

        commit_round = self.new_round(phase, participants)
        commit_record = self.transcript.rounds[commit_round.round_id]
        commitments = {}
        for party in participants:
            commitments[party] = make_commitment(commit_round.round_id, party,
                                                 values[party], nonces[party])
            digest_bits = np.unpackbits(np.frombuffer(commitments[party].digest, dtype=np.uint8))
            commit_round.submit(party, digest_bits)
            idx = self._log(phase, SIMBROADCAST, party, participants,
                            COMMITMENT_BITS, digest_bits, commit_round.round_id)
            commit_record.submit_indices.append(idx)
        commit_round.reveal()
        commit_record.revealed_at = len(self.transcript.events)

        open_round = self.new_round(phase, participants)
        open_record = self.transcript.rounds[open_round.round_id]
        for party in participants:
            opened = np.asarray(openings.get(party, values[party]), dtype=np.uint8).ravel()
            nonce_bits = np.unpackbits(np.frombuffer(nonces[party], dtype=np.uint8))
            open_round.submit(party, np.concatenate([opened, nonce_bits]))
            idx = self._log(phase, SIMBROADCAST, party, participants,
                            opened.size + NONCE_BITS,
                            open_round.submissions[party], open_round.round_id)
            open_record.submit_indices.append(idx)
        open_round.reveal()
        open_record.revealed_at = len(self.transcript.events)

        revealed = {}
        for party in participants:
            full = open_round.submissions[party]
            opened, nonce_bits = full[: full.size - NONCE_BITS], full[full.size - NONCE_BITS:]
            nonce = pack_bits(nonce_bits)
            if not commitments[party].verify(commit_round.round_id, party, opened, nonce):
                raise ProtocolAbort(
                    f"{party} opened a value that does not match its commitment", [party]
                )
            revealed[party] = opened
        return revealed


@dataclass
class AccountingReport:
    """Exact message/bit totals grouped by phase, channel kind, sender."""

    rows: list  # (phase, kind, party, messages, bits), sorted

    def by_phase(self) -> dict:
        out = {}
        for phase, _kind, _party, messages, bits in self.rows:
            msgs, bts = out.get(phase, (0, 0))
            out[phase] = (msgs + messages, bts + bits)
        return out

    def totals(self) -> tuple:
        return (sum(r[3] for r in self.rows), sum(r[4] for r in self.rows))

    def to_csv(self, destination=None) -> str:
        lines = ["phase,kind,party,messages,bits"]
        for phase, kind, party, messages, bits in self.rows:
            lines.append(f"{phase},{kind},{party},{messages},{bits}")
        text = "\n".join(lines) + "\n"
        if destination is not None:
            with open(destination, "w") as fh:
                fh.write(text)
        return text


def accounting_report(transcript: Transcript) -> AccountingReport:
    counter = {}
    for ev in transcript.events:
        key = (ev.phase, ev.kind, str(ev.sender))
        messages, bits = counter.get(key, (0, 0))
        counter[key] = (messages + 1, bits + ev.bits)
    rows = [(*key, *value) for key, value in sorted(counter.items())]
    return AccountingReport(rows)
