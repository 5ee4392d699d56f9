"""Honest participant adapters: envelope handling around the state machines.

Parties are event handlers: the simulator calls on_envelope for every
delivery, and the party reacts by broadcasting protocol messages or by
recording a decision. Parties never see who really sent an envelope; they
trust claimed_sender, which is the whole point of the exercise.

Robustness rules shared by both adapters: envelopes for unknown sessions,
senders outside the active group view, duplicate contributions, and
malformed payloads are ignored rather than treated as fatal.
"""

import random
from dataclasses import dataclass, field

from .algebra import FieldElement
from .channel import (
    BeliefState,
    Envelope,
    PartyAPI,
    REASON_QUORUM,
    REASON_SESSION_EXHAUSTED,
    ROUND_COMMITMENT,
    ROUND_INVITATION,
    ROUND_TOKEN,
    decode_json_hex,
    decode_residue_hex,
    encode_json_hex,
    encode_residue_hex,
)
from .errors import GroupAuthError, InsufficientQuorum, SessionExhausted
from .harn2013 import (
    SCHEME_TAG as HARN_TAG,
    HarnCredential,
    HarnPublicBundle,
    HarnToken,
    harn_compute_token,
    harn_verify,
)
from .xia2019 import (
    SCHEME_TAG as XIA_TAG,
    XiaCredential,
    XiaParams,
    XiaToken,
    xia_commit,
    xia_compute_token,
    xia_verify,
)


def invitation_envelope(scheme: str, inviter: int, session: int,
                        group_ids) -> Envelope:
    """In-band, unauthenticated session announcement."""
    return Envelope(
        claimed_sender=inviter,
        session=(scheme, session),
        round=ROUND_INVITATION,
        payload=encode_json_hex(
            {"group": sorted(int(i) for i in group_ids), "session": session}
        ),
    )


def parse_invitation(envelope: Envelope) -> tuple:
    """Return (group_ids, session) or None if structurally invalid."""
    try:
        body = decode_json_hex(envelope.payload)
        group_ids = tuple(sorted(int(i) for i in body["group"]))
        session = int(body["session"])
    except (GroupAuthError, KeyError, TypeError, ValueError):
        return None
    if session != envelope.session[1] or not group_ids:
        return None
    if len(set(group_ids)) != len(group_ids):
        return None
    return group_ids, session


@dataclass
class _HarnRun:
    group_view: tuple
    tokens: dict = field(default_factory=dict)
    decided: bool = False


class HarnParty:
    """Honest participant for the token-sum scheme.

    On an invitation that names it, the party immediately releases its
    token (no commitment round exists) and then waits for one token per
    listed member before verifying the sum.
    """

    def __init__(self, party_id: int, credential: HarnCredential,
                 bundle: HarnPublicBundle):
        self.party_id = party_id
        self.credential = credential
        self.bundle = bundle
        self.runs = {}

    def initiate(self, group_ids, run_id: int, api: PartyAPI) -> None:
        api.broadcast(
            invitation_envelope(HARN_TAG, self.party_id, run_id, group_ids)
        )
        self._join(tuple(sorted(group_ids)), run_id, api)

    def on_envelope(self, envelope: Envelope, api: PartyAPI) -> None:
        scheme, run_id = envelope.session
        if scheme != HARN_TAG:
            return
        if envelope.round == ROUND_INVITATION:
            parsed = parse_invitation(envelope)
            if parsed is None or run_id in self.runs:
                return
            group_ids, _ = parsed
            known = {x.value for x in self.bundle.params.identifiers}
            if self.party_id not in group_ids or not set(group_ids) <= known:
                return
            self._join(group_ids, run_id, api)
        elif envelope.round == ROUND_TOKEN:
            self._on_token(envelope, run_id, api)

    def _join(self, group_ids: tuple, run_id: int, api: PartyAPI) -> None:
        run = _HarnRun(group_view=group_ids)
        self.runs[run_id] = run
        try:
            token = harn_compute_token(
                self.credential, self.bundle, group_ids
            )
        except InsufficientQuorum:
            run.decided = True
            api.decide(
                (HARN_TAG, run_id),
                BeliefState(False, reason=REASON_QUORUM),
            )
            return
        run.tokens[self.party_id] = token.value
        api.broadcast(Envelope(
            claimed_sender=self.party_id,
            session=(HARN_TAG, run_id),
            round=ROUND_TOKEN,
            payload=encode_residue_hex(
                token.value.value, self.bundle.params.prime
            ),
        ))
        self._maybe_decide(run_id, api)

    def _on_token(self, envelope: Envelope, run_id: int,
                  api: PartyAPI) -> None:
        run = self.runs.get(run_id)
        if run is None or run.decided:
            return
        sender = envelope.claimed_sender
        if sender not in run.group_view or sender in run.tokens:
            return
        try:
            value = decode_residue_hex(
                envelope.payload, self.bundle.params.prime
            )
        except GroupAuthError:
            return
        run.tokens[sender] = FieldElement(value, self.bundle.params.prime)
        self._maybe_decide(run_id, api)

    def _maybe_decide(self, run_id: int, api: PartyAPI) -> None:
        run = self.runs[run_id]
        if run.decided or set(run.tokens) != set(run.group_view):
            return
        tokens = [
            HarnToken(FieldElement(i, self.bundle.params.prime), run.tokens[i])
            for i in run.group_view
        ]
        accepted, _ = harn_verify(tokens, self.bundle)
        run.decided = True
        if accepted:
            belief = BeliefState(True, members=frozenset(run.group_view))
        else:
            belief = BeliefState(False, reason="hash-mismatch")
        api.decide((HARN_TAG, run_id), belief)


class XiaParty:
    """Honest participant for the masked-product scheme.

    Invitation -> commit; all commitments in -> token; all tokens in ->
    verify. The nonce source is a party-local seeded rng so channel runs
    are reproducible.
    """

    def __init__(self, party_id: int, credential: XiaCredential,
                 params: XiaParams, rng: random.Random):
        self.party_id = party_id
        self.credential = credential
        self.params = params
        self.rng = rng
        self.sessions = {}
        self.decided = set()

    def initiate(self, group_ids, session: int, api: PartyAPI) -> None:
        api.broadcast(
            invitation_envelope(XIA_TAG, self.party_id, session, group_ids)
        )
        self._join(tuple(sorted(group_ids)), session, api)

    def on_envelope(self, envelope: Envelope, api: PartyAPI) -> None:
        scheme, session = envelope.session
        if scheme != XIA_TAG:
            return
        if envelope.round == ROUND_INVITATION:
            parsed = parse_invitation(envelope)
            if parsed is None or session in self.sessions:
                return
            group_ids, _ = parsed
            known = {x.value for x in self.params.identifiers}
            if self.party_id not in group_ids or not set(group_ids) <= known:
                return
            if not 1 <= session <= self.params.ell:
                return
            self._join(group_ids, session, api)
        elif envelope.round == ROUND_COMMITMENT:
            self._on_commitment(envelope, session, api)
        elif envelope.round == ROUND_TOKEN:
            self._on_token(envelope, session, api)

    def _join(self, group_ids: tuple, session: int, api: PartyAPI) -> None:
        try:
            state = self.credential.start_session(
                session, group_ids, self.params
            )
        except SessionExhausted:
            self.decided.add(session)
            api.decide(
                (XIA_TAG, session),
                BeliefState(False, reason=REASON_SESSION_EXHAUSTED),
            )
            return
        self.sessions[session] = state
        api.broadcast(xia_commit(state, self.rng))
        self._maybe_release_token(session, api)

    def _on_commitment(self, envelope: Envelope, session: int,
                       api: PartyAPI) -> None:
        state = self.sessions.get(session)
        if state is None or state.phase != "await-commitments":
            return
        sender = envelope.claimed_sender
        if sender not in state.group_view or sender in state.received_commitments:
            return
        try:
            value = decode_residue_hex(envelope.payload, self.params.group.p)
            element = self.params.group.element(value)
        except GroupAuthError:
            return
        state.received_commitments[sender] = element
        self._maybe_release_token(session, api)

    def _maybe_release_token(self, session: int, api: PartyAPI) -> None:
        state = self.sessions[session]
        if state.phase != "await-commitments":
            return
        if set(state.received_commitments) != set(state.group_view):
            return
        try:
            token = xia_compute_token(state, self.credential, self.params)
        except InsufficientQuorum:
            self.decided.add(session)
            api.decide(
                (XIA_TAG, session),
                BeliefState(False, reason=REASON_QUORUM),
            )
            return
        api.broadcast(Envelope(
            claimed_sender=self.party_id,
            session=(XIA_TAG, session),
            round=ROUND_TOKEN,
            payload=encode_residue_hex(
                token.value.value, self.params.group.p
            ),
        ))
        self._maybe_decide(session, api)

    def _on_token(self, envelope: Envelope, session: int,
                  api: PartyAPI) -> None:
        state = self.sessions.get(session)
        if state is None or state.phase != "await-tokens":
            return
        sender = envelope.claimed_sender
        if sender not in state.group_view or sender in state.received_tokens:
            return
        try:
            value = decode_residue_hex(envelope.payload, self.params.group.p)
            element = self.params.group.element(value)
        except GroupAuthError:
            return
        state.received_tokens[sender] = element
        self._maybe_decide(session, api)

    def _maybe_decide(self, session: int, api: PartyAPI) -> None:
        state = self.sessions[session]
        if state.phase != "await-tokens" or session in self.decided:
            return
        if set(state.received_tokens) != set(state.group_view):
            return
        tokens = [
            XiaToken(self.params.identifier(i), state.received_tokens[i])
            for i in state.group_view
        ]
        belief = xia_verify(tokens, state, self.params)
        self.decided.add(session)
        api.decide((XIA_TAG, session), belief)
