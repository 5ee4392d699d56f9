"""Command-line front end: run scenarios, audit transcripts, play demos.

A scenario config is a JSON object (see ScenarioConfig). `run` simulates
it and writes transcript.jsonl / report.json / config.json into the
output directory; everything written is byte-deterministic for a fixed
(config, seed). `audit` re-derives the key material from the config and
replays every recorded decision from the wire data alone, failing on any
inconsistency. `demo` runs a named built-in config and audits its own
output.

Exit codes: 0 scenario behaved as expected / audit passed, 1 verdict or
audit failure, 2 configuration or usage problems.
"""

import argparse
import json
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from .adversary import (
    MODE_SIMULTANEOUS,
    MODE_TWO_STAGE,
    VictimPlan,
    run_harn_impersonation,
    run_xia_attack,
)
from .algebra import derive_rng, residue_digest
from .channel import (
    ADVERSARY_ID,
    AdversaryAPI,
    AdversaryPolicy,
    ChannelSimulator,
    Envelope,
    REASON_HASH_MISMATCH,
    REASON_QUORUM,
    REASON_SESSION_EXHAUSTED,
    ROUND_COMMITMENT,
    ROUND_INVITATION,
    ROUND_TOKEN,
    Transcript,
    decode_json_hex,
    decode_residue_hex,
    encode_residue_hex,
)
from .errors import AuditFailure, ConfigError, GroupAuthError
from .harn2013 import SCHEME_TAG as HARN_TAG
from .harn2013 import harn_gm_init
from .parties import HarnParty, XiaParty
from .xia2019 import SCHEME_TAG as XIA_TAG
from .xia2019 import xia_gm_init

SCENARIO_HONEST = "honest"
SCENARIO_TAMPER = "tamper"
SCENARIO_QUORUM = "quorum-violation"
SCENARIO_IMPERSONATION = "impersonation"
SCENARIO_SIMULTANEOUS = "impersonation-simultaneous"
SCENARIO_TWO_VICTIMS = "impersonation-two-victims"

SCENARIOS = (
    SCENARIO_HONEST,
    SCENARIO_TAMPER,
    SCENARIO_QUORUM,
    SCENARIO_IMPERSONATION,
    SCENARIO_SIMULTANEOUS,
    SCENARIO_TWO_VICTIMS,
)
ATTACK_SCENARIOS = (
    SCENARIO_IMPERSONATION, SCENARIO_SIMULTANEOUS, SCENARIO_TWO_VICTIMS,
)
SCHEMES = (HARN_TAG, XIA_TAG)


# ---------------------------------------------------------------------------
# configuration


@dataclass
class ScenarioConfig:
    """Everything needed to reproduce one simulated run."""

    scheme: str
    scenario: str
    n: int
    t: int
    ell: int = 1
    prime_bits: int = 128
    seed: int = 0
    session: int = 1
    group: tuple | None = None
    observed_group: tuple | None = None
    fake_group: tuple | None = None
    victim: int | None = None
    second_victim: int | None = None
    second_fake_group: tuple | None = None
    replay_member: int | None = None
    tamper_target: int | None = None

    def __post_init__(self):
        for name in ("group", "observed_group", "fake_group",
                     "second_fake_group"):
            value = getattr(self, name)
            if value is not None:
                setattr(self, name, tuple(sorted(int(i) for i in value)))
        self._validate()

    # -- validation ----------------------------------------------------------

    def _validate(self) -> None:
        if self.scheme not in SCHEMES:
            raise ConfigError("unknown scheme %r; pick one of %s"
                              % (self.scheme, ", ".join(SCHEMES)))
        if self.scenario not in SCENARIOS:
            raise ConfigError("unknown scenario %r; pick one of %s"
                              % (self.scenario, ", ".join(SCENARIOS)))
        if self.n < 2 or not 2 <= self.t <= self.n:
            raise ConfigError("need n >= 2 and 2 <= t <= n")
        if self.ell < 1:
            raise ConfigError("need at least one session index")
        if self.prime_bits < 16:
            raise ConfigError("prime_bits below 16 is not supported")
        if self.session < 1:
            raise ConfigError("session indices start at 1")
        if self.scheme == XIA_TAG and self.session > self.ell:
            raise ConfigError("session %d exceeds the %d issued session "
                              "indices" % (self.session, self.ell))
        if self.scheme == HARN_TAG and self.scenario in (
                SCENARIO_SIMULTANEOUS, SCENARIO_TWO_VICTIMS):
            raise ConfigError(
                "scenario %r needs per-session generators and is specific "
                "to the masked-product scheme" % self.scenario
            )
        if self.scenario in ATTACK_SCENARIOS:
            self._validate_attack()
        else:
            self._validate_plain()

    def _validate_plain(self) -> None:
        for name in ("observed_group", "fake_group", "second_victim",
                     "second_fake_group", "replay_member"):
            if getattr(self, name) is not None:
                raise ConfigError("%s only applies to attack scenarios"
                                  % name)
        if self.group is None:
            if self.scenario == SCENARIO_QUORUM:
                self.group = tuple(range(1, self.t))
            else:
                self.group = tuple(range(1, self.n + 1))
        self._check_ids("group", self.group)
        if self.scenario == SCENARIO_QUORUM:
            if len(self.group) >= self.t:
                raise ConfigError("quorum-violation group must stay below "
                                  "the threshold %d" % self.t)
        elif len(self.group) < self.t:
            raise ConfigError("group of %d cannot reach the threshold %d"
                              % (len(self.group), self.t))
        if self.scenario == SCENARIO_TAMPER:
            if len(self.group) < 2:
                raise ConfigError("tampering needs at least two members")
            if self.victim is None:
                self.victim = min(self.group)
            if self.tamper_target is None:
                self.tamper_target = max(self.group)
            if self.victim not in self.group:
                raise ConfigError("tamper victim must sit in the group")
            if self.tamper_target not in self.group:
                raise ConfigError("tamper target must sit in the group")
            if self.tamper_target == self.victim:
                raise ConfigError("tamper target and victim must differ")
        elif self.tamper_target is not None or self.victim is not None:
            raise ConfigError("victim/tamper_target only apply to tamper "
                              "and attack scenarios")

    def _validate_attack(self) -> None:
        if self.group is not None:
            raise ConfigError("attack scenarios take observed_group and "
                              "fake_group, not group")
        if self.tamper_target is not None:
            raise ConfigError("tamper_target only applies to the tamper "
                              "scenario")
        if self.observed_group is None or self.fake_group is None \
                or self.victim is None:
            raise ConfigError("attack scenarios need observed_group, "
                              "fake_group and victim")
        self._check_ids("observed_group", self.observed_group)
        self._check_ids("fake_group", self.fake_group)
        if len(self.observed_group) < self.t:
            raise ConfigError("observed_group cannot reach the threshold, "
                              "so there is nothing to observe")
        for fake, victim in self._plans_raw():
            self._check_ids("fake_group", fake)
            if victim not in fake:
                raise ConfigError("victim %d must appear in its fabricated "
                                  "group" % victim)
            if victim in self.observed_group:
                raise ConfigError("victim %d may not sit in the observed "
                                  "group" % victim)
            if len(fake) < self.t:
                raise ConfigError("fabricated group of %d would be rejected "
                                  "below the threshold %d"
                                  % (len(fake), self.t))
        if self.scenario == SCENARIO_TWO_VICTIMS:
            if self.second_victim is None or self.second_fake_group is None:
                raise ConfigError("two-victim runs need second_victim and "
                                  "second_fake_group")
            if self.second_victim == self.victim:
                raise ConfigError("the two victims must differ")
        elif self.second_victim is not None \
                or self.second_fake_group is not None:
            raise ConfigError("second_victim/second_fake_group only apply "
                              "to the two-victim scenario")
        if self.replay_member is not None:
            if self.scheme != XIA_TAG or self.scenario not in (
                    SCENARIO_IMPERSONATION, SCENARIO_SIMULTANEOUS):
                raise ConfigError("replay_member only applies to single-"
                                  "victim masked-product attacks")
            usable = set(self.observed_group) & (
                set(self.fake_group) - {self.victim}
            )
            if self.replay_member not in usable:
                raise ConfigError("replay_member must be an observed member "
                                  "reused inside the fabricated group")

    def _plans_raw(self):
        plans = [(self.fake_group, self.victim)]
        if self.scenario == SCENARIO_TWO_VICTIMS \
                and self.second_fake_group is not None \
                and self.second_victim is not None:
            plans.append((self.second_fake_group, self.second_victim))
        return plans

    def _check_ids(self, name: str, ids) -> None:
        if not ids:
            raise ConfigError("%s must not be empty" % name)
        if len(set(ids)) != len(ids):
            raise ConfigError("%s contains duplicates" % name)
        if not all(1 <= i <= self.n for i in ids):
            raise ConfigError("%s must draw from parties 1..%d"
                              % (name, self.n))

    # -- (de)serialisation ----------------------------------------------------

    @classmethod
    def from_json(cls, raw: dict) -> "ScenarioConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError("unknown config keys: %s" % ", ".join(unknown))
        missing = [k for k in ("scheme", "scenario", "n", "t") if k not in raw]
        if missing:
            raise ConfigError("config is missing: %s" % ", ".join(missing))
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc))

    def to_json(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out

    # -- derived facts ---------------------------------------------------------

    def fake_session(self) -> int:
        """Session id the victim is lured into."""
        if self.scheme == HARN_TAG:
            return self.session + 1  # a fresh run id
        return self.session  # same index: that is what makes it work

    def victims(self) -> tuple:
        if self.scenario == SCENARIO_TAMPER:
            return (self.victim,)
        if self.scenario in ATTACK_SCENARIOS:
            out = [self.victim]
            if self.second_victim is not None:
                out.append(self.second_victim)
            return tuple(out)
        return ()


def load_config(path: Path, seed=None, prime_bits=None) -> ScenarioConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc))
    except json.JSONDecodeError as exc:
        raise ConfigError("config %s is not valid JSON: %s" % (path, exc))
    if not isinstance(raw, dict):
        raise ConfigError("config %s must hold a JSON object" % path)
    if seed is not None:
        raw["seed"] = seed
    if prime_bits is not None:
        raw["prime_bits"] = prime_bits
    return ScenarioConfig.from_json(raw)


# ---------------------------------------------------------------------------
# scenario execution


class TamperScript:
    """Owns one blocked link and forwards it, corrupting the token round.

    The victim sees a token nudged off the true value (sum: +1; product:
    multiplied by the session generator so it stays inside the subgroup);
    everyone else sees the genuine broadcast.
    """

    def __init__(self, scheme: str, session: int, target: int, victim: int,
                 modulus: int, generator=None):
        self.scheme = scheme
        self.session = session
        self.target = target
        self.victim = victim
        self.modulus = modulus
        self.generator = generator

    def on_start(self, api: AdversaryAPI) -> None:
        pass

    def on_tap(self, envelope: Envelope, api: AdversaryAPI) -> None:
        if envelope.claimed_sender != self.target:
            return
        if envelope.session != (self.scheme, self.session):
            return
        payload = envelope.payload
        if envelope.round == ROUND_TOKEN:
            value = decode_residue_hex(payload, self.modulus)
            if self.generator is None:
                value = (value + 1) % self.modulus
            else:
                value = value * self.generator.value % self.modulus
            payload = encode_residue_hex(value, self.modulus)
        api.inject(
            Envelope(claimed_sender=self.target, session=envelope.session,
                     round=envelope.round, payload=payload),
            recipients=[self.victim],
        )


def derive_material(config: ScenarioConfig) -> tuple:
    """(public material, credentials, secret) for the configured scheme."""
    if config.scheme == HARN_TAG:
        return harn_gm_init(config.n, config.t, prime_bits=config.prime_bits,
                            rng_seed=config.seed)
    return xia_gm_init(config.n, config.t, ell=config.ell,
                       prime_bits=config.prime_bits, rng_seed=config.seed)


def _modulus(config: ScenarioConfig, material) -> int:
    if config.scheme == HARN_TAG:
        return material.params.prime
    return material.group.p


def _run_plain(config: ScenarioConfig, material, credentials) -> Transcript:
    policy = None
    script = None
    if config.scenario == SCENARIO_TAMPER:
        policy = AdversaryPolicy(
            blocked_links={(config.tamper_target, config.victim)}, tap=True
        )
        generator = None
        if config.scheme == XIA_TAG:
            generator = material.generator_for(config.session)
        script = TamperScript(
            config.scheme, config.session, config.tamper_target,
            config.victim, _modulus(config, material), generator,
        )
    sim = ChannelSimulator(policy=policy)
    parties = {}
    apis = {}
    for credential in credentials:
        pid = credential.owner.value
        if config.scheme == HARN_TAG:
            party = HarnParty(pid, credential, material)
        else:
            party = XiaParty(pid, credential, material,
                             derive_rng(config.seed, "party", pid))
        parties[pid] = party
        apis[pid] = sim.register(party)
    if script is not None:
        adv_api = sim.register_adversary(script)
        script.on_start(adv_api)
    initiator = min(config.group)
    parties[initiator].initiate(config.group, config.session,
                                apis[initiator])
    return sim.run_until_quiescent()


def _run_attack(config: ScenarioConfig, material, credentials) -> tuple:
    if config.scheme == HARN_TAG:
        transcript, outcome = run_harn_impersonation(
            material, credentials, observed_group=config.observed_group,
            fake_group=config.fake_group, victim=config.victim,
            seed=config.seed, observed_run=config.session,
            fake_run=config.fake_session(),
        )
        return transcript, [outcome]
    plans = [VictimPlan(victim=config.victim, fake_group=config.fake_group,
                        session=config.session,
                        replay_member=config.replay_member)]
    if config.scenario == SCENARIO_TWO_VICTIMS:
        plans.append(VictimPlan(victim=config.second_victim,
                                fake_group=config.second_fake_group,
                                session=config.session))
    mode = (MODE_TWO_STAGE if config.scenario == SCENARIO_IMPERSONATION
            else MODE_SIMULTANEOUS)
    return run_xia_attack(
        material, credentials, observed_group=config.observed_group,
        plans=plans, seed=config.seed, observed_session=config.session,
        mode=mode,
    )


def expected_forged_count(config: ScenarioConfig) -> int:
    """How many envelopes the scenario's adversary injects."""
    if config.scenario in (SCENARIO_HONEST, SCENARIO_QUORUM):
        return 0
    if config.scenario == SCENARIO_TAMPER:
        forwarded = 1  # the token round
        if config.scheme == XIA_TAG:
            forwarded += 1  # the commitment round
        if config.tamper_target == min(config.group):
            forwarded += 1  # the invitation
        return forwarded
    per_plan = []
    for fake, _ in config._plans_raw():
        m = len(fake)
        per_plan.append(m if config.scheme == HARN_TAG else 2 * m - 1)
    return sum(per_plan)


def _decision_index(transcript: Transcript) -> dict:
    index = {}
    for record in transcript.decisions():
        key = (record["party"], tuple(record["session"]))
        index.setdefault(key, record)
    return index


def scenario_checks(config: ScenarioConfig, transcript: Transcript,
                    outcomes) -> dict:
    """Named pass/fail facts defining the scenario's expected outcome."""
    checks = {}
    decisions = _decision_index(transcript)
    forged = transcript.forged()
    session_key = (config.scheme, config.session)
    checks["forged_count_matches"] = (
        len(forged) == expected_forged_count(config)
    )
    victims = set(config.victims())
    checks["forged_confined_to_victims"] = all(
        set(record["recipients"]) <= victims for record in forged
    )

    def accepted(pid, key, members) -> bool:
        record = decisions.get((pid, key))
        return bool(record and record["accepted"]
                    and record["members"] == sorted(members))

    def rejected(pid, key, reason) -> bool:
        record = decisions.get((pid, key))
        return bool(record and not record["accepted"]
                    and record["reason"] == reason)

    if config.scenario == SCENARIO_HONEST:
        checks["all_members_accept"] = all(
            accepted(pid, session_key, config.group) for pid in config.group
        )
        checks["no_extra_decisions"] = len(decisions) == len(config.group)
    elif config.scenario == SCENARIO_QUORUM:
        checks["all_members_reject_quorum"] = all(
            rejected(pid, session_key, REASON_QUORUM) for pid in config.group
        )
    elif config.scenario == SCENARIO_TAMPER:
        checks["victim_rejects_hash_mismatch"] = rejected(
            config.victim, session_key, REASON_HASH_MISMATCH
        )
        checks["others_accept"] = all(
            accepted(pid, session_key, config.group)
            for pid in config.group if pid != config.victim
        )
    else:
        checks["observed_run_accepted"] = all(
            accepted(pid, session_key, config.observed_group)
            for pid in config.observed_group
        )
        checks["victims_deceived"] = bool(outcomes) and all(
            outcome.success for outcome in outcomes
        )
        checks["claimed_groups_match"] = all(
            outcome.claimed == frozenset(fake)
            for outcome, (fake, _) in zip(outcomes, config._plans_raw())
        )
    return checks


def run_scenario(config: ScenarioConfig) -> tuple:
    """Simulate the configured scenario; returns (transcript, report)."""
    material, credentials, _ = derive_material(config)
    outcomes = []
    if config.scenario in ATTACK_SCENARIOS:
        transcript, outcomes = _run_attack(config, material, credentials)
    else:
        transcript = _run_plain(config, material, credentials)
    checks = scenario_checks(config, transcript, outcomes)
    material_facts = {
        "modulus_hex": format(_modulus(config, material), "x"),
        "parties": config.n,
        "threshold": config.t,
    }
    if config.scheme == XIA_TAG:
        material_facts["subgroup_order_hex"] = format(material.group.q, "x")
        material_facts["session_indices"] = config.ell
    report = {
        "config": config.to_json(),
        "material": material_facts,
        "counts": {
            "envelopes": len(transcript.envelopes()),
            "forged": len(transcript.forged()),
            "decisions": len(transcript.decisions()),
        },
        "decisions": transcript.decisions(),
        "outcomes": [outcome.to_json() for outcome in outcomes],
        "checks": checks,
        "verdict": "expected" if all(checks.values()) else "unexpected",
    }
    return transcript, report


def write_outputs(transcript: Transcript, report: dict,
                  config: ScenarioConfig, out_dir: Path) -> list:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    transcript.write_jsonl(out_dir / "transcript.jsonl")
    (out_dir / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n"
    )
    (out_dir / "config.json").write_text(
        json.dumps(config.to_json(), indent=2, sort_keys=True) + "\n"
    )
    return ["transcript.jsonl", "report.json", "config.json"]


# ---------------------------------------------------------------------------
# transcript audit: replay every decision from wire data alone


class _ReplaySession:
    def __init__(self, view, own_token):
        self.view = view
        self.commitments = set()
        self.tokens = {}
        self.own_token = own_token
        self.await_tokens = False
        self.decided = False


def _own_broadcast_value(inbox, pid, session, round_, modulus):
    for record in inbox:
        if (record["true_origin"] == pid
                and record["claimed_sender"] == pid
                and tuple(record["session"]) == session
                and record["round"] == round_):
            return decode_residue_hex(record["payload_hex"], modulus)
    return None


def _parse_invitation_record(record, session_id):
    try:
        body = decode_json_hex(record["payload_hex"])
        group_ids = tuple(sorted(int(i) for i in body["group"]))
        session = int(body["session"])
    except (GroupAuthError, KeyError, TypeError, ValueError):
        return None
    if session != session_id or not group_ids:
        return None
    if len(set(group_ids)) != len(group_ids):
        return None
    return group_ids


def _replay_party(pid: int, transcript: Transcript,
                  config: ScenarioConfig, material) -> list:
    """Decisions party pid must have reached, given only what it saw.

    Mirrors the honest adapters: first-seen invitation per session fixes
    the view, contributions are first-wins per claimed sender and ignored
    unless well-formed, and the aggregate digest decides. A party's own
    contributions enter at the moment it provably broadcast them.
    """
    scheme = config.scheme
    modulus = _modulus(config, material)
    threshold = config.t
    known = set(range(1, config.n + 1))
    inbox = [
        record for record in transcript.envelopes()
        if pid in record["recipients"]
        or (record["true_origin"] == pid
            and record["claimed_sender"] == pid)
    ]
    sessions = {}
    used = set()
    out = []

    def verify(session_id: int, state: _ReplaySession) -> None:
        if state.decided or set(state.tokens) != set(state.view):
            return
        state.decided = True
        if scheme == HARN_TAG:
            aggregate = sum(state.tokens[i] for i in state.view) % modulus
            expected = material.secret_hash
        else:
            aggregate = 1
            for i in state.view:
                aggregate = aggregate * state.tokens[i] % modulus
            expected = material.hash_for(session_id)
        if residue_digest(aggregate, modulus) == expected:
            out.append((session_id, True, set(state.view), None))
        else:
            out.append((session_id, False, None, REASON_HASH_MISMATCH))

    def commitments_complete(session_id: int, state: _ReplaySession) -> None:
        if state.decided or state.await_tokens:
            return
        if state.commitments != set(state.view):
            return
        if len(state.view) < threshold:
            state.decided = True
            out.append((session_id, False, None, REASON_QUORUM))
            return
        state.await_tokens = True
        if state.own_token is not None:
            state.tokens[pid] = state.own_token
        verify(session_id, state)

    for record in inbox:
        scheme_tag, session_id = record["session"]
        if scheme_tag != scheme:
            continue
        session = (scheme, session_id)
        round_ = record["round"]
        if round_ == ROUND_INVITATION:
            group_ids = _parse_invitation_record(record, session_id)
            if group_ids is None or session_id in sessions:
                continue
            if pid not in group_ids or not set(group_ids) <= known:
                continue
            if scheme == XIA_TAG:
                if not 1 <= session_id <= config.ell:
                    continue
                if session_id in used:
                    out.append((session_id, False, None,
                                REASON_SESSION_EXHAUSTED))
                    continue
                used.add(session_id)
                state = _ReplaySession(
                    group_ids,
                    _own_broadcast_value(inbox, pid, session, ROUND_TOKEN,
                                         modulus),
                )
                sessions[session_id] = state
                state.commitments.add(pid)
                commitments_complete(session_id, state)
            else:
                state = _ReplaySession(
                    group_ids,
                    _own_broadcast_value(inbox, pid, session, ROUND_TOKEN,
                                         modulus),
                )
                sessions[session_id] = state
                if len(group_ids) < threshold:
                    state.decided = True
                    out.append((session_id, False, None, REASON_QUORUM))
                    continue
                state.await_tokens = True
                if state.own_token is not None:
                    state.tokens[pid] = state.own_token
                verify(session_id, state)
        elif round_ == ROUND_COMMITMENT and scheme == XIA_TAG:
            state = sessions.get(session_id)
            if state is None or state.decided or state.await_tokens:
                continue
            sender = record["claimed_sender"]
            if sender not in state.view or sender in state.commitments:
                continue
            try:
                value = decode_residue_hex(record["payload_hex"], modulus)
                material.group.element(value)
            except GroupAuthError:
                continue
            state.commitments.add(sender)
            commitments_complete(session_id, state)
        elif round_ == ROUND_TOKEN:
            state = sessions.get(session_id)
            if state is None or state.decided or not state.await_tokens:
                continue
            sender = record["claimed_sender"]
            if sender not in state.view or sender in state.tokens:
                continue
            try:
                value = decode_residue_hex(record["payload_hex"], modulus)
                if scheme == XIA_TAG:
                    material.group.element(value)
            except GroupAuthError:
                continue
            state.tokens[sender] = value
            verify(session_id, state)
    return out


def audit_transcript(transcript: Transcript,
                     config: ScenarioConfig) -> dict:
    """Recompute every recorded decision and the adversary bookkeeping.

    Raises AuditFailure on the first inconsistency between the wire data
    and the recorded decisions, or on adversary activity that does not
    match the configured scenario.
    """
    material, _, _ = derive_material(config)
    problems = []
    replayed_total = 0
    for pid in range(1, config.n + 1):
        recorded = [
            (record["session"][1], record["accepted"],
             set(record["members"]) if record["members"] else None,
             record["reason"])
            for record in transcript.decisions() if record["party"] == pid
        ]
        expected = _replay_party(pid, transcript, config, material)
        replayed_total += len(expected)
        if recorded != expected:
            problems.append(
                "party %d decided %r but the wire data says %r"
                % (pid, recorded, expected)
            )
    forged = transcript.forged()
    expected_forged = expected_forged_count(config)
    if len(forged) != expected_forged:
        problems.append(
            "%d forged envelopes on the wire, scenario profile says %d"
            % (len(forged), expected_forged)
        )
    victims = set(config.victims())
    stray = [
        record["seq"] for record in forged
        if not set(record["recipients"]) <= victims
    ]
    if stray:
        problems.append(
            "forged envelopes %s reached parties other than the victims"
            % stray
        )
    checks = {
        "decisions_match_wire": replayed_total,
        "forged_count": len(forged),
    }
    if config.scenario in ATTACK_SCENARIOS:
        silent = _claimed_members_silent(transcript, config)
        checks["claimed_members_never_spoke_to_victim"] = silent
        if not silent:
            problems.append(
                "a party the victim was told about actually spoke to it"
            )
    if problems:
        raise AuditFailure("; ".join(problems))
    return checks


def _claimed_members_silent(transcript: Transcript,
                            config: ScenarioConfig) -> bool:
    """No fabricated member genuinely addressed its victim in-session."""
    fake_session = config.fake_session()
    for fake, victim in config._plans_raw():
        impersonated = set(fake) - {victim}
        for record in transcript.envelopes():
            if tuple(record["session"]) != (config.scheme, fake_session):
                continue
            if record["true_origin"] != record["claimed_sender"]:
                continue
            if record["true_origin"] in impersonated \
                    and victim in record["recipients"]:
                return False
    return True


# ---------------------------------------------------------------------------
# built-in demos


DEMOS = {
    "harn-honest": {
        "description": "token-sum scheme: three of five holders "
                       "authenticate each other",
        "config": {"scheme": HARN_TAG, "scenario": SCENARIO_HONEST,
                   "n": 5, "t": 2, "group": [1, 2, 3], "seed": 7},
    },
    "harn-tamper": {
        "description": "token-sum scheme: one corrupted link makes the "
                       "victim reject while everyone else accepts",
        "config": {"scheme": HARN_TAG, "scenario": SCENARIO_TAMPER,
                   "n": 5, "t": 2, "group": [1, 2, 3],
                   "tamper_target": 3, "victim": 1, "seed": 11},
    },
    "harn-impersonation": {
        "description": "token-sum scheme: an outside observer of one run "
                       "convinces party 4 that {4,5,6} authenticated",
        "config": {"scheme": HARN_TAG, "scenario": SCENARIO_IMPERSONATION,
                   "n": 6, "t": 2, "observed_group": [1, 2, 3],
                   "victim": 4, "fake_group": [4, 5, 6], "seed": 13},
    },
    "xia-honest": {
        "description": "masked-product scheme: all five holders "
                       "authenticate in session 1 of 2",
        "config": {"scheme": XIA_TAG, "scenario": SCENARIO_HONEST,
                   "n": 5, "t": 3, "ell": 2, "seed": 17},
    },
    "xia-quorum": {
        "description": "masked-product scheme: two members below the "
                       "threshold of three give up",
        "config": {"scheme": XIA_TAG, "scenario": SCENARIO_QUORUM,
                   "n": 5, "t": 3, "ell": 1, "group": [1, 2], "seed": 19},
    },
    "xia-impersonation": {
        "description": "masked-product scheme: a credential-less channel "
                       "owner replays session 1's power at party 4",
        "config": {"scheme": XIA_TAG, "scenario": SCENARIO_IMPERSONATION,
                   "n": 6, "t": 3, "ell": 1, "observed_group": [1, 2, 3],
                   "victim": 4, "fake_group": [4, 5, 6], "seed": 23},
    },
    "xia-simultaneous": {
        "description": "masked-product scheme: the fabricated session "
                       "runs interleaved with the observed one",
        "config": {"scheme": XIA_TAG, "scenario": SCENARIO_SIMULTANEOUS,
                   "n": 6, "t": 3, "ell": 1, "observed_group": [1, 2, 3],
                   "victim": 4, "fake_group": [4, 5, 6], "seed": 29},
    },
    "xia-two-victims": {
        "description": "masked-product scheme: parties 4 and 5 are fed "
                       "contradictory groups from one observed run",
        "config": {"scheme": XIA_TAG, "scenario": SCENARIO_TWO_VICTIMS,
                   "n": 8, "t": 2, "ell": 1, "observed_group": [1, 2],
                   "victim": 4, "fake_group": [4, 6, 7],
                   "second_victim": 5, "second_fake_group": [5, 6, 8],
                   "seed": 31},
    },
}


# ---------------------------------------------------------------------------
# command implementations


def _print_report_summary(report: dict) -> None:
    config = report["config"]
    print("scenario %s/%s: %d parties, threshold %d, %d-bit modulus, seed %d"
          % (config["scheme"], config["scenario"], config["n"], config["t"],
             config["prime_bits"], config["seed"]))
    for record in report["decisions"]:
        session = record["session"]
        if record["accepted"]:
            verdict = "accepts members %s" % record["members"]
        else:
            verdict = "rejects (%s)" % record["reason"]
        print("  party %d, %s session %d: %s"
              % (record["party"], session[0], session[1], verdict))
    for outcome in report["outcomes"]:
        print("  victim %d: success=%s claimed=%s ground-truth=%s"
              % (outcome["victim"], outcome["success"], outcome["claimed"],
                 outcome["ground_truth"]))
    counts = report["counts"]
    print("envelopes: %d total, %d forged; decisions: %d"
          % (counts["envelopes"], counts["forged"], counts["decisions"]))
    for name, value in sorted(report["checks"].items()):
        print("  check %s: %s" % (name, "ok" if value else "FAILED"))
    print("verdict: %s" % report["verdict"])


def _cmd_run(args) -> int:
    config = load_config(args.config, args.seed, args.prime_bits)
    transcript, report = run_scenario(config)
    out_dir = Path(args.out_dir) if args.out_dir else Path("groupauth-out")
    written = write_outputs(transcript, report, config, out_dir)
    _print_report_summary(report)
    print("wrote %s under %s" % (", ".join(written), out_dir))
    return 0 if report["verdict"] == "expected" else 1


def _cmd_audit(args) -> int:
    config = load_config(args.config, args.seed, args.prime_bits)
    try:
        transcript = Transcript.read_jsonl(Path(args.transcript))
    except OSError as exc:
        raise ConfigError("cannot read transcript %s: %s"
                          % (args.transcript, exc))
    try:
        checks = audit_transcript(transcript, config)
    except GroupAuthError as exc:
        print("audit: FAIL")
        print("  %s" % exc)
        return 1
    print("audit: %d decisions replayed from wire data, all match"
          % checks["decisions_match_wire"])
    print("audit: %d forged envelopes, matching the %s profile"
          % (checks["forged_count"], config.scenario))
    if "claimed_members_never_spoke_to_victim" in checks:
        print("audit: no impersonated party ever addressed its victim")
    print("audit: PASS")
    return 0


def _cmd_demo(args) -> int:
    if args.list or args.name is None:
        width = max(len(name) for name in DEMOS)
        for name, entry in sorted(DEMOS.items()):
            print("%-*s  %s" % (width, name, entry["description"]))
        return 0 if args.list else 2
    entry = DEMOS.get(args.name)
    if entry is None:
        print("unknown demo %r; run `groupauth demo --list`" % args.name,
              file=sys.stderr)
        return 2
    raw = dict(entry["config"])
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.prime_bits is not None:
        raw["prime_bits"] = args.prime_bits
    config = ScenarioConfig.from_json(raw)
    print("# %s" % entry["description"])
    transcript, report = run_scenario(config)
    out_dir = (Path(args.out_dir) if args.out_dir
               else Path("groupauth-demos") / args.name)
    write_outputs(transcript, report, config, out_dir)
    _print_report_summary(report)
    print("wrote transcript.jsonl, report.json, config.json under %s"
          % out_dir)
    reread = Transcript.read_jsonl(out_dir / "transcript.jsonl")
    try:
        audit_transcript(reread, config)
    except GroupAuthError as exc:
        print("audit: FAIL (%s)" % exc)
        return 1
    print("audit: PASS (every decision recomputed from the wire record)")
    return 0 if report["verdict"] == "expected" else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groupauth",
        description="simulate, attack and audit threshold group "
                    "authentication runs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_dir=True):
        p.add_argument("--seed", type=int, default=None,
                       help="override the config's seed")
        p.add_argument("--prime-bits", type=int, default=None,
                       help="override the config's modulus size")
        if out_dir:
            p.add_argument("--out-dir", default=None,
                           help="directory for transcript and report")

    run_p = sub.add_parser("run", help="simulate a scenario config")
    run_p.add_argument("config", help="path to a scenario JSON file")
    common(run_p)
    run_p.set_defaults(func=_cmd_run)

    audit_p = sub.add_parser(
        "audit", help="replay a transcript's decisions from wire data"
    )
    audit_p.add_argument("transcript", help="path to a transcript.jsonl")
    audit_p.add_argument("config", help="path to the scenario JSON file")
    common(audit_p, out_dir=False)
    audit_p.set_defaults(func=_cmd_audit)

    demo_p = sub.add_parser("demo", help="run a built-in scenario")
    demo_p.add_argument("name", nargs="?", help="demo name")
    demo_p.add_argument("--list", action="store_true",
                        help="list available demos")
    common(demo_p)
    demo_p.set_defaults(func=_cmd_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    except GroupAuthError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    entrypoint()
