"""Config validation, scenario verdicts, transcript audits, exit codes,
and byte-determinism of the command-line front end."""

import json

import pytest

from groupauth.channel import Transcript
from groupauth.cli import (
    DEMOS,
    SCENARIO_HONEST,
    SCENARIO_IMPERSONATION,
    SCENARIO_QUORUM,
    SCENARIO_SIMULTANEOUS,
    SCENARIO_TAMPER,
    SCENARIO_TWO_VICTIMS,
    ScenarioConfig,
    audit_transcript,
    expected_forged_count,
    load_config,
    main,
    run_scenario,
)
from groupauth.errors import AuditFailure, ConfigError

BITS = 64  # keep the suite quick; the CLI default is larger


def config_for(**overrides) -> ScenarioConfig:
    raw = {"scheme": "harn2013", "scenario": SCENARIO_HONEST,
           "n": 5, "t": 2, "prime_bits": BITS, "seed": 5}
    raw.update(overrides)
    return ScenarioConfig.from_json(raw)


# ---------------------------------------------------------------------------
# configuration validation


def test_defaults_fill_in():
    config = config_for()
    assert config.group == (1, 2, 3, 4, 5)
    assert config.session == 1
    assert config.prime_bits == BITS


def test_quorum_group_defaults_below_threshold():
    config = config_for(scenario=SCENARIO_QUORUM, t=3)
    assert config.group == (1, 2)


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown config keys"):
        config_for(tyop=1)


def test_missing_required_keys_rejected():
    with pytest.raises(ConfigError, match="missing"):
        ScenarioConfig.from_json({"scheme": "harn2013"})


@pytest.mark.parametrize("overrides, message", [
    ({"scheme": "other"}, "unknown scheme"),
    ({"scenario": "other"}, "unknown scenario"),
    ({"t": 1}, "2 <= t <= n"),
    ({"t": 9}, "2 <= t <= n"),
    ({"prime_bits": 8}, "prime_bits"),
    ({"scenario": SCENARIO_SIMULTANEOUS, "observed_group": [1, 2],
      "victim": 3, "fake_group": [3, 4]}, "masked-product"),
    ({"scenario": SCENARIO_TWO_VICTIMS, "observed_group": [1, 2],
      "victim": 3, "fake_group": [3, 4], "second_victim": 5,
      "second_fake_group": [4, 5]}, "masked-product"),
    ({"group": [1, 1, 2]}, "duplicates"),
    ({"group": [0, 1]}, "draw from parties"),
    ({"group": [4, 5, 6]}, "draw from parties|group"),
    ({"scenario": SCENARIO_QUORUM, "group": [1, 2, 3]}, "below"),
    ({"group": [1]}, "threshold"),
    ({"fake_group": [1, 2]}, "attack scenarios"),
    ({"victim": 2}, "tamper"),
    ({"scenario": SCENARIO_TAMPER, "victim": 1, "tamper_target": 1},
     "must differ"),
    ({"scenario": SCENARIO_TAMPER, "victim": 1, "tamper_target": 5,
      "group": [1, 2, 3]}, "target must sit"),
])
def test_invalid_plain_configs(overrides, message):
    with pytest.raises(ConfigError, match=message):
        config_for(**overrides)


@pytest.mark.parametrize("overrides, message", [
    ({}, "need observed_group"),
    ({"observed_group": [1, 2], "fake_group": [3, 4]}, "need observed"),
    ({"observed_group": [1, 2], "victim": 3, "fake_group": [4, 5]},
     "must appear in its fabricated group"),
    ({"observed_group": [1, 2], "victim": 1, "fake_group": [1, 4]},
     "observed group"),
    ({"observed_group": [1], "victim": 3, "fake_group": [3, 4]},
     "cannot reach the threshold"),
    ({"observed_group": [1, 2], "victim": 3, "fake_group": [3]},
     "below the threshold"),
    ({"observed_group": [1, 2], "victim": 3, "fake_group": [3, 4],
      "group": [1, 2]}, "not group"),
    ({"observed_group": [1, 2], "victim": 3, "fake_group": [3, 4],
      "replay_member": 4}, "replay_member"),
])
def test_invalid_attack_configs(overrides, message):
    with pytest.raises(ConfigError, match=message):
        config_for(scenario=SCENARIO_IMPERSONATION, **overrides)


def test_harn_replay_member_rejected():
    with pytest.raises(ConfigError, match="replay_member"):
        config_for(scenario=SCENARIO_IMPERSONATION, n=6,
                   observed_group=[1, 2, 3], victim=4,
                   fake_group=[3, 4, 5], replay_member=3)


def test_xia_session_must_be_issued():
    with pytest.raises(ConfigError, match="session"):
        config_for(scheme="xia2019", t=3, ell=1, session=2)


def test_config_round_trips_through_json():
    config = config_for(scenario=SCENARIO_IMPERSONATION, n=6,
                        observed_group=[1, 2, 3], victim=4,
                        fake_group=[4, 5, 6])
    again = ScenarioConfig.from_json(config.to_json())
    assert again == config


# ---------------------------------------------------------------------------
# forged-envelope profiles


@pytest.mark.parametrize("overrides, expected", [
    ({}, 0),
    ({"scenario": SCENARIO_QUORUM, "group": [1]}, 0),
    ({"scenario": SCENARIO_TAMPER, "group": [1, 2, 3]}, 1),
    ({"scenario": SCENARIO_TAMPER, "group": [1, 2, 3],
      "tamper_target": 1, "victim": 2}, 2),
    ({"scenario": SCENARIO_IMPERSONATION, "n": 6,
      "observed_group": [1, 2, 3], "victim": 4,
      "fake_group": [4, 5, 6]}, 3),
])
def test_expected_forged_count_harn(overrides, expected):
    assert expected_forged_count(config_for(**overrides)) == expected


@pytest.mark.parametrize("overrides, expected", [
    ({"scenario": SCENARIO_TAMPER, "group": [1, 2, 3], "t": 2}, 2),
    ({"scenario": SCENARIO_IMPERSONATION, "n": 6, "t": 3,
      "observed_group": [1, 2, 3], "victim": 4,
      "fake_group": [4, 5, 6]}, 5),
    ({"scenario": SCENARIO_TWO_VICTIMS, "n": 8, "t": 2,
      "observed_group": [1, 2], "victim": 4, "fake_group": [4, 6, 7],
      "second_victim": 5, "second_fake_group": [5, 6, 8]}, 10),
])
def test_expected_forged_count_xia(overrides, expected):
    config = config_for(scheme="xia2019", **overrides)
    assert expected_forged_count(config) == expected


# ---------------------------------------------------------------------------
# scenario verdicts (in-process)


@pytest.mark.parametrize("scheme, extra", [
    ("harn2013", {}),
    ("xia2019", {"t": 3, "ell": 2, "session": 2}),
])
def test_honest_scenarios_behave(scheme, extra):
    config = config_for(scheme=scheme, **extra)
    transcript, report = run_scenario(config)
    assert report["verdict"] == "expected"
    assert report["counts"]["forged"] == 0
    assert audit_transcript(transcript, config)


@pytest.mark.parametrize("scheme, extra", [
    ("harn2013", {"t": 3}),
    ("xia2019", {"t": 3}),
])
def test_quorum_scenarios_reject(scheme, extra):
    config = config_for(scheme=scheme, scenario=SCENARIO_QUORUM, **extra)
    transcript, report = run_scenario(config)
    assert report["verdict"] == "expected"
    reasons = {record["reason"] for record in report["decisions"]}
    assert reasons == {"quorum"}
    assert audit_transcript(transcript, config)


@pytest.mark.parametrize("scheme, forged", [
    ("harn2013", 1),
    ("xia2019", 2),
])
def test_tamper_scenarios_isolate_the_victim(scheme, forged):
    config = config_for(scheme=scheme, scenario=SCENARIO_TAMPER,
                        group=[1, 2, 3], t=2)
    transcript, report = run_scenario(config)
    assert report["verdict"] == "expected"
    assert report["counts"]["forged"] == forged
    by_party = {record["party"]: record for record in report["decisions"]}
    assert not by_party[1]["accepted"]
    assert by_party[1]["reason"] == "hash-mismatch"
    assert by_party[2]["accepted"] and by_party[3]["accepted"]
    assert audit_transcript(transcript, config)


def test_tamper_forwards_the_invitation_when_target_initiates():
    config = config_for(scenario=SCENARIO_TAMPER, group=[1, 2, 3],
                        tamper_target=1, victim=2)
    transcript, report = run_scenario(config)
    assert report["verdict"] == "expected"
    assert report["counts"]["forged"] == 2
    assert audit_transcript(transcript, config)


@pytest.mark.parametrize("scheme", ["harn2013", "xia2019"])
def test_impersonation_scenarios_deceive_the_victim(scheme):
    config = config_for(scheme=scheme, scenario=SCENARIO_IMPERSONATION,
                        n=6, t=2, observed_group=[1, 2, 3], victim=4,
                        fake_group=[4, 5, 6])
    transcript, report = run_scenario(config)
    assert report["verdict"] == "expected"
    outcome = report["outcomes"][0]
    assert outcome["success"]
    assert outcome["claimed"] == [4, 5, 6]
    assert outcome["ground_truth"] == [4]
    assert audit_transcript(transcript, config)


def test_two_victim_scenario_produces_conflicting_beliefs():
    config = config_for(scheme="xia2019", scenario=SCENARIO_TWO_VICTIMS,
                        n=8, t=2, observed_group=[1, 2], victim=4,
                        fake_group=[4, 6, 7], second_victim=5,
                        second_fake_group=[5, 6, 8])
    transcript, report = run_scenario(config)
    assert report["verdict"] == "expected"
    claims = {o["victim"]: o["claimed"] for o in report["outcomes"]}
    assert claims == {4: [4, 6, 7], 5: [5, 6, 8]}
    assert audit_transcript(transcript, config)


def test_replay_member_scenario_succeeds():
    config = config_for(scheme="xia2019", scenario=SCENARIO_IMPERSONATION,
                        n=6, t=2, observed_group=[1, 2, 3], victim=4,
                        fake_group=[3, 4, 5], replay_member=3)
    transcript, report = run_scenario(config)
    assert report["verdict"] == "expected"
    assert audit_transcript(transcript, config)


# ---------------------------------------------------------------------------
# audit failures


def attack_config():
    return config_for(scheme="xia2019", scenario=SCENARIO_IMPERSONATION,
                      n=6, t=3, observed_group=[1, 2, 3], victim=4,
                      fake_group=[4, 5, 6])


def test_audit_rejects_corrupted_payload(tmp_path):
    config = attack_config()
    transcript, _ = run_scenario(config)
    path = tmp_path / "transcript.jsonl"
    transcript.write_jsonl(path)
    lines = path.read_text().splitlines()
    for i, line in enumerate(lines):
        record = json.loads(line)
        if record.get("round") == "token":
            payload = record["payload_hex"]
            record["payload_hex"] = (
                ("0" if payload[0] != "0" else "1") + payload[1:]
            )
            lines[i] = json.dumps(record, sort_keys=True,
                                  separators=(",", ":"))
            break
    path.write_text("\n".join(lines) + "\n")
    doctored = Transcript.read_jsonl(path)
    with pytest.raises(AuditFailure):
        audit_transcript(doctored, config)


def test_audit_rejects_dropped_decision():
    config = attack_config()
    transcript, _ = run_scenario(config)
    pruned = Transcript(records=[
        record for record in transcript.records
        if not (record["type"] == "decision" and record["party"] == 4)
    ])
    with pytest.raises(AuditFailure, match="party 4"):
        audit_transcript(pruned, config)


def test_audit_rejects_wrong_scenario_profile():
    honest = config_for(scheme="xia2019", t=3, group=[1, 2, 3], n=6)
    transcript, _ = run_scenario(honest)
    claimed_tamper = config_for(scheme="xia2019", t=3, n=6,
                                scenario=SCENARIO_TAMPER, group=[1, 2, 3])
    with pytest.raises(AuditFailure, match="forged"):
        audit_transcript(transcript, claimed_tamper)


# ---------------------------------------------------------------------------
# command-line entry


def write_config(tmp_path, **overrides):
    raw = {"scheme": "harn2013", "scenario": SCENARIO_HONEST,
           "n": 5, "t": 2, "prime_bits": BITS, "seed": 5}
    raw.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(raw))
    return path


def test_run_command_writes_outputs(tmp_path, capsys):
    config_path = write_config(tmp_path)
    out_dir = tmp_path / "out"
    assert main(["run", str(config_path), "--out-dir", str(out_dir)]) == 0
    for name in ("transcript.jsonl", "report.json", "config.json"):
        assert (out_dir / name).exists()
    stdout = capsys.readouterr().out
    assert "verdict: expected" in stdout


def test_run_command_is_byte_deterministic(tmp_path):
    config_path = write_config(
        tmp_path, scheme="xia2019", t=3, scenario=SCENARIO_IMPERSONATION,
        n=6, observed_group=[1, 2, 3], victim=4, fake_group=[4, 5, 6],
    )
    first = tmp_path / "a"
    second = tmp_path / "b"
    assert main(["run", str(config_path), "--out-dir", str(first)]) == 0
    assert main(["run", str(config_path), "--out-dir", str(second)]) == 0
    for name in ("transcript.jsonl", "report.json", "config.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_run_command_seed_override_changes_material(tmp_path):
    config_path = write_config(tmp_path)
    first = tmp_path / "a"
    second = tmp_path / "b"
    assert main(["run", str(config_path), "--out-dir", str(first)]) == 0
    assert main(["run", str(config_path), "--out-dir", str(second),
                 "--seed", "6"]) == 0
    assert ((first / "transcript.jsonl").read_bytes()
            != (second / "transcript.jsonl").read_bytes())
    echoed = json.loads((second / "config.json").read_text())
    assert echoed["seed"] == 6


def test_audit_command_round_trip(tmp_path, capsys):
    config_path = write_config(tmp_path)
    out_dir = tmp_path / "out"
    assert main(["run", str(config_path), "--out-dir", str(out_dir)]) == 0
    capsys.readouterr()
    code = main(["audit", str(out_dir / "transcript.jsonl"),
                 str(out_dir / "config.json")])
    assert code == 0
    assert "audit: PASS" in capsys.readouterr().out


def test_audit_command_fails_on_truncated_transcript(tmp_path, capsys):
    config_path = write_config(tmp_path)
    out_dir = tmp_path / "out"
    assert main(["run", str(config_path), "--out-dir", str(out_dir)]) == 0
    transcript_path = out_dir / "transcript.jsonl"
    text = transcript_path.read_text().splitlines(True)
    (out_dir / "cut.jsonl").write_text(
        "".join(text[:-1]) + text[-1][: len(text[-1]) // 2]
    )
    code = main(["audit", str(out_dir / "cut.jsonl"),
                 str(out_dir / "config.json")])
    assert code == 1


def test_audit_command_fails_on_doctored_decision(tmp_path, capsys):
    config_path = write_config(tmp_path)
    out_dir = tmp_path / "out"
    assert main(["run", str(config_path), "--out-dir", str(out_dir)]) == 0
    transcript_path = out_dir / "transcript.jsonl"
    lines = transcript_path.read_text().splitlines()
    doctored = []
    for line in lines:
        record = json.loads(line)
        if record["type"] == "decision" and record["party"] == 2:
            record["accepted"] = False
            record["members"] = None
            record["reason"] = "hash-mismatch"
        doctored.append(json.dumps(record, sort_keys=True,
                                   separators=(",", ":")))
    transcript_path.write_text("\n".join(doctored) + "\n")
    capsys.readouterr()
    code = main(["audit", str(transcript_path),
                 str(out_dir / "config.json")])
    assert code == 1
    assert "audit: FAIL" in capsys.readouterr().out


def test_missing_config_file_is_usage_error(tmp_path):
    assert main(["run", str(tmp_path / "nope.json")]) == 2


def test_invalid_config_is_usage_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"scheme": "harn2013"}))
    assert main(["run", str(path)]) == 2


def test_no_subcommand_is_usage_error(capsys):
    assert main([]) == 2
    capsys.readouterr()


def test_demo_list_names_every_demo(capsys):
    assert main(["demo", "--list"]) == 0
    stdout = capsys.readouterr().out
    for name in DEMOS:
        assert name in stdout


def test_demo_unknown_name_is_usage_error(capsys):
    assert main(["demo", "not-a-demo"]) == 2
    capsys.readouterr()


@pytest.mark.parametrize("name", sorted(DEMOS))
def test_every_demo_runs_and_audits(name, tmp_path, capsys):
    code = main(["demo", name, "--out-dir", str(tmp_path / name),
                 "--prime-bits", str(BITS)])
    stdout = capsys.readouterr().out
    assert code == 0, stdout
    assert "verdict: expected" in stdout
    assert "audit: PASS" in stdout


def test_load_config_applies_overrides(tmp_path):
    path = write_config(tmp_path, seed=1, prime_bits=64)
    config = load_config(path, seed=2, prime_bits=32)
    assert config.seed == 2
    assert config.prime_bits == 32