import doctest
import pathlib

import pytest

import apprentice

ROOT = pathlib.Path(__file__).resolve().parents[2]


def test_module_doctest():
    failures, _ = doctest.testmod(apprentice)
    assert failures == 0


def test_bundled_script_teaches_onion_soup():
    result = apprentice.run_script(apprentice.bundled_script())
    assert result["ok"], result["failure"]
    assert sorted(result["metrics"]["milestones"]) == sorted(
        ["PickedUpOnion", "OnionInPot", "PotTurnedOn", "SoupPlated", "SoupDelivered"]
    )


def test_failed_expectation_reports_line():
    result = apprentice.run_script("say Go to the onion.\nexpect_milestone SoupDelivered\n",
                                   {"confirmations": False})
    assert not result["ok"]
    assert result["line"] == 2


def test_session_dialog_and_undo():
    s = apprentice.Session({"confirmations": False})
    events = s.say("Get an onion.")
    assert s.mode == "awaiting_definition"
    assert events[-1]["type"] == "agent_message"
    assert events[-1]["text"] == "How do I get an onion?"

    s.say("Go to the onion and press space.")
    assert s.knowledge_names() == ["moveTo", "pressSpace", "get"]
    assert "PickedUpOnion" in s.metrics["milestones"]

    s.undo()
    assert s.knowledge_names() == ["moveTo", "pressSpace"]
    assert s.mode == "awaiting_definition"
    assert s.metrics["undos"] == 1


def test_confirmations_and_corrections():
    s = apprentice.Session()
    s.say("Go to the onion.")
    assert s.pending["kind"] == "segmentation"
    s.correct(["go to the tomato"])
    assert s.pending["kind"] == "mapping"
    events = s.correct("flyTo")
    assert any(e["type"] == "error" and e["code"] == "invalid_correction" for e in events)
    s.approve()
    assert s.pending["kind"] == "grounding"
    assert s.pending["payload"]["args"] == ["tomato"]


def test_world_render():
    rows = apprentice.Session().world().splitlines()
    assert len(rows) == 6
    assert all(len(r) == 9 for r in rows)


def test_replay_golden_transcripts():
    goldens = sorted((ROOT / "tests" / "golden").glob("*.jsonl"))
    assert goldens
    for path in goldens:
        report = apprentice.replay(path.read_text())
        assert report["ok"], (path.name, report["summary"])
        assert report["final_state_equal"]


def test_session_transcript_replays():
    s = apprentice.Session({"confirmations": False})
    s.say("Go to the onion and press space.")
    assert apprentice.replay(s.transcript())["ok"]


def test_errors():
    with pytest.raises(apprentice.BadConfig):
        apprentice.Session({"backend": "telepathy"})
    with pytest.raises(apprentice.ScriptError):
        apprentice.run_script("dance\n")
    with pytest.raises(apprentice.TranscriptError):
        apprentice.replay("not a transcript\n")
