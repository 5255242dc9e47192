import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from phasekit.dsp import Signal
from phasekit.errors import (
    ConfigurationError,
    ConflictError,
    InvalidArgumentError,
    SequencingError,
    UnknownSessionError,
)
from phasekit.service import (
    ORIGINAL_IS_A,
    ORIGINAL_IS_B,
    ExperimentStore,
    ServiceConfig,
    StimulusRef,
    build_app,
    export_log_csv,
    session_layout,
    store_from_config,
)
from phasekit.stimuli import write_manifest
from phasekit.wavio import FLOAT32, Recording, write_wav


def make_stimuli(tmp_path, count=30):
    """Tiny WAV pairs plus manifest refs, enough for protocol tests."""
    refs = []
    categories = ["music", "speech", "other"]
    fs = 8000
    for i in range(count):
        k = np.arange(int(0.05 * fs))
        tone = Signal(0.4 * np.sin(2 * np.pi * (200 + 20 * i) * k / fs), fs)
        anti = Signal(-tone.samples, fs)
        orig = tmp_path / f"s{i:02d}_original.wav"
        dist = tmp_path / f"s{i:02d}_distorted.wav"
        write_wav(orig, Recording((tone,), fs, str(orig), FLOAT32))
        write_wav(dist, Recording((anti,), fs, str(dist), FLOAT32))
        refs.append(StimulusRef(
            stimulus_id=f"s{i:02d}", category=categories[i % 3],
            theta=float(i) / 10, original_path=orig, distorted_path=dist,
        ))
    return refs


@pytest.fixture
def store(tmp_path):
    return ExperimentStore(make_stimuli(tmp_path), tmp_path / "events.jsonl", seed=404)


class TestSessionLayout:
    def test_permutation_covers_all_ids(self):
        ids = [f"s{i}" for i in range(30)]
        order, assignments = session_layout(7, ids)
        assert sorted(order) == sorted(ids)
        assert len(assignments) == 30
        assert set(assignments) <= {ORIGINAL_IS_A, ORIGINAL_IS_B}

    def test_deterministic(self):
        ids = [f"s{i}" for i in range(10)]
        assert session_layout(3, ids) == session_layout(3, ids)
        assert session_layout(3, ids) != session_layout(4, ids)

    def test_assignment_balance(self):
        ids = [f"s{i}" for i in range(30)]
        rng = np.random.default_rng(2)
        total = 0
        count_a = 0
        for _ in range(10_000):
            _, assignments = session_layout(int(rng.integers(0, 2**62)), ids)
            count_a += sum(1 for a in assignments if a == ORIGINAL_IS_A)
            total += len(assignments)
        assert abs(count_a / total - 0.5) <= 0.015


class TestStore:
    def test_create_session_covers_manifest(self, store):
        session = store.create_session("alice")
        assert sorted(session.trial_order) == sorted(store.stimuli)
        assert len(session.assignments) == 30
        assert session.cursor == 0

    def test_same_seed_same_layout(self, store):
        a = store.create_session("alice", seed=12345)
        b = store.create_session("alice", seed=12345)
        assert a.trial_order == b.trial_order
        assert a.assignments == b.assignments
        assert a.session_id != b.session_id  # distinct sessions regardless

    def test_empty_manifest_rejected(self, tmp_path):
        with pytest.raises(ConfigurationError):
            ExperimentStore([], tmp_path / "events.jsonl", seed=1)

    def test_correctness_follows_assignment(self, store):
        session = store.create_session("alice")
        record = store.record_response(session.session_id, 1, "A")
        expected = session.assignments[0] == ORIGINAL_IS_A
        assert record.correct == expected
        record2 = store.record_response(session.session_id, 2, "B")
        expected2 = session.assignments[1] == ORIGINAL_IS_B
        assert record2.correct == expected2

    def test_duplicate_response_conflicts_and_log_unchanged(self, store):
        session = store.create_session("alice")
        store.record_response(session.session_id, 1, "A")
        size_before = store.log_path.stat().st_size
        with pytest.raises(ConflictError):
            store.record_response(session.session_id, 1, "B")
        assert store.log_path.stat().st_size == size_before

    def test_out_of_order_rejected(self, store):
        session = store.create_session("alice")
        with pytest.raises(SequencingError):
            store.record_response(session.session_id, 2, "A")

    def test_unknown_session(self, store):
        with pytest.raises(UnknownSessionError):
            store.record_response("deadbeef", 1, "A")
        with pytest.raises(UnknownSessionError):
            store.next_trial("deadbeef")

    def test_bad_response_value(self, store):
        session = store.create_session("alice")
        with pytest.raises(InvalidArgumentError):
            store.record_response(session.session_id, 1, "C")

    def test_next_trial_progression(self, store):
        session = store.create_session("alice")
        first = store.next_trial(session.session_id)
        assert first["question_index"] == 1
        assert first["total_questions"] == 30
        for k in range(1, 31):
            store.record_response(session.session_id, k, "A")
        assert store.next_trial(session.session_id)["done"] is True

    def test_tokens_opaque_and_session_scoped(self, store):
        s1 = store.create_session("alice", seed=1)
        s2 = store.create_session("bob", seed=1)  # identical layout, other session
        stim = s1.trial_order[0]
        t1 = store.media_token(s1, stim, "a")
        t2 = store.media_token(s2, stim, "a")
        assert t1 != t2
        assert stim not in t1 and "original" not in t1 and "distorted" not in t1

    def test_crash_recovery_restores_state(self, tmp_path):
        stimuli = make_stimuli(tmp_path)
        log = tmp_path / "events.jsonl"
        store = ExperimentStore(stimuli, log, seed=9)
        session = store.create_session("alice")
        store.record_response(session.session_id, 1, "A")
        store.record_response(session.session_id, 2, "B")

        revived = ExperimentStore(stimuli, log, seed=9)
        assert revived.sessions[session.session_id].cursor == 2
        assert len(revived.records) == 2
        assert revived.next_trial(session.session_id)["question_index"] == 3
        # acknowledged answers survive; the next answer continues the sequence
        revived.record_response(session.session_id, 3, "A")

    def test_media_resolution_round_trip(self, store):
        session = store.create_session("alice")
        trial = store.next_trial(session.session_id)
        token = trial["a_url"].rsplit("/", 1)[1]
        path = store.resolve_media(token)
        assert path.exists()


class TestExport:
    def test_empty_store_header_only(self, store, tmp_path):
        out = tmp_path / "empty.csv"
        with out.open("w") as fh:
            assert store.export_csv(fh) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 1
        assert lines[0].startswith("session_id,participant_id,")

    def test_two_sessions_three_trials(self, store, tmp_path):
        for participant in ("alice", "bob"):
            session = store.create_session(participant)
            for k in (1, 2, 3):
                store.record_response(session.session_id, k, "A" if k % 2 else "B")
        out = tmp_path / "six.csv"
        with out.open("w") as fh:
            assert store.export_csv(fh) == 6
        lines = out.read_text().splitlines()
        assert len(lines) == 7
        fields = lines[1].split(",")
        assert fields[2] == "1"
        assert fields[6] in ("A", "B")
        assert fields[7] in ("true", "false")

    def test_truncated_trailing_line_recovered(self, store, tmp_path):
        for participant in ("alice", "bob"):
            session = store.create_session(participant)
            for k in (1, 2, 3):
                store.record_response(session.session_id, k, "A")
        # simulate a torn final write
        with store.log_path.open("a") as fh:
            fh.write('{"type": "response", "session_id": "xyz", "question')
        out = tmp_path / "torn.csv"
        with out.open("w") as fh:
            rows, warnings = export_log_csv(store.log_path, fh)
        assert rows == 6
        assert len(warnings) == 1
        assert "byte offset" in warnings[0]

    def test_export_matches_analysis_schema(self, store, tmp_path):
        from phasekit.analysis import ResponseSet

        session = store.create_session("alice")
        store.record_response(session.session_id, 1, "A")
        out = tmp_path / "schema.csv"
        with out.open("w") as fh:
            store.export_csv(fh)
        rs = ResponseSet.from_csv(out)
        assert rs.n_trials == 1
        assert rs.rows[0].participant_id == "alice"


@pytest.fixture
def client(store):
    return TestClient(build_app(store, post_questionnaire_url="https://example.org/done"))


class TestHttpApi:
    def test_full_session_flow(self, client):
        created = client.post("/api/sessions", json={"participant_id": "alice"})
        assert created.status_code == 201
        sid = created.json()["session_id"]
        assert created.json()["total_questions"] == 30

        answered = 0
        while True:
            trial = client.get(f"/api/sessions/{sid}/trial").json()
            if trial["done"]:
                break
            body = {"question_index": trial["question_index"], "response": "A",
                    "playback_counts": {"reference": 1, "a": 2, "b": 1}}
            posted = client.post(f"/api/sessions/{sid}/responses", json=body)
            assert posted.status_code == 201
            answered += 1
        assert answered == 30
        assert trial["post_questionnaire_url"] == "https://example.org/done"

        summary = client.get(f"/api/sessions/{sid}/summary").json()
        assert summary["answered"] == 30
        assert summary["done"] is True

    def test_client_payloads_never_leak_assignment(self, client):
        created = client.post("/api/sessions", json={"participant_id": "alice"}).json()
        sid = created["session_id"]
        payloads = [created]
        trial = client.get(f"/api/sessions/{sid}/trial").json()
        payloads.append(trial)
        posted = client.post(f"/api/sessions/{sid}/responses",
                             json={"question_index": 1, "response": "B"}).json()
        payloads.append(posted)
        payloads.append(client.get(f"/api/sessions/{sid}/summary").json())
        blob = json.dumps(payloads).lower()
        for banned in ("assignment", "original_is", "correct", "distorted"):
            assert banned not in blob

    def test_error_codes(self, client):
        assert client.get("/api/sessions/nope/trial").status_code == 404
        sid = client.post("/api/sessions", json={"participant_id": "x"}).json()["session_id"]
        out_of_order = client.post(f"/api/sessions/{sid}/responses",
                                   json={"question_index": 5, "response": "A"})
        assert out_of_order.status_code == 422
        client.post(f"/api/sessions/{sid}/responses",
                    json={"question_index": 1, "response": "A"})
        duplicate = client.post(f"/api/sessions/{sid}/responses",
                                json={"question_index": 1, "response": "A"})
        assert duplicate.status_code == 409
        bad_value = client.post(f"/api/sessions/{sid}/responses",
                                json={"question_index": 2, "response": "C"})
        assert bad_value.status_code == 422

    def test_media_full_and_range_requests(self, client, store):
        sid = client.post("/api/sessions", json={"participant_id": "x"}).json()["session_id"]
        trial = client.get(f"/api/sessions/{sid}/trial").json()

        full = client.get(trial["reference_url"])
        assert full.status_code == 200
        assert full.headers["content-type"].startswith("audio/wav")
        assert full.headers["accept-ranges"] == "bytes"
        assert full.content[:4] == b"RIFF"

        partial = client.get(trial["a_url"], headers={"Range": "bytes=0-99"})
        assert partial.status_code == 206
        assert len(partial.content) == 100
        assert partial.headers["content-range"] == f"bytes 0-99/{len(client.get(trial['a_url']).content)}"

        suffix = client.get(trial["a_url"], headers={"Range": "bytes=-10"})
        assert suffix.status_code == 206
        assert len(suffix.content) == 10

        tail = client.get(trial["a_url"], headers={"Range": "bytes=100-"})
        assert tail.status_code == 206

        bad = client.get(trial["a_url"], headers={"Range": "bytes=99999999-"})
        assert bad.status_code == 416
        assert client.get("/media/doesnotexist").status_code == 404

    def test_ab_media_tokens_differ_between_sessions(self, client):
        tokens = []
        for participant in ("p1", "p2"):
            sid = client.post("/api/sessions",
                              json={"participant_id": participant}).json()["session_id"]
            trial = client.get(f"/api/sessions/{sid}/trial").json()
            tokens.append((trial["a_url"], trial["b_url"]))
        assert tokens[0][0] != tokens[1][0]
        assert tokens[0][1] != tokens[1][1]


class TestStaticServing:
    def test_ui_served_at_root_without_shadowing_api(self, store, tmp_path):
        static = tmp_path / "dist"
        static.mkdir()
        (static / "index.html").write_text("<!DOCTYPE html><title>listening test</title>")
        client = TestClient(build_app(store, static_dir=static))
        page = client.get("/")
        assert page.status_code == 200
        assert "listening test" in page.text
        assert client.post("/api/sessions",
                           json={"participant_id": "p"}).status_code == 201

    def test_app_boots_without_ui_build(self, store):
        client = TestClient(build_app(store, static_dir=None))
        assert client.post("/api/sessions",
                           json={"participant_id": "p"}).status_code == 201


class TestConfig:
    def test_load_and_boot(self, tmp_path):
        stim_dir = tmp_path / "stimuli"
        stim_dir.mkdir()
        refs = make_stimuli(stim_dir, count=3)
        entries = [{
            "stimulus_id": r.stimulus_id, "category": r.category, "theta": r.theta,
            "original_path": r.original_path.name, "distorted_path": r.distorted_path.name,
        } for r in refs]
        write_manifest(stim_dir / "manifest.json", entries)
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps({
            "manifest": "stimuli/manifest.json",
            "log_path": "events.jsonl",
            "port": 9000,
            "seed": 5,
        }))
        config = ServiceConfig.load(config_path)
        assert config.port == 9000
        store = store_from_config(config)
        session = store.create_session("p")
        assert len(session.trial_order) == 3

    def test_missing_fields_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"port": 80}))
        with pytest.raises(ConfigurationError):
            ServiceConfig.load(path)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ConfigurationError):
            ServiceConfig.load(tmp_path / "none.json")
