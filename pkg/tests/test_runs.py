"""Run-record state machine and event-log persistence."""

from datetime import datetime, timedelta, timezone

import pytest

from vidsleuth.errors import IllegalTransition, NotFound
from vidsleuth.service.runs import RunStatus, RunStore, is_legal_transition


class TickingClock:
    def __init__(self):
        self.now = datetime(2026, 3, 1, tzinfo=timezone.utc)

    def __call__(self):
        self.now += timedelta(seconds=1)
        return self.now


@pytest.fixture
def store(tmp_path):
    return RunStore(tmp_path, clock=TickingClock())


def test_create_and_get(store):
    record = store.create("vid123", theme="diet")
    loaded = store.get(record.run_id)
    assert loaded.video_id == "vid123"
    assert loaded.status is RunStatus.PENDING
    assert loaded.theme == "diet"
    assert RunStatus.PENDING.value in loaded.timestamps


def test_get_unknown_run(store):
    with pytest.raises(NotFound):
        store.get("nope")


def test_forward_transitions_allowed(store):
    record = store.create("v")
    for status in (RunStatus.RUNNING, RunStatus.REPORT_READY,
                   RunStatus.COMMENT_READY, RunStatus.POSTED):
        store.transition(record, status)
    assert store.get(record.run_id).status is RunStatus.POSTED


def test_backward_transition_rejected(store):
    record = store.create("v")
    store.transition(record, RunStatus.RUNNING)
    store.transition(record, RunStatus.REPORT_READY)
    with pytest.raises(IllegalTransition):
        store.transition(record, RunStatus.RUNNING)


def test_terminal_states_are_final(store):
    record = store.create("v")
    store.transition(record, RunStatus.FAILED, error="boom")
    with pytest.raises(IllegalTransition):
        store.transition(record, RunStatus.RUNNING)


def test_failed_reachable_from_any_non_terminal(store):
    for intermediate in (None, RunStatus.RUNNING, RunStatus.REPORT_READY, RunStatus.COMMENT_READY):
        record = store.create(f"v-{intermediate}")
        if intermediate is not None:
            store.transition(record, RunStatus.RUNNING)
            if intermediate is not RunStatus.RUNNING:
                store.transition(record, intermediate)
        store.transition(record, RunStatus.FAILED, error="x")
        assert store.get(record.run_id).status is RunStatus.FAILED


def test_event_log_replays_cleanly(store):
    record = store.create("v")
    store.transition(record, RunStatus.RUNNING)
    store.transition(record, RunStatus.REPORT_READY)
    store.verify_event_log(record.run_id)
    events = store.events(record.run_id)
    statuses = [e["to"] for e in events if e["event"] == "status"]
    assert statuses == ["PENDING", "RUNNING", "REPORT_READY"]


def test_run_ids_unique_for_same_second(tmp_path):
    fixed = datetime(2026, 3, 1, tzinfo=timezone.utc)
    store = RunStore(tmp_path, clock=lambda: fixed)
    first = store.create("vid")
    second = store.create("vid")
    assert first.run_id != second.run_id


def test_recover_interrupted_fails_stuck_runs(store):
    stuck = store.create("v1")
    store.transition(stuck, RunStatus.RUNNING)
    done = store.create("v2")
    store.transition(done, RunStatus.RUNNING)
    store.transition(done, RunStatus.REPORT_READY)

    failed = store.recover_interrupted()
    assert failed == [stuck.run_id]
    assert store.get(stuck.run_id).status is RunStatus.FAILED
    assert store.get(done.run_id).status is RunStatus.REPORT_READY


def test_transition_matrix_spot_checks():
    assert is_legal_transition(RunStatus.PENDING, RunStatus.RUNNING)
    assert is_legal_transition(RunStatus.REPORT_READY, RunStatus.POSTED)
    assert not is_legal_transition(RunStatus.POSTED, RunStatus.FAILED)
    assert not is_legal_transition(RunStatus.FAILED, RunStatus.RUNNING)
    assert not is_legal_transition(RunStatus.COMMENT_READY, RunStatus.RUNNING)
