import datetime

from models import RunRecord, _utcnow, get_session


def manifest(name="registry", digest="a" * 64):
    return {
        "scenario_name": name,
        "preset": None,
        "policy": "cash",
        "seed": 1,
        "scenario_digest": digest,
        "workload_digest": "b" * 64,
        "event_log_digest": "c" * 64,
        "complete": True,
        "makespan_s": 12.5,
        "total_cost": 0.25,
    }


def test_timestamps_are_timezone_aware():
    assert _utcnow().tzinfo == datetime.timezone.utc


def test_record_stamps_creation_time(tmp_path):
    session = get_session(f"sqlite:///{tmp_path / 'runs.db'}")
    before = _utcnow().replace(tzinfo=None, microsecond=0)
    run = RunRecord.record(session, manifest(), tmp_path / "bundle")
    stamped = run.created_at.replace(tzinfo=None)
    assert before <= stamped <= _utcnow().replace(tzinfo=None) + datetime.timedelta(seconds=1)
    assert run.as_dict()["created_at"].startswith(str(before.date()))
    assert RunRecord.find_by_digest(session, "a" * 64)[0].id == run.id
    session.close()
