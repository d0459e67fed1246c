import os
import time

import pytest

from services.result_storage import ResultStorageService, get_storage, new_run_id


@pytest.fixture
def storage(tmp_path):
    return ResultStorageService(str(tmp_path))


def test_run_ids_are_unique():
    assert new_run_id() != new_run_id()


def test_save_and_load(storage):
    meta = storage.save_result({"answer": 42}, name="estimate k=2")
    assert meta["stored"]
    assert meta["run_id"].endswith("estimate_k2")
    stored = storage.get_result(meta["run_id"])
    assert stored["result"] == {"answer": 42}
    assert stored["run_id"] == meta["run_id"]
    assert storage.get_csv(meta["run_id"]) is None


def test_csv_table(storage):
    meta = storage.save_result({}, run_id="fixed", csv_rows=[{"d": 1, "found": 2}], csv_fields=["d", "found"])
    assert meta["run_id"] == "fixed"
    assert storage.get_csv("fixed").splitlines() == ["d,found", "1,2"]


def test_list_and_delete(storage):
    storage.save_result({}, run_id="a", csv_rows=[])
    storage.save_result({}, run_id="b")
    assert storage.list_results() == ["a", "b"]
    assert storage.delete_result("a")
    assert not os.path.exists(os.path.join(storage.results_folder, "a.csv"))
    assert storage.list_results() == ["b"]
    assert not storage.delete_result("a")


def test_unknown_run(storage):
    assert storage.get_result("nope") is None


def test_run_id_cannot_escape_folder(storage, tmp_path):
    storage.save_result({}, run_id="../escape")
    assert not (tmp_path.parent / "escape.json").exists()


def test_cleanup_removes_old_files(storage):
    storage.save_result({}, run_id="old")
    storage.save_result({}, run_id="new")
    old_path = os.path.join(storage.results_folder, "old.json")
    stale = time.time() - 10 * 24 * 60 * 60
    os.utime(old_path, (stale, stale))
    assert storage.cleanup_old_files(days=5) == 1
    assert storage.list_results() == ["new"]


def test_shared_instance():
    assert get_storage() is get_storage()
