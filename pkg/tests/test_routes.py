import pytest

from services.brooms import from_out_regular
from services.digraph import cycle
from services.serialization import broom_digraph_to_json


@pytest.fixture
def client():
    from server_production import app
    app.config["TESTING"] = True
    return app.test_client()


SINK = {"n": 3, "arcs": [[0, 2], [1, 2]]}


def test_home_and_health(client):
    assert client.get("/").get_json()["documentation"] == "/api/docs"
    health = client.get("/health")
    assert health.status_code == 200
    assert health.get_json()["status"] == "healthy"


def test_docs_lists_operations(client):
    docs = client.get("/api/docs").get_json()
    assert docs["operations"]["recognize"] == "POST /api/recognize"
    assert "estimate-dk" in docs["operations"]


def test_recognize(client):
    response = client.post("/api/recognize", json={"tree": SINK})
    assert response.status_code == 200
    body = response.get_json()
    assert body["success"] is True
    assert body["validators_passed"] is True
    assert body["result"]["max_grounded"] is True
    assert "elapsed_seconds" in body["meta"]


def test_rejected_broom_is_still_a_200(client):
    star = {"n": 4, "arcs": [[0, 1], [0, 2], [0, 3]]}
    response = client.post("/api/validate-broom", json={"tree": star, "root": 0, "k": 1, "d": 2})
    assert response.status_code == 200
    body = response.get_json()
    assert body["validators_passed"] is False
    assert body["result"]["violations"][0]["clause"] == "wrong_degree"


def test_unknown_operation(client):
    response = client.post("/api/teleport", json={})
    assert response.status_code == 404
    assert response.get_json()["error"]["kind"] == "not_found"


def test_body_must_be_json(client):
    response = client.post("/api/recognize", data="tree", content_type="text/plain")
    assert response.status_code == 400


def test_invalid_input(client):
    response = client.post("/api/trim", json={"digraph": {"n": 3, "arcs": [[0, 1], [1, 2], [2, 0]]}, "d": 2})
    assert response.status_code == 400
    error = response.get_json()["error"]
    assert error["kind"] == "precondition_violation"
    assert error["witness"] == 0


def test_missing_field(client):
    response = client.post("/api/validate-broom", json={"tree": SINK})
    assert response.status_code == 400
    assert "root" in response.get_json()["error"]["message"]


def test_pipeline_failure(client):
    payload = broom_digraph_to_json(from_out_regular(cycle(3), 1))
    payload["params"] = {"p_keep": 1.0, "outdeg_floor": 0, "indeg_root_threshold": 2, "broom_target": 1}
    response = client.post("/api/subsample", json=payload)
    assert response.status_code == 422
    error = response.get_json()["error"]
    assert error["kind"] == "subsample_failure"
    assert error["step"] == "roots"


def test_gen_and_dot(client):
    generated = client.post("/api/gen", json={"model": "out_regular", "params": {"n": 5, "d": 2, "seed": 1}})
    assert generated.status_code == 200
    digraph = generated.get_json()["result"]["output"]
    dot = client.post("/api/dot", json={"digraph": digraph}).get_json()["result"]["dot"]
    assert dot.startswith("digraph G {")


def test_heuristic_embed_reports_absence(client):
    response = client.post("/api/embed", json={
        "tree": {"n": 3, "arcs": [[0, 1], [0, 2]]},
        "digraph": {"n": 3, "arcs": [[0, 1], [1, 2], [2, 0]]},
    })
    result = response.get_json()["result"]
    assert result["found"] is False
    assert result["status"] == "proven_absent"


def test_stored_estimate_lifecycle(client):
    response = client.post("/api/estimate-dk", json={"k": 2, "d_values": [0, 1], "n": 5, "trials": 1, "store": True})
    assert response.status_code == 200
    result = response.get_json()["result"]
    assert result["verdict"]["lower_bound"] == 1
    run_id = result["storage"]["run_id"]

    assert run_id in client.get("/api/results").get_json()["result"]["runs"]
    stored = client.get(f"/api/results/{run_id}")
    assert stored.status_code == 200
    assert stored.get_json()["result"]["result"]["k"] == 2
    csv_text = client.get(f"/api/results/{run_id}/csv").get_data(as_text=True)
    assert csv_text.startswith("k,tree,canonical")

    assert client.delete(f"/api/results/{run_id}").status_code == 200
    assert client.get(f"/api/results/{run_id}").status_code == 404
    assert client.delete(f"/api/results/{run_id}").status_code == 404
