import json
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from fastapi.testclient import TestClient

from gridsar import scenario_to_doc
from gridsar.service import create_app


def small_doc():
    return {
        "grid_size": 3,
        "start": [1, 1],
        "cells_of_interest": [{"cell": [3, 3], "weight": 2.0}],
        "target_weight": 60.0,
        "battery": 6,
    }


@pytest.fixture()
def client(tmp_path):
    app = create_app(tmp_path / "data")
    with TestClient(app) as c:
        yield c


@pytest.fixture()
def sid(client):
    response = client.post("/scenarios", json=small_doc())
    assert response.status_code == 200
    return response.json()["scenario_id"]


class TestScenarios:
    def test_post_and_get_round_trip(self, client, sid):
        got = client.get(f"/scenarios/{sid}")
        assert got.status_code == 200
        body = got.json()
        assert body["scenario_id"] == sid
        from gridsar import scenario_from_doc

        assert body["scenario"] == scenario_to_doc(scenario_from_doc(small_doc()))
        assert body["history"] == []

    def test_post_same_scenario_idempotent(self, client, sid):
        again = client.post("/scenarios", json=small_doc())
        assert again.json()["scenario_id"] == sid

    def test_validation_error_has_field_path(self, client):
        doc = small_doc()
        doc["cells_of_interest"][0]["cell"] = [9, 9]
        response = client.post("/scenarios", json=doc)
        assert response.status_code == 422
        detail = response.json()["detail"]
        assert detail[0]["loc"] == ["body", "cells_of_interest", "0", "cell"]

    def test_unknown_scenario_404(self, client):
        assert client.get("/scenarios/ffffffffffffffff").status_code == 404


class TestSolve:
    def test_solve_returns_certified_bounds(self, client, sid):
        response = client.post(f"/scenarios/{sid}/solve", json={"epsilon": 0.1})
        assert response.status_code == 200
        body = response.json()
        assert body["gap"] <= 0.1
        assert body["value_upper"] >= body["value_lower"]
        assert body["converged"] is True

    def test_solve_cached_policy_id_stable(self, client, sid):
        first = client.post(f"/scenarios/{sid}/solve", json={"epsilon": 0.1}).json()
        second = client.post(f"/scenarios/{sid}/solve", json={"epsilon": 0.1}).json()
        assert first == second


class TestRollout:
    def test_deterministic_given_seed(self, client, sid):
        a = client.post(f"/scenarios/{sid}/rollout", json={"seed": 4}).json()
        b = client.post(f"/scenarios/{sid}/rollout", json={"seed": 4}).json()
        assert a == b

    def test_explicit_target(self, client, sid):
        body = client.post(
            f"/scenarios/{sid}/rollout", json={"seed": 0, "true_target": [1, 1]}
        ).json()
        assert body["terminal_cause"] == "target-found"
        assert len(body["steps"]) == 1

    def test_target_out_of_bounds_422(self, client, sid):
        response = client.post(
            f"/scenarios/{sid}/rollout", json={"seed": 0, "true_target": [9, 9]}
        )
        assert response.status_code == 422


class TestCounterfactual:
    def test_value_identity_and_echo(self, client, sid):
        path = [[1, 1], [1, 2], [2, 2], [3, 2], [3, 3]]
        response = client.post(f"/scenarios/{sid}/counterfactual", json={"path": path})
        assert response.status_code == 200
        body = response.json()
        assert body["path"] == path
        assert body["actions"] == ["up", "right", "right", "up"]
        alpha = np.array([2.0, 60.0, 0.0])
        assert body["value_user"] == pytest.approx(
            float(alpha @ np.array(body["mu_user"])), abs=1e-9
        )
        assert body["value_optimal"] == pytest.approx(
            float(alpha @ np.array(body["mu_optimal"])), abs=1e-9
        )
        assert body["value_optimal"] >= body["value_user"] - 1e-9
        assert body["explanation_text"]["text"]

    def test_invalid_path_422_with_index(self, client, sid):
        response = client.post(
            f"/scenarios/{sid}/counterfactual", json={"path": [[1, 1], [3, 3]]}
        )
        assert response.status_code == 422
        assert response.json()["detail"][0]["loc"] == ["body", "path", "1"]

    def test_truncation_surfaces_in_report(self, client):
        doc = {
            "grid_size": 5,
            "start": [1, 1],
            "cells_of_interest": [{"cell": [5, 5], "weight": 3.0}],
            "target_weight": 100.0,
            "battery": 12,
        }
        app_client = client
        sid = app_client.post("/scenarios", json=doc).json()["scenario_id"]
        path = [[1, 1], [2, 1], [2, 2], [3, 2], [3, 3], [4, 3], [4, 4], [5, 4], [5, 5]]
        body = app_client.post(f"/scenarios/{sid}/counterfactual", json={"path": path}).json()
        report = body["feasibility_report"]
        assert report["truncation_cause"] == "battery"
        assert report["executed_length"] == 6
        assert len(body["executed_actions"]) == 6
        assert len(body["actions"]) == 8
        assert "impossible for either policy to reach" in body["explanation_text"]["text"]

    def test_history_appends(self, client, sid):
        path = [[1, 1], [1, 2]]
        client.post(f"/scenarios/{sid}/counterfactual", json={"path": path})
        client.post(f"/scenarios/{sid}/counterfactual", json={"path": path})
        history = client.get(f"/scenarios/{sid}").json()["history"]
        kinds = [h["type"] for h in history]
        assert kinds.count("counterfactual") == 2

    def test_concurrent_posts_serialize(self, client, sid):
        path = [[1, 1], [1, 2], [2, 2]]

        def post(_):
            return client.post(f"/scenarios/{sid}/counterfactual", json={"path": path})

        with ThreadPoolExecutor(max_workers=6) as pool:
            responses = list(pool.map(post, range(6)))
        assert all(r.status_code == 200 for r in responses)
        history = client.get(f"/scenarios/{sid}").json()["history"]
        assert len([h for h in history if h["type"] == "counterfactual"]) == 6


class TestStorage:
    def test_scenario_file_bit_identical(self, tmp_path):
        from gridsar import scenario_from_doc
        from gridsar.domain import canonical_scenario_json

        app = create_app(tmp_path / "data")
        with TestClient(app) as c:
            sid = c.post("/scenarios", json=small_doc()).json()["scenario_id"]
        stored = (tmp_path / "data" / "scenarios" / f"{sid}.json").read_text()
        assert stored == canonical_scenario_json(scenario_from_doc(small_doc()))

    def test_policy_artifact_persisted_and_reused(self, tmp_path):
        app = create_app(tmp_path / "data")
        with TestClient(app) as c:
            sid = c.post("/scenarios", json=small_doc()).json()["scenario_id"]
            first = c.post(f"/scenarios/{sid}/solve", json={"epsilon": 0.1}).json()
        files = list((tmp_path / "data" / "policies").glob("*.json"))
        assert len(files) == 1
        # a fresh app instance must load the artifact instead of resolving
        app2 = create_app(tmp_path / "data")
        with TestClient(app2) as c2:
            second = c2.post(f"/scenarios/{sid}/solve", json={"epsilon": 0.1}).json()
        assert second == first
        doc = json.loads(files[0].read_text())
        assert doc["kind"] == "gridsar-policy"
