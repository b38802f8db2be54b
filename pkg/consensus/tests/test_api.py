import pytest
from django.test import Client

from consensus.models import ScenarioRun

from .conftest import shipped_document

pytestmark = pytest.mark.django_db


@pytest.fixture
def client():
    return Client()


def test_list_scenarios(client):
    response = client.get("/api/scenarios")
    assert response.status_code == 200
    names = [item["name"] for item in response.json()]
    assert "hinf_unicycle_4" in names
    assert "stochastic_unicycle_4" in names


def test_get_scenario(client):
    response = client.get("/api/scenarios/leader_unicycle_4")
    assert response.status_code == 200
    body = response.json()
    assert body["document"]["control"]["mode"] == "leader_follower"
    assert "reference:" in body["text"]
    assert client.get("/api/scenarios/unknown").status_code == 404


def test_check_endpoint(client):
    response = client.post("/api/check", {"scenario": shipped_document("hinf_unicycle_4")},
                           content_type="application/json")
    assert response.status_code == 200
    body = response.json()
    assert body["d"] == pytest.approx(0.35)
    assert body["feasible"] is True


def test_check_endpoint_rejects_invalid_document(client):
    document = shipped_document("hinf_unicycle_4", gains={"gamma": None})
    response = client.post("/api/check", {"scenario": document}, content_type="application/json")
    assert response.status_code == 400
    assert "gamma required" in response.json()["error"]
    assert response.json()["code"] == 2


def test_run_executes_eagerly(client):
    document = shipped_document("hinf_unicycle_4", integration={"horizon": 0.02})
    response = client.post("/api/runs", {"scenario": document, "strict": False}, content_type="application/json")
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "done", body["error"]
    assert body["summary"]["scenario"] == "hinf_unicycle_4"

    detail = client.get(f"/api/runs/{body['id']}")
    assert detail.json()["command"] == "run"
    assert len(client.get("/api/runs").json()) == 1


def test_failed_run_records_error(client):
    document = shipped_document("hinf_unicycle_4", synthesis={"when": "never"},
                                gains={"K1": [[0.0, 0.0], [0.0, 0.0]]}, integration={"horizon": 0.02})
    response = client.post("/api/runs", {"scenario": document, "strict": True}, content_type="application/json")
    body = response.json()
    assert body["status"] == "failed"
    assert "infeasible" in body["error"]
    assert ScenarioRun.objects.get(pk=body["id"]).summary is None


def test_sweep_rejects_bad_grid(client):
    response = client.post("/api/sweeps", {"scenario": shipped_document("hinf_unicycle_4"), "parameter": "d",
                                           "grid": "nonsense"}, content_type="application/json")
    assert response.status_code == 400
    assert response.json()["code"] == 2


def test_montecarlo_run(client):
    document = shipped_document("stochastic_unicycle_4", integration={"horizon": 0.01, "output_interval": 0.001})
    response = client.post("/api/montecarlo", {"scenario": document, "runs": 2, "seed": 1},
                           content_type="application/json")
    body = response.json()
    assert body["status"] == "done", body["error"]
    assert body["summary"]["runs"] == 2


def test_unknown_run(client):
    assert client.get("/api/runs/999").status_code == 404
