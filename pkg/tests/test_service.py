"""HTTP service endpoints against the in-process test client."""

import json

import pytest
from fastapi.testclient import TestClient

from heraldsim.analysis import analyze_device
from heraldsim.catalog import build_klm_ns
from heraldsim.devicefile import ReportFile, device_to_file, report_from_analysis
from heraldsim.service import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


@pytest.fixture(scope="module")
def klm_payload():
    return device_to_file(build_klm_ns()).model_dump(mode="json")


def test_health(client):
    body = client.get("/health").json()
    assert body["status"] == "ok"


def test_device_listing(client):
    body = client.get("/devices").json()
    assert body["devices"] == ["cnot-pittman", "klm-ns", "klm-ns-extended"]


def test_get_builtin_device(client, klm_payload):
    response = client.get("/devices/klm-ns")
    assert response.status_code == 200
    assert response.json() == klm_payload


def test_unknown_device_is_404(client):
    assert client.get("/devices/warp-drive").status_code == 404
    assert client.post("/devices/warp-drive/analyze").status_code == 404


def test_analyze_builtin(client):
    response = client.post("/devices/klm-ns/analyze")
    assert response.status_code == 200
    report = ReportFile.model_validate(response.json())
    assert report.overall_verdict == "operationally-unitary"
    assert report.total_tau == pytest.approx(0.25, abs=1e-10)


def test_analyze_matches_local_run(client, klm_payload):
    response = client.post("/analyze", json={"device": klm_payload})
    assert response.status_code == 200
    remote = ReportFile.model_validate(response.json())
    local = report_from_analysis(analyze_device(build_klm_ns()))
    assert remote == local


def test_options_are_honored(client):
    response = client.post(
        "/devices/klm-ns/analyze", json={"tol": 1e-7, "t_eff": 2.0, "photon_cap": 6}
    )
    tolerances = response.json()["tolerances"]
    assert tolerances == {"verdict_tol": 1e-7, "t_eff": 2.0, "photon_cap": 6}


def test_not_unitary_still_returns_report(client):
    response = client.post("/devices/klm-ns-extended/analyze")
    assert response.status_code == 200
    assert response.json()["overall_verdict"] == "not-operationally-unitary"


def test_analyze_rejects_bad_physics(client, klm_payload):
    broken = json.loads(json.dumps(klm_payload))
    broken["ancilla"][0]["p"] = 0.5
    response = client.post("/analyze", json={"device": broken})
    assert response.status_code == 400
    assert "ancilla" in response.json()["detail"]


def test_analyze_rejects_bad_schema(client):
    response = client.post("/analyze", json={"device": {"bogus": True}})
    assert response.status_code == 422


def test_validate_distinguishes_parse_and_validation(client, klm_payload):
    good = client.post("/validate", json=klm_payload).json()
    assert good == {"valid": True, "kind": None, "detail": None}

    broken = json.loads(json.dumps(klm_payload))
    broken["ancilla"][0]["p"] = 0.5
    physics = client.post("/validate", json=broken).json()
    assert physics["valid"] is False and physics["kind"] == "validation"

    schema = client.post("/validate", json={"nope": 1}).json()
    assert schema["valid"] is False and schema["kind"] == "parse"
