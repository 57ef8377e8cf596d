import pytest
from fastapi.testclient import TestClient

from crcartan import __version__
from crcartan.main import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    payload = response.json()
    assert payload["status"] == "healthy"
    assert payload["version"] == __version__
    assert payload["specs_available"] == 6


def test_specs(client):
    response = client.get("/api/specs")
    assert response.status_code == 200
    by_name = {item["name"]: item for item in response.json()}
    assert by_name["heisenberg"]["coords"] == ["t", "x", "y"]
    assert by_name["sphere3"]["default_point"] == [1.0, 0.4, 0.3]


def test_analyze_heisenberg(client):
    response = client.post("/api/analyze", json={"spec": "heisenberg", "point": [0.0, 0.0, 0.0]})
    assert response.status_code == 200
    assert response.json()["sphericity"]["verdict"] == "spherical-at-point"


def test_fefferman_heisenberg(client):
    response = client.post("/api/fefferman", json={"spec": "heisenberg", "point": [0.1, 0.2, -0.1]})
    assert response.status_code == 200
    assert response.json()["metric"]["signature"] == [3, 1]


def test_bad_spec_text_is_400(client):
    response = client.post("/api/analyze", json={"spec": 'manifold "m" { n = 1 }', "point": [0.0]})
    assert response.status_code == 400


def test_wrong_arity_is_422(client):
    response = client.post("/api/analyze", json={"spec": "heisenberg", "point": [0.0, 0.0]})
    assert response.status_code == 422


def test_order_is_validated(client):
    response = client.post("/api/analyze", json={"spec": "heisenberg", "point": [0, 0, 0], "order": 40})
    assert response.status_code == 422


def test_check_endpoint(client):
    response = client.post("/api/check", json={"suite": "jets", "points": 1})
    assert response.status_code == 200
    payload = response.json()
    assert payload["passed"] is True
    assert payload["checks"]


def test_unknown_suite_is_422(client):
    response = client.post("/api/check", json={"suite": "nope"})
    assert response.status_code == 422


def test_config(client):
    payload = client.get("/api/config").json()
    assert payload["default_order"] == 6
    assert payload["tolerances"]["sphericity"] == 1e-6
