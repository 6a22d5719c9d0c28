import math

import pytest
from fastapi.testclient import TestClient

from app.main import app


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as c:
        yield c


def test_root_and_health(client):
    response = client.get("/")
    assert response.status_code == 200
    assert response.json()["status"] == "running"
    assert client.get("/health").json()["status"] == "healthy"


def test_system_info(client):
    data = client.get("/api/v1/system/info").json()
    assert data["threads"] >= 1
    assert "cpu_count" in data


def test_list_kernels(client):
    names = {k["name"] for k in client.get("/api/v1/kernels").json()}
    assert {"riesz", "cauchy-power", "double-layer"} <= names


def test_check_kernel(client):
    response = client.get("/api/v1/kernels/cauchy-power/check", params={"j": 3, "samples": 1000})
    assert response.status_code == 200
    data = response.json()
    assert data["oddness"] < 1e-12
    assert data["homogeneity"] < 1e-12
    assert set(data["cz_constants"]) == {"0", "1", "2"}


def test_check_kernel_sample_bounds(client):
    assert client.get("/api/v1/kernels/riesz/check", params={"samples": 1}).status_code == 422


def test_unknown_kernel_is_reported(client):
    response = client.get("/api/v1/kernels/bessel/check")
    assert response.status_code == 422
    assert response.json()["type"] == "InvalidKernelError"


def test_jump_constant(client):
    response = client.post("/api/v1/constants", json={"kernel": {"name": "riesz", "n": 1}, "direction": [0.0, 1.0]})
    assert response.status_code == 200
    data = response.json()
    assert data["value"] == pytest.approx([0.0, math.pi])
    assert data["radius"] is None


def test_jump_constant_rejects_non_unit(client):
    response = client.post("/api/v1/constants", json={"direction": [0.0, 3.0]})
    assert response.status_code == 422
    assert "error" in response.json()


def test_list_scenes(client):
    data = client.get("/api/v1/scenes").json()
    names = {s["name"] for s in data["scenes"]}
    assert data["total"] == len(data["scenes"])
    assert {"unit-circle", "flat-line", "unit-sphere", "atom-pair"} <= names


def test_verify_flat_line(client):
    response = client.post("/api/v1/experiments/verify", json={"scene": "flat-line", "points": 1})
    assert response.status_code == 200
    data = response.json()
    assert data["passed"]
    assert len(data["points"]) == 1
    assert data["points"][0]["residual_jump"] < 1e-5


def test_verify_unknown_scene(client):
    response = client.post("/api/v1/experiments/verify", json={"scene": "nope", "points": 1})
    assert response.status_code == 422
    assert response.json()["type"] == "SceneError"


def test_diagnose_atom_pair(client):
    response = client.post("/api/v1/experiments/diagnose",
                           json={"scene": "atom-pair", "points": 1, "delta_ladder": [0.1]})
    assert response.status_code == 200
    assert len(response.json()["rows"]) == 1
