"""HTTP surface: happy paths, domain errors as 422, payload shape."""

import math

import pytest
from fastapi.testclient import TestClient

from bellharness.service.app import create_app

ROOT_EIGHT = 2.0 * math.sqrt(2.0)


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app()) as c:
        yield c


def run_body(**overrides):
    body = {"strategy": "sign", "N": 400, "seed": 9, "regime": "memoryless"}
    body.update(overrides)
    return body


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    payload = resp.json()
    assert payload["status"] == "ok"
    assert payload["schema_version"] == "1"


def test_enumerate_endpoint(client):
    resp = client.get("/enumerate")
    assert resp.status_code == 200
    payload = resp.json()
    assert payload["schema_version"] == "1"
    assert len(payload["rows"]) == 16
    assert payload["max_abs_s"] == 2
    assert payload["s_values"] == [-2, 2]
    assert all(row["s"] in (-2, 2) for row in payload["rows"])


def test_algebra_check_endpoint(client):
    resp = client.get("/algebra-check")
    assert resp.status_code == 200
    payload = resp.json()
    assert payload["passed"] is True
    assert payload["m_squared"] == [1, 0, 0, 0, 0, 0, 0, 0]
    assert payload["witness"]["product_is_zero"] is True
    assert payload["norm_multiplicativity_residual"] == -2.0
    assert len(payload["table"]) == 8
    assert all(len(row) == 8 for row in payload["table"])


def test_algebra_check_query_params(client):
    resp = client.get("/algebra-check", params={"samples": 50, "seed": 7})
    assert resp.status_code == 200
    payload = resp.json()
    assert payload["associativity"]["samples"] == 50
    assert payload["associativity"]["seed"] == 7
    assert payload["passed"] is True


def test_run_endpoint_sign(client):
    resp = client.post("/run", json=run_body())
    assert resp.status_code == 200
    payload = resp.json()
    assert payload["schema_version"] == "1"
    assert payload["N"] == 400
    assert sum(payload["n_ij"].values()) == 400
    assert set(payload["r_ij"]) == {"11", "12", "21", "22"}
    assert payload["epsilon"] == 0.0
    assert payload["tail_bound"] == 1.0
    # default angles share no setting, so the three-correlation report is bare
    assert payload["bell_1964"]["applicable"] is False
    assert "lhs" not in payload["bell_1964"]
    # no override channel on the sign model
    assert "reported" not in payload


def test_run_endpoint_override_reports(client):
    body = run_body(
        strategy="override",
        diagnosis_mode=True,
        settings={"a1": 0.0, "a2": 90.0, "b1": -135.0, "b2": 135.0},
    )
    resp = client.post("/run", json=body)
    assert resp.status_code == 200
    payload = resp.json()
    assert "reported" in payload
    assert abs(payload["reported"]["S"] - ROOT_EIGHT) < 1e-9
    assert abs(payload["S"]) <= 2.0 + 1e-12


def test_run_endpoint_deterministic(client):
    first = client.post("/run", json=run_body()).json()
    second = client.post("/run", json=run_body()).json()
    assert first == second


@pytest.mark.parametrize(
    "body",
    [
        run_body(strategy="no-such-strategy"),
        run_body(strategy="parity-memory"),  # memory strategy in memoryless regime
        run_body(strategy="sign", regime="memory"),
        run_body(strategy="override"),  # override without diagnosis_mode
        run_body(settings={"a1": [1.0, 0.0]}),  # short vector
        run_body(settings={"a1": 0.0, "junk": 1.0}),  # unknown settings key
        run_body(unexpected=1),  # unknown top-level key
        run_body(N=0),
    ],
)
def test_run_endpoint_rejections(client, body):
    resp = client.post("/run", json=body)
    assert resp.status_code == 422


def test_certify_endpoint(client):
    body = {
        "i": [1, 1, 2, 2],
        "j": [1, 2, 1, 2],
        "x": [1, 1, 1, 1],
        "y": [1, 1, 1, -1],
        "seed": 3,
        "strategy": "fixture",
    }
    resp = client.post("/certify", json=body)
    assert resp.status_code == 200
    payload = resp.json()
    assert payload["N"] == 4
    assert payload["S"] == 4.0
    assert payload["epsilon"] == 2.0
    assert payload["bound_constant"] == 128.0
    assert payload["strategy"] == "fixture"


@pytest.mark.parametrize(
    "patch",
    [
        {"x": [1, 1, 1]},  # length mismatch
        {"x": [1, 1, 1, 3]},  # out of range
        {"i": [1, 1, 2, 257]},  # would wrap to 1 as int8
        {"i": [], "j": [], "x": [], "y": []},
    ],
)
def test_certify_endpoint_rejections(client, patch):
    body = {"i": [1, 1, 2, 2], "j": [1, 2, 1, 2], "x": [1, 1, 1, 1], "y": [1, 1, 1, -1], "seed": 0}
    body.update(patch)
    resp = client.post("/certify", json=body)
    assert resp.status_code == 422


def test_qm_curve_endpoint(client):
    resp = client.post("/qm-curve", json={"angles_deg": [0.0, 60.0, 90.0, 180.0]})
    assert resp.status_code == 200
    rows = resp.json()["rows"]
    assert [r["angle_degrees"] for r in rows] == [0.0, 60.0, 90.0, 180.0]
    for row in rows:
        expected = -math.cos(math.radians(row["angle_degrees"]))
        assert abs(row["qm_correlation"] - expected) < 1e-12


def test_qm_curve_empty_grid(client):
    resp = client.post("/qm-curve", json={"angles_deg": []})
    assert resp.status_code == 422


def test_sweep_endpoint(client):
    body = {"strategy": "sign", "angles_deg": [0.0, 90.0], "n_per_point": 2000, "seed": 5}
    resp = client.post("/sweep", json=body)
    assert resp.status_code == 200
    payload = resp.json()
    rows = payload["rows"]
    assert len(rows) == 2
    assert rows[0]["lhv_correlation"] == -1.0
    assert abs(rows[1]["lhv_correlation"]) < 0.1
    # sign model has no override channel
    assert all("reported_correlation" not in r for r in rows)


def test_sweep_endpoint_reported_column(client):
    body = {
        "strategy": "override",
        "angles_deg": [60.0],
        "n_per_point": 500,
        "seed": 5,
        "diagnosis_mode": True,
    }
    resp = client.post("/sweep", json=body)
    assert resp.status_code == 200
    row = resp.json()["rows"][0]
    assert abs(row["reported_correlation"] + math.cos(math.radians(60.0))) < 3.0 / math.sqrt(500)


def test_sweep_endpoint_unknown_strategy(client):
    resp = client.post("/sweep", json={"strategy": "no-such", "n_per_point": 10, "seed": 0})
    assert resp.status_code == 422


def test_audit_endpoint_clean(client):
    resp = client.post("/audit", json=run_body(N=200))
    assert resp.status_code == 200
    payload = resp.json()
    assert payload["passed"] is True
    assert payload["locality"]["violation_count"] == 0
    assert payload["shuffle"]["passed"] is True


def test_audit_endpoint_flags_nonlocal_probe(client):
    resp = client.post("/audit", json=run_body(strategy="nonlocal-probe", N=60))
    assert resp.status_code == 200
    payload = resp.json()
    assert payload["passed"] is False
    loc = payload["locality"]
    assert loc["violation_count"] == 60
    assert loc["truncated"] is True
    assert len(loc["violations"]) == 20
    assert all(v["station"] == "B" for v in loc["violations"])


def test_audit_endpoint_memory_regime_skips_shuffle(client):
    resp = client.post("/audit", json=run_body(strategy="parity-memory", regime="memory", N=100))
    assert resp.status_code == 200
    payload = resp.json()
    assert payload["passed"] is True
    assert "shuffle" not in payload
