import httpx
import pytest

from spreadcode.service.app import app


@pytest.fixture
def client():
    transport = httpx.ASGITransport(app=app)
    # ASGITransport is async-only; drive it through a sync facade
    from spreadcode.cli import _InProcessTransport

    with httpx.Client(
        transport=_InProcessTransport(app), base_url="http://testserver"
    ) as c:
        yield c


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json()["status"] == "ok"


def test_offline_endpoint_worked_instance(client):
    resp = client.post("/offline", json={"sizes": [2], "tau": 2, "b": 1, "m": 2})
    assert resp.status_code == 200
    body = resp.json()
    assert body["f"] == [0, 0, 0, 0, 1, 0, 0, 0, 0]
    assert body["p"] == [0, 0, 0, 0, 0, 0, 1, 0, 0]
    assert body["sum_k"] == 2 and body["sum_n"] == 3
    assert body["rate"] == {"num": 2, "den": 3, "value": pytest.approx(2 / 3)}


def test_offline_endpoint_defaults_m_to_trace_max(client):
    resp = client.post("/offline", json={"sizes": [3, 1], "tau": 2, "b": 1})
    assert resp.status_code == 200
    assert resp.json()["m"] == 3


def test_offline_endpoint_undefined_rate(client):
    resp = client.post("/offline", json={"sizes": [0, 0], "tau": 2, "b": 1, "m": 1})
    assert resp.status_code == 200
    assert resp.json()["rate"] is None


def test_offline_endpoint_rejects_bad_params(client):
    resp = client.post("/offline", json={"sizes": [2], "tau": 2, "b": 2, "m": 2})
    assert resp.status_code == 400
    assert "tau > b" in resp.json()["detail"]


def test_offline_endpoint_validates_schema(client):
    resp = client.post("/offline", json={"tau": 2})
    assert resp.status_code == 422


def test_online_endpoint_point_mass(client):
    resp = client.post(
        "/online",
        json={
            "dist": {"kind": "iid", "probs": [0.0, 0.0, 1.0]},
            "tau": 2,
            "b": 1,
            "m": 2,
            "samples": 3,
            "trials": 4,
            "seed": 9,
        },
    )
    assert resp.status_code == 200
    body = resp.json()
    assert len(body["rows"]) == 4
    for row in body["rows"]:
        assert row["online_rate"] == pytest.approx(row["offline_rate"])
        assert row["total_regret"] == 0
    header = body["csv"].split("\n", 1)[0]
    assert header == "trial,online_rate,offline_rate,total_regret"


def test_online_endpoint_rejects_oversized_distribution(client):
    resp = client.post(
        "/online",
        json={
            "dist": {"kind": "iid", "probs": [0.0, 0.0, 0.0, 1.0]},
            "tau": 2,
            "b": 1,
            "m": 2,
            "samples": 2,
            "trials": 1,
            "seed": 0,
        },
    )
    assert resp.status_code == 400


def test_simulate_endpoint(client):
    resp = client.post(
        "/simulate",
        json={
            "tau": 2,
            "b": 1,
            "m": 2,
            "source": {"kind": "trace", "sizes": [2]},
            "schemes": ["offline", "naive-f=0"],
            "loss": {"kind": "enumerate", "max_bursts": 1},
            "trials": 1,
            "seed": 1,
        },
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["all_decoded"] is True
    assert {row["scheme"] for row in body["rows"]} == {"offline", "naive-f=0"}
    assert body["csv"].startswith("trial,scheme,sum_k,sum_n,rate,regret,decode_ok,ms\n")


def test_simulate_endpoint_rejects_bad_scheme(client):
    resp = client.post(
        "/simulate",
        json={
            "tau": 2,
            "b": 1,
            "m": 2,
            "source": {"kind": "trace", "sizes": [2]},
            "schemes": ["nonsense"],
        },
    )
    assert resp.status_code == 400
