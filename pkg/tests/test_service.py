import json
import warnings

import numpy as np
import pytest

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    from fastapi.testclient import TestClient

from csk import symbols as sy
from csk.service import app

PARAMS = {"N": 3, "gamma": 0.5, "p": 1.8}


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def _post(client, path, body):
    return client.post(path, content=json.dumps(body, allow_nan=True),
                       headers={"content-type": "application/json"})


def test_health(client):
    assert client.get("/v1/health").json() == {"status": "ok"}


def test_symbol_is_real_on_axis(client):
    r = _post(client, "/v1/symbol", {"params": PARAMS, "xi": {"t_min": 0, "t_max": 4, "n": 9}})
    rows = np.array(r.json()["rows"])
    assert r.status_code == 200 and rows.shape == (9, 3)
    assert np.max(np.abs(rows[:, 2])) < 1e-14
    assert rows[0, 1] == pytest.approx(float(np.real(sy.theta(sy.ProblemParams(3, 0.5), 0, 0.0))))


def test_constants_out_of_range_p(client):
    r = _post(client, "/v1/constants", {"params": {"N": 3, "gamma": 0.5, "p": 2.5}})
    data = r.json()
    assert r.status_code == 200
    assert data["data"]["A"] is None and data["data"]["Q0"] is None
    assert data["data"]["Lambda"] == pytest.approx(2 / np.pi)
    assert data["notes"]


def test_pole_ladder(client):
    r = _post(client, "/v1/poles", {"params": {"N": 3, "gamma": 0.5}, "count": 4})
    sig = [e["sigma"] for e in r.json()["data"]["entries"]]
    assert sig == pytest.approx([2 * (0.5 + j) for j in range(4)], abs=1e-10)


def test_green_and_kernel_tables(client):
    g = _post(client, "/v1/green", {"params": PARAMS, "grid": {"t_min": 0, "t_max": 2, "n": 41}})
    assert g.status_code == 200 and len(g.json()["rows"]) == 40 and g.json()["notes"]
    k = _post(client, "/v1/kernel", {"params": PARAMS, "grid": {"t_min": -1, "t_max": 1, "n": 21}})
    body = k.json()
    assert len(body["rows"]) == 20 and body["meta"]["form"] == "ClosedForm0"


def test_solve_mode_accepts_infinite_decay(client):
    t = np.linspace(-12, 12, 481)
    h = np.where(np.abs(t) < 5, np.exp(-1 / np.clip(1 - (t / 5) ** 2, 1e-300, None)), 0.0)
    prof = {"t_min": -12, "t_max": 12, "values": h.tolist(),
            "decay_plus": float("inf"), "decay_minus": float("inf")}
    r = _post(client, "/v1/solve-mode", {"params": {"N": 3, "gamma": 0.5, "p": 2.0}, "h": prof})
    assert r.status_code == 200
    assert r.json()["meta"]["decay_plus"] == pytest.approx(1.0)


def test_hamiltonian_endpoint(client):
    prof = {"t_min": -5, "t_max": 5, "values": [1.0] * 201, "decay_plus": 0.0, "decay_minus": 0.0}
    r = _post(client, "/v1/hamiltonian", {"params": PARAMS, "v": prof})
    body = r.json()
    H = np.array(body["rows"])[:, 1]
    assert np.ptp(H) < 1e-14
    assert body["meta"]["diagnostics"]["dirichlet_error"] < 1e-10


def test_validation_errors_name_the_field(client):
    r = _post(client, "/v1/constants", {"params": {"N": 1, "gamma": 0.5}})
    assert r.status_code == 422 and r.json()["field"] == "params.N"
    r = _post(client, "/v1/constants", {"params": PARAMS, "bogus": 1})
    assert r.status_code == 422 and r.json()["field"] == "bogus"
    r = _post(client, "/v1/verify", {"only": [13]})
    assert r.status_code == 422


def test_numerical_failure_is_500(client):
    r = _post(client, "/v1/ball", {"params": PARAMS, "lam": 5.0, "n_r": 16, "n_ang": 8})
    assert r.status_code == 500
    assert r.json()["kind"] == "numerical" and r.json()["error"] == "NoConvergence"


def test_verify_subset(client):
    r = _post(client, "/v1/verify", {"only": [1, 12]})
    body = r.json()
    assert [x["number"] for x in body["results"]] == [1, 12]
    assert body["all_passed"]
