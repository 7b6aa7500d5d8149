# -*- coding: utf-8 -*-
"""Tests for the HTTP API"""

import math

import pytest

import app as app_module
from app import app
from forward_performance.expansion import BoundedCache


@pytest.fixture
def client():
    app.config["TESTING"] = True
    with app.test_client() as client:
        yield client


POWER_PARAMS = {"gamma_ra": 2.0, "Lambda": [1.0], "m0": 1.0, "beta": 1.0, "rho": [0.05], "delta": 0.01}


class TestApi:
    def test_health(self, client):
        response = client.get("/api/health")
        assert response.status_code == 200
        assert response.get_json()["status"] == "healthy"

    def test_presets(self, client):
        names = [p["name"] for p in client.get("/api/presets").get_json()["presets"]]
        assert "cir-power" in names and "ou-linear" in names

    def test_eval(self, client):
        response = client.post("/api/eval", json={"preset": "cir-power", "point": {"t": 0.1, "x": 1.0}})
        assert response.status_code == 200
        result = response.get_json()["result"]
        assert result["v0"] == pytest.approx(-4.0 * math.exp(0.025), rel=1e-8)
        assert result["combined"] == result["v0"]

    def test_eval_with_slow_scale(self, client):
        point = {"t": 0.1, "x": 1.0, "y1": 1.0, "delta": 0.01}
        result = client.post("/api/eval", json={"preset": "cir-power", "point": point}).get_json()["result"]
        assert result["v10"] == pytest.approx(0.00003125 * result["v0"], rel=1e-8)

    def test_portfolio(self, client):
        response = client.post("/api/portfolio", json={"preset": "cir-power", "point": {"t": 0.5, "x": 2.0, "y1": 4.0}})
        assert response.status_code == 200
        pi = response.get_json()["portfolio"]
        assert pi["weights"][0] == pytest.approx(2.0, rel=1e-8)

    def test_power_exact(self, client):
        response = client.post("/api/power/exact", json={"params": POWER_PARAMS, "t": 1.0, "x": 1.0, "y": 1.0})
        assert response.status_code == 200
        body = response.get_json()
        assert body["hjb_residual"] <= 1e-6
        assert body["regime"] == "risk-averse"
        assert body["roots"][0] < body["roots"][1]

    def test_missing_params(self, client):
        assert client.post("/api/power/exact", json={}).status_code == 400

    def test_invalid_params(self, client):
        bad = {**POWER_PARAMS, "gamma_ra": 1.0}
        assert client.post("/api/power/exact", json={"params": bad}).status_code == 400

    def test_inadmissible_regime(self, client):
        bad = {**POWER_PARAMS, "gamma_ra": 0.5}
        response = client.post("/api/power/exact", json={"params": bad})
        assert response.status_code == 400
        assert response.get_json()["code"] == "REGIME"

    def test_missing_point_coordinate(self, client):
        response = client.post("/api/eval", json={"preset": "cir-power", "point": {"x": 1.0}})
        assert response.status_code == 400

    def test_unknown_preset(self, client):
        response = client.post("/api/eval", json={"preset": "nope", "point": {"t": 0.1, "x": 1.0}})
        assert response.status_code == 400
        assert response.get_json()["code"] == "CONFIG"

    def test_surface_cache_is_bounded(self, client, monkeypatch):
        monkeypatch.setattr(app_module, "_surfaces", BoundedCache(3))
        for seed in range(8):
            body = {"config": {"preset": "cir-power", "seed": seed}, "point": {"t": 0.1, "x": 1.0}}
            assert client.post("/api/eval", json=body).status_code == 200
        assert len(app_module._surfaces) == 3
