# -*- coding: utf-8 -*-
"""
Flask API for the forward performance library

Provides REST endpoints for:
- Listing the named model presets
- Evaluating the three-term value expansion at a point
- Computing the approximate portfolio at a point
- Evaluating the exact power benchmark and its HJB residual
"""

import os
import sys
import threading

from dotenv import load_dotenv
from flask import Flask, jsonify, request
from flask_cors import CORS
from pydantic import ValidationError

# Load environment variables
load_dotenv()

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from forward_performance import (  # noqa: E402
    ForwardPerformanceError,
    PowerModelParams,
    ValueSurface,
    approx_value,
    pi_approx,
)
from forward_performance.config import build_market_model, config_from_dict, config_hash  # noqa: E402
from forward_performance.errors import EXIT_VALIDATION  # noqa: E402
from forward_performance.expansion import BoundedCache  # noqa: E402
from forward_performance.power import exact_value, hjb_residual, riccati_solve  # noqa: E402
from forward_performance.presets import PRESETS, preset_names  # noqa: E402

app = Flask(__name__)
CORS(app)

# Surfaces cache averaged coefficients, so keep one per validated config
MAX_SURFACES = int(os.getenv("FPP_MAX_SURFACES", "32"))
_surfaces: BoundedCache[ValueSurface] = BoundedCache(MAX_SURFACES)
_surfaces_lock = threading.Lock()


def get_surface(body: dict) -> ValueSurface:
    if "config" in body:
        cfg = config_from_dict(body["config"])
    elif "preset" in body:
        cfg = config_from_dict({"preset": body["preset"]})
    else:
        raise ValueError("body needs a 'preset' name or an inline 'config'")
    key = config_hash(cfg)
    with _surfaces_lock:
        surface = _surfaces.get(key)
        if surface is None:
            surface = ValueSurface(build_market_model(cfg), tol=cfg.tolerances.quad)
            _surfaces.put(key, surface)
    return surface


def read_point(body: dict) -> dict:
    point = body.get("point") or {}
    try:
        return {
            "t": float(point["t"]),
            "x": float(point["x"]),
            "y1": float(point.get("y1", 1.0)),
            "y2": float(point.get("y2", 1.0)),
            "delta": float(point.get("delta", 0.0)),
            "epsilon": float(point.get("epsilon", 0.0)),
        }
    except KeyError as e:
        raise ValueError(f"point is missing {e.args[0]!r}") from e


def error_response(e: Exception):
    if isinstance(e, ForwardPerformanceError):
        status = 400 if e.exit_code == EXIT_VALIDATION else 500
        return jsonify(e.to_dict()), status
    if isinstance(e, (ValueError, TypeError, ValidationError)):
        return jsonify({"success": False, "error": str(e), "code": "BAD_REQUEST"}), 400
    return jsonify({"success": False, "error": str(e), "code": "ERROR"}), 500


# ============ API Endpoints ============

@app.route('/api/health', methods=['GET'])
def health_check():
    """Health check endpoint"""
    return jsonify({"status": "healthy", "service": "forward-performance"})


@app.route('/api/presets', methods=['GET'])
def list_presets():
    """Named presets with their model sections"""
    return jsonify({
        "success": True,
        "presets": [{"name": name, "model": PRESETS[name]["model"]} for name in preset_names()],
    })


@app.route('/api/eval', methods=['POST'])
def evaluate():
    """
    Three-term expansion at one point.

    Body: { "preset": "cir-power", "point": {"t": 1, "x": 1, "y1": 1, "delta": 0.01} }
    """
    try:
        body = request.get_json() or {}
        surface = get_surface(body)
        point = read_point(body)
        result = approx_value(surface, **point)
        return jsonify({"success": True, "point": point, "result": result.model_dump()})
    except Exception as e:
        return error_response(e)


@app.route('/api/portfolio', methods=['POST'])
def portfolio():
    """
    Approximate portfolio at one point, split into myopic and hedging parts.

    Body: same as /api/eval
    """
    try:
        body = request.get_json() or {}
        surface = get_surface(body)
        point = read_point(body)
        pi = pi_approx(surface, **point)
        return jsonify({"success": True, "point": point, "portfolio": pi.model_dump()})
    except Exception as e:
        return error_response(e)


@app.route('/api/power/exact', methods=['POST'])
def power_exact():
    """
    Exact power-utility value and its relative HJB residual.

    Body: {
        "params": {"gamma_ra": 2, "Lambda": [1], "m0": 1, "beta": 1, "rho": [0.05], "delta": 0.01},
        "t": 1, "x": 1, "y": 1
    }
    """
    try:
        body = request.get_json() or {}
        if "params" not in body:
            return jsonify({"success": False, "error": "Missing params"}), 400
        p = PowerModelParams(**body["params"])
        t, x, y = float(body.get("t", 1.0)), float(body.get("x", 1.0)), float(body.get("y", p.m0))
        solution = riccati_solve(p)
        return jsonify({
            "success": True,
            "value": exact_value(p, t, x, y, solution),
            "hjb_residual": hjb_residual(p, t, x, y, solution),
            "regime": solution.regime.value,
            "roots": [solution.a_minus, solution.a_plus],
        })
    except Exception as e:
        return error_response(e)


if __name__ == '__main__':
    port = int(os.getenv("PORT", "5000"))
    print("Starting Forward Performance API Server...")
    print(f"API available at http://localhost:{port}")
    app.run(host='0.0.0.0', port=port, debug=os.getenv("FLASK_DEBUG") == "1")
