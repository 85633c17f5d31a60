"""Smoke tests for the Python bindings: each main operation is exercised once
against values the C++ suites pin down more tightly."""

import json
import math

import pytest

import contactlab as cl


TORUS_SIN_Z = {
    "terms": [
        {"coeff": 1.0, "factors": [{"kind": "sin", "coord": 2, "freq": 1}]}
    ]
}


def test_manifold_catalog():
    t3 = cl.manifold("Torus3")
    assert t3.name == "Torus3"
    assert t3.dim == 3
    assert t3.ambient_dim == 3
    assert t3.periodic == [True, True, True]
    x = t3.random_point(seed=5)
    r = t3.reeb(x)
    assert abs(t3.alpha(x, r) - 1.0) < 1e-9
    rep = t3.contact_check(samples=64, seed=3)
    assert rep["pass"]


def test_unknown_manifold_raises():
    with pytest.raises(ValueError):
        cl.manifold("KleinBottle")


def test_flow_roundtrip():
    t3 = cl.manifold("Torus3")
    # x-dependent term so the conformal exponent is nonzero along the flow
    h = cl.hamiltonian(t3, {
        "terms": [
            {"coeff": 0.4, "factors": [{"kind": "sin", "coord": 2, "freq": 1}]},
            {"coeff": 0.3, "factors": [{"kind": "cos", "coord": 0, "freq": 1}]},
        ]
    })
    assert h.analytic
    psi = cl.flow(h)
    x = t3.random_point(seed=11)
    y, g = psi.forward(1.0, x)
    assert abs(g) > 1e-3
    # inverse reports the forward exponent at the recovered preimage
    back, gi = psi.inverse(1.0, y)
    assert t3.distance(back, x) < 1e-8
    assert abs(gi - g) < 1e-8


def test_constant_energy():
    t3 = cl.manifold("Torus3")
    h = cl.constant(t3, 0.5)
    rep = cl.energy_report(h, time_nodes=17, space_per_dim=8)
    assert abs(rep["linf"] - 0.5) < 1e-12
    assert abs(rep["osc"]) < 1e-12
    assert abs(rep["calabi_weinstein"] - 0.5) < 1e-12
    assert rep["strict"]
    assert rep["ceiling"] == 1


def test_translated_whole_manifold():
    s1 = cl.manifold("CircleS1")
    h = cl.constant(s1, 0.2)
    scan = cl.translated_scan(h, eta_window=(0.0, 1.0), n_seeds=6, eta_grid=8, seed=7)
    kinds = [f["kind"] for f in scan["families"]]
    assert kinds == ["whole_manifold"]
    assert abs(scan["families"][0]["eta"] - 0.2) < 1e-6


def test_box_capacity():
    box = {
        "base_lo": [0.0, 0.0, 0.0],
        "base_hi": [0.25, 0.25, 0.25],
        "r": [0.8, 1.25],
        "factor_areas": [0.0625],
    }
    rep = cl.box_report(box)
    assert rep["height"] == 1.25
    assert math.isclose(rep["gromov_lower_bound"], 0.0625 * (1 - 1e-3))
    scaled = dict(box, scale=3.7)
    assert cl.box_report(scaled)["hat_c"] == rep["hat_c"]


def test_run_experiment(tmp_path):
    cfg = {
        "manifold": "Torus3",
        "hamiltonian": TORUS_SIN_Z,
        "task": "energy",
        "seed": 4,
        "out": str(tmp_path),
        "quiet": True,
        "energy": {"time_nodes": 17, "space_per_dim": 8},
    }
    status = cl.run_experiment(cfg)
    assert status == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["task"] == "energy"
    assert abs(report["results"]["linf_energy"] - 1.0) < 1e-2
    assert (tmp_path / "tables" / "energy_nodes.csv").exists()
