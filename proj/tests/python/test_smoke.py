"""Smoke tests for the python bindings."""

import math

import pytest

import oldroyd


def test_matrix_calculus_round_trip():
    sym = (0.4, -0.3, 1.1)
    exp = oldroyd.spd_exp(sym)
    back = oldroyd.spd_log(exp)
    assert back == pytest.approx(sym, abs=1e-12)


def test_entropy_terms_scalar_case():
    rel, dis = oldroyd.entropy_terms((2.0, 0.0, 0.5))
    assert rel == pytest.approx(0.5, abs=1e-13)
    assert dis == pytest.approx(1.0, abs=1e-13)


def test_non_spd_input_raises():
    with pytest.raises(oldroyd.DomainError):
        oldroyd.spd_log((1.0, 0.0, -1.0))


def test_pair_inequality_slacks_nonnegative():
    s = (2.0, 0.3, 1.0)
    t = (0.7, -0.1, 1.4)
    slacks = oldroyd.pair_inequality_slacks(s, t)
    assert min(slacks.values()) >= -1e-12


def test_decompose_gradient_worked_example():
    d = oldroyd.decompose_gradient((0.0, 1.0, 0.0, 0.0), (1.0, 0.0, 0.5))
    assert d["omega"] == pytest.approx(-1.0, abs=1e-12)
    assert d["n"] == pytest.approx(1.0, abs=1e-12)


def test_mesh_construction_and_refinement():
    mesh = oldroyd.build_structured_mesh(2, 2)
    assert mesh.num_triangles == 8
    assert mesh.total_area == pytest.approx(1.0, abs=1e-14)
    refined = oldroyd.barycentric_refine(mesh)
    assert refined.num_triangles == 24
    element, bary = refined.locate(0.5, 0.5)
    assert 0 <= element < refined.num_triangles
    assert sum(bary) == pytest.approx(1.0, abs=1e-12)


def test_verify_lemmas_small_sample():
    report = oldroyd.verify_lemmas(samples=200, seed=7)
    assert report["pass"]
    assert report["worst_pair_slack"] >= -1e-12


def test_relaxation_run_dissipates():
    config = """
[scheme]
formulation = conformation
advection = characteristic
elements = scott-vogelius
stress_space = P0
dt = 0.5
[params]
re = 1.0
wi = 1.0
eps = 0.5
[mesh]
nx = 1
ny = 1
barycentric_refine = true
[run]
initial = relaxation
sigma0 = 2.0 0.0 0.5
n_steps = 30
"""
    result = oldroyd.simulate(config)
    assert result["exit_code"] == 0
    records = result["records"]
    assert len(records) == 31
    energies = [r["F"] for r in records]
    assert energies[0] == pytest.approx(0.125, abs=1e-12)
    assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))
    assert energies[-1] < energies[0]
