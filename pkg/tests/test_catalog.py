"""Catalog entries: constraints, boundary data from two routes and closed-form oracles."""

import json

import numpy as np
import pytest
import sympy as sp

from qlmass import catalog
from qlmass.errors import ConfigurationError
from qlmass.jang import constraint_residuals
from qlmass.sphere_spectral import make_grid


def scalar_curvature_conformally_flat(m, d):
    """Scalar curvature of psi^4 delta from R = -8 psi^-5 Laplacian(psi), by sympy."""
    x, y, z = sp.symbols("x y z", real=True)
    psi = 1 + sp.Rational(1, 2) * m / sp.sqrt(x**2 + y**2 + z**2 + d**2)
    lap = sum(sp.diff(psi, v, 2) for v in (x, y, z))
    return sp.lambdify((x, y, z), -8 * lap / psi**5, "numpy")


@pytest.mark.parametrize("name", [n for n, e in catalog.ENTRIES.items() if "ball" in e.kinds])
def test_ball_constraints(name):
    cr = constraint_residuals(catalog.get_ball_dataset(name, None, L=16, n_r=18))
    assert cr["max_hamiltonian"] <= 1e-9
    assert cr["max_momentum"] <= 1e-9


def test_vacuum_flags_match_sources():
    for name, e in catalog.ENTRIES.items():
        if "ball" in e.kinds:
            data = catalog.get_ball_dataset(name, None, L=8, n_r=8)
            vac = np.max(np.abs(data.mu)) == 0 and np.max(np.abs(data.J)) == 0
            assert vac == e.vacuum


def test_flat_with_P_energy_density():
    for lam in (0.05, 0.7):
        data = catalog.get_ball_dataset("flat_with_P", {"lam": lam}, L=8, n_r=8)
        assert np.max(np.abs(data.mu - 3 * lam**2)) <= 1e-14


def test_conformally_flat_energy_density():
    m, d = 0.5, 1.0
    data = catalog.get_ball_dataset("conformally_flat", {"m": m, "d": d}, L=8, n_r=10)
    R = scalar_curvature_conformally_flat(m, d)(*data.grid.points)
    assert np.max(np.abs(data.mu - R / 2)) <= 1e-12


def test_bad_energy_violates_dominant_energy():
    cr = constraint_residuals(catalog.get_ball_dataset("bad_energy", {"beta": 0.5}, L=8, n_r=10))
    assert not cr["dominant_energy_ok"]
    assert cr["min_dominant_energy"] < 0


@pytest.mark.parametrize("name,params", [("minkowski_round", {"r": 1.5}), ("minkowski_graph", {"a": 0.3}),
                                         ("minkowski_boosted", {"v": 0.5})])
def test_boundary_data_two_routes(name, params):
    # the closed-form boundary triple against the trace of the ball fields
    L = 16
    closed, _ = catalog.get_boundary_dataset(name, params, make_grid(L))
    traced = catalog.boundary_data_from_ball(catalog.get_ball_dataset(name, params, L=L, n_r=12),
                                             catalog.ball_tau(name, params, make_grid(L)))
    for attr in ("sigma", "k_physical", "trP_sigma", "H_norm", "alpha_H", "tau_suggested"):
        assert np.max(np.abs(getattr(closed, attr) - getattr(traced, attr))) <= 1e-9, attr


def test_schwarzschild_boundary():
    g = make_grid(8)
    data, oracle = catalog.get_boundary_dataset("schwarzschild_round", {"M": 1.0, "r": 4.0}, g)
    assert np.max(np.abs(data.H_norm - 0.5 * np.sqrt(0.5))) <= 1e-15
    assert np.max(np.abs(data.k_physical - data.H_norm)) == 0
    assert oracle["M_BY"] == pytest.approx(4 * (1 - np.sqrt(0.5)), abs=1e-15)


def test_conformally_flat_oracle_matches_trace():
    m, d = 0.5, 1.0
    ball = catalog.get_ball_dataset("conformally_flat", {"m": m, "d": d}, L=12, n_r=18)
    traced = catalog.boundary_data_from_ball(ball)
    o = catalog.conformally_flat_oracle(m, d)
    assert np.max(np.abs(traced.k_physical - o["k"])) <= 1e-8


def test_boosted_oracle_small_velocity():
    # 2 - sqrt(4 - e) ~ e/4 so the integral is b^2/4 * 16/15 / 4 to leading order
    v = 1e-3
    b = np.arctanh(v)
    assert catalog.boosted_liu_yau_oracle(v) == pytest.approx(b**2 / 15, rel=1e-5)
    assert catalog.boosted_liu_yau_oracle(0.0) == 0.0


def test_radial_oracle_centre_and_boundary():
    o = catalog.flat_with_P_radial_oracle(0.05)
    assert o["f"](1.0) == pytest.approx(0.0, abs=1e-13)
    assert o["w"](1e-4) == pytest.approx(0.05e-4, rel=1e-3)


@pytest.mark.parametrize("name,params", [
    ("nonexistent", None),
    ("flat", {"r": 1.0}),
    ("minkowski_graph", {"a": 1.2}),
    ("minkowski_boosted", {"v": 1.0}),
    ("minkowski_round", {"r": -1.0}),
    ("conformally_flat", {"d": 0.0}),
])
def test_bad_requests(name, params):
    with pytest.raises(ConfigurationError):
        if name in catalog.ENTRIES and "boundary" in catalog.ENTRIES[name].kinds:
            catalog.get_boundary_dataset(name, params, make_grid(4))
        else:
            catalog.get_ball_dataset(name, params, L=4, n_r=4)


@pytest.mark.parametrize("r", [2.0, 1.5])
def test_schwarzschild_inside_horizon(r):
    with pytest.raises(ConfigurationError):
        catalog.get_boundary_dataset("schwarzschild_round", {"r": r}, make_grid(4))


def test_kind_mismatch():
    with pytest.raises(ConfigurationError):
        catalog.get_ball_dataset("schwarzschild_round")
    with pytest.raises(ConfigurationError):
        catalog.get_boundary_dataset("flat", None, make_grid(4))


def test_list_entries():
    entries = catalog.list_entries()
    assert [e["name"] for e in entries] == list(catalog.ENTRIES)
    json.dumps(entries)


def test_dump_entry(tmp_path):
    paths = catalog.dump_entry("schwarzschild_round", None, tmp_path, L=6)
    assert {p.name for p in paths} >= {"schwarzschild_round_sigma.csv", "schwarzschild_round.json"}
    meta = json.loads((tmp_path / "schwarzschild_round.json").read_text())
    assert meta["params"] == {"M": 1.0, "r": 4.0}
    assert meta["oracle"]["M_BY"] == pytest.approx(4 * (1 - np.sqrt(0.5)))
    assert catalog.dump_entry("flat", None, tmp_path, L=6, n_r=6)
