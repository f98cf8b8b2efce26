"""Ball discretization, Jang solver, boundary package and the X-field report."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qlmass.catalog import conformally_flat_oracle, flat_with_P_radial_oracle, get_ball_dataset
from qlmass.errors import DimensionError
from qlmass.jang import (
    HorizonObstruction,
    JangOptions,
    ball_gradient,
    ball_integrate,
    constraint_residuals,
    graph_boundary_data,
    make_ball_grid,
    solve_jang,
    x_field_and_energy_report,
)
from qlmass.sphere_spectral import make_grid, ylm


def flat_jang_residual(bg, f, P):
    """Jang operator for the flat metric, written out componentwise."""
    df = ball_gradient(bg, f)
    H = ball_gradient(bg, df)
    W2 = 1 + np.einsum("i...,i...->...", df, df)
    A = np.eye(3)[:, :, None, None, None] - df[:, None] * df[None, :] / W2
    return np.einsum("ij...,ij...->...", A, H / np.sqrt(W2) - P)


# ---------------------------------------------------------------------------
# ball grid
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("L,n_r", [(4, 4), (8, 10), (16, 18)])
def test_ball_volume(L, n_r):
    bg = make_ball_grid(L, n_r)
    assert abs(ball_integrate(bg, np.ones(bg.shape)) - 4 * np.pi / 3) <= 1e-12


def test_ball_nodes_avoid_centre():
    bg = make_ball_grid(8, 10)
    assert bg.r.min() > 0 and bg.r[-1] == 1.0
    assert np.all(np.diff(bg.r) > 0)


def test_ball_gradient_of_polynomial():
    bg = make_ball_grid(8, 10)
    y = bg.points
    f = y[0] ** 2 * y[2] + 3 * y[1]
    grad = ball_gradient(bg, f)
    exact = np.stack([2 * y[0] * y[2], 3 * np.ones(bg.shape), y[0] ** 2])
    assert np.max(np.abs(grad - exact)) <= 1e-12


# ---------------------------------------------------------------------------
# solve_jang
# ---------------------------------------------------------------------------


def test_zero_data_gives_zero():
    d = get_ball_dataset("flat", L=8, n_r=10)
    sol = solve_jang(d, np.zeros(d.grid.sphere.shape))
    assert np.all(sol.f == 0)
    assert sol.residual == 0


def test_zero_data_curved_metric():
    d = get_ball_dataset("conformally_flat", L=8, n_r=12)
    sol = solve_jang(d, np.zeros(d.grid.sphere.shape))
    assert np.all(sol.f == 0)


def test_constant_data_gives_constant():
    d = get_ball_dataset("flat", L=8, n_r=10)
    sol = solve_jang(d, np.full(d.grid.sphere.shape, 0.3))
    assert np.max(np.abs(sol.f - 0.3)) <= 1e-10


def test_radial_ode_oracle():
    d = get_ball_dataset("flat_with_P", {"lam": 0.05}, L=8, n_r=12)
    sol = solve_jang(d, np.zeros(d.grid.sphere.shape))
    oracle = flat_with_P_radial_oracle(0.05)
    assert np.max(np.abs(sol.f - oracle["f"](d.grid.r)[:, None, None])) <= 1e-7
    assert sol.residual <= 1e-8
    assert np.max(np.abs(sol.f[-1])) <= 1e-10


def test_independent_residual():
    d = get_ball_dataset("flat_with_P", {"lam": 0.05}, L=8, n_r=12)
    tau = 0.1 * ylm(d.grid.sphere, 1, 0).real
    sol = solve_jang(d, tau)
    res = flat_jang_residual(d.grid, sol.f, d.P)
    assert np.max(np.abs(res[:-1])) <= 1e-8
    assert np.max(np.abs(sol.f[-1] - tau)) <= 1e-10


def test_horizon_obstruction():
    d = get_ball_dataset("flat_with_P", {"lam": 1.2}, L=8, n_r=10)
    with pytest.raises(HorizonObstruction) as info:
        solve_jang(d, np.zeros(d.grid.sphere.shape))
    exc = info.value
    assert exc.trapped_margin <= 0
    assert exc.f.shape == d.grid.shape
    assert len(exc.locus["position"]) == 3


def test_blowup_threshold_triggers():
    d = get_ball_dataset("flat_with_P", {"lam": 0.05}, L=8, n_r=10)
    g = d.grid.sphere
    with pytest.raises(HorizonObstruction) as info:
        solve_jang(d, 0.5 * g.cos_t, JangOptions(blowup_threshold=0.1))
    assert info.value.max_gradient > 0.1


def test_tau_on_wrong_grid():
    d = get_ball_dataset("flat", L=8, n_r=10)
    with pytest.raises(DimensionError):
        solve_jang(d, np.zeros(make_grid(6).shape))


@settings(max_examples=6)
@given(c=st.floats(-2, 2), amp=st.floats(-0.2, 0.2))
def test_vertical_translation(c, amp):
    d = get_ball_dataset("flat_with_P", {"lam": 0.05}, L=6, n_r=8)
    tau = amp * d.grid.sphere.cos_t
    a = solve_jang(d, tau)
    b = solve_jang(d, tau + c)
    assert np.max(np.abs(b.f - a.f - c)) <= 1e-9


# ---------------------------------------------------------------------------
# graph_boundary_data and the X report
# ---------------------------------------------------------------------------


def test_flat_boundary_package():
    d = get_ball_dataset("flat", L=8, n_r=10)
    bd = graph_boundary_data(solve_jang(d, np.zeros(d.grid.sphere.shape)), d)
    assert np.max(np.abs(bd["k_tilde"] - 2)) <= 1e-12
    assert np.max(np.abs(bd["accel_term"])) <= 1e-14
    assert np.max(np.abs(bd["momentum_term"])) <= 1e-14


def test_conformal_mean_curvature():
    d = get_ball_dataset("conformally_flat", {"m": 0.5, "d": 1.0}, L=8, n_r=18)
    bd = graph_boundary_data(solve_jang(d, np.zeros(d.grid.sphere.shape)), d)
    assert np.max(np.abs(bd["k_tilde"] - conformally_flat_oracle(0.5, 1.0)["k"])) <= 1e-6


def test_radial_boundary_package():
    d = get_ball_dataset("flat_with_P", {"lam": 0.05}, L=8, n_r=12)
    bd = solve_jang(d, np.zeros(d.grid.sphere.shape)).boundary
    oracle = flat_with_P_radial_oracle(0.05)
    for key in ("k_tilde", "accel_term", "momentum_term"):
        assert np.max(np.abs(bd[key] - oracle[key])) <= 1e-6, key
    # sinh(phi) = -f3 / sqrt(1 + |grad tau|^2), with f3 = w(1)
    assert np.max(np.abs(np.sinh(bd["phi"]) + oracle["w1"])) <= 1e-10


def test_boundary_metric_is_sigma_hat():
    d = get_ball_dataset("minkowski_graph", {"a": 0.3}, L=8, n_r=10)
    g = d.grid.sphere
    tau = 0.3 * g.cos_t
    bd = solve_jang(d, tau).boundary
    expected = np.zeros((2, 2) + g.shape)
    expected[0, 0] = 1.0
    expected[1, 1] = g.sin_t**2
    assert np.max(np.abs(bd["sigma_hat"] - expected)) <= 1e-8


def test_boost_angle_relation():
    d = get_ball_dataset("flat_with_P", {"lam": 0.05}, L=8, n_r=10)
    bd = solve_jang(d, 0.1 * d.grid.sphere.cos_t).boundary
    assert np.max(np.abs(np.sinh(bd["phi"]) + bd["f3"] / np.sqrt(1 + bd["grad_tau_sq"]))) <= 1e-10


def test_flat_x_report():
    d = get_ball_dataset("flat", L=8, n_r=10)
    rep = x_field_and_energy_report(solve_jang(d, np.zeros(d.grid.sphere.shape)), d)
    assert np.all(rep["X_flat"] == 0)
    assert abs(rep["min_curvature_condition"]) <= 1e-10
    assert abs(rep["min_boundary_condition"] - 2) <= 1e-12
    assert rep["dominant_energy_ok"]


def test_radial_x_report():
    lam = 0.05
    d = get_ball_dataset("flat_with_P", {"lam": lam}, L=8, n_r=12)
    sol = solve_jang(d, np.zeros(d.grid.sphere.shape))
    rep = x_field_and_energy_report(sol, d)
    o = flat_with_P_radial_oracle(lam)
    assert abs(rep["min_boundary_condition"] - (o["k_tilde"] - o["accel_term"] + o["momentum_term"])) <= 1e-6
    assert np.max(np.abs(sol.boundary["X_normal"] - (o["accel_term"] - o["momentum_term"]))) <= 1e-6
    # the Schoen-Yau identity bounds the curvature condition below by 2 mu = 6 lam^2
    assert rep["min_curvature_condition"] >= 6 * lam**2 - 1e-8
    assert rep["dominant_energy_ok"]


def test_bad_energy_flag():
    d = get_ball_dataset("bad_energy", L=8, n_r=10)
    assert not constraint_residuals(d)["dominant_energy_ok"]


def test_time_symmetric_reduction():
    # P = 0, tau = 0: X vanishes and k_tilde is the physical k
    d = get_ball_dataset("conformally_flat", L=8, n_r=12)
    sol = solve_jang(d, np.zeros(d.grid.sphere.shape))
    rep = x_field_and_energy_report(sol, d)
    assert np.max(np.abs(rep["X_flat"])) <= 1e-12
    assert np.max(np.abs(sol.boundary["k_tilde"] - sol.boundary["k"])) <= 1e-12
