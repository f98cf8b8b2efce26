"""Generalized mean curvature, BY / LY / reduced WY masses, spinor weight and admissibility."""

import numpy as np
import pytest

from qlmass.catalog import (
    boosted_liu_yau_oracle,
    flat_with_P_radial_oracle,
    get_ball_dataset,
    get_boundary_dataset,
)
from qlmass.dirac import BoundarySpinor, flat_ball_solve
from qlmass.embedding import embed_weyl, lift_and_frames, minkowski_dot
from qlmass.errors import GeometryError, PreconditionError
from qlmass.jang import HorizonObstruction, solve_jang
from qlmass.mass_functionals import (
    EIGHT_PI,
    admissibility_report,
    brown_york,
    generalized_mean_curvature,
    liu_yau,
    spinor_weighted_mass,
    time_symmetric_package,
    wang_yau_reduced,
)
from qlmass.pipeline import evaluate_case
from qlmass.sphere_spectral import make_grid, round_metric
from qlmass.surface_geometry import build_bundle


def schwarzschild_by(M, r):
    return r * (1 - np.sqrt(1 - 2 * M / r))


def _by(name, params, L=16):
    g = make_grid(L)
    bd, _ = get_boundary_dataset(name, params, g)
    b = build_bundle(g, bd.sigma)
    emb = embed_weyl(b)
    return g, bd, b, emb


# ---------------------------------------------------------------------------
# generalized_mean_curvature
# ---------------------------------------------------------------------------


def test_h_schwarzschild():
    g = make_grid(12)
    bd, _ = get_boundary_dataset("schwarzschild_round", {"M": 1, "r": 4}, g)
    h = generalized_mean_curvature(bd, np.zeros(g.shape))
    assert np.max(np.abs(h - 0.5 * np.sqrt(0.5))) <= 1e-12


def test_h_minkowski_round():
    g = make_grid(12)
    bd, _ = get_boundary_dataset("minkowski_round", {"r": 1}, g)
    assert np.max(np.abs(generalized_mean_curvature(bd, np.zeros(g.shape)) - 2)) <= 1e-12


def test_h_matches_lift_frame():
    # On the graph sphere the lift's e3 is a boost of the mean-curvature frame;
    # the boost angle is read off from the components of H0 in the lift frame.
    g = make_grid(16)
    bd, _ = get_boundary_dataset("minkowski_graph", {"a": 0.2}, g)
    tau = bd.tau_suggested
    memb = lift_and_frames(embed_weyl(build_bundle(g, bd.sigma, tau)), tau)
    h3 = -minkowski_dot(memb.H0, memb.frame_e30)
    h4 = -minkowski_dot(memb.H0, memb.frame_e40)
    frame_side = h3 * np.sqrt(1 + memb.grad_tau_sq) - np.einsum("itp,itp->tp", memb.alpha_e30, memb.grad_tau)
    h = generalized_mean_curvature(bd, tau, np.arctanh(h4 / h3))
    assert np.max(np.abs(h - frame_side)) <= 1e-7


def test_h_rejects_non_finite_boost():
    g = make_grid(8)
    bd, _ = get_boundary_dataset("minkowski_round", None, g)
    with pytest.raises(GeometryError):
        generalized_mean_curvature(bd, np.zeros(g.shape), np.inf)


# ---------------------------------------------------------------------------
# Brown-York and Liu-Yau
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("r", [1.0, 3.0])
def test_by_minkowski_zero(r):
    g, bd, b, emb = _by("minkowski_round", {"r": r})
    assert abs(brown_york(emb.k0, bd.k_physical, bd.area_form, g, K=b.K).value) <= 1e-10


@pytest.mark.parametrize("r", [4.0, 32.0])
def test_by_schwarzschild(r):
    g, bd, b, emb = _by("schwarzschild_round", {"M": 1, "r": r})
    rep = brown_york(emb.k0, bd.k_physical, bd.area_form, g, K=b.K)
    assert abs(rep.value - schwarzschild_by(1, r)) <= 1e-6
    assert abs(rep.value - (1 + 1 / (2 * r))) <= 1 / r**2


def test_by_value_4_minus_2sqrt2():
    g, bd, b, emb = _by("schwarzschild_round", {"M": 1, "r": 4})
    assert abs(brown_york(emb.k0, bd.k_physical, bd.area_form, g).value - (4 - 2 * np.sqrt(2))) <= 1e-6


def test_by_gate_on_gauss_curvature():
    g = make_grid(8)
    with pytest.raises(PreconditionError):
        brown_york(np.ones(g.shape), np.ones(g.shape), np.ones(g.shape), g, K=-np.ones(g.shape))


def test_report_recompute_and_components():
    g, bd, b, emb = _by("schwarzschild_round", {"M": 1, "r": 8})
    rep = brown_york(emb.k0, bd.k_physical, bd.area_form, g)
    assert abs(rep.recompute() - rep.value) <= 1e-12
    c = rep.components
    assert abs(c["reference_term"] - c["physical_term"] - rep.value) <= 1e-12
    d = rep.to_dict()
    assert d["value"] == rep.value and d["L"] == 16


def test_ly_equals_by_time_symmetric():
    g, bd, b, emb = _by("schwarzschild_round", {"M": 1, "r": 4})
    by = brown_york(emb.k0, bd.k_physical, bd.area_form, g)
    ly = liu_yau(emb.k0, bd.H_norm, bd.area_form, g)
    assert ly.value == by.value
    assert abs(ly.value - (4 - 2 * np.sqrt(2))) <= 1e-6


def test_ly_boosted_positive():
    g, bd, b, emb = _by("minkowski_boosted", {"v": 0.5})
    ly = liu_yau(emb.k0, bd.H_norm, bd.area_form, g)
    assert ly.value > 0
    assert abs(ly.value - boosted_liu_yau_oracle(0.5)) <= 1e-6


def test_boosted_oracle_small_velocity():
    # |H| = sqrt(4 - b^2 sin^4) expands to 2 - b^2 sin^4 / 4, so M_LY ~ b^2 * (1/32) * int sin^4
    b = np.arctanh(1e-3)
    expected = b**2 / 4 * (16 / 15) / 4  # (1/8pi) * 2pi * int_{-1}^{1} (1-u^2)^2 du * b^2 / 4
    assert abs(boosted_liu_yau_oracle(1e-3) - expected) <= 1e-6 * expected


# ---------------------------------------------------------------------------
# reduced Wang-Yau
# ---------------------------------------------------------------------------


def test_wy_schwarzschild_equals_by():
    res = evaluate_case("schwarzschild_round", {"M": 1, "r": 4}, L=12)
    assert abs(res.mass("wy") - res.mass("by")) <= 1e-12
    assert abs(res.mass("wy") - res.mass("ly")) <= 1e-12


def test_wy_minkowski_graph_zero():
    res = evaluate_case("minkowski_graph", {"a": 0.3}, L=16, n_r=10, kinds=("wy",))
    assert abs(res.mass("wy")) <= 1e-6
    assert res.admissible


def test_wy_flat_with_P_ode():
    res = evaluate_case("flat_with_P", {"lam": 0.05}, L=12, n_r=10, kinds=("wy",))
    assert abs(res.mass("wy") - flat_with_P_radial_oracle(0.05)["M_WY"]) <= 1e-5
    rep = res.reports["wy"]
    assert rep.residuals["mean2_package"] <= 1e-8


def test_wy_isometry_mismatch():
    g = make_grid(8)
    pkg = time_symmetric_package(g, round_metric(g), 2 * np.ones(g.shape))
    emb = embed_weyl(build_bundle(g, round_metric(g, 1.1)))
    with pytest.raises(GeometryError):
        wang_yau_reduced(pkg, emb)


def test_wy_missing_jang():
    g = make_grid(8)
    emb = embed_weyl(build_bundle(g, round_metric(g)))
    with pytest.raises(PreconditionError):
        wang_yau_reduced(None, emb)


# ---------------------------------------------------------------------------
# spinor weighted mass
# ---------------------------------------------------------------------------


def _minkowski_wy(L=8):
    g = make_grid(L)
    bd, _ = get_boundary_dataset("minkowski_round", None, g)
    pkg = time_symmetric_package(g, bd.sigma, bd.k_physical)
    emb = embed_weyl(build_bundle(g, bd.sigma))
    return g, wang_yau_reduced(pkg, emb)


def test_spinor_weight_one_equals_wy():
    res = evaluate_case("schwarzschild_round", {"M": 1, "r": 4}, L=12, kinds=("wy",))
    rep = res.reports["wy"]
    m = spinor_weighted_mass(rep.integrand, 1.0, rep.area_form, rep.grid)
    assert abs(m.value - rep.value) <= 1e-12


def test_spinor_weight_zero():
    g, rep = _minkowski_wy()
    assert spinor_weighted_mass(rep.integrand + 5.0, 0.0, rep.area_form, g).value == 0


def test_spinor_weight_from_flat_ball():
    g, rep = _minkowski_wy()
    rng = np.random.default_rng(3)
    alpha = BoundarySpinor(g, rng.normal(size=(2,) + g.shape) + 1j * rng.normal(size=(2,) + g.shape))
    psi = flat_ball_solve(alpha, "MIT")
    weight = np.sum(np.abs(psi.trace().psi) ** 2, axis=0)
    assert abs(spinor_weighted_mass(rep.integrand, weight, rep.area_form, g).value) <= 1e-6


def test_spinor_negative_weight():
    g = make_grid(8)
    with pytest.raises(PreconditionError):
        spinor_weighted_mass(np.ones(g.shape), -np.ones(g.shape), np.ones(g.shape), g)


# ---------------------------------------------------------------------------
# admissibility
# ---------------------------------------------------------------------------


def test_admissible_schwarzschild():
    res = evaluate_case("schwarzschild_round", {"M": 1, "r": 4}, L=12, kinds=("wy",))
    adm = res.admissibility
    assert adm["cond_a"] and adm["cond_b"] and adm["cond_c"] and adm["admissible"]


def test_horizon_adjacent_marginal():
    res = evaluate_case("schwarzschild_round", {"M": 1, "r": 2.05}, L=12, kinds=("wy",))
    adm = res.admissibility
    expected = (2 / 2.05) * np.sqrt(1 - 2 / 2.05)
    assert adm["cond_c"]
    assert abs(adm["cond_c_min"] - expected) <= 1e-10
    assert adm["cond_c_min"] < 0.2


def test_obstruction_makes_cond_b_false():
    d = get_ball_dataset("flat_with_P", {"lam": 1.2}, L=8, n_r=10)
    g = d.grid.sphere
    with pytest.raises(HorizonObstruction) as info:
        solve_jang(d, np.zeros(g.shape))
    adm = admissibility_report(build_bundle(g, round_metric(g)), info.value, np.full(g.shape, -np.inf))
    assert not adm["cond_b"] and not adm["admissible"]


# ---------------------------------------------------------------------------
# scaling and monotonicity
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_masses_scale_linearly(lam):
    base = evaluate_case("schwarzschild_round", {"M": 1, "r": 4}, L=12)
    scaled = evaluate_case("schwarzschild_round", {"M": lam, "r": 4 * lam}, L=12)
    for kind in ("by", "ly", "wy"):
        assert abs(scaled.mass(kind) - lam * base.mass(kind)) <= 1e-9 * lam


def test_by_monotone_in_radius():
    vals = [evaluate_case("schwarzschild_round", {"M": 1, "r": r}, L=12, kinds=("by",)).mass("by")
            for r in (3, 4, 8, 16, 32)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert all(v > 1 for v in vals)


def test_eight_pi():
    assert EIGHT_PI == 8 * np.pi
