"""Weyl embedding, Minkowski lift, normal frames and the total mean curvature identity."""

import csv
import json
from functools import lru_cache

import numpy as np
import pytest
import sympy as sp
from scipy.spatial.transform import Rotation

from qlmass.embedding import (
    embed_weyl,
    extrinsic_data_r3,
    lift_and_frames,
    minkowski_dot,
    rotate_embedding,
    verify_mean1,
    dump_embedding,
)
from qlmass.errors import PreconditionError
from qlmass.sphere_spectral import integrate, make_grid, round_metric
from qlmass.surface_geometry import build_bundle

T, P = sp.symbols("theta phi")


@lru_cache(maxsize=None)
def ellipsoid_oracle(a, b, c):
    """Closed-form first fundamental form and mean curvature of an ellipsoid chart."""
    X = sp.Matrix([a * sp.sin(T) * sp.cos(P), b * sp.sin(T) * sp.sin(P), c * sp.cos(T)])
    Xt, Xp = X.diff(T), X.diff(P)
    E, F, G = Xt.dot(Xt), Xt.dot(Xp), Xp.dot(Xp)
    n = Xt.cross(Xp)  # outward for this chart
    nn = sp.sqrt(n.dot(n))
    e, f, g = (-X.diff(T, 2).dot(n) / nn, -X.diff(T, P).dot(n) / nn, -X.diff(P, 2).dot(n) / nn)
    H = (E * g - 2 * F * f + G * e) / (E * G - F**2)
    metric = sp.lambdify((T, P), [E, F, G], "numpy")
    mean = sp.lambdify((T, P), H, "numpy")
    return metric, mean


def _ellipsoid_bundle(grid, a, b, c):
    metric, _ = ellipsoid_oracle(a, b, c)
    E, F, G = (np.broadcast_to(v, grid.shape) for v in metric(grid.theta2d, grid.phi2d))
    sigma = np.array([[E, F], [F, G]], dtype=float)
    return build_bundle(grid, sigma)


@pytest.mark.parametrize("r", [1.0, 2.5])
def test_round_sphere_embedding(r):
    g = make_grid(12)
    emb = embed_weyl(build_bundle(g, round_metric(g, r)))
    assert np.max(np.abs(emb.k0 - 2 / r)) <= 1e-9
    assert np.max(np.abs(np.linalg.norm(emb.X, axis=0) - r)) <= 1e-9
    assert emb.max_defect <= 1e-9


def test_ellipsoid_mean_curvature():
    g = make_grid(24)
    emb = embed_weyl(_ellipsoid_bundle(g, 1.0, 1.0, 1.2))
    _, mean = ellipsoid_oracle(1.0, 1.0, 1.2)
    assert np.max(np.abs(emb.k0 - mean(g.theta2d, g.phi2d))) <= 1e-7


def test_gauge_centroid_and_axes():
    g = make_grid(24)
    b = _ellipsoid_bundle(g, 1.0, 1.0, 1.2)
    emb = embed_weyl(b)
    mu = b.mu_sigma_hat
    centroid = [integrate(g, emb.X[k], mu) for k in range(3)]
    assert np.max(np.abs(centroid)) <= 1e-10
    inertia = np.array([[integrate(g, emb.X[i] * emb.X[j], mu) for j in range(3)] for i in range(3)])
    assert np.max(np.abs(inertia - np.diag(np.diag(inertia)))) <= 1e-9


def test_non_convex_target_rejected():
    g = make_grid(24)
    b = build_bundle(g, round_metric(g), 2.5 * np.cos(3 * g.theta2d))
    with pytest.raises(PreconditionError):
        embed_weyl(b)


def test_embedding_deterministic():
    g = make_grid(16)
    b = build_bundle(g, round_metric(g), 0.2 * g.cos_t)
    assert np.array_equal(embed_weyl(b).X, embed_weyl(b).X)


@pytest.mark.parametrize("r", [1.0, 4.0])
def test_extrinsic_round(r):
    g = make_grid(12)
    k0, h, n, metric = extrinsic_data_r3(g, r * g.frame[0])
    assert np.max(np.abs(k0 - 2 / r)) <= 1e-9
    assert np.max(np.abs(n - g.frame[0])) <= 1e-12


def test_extrinsic_ellipsoid_closed_form():
    g = make_grid(24)
    X = np.stack([g.sin_t * np.cos(g.phi2d), g.sin_t * np.sin(g.phi2d), 1.2 * g.cos_t])
    k0 = extrinsic_data_r3(g, X)[0]
    _, mean = ellipsoid_oracle(1.0, 1.0, 1.2)
    assert np.max(np.abs(k0 - mean(g.theta2d, g.phi2d))) <= 1e-7


def test_rigid_rotation_invariance():
    g = make_grid(16)
    b = _ellipsoid_bundle(g, 1.0, 1.1, 1.2)
    emb = embed_weyl(b)
    R = Rotation.from_euler("zyx", [0.3, -1.1, 2.0]).as_matrix()
    rot = rotate_embedding(emb, R)
    assert np.max(np.abs(rot.k0 - emb.k0)) <= 1e-10
    mu = b.mu_sigma_hat
    assert abs(integrate(g, rot.k0, mu) - integrate(g, emb.k0, mu)) <= 1e-10


# ---------------------------------------------------------------------------
# lift_and_frames
# ---------------------------------------------------------------------------


def _static_lift(c):
    g = make_grid(12)
    tau = np.full(g.shape, c)
    return lift_and_frames(embed_weyl(build_bundle(g, round_metric(g), tau)), tau)


def test_static_lift():
    memb = _static_lift(0.0)
    assert np.array_equal(memb.frame_e40, np.broadcast_to(memb.T0[:, None, None], memb.frame_e40.shape))
    assert np.all(memb.alpha_e30 == 0)


def test_constant_tau_lift_matches_static():
    m0, mc = _static_lift(0.0), _static_lift(1.7)
    assert np.max(np.abs(mc.frame_e40 - m0.frame_e40)) <= 1e-12
    assert np.max(np.abs(mc.alpha_e30 - m0.alpha_e30)) <= 1e-12
    assert np.max(np.abs(mc.H0[1:] - m0.H0[1:])) <= 1e-12


def _alpha_oracle(theta, phi, a, h=1e-4):
    """Finite-difference connection form of the lift of the unit sphere by tau = a cos(theta)."""

    def e_r(t, p):
        return np.stack([np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)])

    # sigma = round - d tau d tau, d tau = (-a sin t, 0)
    st = np.sin(theta)
    s_tt = 1 - a**2 * st**2
    v_t = -a * st / s_tt
    grad_sq = v_t * (-a * st)
    X_t = np.stack([np.cos(theta) * np.cos(phi), np.cos(theta) * np.sin(phi), -st])
    e4_space = v_t * X_t / np.sqrt(1 + grad_sq)
    d_t = (e_r(theta + h, phi) - e_r(theta - h, phi)) / (2 * h)
    d_p = (e_r(theta, phi + h) - e_r(theta, phi - h)) / (2 * h)
    # e3 has no time component, so only the spatial part of e4 contributes
    return np.stack([np.sum(d_t * e4_space, axis=0), np.sum(d_p * e4_space, axis=0)])


def test_frames_and_connection_form():
    g = make_grid(24)
    tau = 0.2 * g.cos_t
    sigma = round_metric(g)
    sigma[0, 0] -= (0.2 * g.sin_t) ** 2  # sigma_hat is then the unit round metric
    memb = lift_and_frames(embed_weyl(build_bundle(g, sigma, tau)), tau)
    assert memb.orthonormality_residual() <= 1e-10
    assert np.all(minkowski_dot(memb.frame_e40, np.array([1.0, 0, 0, 0])[:, None, None]) < 0)
    oracle = _alpha_oracle(g.theta2d, g.phi2d, 0.2)
    assert np.max(np.abs(memb.alpha_e30 - oracle)) <= 1e-6


# ---------------------------------------------------------------------------
# verify_mean1
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("r", [1.0, 4.0])
def test_mean1_static_round(r):
    g = make_grid(12)
    b = build_bundle(g, round_metric(g, r))
    rep = verify_mean1(lift_and_frames(embed_weyl(b), b.tau), b)
    assert abs(rep["lhs"] - 8 * np.pi * r) <= 1e-9
    assert abs(rep["rhs"] - 8 * np.pi * r) <= 1e-9


def test_mean1_graph_family():
    from qlmass.catalog import get_boundary_dataset

    g = make_grid(24)
    bd, _ = get_boundary_dataset("minkowski_graph", {"a": 0.3}, g)
    b = build_bundle(g, bd.sigma, bd.tau_suggested)
    rep = verify_mean1(lift_and_frames(embed_weyl(b), bd.tau_suggested), b)
    assert rep["residual"] <= 1e-6
    assert abs(rep["lhs"] - 8 * np.pi) <= 1e-9  # sigma_hat is the unit round metric


def test_embedding_dump(tmp_path):
    g = make_grid(8)
    emb = embed_weyl(build_bundle(g, round_metric(g), 0.1 * g.cos_t))
    coef, hist = dump_embedding(emb, tmp_path)
    payload = json.loads(coef.read_text())
    assert payload["L"] == 8
    with hist.open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["iter", "defect_norm", "step_size"]
    assert len(rows) == len(emb.history) + 1
