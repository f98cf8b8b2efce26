r"""Isometric embedding of convex sphere metrics and the Minkowski lift.

The Weyl problem is solved by Gauss-Newton over real spherical-harmonic
coefficients of the three Cartesian components of the embedding, minimizing
the quadrature-weighted isometry defect.  The image is then lifted into
Minkowski space by adding the time function along the unit timelike vector
``T0 = (1, 0, 0, 0)``; the Minkowski product is ``<a, b> = -a0 b0 + a.b``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import lstsq

from .errors import ConvergenceError, DimensionError, GeometryError, PreconditionError
from .sphere_spectral import (
    SphereGrid,
    area_density,
    check_metric,
    covariant_calculus,
    derivatives,
    integrate,
    second_derivatives,
    to_coord,
    to_frame,
)
from .surface_geometry import SurfaceMetricBundle, convexity_check

__all__ = [
    "Embedding3",
    "MinkowskiEmbedding",
    "embed_weyl",
    "extrinsic_data_r3",
    "lift_and_frames",
    "verify_mean1",
    "minkowski_dot",
    "rotate_embedding",
    "dump_embedding",
    "real_basis",
]

T0 = np.array([1.0, 0.0, 0.0, 0.0])


def minkowski_dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minkowski product of 4-vector fields (leading axis of length 4)."""
    return -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]


def real_basis(grid: SphereGrid, Lb: int | None = None):
    """Real orthonormal harmonics and their frame derivatives at the nodes.

    Returns
    -------
    Y, Dt, Dp : ndarray, shape (n_nodes, (Lb+1)**2)
        Values, ``d/dtheta`` and ``(1/sin theta) d/dphi``.  Column order is
        ``(l, m)`` with ``m`` running from ``-l`` to ``l``.
    """
    Lb = grid.L if Lb is None else Lb
    P, dP = grid.legendre
    st = np.sin(grid.theta)[:, None]
    phi = grid.phi[None, :]
    cols_y, cols_t, cols_p = [], [], []
    s2 = np.sqrt(2.0)
    for l in range(Lb + 1):
        for m in range(-l, l + 1):
            am = abs(m)
            p = P[am][l - am][:, None]
            dp = dP[am][l - am][:, None]
            if m == 0:
                y, yt, yp = p + 0 * phi, dp + 0 * phi, 0 * p * phi
            elif m > 0:
                c, s = np.cos(m * phi), np.sin(m * phi)
                y, yt, yp = s2 * p * c, s2 * dp * c, -s2 * m * p * s / st
            else:
                c, s = np.cos(am * phi), np.sin(am * phi)
                y, yt, yp = s2 * p * s, s2 * dp * s, s2 * am * p * c / st
            cols_y.append(y.ravel())
            cols_t.append(yt.ravel())
            cols_p.append(yp.ravel())
    return np.array(cols_y).T, np.array(cols_t).T, np.array(cols_p).T


@dataclass(frozen=True, eq=False)
class Embedding3:
    """Embedding of a sphere metric in Euclidean 3-space.

    Attributes
    ----------
    X : ndarray, shape (3, n_theta, n_phi)
        Cartesian components of the embedding.
    induced_metric, defect : ndarray, shape (2, 2, n_theta, n_phi)
        Induced metric and its difference from the target (coordinate
        components).
    k0 : ndarray
        Mean curvature for the outward normal (``2/r`` on a round sphere).
    normal : ndarray, shape (3, n_theta, n_phi)
        Outward unit normal.
    second_fundamental_form : ndarray, shape (2, 2, n_theta, n_phi)
    coeffs : ndarray, shape (3, (Lb+1)**2)
        Real harmonic coefficients of ``X`` before the rigid gauge fix.
    history : list of dict
        Gauss-Newton record with keys ``iter``, ``defect_norm``, ``step_size``.
    """

    grid: SphereGrid
    X: np.ndarray
    induced_metric: np.ndarray
    defect: np.ndarray
    k0: np.ndarray
    normal: np.ndarray
    second_fundamental_form: np.ndarray
    target: np.ndarray
    coeffs: np.ndarray = None
    history: list = field(default_factory=list)

    @property
    def max_defect(self) -> float:
        return float(np.abs(to_frame(self.grid, self.defect)).max())


def _induced(grid, X):
    Xt, Xp = derivatives(grid, X)
    g = np.empty((2, 2) + grid.shape)
    g[0, 0] = np.einsum("ktp,ktp->tp", Xt, Xt)
    g[0, 1] = g[1, 0] = np.einsum("ktp,ktp->tp", Xt, Xp)
    g[1, 1] = np.einsum("ktp,ktp->tp", Xp, Xp)
    return g, Xt, Xp


def extrinsic_data_r3(grid: SphereGrid, X: np.ndarray):
    """Mean curvature, outward normal and second fundamental form of an immersion.

    Parameters
    ----------
    X : ndarray, shape (3, n_theta, n_phi)

    Returns
    -------
    k0 : ndarray
        Trace of the shape operator for the outward normal.
    h : ndarray, shape (2, 2, n_theta, n_phi)
        ``h_ij = -<d_i d_j X, nu>`` (positive on round spheres).
    nu : ndarray, shape (3, n_theta, n_phi)
    g : ndarray
        Induced metric.
    """
    X = np.asarray(X, dtype=float)
    if X.shape != (3,) + grid.shape:
        raise DimensionError("embedding must have shape (3, n_theta, n_phi)")
    g, Xt, Xp = _induced(grid, X)
    check_metric(grid, g)
    n = np.cross(Xt, Xp, axis=0)
    n /= np.linalg.norm(n, axis=0)
    centroid = np.array([integrate(grid, X[k], area_density(grid, g)) for k in range(3)])
    centroid /= integrate(grid, np.ones(grid.shape), area_density(grid, g))
    if integrate(grid, np.einsum("ktp,ktp->tp", n, X - centroid[:, None, None])) < 0:
        n = -n
    Xtt, Xtp, Xpp = second_derivatives(grid, X)
    h = np.empty((2, 2) + grid.shape)
    h[0, 0] = -np.einsum("ktp,ktp->tp", Xtt, n)
    h[0, 1] = h[1, 0] = -np.einsum("ktp,ktp->tp", Xtp, n)
    h[1, 1] = -np.einsum("ktp,ktp->tp", Xpp, n)
    det = g[0, 0] * g[1, 1] - g[0, 1] ** 2
    k0 = (g[1, 1] * h[0, 0] - 2 * g[0, 1] * h[0, 1] + g[0, 0] * h[1, 1]) / det
    return k0, h, n, g


def _gauge_fix(grid, X, mu, degeneracy=1e-8):
    area = integrate(grid, np.ones(grid.shape), mu)
    c = np.array([integrate(grid, X[k], mu) for k in range(3)]) / area
    Y = X - c[:, None, None]
    M = np.array([[integrate(grid, Y[i] * Y[j], mu) for j in range(3)] for i in range(3)])
    w, V = np.linalg.eigh(M)
    scale = max(abs(w).max(), 1e-300)
    Q = np.zeros((3, 3))
    i = 0
    while i < 3:
        j = i + 1
        while j < 3 and abs(w[j] - w[i]) <= degeneracy * scale:
            j += 1
        block = V[:, i:j]
        if j - i == 1:
            v = block[:, 0]
            v = v * np.sign(v[np.argmax(np.abs(v))])
            Q[:, i] = v
        else:
            # degenerate cluster: project the standard axes in lexicographic order
            proj = block @ block.T
            basis = []
            for e in np.eye(3):
                v = proj @ e
                for b in basis:
                    v = v - (b @ v) * b
                if np.linalg.norm(v) > 1e-6 and len(basis) < j - i:
                    basis.append(v / np.linalg.norm(v))
            Q[:, i:j] = np.array(basis).T
        i = j
    if np.linalg.det(Q) < 0:
        Q[:, 2] = -Q[:, 2]
    return np.einsum("ik,ktp->itp", Q.T, Y)


def rotate_embedding(emb: Embedding3, R: np.ndarray) -> Embedding3:
    """Apply a rigid rotation ``R`` to an embedding and recompute extrinsic data."""
    grid = emb.grid
    X = np.einsum("ik,ktp->itp", np.asarray(R, dtype=float), emb.X)
    k0, h, n, g = extrinsic_data_r3(grid, X)
    return Embedding3(
        grid=grid, X=X, induced_metric=g, defect=g - emb.target, k0=k0, normal=n,
        second_fundamental_form=h, target=emb.target, coeffs=emb.coeffs, history=emb.history,
    )


def _frame_residual(G_ind, G_target, sw):
    r = np.concatenate([
        (G_ind[0, 0] - G_target[0, 0]).ravel() * sw,
        np.sqrt(2.0) * (G_ind[0, 1] - G_target[0, 1]).ravel() * sw,
        (G_ind[1, 1] - G_target[1, 1]).ravel() * sw,
    ])
    return r


def embed_weyl(
    bundle: SurfaceMetricBundle,
    tol: float = 1e-9,
    max_iter: int = 200,
    band_limit: int | None = None,
    continuation_steps: int = 8,
    polish: int = 2,
) -> Embedding3:
    """Isometrically embed the projected metric of a bundle in Euclidean space.

    Parameters
    ----------
    bundle : SurfaceMetricBundle
        ``bundle.sigma_hat`` is the target metric.
    tol : float
        Maximum frame-component isometry defect accepted.
    max_iter : int
        Total Gauss-Newton iteration budget.
    band_limit : int, optional
        Band limit of the embedding components (default: the grid's).
    continuation_steps : int
        Number of homotopy stages used when a direct solve stalls.
    polish : int
        Extra Gauss-Newton steps taken after reaching ``tol`` while each still
        cuts the defect tenfold, so the result sits at the discretization floor.

    Raises
    ------
    PreconditionError
        If the projected metric is not strictly convex.
    ConvergenceError
        If the defect stays above ``tol``; the history is attached.
    """
    conv = convexity_check(bundle)
    if not conv["admissible_a"]:
        raise PreconditionError(
            f"projected metric is not convex (min K_hat term {conv['min_value']:.3e} at "
            f"theta,phi={conv['argmin_theta_phi']})"
        )
    grid = bundle.grid
    target = bundle.sigma_hat
    Gt = to_frame(grid, target)
    mu = area_density(grid, target)
    area = integrate(grid, np.ones(grid.shape), mu)
    r0 = np.sqrt(area / (4 * np.pi))
    Y, Dt, Dp = real_basis(grid, band_limit)
    sw = np.sqrt(grid.quad).ravel()
    Ground = np.zeros_like(Gt)
    Ground[0, 0] = Ground[1, 1] = r0**2
    e_r = grid.frame[0].reshape(3, -1)
    a = (Y.T * grid.quad.ravel()) @ e_r.T * r0  # (nb, 3) projection of the round sphere
    history: list[dict] = []

    def evaluate(a):
        Xt = (Dt @ a).T
        Xp = (Dp @ a).T
        G = np.empty((2, 2, Xt.shape[1]))
        G[0, 0] = np.einsum("kn,kn->n", Xt, Xt)
        G[0, 1] = G[1, 0] = np.einsum("kn,kn->n", Xt, Xp)
        G[1, 1] = np.einsum("kn,kn->n", Xp, Xp)
        return G.reshape((2, 2) + grid.shape), Xt, Xp

    def jacobian(Xt, Xp):
        blocks = []
        for k in range(3):
            j00 = 2 * Xt[k][:, None] * Dt
            j01 = np.sqrt(2.0) * (Xt[k][:, None] * Dp + Xp[k][:, None] * Dt)
            j11 = 2 * Xp[k][:, None] * Dp
            blocks.append(np.vstack([j00, j01, j11]) * np.tile(sw, 3)[:, None])
        return np.hstack(blocks)

    def solve_stage(a, Gtarget, it0, budget, final):
        nb = a.shape[0]
        it = it0
        G, Xt, Xp = evaluate(a)
        r = _frame_residual(G, Gtarget, sw)
        defect = np.abs(G - Gtarget).max()
        prev = np.inf
        stall = 0
        extra = 0
        thr = (tol if final else max(tol, 1e-6)) * 0.5
        while it < it0 + budget:
            if defect <= thr:
                # keep polishing towards the discretization floor while steps still pay off
                if not final or extra >= polish or not np.isfinite(prev) or defect > 0.1 * prev:
                    break
                extra += 1
            J = jacobian(Xt, Xp)
            step = lstsq(J, -r, cond=1e-12, lapack_driver="gelsy")[0]
            da = np.stack([step[k * nb:(k + 1) * nb] for k in range(3)], axis=1)
            s = 1.0
            f0 = r @ r
            while True:
                a_new = a + s * da
                G_new, Xt_new, Xp_new = evaluate(a_new)
                r_new = _frame_residual(G_new, Gtarget, sw)
                if r_new @ r_new < f0 or s < 1e-4:
                    break
                s *= 0.5
            it += 1
            improved = r_new @ r_new < f0
            d_new = np.abs(G_new - Gtarget).max()
            history.append({"iter": it, "defect_norm": float(d_new), "step_size": float(s)})
            if not improved:
                stall += 1
                if stall >= 3:
                    return a, it, False
                continue
            stall = 0
            prev = defect
            a, G, Xt, Xp, r, defect = a_new, G_new, Xt_new, Xp_new, r_new, d_new
        return a, it, defect <= tol

    history.append({"iter": 0, "defect_norm": float(np.abs(Ground - Gt).max()), "step_size": 0.0})
    a_direct, it, ok = solve_stage(a.copy(), Gt, 0, min(40, max_iter), True)
    if ok:
        a = a_direct
    else:
        ts = np.linspace(0.0, 1.0, continuation_steps + 1)[1:]
        for t in ts:
            Gs = (1 - t) * Ground + t * Gt
            final = t == ts[-1]
            a, it, ok = solve_stage(a, Gs, it, max_iter - it, final)
            if it >= max_iter:
                break
        G, _, _ = evaluate(a)
        if not ok and np.abs(G - Gt).max() > tol:
            raise ConvergenceError(
                f"isometric embedding stalled with defect {np.abs(G - Gt).max():.3e} > {tol:.1e}",
                history=history,
            )
    X = (Y @ a).T.reshape((3,) + grid.shape)
    X = _gauge_fix(grid, X, mu)
    k0, h, n, g = extrinsic_data_r3(grid, X)
    emb = Embedding3(
        grid=grid, X=X, induced_metric=g, defect=g - target, k0=k0, normal=n,
        second_fundamental_form=h, target=target, coeffs=a.T.copy(), history=history,
    )
    if emb.max_defect > tol:
        raise ConvergenceError(f"isometric embedding defect {emb.max_defect:.3e} > {tol:.1e}", history=history)
    return emb


@dataclass(frozen=True, eq=False)
class MinkowskiEmbedding:
    """Lift ``X0 = tau``, ``Xi = X`` of a Euclidean embedding into Minkowski space.

    Attributes
    ----------
    X0 : ndarray
        Time component (the time function).
    Xi : ndarray, shape (3, n_theta, n_phi)
    H0 : ndarray, shape (4, n_theta, n_phi)
        Mean curvature vector ``Laplacian_sigma`` of the position.
    H0_norm_sq : ndarray
        Minkowski square of ``H0``.
    frame_e30, frame_e40 : ndarray, shape (4, n_theta, n_phi)
        ``e3`` is the Euclidean outward normal translated along ``T0``;
        ``e4`` is the normalized normal part of ``T0`` (future directed).
    alpha_e30 : ndarray, shape (2, n_theta, n_phi)
        Connection form ``<d e3, e4>`` in coordinate components.
    T0 : ndarray, shape (4,)
    sigma : ndarray
        Physical metric ``sigma_hat - d tau d tau``.
    grad_tau : ndarray, shape (2, n_theta, n_phi)
        Coordinate components of the ``sigma``-gradient vector of ``tau``.
    grad_tau_sq : ndarray
    """

    grid: SphereGrid
    X0: np.ndarray
    Xi: np.ndarray
    H0: np.ndarray
    H0_norm_sq: np.ndarray
    frame_e30: np.ndarray
    frame_e40: np.ndarray
    alpha_e30: np.ndarray
    T0: np.ndarray
    sigma: np.ndarray
    grad_tau: np.ndarray
    grad_tau_sq: np.ndarray
    embedding: Embedding3

    def orthonormality_residual(self) -> float:
        e3, e4 = self.frame_e30, self.frame_e40
        return float(max(
            np.abs(minkowski_dot(e3, e3) - 1).max(),
            np.abs(minkowski_dot(e4, e4) + 1).max(),
            np.abs(minkowski_dot(e3, e4)).max(),
        ))


def lift_and_frames(emb: Embedding3, tau: np.ndarray) -> MinkowskiEmbedding:
    """Lift an embedding by ``tau`` along ``T0`` and build the normal frames.

    Parameters
    ----------
    emb : Embedding3
        Embedding of the projected metric.
    tau : ndarray, shape (n_theta, n_phi)
    """
    grid = emb.grid
    tau = np.asarray(tau, dtype=float)
    if tau.shape != grid.shape:
        raise DimensionError("tau does not match the embedding grid")
    tt, tp = derivatives(grid, tau)
    dtau = np.stack([tt, tp])
    sigma = emb.induced_metric - dtau[:, None] * dtau[None, :]
    check_metric(grid, sigma)
    v, grad_sq = _gradient_vector(grid, sigma, tau)
    root = np.sqrt(1.0 + grad_sq)
    Xt, Xp = derivatives(grid, emb.X)
    spatial_grad = v[0] * Xt + v[1] * Xp
    e3 = np.concatenate([np.zeros((1,) + grid.shape), emb.normal])
    e4 = np.concatenate([np.ones((1,) + grid.shape) + grad_sq, spatial_grad]) / root
    pos = np.concatenate([tau[None], emb.X])
    H0 = np.stack([covariant_calculus(grid, sigma, pos[k]).laplacian for k in range(4)])
    alpha = np.einsum("jitp,itp->jtp", emb.second_fundamental_form, v) / root
    return MinkowskiEmbedding(
        grid=grid, X0=tau, Xi=emb.X, H0=H0, H0_norm_sq=minkowski_dot(H0, H0),
        frame_e30=e3, frame_e40=e4, alpha_e30=alpha, T0=T0.copy(), sigma=sigma,
        grad_tau=v, grad_tau_sq=grad_sq, embedding=emb,
    )


def verify_mean1(memb: MinkowskiEmbedding, bundle: SurfaceMetricBundle | None = None) -> dict:
    """Compare the total mean curvature of the projection with its Minkowski form.

    ``lhs = int k0 mu_sigma_hat`` and
    ``rhs = int (-<H0, e3> sqrt(1+|grad tau|^2) - alpha(grad tau)) mu_sigma``.

    With a bundle, the Minkowski side is rebuilt from the bundle's physical
    metric ``sigma`` (not from the metric induced by the lift), so the
    residual measures how well the discrete embedding realizes the data.
    Without one, the lift's own fields are used and the identity holds to
    round-off by construction.
    """
    grid = memb.grid
    if bundle is None:
        sigma_hat, sigma = memb.embedding.target, memb.sigma
        H0, grad, grad_sq, alpha = memb.H0, memb.grad_tau, memb.grad_tau_sq, memb.alpha_e30
    else:
        sigma_hat, sigma = bundle.sigma_hat, bundle.sigma
        grad, grad_sq = _gradient_vector(grid, sigma, memb.X0)
        pos = np.concatenate([memb.X0[None], memb.Xi])
        H0 = np.stack([covariant_calculus(grid, sigma, pos[k]).laplacian for k in range(4)])
        alpha = np.einsum("jitp,itp->jtp", memb.embedding.second_fundamental_form, grad) / np.sqrt(1.0 + grad_sq)
    mu_hat = area_density(grid, sigma_hat)
    mu = area_density(grid, sigma)
    lhs = integrate(grid, memb.embedding.k0, mu_hat)
    root = np.sqrt(1.0 + grad_sq)
    integrand = -minkowski_dot(H0, memb.frame_e30) * root - np.einsum("itp,itp->tp", alpha, grad)
    rhs = integrate(grid, integrand, mu)
    return {"lhs": float(lhs), "rhs": float(rhs), "residual": float(abs(lhs - rhs)), "L": grid.L}


def _gradient_vector(grid, sigma, tau):
    tt, tp = derivatives(grid, tau)
    dtau = np.stack([tt, tp])
    det = sigma[0, 0] * sigma[1, 1] - sigma[0, 1] ** 2
    inv = np.stack([np.stack([sigma[1, 1], -sigma[0, 1]]), np.stack([-sigma[1, 0], sigma[0, 0]])]) / det
    v = np.einsum("ijtp,jtp->itp", inv, dtau)
    return v, np.einsum("itp,itp->tp", v, dtau)


def dump_embedding(emb: Embedding3, outdir) -> tuple[Path, Path]:
    """Write coefficients as JSON and the Gauss-Newton history as CSV."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    coef_path = outdir / "embedding_coefficients.json"
    payload = {
        "L": emb.grid.L,
        "basis": "real orthonormal spherical harmonics, (l, m) order, m=-l..l",
        "coefficients": {name: [float(x) for x in emb.coeffs[k]] for k, name in enumerate("xyz")},
        "max_defect": emb.max_defect,
        "k0_min": float(emb.k0.min()),
        "k0_max": float(emb.k0.max()),
    }
    coef_path.write_text(json.dumps(payload, indent=2, sort_keys=True))
    hist_path = outdir / "embedding_history.csv"
    with hist_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "defect_norm", "step_size"])
        for row in emb.history:
            w.writerow([row["iter"], repr(row["defect_norm"]), repr(row["step_size"])])
    return coef_path, hist_path
