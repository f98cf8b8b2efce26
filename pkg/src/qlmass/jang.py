r"""Jang's equation on a 3-ball and the graph quantities at its boundary.

The ball is discretized by a Chebyshev radial grid times a :class:`SphereGrid`.
Radial nodes are the positive half of the Chebyshev-Gauss-Lobatto points of
``[-1, 1]`` with an even number of points, so no node sits at the centre.
Regularity at ``r = 0`` is built into the radial derivative: the degree-``l``
angular component of a smooth field has parity ``(-1)**l`` in ``r``.

Tensor fields use Cartesian components in the ball coordinates ``y``; the
physical metric is ``g_ij(y)``.  Jang's equation for the graph height ``f``
reads

.. math::

    \Big(g^{ij} - \frac{f^i f^j}{1+|df|^2}\Big)
    \Big(\frac{\nabla_i\nabla_j f}{\sqrt{1+|df|^2}} - P_{ij}\Big) = 0,

with Dirichlet data ``f = tau`` on the boundary sphere.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import ConvergenceError, DimensionError, GeometryError, QLMassError
from .sphere_spectral import (
    SphereGrid,
    _maybe_real,
    _synth,
    analyze,
    covariant_calculus,
    make_grid,
    synthesize,
)

__all__ = [
    "BallGrid",
    "make_ball_grid",
    "ball_gradient",
    "ball_integrate",
    "BallDataSet",
    "JangOptions",
    "JangSolution",
    "HorizonObstruction",
    "jang_operator",
    "jang_residual",
    "solve_jang",
    "graph_boundary_data",
    "x_field_and_energy_report",
    "constraint_residuals",
    "scalar_curvature",
    "dump_solution",
]


def _cheb(N: int):
    """Chebyshev-Gauss-Lobatto nodes ``cos(pi j / N)`` and differentiation matrix."""
    x = np.cos(np.pi * np.arange(N + 1) / N)
    c = np.ones(N + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(N + 1)
    X = np.tile(x, (N + 1, 1)).T
    dX = X - X.T
    D = np.outer(c, 1.0 / c) / (dX + np.eye(N + 1))
    D -= np.diag(D.sum(axis=1))
    return x, D


def _clenshaw_curtis(N: int) -> np.ndarray:
    theta = np.pi * np.arange(N + 1) / N
    w = np.zeros(N + 1)
    v = np.ones(N - 1)
    inner = theta[1:-1]
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N * N - 1)
        for k in range(1, N // 2):
            v -= 2 * np.cos(2 * k * inner) / (4 * k * k - 1)
        v -= np.cos(N * inner) / (N * N - 1)
    else:
        w[0] = w[N] = 1.0 / (N * N)
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2 * np.cos(2 * k * inner) / (4 * k * k - 1)
    w[1:-1] = 2 * v / N
    return w


@dataclass(frozen=True, eq=False)
class BallGrid:
    """Radial Chebyshev nodes times a sphere grid.

    Attributes
    ----------
    sphere : SphereGrid
    r : ndarray, shape (n_r,)
        Ascending radii in ``(0, 1]``; ``r[-1] == 1``.
    radial_weights : ndarray
        Weights ``w_j`` with ``int_0^1 r^2 F(r) dr = sum_j w_j r_j^2 F(r_j)``
        for even polynomials ``F``.
    D1, D2 : ndarray, shape (2, n_r, n_r)
        Radial derivative matrices for even (index 0) and odd (index 1)
        extension across the centre.
    parity : ndarray, shape (L+1,)
        Centre-regularity flags: 0 where ``(-1)**l = 1``, 1 otherwise.
    """

    sphere: SphereGrid
    r: np.ndarray
    radial_weights: np.ndarray
    D1: np.ndarray
    D2: np.ndarray
    parity: np.ndarray

    @property
    def n_r(self) -> int:
        return self.r.size

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_r,) + self.sphere.shape

    @cached_property
    def r3(self) -> np.ndarray:
        return self.r[:, None, None]

    @cached_property
    def unit_radial(self) -> np.ndarray:
        """Cartesian components of the radial unit vector, shape (3, 1, n_theta, n_phi)."""
        return self.sphere.frame[0][:, None]

    @cached_property
    def points(self) -> np.ndarray:
        """Cartesian coordinates ``y`` of all nodes, shape (3, n_r, n_theta, n_phi)."""
        return self.unit_radial * self.r3

    @cached_property
    def D1_by_l(self) -> np.ndarray:
        return self.D1[self.parity]

    @cached_property
    def D2_by_l(self) -> np.ndarray:
        return self.D2[self.parity]


def make_ball_grid(L: int, n_r: int) -> BallGrid:
    """Ball grid with sphere band limit ``L`` and ``n_r`` radial nodes."""
    if n_r < 3:
        raise ValueError("n_r must be at least 3")
    sphere = make_grid(L)
    N = 2 * n_r - 1
    x, D = _cheb(N)
    w = _clenshaw_curtis(N)
    D2full = D @ D
    pos = np.arange(n_r)[::-1]  # ascending r
    mirror = N - pos
    D1 = np.stack([D[np.ix_(pos, pos)] + p * D[np.ix_(pos, mirror)] for p in (1.0, -1.0)])
    D2 = np.stack([D2full[np.ix_(pos, pos)] + p * D2full[np.ix_(pos, mirror)] for p in (1.0, -1.0)])
    parity = (np.arange(L + 1) % 2).astype(int)
    return BallGrid(sphere=sphere, r=x[pos], radial_weights=w[pos], D1=D1, D2=D2, parity=parity)


def _radial_apply(mats_by_l: np.ndarray, c: np.ndarray) -> np.ndarray:
    # c: (..., n_r, L+1, 2L+1)
    return np.einsum("lab,...blm->...alm", mats_by_l, c)


def ball_gradient(bg: BallGrid, f: np.ndarray) -> np.ndarray:
    """Cartesian gradient of ball samples; the derivative index is prepended.

    Parameters
    ----------
    f : ndarray, shape (..., n_r, n_theta, n_phi)

    Returns
    -------
    ndarray, shape (3, ..., n_r, n_theta, n_phi)
    """
    f = np.asarray(f)
    if f.shape[-3:] != bg.shape:
        raise DimensionError(f"ball field shape {f.shape[-3:]} does not match grid {bg.shape}")
    sg = bg.sphere
    real = np.isrealobj(f)
    c = analyze(sg, f)
    fr = _maybe_real(_synth(sg, _radial_apply(bg.D1_by_l, c), "val"), real)
    ft = _maybe_real(_synth(sg, c, "dtheta"), real)
    fp = _maybe_real(_synth(sg, c, "dphi"), real) / sg.sin_t
    fr_, e_t, e_p = sg.frame
    lead = f.ndim - 3
    shp = (3,) + (1,) * lead + (1,) + sg.shape
    er = fr_.reshape(shp)
    et = e_t.reshape(shp)
    ep = e_p.reshape(shp)
    rinv = (1.0 / bg.r).reshape((1,) * (lead + 1) + (-1, 1, 1))
    return er * fr[None] + (et * ft[None] + ep * fp[None]) * rinv


def ball_integrate(bg: BallGrid, f: np.ndarray, volume_density: np.ndarray | float = 1.0) -> float:
    """Integral over the unit ball of ``f * volume_density`` (flat volume element)."""
    vals = np.asarray(f) * volume_density
    shell = (vals * bg.sphere.quad).sum(axis=-1).sum(axis=-1)
    return float((shell * bg.radial_weights * bg.r**2).sum())


def project(bg: BallGrid, f: np.ndarray) -> np.ndarray:
    """Per-shell projection onto harmonics of degree at most ``L``."""
    return synthesize(bg.sphere, analyze(bg.sphere, f), real=np.isrealobj(f))


def _inv3(g: np.ndarray) -> np.ndarray:
    moved = np.moveaxis(g, (0, 1), (-2, -1))
    return np.moveaxis(np.linalg.inv(moved), (-2, -1), (0, 1))


def christoffel(bg: BallGrid, g: np.ndarray, ginv: np.ndarray | None = None) -> np.ndarray:
    """Christoffel symbols ``Gamma[k, i, j]`` of a metric given in Cartesian components."""
    ginv = _inv3(g) if ginv is None else ginv
    dg = ball_gradient(bg, g)  # dg[l, i, j] = d_l g_ij
    low = 0.5 * (np.einsum("ijl...->lij...", dg) + np.einsum("jil...->lij...", dg) - dg)
    # low[l, i, j] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    return np.einsum("kl...,lij...->kij...", ginv, low)


def ricci_tensor(bg: BallGrid, Gamma: np.ndarray) -> np.ndarray:
    """Ricci tensor from Christoffel symbols by spectral differentiation."""
    dG = ball_gradient(bg, Gamma)  # dG[m, k, i, j] = d_m Gamma^k_ij
    Ric = np.einsum("kkij...->ij...", dG) - np.einsum("jkik...->ij...", dG)
    Ric += np.einsum("kkl...,lij...->ij...", Gamma, Gamma)
    Ric -= np.einsum("kjl...,lik...->ij...", Gamma, Gamma)
    return 0.5 * (Ric + np.swapaxes(Ric, 0, 1))


def scalar_curvature(bg: BallGrid, g: np.ndarray) -> np.ndarray:
    """Scalar curvature of a 3-metric on the ball."""
    ginv = _inv3(g)
    return np.einsum("ij...,ij...->...", ginv, ricci_tensor(bg, christoffel(bg, g, ginv)))


@dataclass(frozen=True, eq=False)
class BallDataSet:
    """Initial data ``(g, P, mu, J)`` on the unit coordinate ball.

    Attributes
    ----------
    grid : BallGrid
    g, P : ndarray, shape (3, 3, n_r, n_theta, n_phi)
        Metric and second fundamental form (Cartesian components).
    mu : ndarray, shape (n_r, n_theta, n_phi)
        Energy density.
    J : ndarray, shape (3, n_r, n_theta, n_phi)
        Momentum density (covector components).
    name : str
    params : dict
    """

    grid: BallGrid
    g: np.ndarray
    P: np.ndarray
    mu: np.ndarray
    J: np.ndarray
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        shp = self.grid.shape
        if self.g.shape != (3, 3) + shp or self.P.shape != (3, 3) + shp:
            raise DimensionError("g and P must have shape (3, 3) + ball grid shape")
        if self.mu.shape != shp or self.J.shape != (3,) + shp:
            raise DimensionError("mu or J has the wrong shape")
        eig = np.linalg.eigvalsh(np.moveaxis(self.g, (0, 1), (-2, -1)))
        if eig.min() <= 0:
            idx = np.unravel_index(np.argmin(eig.min(axis=-1)), shp)
            raise GeometryError("ball metric is not positive definite", tuple(int(i) for i in idx), float(eig.min()))

    @cached_property
    def ginv(self) -> np.ndarray:
        return _inv3(self.g)

    @cached_property
    def Gamma(self) -> np.ndarray:
        return christoffel(self.grid, self.g, self.ginv)

    @cached_property
    def trP(self) -> np.ndarray:
        return np.einsum("ij...,ij...->...", self.ginv, self.P)

    def boundary_trace(self) -> dict:
        """Geometry of the boundary sphere ``r = 1`` inside ``(Omega, g)``.

        Returns
        -------
        dict
            ``sigma`` (induced metric, coordinate components), ``k`` (mean
            curvature, outward normal), ``trP_sigma``, ``alpha_e3`` (the
            normal-bundle 1-form ``-P(., e3)`` for the frame of ``Omega``),
            ``e3`` (Cartesian components of the unit outward normal),
            ``tangents`` (Cartesian components of ``d/dtheta``, ``d/dphi``).
        """
        return _boundary_geometry(self)


def _boundary_geometry(data: BallDataSet) -> dict:
    bg = data.grid
    sg = bg.sphere
    g = data.g[..., -1, :, :]
    ginv = data.ginv[..., -1, :, :]
    Gam = data.Gamma[..., -1, :, :]
    P = data.P[..., -1, :, :]
    yhat = sg.frame[0]
    tangents = np.stack([sg.frame[1], sg.frame[2] * sg.sin_t])  # (2, 3, nt, np)
    sigma = np.einsum("aitp,ijtp,bjtp->abtp", tangents, g, tangents)
    up = np.einsum("ijtp,jtp->itp", ginv, yhat)
    norm = np.sqrt(np.einsum("itp,itp->tp", up, yhat))
    e3 = up / norm
    hess_r = (np.eye(3)[:, :, None, None] - yhat[:, None] * yhat[None, :]) - np.einsum("kijtp,ktp->ijtp", Gam, yhat)
    proj = ginv - e3[:, None] * e3[None, :]
    k = np.einsum("ijtp,ijtp->tp", proj, hess_r) / norm
    trP_sigma = np.einsum("ijtp,ijtp->tp", proj, P)
    alpha = -np.einsum("aitp,ijtp,jtp->atp", tangents, P, e3)
    return {"sigma": sigma, "k": k, "trP_sigma": trP_sigma, "alpha_e3": alpha, "e3": e3, "tangents": tangents}


def constraint_residuals(data: BallDataSet) -> dict:
    """Hamiltonian and momentum constraint residuals.

    ``ham = R - |P|^2 + (tr P)^2 - 2 mu`` and
    ``mom_i = div P_i - d_i tr P - J_i``.
    """
    bg = data.grid
    ginv, P, Gam = data.ginv, data.P, data.Gamma
    R = np.einsum("ij...,ij...->...", ginv, ricci_tensor(bg, Gam))
    P_up = np.einsum("ik...,jl...,kl...->ij...", ginv, ginv, P)
    ham = R - np.einsum("ij...,ij...->...", P_up, P) + data.trP**2 - 2 * data.mu
    dP = ball_gradient(bg, P)  # dP[k, i, j] = d_k P_ij
    covP = dP - np.einsum("lki...,lj...->kij...", Gam, P) - np.einsum("lkj...,il...->kij...", Gam, P)
    divP = np.einsum("kj...,kji...->i...", ginv, covP)
    mom = divP - ball_gradient(bg, data.trP) - data.J
    Jnorm = np.sqrt(np.einsum("ij...,i...,j...->...", ginv, data.J, data.J))
    dec = data.mu - Jnorm
    return {
        "hamiltonian": ham,
        "momentum": mom,
        "max_hamiltonian": float(np.abs(ham).max()),
        "max_momentum": float(np.abs(mom).max()),
        "min_dominant_energy": float(dec.min()),
        "dominant_energy_ok": bool(dec.min() >= -1e-10),
    }


@dataclass(frozen=True)
class JangOptions:
    """Solver options.

    ``damping`` is the initial Newton step fraction; ``continuation_steps``
    is the initial number of equal continuation stages (halved adaptively on
    failure, down to ``min_stage``).  A stage is accepted only when the
    independent residual is below ``verify_tol``.
    """

    tol: float = 1e-10
    max_iter: int = 40
    damping: float = 1.0
    continuation_steps: int = 1
    blowup_threshold: float = 1e6
    min_stage: float = 1.0 / 256
    verify_tol: float = 1e-8
    gmres_tol: float = 1e-11
    gmres_restart: int = 80


class HorizonObstruction(QLMassError):
    """Jang's equation could not be solved because the data carry an apparent-horizon signature.

    Attributes
    ----------
    f : ndarray
        Last accepted iterate.
    stage : float
        Continuation parameter reached.
    max_gradient : float
        ``max |df|_g`` of the iterate.
    locus : dict
        Node index and Cartesian position of the largest gradient.
    trapped_margin : float
        ``min(k - |tr_Sigma P|)`` on the boundary; non-positive values mean
        the boundary itself is (marginally) trapped.
    history : list of dict
    """

    def __init__(self, message, f, stage, max_gradient, locus, trapped_margin, history):
        super().__init__(message)
        self.f = f
        self.stage = stage
        self.max_gradient = max_gradient
        self.locus = locus
        self.trapped_margin = trapped_margin
        self.history = history


def _hessian(bg, Gamma, f, df=None):
    df = ball_gradient(bg, f) if df is None else df
    H = ball_gradient(bg, df)
    H = 0.5 * (H + np.swapaxes(H, 0, 1))
    return H - np.einsum("kij...,k...->ij...", Gamma, df), df


def jang_operator(data: BallDataSet, f: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Jang operator at every node (graph mean curvature minus the graph trace of ``s P``).

    Accepts complex ``f`` so the linearization can be taken by complex step.
    """
    bg = data.grid
    Hess, df = _hessian(bg, data.Gamma, f)
    fu = np.einsum("ij...,j...->i...", data.ginv, df)
    W2 = 1.0 + np.einsum("i...,i...->...", df, fu)
    W = np.sqrt(W2)
    a = data.ginv - fu[:, None] * fu[None, :] / W2
    return np.einsum("ij...,ij...->...", a, Hess / W - scale * data.P)


def jang_residual(data: BallDataSet, f: np.ndarray, tau: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Nodal residual from the divergence form of the equation.

    Interior shells carry ``div_g(grad f / W) - (g^ij - f^i f^j / W^2) P_ij``;
    the boundary shell carries ``f - tau``.  This is an independent
    evaluation route from the one used by the solver.
    """
    bg = data.grid
    g = data.g
    df = ball_gradient(bg, f)
    fu = np.einsum("ij...,j...->i...", data.ginv, df)
    W = np.sqrt(1.0 + np.einsum("i...,i...->...", df, fu))
    detg = np.linalg.det(np.moveaxis(g, (0, 1), (-2, -1)))
    vol = np.sqrt(detg)
    flux = ball_gradient(bg, vol * fu / W)
    div = np.einsum("ii...->...", flux) / vol
    a = data.ginv - fu[:, None] * fu[None, :] / W**2
    res = div - scale * np.einsum("ij...,ij...->...", a, data.P)
    res[-1] = f[-1] - tau
    return res


class _Linearization:
    """Directional derivative of :func:`jang_operator` at a fixed ``f``."""

    def __init__(self, data: BallDataSet, f: np.ndarray, scale: float):
        self.data = data
        bg = data.grid
        self.Hess, self.df = _hessian(bg, data.Gamma, f)
        self.fu = np.einsum("ij...,j...->i...", data.ginv, self.df)
        self.W2 = 1.0 + np.einsum("i...,i...->...", self.df, self.fu)
        self.W = np.sqrt(self.W2)
        self.a = data.ginv - self.fu[:, None] * self.fu[None, :] / self.W2
        self.B = self.Hess / self.W - scale * data.P

    def __call__(self, v: np.ndarray) -> np.ndarray:
        data = self.data
        dHess, ddf = _hessian(data.grid, data.Gamma, v)
        dfu = np.einsum("ij...,j...->i...", data.ginv, ddf)
        dW2 = 2 * np.einsum("i...,i...->...", self.fu, ddf)
        fu, W2 = self.fu, self.W2
        da = -(dfu[:, None] * fu[None, :] + fu[:, None] * dfu[None, :]) / W2 + fu[:, None] * fu[None, :] * dW2 / W2**2
        dB = dHess / self.W - self.Hess * (0.5 * dW2 / (self.W * W2))
        return np.einsum("ij...,ij...->...", da, self.B) + np.einsum("ij...,ij...->...", self.a, dB)


class _Preconditioner:
    """Inverse flat Laplacian per degree with Dirichlet boundary rows."""

    def __init__(self, bg: BallGrid):
        self.bg = bg
        r = bg.r
        L = bg.sphere.L
        self.lus = []
        for l in range(L + 1):
            p = l % 2
            A = bg.D2[p] + np.diag(2 / r) @ bg.D1[p] - np.diag(l * (l + 1) / r**2)
            A[-1] = 0.0
            A[-1, -1] = 1.0
            self.lus.append(lu_factor(A))

    def __call__(self, v: np.ndarray) -> np.ndarray:
        bg = self.bg
        c = analyze(bg.sphere, v)
        out = np.empty_like(c)
        for l, lu in enumerate(self.lus):
            out[:, l, :] = lu_solve(lu, c[:, l, :].real) + 1j * lu_solve(lu, c[:, l, :].imag)
        pv = synthesize(bg.sphere, c, real=True)
        return synthesize(bg.sphere, out, real=True) + (v - pv)


def harmonic_extension(bg: BallGrid, tau: np.ndarray) -> np.ndarray:
    """Flat-harmonic extension of boundary data (degree-wise ``r**l`` profile)."""
    c = analyze(bg.sphere, tau)
    ls = np.arange(bg.sphere.L + 1)
    prof = bg.r[:, None] ** ls[None, :]
    return synthesize(bg.sphere, prof[:, :, None] * c[None], real=True)


@dataclass(frozen=True, eq=False)
class JangSolution:
    """Solution of Jang's equation.

    Attributes
    ----------
    f : ndarray, shape (n_r, n_theta, n_phi)
    graph_metric : ndarray, shape (3, 3, n_r, n_theta, n_phi)
        ``g + df df``.
    e4_tilde : ndarray, shape (4, n_r, n_theta, n_phi)
        Downward unit normal of the graph in ``Omega x R``, components
        ``(dt, dy1, dy2, dy3)``.
    h : ndarray, shape (3, 3, n_r, n_theta, n_phi)
        Second fundamental form of the graph, ``Hess f / W``.
    residual : float
        Max-norm of the independent nodal residual.
    history : list of dict
    """

    data: BallDataSet
    tau: np.ndarray
    f: np.ndarray
    graph_metric: np.ndarray
    e4_tilde: np.ndarray
    h: np.ndarray
    residual: float
    history: list

    @cached_property
    def boundary(self) -> dict:
        return graph_boundary_data(self, self.data)


def _max_gradient(data, f):
    df = ball_gradient(data.grid, f)
    n2 = np.einsum("ij...,i...,j...->...", data.ginv, df, df)
    idx = np.unravel_index(np.argmax(n2), n2.shape)
    return float(np.sqrt(n2[idx])), idx


def solve_jang(data: BallDataSet, tau: np.ndarray, opts: JangOptions | None = None) -> JangSolution:
    """Solve Jang's equation with Dirichlet data ``tau``.

    Damped Newton with GMRES on the linearization (taken by complex step),
    preconditioned by the flat Laplacian.  Continuation scales both ``tau``
    and ``P`` by ``s`` from 0 to 1.

    Raises
    ------
    HorizonObstruction
        When ``max |df|`` passes ``blowup_threshold``, or when continuation
        stalls while the boundary is (marginally) trapped.
    ConvergenceError
        When continuation stalls without a horizon signature.
    """
    opts = opts or JangOptions()
    bg = data.grid
    tau = np.asarray(tau, dtype=float)
    if tau.shape != bg.sphere.shape:
        raise DimensionError("tau must live on the ball grid's boundary sphere")
    prec = _Preconditioner(bg)
    M = LinearOperator((np.prod(bg.shape),) * 2, matvec=lambda v: prec(v.reshape(bg.shape)).ravel())
    history: list[dict] = []

    def G(f, s):
        fp = project(bg, f)
        R = jang_operator(data, fp, s)
        R[-1] = fp[-1] - s * tau
        return project(bg, R) + (f - fp)

    def newton(f, s):
        res = G(f, s)
        nrm = float(np.abs(res).max())
        for it in range(opts.max_iter):
            if nrm <= opts.tol:
                return f, True
            lin = _Linearization(data, project(bg, f), s)

            def jv(v):
                v = v.reshape(bg.shape)
                pv = project(bg, v)
                out = lin(pv)
                out[-1] = pv[-1]
                return (project(bg, out) + (v - pv)).ravel()

            J = LinearOperator(M.shape, matvec=jv, dtype=float)
            step, info = gmres(J, -res.ravel(), rtol=opts.gmres_tol, atol=opts.tol * 1e-3,
                               restart=opts.gmres_restart, maxiter=20, M=M)
            step = step.reshape(bg.shape)
            t = opts.damping
            while t >= 1.0 / 64:
                trial = f + t * step
                res_t = G(trial, s)
                n_t = float(np.abs(res_t).max())
                if np.isfinite(n_t) and n_t < (1 - 1e-4 * t) * nrm:
                    break
                t *= 0.5
            else:
                history.append({"stage": s, "iter": it, "residual": nrm, "damping": 0.0, "gmres_info": int(info)})
                return f, False
            f, res, nrm = trial, res_t, n_t
            gmax, idx = _max_gradient(data, f)
            history.append({"stage": s, "iter": it, "residual": nrm, "damping": t, "gmres_info": int(info)})
            if gmax > opts.blowup_threshold:
                raise _obstruction(data, f, s, history, "gradient exceeded blow-up threshold")
        return f, nrm <= opts.tol

    s = 0.0
    f = np.zeros(bg.shape)
    ds = 1.0 / max(1, opts.continuation_steps)
    while s < 1.0:
        s_new = min(1.0, s + ds)
        guess = f + harmonic_extension(bg, (s_new - s) * tau)
        f_new, ok = newton(guess, s_new)
        if ok:
            # an unresolved discrete solution shows up in the independent residual
            check = float(np.abs(jang_residual(data, f_new, s_new * tau, s_new)).max())
            history.append({"stage": s_new, "iter": -1, "residual": check, "damping": 0.0, "gmres_info": 0})
            ok = check <= opts.verify_tol
        if ok:
            f, s = f_new, s_new
            ds = min(2 * ds, 1.0 - s) if s < 1 else ds
            continue
        ds *= 0.5
        if ds < opts.min_stage:
            margin = _trapped_margin(data)
            if margin <= 0:
                raise _obstruction(data, f, s, history, "continuation stalled on data with a trapped boundary")
            raise ConvergenceError(f"Jang continuation stalled at s={s:.4f}", history=history)

    res = jang_residual(data, f, tau)
    Hess, df = _hessian(bg, data.Gamma, f)
    fu = np.einsum("ij...,j...->i...", data.ginv, df)
    W = np.sqrt(1.0 + np.einsum("i...,i...->...", df, fu))
    e4 = np.concatenate([-np.ones((1,) + bg.shape), fu]) / W
    return JangSolution(
        data=data, tau=tau, f=f, graph_metric=data.g + df[:, None] * df[None, :],
        e4_tilde=e4, h=Hess / W, residual=float(np.abs(res).max()), history=history,
    )


def _trapped_margin(data: BallDataSet) -> float:
    tr = data.boundary_trace()
    return float((tr["k"] - np.abs(tr["trP_sigma"])).min())


def _obstruction(data, f, s, history, why):
    gmax, idx = _max_gradient(data, f)
    pos = data.grid.points[(slice(None),) + idx]
    locus = {"node": [int(i) for i in idx], "position": [float(x) for x in pos]}
    margin = _trapped_margin(data)
    return HorizonObstruction(
        f"{why} (stage s={s:.4f}, max|df|={gmax:.3e}, boundary k-|trP| min={margin:.3e})",
        f=f, stage=s, max_gradient=gmax, locus=locus, trapped_margin=margin, history=history,
    )


def _graph_fields(sol: JangSolution, data: BallDataSet) -> dict:
    """Ball-wide graph quantities: unit field ``u``, acceleration form and ``X``."""
    bg = data.grid
    Hess, df = _hessian(bg, data.Gamma, sol.f)
    fu = np.einsum("ij...,j...->i...", data.ginv, df)
    W2 = 1.0 + np.einsum("i...,i...->...", df, fu)
    W = np.sqrt(W2)
    u = fu / W
    du = ball_gradient(bg, u)  # du[j, k] = d_j u^k
    cov_u = du + np.einsum("kjl...,l...->jk...", data.Gamma, u)
    nabla_uu = np.einsum("j...,jk...->k...", u, cov_u)
    dW = ball_gradient(bg, W)
    uW = np.einsum("j...,j...->...", u, dW)
    accel = np.einsum("kl...,l...->k...", data.g, nabla_uu) + df * uW / W2
    Xflat = accel - np.einsum("kl...,l...->k...", data.P, u)
    gt_inv = data.ginv - fu[:, None] * fu[None, :] / W2
    Gamma_t = data.Gamma + (fu / W2)[:, None, None] * Hess[None]
    return {
        "df": df, "fu": fu, "W": W, "u": u, "Hess": Hess, "accel": accel,
        "Xflat": Xflat, "gt_inv": gt_inv, "Gamma_t": Gamma_t,
    }


def graph_boundary_data(sol: JangSolution, data: BallDataSet | None = None) -> dict:
    """Boundary package of a Jang solution.

    Returns
    -------
    dict
        ``k_tilde`` (mean curvature of the boundary inside the graph),
        ``accel_term``, ``momentum_term``, ``integrand`` (their combination
        ``k_tilde - accel_term + momentum_term``), ``f3`` (outward normal
        derivative of ``f`` for ``g``), ``phi`` (boost angle),
        ``sigma_hat`` (boundary metric induced by the graph), ``sigma``,
        ``tau``, ``grad_tau_sq``, ``k``, ``trP_sigma``, ``alpha_e3``,
        ``X_normal`` (``X`` paired with the graph unit normal),
        ``h_e3prime`` (physical generalized mean curvature in the frame
        boosted by ``phi``).
    """
    data = sol.data if data is None else data
    bg = data.grid
    sg = bg.sphere
    fields = _graph_fields(sol, data)
    last = (Ellipsis, -1, slice(None), slice(None))
    df = fields["df"][last]
    fu = fields["fu"][last]
    W = fields["W"][last]
    u = fields["u"][last]
    gt_inv = fields["gt_inv"][last]
    Gam_t = fields["Gamma_t"][last]
    P = data.P[last]
    yhat = sg.frame[0]
    up = np.einsum("ijtp,jtp->itp", gt_inv, yhat)
    norm_t = np.sqrt(np.einsum("itp,itp->tp", up, yhat))
    e3t = up / norm_t
    hess_r = (np.eye(3)[:, :, None, None] - yhat[:, None] * yhat[None, :]) - np.einsum("kijtp,ktp->ijtp", Gam_t, yhat)
    k_tilde = np.einsum("ijtp,ijtp->tp", gt_inv - e3t[:, None] * e3t[None, :], hess_r) / norm_t
    accel = np.einsum("ktp,ktp->tp", fields["accel"][last], e3t)
    momentum = np.einsum("ktp,kltp,ltp->tp", e3t, P, u)
    X_normal = np.einsum("ktp,ktp->tp", fields["Xflat"][last], e3t)

    geo = data.boundary_trace()
    e3 = geo["e3"]
    tangents = geo["tangents"]
    f3 = np.einsum("itp,itp->tp", df, e3)
    grad_tau_sq = np.einsum("itp,itp->tp", df, fu) - f3**2
    root = np.sqrt(1.0 + grad_tau_sq)
    phi = np.arcsinh(-f3 / root)
    sigma = geo["sigma"]
    dtau = np.einsum("aitp,itp->atp", tangents, df)
    sigma_hat = sigma + dtau[:, None] * dtau[None, :]
    # physical generalized mean curvature in the boosted frame
    grad_tau_vec = fu - f3 * e3
    P_gt_e3 = np.einsum("itp,ijtp,jtp->tp", grad_tau_vec, P, e3)
    cd = covariant_calculus(sg, sigma, phi)
    sinv = np.linalg.inv(np.moveaxis(sigma, (0, 1), (-2, -1)))
    dphi_dtau = np.einsum("tpab,atp,btp->tp", sinv, cd.grad, dtau)
    h_e3prime = W * geo["k"] - f3 * geo["trP_sigma"] + P_gt_e3 + dphi_dtau
    return {
        "k_tilde": k_tilde,
        "accel_term": accel,
        "momentum_term": momentum,
        "integrand": k_tilde - accel + momentum,
        "f3": f3,
        "phi": phi,
        "sigma": sigma,
        "sigma_hat": sigma_hat,
        "tau": sol.f[-1].copy(),
        "grad_tau_sq": grad_tau_sq,
        "k": geo["k"],
        "trP_sigma": geo["trP_sigma"],
        "alpha_e3": geo["alpha_e3"],
        "X_normal": X_normal,
        "h_e3prime": h_e3prime,
    }


def x_field_and_energy_report(sol: JangSolution, data: BallDataSet | None = None) -> dict:
    """Curvature condition and boundary positivity for the field ``X``.

    Returns
    -------
    dict
        ``min_curvature_condition`` = min over ball nodes of
        ``R_tilde + 2 div X - 2 |X|^2`` (graph metric),
        ``min_boundary_condition`` = min over boundary nodes of
        ``k_tilde - <X, nu>``, and ``dominant_energy_ok``.
    """
    data = sol.data if data is None else data
    bg = data.grid
    fields = _graph_fields(sol, data)
    gt = sol.graph_metric
    gt_inv = fields["gt_inv"]
    Xup = np.einsum("ij...,j...->i...", gt_inv, fields["Xflat"])
    vol = np.sqrt(np.linalg.det(np.moveaxis(gt, (0, 1), (-2, -1))))
    div = np.einsum("ii...->...", ball_gradient(bg, vol * Xup)) / vol
    X2 = np.einsum("i...,i...->...", Xup, fields["Xflat"])
    Rt = np.einsum("ij...,ij...->...", gt_inv, ricci_tensor(bg, fields["Gamma_t"]))
    cond = Rt + 2 * div - 2 * X2
    bd = graph_boundary_data(sol, data)
    bcond = bd["k_tilde"] - bd["X_normal"]
    cr = constraint_residuals(data)
    return {
        "min_curvature_condition": float(cond.min()),
        "min_boundary_condition": float(bcond.min()),
        "dominant_energy_ok": cr["dominant_energy_ok"],
        "min_dominant_energy": cr["min_dominant_energy"],
        "curvature_condition": cond,
        "X_flat": fields["Xflat"],
    }


def dump_solution(sol: JangSolution, outdir) -> Path:
    """Radial-slice CSVs of ``f`` along the three axes and a JSON boundary package."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    bg = sol.data.grid
    sg = bg.sphere
    # slice along the node nearest the north pole, phi = 0
    with (outdir / "jang_radial_slice.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "theta", "phi", "f"])
        for it in (0, sg.n_theta // 2, sg.n_theta - 1):
            for ir in range(bg.n_r):
                w.writerow([repr(float(bg.r[ir])), repr(float(sg.theta[it])), repr(0.0), repr(float(sol.f[ir, it, 0]))])
    bd = sol.boundary
    payload = {
        "L": sg.L,
        "n_r": bg.n_r,
        "residual": sol.residual,
        "history": sol.history,
        "boundary": {
            key: {"min": float(np.min(bd[key])), "max": float(np.max(bd[key]))}
            for key in ("k_tilde", "accel_term", "momentum_term", "f3", "phi", "integrand")
        },
    }
    path = outdir / "jang_boundary.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True))
    return path
