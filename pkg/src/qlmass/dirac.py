r"""Boundary Dirac operator on a conformally round sphere and monogenic spinors in the unit ball.

Conventions
-----------
All signs are fixed here and nowhere else.

==========================  ==============================================
Spinors                     ``C^2`` valued fields (Cartesian trivialization)
Clifford action             ``rho(e) = i sigma . e``, so
                            ``rho(a) rho(b) + rho(b) rho(a) = -2 a . b``
Normal                      interior pointing, ``nu = -x/|x|`` on the sphere
Bulk Dirac operator         ``hatD = sum_i rho(e_i) d_i = i sigma . grad``
Boundary Dirac operator     ``D = -rho(nu) sum_a rho(e_a) d_a + H/2``;
                            on the unit sphere ``D = sigma . L + 1``
Chiral projections          ``Pi_pm = (1 pm i rho(nu)) / 2 = (1 pm sigma . x) / 2``
Spectral projections        ``P_ge0``, ``P_lt0`` from the eigenvectors of ``D``
==========================  ==============================================

Boundary spinors are expanded in spinor spherical harmonics
``Omega_{j,l,m}`` (Clebsch-Gordan coupling of ``Y_l`` with spin one half)
with ``j <= L - 1/2``.  Each ``j`` contributes the pair ``l = j - 1/2``
(``D = j + 1/2``) and ``l = j + 1/2`` (``D = -(j + 1/2)``), so the span is
invariant under ``D`` and under multiplication by ``sigma . x``, which swaps
the two members of a pair with a minus sign.  The dimension is ``2L(L+1)``.

For ``hat sigma = e^{2u}`` round the operator is assembled by conformal
covariance: ``psi = e^{-u/2} phi`` solves ``D_u psi = lambda psi`` iff
``D_0 phi = lambda e^u phi``.  In the harmonic basis this is the Hermitian
pencil ``A c = lambda B c`` with ``A`` the round operator and
``B = <e^u Omega_a, Omega_b>``; ``c^H B c`` is the ``L^2(mu_hat sigma)`` norm.

Interior monogenic spinors are ``r^l Omega_{l+1/2,l,m}``; their traces are
exactly the positive eigenspinors of the round boundary operator.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import ConfigurationError, ConvergenceError, DimensionError, PreconditionError
from .jang import BallGrid, ball_gradient, ball_integrate, make_ball_grid
from .sphere_spectral import SphereGrid, _legendre_tables, analyze, integrate, make_grid, synthesize

__all__ = [
    "PAULI",
    "BoundarySpinor",
    "DiracOperator",
    "DiracSpectrum",
    "FlatBallSpinor",
    "spinor_labels",
    "spinor_harmonics",
    "boundary_dirac",
    "spectrum_and_projections",
    "flat_ball_solve",
    "verify_hypersurface_identity",
    "verify_lichnerowicz",
    "verify_spin_inequalities",
    "write_spectrum_csv",
]

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

# tail of the conformal factor regarded as numerically zero
_BAND_TOL = 1e-12
# largest quadrature band limit tried for the conformal Gram matrix
_QUAD_CAP = 256


def clifford(vec: np.ndarray) -> np.ndarray:
    """Matrix field ``rho(v) = i sigma . v``, shape ``(2, 2, ...)``."""
    vec = np.asarray(vec)
    return 1j * np.einsum("iab,i...->ab...", PAULI, vec)


def sigma_dot(vec: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Pointwise ``(sigma . v) psi`` for ``vec`` of shape (3, ...) and ``psi`` of shape (2, ...)."""
    return np.einsum("iab,i...,b...->a...", PAULI, vec, psi)


# ---------------------------------------------------------------- harmonics


@lru_cache(maxsize=None)
def spinor_labels(L: int) -> tuple[tuple[int, int, int, int], ...]:
    """Labels ``(j2, l, m2, kind)`` of the boundary basis of band limit ``L``.

    ``j = j2/2``, ``m = m2/2``; ``kind = +1`` for ``l = j - 1/2`` and ``-1``
    for ``l = j + 1/2``.  Ordered by ``j``, then ``m``, then kind ``+1``
    before ``-1``, so pair partners are adjacent.
    """
    out = []
    for j2 in range(1, 2 * L, 2):
        for m2 in range(-j2, j2 + 1, 2):
            out.append((j2, (j2 - 1) // 2, m2, 1))
            out.append((j2, (j2 + 1) // 2, m2, -1))
    return tuple(out)


def _round_eigenvalues(L: int) -> np.ndarray:
    return np.array([k * (j2 + 1) / 2 for j2, _, _, k in spinor_labels(L)])


def _ylm_tables(theta: np.ndarray, phi: np.ndarray, L: int, derivs: bool = False):
    """``Y_lm`` (and angular derivatives) at scattered points.

    Returns arrays of shape ``(L+1, 2L+1, npts)`` indexed ``[l, L+m]``.
    """
    theta = np.ravel(theta)
    phi = np.ravel(phi)
    P, dP = _legendre_tables(L, theta)
    Y = np.zeros((L + 1, 2 * L + 1, theta.size), dtype=complex)
    Yt = np.zeros_like(Y) if derivs else None
    for m in range(L + 1):
        e = np.exp(1j * m * phi)
        Y[m:, L + m] = P[m] * e
        if derivs:
            Yt[m:, L + m] = dP[m] * e
        if m:
            sign = (-1) ** m
            Y[m:, L - m] = sign * np.conj(Y[m:, L + m])
            if derivs:
                Yt[m:, L - m] = sign * np.conj(Yt[m:, L + m])
    if not derivs:
        return Y
    mvals = np.arange(-L, L + 1)[None, :, None]
    Yp = 1j * mvals * Y  # d/dphi
    return Y, Yt, Yp


def _couple(tables, L: int, labels) -> np.ndarray:
    """Assemble ``Omega_{j,l,m}`` from a ``Y`` table, shape ``(n, 2, npts)``."""
    out = np.zeros((len(labels), 2, tables.shape[-1]), dtype=complex)
    for idx, (j2, l, m2, kind) in enumerate(labels):
        mu_up = (m2 - 1) // 2
        mu_dn = (m2 + 1) // 2
        a = np.sqrt((2 * l + m2 + 1) / (2 * (2 * l + 1)))  # sqrt((l + m + 1/2)/(2l+1))
        b = np.sqrt((2 * l - m2 + 1) / (2 * (2 * l + 1)))  # sqrt((l - m + 1/2)/(2l+1))
        up = tables[l, L + mu_up] if abs(mu_up) <= l else 0.0
        dn = tables[l, L + mu_dn] if abs(mu_dn) <= l else 0.0
        if kind > 0:
            out[idx, 0] = a * up
            out[idx, 1] = b * dn
        else:
            out[idx, 0] = -b * up
            out[idx, 1] = a * dn
    return out


def spinor_harmonics(grid: SphereGrid, L: int) -> np.ndarray:
    """Spinor harmonics of band limit ``L`` on the grid, shape ``(2L(L+1), 2, n_theta, n_phi)``."""
    if L > grid.L:
        raise DimensionError(f"spinor band limit {L} exceeds grid band limit {grid.L}")
    Y = _ylm_tables(grid.theta2d, grid.phi2d, grid.L)
    return _couple(Y, grid.L, spinor_labels(L)).reshape((-1, 2) + grid.shape)


def _chirality_matrix(L: int) -> np.ndarray:
    """Matrix of ``sigma . x`` in the harmonic basis: pair partners swapped with sign ``-1``."""
    n = 2 * L * (L + 1)
    S = np.zeros((n, n))
    idx = np.arange(0, n, 2)
    S[idx, idx + 1] = -1.0
    S[idx + 1, idx] = -1.0
    return S


# ---------------------------------------------------------------- boundary spinors


@dataclass(frozen=True, eq=False)
class BoundarySpinor:
    """Spinor field on a sphere with metric ``e^{2u}`` times round.

    Attributes
    ----------
    grid : SphereGrid
    psi : ndarray, shape (2, n_theta, n_phi)
        Complex components.
    u : ndarray or float
        Conformal factor; ``0`` for the unit round sphere.
    band_limit : int
        Band limit of the harmonic basis used to represent the field.
    """

    grid: SphereGrid
    psi: np.ndarray
    u: np.ndarray | float = 0.0
    band_limit: int | None = None

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=complex)
        if psi.shape != (2,) + self.grid.shape:
            raise DimensionError(f"spinor shape {psi.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "psi", psi)
        if self.band_limit is None:
            object.__setattr__(self, "band_limit", self.grid.L)

    @property
    def area_form(self) -> np.ndarray:
        return np.broadcast_to(np.exp(2 * np.asarray(self.u, dtype=float)), self.grid.shape)

    def norm_sq(self) -> np.ndarray:
        """Pointwise Hermitian norm ``|psi|^2``."""
        return np.sum(np.abs(self.psi) ** 2, axis=0)

    def inner(self, other: "BoundarySpinor") -> complex:
        """``L^2(mu_hat sigma)`` inner product, antilinear in ``self``."""
        dens = np.sum(np.conj(self.psi) * other.psi, axis=0)
        return complex(integrate(self.grid, dens, self.area_form))

    def clifford_normal(self) -> "BoundarySpinor":
        """``rho(nu) psi`` with ``nu`` the interior normal."""
        nu = -self.grid.frame[0]
        out = np.einsum("ab...,b...->a...", clifford(nu), self.psi)
        return BoundarySpinor(self.grid, out, self.u, self.band_limit)

    def chiral_parts(self) -> tuple[np.ndarray, np.ndarray]:
        """Pointwise ``Pi_+ psi`` and ``Pi_- psi``."""
        s = sigma_dot(self.grid.frame[0], self.psi)
        return 0.5 * (self.psi + s), 0.5 * (self.psi - s)


# ---------------------------------------------------------------- operator


@dataclass(eq=False)
class DiracOperator:
    """Boundary Dirac operator in the spinor-harmonic basis.

    The represented spinor is ``psi = e^{-u/2} sum_a c_a Omega_a``.

    Attributes
    ----------
    L : int
        Spinor band limit.
    grid : SphereGrid
        Grid on which spinors are sampled.
    u : ndarray
        Conformal factor on ``grid``.
    A : ndarray
        Round operator (diagonal, ``+-(j+1/2)``).
    B : ndarray
        Gram matrix of ``e^u``.
    S : ndarray
        Matrix of ``sigma . x`` (equal to ``i rho(nu)``).
    quad_L : int
        Band limit of the quadrature grid used for ``B``.
    u_degree : int
        Effective degree of ``u``.
    """

    L: int
    grid: SphereGrid
    u: np.ndarray
    A: np.ndarray
    B: np.ndarray
    S: np.ndarray
    quad_L: int
    u_degree: int

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @cached_property
    def matrix(self) -> np.ndarray:
        """``B^{-1} A``: action on coefficient vectors."""
        return scipy.linalg.solve(self.B, self.A, assume_a="pos")

    @property
    def labels(self):
        return spinor_labels(self.L)

    @cached_property
    def _harmonics(self) -> np.ndarray:
        return spinor_harmonics(self.grid, self.L)

    def apply(self, c: np.ndarray) -> np.ndarray:
        return self.matrix @ c

    def inner(self, c1: np.ndarray, c2: np.ndarray) -> complex:
        """``L^2(mu_hat sigma)`` inner product of coefficient vectors."""
        return complex(np.conj(c1) @ (self.B @ c2))

    def self_adjointness_residual(self) -> float:
        """``max |B M - (B M)^H|`` with ``M`` the operator matrix."""
        BM = self.B @ self.matrix
        return float(np.max(np.abs(BM - BM.conj().T)))

    def to_spinor(self, c: np.ndarray) -> BoundarySpinor:
        phi = np.einsum("k,kaij->aij", np.asarray(c, dtype=complex), self._harmonics)
        return BoundarySpinor(self.grid, np.exp(-0.5 * self.u) * phi, self.u, self.L)

    def from_spinor(self, spinor: BoundarySpinor) -> np.ndarray:
        """``L^2(mu_hat sigma)`` orthogonal projection onto the basis span."""
        if spinor.grid is not self.grid and spinor.grid.L != self.grid.L:
            raise DimensionError("spinor grid differs from operator grid")
        # normal equations of min int e^u |e^{u/2} psi - sum c Omega|^2
        w = np.exp(1.5 * self.u) * self.grid.quad
        rhs = np.einsum("kaij,aij->k", np.conj(self._harmonics), spinor.psi * w)
        return scipy.linalg.solve(self.B, rhs, assume_a="pos")


def _effective_degree(c: np.ndarray, tol: float) -> int:
    per_l = np.sqrt(np.sum(np.abs(c) ** 2, axis=-1))
    scale = max(float(per_l.max()), 1.0)
    big = np.nonzero(per_l > tol * scale)[0]
    return int(big[-1]) if big.size else 0


def _conformal_gram(u_coeffs: np.ndarray, L: int, u_degree: int) -> tuple[np.ndarray, int]:
    """Gram matrix of ``e^u`` on an oversampled grid with a resolution check."""
    Lq = 2 * L + 4 * u_degree + 8
    while True:
        if Lq > _QUAD_CAP:
            raise ConvergenceError(f"conformal weight e^u not resolved below band limit {_QUAD_CAP}")
        qg = make_grid(Lq)
        w = np.exp(synthesize(qg, u_coeffs, real=True))
        tail = _effective_degree(analyze(qg, w), _BAND_TOL)
        if tail < Lq - 2 and tail + 2 * L <= 2 * Lq + 1:
            break
        Lq += 16
    labels = spinor_labels(L)
    n = len(labels)
    B = np.zeros((n, n), dtype=complex)
    rows = max(1, 4096 // qg.n_phi)
    for start in range(0, qg.n_theta, rows):
        sl = slice(start, start + rows)
        th = qg.theta2d[sl]
        Y = _ylm_tables(th, qg.phi2d[sl], L)
        Om = _couple(Y, L, labels)  # (n, 2, npts)
        wq = (w[sl] * qg.quad[sl]).ravel()
        flat = Om.reshape(n, -1)
        B += (np.conj(flat) * np.tile(wq, 2)) @ flat.T
    B = 0.5 * (B + B.conj().T)
    return B, Lq


def boundary_dirac(conformal_u=0.0, grid: SphereGrid | None = None, L: int | None = None) -> DiracOperator:
    """Assemble the boundary Dirac operator of ``e^{2u}`` times the round metric.

    Parameters
    ----------
    conformal_u : float or ndarray
        Constant or samples of ``u`` on ``grid``.
    grid : SphereGrid, optional
        Sampling grid; defaults to ``make_grid(L)``.
    L : int, optional
        Spinor band limit; defaults to ``grid.L``.

    Raises
    ------
    DimensionError
        If ``u`` is not band-limited on the grid (its top degrees carry
        energy, so samples may be aliased) or its degree exceeds ``L``.
    """
    if grid is None:
        if L is None:
            raise ConfigurationError("give a grid or a band limit")
        grid = make_grid(L)
    L = grid.L if L is None else int(L)
    if L < 1 or L > grid.L:
        raise ConfigurationError(f"spinor band limit {L} must lie in [1, {grid.L}]")
    u = np.asarray(conformal_u, dtype=float)
    if u.ndim == 0:
        u = np.full(grid.shape, float(u))
    if u.shape != grid.shape:
        raise DimensionError(f"conformal factor shape {u.shape} does not match grid {grid.shape}")
    uc = analyze(grid, u)
    deg = _effective_degree(uc[1:], _BAND_TOL) + 1 if uc.shape[0] > 1 else 0
    if np.max(np.abs(uc[1:])) <= _BAND_TOL * max(1.0, abs(uc[0, grid.L])):
        deg = 0
    if deg > grid.L - 2 or deg > L:
        raise DimensionError(
            f"conformal factor has degree {deg}; needs at most min(L={L}, grid L - 2 = {grid.L - 2})"
        )
    A = np.diag(_round_eigenvalues(L)).astype(complex)
    n = A.shape[0]
    if deg == 0:
        c0 = float(np.mean(u))
        B = np.exp(c0) * np.eye(n, dtype=complex)
        Lq = grid.L
    else:
        B, Lq = _conformal_gram(uc[: deg + 1, grid.L - deg : grid.L + deg + 1], L, deg)
    return DiracOperator(L=L, grid=grid, u=u, A=A, B=B, S=_chirality_matrix(L), quad_L=Lq, u_degree=deg)


# ---------------------------------------------------------------- spectrum


@dataclass(eq=False)
class DiracSpectrum:
    """Eigen-decomposition of a boundary Dirac operator.

    Attributes
    ----------
    eigenvalues : ndarray
        Sorted ascending.
    vectors : ndarray
        Columns are coefficient vectors, orthonormal for ``B``.
    operator : DiracOperator
    P_ge0, P_lt0, Pi_plus, Pi_minus : ndarray
        Projections acting on coefficient vectors.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray
    operator: DiracOperator
    P_ge0: np.ndarray
    P_lt0: np.ndarray
    Pi_plus: np.ndarray
    Pi_minus: np.ndarray

    @property
    def L(self) -> int:
        return self.operator.L

    def eigenspinor(self, k: int) -> BoundarySpinor:
        return self.operator.to_spinor(self.vectors[:, k])

    @property
    def eigenspinors(self) -> list[BoundarySpinor]:
        return [self.eigenspinor(k) for k in range(self.eigenvalues.size)]

    def orthonormality_residual(self) -> float:
        G = self.vectors.conj().T @ self.operator.B @ self.vectors
        return float(np.max(np.abs(G - np.eye(G.shape[0]))))

    def symmetry_residual(self) -> float:
        """``max |lambda_k + lambda_{n-1-k}|``."""
        lam = self.eigenvalues
        return float(np.max(np.abs(lam + lam[::-1])))

    def multiplicity_groups(self, tol: float = 1e-8) -> np.ndarray:
        """Group index per eigenvalue; consecutive values within ``tol`` share a group."""
        lam = self.eigenvalues
        gaps = np.diff(lam) > tol * np.maximum(1.0, np.abs(lam[1:]))
        return np.concatenate([[0], np.cumsum(gaps)])

    def clusters(self, tol: float = 1e-8) -> list[tuple[float, int]]:
        """``(mean eigenvalue, multiplicity)`` per group."""
        groups = self.multiplicity_groups(tol)
        return [
            (float(self.eigenvalues[groups == g].mean()), int(np.sum(groups == g)))
            for g in range(int(groups[-1]) + 1)
        ]


def spectrum_and_projections(op: DiracOperator) -> DiracSpectrum:
    """Dense Hermitian eigensolve of ``A c = lambda B c`` and the four projections."""
    try:
        lam, V = scipy.linalg.eigh(op.A, op.B)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceError(f"Dirac eigensolve failed: {exc}") from exc
    pos = lam >= 0
    Vp, Vm = V[:, pos], V[:, ~pos]
    P_ge0 = Vp @ (Vp.conj().T @ op.B)
    P_lt0 = Vm @ (Vm.conj().T @ op.B)
    eye = np.eye(op.dim)
    return DiracSpectrum(
        eigenvalues=lam,
        vectors=V,
        operator=op,
        P_ge0=P_ge0,
        P_lt0=P_lt0,
        Pi_plus=0.5 * (eye + op.S),
        Pi_minus=0.5 * (eye - op.S),
    )


def write_spectrum_csv(spec: DiracSpectrum, path) -> Path:
    """CSV with columns ``index,lambda,multiplicity_group``."""
    path = Path(path)
    groups = spec.multiplicity_groups()
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "lambda", "multiplicity_group"])
        for k, (lam, g) in enumerate(zip(spec.eigenvalues, groups)):
            w.writerow([k, repr(float(lam)), int(g)])
    return path


# ---------------------------------------------------------------- flat ball


@lru_cache(maxsize=None)
def _monogenic_positions(L: int) -> np.ndarray:
    """Basis positions of ``Omega_{l+1/2,l,m}``, the traces of ``r^l Omega``."""
    return np.array([i for i, lab in enumerate(spinor_labels(L)) if lab[3] > 0])


@dataclass(eq=False)
class FlatBallSpinor:
    """Monogenic spinor ``sum a_k r^{l_k} Omega_{l_k+1/2, l_k, m_k}`` in the unit ball.

    Attributes
    ----------
    coeffs : ndarray
        Coefficients over the monogenic basis (degree ``l <= L-1``).
    L : int
        Boundary band limit.
    grid : SphereGrid
        Boundary grid.
    condition : str
        ``"MIT"``, ``"APS"`` or ``"none"``.
    boundary_data : BoundarySpinor or None
    condition_number : float
    boundary_residual : float
        Max pointwise (MIT) or ``L^2`` (APS) defect of the boundary condition.
    """

    coeffs: np.ndarray
    L: int
    grid: SphereGrid
    condition: str = "none"
    boundary_data: BoundarySpinor | None = None
    condition_number: float = 1.0
    boundary_residual: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def degrees(self) -> np.ndarray:
        labels = spinor_labels(self.L)
        return np.array([labels[i][1] for i in _monogenic_positions(self.L)])

    def boundary_coefficients(self) -> np.ndarray:
        """Trace as a coefficient vector in the boundary basis."""
        c = np.zeros(2 * self.L * (self.L + 1), dtype=complex)
        c[_monogenic_positions(self.L)] = self.coeffs
        return c

    @cached_property
    def _sphere_parts(self):
        """Per-degree angular parts and their angular derivatives on the grid."""
        g = self.grid
        Y, Yt, Yp = _ylm_tables(g.theta2d, g.phi2d, g.L, derivs=True)
        labels = [spinor_labels(self.L)[i] for i in _monogenic_positions(self.L)]
        shape = (len(labels), 2) + g.shape
        Om = _couple(Y, g.L, labels).reshape(shape)
        Omt = _couple(Yt, g.L, labels).reshape(shape)
        Omp = _couple(Yp, g.L, labels).reshape(shape)
        deg = self.degrees
        parts = np.zeros((self.L, 2) + g.shape, dtype=complex)
        parts_t = np.zeros_like(parts)
        parts_p = np.zeros_like(parts)
        for l in range(self.L):
            sel = deg == l
            a = self.coeffs[sel]
            parts[l] = np.einsum("k,kaij->aij", a, Om[sel])
            parts_t[l] = np.einsum("k,kaij->aij", a, Omt[sel])
            parts_p[l] = np.einsum("k,kaij->aij", a, Omp[sel])
        return parts, parts_t, parts_p

    def trace(self) -> BoundarySpinor:
        parts, _, _ = self._sphere_parts
        return BoundarySpinor(self.grid, parts.sum(axis=0), 0.0, self.L)

    def _check_ball(self, bg: BallGrid):
        if bg.sphere.L != self.grid.L:
            raise DimensionError("ball grid sphere band limit must match the boundary grid")

    def on_ball(self, bg: BallGrid) -> np.ndarray:
        """Samples on a ball grid, shape ``(2, n_r, n_theta, n_phi)``."""
        self._check_ball(bg)
        parts, _, _ = self._sphere_parts
        rl = bg.r[None, :] ** np.arange(self.L)[:, None]  # (L, n_r)
        return np.einsum("lk,laij->akij", rl, parts)

    def gradient_on_ball(self, bg: BallGrid) -> np.ndarray:
        r"""Closed-form Cartesian gradient, shape ``(3, 2, n_r, n_theta, n_phi)``.

        ``grad(r^l F) = r^{l-1} (l F e_r + d_theta F e_theta + d_phi F / sin(theta) e_phi)``.
        """
        self._check_ball(bg)
        parts, pt, pp = self._sphere_parts
        g = self.grid
        e_r, e_t, e_p = g.frame
        ls = np.arange(self.L)
        rl1 = np.where(ls[:, None] > 0, bg.r[None, :] ** np.maximum(ls - 1, 0)[:, None], 0.0)
        ang = (
            np.einsum("l,laij,xij->xlaij", ls.astype(float), parts, e_r)
            + np.einsum("laij,xij->xlaij", pt, e_t)
            + np.einsum("laij,xij->xlaij", pp / g.sin_t, e_p)
        )
        return np.einsum("lk,xlaij->xakij", rl1, ang)

    def evaluate(self, points: np.ndarray, derivs: bool = False):
        """Values (and gradient) at scattered interior points ``(3, npts)``."""
        pts = np.asarray(points, dtype=float).reshape(3, -1)
        r = np.linalg.norm(pts, axis=0)
        theta = np.arccos(np.clip(pts[2] / np.where(r > 0, r, 1.0), -1.0, 1.0))
        phi = np.arctan2(pts[1], pts[0])
        labels = [spinor_labels(self.L)[i] for i in _monogenic_positions(self.L)]
        Y, Yt, Yp = _ylm_tables(theta, phi, self.L, derivs=True)
        deg = self.degrees
        rl = r[None, :] ** deg[:, None]
        Om = _couple(Y, self.L, labels)
        psi = np.einsum("k,kan,kn->an", self.coeffs, Om, rl)
        if not derivs:
            return psi
        Omt = _couple(Yt, self.L, labels)
        Omp = _couple(Yp, self.L, labels)
        st, ct = np.sin(theta), np.cos(theta)
        sp, cp = np.sin(phi), np.cos(phi)
        e_r = np.stack([st * cp, st * sp, ct])
        e_t = np.stack([ct * cp, ct * sp, -st])
        e_p = np.stack([-sp, cp, np.zeros_like(st)])
        rl1 = np.where(deg[:, None] > 0, r[None, :] ** np.maximum(deg - 1, 0)[:, None], 0.0)
        grad = (
            np.einsum("k,k,kan,kn,xn->xan", self.coeffs, deg.astype(float), Om, rl1, e_r)
            + np.einsum("k,kan,kn,xn->xan", self.coeffs, Omt, rl1, e_t)
            + np.einsum("k,kan,kn,xn->xan", self.coeffs, Omp / st, rl1, e_p)
        )
        return psi, grad


def monogenic_spinor(coeffs: np.ndarray, L: int, grid: SphereGrid | None = None) -> FlatBallSpinor:
    """Wrap a coefficient vector over the monogenic basis."""
    grid = make_grid(L) if grid is None else grid
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.shape != (L * (L + 1),):
        raise DimensionError(f"expected {L * (L + 1)} monogenic coefficients, got {coeffs.shape}")
    return FlatBallSpinor(coeffs=coeffs, L=L, grid=grid)


def flat_ball_solve(
    boundary_data: BoundarySpinor,
    condition: str = "MIT",
    spectrum: DiracSpectrum | None = None,
    singular_tol: float = 1e-12,
) -> FlatBallSpinor:
    """Monogenic spinor in the unit ball with MIT or APS boundary condition.

    The trace of the unknown is matched against the data in the harmonic
    basis: ``Pi_+ T a = Pi_+ alpha`` (MIT) or ``P_ge0 T a = P_ge0 alpha``
    (APS), with ``T`` the trace map of the monogenic basis.

    Raises
    ------
    PreconditionError
        If the boundary metric is not the unit round one.
    ConvergenceError
        If the matching matrix is singular to ``singular_tol``; the message
        carries its condition number.
    """
    cond_name = condition.upper()
    if cond_name not in ("MIT", "APS"):
        raise ConfigurationError(f"unknown boundary condition {condition!r}")
    if np.max(np.abs(np.asarray(boundary_data.u, dtype=float))) > 0:
        raise PreconditionError("flat-ball solve requires the unit round boundary (u = 0)")
    L = boundary_data.band_limit
    grid = boundary_data.grid
    if spectrum is None or spectrum.L != L:
        spectrum = spectrum_and_projections(boundary_dirac(0.0, grid, L))
    op = spectrum.operator
    alpha = op.from_spinor(boundary_data)
    C = spectrum.Pi_plus if cond_name == "MIT" else spectrum.P_ge0
    T = np.zeros((op.dim, L * (L + 1)), dtype=complex)
    T[_monogenic_positions(L), np.arange(L * (L + 1))] = 1.0
    M = C @ T
    s = np.linalg.svd(M, compute_uv=False)
    cond = float(s[0] / s[-1]) if s[-1] > 0 else np.inf
    if s[-1] <= singular_tol * s[0]:
        raise ConvergenceError(f"{cond_name} matching system singular at L={L} (condition number {cond:.3e})")
    a, *_ = np.linalg.lstsq(M, C @ alpha, rcond=None)
    sol = FlatBallSpinor(coeffs=a, L=L, grid=grid, condition=cond_name, boundary_data=boundary_data, condition_number=cond)
    defect_c = T @ a - alpha
    if cond_name == "MIT":
        tr = sol.trace()
        diff = BoundarySpinor(grid, tr.psi - op.to_spinor(alpha).psi, 0.0, L)
        plus, _ = diff.chiral_parts()
        res = float(np.max(np.abs(plus)))
    else:
        d = spectrum.P_ge0 @ defect_c
        res = float(np.sqrt(max(op.inner(d, d).real, 0.0)))
    sol.boundary_residual = res
    return sol


# ---------------------------------------------------------------- verification


def _boundary_D(psi: FlatBallSpinor) -> tuple[np.ndarray, np.ndarray]:
    """Trace and boundary Dirac operator of the trace, sampled on the grid."""
    op = boundary_dirac(0.0, psi.grid, psi.L)
    c = psi.boundary_coefficients()
    return op.to_spinor(c).psi, op.to_spinor(op.apply(c)).psi


def _ball_for(psi: FlatBallSpinor, n_r: int | None) -> BallGrid:
    return make_ball_grid(psi.grid.L, psi.L + 2 if n_r is None else n_r)


def verify_hypersurface_identity(psi: FlatBallSpinor, n_r: int | None = None) -> dict:
    r"""Nodewise check of ``D psi = -rho(nu) hatD psi - hatnabla_nu psi + H psi / 2``.

    The left side uses the spectral boundary operator; the right side uses
    collocation derivatives of the bulk samples (``H = 2``,
    ``hatnabla_nu = -d_r``).  The bulk term ``hatD psi`` is evaluated rather
    than dropped and reported separately as the monogenicity defect.
    """
    bg = _ball_for(psi, n_r)
    vals = psi.on_ball(bg)
    grad = ball_gradient(bg, vals)  # (3, 2, n_r, ...)
    trace, Dtrace = _boundary_D(psi)
    e_r = psi.grid.frame[0]
    g_b = grad[:, :, -1]
    dr = np.einsum("xij,xaij->aij", e_r, g_b)
    hatD = 1j * np.einsum("xab,xbij->aij", PAULI, g_b)
    nu = -e_r
    rho_nu_hatD = np.einsum("ab...,b...->a...", clifford(nu), hatD)
    rhs = -rho_nu_hatD + dr + trace
    res = np.abs(Dtrace - rhs)
    scale = max(1.0, float(np.max(np.abs(trace))))
    return {
        "max_residual": float(res.max()),
        "relative_residual": float(res.max() / scale),
        "monogenic_residual": float(np.max(np.abs(1j * np.einsum("xab,xbkij->akij", PAULI, grad)))),
        "n_r": bg.n_r,
    }


def verify_lichnerowicz(psi: FlatBallSpinor, n_r: int | None = None) -> dict:
    r"""Integrated identity ``int_S (<D psi, psi> - H|psi|^2/2) = int_B |hatnabla psi|^2``.

    Flat ball, so ``R = 0``; the bulk side uses collocation derivatives and
    the ball quadrature with ``n_r = L + 2`` by default.
    """
    bg = _ball_for(psi, n_r)
    grad = ball_gradient(bg, psi.on_ball(bg))
    rhs = ball_integrate(bg, np.sum(np.abs(grad) ** 2, axis=(0, 1)))
    trace, Dtrace = _boundary_D(psi)
    g = psi.grid
    dens = np.real(np.sum(np.conj(trace) * Dtrace, axis=0)) - np.sum(np.abs(trace) ** 2, axis=0)
    lhs = float(integrate(g, dens))
    res = abs(lhs - rhs)
    return {
        "lhs": lhs,
        "rhs": float(rhs),
        "residual": float(res),
        "relative_residual": float(res / max(abs(rhs), abs(lhs), 1e-300)) if max(abs(lhs), abs(rhs)) > 0 else 0.0,
        "n_r": bg.n_r,
    }


def verify_spin_inequalities(
    psi: FlatBallSpinor | BoundarySpinor,
    spectrum: DiracSpectrum | None = None,
    equality_tol: float = 1e-8,
) -> dict:
    r"""Boundary inequalities on the unit sphere (``H = 2``, ``X = 0``).

    * ``mit_gap = int <D psi, psi> - (1/2) int H |psi|^2``;
    * ``aps_gap``, the same for ``P_ge0 psi``, reported only when
      ``|P_ge0 psi| <= |psi|`` holds pointwise;
    * ``chirality_balance = int H |Pi_+ psi|^2 - int H |Pi_- psi|^2``, which
      vanishes in the equality case;
    * ``equality_residual = max |D psi - H psi / 2|``.
    """
    if isinstance(psi, FlatBallSpinor):
        L, grid = psi.L, psi.grid
        c = psi.boundary_coefficients()
    else:
        L, grid = psi.band_limit, psi.grid
        c = None
    if spectrum is None or spectrum.L != L:
        spectrum = spectrum_and_projections(boundary_dirac(0.0, grid, L))
    op = spectrum.operator
    if c is None:
        c = op.from_spinor(psi)
    H = 2.0

    def gap(cc):
        return float(np.real(op.inner(cc, op.apply(cc))) - 0.5 * H * np.real(op.inner(cc, cc)))

    tr = op.to_spinor(c)
    Dtr = op.to_spinor(op.apply(c))
    cp = spectrum.P_ge0 @ c
    p_abs = np.sqrt(op.to_spinor(cp).norm_sq())
    abs_psi = np.sqrt(tr.norm_sq())
    margin = float(np.min(abs_psi - p_abs))
    aps_ok = bool(np.all(p_abs <= abs_psi * (1 + 1e-10) + 1e-12))
    plus, minus = tr.chiral_parts()
    bal = H * (integrate(grid, np.sum(np.abs(plus) ** 2, axis=0)) - integrate(grid, np.sum(np.abs(minus) ** 2, axis=0)))
    mit = gap(c)
    return {
        "mit_gap": mit,
        "aps_condition_holds": aps_ok,
        "aps_condition_margin": margin,
        "aps_gap": gap(cp) if aps_ok else None,
        "chirality_balance": float(np.real(bal)),
        "equality_case": bool(abs(mit) <= equality_tol),
        "equality_residual": float(np.max(np.abs(Dtr.psi - 0.5 * H * tr.psi))),
        "norm_sq": float(np.real(op.inner(c, c))),
    }


def dump_spectrum(spec: DiracSpectrum, outdir) -> Path:
    """Spectrum CSV plus a JSON summary of the invariant checks."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_spectrum_csv(spec, outdir / "spectrum.csv")
    summary = {
        "L": spec.L,
        "u_degree": spec.operator.u_degree,
        "dimension": spec.operator.dim,
        "symmetry_residual": spec.symmetry_residual(),
        "orthonormality_residual": spec.orthonormality_residual(),
        "self_adjointness_residual": spec.operator.self_adjointness_residual(),
        "clusters": [[lam, mult] for lam, mult in spec.clusters()[:12]],
    }
    path = outdir / "spectrum.json"
    path.write_text(json.dumps(summary, indent=2, sort_keys=True))
    return path
