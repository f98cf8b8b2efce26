r"""Band-limited fields on the unit sphere.

Fields are sampled on a Gauss-Legendre (colatitude) by equispaced (longitude)
grid and represented by orthonormal complex spherical harmonics with the
Condon-Shortley phase.

Key Concepts
------------
* Nodes are ordered with colatitude ascending and longitude ascending; a
  scalar field is an array of shape ``(n_theta, n_phi)``.
* A rank-1 field (covector) has shape ``(2, n_theta, n_phi)`` and a rank-2
  field (symmetric tensor) has shape ``(2, 2, n_theta, n_phi)``.  Public
  functions use components in the coordinate frame ``(theta, phi)``.
* Internally tensors are moved to the orthonormal round frame
  ``(e_theta, e_phi)`` and differentiated through their Cartesian lift.
  Cartesian components of a smooth tangent tensor are smooth scalars on the
  sphere, so spectral differentiation stays exact at the poles.
* Inputs above the band limit are silently projected (aliased).  For example
  ``Y_{L+3,0}`` sampled on a grid of band limit ``L`` analyzes into lower
  degree coefficients; this is a property of the quadrature, not an error.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from functools import cached_property, lru_cache
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.special import roots_legendre

from .errors import ConfigurationError, DimensionError, GeometryError

__all__ = [
    "SphereGrid",
    "make_grid",
    "analyze",
    "synthesize",
    "sh_transform",
    "coeff_index",
    "ylm",
    "resample",
    "derivatives",
    "second_derivatives",
    "frame_gradient",
    "to_frame",
    "to_coord",
    "round_covariant_derivative",
    "metric_frame_data",
    "check_metric",
    "covariant_calculus",
    "area_density",
    "integrate",
    "round_metric",
    "write_field_csv",
]

L_MIN = 4
L_MAX = 256


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Gauss-Legendre by equispaced grid of band limit ``L``.

    Attributes
    ----------
    L : int
        Band limit.
    theta : ndarray, shape (L+1,)
        Colatitudes in ascending order.
    phi : ndarray, shape (2L+2,)
        Longitudes ``2 pi j / n_phi``.
    weights : ndarray, shape (L+1,)
        Gauss-Legendre weights in ``cos(theta)``.
    """

    L: int
    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray

    @property
    def n_theta(self) -> int:
        return self.theta.size

    @property
    def n_phi(self) -> int:
        return self.phi.size

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_theta, self.n_phi)

    @cached_property
    def quad(self) -> np.ndarray:
        """Node quadrature weights ``w_i * 2 pi / n_phi`` on the grid."""
        return np.repeat(self.weights[:, None] * (2 * np.pi / self.n_phi), self.n_phi, axis=1)

    @cached_property
    def sin_t(self) -> np.ndarray:
        return np.repeat(np.sin(self.theta)[:, None], self.n_phi, axis=1)

    @cached_property
    def cos_t(self) -> np.ndarray:
        return np.repeat(np.cos(self.theta)[:, None], self.n_phi, axis=1)

    @cached_property
    def theta2d(self) -> np.ndarray:
        return np.repeat(self.theta[:, None], self.n_phi, axis=1)

    @cached_property
    def phi2d(self) -> np.ndarray:
        return np.repeat(self.phi[None, :], self.n_theta, axis=0)

    @cached_property
    def frame(self) -> np.ndarray:
        """Cartesian vectors ``(e_r, e_theta, e_phi)``, shape ``(3, 3, n_theta, n_phi)``."""
        st, ct = self.sin_t, self.cos_t
        sp, cp = np.sin(self.phi2d), np.cos(self.phi2d)
        e_r = np.stack([st * cp, st * sp, ct])
        e_t = np.stack([ct * cp, ct * sp, -st])
        e_p = np.stack([-sp, cp, np.zeros_like(st)])
        return np.stack([e_r, e_t, e_p])

    @cached_property
    def legendre(self) -> tuple[list[np.ndarray], list[np.ndarray]]:
        """Normalized associated Legendre values and theta-derivatives.

        ``P[m][l - m, i]`` is the orthonormal ``P_l^m(cos theta_i)`` including
        the Condon-Shortley phase, so that ``Y_lm = P[m][l-m] exp(i m phi)``.
        """
        return _legendre_tables(self.L, self.theta)


@lru_cache(maxsize=None)
def make_grid(L: int) -> SphereGrid:
    """Build the sphere grid of band limit ``L``.

    Parameters
    ----------
    L : int
        Band limit, ``4 <= L <= 256``.

    Returns
    -------
    SphereGrid
        ``L+1`` colatitudes by ``2L+2`` longitudes.
    """
    if not isinstance(L, (int, np.integer)) or isinstance(L, bool):
        raise ConfigurationError(f"band limit must be an integer, got {L!r}")
    L = int(L)
    if not L_MIN <= L <= L_MAX:
        raise ConfigurationError(f"band limit L={L} outside [{L_MIN}, {L_MAX}]")
    x, w = _gauss_legendre(L + 1)
    # x ascending means theta descending; flip to ascending theta
    theta = np.arccos(x[::-1])
    weights = w[::-1].copy()
    n_phi = 2 * L + 2
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    return SphereGrid(L=L, theta=theta, phi=phi, weights=weights)


def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule, with nodes Newton-polished in extended precision.

    The polish makes the weights correctly rounded; errors of a few ulp in
    the plain double-precision weights leak into high-degree coefficients of
    constants and get amplified by ``1/r`` factors near the centre of a ball.
    """
    x = roots_legendre(n)[0].astype(np.longdouble)

    def legendre_pair(x):
        p0, p1 = np.ones_like(x), x.copy()
        for k in range(2, n + 1):
            p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
        return p1, n * (x * p1 - p0) / (x * x - 1)

    for _ in range(3):
        p, dp = legendre_pair(x)
        x = x - p / dp
    _, dp = legendre_pair(x)
    w = 2 / ((1 - x * x) * dp * dp)
    return x.astype(float), w.astype(float)


def _legendre_tables(L: int, theta: np.ndarray):
    x = np.cos(theta)
    s = np.sin(theta)
    P, dP = [], []
    pmm = np.full_like(x, 1.0 / np.sqrt(4 * np.pi))
    for m in range(L + 1):
        if m > 0:
            pmm = -np.sqrt((2 * m + 1) / (2 * m)) * s * pmm
        vals = np.empty((L + 1 - m, x.size))
        vals[0] = pmm
        if m < L:
            vals[1] = np.sqrt(2 * m + 3) * x * pmm
        for l in range(m + 2, L + 1):
            a = np.sqrt((4 * l * l - 1) / (l * l - m * m))
            b = np.sqrt(((l - 1) ** 2 - m * m) / (4 * (l - 1) ** 2 - 1))
            vals[l - m] = a * (x * vals[l - m - 1] - b * vals[l - m - 2])
        # d/dtheta from the standard three-term identity
        dvals = np.empty_like(vals)
        for l in range(m, L + 1):
            lower = vals[l - m - 1] if l > m else 0.0
            c = np.sqrt((2 * l + 1) / (2 * l - 1) * (l * l - m * m)) if l > m else 0.0
            dvals[l - m] = (l * x * vals[l - m] - c * lower) / s
        P.append(vals)
        dP.append(dvals)
    return P, dP


def coeff_index(L: int, l: int, m: int) -> tuple[int, int]:
    """Index of ``c_lm`` in the ``(L+1, 2L+1)`` coefficient array."""
    return l, L + m


def _check_field(grid: SphereGrid, f: np.ndarray) -> np.ndarray:
    f = np.asarray(f)
    if f.shape[-2:] != grid.shape:
        raise DimensionError(f"field shape {f.shape[-2:]} does not match grid {grid.shape}")
    return f


def analyze(grid: SphereGrid, f: np.ndarray) -> np.ndarray:
    """Spherical-harmonic coefficients of a sampled field.

    Parameters
    ----------
    grid : SphereGrid
    f : ndarray, shape (..., n_theta, n_phi)
        Real or complex samples; leading axes are batched.

    Returns
    -------
    ndarray, shape (..., L+1, 2L+1)
        Complex coefficients ``c[l, L+m]``; entries with ``|m| > l`` are zero.
    """
    f = _check_field(grid, f)
    L = grid.L
    F = np.fft.fft(f, axis=-1) * (2 * np.pi / grid.n_phi)
    P, _ = grid.legendre
    out = np.zeros(f.shape[:-2] + (L + 1, 2 * L + 1), dtype=complex)
    w = grid.weights
    for m in range(L + 1):
        table = P[m] * w
        out[..., m:, L + m] = np.einsum("lt,...t->...l", table, F[..., :, m])
        if m > 0:
            sign = (-1) ** m
            out[..., m:, L - m] = sign * np.einsum("lt,...t->...l", table, F[..., :, -m])
    return out


def _synth(grid: SphereGrid, c: np.ndarray, kind: str) -> np.ndarray:
    L = grid.L
    Lc = c.shape[-2] - 1
    if c.shape[-1] != 2 * Lc + 1:
        raise DimensionError("coefficient array must have shape (..., Lc+1, 2Lc+1)")
    P, dP = grid.legendre
    G = np.zeros(c.shape[:-2] + grid.shape, dtype=complex)
    n_phi = grid.n_phi
    st = np.sin(grid.theta)
    ct = np.cos(grid.theta)
    ls_all = np.arange(L + 1)
    for m in range(min(L, Lc) + 1):
        lmax = min(L, Lc)
        ls = ls_all[m : lmax + 1]
        Pm = P[m][: lmax + 1 - m]
        dPm = dP[m][: lmax + 1 - m]
        if kind in ("val", "dphi", "dpp"):
            table = Pm
        elif kind in ("dtheta", "dtp"):
            table = dPm
        elif kind == "dtt":
            table = -(ct / st) * dPm - (ls[:, None] * (ls[:, None] + 1) - m * m / st**2) * Pm
        else:
            raise ValueError(kind)
        for mm in ((m,) if m == 0 else (m, -m)):
            sign = 1.0 if mm >= 0 else (-1.0) ** m
            if kind in ("dphi", "dtp"):
                fac = 1j * mm
            elif kind == "dpp":
                fac = -float(mm * mm)
            else:
                fac = 1.0
            coef = c[..., m : lmax + 1, Lc + mm]
            G[..., :, mm % n_phi] += sign * fac * np.einsum("lt,...l->...t", table, coef)
    return np.fft.ifft(G, axis=-1) * n_phi


def synthesize(grid: SphereGrid, c: np.ndarray, real: bool | None = None) -> np.ndarray:
    """Evaluate a coefficient array on the grid nodes.

    Parameters
    ----------
    grid : SphereGrid
    c : ndarray, shape (..., Lc+1, 2Lc+1)
        Coefficients; ``Lc`` may differ from ``grid.L`` (excess degrees are
        dropped).
    real : bool, optional
        Return the real part.  By default the real part is returned when the
        coefficients satisfy the reality condition to round-off.
    """
    f = _synth(grid, np.asarray(c), "val")
    return _maybe_real(f, real)


def _maybe_real(f, real):
    if real is None:
        scale = max(np.max(np.abs(f)), 1.0) if f.size else 1.0
        real = np.max(np.abs(f.imag)) <= 1e-13 * scale if f.size else True
    return f.real.copy() if real else f


def sh_transform(grid: SphereGrid, data: np.ndarray, direction: str):
    """Forward (``"analyze"``) or inverse (``"synthesize"``) transform."""
    if direction == "analyze":
        return analyze(grid, data)
    if direction == "synthesize":
        return synthesize(grid, data)
    raise ConfigurationError(f"unknown transform direction {direction!r}")


def ylm(grid: SphereGrid, l: int, m: int, real: bool = False) -> np.ndarray:
    """Sample ``Y_lm`` (complex) or its real counterpart on the grid.

    The real version is ``Y_l0`` for ``m = 0``, ``sqrt(2) Re Y_lm`` for
    ``m > 0`` and ``sqrt(2) Im Y_l|m|`` for ``m < 0``.
    """
    c = np.zeros((l + 1, 2 * l + 1), dtype=complex)
    if not real:
        c[l, l + m] = 1.0
        return _synth(grid, c, "val")
    c[l, l + abs(m)] = 1.0
    y = _synth(grid, c, "val")
    if m == 0:
        return y.real
    return np.sqrt(2) * (y.real if m > 0 else y.imag)


def resample(f: np.ndarray, grid_from: SphereGrid, grid_to: SphereGrid) -> np.ndarray:
    """Spectral interpolation of a band-limited field onto another grid."""
    return synthesize(grid_to, analyze(grid_from, f), real=np.isrealobj(f))


def derivatives(grid: SphereGrid, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Coordinate derivatives ``(d/dtheta f, d/dphi f)`` of a scalar field."""
    c = analyze(grid, f)
    real = np.isrealobj(f)
    return (
        _maybe_real(_synth(grid, c, "dtheta"), real),
        _maybe_real(_synth(grid, c, "dphi"), real),
    )


def second_derivatives(grid: SphereGrid, f: np.ndarray):
    """Coordinate second derivatives ``(f_tt, f_tp, f_pp)``, exact for band-limited ``f``."""
    c = analyze(grid, f)
    real = np.isrealobj(f)
    return tuple(_maybe_real(_synth(grid, c, k), real) for k in ("dtt", "dtp", "dpp"))


def frame_gradient(grid: SphereGrid, f: np.ndarray) -> np.ndarray:
    """Round-frame derivatives ``(e_theta f, e_phi f)`` of scalar samples.

    Returns an array of shape ``(2,) + f.shape``.
    """
    c = analyze(grid, f)
    real = np.isrealobj(f)
    ft = _maybe_real(_synth(grid, c, "dtheta"), real)
    fp = _maybe_real(_synth(grid, c, "dphi"), real)
    return np.stack([ft, fp / grid.sin_t])


def _scales(grid: SphereGrid) -> np.ndarray:
    return np.stack([np.ones(grid.shape), grid.sin_t])


def to_frame(grid: SphereGrid, T: np.ndarray) -> np.ndarray:
    """Coordinate components to orthonormal round-frame components (rank 1 or 2)."""
    s = _scales(grid)
    T = np.asarray(T)
    rank = T.ndim - 2
    if rank == 1:
        return T / s
    if rank == 2:
        return T / (s[:, None] * s[None, :])
    raise DimensionError("to_frame expects rank 1 or 2")


def to_coord(grid: SphereGrid, T: np.ndarray) -> np.ndarray:
    """Orthonormal round-frame components to coordinate components (rank 1 or 2)."""
    s = _scales(grid)
    T = np.asarray(T)
    rank = T.ndim - 2
    if rank == 1:
        return T * s
    if rank == 2:
        return T * (s[:, None] * s[None, :])
    raise DimensionError("to_coord expects rank 1 or 2")


_LETTERS = "abcdefgh"
_CART = "ijklmnop"


def round_covariant_derivative(grid: SphereGrid, T: np.ndarray) -> np.ndarray:
    r"""Levi-Civita derivative of the unit round metric, frame components.

    Parameters
    ----------
    T : ndarray, shape (2,)*r + (n_theta, n_phi)
        Tensor in the orthonormal frame ``(e_theta, e_phi)``.

    Returns
    -------
    ndarray, shape (2,) + T.shape
        ``D[c, a1, ..., ar]`` is :math:`(\mathring\nabla_{e_c} T)_{a_1\dots a_r}`.

    Notes
    -----
    The tensor is lifted to Cartesian components, each of which is a smooth
    scalar, differentiated spectrally and projected back to the tangent
    frame.
    """
    T = np.asarray(T)
    rank = T.ndim - 2
    E = grid.frame[1:]  # (2, 3, nt, np)
    if rank == 0:
        return frame_gradient(grid, T)
    a = _LETTERS[:rank]
    ci = _CART[:rank]
    lift = ",".join(f"{a[k]}{ci[k]}tp" for k in range(rank))
    cart = np.einsum(f"{a}tp,{lift}->{ci}tp", T, *([E] * rank))
    dcart = frame_gradient(grid, cart)  # (2, 3,...,3, nt, np)
    proj = ",".join(f"{a[k]}{ci[k]}tp" for k in range(rank))
    return np.einsum(f"z{ci}tp,{proj}->z{a}tp", dcart, *([E] * rank))


class MetricFrameData(NamedTuple):
    G: np.ndarray  # frame components of the metric
    Ginv: np.ndarray
    det: np.ndarray  # det of frame components
    C: np.ndarray  # connection difference C[a, b, c] = C^a_bc


def _inv2(G):
    det = G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0]
    inv = np.empty_like(G)
    inv[0, 0] = G[1, 1] / det
    inv[1, 1] = G[0, 0] / det
    inv[0, 1] = -G[0, 1] / det
    inv[1, 0] = -G[1, 0] / det
    return inv, det


def check_metric(grid: SphereGrid, metric: np.ndarray) -> None:
    """Raise :class:`GeometryError` if the metric is not positive definite."""
    metric = np.asarray(metric)
    if metric.shape != (2, 2) + grid.shape:
        raise DimensionError(f"metric shape {metric.shape} does not match grid {grid.shape}")
    G = to_frame(grid, metric)
    tr = G[0, 0] + G[1, 1]
    det = G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0]
    disc = np.sqrt(np.maximum(tr**2 / 4 - det, 0.0))
    lam_min = tr / 2 - disc
    bad = ~np.isfinite(lam_min) | (lam_min <= 0)
    if np.any(bad):
        idx = np.unravel_index(np.argmin(np.where(np.isfinite(lam_min), lam_min, -np.inf)), lam_min.shape)
        raise GeometryError(
            f"metric not positive definite; worst node (theta={grid.theta[idx[0]]:.6f}, "
            f"phi={grid.phi[idx[1]]:.6f}) smallest eigenvalue {lam_min[idx]:.3e}",
            worst_node=tuple(int(i) for i in idx),
            worst_value=float(lam_min[idx]),
        )


def metric_frame_data(grid: SphereGrid, metric: np.ndarray) -> MetricFrameData:
    """Frame components, inverse, determinant and connection difference.

    The connection difference ``C`` relates the Levi-Civita connection of the
    metric to the round one, ``nabla = round_nabla + C``.
    """
    check_metric(grid, metric)
    G = to_frame(grid, metric)
    G = 0.5 * (G + np.swapaxes(G, 0, 1))
    Ginv, det = _inv2(G)
    DG = round_covariant_derivative(grid, G)  # DG[c, a, b] = D_c G_ab
    # lowered: C_dbc = 1/2 (D_b G_cd + D_c G_bd - D_d G_bc)
    low = 0.5 * (
        np.einsum("bcdtp->dbctp", DG)
        + np.einsum("cbdtp->dbctp", DG)
        - np.einsum("dbctp->dbctp", DG)
    )
    C = np.einsum("adtp,dbctp->abctp", Ginv, low)
    return MetricFrameData(G=G, Ginv=Ginv, det=det, C=C)


class CovariantDerivatives(NamedTuple):
    grad: np.ndarray
    hessian: np.ndarray
    laplacian: np.ndarray


def _round_hessian_frame(grid: SphereGrid, f: np.ndarray) -> np.ndarray:
    c = analyze(grid, f)
    real = np.isrealobj(f)
    ft, fp, ftt, ftp, fpp = (
        _maybe_real(_synth(grid, c, k), real) for k in ("dtheta", "dphi", "dtt", "dtp", "dpp")
    )
    st, ct = grid.sin_t, grid.cos_t
    H = np.empty((2, 2) + f.shape, dtype=ftt.dtype)
    H[0, 0] = ftt
    H[0, 1] = H[1, 0] = (ftp - ct / st * fp) / st
    H[1, 1] = (fpp + st * ct * ft) / st**2
    return H


def covariant_calculus(grid: SphereGrid, metric: np.ndarray, f: np.ndarray) -> CovariantDerivatives:
    """Gradient, Hessian and Laplacian of a scalar field for a 2-metric.

    Parameters
    ----------
    grid : SphereGrid
    metric : ndarray, shape (2, 2, n_theta, n_phi)
        Coordinate components of a positive-definite metric.
    f : ndarray, shape (n_theta, n_phi)

    Returns
    -------
    CovariantDerivatives
        ``grad`` (covector, coordinate components), ``hessian`` (symmetric,
        coordinate components) and ``laplacian`` (metric trace of the
        Hessian).

    Raises
    ------
    GeometryError
        If the metric is not positive definite; the worst node is reported.
    """
    f = _check_field(grid, f)
    md = metric_frame_data(grid, metric)
    if f.size and np.all(f == f.flat[0]):  # constants have exactly zero derivatives
        z = np.zeros(f.shape, dtype=f.dtype)
        return CovariantDerivatives(grad=np.stack([z, z]), hessian=np.stack([np.stack([z, z])] * 2), laplacian=z)
    df = frame_gradient(grid, f)
    H = _round_hessian_frame(grid, f) - np.einsum("cabtp,ctp->abtp", md.C, df)
    H = 0.5 * (H + np.swapaxes(H, 0, 1))
    lap = np.einsum("abtp,abtp->tp", md.Ginv, H)
    return CovariantDerivatives(grad=to_coord(grid, df), hessian=to_coord(grid, H), laplacian=lap)


def area_density(grid: SphereGrid, metric: np.ndarray) -> np.ndarray:
    """Area form of ``metric`` relative to the unit round area form."""
    G = to_frame(grid, metric)
    return np.sqrt(G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0])


def round_metric(grid: SphereGrid, radius: float = 1.0) -> np.ndarray:
    """Coordinate components of ``radius**2`` times the unit round metric."""
    g = np.zeros((2, 2) + grid.shape)
    g[0, 0] = radius**2
    g[1, 1] = radius**2 * grid.sin_t**2
    return g


def integrate(grid: SphereGrid, f: np.ndarray, area_form: np.ndarray | float = 1.0) -> float:
    """Quadrature ``sum_ij w_i (2 pi / n_phi) f * area_form``.

    ``area_form`` is the density relative to the unit round area form (for
    example :func:`area_density`).  Summation order is fixed.
    """
    f = _check_field(grid, f)
    if np.ndim(area_form) and np.shape(area_form) != grid.shape:
        raise DimensionError("area form does not match grid")
    a = np.broadcast_to(np.asarray(area_form, dtype=float), grid.shape)
    vals = (f * a) * grid.quad
    return vals.sum(axis=1).sum(axis=0)


_COMPONENT_LABELS = {1: ["theta", "phi"], 2: ["theta_theta", "theta_phi", "phi_theta", "phi_phi"]}


def write_field_csv(path, grid: SphereGrid, values: np.ndarray, name: str) -> tuple[Path, Path]:
    """Dump a field as CSV plus a JSON sidecar.

    Rows follow the node order (theta ascending, then phi ascending); tensor
    fields add a ``component`` column.  The sidecar stores ``L``, ``rank`` and
    ``name``.
    """
    path = Path(path)
    values = np.asarray(values)
    rank = values.ndim - 2
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        if rank == 0:
            w.writerow(["theta", "phi", "value"])
            for i, t in enumerate(grid.theta):
                for j, p in enumerate(grid.phi):
                    w.writerow([repr(float(t)), repr(float(p)), repr(float(values[i, j]))])
        else:
            labels = _COMPONENT_LABELS[rank]
            flat = values.reshape((-1,) + grid.shape)
            w.writerow(["theta", "phi", "value", "component"])
            for i, t in enumerate(grid.theta):
                for j, p in enumerate(grid.phi):
                    for k, lab in enumerate(labels):
                        w.writerow([repr(float(t)), repr(float(p)), repr(float(flat[k, i, j])), lab])
    side = path.with_suffix(".json")
    side.write_text(json.dumps({"L": grid.L, "rank": rank, "name": name}, indent=2, sort_keys=True))
    return path, side
