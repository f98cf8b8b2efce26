r"""Intrinsic geometry of a surface metric and of its time-projected metric.

Given a metric :math:`\sigma` on the sphere and a time function
:math:`\tau`, the projected metric is
:math:`\hat\sigma = \sigma + d\tau\otimes d\tau`.  Its Gauss curvature has the
closed form

.. math::

    \hat K = \frac{1}{1+|\nabla\tau|^2}
             \Big(K + \frac{\det\nabla^2\tau}{1+|\nabla\tau|^2}\Big),

with gradient, Hessian and determinant taken with respect to
:math:`\sigma`.  The bundle stores this value together with a direct
curvature computation of :math:`\hat\sigma` for cross-checking.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import GeometryError
from .sphere_spectral import (
    SphereGrid,
    area_density,
    check_metric,
    covariant_calculus,
    metric_frame_data,
    round_covariant_derivative,
    to_frame,
    write_field_csv,
)

__all__ = [
    "SurfaceMetricBundle",
    "gauss_curvature",
    "build_bundle",
    "convexity_check",
    "dump_bundle",
    "DEFAULT_MARGIN",
]

DEFAULT_MARGIN = 1e-8


def gauss_curvature(grid: SphereGrid, metric: np.ndarray) -> np.ndarray:
    r"""Gauss curvature of a 2-metric from its Riemann tensor.

    The Levi-Civita connection is written as the round connection plus a
    tensor :math:`C`, so

    .. math::

        R^a{}_{bcd} = \mathring R^a{}_{bcd} + \mathring\nabla_c C^a_{db}
        - \mathring\nabla_d C^a_{cb} + C^a_{ce}C^e_{db} - C^a_{de}C^e_{cb},

    and :math:`K = R_{\theta\phi\theta\phi}/\det g` in the round frame.
    """
    md = metric_frame_data(grid, metric)
    C = md.C
    DC = round_covariant_derivative(grid, C)  # DC[e, a, b, c] = D_e C^a_bc
    # R^a_{1 0 1} with frame indices 0 = theta, 1 = phi
    R = np.zeros((2,) + grid.shape)
    R[0] += 1.0
    R += DC[0, :, 1, 1] - DC[1, :, 0, 1]
    R += np.einsum("aetp,etp->atp", C[:, 0, :], C[:, 1, 1])
    R -= np.einsum("aetp,etp->atp", C[:, 1, :], C[:, 0, 1])
    R0101 = np.einsum("atp,atp->tp", md.G[0], R)
    return R0101 / md.det


@dataclass(frozen=True, eq=False)
class SurfaceMetricBundle:
    """Metric data of a surface and its time projection.

    Attributes
    ----------
    grid : SphereGrid
    sigma, sigma_hat : ndarray, shape (2, 2, n_theta, n_phi)
        Coordinate components of the physical and projected metrics.
    tau : ndarray
        Time function.
    area_ratio : ndarray
        ``sqrt(1 + |grad tau|^2)``, equal to ``mu_sigma_hat / mu_sigma``.
    K, K_hat : ndarray
        Gauss curvature of ``sigma`` and of ``sigma_hat`` (projection formula).
    K_hat_direct : ndarray
        Gauss curvature of ``sigma_hat`` computed from the metric itself.
    grad_tau_sq, det_hess_tau : ndarray
        ``|grad tau|^2`` and ``det(Hess tau)`` relative to ``sigma``.
    """

    grid: SphereGrid
    sigma: np.ndarray
    tau: np.ndarray
    sigma_hat: np.ndarray
    area_ratio: np.ndarray
    K: np.ndarray
    K_hat: np.ndarray
    K_hat_direct: np.ndarray
    grad_tau_sq: np.ndarray
    det_hess_tau: np.ndarray

    @property
    def mu_sigma(self) -> np.ndarray:
        return area_density(self.grid, self.sigma)

    @property
    def mu_sigma_hat(self) -> np.ndarray:
        return area_density(self.grid, self.sigma_hat)


def build_bundle(grid: SphereGrid, sigma: np.ndarray, tau: np.ndarray | None = None) -> SurfaceMetricBundle:
    """Assemble the projected metric and its curvature data.

    Parameters
    ----------
    grid : SphereGrid
    sigma : ndarray, shape (2, 2, n_theta, n_phi)
        Physical metric (coordinate components).
    tau : ndarray, optional
        Time function; zero by default.

    Raises
    ------
    GeometryError
        If ``sigma`` or the projected metric fails positivity.
    """
    sigma = np.asarray(sigma, dtype=float)
    check_metric(grid, sigma)
    tau = np.zeros(grid.shape) if tau is None else np.asarray(tau, dtype=float)
    cd = covariant_calculus(grid, sigma, tau)
    dtau = cd.grad
    sigma_hat = sigma + dtau[:, None] * dtau[None, :]
    try:
        check_metric(grid, sigma_hat)
    except GeometryError as exc:  # cannot happen for real tau; fail hard
        raise GeometryError(f"projected metric lost positivity: {exc}") from exc
    md = metric_frame_data(grid, sigma)
    df = to_frame(grid, dtau)
    grad_sq = np.einsum("abtp,atp,btp->tp", md.Ginv, df, df)
    Hf = to_frame(grid, cd.hessian)
    det_h = (Hf[0, 0] * Hf[1, 1] - Hf[0, 1] * Hf[1, 0]) / md.det
    K = gauss_curvature(grid, sigma)
    one = 1.0 + grad_sq
    K_hat = (K + det_h / one) / one
    K_hat_direct = gauss_curvature(grid, sigma_hat)
    return SurfaceMetricBundle(
        grid=grid,
        sigma=sigma,
        tau=tau,
        sigma_hat=sigma_hat,
        area_ratio=np.sqrt(one),
        K=K,
        K_hat=K_hat,
        K_hat_direct=K_hat_direct,
        grad_tau_sq=grad_sq,
        det_hess_tau=det_h,
    )


def convexity_check(bundle: SurfaceMetricBundle, margin: float = DEFAULT_MARGIN) -> dict:
    """Convexity condition ``K + det(Hess tau)/(1+|grad tau|^2) > margin``.

    Returns
    -------
    dict
        ``min_value``, ``admissible_a`` and the location ``(theta, phi)`` and
        node index of the minimum.
    """
    val = bundle.K + bundle.det_hess_tau / (1.0 + bundle.grad_tau_sq)
    idx = np.unravel_index(np.argmin(val), val.shape)
    g = bundle.grid
    mn = float(val[idx])
    return {
        "min_value": mn,
        "admissible_a": bool(mn > margin),
        "margin": margin,
        "argmin_node": [int(idx[0]), int(idx[1])],
        "argmin_theta_phi": [float(g.theta[idx[0]]), float(g.phi[idx[1]])],
    }


def dump_bundle(bundle: SurfaceMetricBundle, outdir) -> Path:
    """Write each bundle field as CSV and a JSON summary."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    g = bundle.grid
    for name in ("sigma", "tau", "sigma_hat", "area_ratio", "K", "K_hat", "K_hat_direct"):
        write_field_csv(outdir / f"{name}.csv", g, getattr(bundle, name), name)
    conv = convexity_check(bundle)
    summary = {
        "L": g.L,
        "min_K": float(bundle.K.min()),
        "min_K_hat": float(bundle.K_hat.min()),
        "admissible_a": conv["admissible_a"],
        "convexity_min": conv["min_value"],
    }
    path = outdir / "summary.json"
    path.write_text(json.dumps(summary, indent=2, sort_keys=True))
    return path
