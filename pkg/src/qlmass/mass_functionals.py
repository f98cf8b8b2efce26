r"""Brown-York, Liu-Yau and reduced Wang-Yau masses, and the admissibility report.

All masses are in geometric units with ``8 pi G = 1``:

* Brown-York: ``(1/8pi) int (k0 - k) mu_sigma``
* Liu-Yau: ``(1/8pi) int (k0 - |H|) mu_sigma``
* reduced Wang-Yau for a time function ``tau``:
  ``(1/8pi) [int k0_hat mu_sigma_hat - int (k_tilde - accel + momentum) mu_sigma_hat]``
  where ``k0_hat`` is the mean curvature of the Euclidean image of
  ``sigma_hat`` and the physical integrand comes from the Jang graph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryError, PreconditionError
from .sphere_spectral import SphereGrid, area_density, covariant_calculus, integrate, to_frame
from .surface_geometry import SurfaceMetricBundle, convexity_check

__all__ = [
    "WangYauBoundaryData",
    "MassReport",
    "generalized_mean_curvature",
    "jang_frame_boost",
    "brown_york",
    "liu_yau",
    "wang_yau_reduced",
    "time_symmetric_package",
    "spinor_weighted_mass",
    "admissibility_report",
]

EIGHT_PI = 8.0 * np.pi


@dataclass(frozen=True, eq=False)
class WangYauBoundaryData:
    """Quasi-local boundary data of a spacelike 2-sphere.

    Attributes
    ----------
    grid : SphereGrid
    sigma : ndarray, shape (2, 2, n_theta, n_phi)
        Induced metric (coordinate components).
    H_norm : ndarray
        Norm of the (spacelike) mean curvature vector.
    alpha_H : ndarray, shape (2, n_theta, n_phi)
        Normal-bundle connection 1-form in the mean-curvature frame
        (coordinate components).
    k_physical : ndarray
        Mean curvature of the surface in the initial-data slice.
    trP_sigma : ndarray or None
        Tangential trace of the slice's second fundamental form.
    tau_suggested : ndarray or None
        Time function used by the catalog for the Wang-Yau evaluation.
    provenance : str
        Catalog name or source file.
    """

    grid: SphereGrid
    sigma: np.ndarray
    H_norm: np.ndarray
    alpha_H: np.ndarray
    k_physical: np.ndarray
    trP_sigma: np.ndarray | None = None
    tau_suggested: np.ndarray | None = None
    provenance: str = ""

    def __post_init__(self):
        if np.min(self.H_norm) <= 0:
            idx = np.unravel_index(np.argmin(self.H_norm), self.H_norm.shape)
            raise GeometryError(
                "mean curvature vector is not spacelike", tuple(int(i) for i in idx), float(np.min(self.H_norm))
            )

    @property
    def area_form(self) -> np.ndarray:
        return area_density(self.grid, self.sigma)


@dataclass(eq=False)
class MassReport:
    """Value and provenance of a quasi-local mass evaluation.

    ``value = integrate(integrand, area_form) / (8 pi)``.
    """

    kind: str
    value: float
    integrand: np.ndarray
    area_form: np.ndarray
    grid: SphereGrid
    components: dict = field(default_factory=dict)
    admissibility: dict | None = None
    residuals: dict = field(default_factory=dict)

    @property
    def L(self) -> int:
        return self.grid.L

    def recompute(self) -> float:
        """Independent re-evaluation of the value from the stored integrand."""
        vals = self.integrand * self.area_form * self.grid.quad
        return float(np.sum(vals) / EIGHT_PI)

    def to_dict(self) -> dict:
        def clean(obj):
            if isinstance(obj, dict):
                return {str(k): clean(v) for k, v in obj.items() if not isinstance(v, np.ndarray)}
            if isinstance(obj, (list, tuple)):
                return [clean(v) for v in obj]
            if isinstance(obj, (np.floating, np.integer, np.bool_)):
                return obj.item()
            return obj

        return {
            "kind": self.kind,
            "value": float(self.value),
            "L": self.L,
            "components": clean(self.components),
            "admissibility": clean(self.admissibility) if self.admissibility is not None else None,
            "residuals": clean(self.residuals),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _gradient_vector(grid, sigma, tau):
    cd = covariant_calculus(grid, sigma, tau)
    sinv = np.linalg.inv(np.moveaxis(sigma, (0, 1), (-2, -1)))
    vec = np.einsum("tpab,btp->atp", sinv, cd.grad)
    return cd.grad, vec


def generalized_mean_curvature(
    data: WangYauBoundaryData, tau: np.ndarray, boost: np.ndarray | float | None = None
) -> np.ndarray:
    r"""Generalized mean curvature for a normal frame boosted from the mean-curvature frame.

    With ``e3`` obtained from the mean-curvature frame by a boost of angle
    ``beta``,

    .. math::

        h = \sqrt{1+|\nabla\tau|^2}\,|H|\cosh\beta - \alpha_H(\nabla\tau)
            + \langle\nabla\tau, \nabla\beta\rangle .

    Parameters
    ----------
    boost : ndarray or float, optional
        Boost angle ``beta``; zero selects the mean-curvature frame.
    """
    grid = data.grid
    tau = np.asarray(tau, dtype=float)
    beta = np.zeros(grid.shape) if boost is None else np.broadcast_to(np.asarray(boost, dtype=float), grid.shape)
    if not np.all(np.isfinite(beta)):
        raise GeometryError("boost angle must be finite (frame must stay spacelike and unit)")
    dtau, grad = _gradient_vector(grid, data.sigma, tau)
    grad_sq = np.einsum("atp,atp->tp", dtau, grad)
    dbeta = covariant_calculus(grid, data.sigma, np.array(beta)).grad
    return (
        np.sqrt(1.0 + grad_sq) * data.H_norm * np.cosh(beta)
        - np.einsum("atp,atp->tp", data.alpha_H, grad)
        + np.einsum("atp,atp->tp", dbeta, grad)
    )


def jang_frame_boost(data: WangYauBoundaryData, phi: np.ndarray) -> np.ndarray:
    """Boost angle of the Jang frame relative to the mean-curvature frame.

    ``phi`` is the Jang boost relative to the slice frame; the mean-curvature
    frame sits at ``artanh(-trP_sigma / k)`` relative to the slice frame.
    """
    if data.trP_sigma is None:
        raise PreconditionError("boundary data carry no slice frame (trP_sigma missing)")
    ratio = -data.trP_sigma / data.k_physical
    if np.max(np.abs(ratio)) >= 1:
        raise GeometryError("slice mean curvature does not dominate tr P (trapped surface)")
    return phi - np.arctanh(ratio)


def _gate_gauss(K, name):
    if K is not None and np.min(K) <= 0:
        raise PreconditionError(f"{name} requires positive Gauss curvature (min K = {np.min(K):.3e})")


def brown_york(k0, k, area, grid: SphereGrid, K=None) -> MassReport:
    """Brown-York mass ``(1/8pi) int (k0 - k) mu``.

    Parameters
    ----------
    k0 : ndarray
        Mean curvature of the Euclidean isometric image.
    k : ndarray
        Mean curvature in the physical slice.
    area : ndarray
        Area density of ``sigma``.
    K : ndarray, optional
        Gauss curvature of ``sigma``; when given it must be positive.
    """
    _gate_gauss(K, "Brown-York mass")
    integrand = np.asarray(k0) - np.asarray(k)
    ref = integrate(grid, k0, area)
    phys = integrate(grid, k, area)
    return MassReport(
        kind="brown_york", value=(ref - phys) / EIGHT_PI, integrand=integrand, area_form=np.asarray(area),
        grid=grid, components={"reference_term": ref / EIGHT_PI, "physical_term": phys / EIGHT_PI},
    )


def liu_yau(k0, H_norm, area, grid: SphereGrid, K=None) -> MassReport:
    """Liu-Yau mass ``(1/8pi) int (k0 - |H|) mu``."""
    _gate_gauss(K, "Liu-Yau mass")
    rep = brown_york(k0, H_norm, area, grid)
    rep.kind = "liu_yau"
    return rep


def time_symmetric_package(grid: SphereGrid, sigma: np.ndarray, k: np.ndarray) -> dict:
    """Jang boundary package for ``P = 0`` and ``tau = 0``, where ``f`` vanishes identically."""
    zero = np.zeros(grid.shape)
    return {
        "k_tilde": np.array(k, dtype=float),
        "accel_term": zero,
        "momentum_term": zero.copy(),
        "integrand": np.array(k, dtype=float),
        "f3": zero.copy(),
        "phi": zero.copy(),
        "sigma": sigma,
        "sigma_hat": sigma,
        "tau": zero.copy(),
        "grad_tau_sq": zero.copy(),
        "k": np.array(k, dtype=float),
        "trP_sigma": zero.copy(),
        "h_e3prime": np.array(k, dtype=float),
    }


def wang_yau_reduced(
    jang_boundary: dict, emb, data: WangYauBoundaryData | None = None, isometry_tol: float = 1e-8
) -> MassReport:
    """Reduced Wang-Yau mass from a Jang boundary package and an embedding of ``sigma_hat``.

    The physical term is also evaluated in generalized-mean-curvature form,
    ``int h(e3') mu_sigma``, from the package itself and, when ``data`` is
    given, from the boundary triple with the Jang-frame boost.  Differences
    are stored in ``residuals``.

    Raises
    ------
    GeometryError
        If the embedding is not isometric to the package's ``sigma_hat``.
    """
    if jang_boundary is None:
        raise PreconditionError("missing Jang solution")
    grid = emb.grid
    sigma_hat = jang_boundary["sigma_hat"]
    mismatch = float(np.abs(to_frame(grid, emb.induced_metric - sigma_hat)).max())
    if mismatch > isometry_tol:
        raise GeometryError(f"embedding does not match sigma_hat (max defect {mismatch:.3e})")
    mu_hat = area_density(grid, sigma_hat)
    ref = integrate(grid, emb.k0, mu_hat)
    phys = integrate(grid, jang_boundary["integrand"], mu_hat)
    residuals = {"isometry": mismatch}
    mu = area_density(grid, jang_boundary["sigma"])
    if "h_e3prime" in jang_boundary:
        alt = integrate(grid, jang_boundary["h_e3prime"], mu)
        residuals["mean2_package"] = abs(alt - phys)
    if data is not None and data.trP_sigma is not None:
        beta = jang_frame_boost(data, jang_boundary["phi"])
        h = generalized_mean_curvature(data, jang_boundary["tau"], beta)
        residuals["mean2_triple"] = abs(integrate(grid, h, mu) - phys)
        residuals["mean2_triple_pointwise"] = float(np.abs(h - jang_boundary["h_e3prime"]).max()) if "h_e3prime" in jang_boundary else None
    integrand = emb.k0 - jang_boundary["integrand"]
    return MassReport(
        kind="wang_yau_reduced", value=(ref - phys) / EIGHT_PI, integrand=integrand, area_form=mu_hat,
        grid=grid, components={"reference_term": ref / EIGHT_PI, "physical_term": phys / EIGHT_PI},
        residuals=residuals,
    )


def spinor_weighted_mass(integrand, weight_sq, area, grid: SphereGrid) -> MassReport:
    """``(1/8pi) int integrand * |Psi|^2 mu`` for a non-negative weight."""
    w = np.broadcast_to(np.asarray(weight_sq, dtype=float), grid.shape)
    if np.min(w) < 0:
        raise PreconditionError("spinor weight |Psi|^2 must be non-negative")
    weighted = np.asarray(integrand) * w
    value = integrate(grid, weighted, area) / EIGHT_PI
    return MassReport(kind="spinor_weighted", value=value, integrand=weighted, area_form=np.asarray(area), grid=grid)


def admissibility_report(bundle: SurfaceMetricBundle, jang_result, h_field, margin: float = 1e-8) -> dict:
    """Conditions (a) convexity, (b) Jang solvability, (c) positive generalized mean curvature.

    Parameters
    ----------
    bundle : SurfaceMetricBundle
    jang_result : JangSolution, dict, exception or None
        A solution (accepted when its independent residual is at most
        ``1e-8``), a boundary package of a trivially solved case, or the
        failure raised by the solver.
    h_field : ndarray
        Generalized mean curvature in the Jang frame.
    """
    conv = convexity_check(bundle, margin)
    residual = None
    if isinstance(jang_result, BaseException) or jang_result is None:
        cond_b = False
        reason = type(jang_result).__name__ if jang_result is not None else "no solution"
    elif isinstance(jang_result, dict):
        cond_b, reason = True, "trivial boundary package"
    else:
        residual = float(jang_result.residual)
        cond_b = residual <= 1e-8
        reason = "solved" if cond_b else "residual above 1e-8"
    g = bundle.grid
    h = np.asarray(h_field)
    idx = np.unravel_index(np.argmin(h), h.shape)
    min_h = float(h[idx])
    cond_c = min_h > 0
    return {
        "cond_a": conv["admissible_a"],
        "cond_a_min": conv["min_value"],
        "cond_a_location": conv["argmin_theta_phi"],
        "cond_b": bool(cond_b),
        "cond_b_reason": reason,
        "cond_b_residual": residual,
        "cond_c": bool(cond_c),
        "cond_c_min": min_h,
        "cond_c_location": [float(g.theta[idx[0]]), float(g.phi[idx[1]])],
        "admissible": bool(conv["admissible_a"] and cond_b and cond_c),
    }
