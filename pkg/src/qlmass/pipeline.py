"""End-to-end evaluation of catalog cases: embeddings, Jang solve, masses and admissibility.

This is the orchestration layer used by the command-line front end and by the
acceptance suite; each step is a plain call into the library modules.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import catalog
from .dirac import (
    boundary_dirac,
    flat_ball_solve,
    monogenic_spinor,
    spectrum_and_projections,
    verify_hypersurface_identity,
    verify_lichnerowicz,
    verify_spin_inequalities,
    BoundarySpinor,
)
from .embedding import embed_weyl, lift_and_frames, verify_mean1
from .errors import ConvergenceError, PreconditionError
from .jang import (
    HorizonObstruction,
    JangOptions,
    constraint_residuals,
    solve_jang,
    x_field_and_energy_report,
)
from .mass_functionals import (
    MassReport,
    admissibility_report,
    brown_york,
    generalized_mean_curvature,
    jang_frame_boost,
    liu_yau,
    time_symmetric_package,
    wang_yau_reduced,
)
from .sphere_spectral import integrate, make_grid
from .surface_geometry import build_bundle

__all__ = ["CaseResult", "evaluate_case", "verify_identities", "IDENTITY_THRESHOLDS"]


@dataclass(eq=False)
class CaseResult:
    """Masses and diagnostics of one catalog case."""

    name: str
    params: dict
    L: int
    n_r: int | None
    reports: dict = field(default_factory=dict)
    oracle: dict = field(default_factory=dict)
    admissibility: dict | None = None
    energy: dict | None = None
    jang: dict | None = None
    timings: dict = field(default_factory=dict)

    @property
    def admissible(self) -> bool | None:
        return None if self.admissibility is None else bool(self.admissibility["admissible"])

    def mass(self, kind: str) -> float | None:
        rep = self.reports.get(kind)
        return None if rep is None else float(rep.value)

    def to_dict(self) -> dict:
        return {
            "case": self.name,
            "params": dict(self.params),
            "L": self.L,
            "n_r": self.n_r,
            "masses": {k: rep.to_dict() for k, rep in sorted(self.reports.items())},
            "oracle": {k: float(v) for k, v in sorted(self.oracle.items()) if np.ndim(v) == 0},
            "admissibility": self.admissibility,
            "energy": self.energy,
            "jang": self.jang,
            "timings": dict(self.timings),
        }


def _scalar_oracle(name: str, p: dict, oracle: dict) -> dict:
    out = {k: float(v) for k, v in oracle.items() if np.ndim(v) == 0}
    if name == "flat":
        out.update(M_BY=0.0, M_LY=0.0, M_WY=0.0)
    elif name == "flat_with_P":
        if abs(p["lam"]) < 1:
            ode = catalog.flat_with_P_radial_oracle(p["lam"])
            out.update(M_BY=0.0, M_LY=float(1 - np.sqrt(1 - p["lam"] ** 2)), M_WY=float(ode["M_WY"]))
    elif name == "conformally_flat":
        o = catalog.conformally_flat_oracle(p["m"], p["d"])
        out.update(M_BY=float(o["M_BY"]), M_LY=float(o["M_LY"]), M_WY=float(o["M_WY"]))
    return out


def evaluate_case(
    name: str,
    params: dict | None = None,
    L: int = 16,
    n_r: int = 12,
    kinds=("by", "ly", "wy"),
    jang_opts: JangOptions | None = None,
    embed_tol: float = 1e-9,
    tau: np.ndarray | None = None,
) -> CaseResult:
    """Compute the requested masses for a catalog entry.

    Boundary-only entries (Schwarzschild) use the time-symmetric Jang package,
    valid because their ``tau`` and ``tr P`` vanish.  Ball entries solve
    Jang's equation with the catalog's time function; a Jang failure is
    recorded in the admissibility report rather than raised.  ``tau``
    replaces the catalog's time function for the Wang-Yau mass.

    Raises
    ------
    ConvergenceError
        If an isometric embedding fails.
    """
    p = catalog._params(name, params)
    entry = catalog.ENTRIES[name]
    grid = make_grid(L)
    res = CaseResult(name=name, params=p, L=L, n_r=None)
    t0 = time.perf_counter()
    ball = None
    if "boundary" in entry.kinds:
        bd, oracle = catalog.get_boundary_dataset(name, p, grid)
    else:
        oracle = {}
    if "ball" in entry.kinds:
        ball = catalog.get_ball_dataset(name, p, L=L, n_r=n_r)
        res.n_r = n_r
        if "boundary" not in entry.kinds:
            bd = catalog.boundary_data_from_ball(ball, catalog.ball_tau(name, p, grid))
    res.oracle = _scalar_oracle(name, p, oracle)
    res.timings["data"] = time.perf_counter() - t0

    kinds = tuple(k.lower() for k in kinds)
    if "by" in kinds or "ly" in kinds:
        t = time.perf_counter()
        b0 = build_bundle(grid, bd.sigma)
        e0 = embed_weyl(b0, tol=embed_tol)
        if "by" in kinds:
            res.reports["by"] = brown_york(e0.k0, bd.k_physical, bd.area_form, grid, K=b0.K)
        if "ly" in kinds:
            res.reports["ly"] = liu_yau(e0.k0, bd.H_norm, bd.area_form, grid, K=b0.K)
        res.timings["by_ly"] = time.perf_counter() - t

    if "wy" in kinds:
        t = time.perf_counter()
        tau = bd.tau_suggested if tau is None else np.asarray(tau, dtype=float)
        bundle = build_bundle(grid, bd.sigma, tau)
        if ball is None:
            if np.max(np.abs(tau)) > 0 or (bd.trP_sigma is not None and np.max(np.abs(bd.trP_sigma)) > 0):
                raise PreconditionError(f"{name}: boundary-only data need tau = 0 and tr P = 0")
            package = time_symmetric_package(grid, bd.sigma, bd.k_physical)
            jang_result = package
            h = package["h_e3prime"]
            res.energy = {"dominant_energy_ok": bool(entry.vacuum), "source": "vacuum entry"}
            res.jang = {"method": "time-symmetric package (f = 0)"}
        else:
            try:
                sol = solve_jang(ball, tau, jang_opts)
            except (HorizonObstruction, ConvergenceError) as exc:
                sol = exc
                res.jang = {"method": "solve_jang", "error": type(exc).__name__, "message": str(exc)}
                cr = constraint_residuals(ball)
                res.energy = {"dominant_energy_ok": cr["dominant_energy_ok"],
                              "min_dominant_energy": cr["min_dominant_energy"]}
            if not isinstance(sol, BaseException):
                package = sol.boundary
                jang_result = sol
                h = generalized_mean_curvature(bd, tau, jang_frame_boost(bd, package["phi"]))
                xr = x_field_and_energy_report(sol, ball)
                res.energy = {k: v for k, v in xr.items() if np.ndim(v) == 0}
                res.jang = {"method": "solve_jang", "residual": float(sol.residual),
                            "iterations": len(sol.history)}
            else:
                jang_result, h = sol, np.full(grid.shape, -np.inf)
        adm = admissibility_report(bundle, jang_result, h)
        res.admissibility = adm
        if not isinstance(jang_result, BaseException):
            emb = embed_weyl(bundle, tol=embed_tol)
            rep = wang_yau_reduced(package, emb, bd if ball is not None else None)
            rep.admissibility = adm
            res.reports["wy"] = rep
        res.timings["wy"] = time.perf_counter() - t
    res.timings["total"] = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------- identity suite

IDENTITY_THRESHOLDS = {
    "mean1": 1e-6,
    "mean2": 1e-6,
    "lichnerowicz": 1e-7,
    "hypersurface_dirac": 1e-8,
    "spin_inequalities": 1e-9,
    "chirality_balance": 1e-8,
    "gauss_bonnet": 1e-8,
    "constraints": 1e-9,
}

SUITES = ("all", "embedding", "dirac", "constraints")


def verify_identities(suite: str = "all", L: int = 16, seed: int = 0) -> dict:
    """Run the identity checks and compare each residual with its threshold.

    Returns
    -------
    dict
        ``checks`` maps a name to ``{residual, threshold, ok}`` plus details;
        ``ok`` is the conjunction.
    """
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES}")
    checks: dict[str, dict] = {}

    def record(name, residual, details=None):
        thr = IDENTITY_THRESHOLDS[name]
        checks[name] = {"residual": float(residual), "threshold": thr, "ok": bool(residual <= thr),
                        **(details or {})}

    grid = make_grid(L)
    if suite in ("all", "embedding"):
        bd, _ = catalog.get_boundary_dataset("minkowski_graph", {"a": 0.3}, grid)
        bundle = build_bundle(grid, bd.sigma, bd.tau_suggested)
        emb = embed_weyl(bundle)
        m1 = verify_mean1(lift_and_frames(emb, bd.tau_suggested), bundle)
        record("mean1", m1["residual"], {"case": "minkowski_graph(a=0.3)"})
        gb = max(abs(integrate(grid, b.K, b.mu_sigma) - 4 * np.pi) for b in (bundle,))
        gb_hat = abs(integrate(grid, bundle.K_hat_direct, bundle.mu_sigma_hat) - 4 * np.pi)
        record("gauss_bonnet", max(gb, gb_hat))
        case = evaluate_case("minkowski_boosted", {"v": 0.5}, L=min(L, 12), n_r=10, kinds=("wy",))
        wy = case.reports["wy"].residuals
        record("mean2", max(wy["mean2_package"], wy["mean2_triple"]), {"case": "minkowski_boosted(v=0.5)"})
    if suite in ("all", "dirac"):
        Ld = min(L, 8)
        g8 = make_grid(Ld)
        rng = np.random.default_rng(seed)
        n = Ld * (Ld + 1)
        psi = monogenic_spinor((rng.normal(size=n) + 1j * rng.normal(size=n)) / np.sqrt(n), Ld, g8)
        lich = verify_lichnerowicz(psi)
        record("lichnerowicz", lich["relative_residual"], {"lhs": lich["lhs"], "rhs": lich["rhs"]})
        hyp = verify_hypersurface_identity(psi)
        record("hypersurface_dirac", hyp["max_residual"])
        spec = spectrum_and_projections(boundary_dirac(0.0, g8, Ld))
        gaps = []
        for _ in range(5):
            alpha = BoundarySpinor(g8, rng.normal(size=(2,) + g8.shape) + 1j * rng.normal(size=(2,) + g8.shape))
            gaps.append(verify_spin_inequalities(flat_ball_solve(alpha, "MIT", spec), spec)["mit_gap"])
        record("spin_inequalities", max(0.0, -min(gaps)), {"min_mit_gap": min(gaps)})
        const = BoundarySpinor(g8, np.stack([np.ones(g8.shape), 1j * np.ones(g8.shape)]))
        par = verify_spin_inequalities(flat_ball_solve(const, "MIT", spec), spec)
        record("chirality_balance", abs(par["chirality_balance"]), {"equality_case": par["equality_case"]})
    if suite in ("all", "constraints"):
        worst = 0.0
        for name in [n for n, e in catalog.ENTRIES.items() if e.vacuum and "ball" in e.kinds]:
            cr = constraint_residuals(catalog.get_ball_dataset(name, None, L=L, n_r=18))
            worst = max(worst, cr["max_hamiltonian"], cr["max_momentum"])
        record("constraints", worst)
    return {"suite": suite, "L": L, "checks": checks, "ok": all(c["ok"] for c in checks.values())}
