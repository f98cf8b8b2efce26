"""Analytic test geometries with closed-form oracle values.

Boundary entries return :class:`WangYauBoundaryData`; ball entries return a
:class:`BallDataSet` on the unit coordinate ball.  Minkowski entries exist in
both forms so the Wang-Yau pipeline can solve Jang's equation for them.

Minkowski ball entries (coordinates ``y`` of the unit ball, radius ``r``):

* ``minkowski_round``: the slice ``t = 0``, ``g = r^2 delta``.
* ``minkowski_graph``: the tilted hyperplane ``t = a z``, so
  ``g = r^2 (delta - a^2 dy3 dy3)`` and ``tau = a r cos(theta)`` on the
  boundary; ``sigma_hat`` is exactly round.
* ``minkowski_boosted``: the hyperbolic cylinder
  ``(t, x, y, z) = (r (cosh(b y3) - 1)/b, r y1, r y2, r sinh(b y3)/b)``
  with rapidity ``b = artanh(v)``.  Its metric is flat, ``g = r^2 delta``,
  with constant ``P = b r dy3 dy3``; the boundary is a round sphere whose
  mean curvature vector is tilted by the boost.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import quad

from .errors import ConfigurationError
from .jang import BallDataSet, BallGrid, make_ball_grid
from .mass_functionals import WangYauBoundaryData
from .sphere_spectral import SphereGrid, derivatives, round_metric, write_field_csv

__all__ = [
    "CatalogEntry",
    "ENTRIES",
    "list_entries",
    "get_boundary_dataset",
    "get_ball_dataset",
    "boundary_data_from_ball",
    "dump_entry",
    "flat_with_P_radial_oracle",
]


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    kinds: tuple
    defaults: dict
    description: str
    vacuum: bool


ENTRIES = {
    e.name: e
    for e in [
        CatalogEntry("minkowski_round", ("boundary", "ball"), {"r": 1.0},
                     "round sphere of radius r in the t=0 slice of Minkowski space", True),
        CatalogEntry("minkowski_graph", ("boundary", "ball"), {"a": 0.3, "r": 1.0},
                     "round sphere lifted to the hyperplane t = a z; sigma_hat is round", True),
        CatalogEntry("minkowski_boosted", ("boundary", "ball"), {"v": 0.5, "r": 1.0},
                     "round sphere on a boosted hyperbolic-cylinder slice; positive Liu-Yau mass", True),
        CatalogEntry("schwarzschild_round", ("boundary",), {"M": 1.0, "r": 4.0},
                     "areal sphere of radius r in the t=const Schwarzschild slice", True),
        CatalogEntry("flat", ("ball",), {}, "flat ball, P = 0", True),
        CatalogEntry("flat_with_P", ("ball",), {"lam": 0.05},
                     "flat ball with P = lam g; boundary trapped for lam >= 1", False),
        CatalogEntry("conformally_flat", ("ball",), {"m": 0.5, "d": 1.0},
                     "g = psi^4 delta with psi = 1 + m/(2 sqrt(|y|^2 + d^2)), P = 0", False),
        CatalogEntry("bad_energy", ("ball",), {"beta": 0.5},
                     "flat ball with P = beta y3 g; violates the dominant energy condition", False),
    ]
}


def list_entries() -> list[dict]:
    """JSON-ready index of the catalog."""
    return [
        {"name": e.name, "kinds": list(e.kinds), "defaults": dict(e.defaults), "description": e.description,
         "vacuum": e.vacuum}
        for e in ENTRIES.values()
    ]


def _params(name: str, params: dict | None) -> dict:
    if name not in ENTRIES:
        raise ConfigurationError(f"unknown catalog entry {name!r}; known: {sorted(ENTRIES)}")
    out = dict(ENTRIES[name].defaults)
    for key, val in (params or {}).items():
        if key not in out:
            raise ConfigurationError(f"entry {name!r} has no parameter {key!r}")
        out[key] = float(val)
    return out


def _spheroid_mean_curvature(theta, r, c):
    q = r**2 * np.cos(theta) ** 2 + c**2 * np.sin(theta) ** 2
    return r * c / q**1.5 + c / (r * np.sqrt(q))


def boosted_liu_yau_oracle(v: float, r: float = 1.0) -> float:
    """Closed-form Liu-Yau mass of the boosted round sphere."""
    b = np.arctanh(v)
    val, _ = quad(lambda u: 2 - np.sqrt(4 - b**2 * (1 - u * u) ** 2), -1, 1, epsabs=1e-15, epsrel=1e-13, limit=200)
    return r * val / 4


def flat_with_P_radial_oracle(lam: float, rtol: float = 1e-13):
    """Radial reduction of Jang's equation for ``g = delta``, ``P = lam delta``, ``tau = 0``.

    With ``w = f'``,
    ``w' = (1+w^2)^{3/2} [lam (2 + 1/(1+w^2)) - 2 w / (r sqrt(1+w^2))]``,
    regular at the centre (``w ~ lam r``) and ``f(1) = 0``.

    Returns
    -------
    dict
        ``f`` and ``w`` callables of ``r``, and boundary values ``k_tilde``,
        ``accel_term``, ``momentum_term``, ``M_WY``.
    """
    from scipy.integrate import solve_ivp

    def rhs(r, y):
        w = y[1]
        q = 1 + w * w
        return [w, q**1.5 * (lam * (2 + 1 / q) - 2 * w / (r * np.sqrt(q)))]

    r0 = 1e-6
    # series start: w = lam r + O(r^3)
    sol = solve_ivp(rhs, [r0, 1.0], [lam * r0**2 / 2, lam * r0], method="DOP853", rtol=rtol, atol=1e-16,
                    dense_output=True)
    if not sol.success:
        raise ConfigurationError(f"radial Jang oracle failed for lam={lam}: {sol.message}")
    f1 = sol.sol(1.0)[0]
    w = sol.sol(1.0)[1]
    W = np.sqrt(1 + w * w)
    wp = rhs(1.0, [0.0, w])[1]
    return {
        "f": lambda r: sol.sol(r)[0] - f1,
        "w": lambda r: sol.sol(r)[1],
        "dw": lambda r: np.array([rhs(x, [0.0, sol.sol(x)[1]])[1] for x in np.atleast_1d(r)]),
        "w1": w,
        "k_tilde": 2 / W,
        "accel_term": w * wp / W**3,
        "momentum_term": lam * w / W**2,
        "M_WY": 1 - W + lam * w,
    }


def get_boundary_dataset(name: str, params: dict | None = None, grid: SphereGrid = None):
    """Boundary data of a catalog surface and its oracle values.

    Returns
    -------
    data : WangYauBoundaryData
    oracle : dict
        Closed-form quantities (``k``, ``H_norm`` fields and masses where known).

    Raises
    ------
    ConfigurationError
        Unknown entry, ball-only entry or invalid parameters.
    """
    p = _params(name, params)
    if "boundary" not in ENTRIES[name].kinds:
        raise ConfigurationError(f"{name!r} is a ball entry; use get_ball_dataset")
    st, ct = grid.sin_t, grid.cos_t
    zero = np.zeros(grid.shape)
    if name == "schwarzschild_round":
        M, r = p["M"], p["r"]
        if M < 0 or r <= 2 * M:
            raise ConfigurationError("schwarzschild_round requires r > 2M >= 0")
        k = (2 / r) * np.sqrt(1 - 2 * M / r) * np.ones(grid.shape)
        data = WangYauBoundaryData(grid, round_metric(grid, r), k.copy(), np.zeros((2,) + grid.shape), k.copy(),
                                   zero.copy(), zero.copy(), name)
        m = r * (1 - np.sqrt(1 - 2 * M / r))
        return data, {"k": k, "H_norm": k, "M_BY": m, "M_LY": m, "M_WY": m}
    if name == "minkowski_round":
        r = p["r"]
        _positive(r, "r")
        k = 2 / r * np.ones(grid.shape)
        data = WangYauBoundaryData(grid, round_metric(grid, r), k.copy(), np.zeros((2,) + grid.shape), k.copy(),
                                   zero.copy(), zero.copy(), name)
        return data, {"k": k, "H_norm": k, "M_BY": 0.0, "M_LY": 0.0, "M_WY": 0.0}
    if name == "minkowski_graph":
        a, r = p["a"], p["r"]
        _positive(r, "r")
        if not 0 <= abs(a) < 1:
            raise ConfigurationError("minkowski_graph requires |a| < 1 (spacelike hyperplane)")
        tau = a * r * ct
        sigma = round_metric(grid, r)
        sigma[0, 0] -= (a * r * st) ** 2
        k = _spheroid_mean_curvature(grid.theta2d, r, r * np.sqrt(1 - a * a))
        data = WangYauBoundaryData(grid, sigma, k.copy(), np.zeros((2,) + grid.shape), k.copy(), zero.copy(), tau, name)
        return data, {"k": k, "H_norm": k, "M_BY": 0.0, "M_LY": 0.0, "M_WY": 0.0}
    if name == "minkowski_boosted":
        v, r = p["v"], p["r"]
        _positive(r, "r")
        if not 0 <= v < 1:
            raise ConfigurationError("minkowski_boosted requires 0 <= v < 1")
        b = np.arctanh(v)
        k = 2 / r * np.ones(grid.shape)
        trP = b / r * st**2
        H = np.sqrt(k**2 - trP**2)
        tau = (r / b) * (np.cosh(b * ct) - 1) if b > 0 else zero.copy()
        # alpha_e3 = -P(., e3) and the mean-curvature frame sits at artanh(-trP/k)
        alpha_e3 = np.stack([b * st * ct, zero])
        psi = np.arctanh(-trP / k)
        dpsi = np.stack(derivatives(grid, psi))
        alpha_H = alpha_e3 - dpsi
        data = WangYauBoundaryData(grid, round_metric(grid, r), H, alpha_H, k, trP, tau, name)
        return data, {"k": k, "H_norm": H, "M_BY": 0.0, "M_LY": boosted_liu_yau_oracle(v, r), "M_WY": 0.0}
    raise ConfigurationError(f"no boundary generator for {name!r}")  # pragma: no cover


def _positive(x, label):
    if not x > 0:
        raise ConfigurationError(f"{label} must be positive")


def _const_tensor(bg: BallGrid, M: np.ndarray) -> np.ndarray:
    return np.asarray(M, dtype=float)[:, :, None, None, None] * np.ones(bg.shape)


def get_ball_dataset(name: str, params: dict | None = None, grid: BallGrid | None = None,
                     L: int = 16, n_r: int = 18) -> BallDataSet:
    """Initial data on the unit coordinate ball for a catalog entry."""
    p = _params(name, params)
    if "ball" not in ENTRIES[name].kinds:
        raise ConfigurationError(f"{name!r} is boundary-only (no regular centre)")
    bg = make_ball_grid(L, n_r) if grid is None else grid
    y = bg.points
    one = np.ones(bg.shape)
    I = np.eye(3)
    zero3 = np.zeros((3,) + bg.shape)
    if name == "flat":
        g, P, mu, J = _const_tensor(bg, I), _const_tensor(bg, 0 * I), 0 * one, zero3
    elif name == "minkowski_round":
        r = p["r"]
        _positive(r, "r")
        g, P, mu, J = _const_tensor(bg, r * r * I), _const_tensor(bg, 0 * I), 0 * one, zero3
    elif name == "minkowski_graph":
        a, r = p["a"], p["r"]
        _positive(r, "r")
        if not abs(a) < 1:
            raise ConfigurationError("minkowski_graph requires |a| < 1")
        g = _const_tensor(bg, r * r * (I - a * a * np.outer(I[2], I[2])))
        P, mu, J = _const_tensor(bg, 0 * I), 0 * one, zero3
    elif name == "minkowski_boosted":
        v, r = p["v"], p["r"]
        _positive(r, "r")
        if not 0 <= v < 1:
            raise ConfigurationError("minkowski_boosted requires 0 <= v < 1")
        b = np.arctanh(v)
        g = _const_tensor(bg, r * r * I)
        P = _const_tensor(bg, b * r * np.outer(I[2], I[2]))
        mu, J = 0 * one, zero3
    elif name == "flat_with_P":
        lam = p["lam"]
        g, P = _const_tensor(bg, I), _const_tensor(bg, lam * I)
        mu, J = 3 * lam**2 * one, zero3
    elif name == "conformally_flat":
        m, d = p["m"], p["d"]
        _positive(d, "d")
        rho2 = np.einsum("i...,i...->...", y, y)
        q = rho2 + d * d
        psi = 1 + m / (2 * np.sqrt(q))
        g = psi**4 * _const_tensor(bg, I)
        P = _const_tensor(bg, 0 * I)
        mu = 6 * m * d * d * psi**-5 / q**2.5
        J = zero3
    elif name == "bad_energy":
        beta = p["beta"]
        g = _const_tensor(bg, I)
        P = beta * y[2] * _const_tensor(bg, I)
        mu = 3 * beta**2 * y[2] ** 2
        J = np.zeros((3,) + bg.shape)
        J[2] = -2 * beta
    else:  # pragma: no cover
        raise ConfigurationError(f"no ball generator for {name!r}")
    return BallDataSet(bg, g, P, mu, J, name=name, params=p)


def ball_tau(name: str, params: dict | None, grid: SphereGrid) -> np.ndarray:
    """Time function on the boundary used by the catalog for a ball entry."""
    p = _params(name, params)
    if name == "minkowski_graph":
        return p["a"] * p["r"] * grid.cos_t
    if name == "minkowski_boosted":
        b = np.arctanh(p["v"])
        return (p["r"] / b) * (np.cosh(b * grid.cos_t) - 1) if b > 0 else np.zeros(grid.shape)
    return np.zeros(grid.shape)


def boundary_data_from_ball(data: BallDataSet, tau: np.ndarray | None = None) -> WangYauBoundaryData:
    """Boundary triple of the ball's boundary sphere computed from the ball fields.

    Where the mean curvature vector is not spacelike (``|tr P| >= k``, a
    trapped boundary) ``H_norm`` and ``alpha_H`` are NaN.
    """
    tr = data.boundary_trace()
    sg = data.grid.sphere
    k, trP = tr["k"], tr["trP_sigma"]
    with np.errstate(invalid="ignore", divide="ignore"):
        H = np.sqrt(k**2 - trP**2)
        psi = np.arctanh(-trP / k)
    alpha_H = tr["alpha_e3"] - np.stack(derivatives(sg, psi))
    return WangYauBoundaryData(sg, tr["sigma"], H, alpha_H, k, trP,
                               np.zeros(sg.shape) if tau is None else tau, data.name)


def conformally_flat_oracle(m: float, d: float) -> dict:
    """Closed-form boundary values of the conformally flat entry at the unit sphere."""
    q = 1 + d * d
    psi = 1 + m / (2 * np.sqrt(q))
    dpsi = -(m / 2) / q**1.5
    k = psi**-2 * (2 + 4 * dpsi / psi)
    radius = psi**2
    m_by = 0.5 * radius**2 * (2 / radius - k)
    return {"psi": psi, "k": k, "M_BY": m_by, "M_LY": m_by, "M_WY": m_by}


def dump_entry(name: str, params: dict | None, outdir, L: int = 16, n_r: int = 18) -> list[Path]:
    """Write the boundary fields of an entry as CSV files with JSON sidecars."""
    from .sphere_spectral import make_grid

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    grid = make_grid(L)
    if "boundary" in ENTRIES[name].kinds:
        data, oracle = get_boundary_dataset(name, params, grid)
        tau = data.tau_suggested
    else:
        ball = get_ball_dataset(name, params, L=L, n_r=n_r)
        data = boundary_data_from_ball(ball)
        tau = data.tau_suggested
        oracle = {}
    paths = []
    for label, field_ in (("sigma", data.sigma), ("H_norm", data.H_norm), ("alpha_H", data.alpha_H),
                          ("k", data.k_physical), ("tau", tau)):
        paths.append(write_field_csv(outdir / f"{name}_{label}.csv", grid, field_, label)[0])
    meta = {"name": name, "params": _params(name, params), "L": L,
            "oracle": {k: float(v) for k, v in oracle.items() if np.ndim(v) == 0}}
    meta_path = outdir / f"{name}.json"
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True))
    paths.append(meta_path)
    return paths
