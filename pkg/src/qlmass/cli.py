"""Command-line front end.

Subcommands::

    qlmass mass {by,ly,wy,all} --case NAME [--M 1 --r 4 ...] [--L 16] [--n-r 12]
                               [--tau-coeff l m value ...]
    qlmass embed --case NAME [--with-tau]
    qlmass jang --case NAME [--n-r 12]
    qlmass dirac spectrum [--u 0] [--u-coeff l m value ...]
    qlmass dirac solve [--condition MIT|APS] [--spinor constant|random|harmonic]
    qlmass dirac verify
    qlmass catalog list
    qlmass catalog dump NAME
    qlmass verify identities [--suite all]

Settings are resolved as defaults < command-line flags < ``--config`` file
(JSON, validated against :data:`CONFIG_SCHEMA`; unknown keys are rejected).
A config key ``taus`` (a list of coefficient lists ``[[l, m, value], ...]``)
evaluates the Wang-Yau mass once per time function; ``--tau-coeff`` supplies
one.  Without either, the catalog's own time function is used.
The output directory defaults to ``$QLMASS_OUTPUT_DIR`` or ``./qlmass_out``.

Exit codes: 0 success, 1 other failure (including a failed identity check),
2 configuration or schema error, 3 convergence failure, 4 admissibility
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import jsonschema
import numpy as np

from . import catalog
from .errors import AdmissibilityError, ConfigurationError, ConvergenceError, PreconditionError, QLMassError

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_SCHEMA = 2
EXIT_CONVERGENCE = 3
EXIT_ADMISSIBILITY = 4

OUTPUT_ENV = "QLMASS_OUTPUT_DIR"

_POS_NUM = {"type": "number", "exclusiveMinimum": 0}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "RunConfig",
    "type": "object",
    "additionalProperties": False,
    "$defs": {
        "coeffs": {
            "type": "array",
            "items": {"type": "array", "prefixItems": [{"type": "integer", "minimum": 0}, {"type": "integer"},
                                                       {"type": "number"}], "minItems": 3, "maxItems": 3},
        },
    },
    "properties": {
        "case": {"type": "string", "enum": sorted(catalog.ENTRIES)},
        "cases": {"type": "array", "items": {"type": "string", "enum": sorted(catalog.ENTRIES)}, "minItems": 1},
        "params": {"type": "object", "additionalProperties": {"type": "number"}},
        "L": {"type": "integer", "minimum": 4, "maximum": 256},
        "n_r": {"type": "integer", "minimum": 3, "maximum": 96},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"embed": _POS_NUM, "jang": _POS_NUM},
        },
        "output_dir": {"type": "string", "minLength": 1},
        "plots": {"type": "boolean"},
        "with_tau": {"type": "boolean"},
        "u": {"type": "number"},
        "u_coeffs": {"$ref": "#/$defs/coeffs"},
        "taus": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/coeffs"}},
        "condition": {"type": "string", "enum": ["MIT", "APS"]},
        "spinor": {"type": "string", "enum": ["constant", "random", "harmonic"]},
        "seed": {"type": "integer", "minimum": 0},
        "suite": {"type": "string", "enum": ["all", "embedding", "dirac", "constraints"]},
    },
}

DEFAULTS = {
    "L": 16,
    "n_r": 12,
    "tolerances": {"embed": 1e-9, "jang": 1e-10},
    "plots": False,
    "with_tau": False,
    "u": 0.0,
    "condition": "MIT",
    "spinor": "random",
    "seed": 0,
    "suite": "all",
}

_PARAM_FLAGS = ("M", "r", "a", "v", "lam", "m", "d", "beta")


@dataclass
class RunConfig:
    """Resolved settings of one invocation."""

    command: tuple
    settings: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.settings[key]

    def get(self, key, default=None):
        return self.settings.get(key, default)

    @property
    def output_dir(self) -> Path:
        return Path(self.settings["output_dir"])


# ---------------------------------------------------------------- parsing


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (overrides flags)")
    common.add_argument("--output-dir", dest="output_dir", help=f"output directory (default ${OUTPUT_ENV})")
    common.add_argument("--L", type=int, help="band limit")
    common.add_argument("--n-r", dest="n_r", type=int, help="radial nodes of the ball grid")
    common.add_argument("--plots", action="store_true", default=None, help="emit SVG plots")

    case = argparse.ArgumentParser(add_help=False)
    case.add_argument("--case", help="catalog entry")
    for name in _PARAM_FLAGS:
        case.add_argument(f"--{name}", type=float, help=f"case parameter {name}")
    case.add_argument("--param", action="append", default=[], metavar="KEY=VALUE", help="case parameter")
    case.add_argument("--embed-tol", dest="embed_tol", type=float)
    case.add_argument("--jang-tol", dest="jang_tol", type=float)

    p = argparse.ArgumentParser(prog="qlmass", description="Quasi-local mass toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    mass = sub.add_parser("mass", parents=[common, case], help="Brown-York, Liu-Yau or reduced Wang-Yau mass")
    mass.add_argument("kind", choices=["by", "ly", "wy", "all"])
    mass.add_argument("--cases", nargs="+", help="several catalog entries (kind 'all' writes a batch CSV)")
    mass.add_argument("--tau-coeff", dest="tau_coeffs", nargs=3, action="append", metavar=("l", "m", "value"),
                      help="real harmonic coefficient of a user time function (repeatable)")

    emb = sub.add_parser("embed", parents=[common, case], help="isometric embedding of a catalog surface")
    emb.add_argument("--with-tau", dest="with_tau", action="store_true", default=None,
                     help="embed the projected metric of the suggested time function")

    sub.add_parser("jang", parents=[common, case], help="solve Jang's equation on a ball entry")

    dirac = sub.add_parser("dirac", help="boundary Dirac operator and flat-ball spinors")
    dsub = dirac.add_subparsers(dest="action", required=True)
    spec = dsub.add_parser("spectrum", parents=[common])
    spec.add_argument("--u", type=float, help="constant conformal factor")
    spec.add_argument("--u-coeff", dest="u_coeffs", nargs=3, action="append", metavar=("l", "m", "value"),
                      help="add value * Y_lm (real harmonic) to u")
    solve = dsub.add_parser("solve", parents=[common])
    solve.add_argument("--condition", type=str.upper, choices=["MIT", "APS"])
    solve.add_argument("--spinor", choices=["constant", "random", "harmonic"])
    solve.add_argument("--seed", type=int)
    ver = dsub.add_parser("verify", parents=[common])
    ver.add_argument("--seed", type=int)

    cat = sub.add_parser("catalog", help="list or dump catalog entries")
    csub = cat.add_subparsers(dest="action", required=True)
    csub.add_parser("list", parents=[common])
    dump = csub.add_parser("dump", parents=[common])
    dump.add_argument("name")
    for name in _PARAM_FLAGS:
        dump.add_argument(f"--{name}", type=float)
    dump.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")

    verify = sub.add_parser("verify", help="identity checks")
    vsub = verify.add_subparsers(dest="action", required=True)
    ident = vsub.add_parser("identities", parents=[common])
    ident.add_argument("--suite", choices=["all", "embedding", "dirac", "constraints"])
    ident.add_argument("--seed", type=int)
    return p


def _flag_settings(ns: argparse.Namespace) -> dict:
    out: dict = {}
    for key in ("output_dir", "L", "n_r", "plots", "with_tau", "u", "condition", "spinor", "seed", "suite", "case",
                "cases"):
        val = getattr(ns, key, None)
        if val is not None:
            out[key] = val
    if getattr(ns, "name", None) is not None:
        out["case"] = ns.name
    for key, flag in (("u_coeffs", "--u-coeff"), ("tau_coeffs", "--tau-coeff")):
        if getattr(ns, key, None):
            try:
                coeffs = [[int(l), int(m), float(v)] for l, m, v in getattr(ns, key)]
            except ValueError as exc:
                raise ConfigurationError(f"bad {flag}: {exc}") from exc
            if key == "u_coeffs":
                out["u_coeffs"] = coeffs
            else:
                out["taus"] = [coeffs]
    params = {}
    for name in _PARAM_FLAGS:
        val = getattr(ns, name, None)
        if val is not None:
            params[name] = val
    for item in getattr(ns, "param", []) or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigurationError(f"--param expects KEY=VALUE, got {item!r}")
        try:
            params[key.strip()] = float(val)
        except ValueError as exc:
            raise ConfigurationError(f"--param {key}: {exc}") from exc
    if params:
        out["params"] = params
    tol = {}
    if getattr(ns, "embed_tol", None) is not None:
        tol["embed"] = ns.embed_tol
    if getattr(ns, "jang_tol", None) is not None:
        tol["jang"] = ns.jang_tol
    if tol:
        out["tolerances"] = tol
    return out


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = {**out[key], **val}
        else:
            out[key] = val
    return out


def load_config(path) -> dict:
    """Read and validate a JSON configuration file."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    validate_config(data)
    return data


def validate_config(data: dict) -> None:
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigurationError(f"config schema violation at {where}: {exc.message}") from exc


def resolve(ns: argparse.Namespace) -> RunConfig:
    """Apply the precedence defaults < flags < config file and validate the result."""
    settings = _merge(DEFAULTS, _flag_settings(ns))
    if getattr(ns, "config", None):
        settings = _merge(settings, load_config(ns.config))
    settings.setdefault("output_dir", os.environ.get(OUTPUT_ENV) or "qlmass_out")
    validate_config(settings)
    command = tuple(x for x in (ns.command, getattr(ns, "kind", None), getattr(ns, "action", None)) if x)
    return RunConfig(command=command, settings=settings)


# ---------------------------------------------------------------- output helpers


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items() if not isinstance(v, np.ndarray)}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def _emit(cfg: RunConfig, stem: str, payload: dict) -> Path:
    """Write a JSON report (sorted keys, trailing timestamp field) and echo it."""
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    body = _clean(payload)
    body["command"] = " ".join(cfg.command)
    body["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    path = out / f"{stem}.json"
    text = json.dumps(body, indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8")
    print(text)
    return path


def _plot_field(cfg: RunConfig, stem: str, grid, values, title: str):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 3))
    im = ax.pcolormesh(grid.phi, grid.theta, np.asarray(values), shading="nearest")
    ax.set_xlabel("phi")
    ax.set_ylabel("theta")
    ax.invert_yaxis()
    ax.set_title(title)
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    fig.savefig(cfg.output_dir / f"{stem}.svg", format="svg", metadata={"Date": None})
    plt.close(fig)


def _plot_lines(cfg: RunConfig, stem: str, series: dict, title: str, logy: bool = True):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3))
    for label, ys in series.items():
        ys = np.asarray(ys, dtype=float)
        ax.plot(np.arange(ys.size), np.abs(ys) if logy else ys, marker="o", label=label)
    if logy:
        ax.set_yscale("log")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(cfg.output_dir / f"{stem}.svg", format="svg", metadata={"Date": None})
    plt.close(fig)


def _case_of(cfg: RunConfig) -> str:
    name = cfg.get("case")
    if not name:
        raise ConfigurationError("a catalog case is required (--case or config 'case')")
    return name


# ---------------------------------------------------------------- commands


def _cmd_mass(cfg: RunConfig) -> int:
    from .pipeline import evaluate_case

    kind = cfg.command[1]
    names = list(cfg.get("cases") or [_case_of(cfg)])
    kinds = ("by", "ly", "wy") if kind == "all" else (kind,)
    tol = cfg["tolerances"]
    from .jang import JangOptions

    opts = JangOptions(tol=tol["jang"])
    taus = cfg.get("taus")
    if taus and "wy" not in kinds:
        raise ConfigurationError("time functions apply to the Wang-Yau mass only")
    rows, status = [], EXIT_OK
    for name in names:
        params = cfg.get("params") if len(names) == 1 else None
        variants = [(None, None)]
        if taus:
            from .sphere_spectral import make_grid

            grid = make_grid(cfg["L"])
            variants = [(i, _harmonic_field(grid, c, 0.0, "tau")) for i, c in enumerate(taus)]
        for index, tau in variants:
            res = evaluate_case(name, params, L=cfg["L"], n_r=cfg["n_r"], kinds=kinds, jang_opts=opts,
                                embed_tol=tol["embed"], tau=tau)
            payload = res.to_dict()
            payload.pop("timings", None)
            if kind != "all":
                rep = res.reports.get(kind)
                payload["value"] = None if rep is None else float(rep.value)
                payload["kind"] = kind
            stem = f"mass_{kind}_{name}"
            if index is not None:
                payload["tau_coeffs"] = taus[index]
                stem += f"_tau{index}"
            _emit(cfg, stem, payload)
            if cfg["plots"]:
                for k, rep in res.reports.items():
                    _plot_field(cfg, f"{stem}_{k}_integrand", rep.grid, rep.integrand, f"{name}: {k} integrand")
            label = name if index is None else f"{name}#tau{index}"
            rows.append([label, cfg["L"], res.mass("by"), res.mass("ly"), res.mass("wy"), res.admissible])
            if "wy" in kinds and not res.admissible:
                status = EXIT_ADMISSIBILITY
    if kind == "all":
        path = cfg.output_dir / "batch.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["case", "L", "M_BY", "M_LY", "M_WY", "admissible"])
            for row in rows:
                w.writerow([row[0], row[1]] + ["" if v is None else repr(float(v)) for v in row[2:5]] + [row[5]])
    return status


def _cmd_embed(cfg: RunConfig) -> int:
    from .embedding import dump_embedding, embed_weyl, lift_and_frames, verify_mean1
    from .sphere_spectral import make_grid
    from .surface_geometry import build_bundle, convexity_check

    name = _case_of(cfg)
    grid = make_grid(cfg["L"])
    if "boundary" in catalog.ENTRIES[name].kinds:
        bd, _ = catalog.get_boundary_dataset(name, cfg.get("params"), grid)
    else:
        ball = catalog.get_ball_dataset(name, cfg.get("params"), L=cfg["L"], n_r=cfg["n_r"])
        bd = catalog.boundary_data_from_ball(ball, catalog.ball_tau(name, cfg.get("params"), grid))
    tau = bd.tau_suggested if cfg["with_tau"] else np.zeros(grid.shape)
    bundle = build_bundle(grid, bd.sigma, tau)
    conv = convexity_check(bundle)
    if not conv["admissible_a"]:
        _emit(cfg, f"embed_{name}", {"case": name, "convexity": conv, "error": "projected metric not convex"})
        return EXIT_ADMISSIBILITY
    emb = embed_weyl(bundle, tol=cfg["tolerances"]["embed"])
    sub = cfg.output_dir / f"embed_{name}"
    dump_embedding(emb, sub)
    payload = {
        "case": name,
        "params": catalog._params(name, cfg.get("params")),
        "L": cfg["L"],
        "with_tau": cfg["with_tau"],
        "max_defect": emb.max_defect,
        "iterations": len(emb.history),
        "k0_min": float(emb.k0.min()),
        "k0_max": float(emb.k0.max()),
        "convexity": conv,
        "mean1": verify_mean1(lift_and_frames(emb, tau), bundle),
    }
    _emit(cfg, f"embed_{name}", payload)
    if cfg["plots"]:
        _plot_field(cfg, f"embed_{name}_k0", grid, emb.k0, f"{name}: k0")
        _plot_lines(cfg, f"embed_{name}_history", {"defect": [h["defect_norm"] for h in emb.history]},
                    "Gauss-Newton defect")
    return EXIT_OK


def _cmd_jang(cfg: RunConfig) -> int:
    from .jang import HorizonObstruction, JangOptions, dump_solution, solve_jang, x_field_and_energy_report
    from .sphere_spectral import make_grid

    name = _case_of(cfg)
    params = cfg.get("params")
    data = catalog.get_ball_dataset(name, params, L=cfg["L"], n_r=cfg["n_r"])
    tau = catalog.ball_tau(name, params, make_grid(cfg["L"]))
    try:
        sol = solve_jang(data, tau, JangOptions(tol=cfg["tolerances"]["jang"]))
    except HorizonObstruction as exc:
        _emit(cfg, f"jang_{name}", {
            "case": name, "error": "HorizonObstruction", "message": str(exc), "stage": exc.stage,
            "max_gradient": exc.max_gradient, "locus": exc.locus, "trapped_margin": exc.trapped_margin,
            "history": exc.history,
        })
        return EXIT_CONVERGENCE
    dump_solution(sol, cfg.output_dir / f"jang_{name}")
    xr = x_field_and_energy_report(sol, data)
    payload = {
        "case": name,
        "params": catalog._params(name, params),
        "L": cfg["L"],
        "n_r": cfg["n_r"],
        "residual": sol.residual,
        "history": sol.history,
        "max_abs_f": float(np.abs(sol.f).max()),
        "x_field": {k: v for k, v in xr.items() if np.ndim(v) == 0},
    }
    _emit(cfg, f"jang_{name}", payload)
    if cfg["plots"]:
        _plot_lines(cfg, f"jang_{name}_history", {"residual": [h.get("residual", np.nan) for h in sol.history]},
                    "Newton residual")
    return EXIT_OK


def _harmonic_field(grid, coeffs, base=0.0, label="u"):
    from .sphere_spectral import ylm

    out = np.full(grid.shape, float(base))
    for l, m, val in coeffs:
        if abs(m) > l:
            raise ConfigurationError(f"{label} coefficient with |m| > l: ({l}, {m})")
        if l > grid.L:
            raise ConfigurationError(f"{label} coefficient degree {l} exceeds L = {grid.L}")
        out = out + val * ylm(grid, l, m, real=True)
    return out


def _conformal_factor(cfg: RunConfig, grid):
    return _harmonic_field(grid, cfg.get("u_coeffs") or [], cfg["u"], "u")


def _test_spinor(cfg: RunConfig, grid, L):
    from .dirac import BoundarySpinor, spinor_harmonics, spinor_labels

    rng = np.random.default_rng(cfg["seed"])
    kind = cfg["spinor"]
    if kind == "constant":
        psi = np.stack([np.ones(grid.shape), 0.5j * np.ones(grid.shape)])
    elif kind == "harmonic":
        # a degree-2 harmonic of positive type
        idx = next(i for i, lab in enumerate(spinor_labels(L)) if lab[1] == 2 and lab[3] > 0)
        psi = spinor_harmonics(grid, L)[idx]
    else:
        psi = rng.normal(size=(2,) + grid.shape) + 1j * rng.normal(size=(2,) + grid.shape)
    return BoundarySpinor(grid, psi, 0.0, L)


def _cmd_dirac(cfg: RunConfig) -> int:
    from .dirac import (
        boundary_dirac,
        flat_ball_solve,
        monogenic_spinor,
        spectrum_and_projections,
        verify_hypersurface_identity,
        verify_lichnerowicz,
        verify_spin_inequalities,
        write_spectrum_csv,
    )
    from .sphere_spectral import make_grid

    action = cfg.command[1]
    L = cfg["L"]
    grid = make_grid(L)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    if action == "spectrum":
        op = boundary_dirac(_conformal_factor(cfg, grid), grid, L)
        spec = spectrum_and_projections(op)
        write_spectrum_csv(spec, out / "dirac_spectrum.csv")
        payload = {
            "L": L,
            "u": cfg["u"],
            "u_coeffs": cfg.get("u_coeffs") or [],
            "dimension": op.dim,
            "symmetry_residual": spec.symmetry_residual(),
            "orthonormality_residual": spec.orthonormality_residual(),
            "self_adjointness_residual": op.self_adjointness_residual(),
            "clusters": [[lam, mult] for lam, mult in spec.clusters() if abs(lam) <= 6 * np.exp(-cfg["u"])],
        }
        _emit(cfg, "dirac_spectrum", payload)
        if cfg["plots"]:
            _plot_lines(cfg, "dirac_spectrum", {"lambda": spec.eigenvalues}, "boundary Dirac spectrum", logy=False)
        return EXIT_OK
    spec = spectrum_and_projections(boundary_dirac(0.0, grid, L))
    if action == "solve":
        alpha = _test_spinor(cfg, grid, L)
        sol = flat_ball_solve(alpha, cfg["condition"], spec)
        payload = {
            "L": L,
            "condition": sol.condition,
            "spinor": cfg["spinor"],
            "seed": cfg["seed"],
            "condition_number": sol.condition_number,
            "boundary_residual": sol.boundary_residual,
            "coefficient_norm": float(np.linalg.norm(sol.coeffs)),
            "hypersurface": verify_hypersurface_identity(sol),
            "lichnerowicz": verify_lichnerowicz(sol),
            "spin_inequalities": verify_spin_inequalities(sol, spec),
        }
        _emit(cfg, f"dirac_solve_{sol.condition}", payload)
        return EXIT_OK
    # verify
    rng = np.random.default_rng(cfg["seed"])
    n = L * (L + 1)
    psi = monogenic_spinor((rng.normal(size=n) + 1j * rng.normal(size=n)) / np.sqrt(n), L, grid)
    payload = {
        "L": L,
        "seed": cfg["seed"],
        "hypersurface": verify_hypersurface_identity(psi),
        "lichnerowicz": verify_lichnerowicz(psi),
        "spin_inequalities": verify_spin_inequalities(psi, spec),
    }
    _emit(cfg, "dirac_verify", payload)
    ok = (payload["hypersurface"]["max_residual"] <= 1e-8 and payload["lichnerowicz"]["relative_residual"] <= 1e-7
          and payload["spin_inequalities"]["mit_gap"] >= -1e-9)
    return EXIT_OK if ok else EXIT_FAILURE


def _cmd_catalog(cfg: RunConfig) -> int:
    if cfg.command[1] == "list":
        _emit(cfg, "catalog", {"entries": catalog.list_entries()})
        return EXIT_OK
    name = _case_of(cfg)
    paths = catalog.dump_entry(name, cfg.get("params"), cfg.output_dir / f"catalog_{name}", L=cfg["L"],
                               n_r=cfg["n_r"])
    _emit(cfg, f"catalog_{name}", {"case": name, "files": sorted(p.name for p in paths)})
    return EXIT_OK


def _cmd_verify(cfg: RunConfig) -> int:
    from .pipeline import verify_identities

    report = verify_identities(cfg["suite"], cfg["L"], cfg["seed"])
    _emit(cfg, f"verify_{cfg['suite']}", report)
    return EXIT_OK if report["ok"] else EXIT_FAILURE


_COMMANDS = {
    "mass": _cmd_mass,
    "embed": _cmd_embed,
    "jang": _cmd_jang,
    "dirac": _cmd_dirac,
    "catalog": _cmd_catalog,
    "verify": _cmd_verify,
}


def run(config: RunConfig) -> int:
    """Execute a resolved configuration and return the exit status."""
    try:
        return _COMMANDS[config.command[0]](config)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except ConvergenceError as exc:
        _emit(config, "failure", {"error": type(exc).__name__, "message": str(exc),
                                  "history": getattr(exc, "history", [])})
        return EXIT_CONVERGENCE
    except (AdmissibilityError, PreconditionError) as exc:
        _emit(config, "failure", {"error": type(exc).__name__, "message": str(exc),
                                  "report": getattr(exc, "report", None)})
        return EXIT_ADMISSIBILITY
    except QLMassError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    ns = parser.parse_args(argv)
    try:
        cfg = resolve(ns)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
