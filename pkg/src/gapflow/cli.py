"""Command line pipelines: gapflow <command> --config run.json --out DIR.

Every run validates its config against schemas/<command>.json, writes its
artifacts plus report.json into the output directory and exits with

    0  success
    2  malformed or schema-violating configuration
    3  numerical failure (diagnostic.json explains which check tripped)

Flags override the config file.  The report body holds no timestamps or
absolute paths, so a rerun with the same config and seed reproduces it byte
for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import BACKEND, default_threads, parallel_map

log = logging.getLogger("gapflow")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

COMMANDS = (
    "spectrum-scan",
    "gap-report",
    "dubrovin-evolve",
    "reconstruct",
    "nls-integrate",
    "nls-compare",
    "abel-linearize",
    "jl-check",
    "measure-check",
    "mp-certify",
    "craig-check",
)

DEFAULT_TOL = 1e-12


class ConfigError(ValueError):
    """Bad configuration; maps to exit status 2."""


class CheckFailed(RuntimeError):
    """A guaranteed inequality or cross-check failed; maps to exit status 3.

    Carries whatever the pipeline computed so the report can still be written.
    """

    def __init__(self, message: str, results=None, provenance=None, artifacts=None):
        super().__init__(message)
        self.results = results or {}
        self.provenance = provenance or {}
        self.artifacts = artifacts or {}


def _numeric_errors() -> tuple[type, ...]:
    from .abel import QuadratureError
    from .direct import NumericalError
    from .dubrovin import FlowError
    from .moser_poschel import SmallDivisorError
    from .nls import SimulationError
    from .reflectionless import PoleError

    return (QuadratureError, NumericalError, FlowError, SmallDivisorError, SimulationError, PoleError, CheckFailed,
            ArithmeticError, np.linalg.LinAlgError, ValueError, RuntimeError)


# ---------------------------------------------------------------------------
# config handling


def load_schema(command: str) -> dict:
    text = resources.files("gapflow").joinpath("schemas", f"{command}.json").read_text()
    return json.loads(text)


def validate_config(command: str, cfg: dict) -> None:
    import jsonschema

    try:
        jsonschema.validate(cfg, load_schema(command))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None


def _canonical(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False).encode()


def config_hash(cfg: dict) -> str:
    """sha256 over the config minus output location and thread count (neither changes numbers)."""
    core = {k: v for k, v in cfg.items() if k not in ("out", "threads")}
    return hashlib.sha256(_canonical(core)).hexdigest()


def resolve_config(command: str, path: str | None, overrides: dict) -> dict:
    cfg: dict = {}
    if path:
        try:
            with open(path) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
    if "command" in cfg and cfg["command"] != command:
        raise ConfigError(f"config is for {cfg['command']!r}, not {command!r}")
    cfg = dict(cfg)
    cfg.setdefault("params", {})
    for k, v in overrides.items():
        if v is not None:
            cfg[k] = v
    cfg["command"] = command
    validate_config(command, cfg)
    return cfg


# ---------------------------------------------------------------------------
# builders


def _clock(spec, default):
    spec = default if spec is None else spec
    if isinstance(spec, dict):
        return np.linspace(float(spec["start"]), float(spec["stop"]), int(spec["num"]))
    return np.asarray(spec, dtype=float)


def build_potential(spec: dict):
    from .direct import QPotential, golden_mean

    kind = spec["kind"]
    try:
        if kind == "zero":
            return QPotential.zero()
        if kind == "constant":
            return QPotential.constant(float(spec.get("c", 1.0)))
        if kind == "cosine":
            omega = spec.get("omega", [golden_mean()])
            return QPotential.cosine(float(spec.get("eps0", 0.05)), float(omega[0]), float(spec.get("width", 0.5)))
        return QPotential.from_json({"omega": spec["omega"], "fourier": spec.get("fourier", []),
                                     "width": spec.get("width", 0.0)})
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"potential: {exc}") from None


def build_gapset(spec: dict):
    from .spectral import GapSet, SpectralDataError

    try:
        return GapSet(tuple(tuple(ab) for ab in spec["gaps"]), int(spec.get("reference_index", 0)))
    except SpectralDataError as exc:
        raise ConfigError(f"gapset: {exc}") from None


def _y0(params: dict, g) -> np.ndarray:
    y0 = np.asarray(params["y0"], dtype=float)
    if y0.size != len(g):
        raise ConfigError(f"y0 has {y0.size} entries for {len(g)} gaps")
    return y0


def build_model(spec: dict, seed: int):
    from .moser_poschel import ModelError, ParabolicModel

    kw = {k: spec[k] for k in ("kappa", "tau", "R") if k in spec}
    omega = tuple(spec.get("omega", [1.0]))
    try:
        kind = spec["kind"]
        if kind == "identity":
            return ParabolicModel.identity(float(spec["zeta"]), omega, **kw)
        if kind == "hyperbolic":
            return ParabolicModel.hyperbolic(float(spec["zeta"]), float(spec.get("r", 0.5)), omega=omega, **kw)
        if kind == "random":
            rng = np.random.default_rng(seed)
            extra = {k: spec[k] for k in ("factors", "max_mode", "strength") if k in spec}
            return ParabolicModel.random(rng, float(spec["zeta"]), omega, **extra, **kw)
        obj = {"zeta": spec["zeta"], "omega": list(omega), "b11": spec.get("b11", []), "b12": spec.get("b12", []),
               "kappa": spec.get("kappa", 1.0), "tau": spec.get("tau", 0.0), "R": spec.get("R", 1.0)}
        return ParabolicModel.from_json(obj)
    except (ModelError, KeyError, TypeError, IndexError) as exc:
        raise ConfigError(f"model: {exc}") from None


# ---------------------------------------------------------------------------
# pipelines; each returns (results, provenance, artifacts {name: bytes})


def _csv(header: list[str], rows) -> bytes:
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(v if isinstance(v, str) else repr(float(v)) if not isinstance(v, (bool, np.bool_)) else str(int(v))
                              for v in r))
    return ("\n".join(lines) + "\n").encode()


def run_spectrum_scan(cfg: dict, report_gaps: bool = False):
    from .direct import gap_decay_fit, gap_distance_shape, ids_and_gaps

    p = cfg["params"]
    pot = build_potential(p["potential"])
    lam = np.linspace(float(p.get("lam_min", -2.0)), float(p.get("lam_max", 2.0)), int(p.get("points", 401)))
    scan = ids_and_gaps(pot, lam, L=float(p.get("L", 200.0)), kmax=int(p.get("kmax", 8)),
                        min_size=float(p.get("min_size", 0.0)), threads=cfg.get("threads"))
    gaps = [g.to_json() | {"distance_to_label": g.distance_to_label(pot.omega)} for g in scan.gaps]
    res = {"potential": pot.to_json(), "method": scan.method, "gaps": gaps, "points": int(lam.size)}
    prov = {"gaps": "direct.ids_and_gaps", "scan.csv": "direct.ids_and_gaps"}
    arts = {"scan.csv": _csv(["lam", "gamma", "rho", "in_gap", "label"], scan.rows())}
    if report_gaps:
        labelled = [g for g in scan.gaps if any(g.label) and not g.ambiguous]
        try:
            fit = gap_decay_fit(labelled)
            res["decay_fit"] = {"slope": fit.slope, "intercept": fit.intercept, "r": fit.r, "points": fit.points}
        except ValueError as exc:
            res["decay_fit"] = None
            res.setdefault("warnings", []).append(f"decay fit skipped: {exc}")
        tau = float(p.get("tau", pot.dioph[1] if pot.dioph else 1.0))
        res["distance_shape"] = gap_distance_shape(labelled, tau) | {"tau": tau}
        prov |= {"decay_fit": "direct.gap_decay_fit", "distance_shape": "direct.gap_distance_shape"}
    arts["gaps.json"] = _canonical(gaps)
    return res, prov, arts


def run_gap_report(cfg: dict):
    return run_spectrum_scan(cfg, report_gaps=True)


def run_dubrovin_evolve(cfg: dict):
    from .dubrovin import CALIBRATED, mu_of_y, t_trajectory, x_trajectory

    p = cfg["params"]
    g = build_gapset(p["gapset"])
    y0 = _y0(p, g)
    tol = cfg.get("tol", DEFAULT_TOL)
    xs = _clock(p.get("x"), {"start": 0.0, "stop": 1.0, "num": 11})
    ts = _clock(p.get("t"), [0.0])
    rows = []
    for t, yt in zip(ts, t_trajectory(y0, g, ts, CALIBRATED, tol)):
        ys = x_trajectory(yt, g, xs, tol)
        mus = mu_of_y(ys, g)
        for x, yy, mm in zip(xs, ys, mus):
            rows.append([t, x, *yy, *mm])
    head = ["t", "x"] + [f"y{j}" for j in range(len(g))] + [f"mu{j}" for j in range(len(g))]
    final = rows[-1][2:2 + len(g)] if rows else []
    res = {"gapset": g.to_json(), "samples": len(rows), "final_phases": [float(v) for v in final]}
    prov = {"trajectory.csv": "dubrovin.t_trajectory + dubrovin.x_trajectory", "final_phases": "dubrovin.x_trajectory"}
    return res, prov, {"trajectory.csv": _csv(head, rows)}


def run_reconstruct(cfg: dict):
    from .dubrovin import field_on_grid
    from .nls import FieldGrid

    p = cfg["params"]
    g = build_gapset(p["gapset"])
    y0 = _y0(p, g)
    tol = cfg.get("tol", DEFAULT_TOL)
    xs = _clock(p.get("x"), {"start": -5.0, "stop": 5.0, "num": 101})
    ts = _clock(p.get("t"), [0.0])
    u = np.array([field_on_grid(y0, g, xs, float(t), tol=tol) for t in ts])
    fg = FieldGrid(xs, ts, u)
    res = {"gapset": g.to_json(), "shape": list(u.shape), "sup_abs": float(np.max(np.abs(u))),
           "min_abs": float(np.min(np.abs(u)))}
    if len(g) == 1 and abs(sum(g.gaps[0])) <= 1e-12 * (g.gaps[0][1] - g.gaps[0][0]):
        # symmetric one-gap data: |phi| equals the half-width c identically
        c = 0.5 * (g.gaps[0][1] - g.gaps[0][0])
        res["constant_oracle_error"] = float(np.max(np.abs(np.abs(u) - c)))
    prov = {"field": "dubrovin.field_on_grid", "constant_oracle_error": "dubrovin.field_on_grid vs |phi| = c"}
    return res, prov, {"field.gfld": fg.to_bytes(), "field.csv": _field_csv(fg)}


def _field_csv(fg) -> bytes:
    rows = ([t, x, v.real, v.imag] for i, t in enumerate(fg.t) for x, v in zip(fg.x, fg.u[i]))
    return _csv(["t", "x", "re", "im"], rows)


def _initial_field(p: dict, box: float, n: int, tol: float):
    from .dubrovin import field_on_grid
    from .nls import periodic_grid, periodize

    ini = p["initial"]
    kind = ini["kind"]
    x = periodic_grid(box, n)
    if kind == "constant":
        return x, np.full(n, float(ini.get("c", 1.0)) * np.exp(1j * float(ini.get("beta", 0.0))), dtype=complex), None
    if kind == "plane_wave":
        k0 = float(ini.get("k", 2 * math.pi / box))
        if abs(round(k0 * box / (2 * math.pi)) - k0 * box / (2 * math.pi)) > 1e-9:
            raise ConfigError("plane_wave k must be a multiple of 2 pi / box")
        return x, float(ini.get("c", 1.0)) * np.exp(1j * k0 * x), None
    if "gapset" not in ini or "y0" not in ini:
        raise ConfigError("reconstruction initial data need gapset and y0")
    g = build_gapset(ini["gapset"])
    y0 = _y0(ini, g)
    x, u = periodize(lambda xs: field_on_grid(y0, g, xs, 0.0, tol=tol), box, n, float(ini.get("blend", 8.0)))
    return x, u, (g, y0)


def run_nls_integrate(cfg: dict):
    from .nls import energy, mass, split_step_evolve

    p = cfg["params"]
    box, n = float(p.get("box", 64.0)), int(p.get("points", 4096))
    x, u0, _ = _initial_field(p, box, n, cfg.get("tol", DEFAULT_TOL))
    T = float(p.get("T", 0.5))
    fg = split_step_evolve(u0, x, float(p.get("dt", 1e-3)), T, p.get("save_every"), int(p.get("order", 2)))
    dx = float(x[1] - x[0])
    m = [mass(u, dx) for u in fg.u]
    e = [energy(u, dx) for u in fg.u]
    res = {"frames": int(fg.t.size), "points": n, "box": box, "mass_drift": float(max(m) - min(m)),
           "energy_drift": float(max(e) - min(e)), "mass_drift_per_time": float((max(m) - min(m)) / max(T, 1e-300))}
    prov = {"field": "nls.split_step_evolve", "mass_drift": "nls.mass", "energy_drift": "nls.energy"}
    return res, prov, {"field.gfld": fg.to_bytes()}


def run_nls_compare(cfg: dict):
    from .dubrovin import field_on_grid
    from .nls import FieldGrid, compare_trajectories, split_step_evolve

    p = cfg["params"]
    tol = cfg.get("tol", DEFAULT_TOL)
    box, n = float(p.get("box", 64.0)), int(p.get("points", 4096))
    cfg_p = {"initial": {"kind": "reconstruction", "gapset": p["gapset"], "y0": p["y0"], "blend": p.get("blend", 8.0)}}
    x, u0, (g, y0) = _initial_field(cfg_p, box, n, tol)
    T = float(p.get("T", 0.5))
    frames = int(p.get("frames", 5))
    fg = split_step_evolve(u0, x, float(p.get("dt", 2e-3)), T, T / frames if T > 0 else None, int(p.get("order", 4)))
    lo, hi = p.get("window", [-5.0, 5.0])
    sim = fg.restrict(lo, hi)
    ref = FieldGrid(sim.x, sim.t, np.array([field_on_grid(y0, g, sim.x, float(t), tol=tol) for t in sim.t]))
    cmp_ = compare_trajectories(sim, ref)
    thr = float(p.get("threshold", 1e-4))
    res = {"sup_error": cmp_.sup_error, "l2_error": cmp_.l2_error, "sup_u": cmp_.sup_u, "sup_ux": cmp_.sup_ux,
           "threshold": thr, "window": [lo, hi], "times": sim.t.tolist(), "passed": cmp_.sup_error <= thr}
    prov = {"sup_error": "nls.compare_trajectories(nls.split_step_evolve, dubrovin.field_on_grid)"}
    arts = {"simulated.gfld": sim.to_bytes(), "reconstructed.gfld": ref.to_bytes()}
    if cmp_.sup_error > thr:
        raise CheckFailed(f"sup error {cmp_.sup_error:.3e} above threshold {thr:.3e}", res, prov, arts)
    return res, prov, arts


def run_abel_linearize(cfg: dict):
    from .abel import linearize_trajectories

    p = cfg["params"]
    g = build_gapset(p["gapset"])
    y0 = _y0(p, g)
    xs = _clock(p.get("x"), {"start": 0.0, "stop": 2.0, "num": 41})
    ts = _clock(p.get("t"), {"start": 0.0, "stop": 0.5, "num": 41})
    try:
        out = linearize_trajectories(g, y0, xs, ts, int(p.get("nodes", 96)), tol=cfg.get("tol", DEFAULT_TOL))
    except ValueError as exc:
        raise CheckFailed(str(exc)) from None
    thr = float(p.get("threshold", 1e-5))
    worst = max(out["x"]["max_residual"], out["t"]["max_residual"], out["x"]["slope_error"], out["t"]["slope_error"])
    out |= {"threshold": thr, "passed": worst <= thr}
    prov = {"frequencies": "abel.translation_frequencies", "x": "abel.linearization_fit", "t": "abel.linearization_fit"}
    if worst > thr:
        raise CheckFailed(f"linearization defect {worst:.3e} above {thr:.3e}", out, prov, {})
    return out, prov, {}


def run_jl_check(cfg: dict):
    from .subordinacy import jl_ratio_check

    p = cfg["params"]
    pot = build_potential(p["potential"])
    m = int(p.get("xi_count", 8))
    xis = list(np.exp(2j * np.pi * (np.arange(m) + 0.5) / m))
    Ls = p.get("L", [10.0, 100.0, 1000.0])
    reps = parallel_map(lambda lam: jl_ratio_check(pot, float(lam), xis, Ls), p["lam"], cfg.get("threads"))
    verdicts = [r["verdict"] for r in reps]
    res = {"potential": pot.to_json(), "checks": reps,
           "verdict": "fail" if "fail" in verdicts else ("pass" if "pass" in verdicts else "inconclusive")}
    prov = {"checks": "subordinacy.jl_ratio_check"}
    if res["verdict"] == "fail":
        raise CheckFailed("ratio outside [3 - sqrt 8, 3 + sqrt 8]", res, prov, {})
    return res, prov, {}


def run_measure_check(cfg: dict):
    from .subordinacy import measure_bound_check

    p = cfg["params"]
    pot = build_potential(p["potential"])
    eps = p.get("eps", [1e-1, 1e-2, 1e-3])
    reps = parallel_map(lambda lam: measure_bound_check(pot, float(lam), eps), p["lam"], cfg.get("threads"))
    res = {"potential": pot.to_json(), "checks": reps,
           "verdict": "fail" if any(r["verdict"] == "fail" for r in reps) else "pass"}
    prov = {"checks": "subordinacy.measure_bound_check"}
    if res["verdict"] == "fail":
        raise CheckFailed("Borel transform above the transfer-matrix bound", res, prov, {})
    return res, prov, {}


def run_mp_certify(cfg: dict):
    from .moser_poschel import (averaged_determinant, certificate_hypothesis, gap_upper_bound_certificate,
                                homological_solve, perturbation_from_conjugation)

    p = cfg["params"]
    model = build_model(p["model"], int(cfg.get("seed", 0)))
    nu = float(p["nu"])
    edge = p.get("edge", "left")
    N = int(p.get("N", 64))
    res = {"model": model.to_json(), "edge": edge}
    if "norm_B" in p:
        lhs, rhs, ok = certificate_hypothesis(float(p["norm_B"]), model.zeta, model.kappa, model.tau, model.R, nu)
        res["hypothesis_with_given_norm"] = {"lhs": lhs, "rhs": rhs, "holds": ok}
    cert = gap_upper_bound_certificate(model, nu, edge=edge)
    res["certificate"] = cert
    P = perturbation_from_conjugation(model)
    delta = float(p.get("delta", min(0.5 * model.delta_bound(), model.zeta ** (1 - nu))))
    det = averaged_determinant(model, delta if edge == "left" else -delta, P, edge)
    sol = homological_solve(model, P, delta, N, edge, enforce_smallness=abs(delta) < model.delta_bound())
    res["determinant"] = det.to_json()
    res["homological"] = {"delta": delta, "N": N, "residual": sol.residual, "relative_residual": sol.relative_residual,
                          "tail": sol.tail, "floor": sol.floor}
    prov = {"certificate": "moser_poschel.gap_upper_bound_certificate",
            "determinant": "moser_poschel.averaged_determinant",
            "homological": "moser_poschel.homological_solve"}
    scale = max(1.0, abs(det.d_direct)) * 1e-12
    if det.difference > scale or sol.relative_residual > 1e-10 or cert.get("verdict") == "inconsistent":
        raise CheckFailed("averaging step failed its internal checks", res, prov, {})
    return res, prov, {}


def run_craig_check(cfg: dict):
    from .spectral import craig_report, homogeneity_estimate, synthetic_family

    p = cfg["params"]
    if "family" in p:
        g = synthetic_family(p["family"]["kind"], int(p["family"]["n"]))
        src = {"family": p["family"]}
    else:
        g = build_gapset(p["gapset"])
        src = {"gapset": g.to_json()}
    rep = craig_report(g, float(p.get("delta", 0.5)), levels=int(p.get("levels", 4)))
    res = {"source": src, "craig": rep.to_json()}
    prov = {"craig": "spectral.craig_report"}
    if "window" in p or len(g) <= 50:
        lo, hi = p.get("window", [g.a.min() - 1.0, g.b.max() + 1.0] if len(g) else [-1.0, 1.0])
        res["homogeneity"] = {"window": [lo, hi], "estimate": homogeneity_estimate(g, (lo, hi))}
        prov["homogeneity"] = "spectral.homogeneity_estimate"
    return res, prov, {}


PIPELINES = {
    "spectrum-scan": run_spectrum_scan,
    "gap-report": run_gap_report,
    "dubrovin-evolve": run_dubrovin_evolve,
    "reconstruct": run_reconstruct,
    "nls-integrate": run_nls_integrate,
    "nls-compare": run_nls_compare,
    "abel-linearize": run_abel_linearize,
    "jl-check": run_jl_check,
    "measure-check": run_measure_check,
    "mp-certify": run_mp_certify,
    "craig-check": run_craig_check,
}


# ---------------------------------------------------------------------------
# reports


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def time_convention_verdict() -> dict:
    """Re-runs the one-gap calibration and states whether it agrees with the convention the flows use."""
    from .dubrovin import CALIBRATED, FlowError, calibrate_time_field
    from .spectral import GapSet

    try:
        found = calibrate_time_field(GapSet(((-1.0, 1.0),)))
    except FlowError as exc:
        return {"verdict": "calibration failed", "detail": str(exc)}
    same = (found.sign_s, found.kappa_t) == (CALIBRATED.sign_s, CALIBRATED.kappa_t)
    return {"verdict": "consistent" if same else "mismatch", "sign_s": found.sign_s, "kappa_t": found.kappa_t,
            "used": {"sign_s": CALIBRATED.sign_s, "kappa_t": CALIBRATED.kappa_t}}


def _dump(obj) -> bytes:
    return (json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n").encode()


def _write(out: Path, name: str, data: bytes) -> dict:
    (out / name).write_bytes(data)
    return {"name": name, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)}


def run_pipeline(cfg: dict, out: Path) -> int:
    """Execute one validated config and write its artifacts; returns the exit status."""
    command = cfg["command"]
    out.mkdir(parents=True, exist_ok=True)
    if "seed" in cfg:
        np.random.seed(int(cfg["seed"]) % 2**32)
    base = {
        "command": command,
        "config": {k: v for k, v in cfg.items() if k != "out"},
        "config_hash": config_hash(cfg),
        "time_convention": time_convention_verdict(),
    }
    prov_base = {"package": "gapflow", "version": __version__, "backend": BACKEND}
    try:
        results, prov, arts = PIPELINES[command](cfg)
    except CheckFailed as exc:
        written = [_write(out, k, v) for k, v in sorted(exc.artifacts.items())]
        report = base | {"status": "check failed", "results": exc.results, "artifacts": written,
                         "provenance": prov_base | {"numbers": exc.provenance}}
        _write(out, "report.json", _dump(report))
        _diagnose(out, base, exc)
        return EXIT_NUMERIC
    except ConfigError:
        raise
    except _numeric_errors() as exc:
        _diagnose(out, base, exc)
        return EXIT_NUMERIC
    written = [_write(out, k, v) for k, v in sorted(arts.items())]
    warnings = list(results.pop("warnings", [])) if isinstance(results, dict) else []
    if not written and command in ("reconstruct", "nls-integrate", "dubrovin-evolve", "spectrum-scan", "gap-report"):
        warnings.append("no artifacts produced")
    report = base | {"status": "ok", "results": results, "artifacts": written, "warnings": warnings,
                     "provenance": prov_base | {"numbers": prov}}
    _write(out, "report.json", _dump(report))
    for w in warnings:
        log.warning(w)
    return EXIT_OK


def _diagnose(out: Path, base: dict, exc: BaseException) -> None:
    diag = {"command": base["command"], "config_hash": base["config_hash"], "error": type(exc).__name__,
            "message": str(exc)}
    _write(out, "diagnostic.json", _dump(diag))
    log.error("%s: %s", diag["error"], diag["message"])


def emit_report(artifacts: list[str | Path]) -> dict:
    """Merge run reports (and acceptance matrices) into one consolidated report."""
    merged: dict = {"reports": {}, "acceptance": [], "warnings": [], "missing": [], "partial": False}
    if not artifacts:
        merged["warnings"].append("empty artifact list")
        merged["provenance"] = {"package": "gapflow", "version": __version__, "sources": []}
        return merged
    sources = []
    for path in artifacts:
        path = Path(path)
        if path.is_dir():
            path = path / "report.json"
        try:
            body = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            merged["missing"].append(str(path))
            merged["warnings"].append(f"unreadable artifact: {type(exc).__name__}")
            continue
        digest = hashlib.sha256(_canonical(body)).hexdigest()
        if "criteria" in body:
            merged["acceptance"].extend(body["criteria"])
            sources.append({"kind": "acceptance", "sha256": digest})
        else:
            key = body.get("command", "unknown")
            n = 1
            while key in merged["reports"]:
                n += 1
                key = f"{body.get('command', 'unknown')}#{n}"
            merged["reports"][key] = body
            sources.append({"kind": "run", "command": body.get("command"), "config_hash": body.get("config_hash"),
                            "sha256": digest})
    merged["partial"] = bool(merged["missing"])
    merged["acceptance"] = sorted(merged["acceptance"], key=lambda r: r.get("criterion", 0))
    merged["provenance"] = {"package": "gapflow", "version": __version__, "sources": sources}
    return merged


# ---------------------------------------------------------------------------
# entry point


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gapflow", description="Finite-gap NLS and Dirac spectral pipelines.")
    ap.add_argument("--version", action="version", version=f"gapflow {__version__} ({BACKEND} kernels)")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=f"run the {name} pipeline")
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--out", help="output directory (default: ./gapflow-out/<command>)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--tol", type=float)
        sp.add_argument("--threads", type=int, help="worker threads (default: GAPFLOW_THREADS or 1)")
    rp = sub.add_parser("report", help="merge report.json files into one consolidated report")
    rp.add_argument("artifacts", nargs="*")
    rp.add_argument("--out", help="write the merged report here instead of stdout")
    sub.add_parser("schema", help="print the schema of a command").add_argument("name", choices=COMMANDS)
    return ap


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("GAPFLOW_LOG", "WARNING").upper(), format="gapflow: %(levelname)s %(message)s")
    args = _parser().parse_args(argv)
    if args.command == "schema":
        sys.stdout.write(json.dumps(load_schema(args.name), indent=2, sort_keys=True) + "\n")
        return EXIT_OK
    if args.command == "report":
        merged = emit_report(args.artifacts)
        for w in merged["warnings"]:
            log.warning(w)
        data = _dump(merged)
        if args.out:
            Path(args.out).parent.mkdir(parents=True, exist_ok=True)
            Path(args.out).write_bytes(data)
        else:
            sys.stdout.write(data.decode())
        return EXIT_OK
    threads = args.threads if args.threads is not None else (default_threads() if os.environ.get("GAPFLOW_THREADS") else None)
    try:
        cfg = resolve_config(args.command, args.config, {"seed": args.seed, "tol": args.tol, "threads": threads})
    except ConfigError as exc:
        log.error("config: %s", exc)
        return EXIT_CONFIG
    out = Path(args.out or cfg.get("out") or Path("gapflow-out") / args.command)
    try:
        return run_pipeline(cfg, out)
    except ConfigError as exc:
        log.error("config: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
