"""Command-line entry point.

Every subcommand reads an optional JSON config (layered over an optional
preset), writes CSV/JSON artifacts to ``--out`` and exits with 0 on success,
2 when it ran but the verdict is negative, 1 on error.
"""
from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from . import classical, evans, evolution, profile as profile_mod, singular, spectral
from .errors import MTEvansError, TrivialOnlyError
from .model import BoundaryCondition, ModelParams, endstate_from_c, endstate_from_total_density, physicality_margin

log = logging.getLogger("mtevans")

COMMANDS = ("classical", "endstate", "spectral-report", "dispersion", "profile",
            "evans", "evolve", "singular", "pipeline")

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 1, 2

CONFIG_KEYS = {
    "command", "params", "bc", "c_plus", "M", "tol", "n_intervals", "contour", "grid",
    "initial", "snapshots", "compare_profile", "case", "c_inf", "ds", "x_max", "n_x",
    "xi", "dmn", "t", "p_plus_0", "evolution_tol",
}

PRESETS = {
    "fig3": {
        "params": dict(d=0.1, D=1.0, omega=1.0, nu_minus=1.0, f_cat=1.0, u_plus=1.0, k=1.0),
        "bc": dict(kind="dirichlet", p_plus_0=0.2, p_minus_0=0.2, c_0=0.2),
        "c_plus": 0.0,
        "dmn": dict(v_plus=1.0, v_minus=1.0, f_cat=1.0, f_res=1.0),
        "initial": dict(kind="step", inner=[0.2, 0.2, 0.2], width=3.0, outer=[0.0, 0.0, 0.0]),
        "compare_profile": True,
    },
    # u_plus and k have no literature value; the config must supply them
    "typical": {
        "params": dict(d=1e-3, D=0.5, omega=0.15, nu_minus=0.05, f_cat=0.0005),
        "c_plus": 0.0,
    },
}


class ConfigError(ValueError):
    pass


class StageError(Exception):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"[{stage}] {type(exc).__name__}: {exc}")
        self.stage = stage
        self.cause = exc


@dataclass
class RunConfig:
    command: str
    raw: dict
    output_dir: Path
    seed: int = 0
    threads: int = 1
    params: Optional[ModelParams] = None
    bc: Optional[BoundaryCondition] = None

    def get(self, key, default=None):
        return self.raw.get(key, default)

    def resolved(self) -> dict:
        out = copy.deepcopy(self.raw)
        out.update(command=self.command, seed=self.seed, threads=self.threads)
        return out


# --------------------------------------------------------------------------
# config


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(command: str, config_path: Optional[str], preset: Optional[str], out: str,
                seed: int = 0, threads: int = 1) -> RunConfig:
    raw: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        raw = copy.deepcopy(PRESETS[preset])
    if config_path is not None:
        path = Path(config_path)
        if not path.is_file():
            raise ConfigError(f"config file {config_path} does not exist")
        try:
            user = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {config_path} is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
        raw = _merge(raw, user)
    unknown = set(raw) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if raw.get("command", command) != command:
        raise ConfigError(f"config is for command {raw['command']!r}, not {command!r}")
    raw.pop("command", None)
    if threads < 1:
        raise ConfigError("--threads must be at least 1")
    cfg = RunConfig(command, raw, Path(out), seed, threads)
    try:
        if "params" in raw:
            missing = {"d", "D", "omega", "nu_minus", "f_cat", "u_plus", "k"} - set(raw["params"])
            if missing:
                raise ConfigError(f"params block is missing {sorted(missing)}")
            cfg.params = ModelParams.from_dict(raw["params"])
        if "bc" in raw:
            cfg.bc = BoundaryCondition.from_dict(raw["bc"])
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid params/bc block: {exc}") from exc
    return cfg


def _need(cfg: RunConfig, *what):
    for w in what:
        if getattr(cfg, w, None) is None and w not in cfg.raw:
            raise ConfigError(f"command {cfg.command!r} needs a {w!r} block (use --config or --preset)")


# --------------------------------------------------------------------------
# output


def _jsonable(obj: Any):
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
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _jsonable(float(obj.real)), "im": _jsonable(float(obj.imag))}
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if np.isfinite(f) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path: Path, payload: dict, cfg: RunConfig):
    body = dict(payload)
    body["config"] = cfg.resolved()
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(body), indent=2, sort_keys=True) + "\n")


def write_csv(path: Path, header: list[str], columns):
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, data, delimiter=",", header=",".join(header), comments="", fmt="%.17g")


# --------------------------------------------------------------------------
# stages


def _endstate(cfg: RunConfig):
    return endstate_from_c(cfg.params, float(cfg.get("c_plus", 0.0)))


def _profile(cfg: RunConfig, endstate=None):
    _need(cfg, "params", "bc")
    es = endstate if endstate is not None else _endstate(cfg)
    kw = {}
    for key in ("M", "tol", "n_intervals"):
        if key in cfg.raw:
            kw[key] = cfg.raw[key]
    return profile_mod.solve_profile(cfg.params, cfg.bc, es, **kw)


def cmd_classical(cfg: RunConfig) -> int:
    _need(cfg, "dmn")
    try:
        dmn = classical.DmnParams(**{k: float(v) for k, v in cfg.raw["dmn"].items()})
    except TypeError as exc:
        raise ConfigError(f"invalid dmn block: {exc}") from exc
    report = classical.classical_report(dmn)
    if "t" in cfg.raw:
        t = float(cfg.raw["t"])
        report["t"] = t
        report["transition_matrix"] = classical.transition_matrix(dmn, t)
        report["mean_velocity"] = classical.mean_velocity(dmn, float(cfg.get("p_plus_0", 1.0)), t)
    write_json(cfg.output_dir / "classical.json", report, cfg)
    return EXIT_OK


def cmd_endstate(cfg: RunConfig) -> int:
    _need(cfg, "params")
    es = _endstate(cfg)
    write_json(cfg.output_dir / "endstate.json",
               {"endstate": es.to_dict(), "total_density": es.total_density,
                "physicality_margin": physicality_margin(cfg.params, es.c_plus)}, cfg)
    return EXIT_OK


def spectral_report(params: ModelParams, es) -> dict:
    q = spectral.quintic_q(params, es)
    zr = spectral.zero_root_check(params, es)
    imag = spectral.imaginary_root_check(params, es)
    gd = spectral.check_gooddisp(params, es)
    hf = spectral.constant_high_frequency_bound(params, es)
    return {
        "endstate": es.to_dict(),
        "q_coefficients_descending": q.coeffs,
        "q0": q.q0,
        "zero_root_ok": zr.ok,
        "stability_index": spectral.stability_index(params, es),
        "imaginary_root": {
            "no_common_root": imag.no_common_root,
            "common_root_at": imag.common_root_at,
            "q1": imag.q1, "q2": imag.q2,
            "degenerate": imag.degenerate,
            "resultant": imag.resultant,
        },
        "gooddisp": {"holds": gd.holds, "violated_at": gd.violated_at,
                     "max_real_part": gd.max_real_part, "xi_max": gd.xi_max},
        "alpha": spectral.alpha_transport(params, es),
        "r_hat": hf.r_hat,
    }


def _spectral_ok(rep: dict) -> bool:
    return bool(rep["zero_root_ok"] and rep["stability_index"] == 1
                and rep["imaginary_root"]["no_common_root"] and rep["gooddisp"]["holds"])


def cmd_spectral_report(cfg: RunConfig) -> int:
    _need(cfg, "params")
    rep = spectral_report(cfg.params, _endstate(cfg))
    rep["verdict"] = _spectral_ok(rep)
    write_json(cfg.output_dir / "spectral_report.json", rep, cfg)
    return EXIT_OK if rep["verdict"] else EXIT_NEGATIVE


def cmd_dispersion(cfg: RunConfig) -> int:
    _need(cfg, "params")
    xi_cfg = cfg.get("xi", {})
    xi = np.linspace(float(xi_cfg.get("min", -5.0)), float(xi_cfg.get("max", 5.0)), int(xi_cfg.get("n", 101)))
    samples = spectral.dispersion_curves(cfg.params, _endstate(cfg), xi)
    lam = np.array([s.lambdas for s in samples])
    cols, header = [xi], ["xi"]
    for j in range(lam.shape[1]):
        cols += [lam[:, j].real, lam[:, j].imag]
        header += [f"re_lambda_{j + 1}", f"im_lambda_{j + 1}"]
    write_csv(cfg.output_dir / "dispersion.csv", header, cols)
    write_json(cfg.output_dir / "dispersion.json",
               {"n_xi": xi.size, "max_real_part": float(lam.real.max())}, cfg)
    return EXIT_OK


def _write_profile(cfg: RunConfig, prof):
    header = ["x", "p_plus", "p_plus_x", "p_minus", "p_minus_x", "c", "c_x"]
    write_csv(cfg.output_dir / "profile.csv", header, [prof.mesh, *prof.values])
    write_json(cfg.output_dir / "profile.json",
               {"endstate": prof.endstate.to_dict(), "truncation_error": prof.truncation_error,
                "residual": profile_mod.residual(prof), "collocation_residual": prof.collocation_residual,
                "mesh_size": prof.n_nodes, "M": prof.M}, cfg)


def cmd_profile(cfg: RunConfig) -> int:
    _write_profile(cfg, _profile(cfg))
    return EXIT_OK


def _contour(cfg: RunConfig, prof):
    block = dict(cfg.get("contour", {}))
    if "radius" in block:
        return evans.ContourSpec(**block)
    return evans.default_contour(prof, **block)


def _run_evans(cfg: RunConfig, prof):
    system = evans.EvansSystem.from_profile(prof)
    res = evans.winding_number(system, _contour(cfg, prof), workers=cfg.threads)
    n_s = [s.n_stable for s in res.splittings] or [0] * res.lambdas.size
    n_u = [s.n_unstable for s in res.splittings] or [0] * res.lambdas.size
    write_csv(cfg.output_dir / "evans.csv",
              ["re_lambda", "im_lambda", "re_E", "im_E", "n_stable", "n_unstable"],
              [res.lambdas.real, res.lambdas.imag, res.values.real, res.values.imag, n_s, n_u])
    write_json(cfg.output_dir / "evans.json", res.to_dict(), cfg)
    return res


def cmd_evans(cfg: RunConfig) -> int:
    res = _run_evans(cfg, _profile(cfg))
    return EXIT_OK if res.stable else EXIT_NEGATIVE


def _initial(cfg: RunConfig, grid: evolution.GridSpec) -> np.ndarray:
    block = dict(cfg.get("initial", {"kind": "step"}))
    kind = block.pop("kind", "step")
    if kind == "step":
        inner = block.get("inner", [cfg.bc.p_plus_0, cfg.bc.p_minus_0, cfg.bc.c_0 or 0.0])
        U = evolution.step_initial(grid, inner, float(block.get("width", 3.0)), block.get("outer", [0.0] * 3))
        if "c" in block:
            U[2] = float(block["c"])
        return U
    if kind == "constant":
        return evolution.constant_initial(grid, block["state"])
    if kind == "custom-csv":
        data = np.loadtxt(block["path"], delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] != 4:
            raise ConfigError("custom-csv initial data must have columns x,p_plus,p_minus,c")
        return np.array([np.interp(grid.x, data[:, 0], data[:, j]) for j in (1, 2, 3)])
    raise ConfigError(f"unknown initial kind {kind!r}")


STATIONARY_WINDOW = 10
STATIONARY_SPACING = 1.0


def _run_evolve(cfg: RunConfig, write: bool = True):
    _need(cfg, "params", "bc")
    grid = evolution.GridSpec(**cfg.get("grid", {}))
    U0 = _initial(cfg, grid)
    snaps = cfg.get("snapshots", {"n": 11})
    if isinstance(snaps, dict):
        if "every" in snaps:
            user_t = np.arange(0.0, grid.t_end + 1e-9, float(snaps["every"]))
        else:
            user_t = np.linspace(0.0, grid.t_end, int(snaps.get("n", 11)))
    else:
        user_t = np.asarray(snaps, dtype=float)
    tail = grid.t_end - STATIONARY_SPACING * np.arange(STATIONARY_WINDOW + 1)[::-1]
    tail = tail[tail >= 0]
    all_t = np.unique(np.concatenate([[0.0], user_t, tail]))
    traj = evolution.evolve(cfg.params, cfg.bc, U0, grid, all_t)

    window = evolution.Trajectory(grid, traj.times[-tail.size:], traj.states[-tail.size:], cfg.bc, cfg.params)
    summary = {
        "stationary": evolution.is_stationary(window, window=tail.size - 1),
        "limiting_total_density": evolution.limiting_total_density(U0),
        "initial_bc_mismatch": traj.initial_bc_mismatch,
        "t_end": float(traj.times[-1]),
        "min_value": traj.diagnostics["min_value"],
    }
    if cfg.get("compare_profile", False):
        es = endstate_from_total_density(cfg.params, summary["limiting_total_density"])
        prof = _profile(cfg, es)
        dist = evolution.distance_to_profile(traj, prof)
        summary["predicted_endstate"] = es.to_dict()
        summary["final_distance_to_profile"] = float(dist[-1])
    if write:
        keep = np.isin(np.round(traj.times, 9), np.round(user_t, 9))
        files = []
        for i in np.flatnonzero(keep):
            name = f"snapshot_{len(files):04d}.csv"
            write_csv(cfg.output_dir / name, ["x", "p_plus", "p_minus", "c"], [grid.x, *traj.states[i]])
            files.append({"file": name, "t": float(traj.times[i])})
        summary["snapshots"] = files
        write_json(cfg.output_dir / "evolve.json", summary, cfg)
    return summary


def cmd_evolve(cfg: RunConfig) -> int:
    summary = _run_evolve(cfg)
    ok = summary["stationary"] and summary.get("final_distance_to_profile", 0.0) < float(cfg.get("evolution_tol", 1e-2))
    return EXIT_OK if ok else EXIT_NEGATIVE


def cmd_singular(cfg: RunConfig) -> int:
    _need(cfg, "params", "bc")
    case = str(cfg.get("case", "I")).upper()
    c_inf = float(cfg.get("c_inf", 0.0))
    out = {"case": case, "c_inf": c_inf}
    try:
        slow = singular.slow_solve(cfg.params, cfg.bc, case, c_inf)
    except TrivialOnlyError as exc:
        out.update(verdict=exc.verdict, message=str(exc))
        write_json(cfg.output_dir / "singular.json", out, cfg)
        return EXIT_NEGATIVE
    x = np.linspace(0.0, float(cfg.get("x_max", 30.0)), int(cfg.get("n_x", 3001)))
    layer = singular.fast_layer_solve(cfg.params, slow.at_zero(), cfg.bc)
    comp = singular.composite(cfg.params, cfg.bc, case, x, c_inf, slow=slow)
    header = ["x", "p_plus", "p_minus", "c"]
    write_csv(cfg.output_dir / "composite.csv", header, [x, *comp])
    write_csv(cfg.output_dir / "slow.csv", header, [x, *slow(x)])
    write_csv(cfg.output_dir / "fast.csv", header, [x, *layer(x / cfg.params.d)])
    out.update(verdict="nontrivial", alpha_cons=slow.alpha_cons, limit=slow.limit(),
               outer_region_start=singular.outer_region_start(cfg.params.d),
               p_minus_jump=layer.p_minus_jump)
    if "ds" in cfg.raw:
        rows = singular.d_sweep(cfg.params, cfg.bc, cfg.raw["ds"], case, c_inf)
        out["comparison"] = rows
        errs = [r["sup_error_outer"] for r in rows]
        out["monotone_decrease"] = bool(all(b < a for a, b in zip(errs, errs[1:])))
        out["halving_ratios"] = [b / a for a, b in zip(errs, errs[1:])]
        out["rate_note"] = "empirical trend only; no convergence rate is proven for d -> 0"
    write_json(cfg.output_dir / "singular.json", out, cfg)
    return EXIT_OK


def _stage(name: str, fn: Callable, *args):
    try:
        return fn(*args)
    except (MTEvansError, ValueError, ArithmeticError) as exc:
        raise StageError(name, exc) from exc


def cmd_pipeline(cfg: RunConfig) -> int:
    _need(cfg, "params", "bc")
    es = _stage("endstate", _endstate, cfg)
    rep = _stage("spectral-report", spectral_report, cfg.params, es)
    write_json(cfg.output_dir / "spectral_report.json", rep, cfg)
    verdict = {"profile_found": False, "gooddisp": bool(rep["gooddisp"]["holds"]),
               "winding_number": None, "evolution_agrees": False}
    try:
        prof = _profile(cfg, es)
        verdict["profile_found"] = True
    except MTEvansError as exc:
        verdict["profile_error"] = str(exc)
        prof = None
    if prof is not None:
        _write_profile(cfg, prof)
        res = _stage("evans", _run_evans, cfg, prof)
        verdict["winding_number"] = res.winding_number
        verdict["gooddisp"] = verdict["gooddisp"] and res.gooddisp_verdict
        evo_cfg = RunConfig(cfg.command, _merge(cfg.raw, {"compare_profile": True}),
                            cfg.output_dir / "evolve", cfg.seed, cfg.threads, cfg.params, cfg.bc)
        summary = _stage("evolve", _run_evolve, evo_cfg)
        verdict["final_distance_to_profile"] = summary["final_distance_to_profile"]
        verdict["evolution_agrees"] = bool(
            summary["stationary"] and summary["final_distance_to_profile"] < float(cfg.get("evolution_tol", 1e-2)))
    write_json(cfg.output_dir / "pipeline.json", {"verdict": verdict}, cfg)
    ok = (verdict["profile_found"] and verdict["gooddisp"] and verdict["winding_number"] == 0
          and verdict["evolution_agrees"])
    return EXIT_OK if ok else EXIT_NEGATIVE


HANDLERS = {
    "classical": cmd_classical,
    "endstate": cmd_endstate,
    "spectral-report": cmd_spectral_report,
    "dispersion": cmd_dispersion,
    "profile": cmd_profile,
    "evans": cmd_evans,
    "evolve": cmd_evolve,
    "singular": cmd_singular,
    "pipeline": cmd_pipeline,
}


def run(config: RunConfig) -> int:
    """Execute one command; returns the process exit status."""
    try:
        return HANDLERS[config.command](config)
    except StageError as exc:
        print(f"error {exc}", file=sys.stderr)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
    except (MTEvansError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error [{config.command}] {type(exc).__name__}: {exc}", file=sys.stderr)
    return EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mtevans", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--preset", choices=sorted(PRESETS), help="built-in parameter set")
        p.add_argument("--out", default="out", help="output directory (default: %(default)s)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.command, args.config, args.preset, args.out, args.seed, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    np.random.seed(cfg.seed)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
