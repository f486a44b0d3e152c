"""Command-line front end: ``python -m gaussflow <subcommand> [flags]``.

Exit codes: 0 success, 1 numerical failure (or a failing acceptance
criterion under ``verify``), 2 invalid flags or inputs.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, atlas, bridge, families, flow, stability, verify
from .measure import (ConvexityError, Grid1D, MeasureSpec, build_custom, build_gaussian,
                      build_perturbed_cosine)

OUT_ENV = "GAUSSFLOW_OUT_DIR"
DEFAULT_OUT = "gaussflow-out"
MEASURES = ("gaussian", "perturbed-cosine", "custom")


class UsageError(ValueError):
    """Invalid configuration detected after argument parsing (exit 2)."""


# ---------------------------------------------------------------- config

@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    p: float | None = None
    m: float | None = None
    beta: float | None = None
    d: tuple[float, ...] = ()
    n: int = 1
    grid_n: int = 1024
    grid_l: float = 10.0
    t_final: float = 20.0
    measure: str = "gaussian"
    potential_file: str | None = None
    lambda_star: float | None = None
    eps_max: float = 0.3
    eta_max: float = 0.3
    steps: int = 21
    resolution: int = 101
    only: tuple[int, ...] = ()
    out: str = DEFAULT_OUT
    seed: int = 0
    workers: int = field(default=1, compare=False)

    def echo(self) -> list[str]:
        skip = {"workers", "out"}
        return [f"{k}={_echo_value(v)}" for k, v in asdict(self).items() if k not in skip]


def _echo_value(v) -> str:
    if isinstance(v, float):
        return format_float(v)
    if isinstance(v, (tuple, list)):
        return "[" + ",".join(_echo_value(x) for x in v) + "]"
    return str(v)


def format_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def _dimension(text: str) -> float:
    if text.lower() in ("inf", "gauss", "gaussian"):
        return math.inf
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"dimension must be positive, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=float, help="exponent p")
    common.add_argument("--m", type=float, help="flow exponent m")
    common.add_argument("--beta", type=float, help="parameter beta (alternative to --m)")
    common.add_argument("--d", type=_dimension, nargs="+", default=(),
                        help="dimension(s); 'inf' selects the Gaussian limit")
    common.add_argument("--n", type=_positive_int, default=1, help="Gaussian dimension n")
    common.add_argument("--grid-n", type=_positive_int, default=1024, help="grid points N")
    common.add_argument("--grid-l", type=float, default=10.0, help="grid half width L")
    common.add_argument("--t-final", type=float, default=20.0, help="flow final time T")
    common.add_argument("--measure", choices=MEASURES, default="gaussian")
    common.add_argument("--potential-file", help="two-column (y, phi) file for --measure custom")
    common.add_argument("--lambda-star", type=float, help="convexity constant of the measure")
    common.add_argument("--eps-max", type=float, default=0.3)
    common.add_argument("--eta-max", type=float, default=0.3)
    common.add_argument("--steps", type=_positive_int, default=21, help="sweep points per axis")
    common.add_argument("--resolution", type=_positive_int, default=101,
                        help="p samples for the atlas table")
    common.add_argument("--only", type=int, nargs="+", default=(),
                        help="verify: run only these criteria")
    common.add_argument("--out", default=None,
                        help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=_positive_int, default=os.cpu_count() or 1)

    parser = argparse.ArgumentParser(prog="gaussflow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gaussflow {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    helps = {"atlas": "admissible parameter region tables",
             "flow": "integrate the nonlinear flow and record the deficit",
             "bridge": "finite-dimensional sphere quantities against the Gaussian limit",
             "stability": "stability estimate on the mixed test family",
             "verify": "run the acceptance suite"}
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    out = ns.out if ns.out is not None else os.environ.get(OUT_ENV) or DEFAULT_OUT
    return RunConfig(subcommand=ns.subcommand, p=ns.p, m=ns.m, beta=ns.beta, d=tuple(ns.d),
                     n=ns.n, grid_n=ns.grid_n, grid_l=ns.grid_l, t_final=ns.t_final,
                     measure=ns.measure, potential_file=ns.potential_file,
                     lambda_star=ns.lambda_star, eps_max=ns.eps_max, eta_max=ns.eta_max,
                     steps=ns.steps, resolution=ns.resolution, only=tuple(ns.only), out=out,
                     seed=ns.seed, workers=ns.workers)


# ---------------------------------------------------------------- output

def write_csv(path: Path, cfg: RunConfig, experiment: str, columns, rows) -> Path:
    lines = [f"# gaussflow {cfg.subcommand}", f"# experiment: {experiment}"]
    lines += [f"# {item}" for item in cfg.echo()]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(format_float(x) if isinstance(x, (float, np.floating))
                              else str(x) for x in row))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _json_ready(obj):
    if isinstance(obj, dict):
        return {str(k): _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else format_float(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: Path, payload: dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_json_ready(payload), sort_keys=True, indent=2, ensure_ascii=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------- measures

def load_potential(path: str, grid: Grid1D) -> tuple[np.ndarray, np.ndarray]:
    """Sorted samples of a two-column ``(y, phi)`` file covering the grid."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read().replace(",", " ")
        data = np.loadtxt(text.splitlines(), comments="#", ndmin=2)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read potential file {path}: {exc}") from exc
    if data.shape[1] != 2 or data.shape[0] < 2:
        raise UsageError("potential file must have two columns and at least two rows")
    order = np.argsort(data[:, 0], kind="stable")
    y, phi = data[order, 0], data[order, 1]
    if np.any(np.diff(y) <= 0):
        raise UsageError("potential file abscissae must be distinct")
    if y[0] > -grid.half_width or y[-1] < grid.half_width:
        raise UsageError(f"potential file must cover [-{grid.half_width}, {grid.half_width}]")
    return y, phi


def check_sampled_convexity(y: np.ndarray, phi: np.ndarray, lambda_star: float,
                            tol: float = 1e-8) -> None:
    """Second divided differences of the samples must stay above ``lambda_star``."""
    slopes = np.diff(phi) / np.diff(y)
    hess = 2.0 * np.diff(slopes) / (y[2:] - y[:-2])
    if hess.size and np.min(hess) < lambda_star - tol:
        k = int(np.argmin(hess)) + 1
        raise ConvexityError(f"sampled Hess phi = {hess[k - 1]:.6g} < lambda_star = "
                             f"{lambda_star} at y = {y[k]:.6g}")


def make_measure(cfg: RunConfig) -> MeasureSpec:
    if cfg.measure == "gaussian":
        return build_gaussian(cfg.grid_l, cfg.grid_n)
    if cfg.measure == "perturbed-cosine":
        return build_perturbed_cosine(cfg.grid_l, cfg.grid_n)
    if cfg.potential_file is None or cfg.lambda_star is None:
        raise UsageError("--measure custom needs --potential-file and --lambda-star")
    grid = Grid1D(cfg.grid_l, cfg.grid_n)
    y, phi = load_potential(cfg.potential_file, grid)
    # the interpolant is piecewise linear, so convexity is checked on the samples
    check_sampled_convexity(y, phi, cfg.lambda_star)
    return build_custom(np.interp(grid.nodes, y, phi), cfg.lambda_star, grid,
                        tol=math.inf, name="custom")


# ---------------------------------------------------------------- subcommands

def _require_p(cfg: RunConfig, lo: float, hi: float, closed_hi: bool = False) -> float:
    if cfg.p is None:
        raise UsageError("--p is required")
    ok = lo <= cfg.p <= hi if closed_hi else lo <= cfg.p < hi
    if not ok:
        raise UsageError(f"--p must lie in [{lo}, {hi}{']' if closed_hi else ')'}")
    return cfg.p


def cmd_atlas(cfg: RunConfig, out: Path) -> list[Path]:
    dims = cfg.d or (math.inf,)
    written = []
    for d in dims:
        key = "gauss" if math.isinf(d) else (int(d) if float(d).is_integer() else d)
        if not math.isinf(d) and not (float(d).is_integer() and d >= 1):
            raise UsageError("sphere dimension must be a positive integer")
        rows = atlas.region_sample(key, resolution=cfg.resolution)
        written.append(write_csv(out / f"atlas_d{key}.csv", cfg, "admissible region",
                                 atlas.REGION_COLUMNS, rows))
    if cfg.p is not None:
        p = _require_p(cfg, 1.0, 2.0, closed_hi=True)
        lo, hi = atlas.m_pm_gauss(p)
        bm, bp = atlas.beta_pm(p)
        payload = {"p": p, "m_minus": lo, "m_plus": hi, "beta_minus": bm, "beta_plus": bp}
        if 1.0 < p < 2.0:
            c, recipe = atlas.c_np(cfg.n, p)
            payload.update(kappa=atlas.kappa_const(p), c_np=c, recipe=recipe.to_dict())
        beta = cfg.beta
        if beta is None and cfg.m is not None:
            beta = atlas.beta_from_m(p, cfg.m)
        if beta is not None:
            payload["point"] = {"beta": beta, "m": atlas.m_from_beta(p, beta),
                                "kappa": atlas.kappa_from_beta(p, beta),
                                "delta": atlas.delta(p, beta),
                                "theta": atlas.theta_of_beta(p, beta),
                                "admissible": bool(atlas.delta(p, beta) >= 0)}
        for d in dims:
            if not math.isinf(d):
                payload[f"sphere_d{int(d)}"] = dict(zip(("m_minus", "m_plus"),
                                                        atlas.m_pm_sphere(int(d), p)))
        written.append(write_json(out / "atlas_point.json", payload))
    return written


def _flow_exponent(cfg: RunConfig, p: float) -> float:
    if cfg.m is not None and cfg.beta is not None:
        raise UsageError("give either --m or --beta, not both")
    if cfg.m is not None:
        return cfg.m
    if cfg.beta is not None:
        return atlas.m_from_beta(p, cfg.beta)
    raise UsageError("--m or --beta is required")


def cmd_flow(cfg: RunConfig, out: Path) -> list[Path]:
    p = _require_p(cfg, 1.0, 2.0)
    m = _flow_exponent(cfg, p)
    if not m > 0:
        raise UsageError("--m must be positive")
    if not cfg.t_final > 0:
        raise UsageError("--t-final must be positive")
    mu = make_measure(cfg)
    w0 = families.random_flow_datum(mu, np.random.default_rng(cfg.seed))
    traj = flow.run_flow(w0, p, m, mu, cfg.t_final)
    lo, hi = atlas.m_pm_gauss(p)
    csv = write_csv(out / "flow.csv", cfg, "deficit along the flow", traj.COLUMNS, traj.rows())
    summary = {"p": p, "m": m, "beta": traj.beta, "admissible": bool(lo <= m <= hi),
               "mass_drift": traj.mass_drift, "max_deficit_increase": traj.max_deficit_increase,
               "monotone": traj.monotone(), "floored_nodes": traj.floored_nodes,
               "steps": int(traj.dt_history.size),
               "max_boundary_flux": float(np.max(traj.boundary_flux)),
               "final_deficit": float(traj.deficit[-1]), "measure": mu.name}
    return [csv, write_json(out / "flow_summary.json", summary)]


def cmd_bridge(cfg: RunConfig, out: Path) -> list[Path]:
    dims = cfg.d or (1e2, 1e3, 1e4, 1e5, 1e6)
    if any(math.isinf(d) or d <= 3 for d in dims):
        raise UsageError("bridge dimensions must be finite and > 3")
    grid = Grid1D(cfg.grid_l, cfg.grid_n)
    v = families.bump(grid)
    if cfg.p is None:
        rows = [bridge.logsob_bridge(v, grid, d).row() for d in dims]
        experiment = "log-Sobolev joint limit, p_d = 2 - 1/d"
    else:
        p = _require_p(cfg, 1.0, 2.0)
        rows = [bridge.sphere_functionals(v, grid, d, p, cfg.n).row() for d in dims]
        experiment = "sphere functionals against the Gaussian deficit"
    return [write_csv(out / "bridge.csv", cfg, experiment, bridge.BridgeEvaluation.COLUMNS, rows)]


def _stability_row(args):
    p, L, N, n, eps, etas = args
    mu = build_gaussian(L, N)
    out = []
    for eta in etas:
        b = stability.stability_check(families.mixed_family(mu, eps, eta), p, mu, n=n)
        out.append((eps, eta, b.deficit, b.rhs, b.slack, b.to_dict()))
    return out


def cmd_stability(cfg: RunConfig, out: Path) -> list[Path]:
    p = _require_p(cfg, 1.0, 2.0)
    if p == 1.0:
        raise UsageError("stability needs 1 < p < 2")
    if cfg.measure != "gaussian":
        raise UsageError("the stability estimate is stated for the Gaussian measure")
    eps = np.linspace(0.0, cfg.eps_max, cfg.steps)
    etas = tuple(float(x) for x in np.linspace(0.0, cfg.eta_max, cfg.steps))
    jobs = [(p, cfg.grid_l, cfg.grid_n, cfg.n, float(e), etas) for e in eps]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            chunks = list(ex.map(_stability_row, jobs))
    else:
        chunks = [_stability_row(j) for j in jobs]
    records = [r for chunk in chunks for r in chunk]
    csv = write_csv(out / "stability.csv", cfg, "stability estimate on 1 + eps y + eta (y^2 - 1)",
                    ("eps", "eta", "lhs", "rhs", "slack"), [r[:5] for r in records])
    worst = min(records, key=lambda r: r[4])
    c, recipe = atlas.c_np(cfg.n, p)
    payload = {"p": p, "n": cfg.n, "c_np": c, "recipe": recipe.to_dict(),
               "min_slack": worst[4], "holds": bool(worst[4] >= 0),
               "worst": {"eps": worst[0], "eta": worst[1], "breakdown": worst[5]},
               "breakdowns": [{"eps": r[0], "eta": r[1], **r[5]} for r in records]}
    return [csv, write_json(out / "stability.json", payload)]


def cmd_verify(cfg: RunConfig, out: Path) -> tuple[list[Path], bool]:
    unknown = set(cfg.only) - {c[0] for c in verify.CRITERIA}
    if unknown:
        raise UsageError(f"unknown criteria: {sorted(unknown)}")
    vc = verify.VerifyConfig(grid_n=cfg.grid_n, grid_l=cfg.grid_l, seed=cfg.seed,
                             workers=cfg.workers, flow_t_final=cfg.t_final)
    results = verify.run_all(vc, echo=lambda s: print(s, flush=True), only=list(cfg.only))
    passed = all(r.passed for r in results)
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed", flush=True)
    path = write_json(out / "verify.json", {"passed": passed,
                                            "criteria": [r.to_dict() for r in results]})
    return [path], passed


COMMANDS = {"atlas": cmd_atlas, "flow": cmd_flow, "bridge": cmd_bridge,
            "stability": cmd_stability}


def run(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    if cfg.subcommand == "verify":
        paths, ok = cmd_verify(cfg, out)
    else:
        paths, ok = COMMANDS[cfg.subcommand](cfg, out), True
    for pth in paths:
        print(f"wrote {pth}", file=sys.stderr)
    return 0 if ok else 1


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)  # exits 2 on malformed flags
    try:
        if ns.grid_n < 16:
            raise UsageError("--grid-n must be at least 16")
        return run(config_from_args(ns))
    except (UsageError, ConvexityError) as exc:
        parser.print_usage(sys.stderr)
        print(f"gaussflow: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # remaining ValueErrors come from operation preconditions on the given flags
        print(f"gaussflow: error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"gaussflow: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
