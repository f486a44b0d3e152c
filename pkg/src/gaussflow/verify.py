"""Acceptance suite: each criterion is a function returning a :class:`CriterionResult`."""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import atlas, bridge, families, flow, stability
from .functionals import deficit
from .measure import Grid1D, build_gaussian, build_perturbed_cosine


@dataclass(frozen=True)
class VerifyConfig:
    grid_n: int = 1024
    grid_l: float = 10.0
    seed: int = 0
    workers: int = 1
    flow_t_final: float = 20.0


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    metrics: dict
    elapsed: float = field(default=0.0, compare=False)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        body = ", ".join(f"{k}={_fmt(v)}" for k, v in self.metrics.items())
        return f"[{tag}] criterion {self.number:2d} {self.name}: {body} ({self.elapsed:.1f}s)"

    def to_dict(self) -> dict:
        return {"metrics": {k: _jsonable(v) for k, v in sorted(self.metrics.items())},
                "name": self.name, "number": self.number, "passed": self.passed}


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


P_SET = (1.1, 1.5, 1.9)


# ---------------------------------------------------------------- criteria

def crit_atlas_exactness(cfg: VerifyConfig) -> tuple[bool, dict]:
    err = 0.0
    for d in (3, 5, 10, 50):
        lo, hi = atlas.m_pm_sphere(d, 1)
        err = max(err, abs(lo - 1), abs(hi - 1))
        star = atlas.sobolev_exponent(d)
        target = float(Fraction(d - 1, d))
        lo, hi = atlas.m_pm_sphere(d, star)
        err = max(err, abs(lo - target), abs(hi - target))
        err = max(err, abs(atlas.m_pm_sphere(d, atlas.sharp_hash_exponent(d))[1] - 1))
    err = max(err, abs(atlas.beta_pm(1.5)[0] - 2.0 / 3.0))
    for p in P_SET:
        err = max(err, abs(atlas.theta_of_beta(p, 1.0) - (p - 1)))
        for b in atlas.beta_pm(p):
            err = max(err, abs(atlas.theta_of_beta(p, b) - 1))
    return err <= 1e-12, {"max_abs_error": err}


def crit_large_d(cfg: VerifyConfig) -> tuple[bool, dict]:
    ds = np.array([1e2, 1e3, 1e4, 1e5, 1e6])
    slopes = []
    for p in P_SET:
        g = np.array(atlas.m_pm_gauss(p))
        gaps = [np.max(np.abs(np.array(atlas.m_pm_sphere(d, p)) - g)) for d in ds]
        slopes.append(float(np.polyfit(np.log(ds), np.log(gaps), 1)[0]))
    ok = all(abs(s + 1) <= 0.1 for s in slopes)
    return ok, {"slopes": [round(s, 6) for s in slopes]}


def crit_gaussian_sweep(cfg: VerifyConfig) -> tuple[bool, dict]:
    mu = build_gaussian(cfg.grid_l, cfg.grid_n)
    fs = families.random_hermite_set(mu, 200, seed=cfg.seed)
    worst = min(deficit(f, p, 1.0, mu).slack for f in fs for p in P_SET)
    return worst >= -1e-8, {"min_slack": worst, "functions": 200}


def _richardson_quartic(values: list[float], eps: list[float]) -> float:
    """Extrapolate ``g(eps)/eps^4 = c + O(eps^2)`` from ``eps`` and ``2 eps``."""
    c1, c2 = values[0] / eps[0] ** 4, values[1] / eps[1] ** 4
    return (4 * c1 - c2) / 3


def crit_fourth_order(cfg: VerifyConfig) -> tuple[bool, dict]:
    mu = build_gaussian(cfg.grid_l, cfg.grid_n)
    eps = np.linspace(0.02, 0.1, 9)
    exps, coef_err, gap_err = [], [], []
    for p in P_SET:
        d = np.array([deficit(families.linear_family(mu, e), p, 1.0, mu).slack for e in eps])
        exps.append(float(np.polyfit(np.log(eps), np.log(d), 1)[0]))
        c = _richardson_quartic([d[0], d[2]], [eps[0], eps[2]])
        coef_err.append(abs(c / (0.5 * (p - 1)) - 1))
        e3 = [0.02, 0.04, 0.08]
        g = [stability.improved_gap_ad2005(families.linear_family(mu, e), p, mu)[0].slack for e in e3]
        cg = _richardson_quartic(g[:2], e3[:2])
        gap_err.append(abs(cg / (0.5 * (p - 1) ** 2) - 1))
    ok = (all(abs(x - 4) <= 0.05 for x in exps) and max(coef_err) <= 0.05
          and max(gap_err) <= 0.05)
    return ok, {"exponents": [round(x, 6) for x in exps], "coef_rel_err": max(coef_err),
                "gap_coef_rel_err": max(gap_err)}


def flow_grid() -> list[tuple[float, float]]:
    pts = []
    for p in (1.1, 1.3, 1.5, 1.7, 1.9):
        lo, hi = atlas.m_pm_gauss(p)
        pts.extend((p, lo + u * (hi - lo)) for u in (0.1, 0.3, 0.5, 0.7, 0.9))
    return pts


def _flow_job(args) -> tuple[float, float, float]:
    p, m, L, N, T = args
    mu = build_gaussian(L, N)
    traj = flow.run_flow(families.flow_test_datum(mu, 0.3), p, m, mu, T)
    return p, m, traj.mass_drift, traj.max_deficit_increase


def _map(fn: Callable, jobs: list, workers: int) -> list:
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs))


def crit_flow(cfg: VerifyConfig) -> tuple[bool, dict]:
    jobs = [(p, m, cfg.grid_l, cfg.grid_n, cfg.flow_t_final) for p, m in flow_grid()]
    out = _map(_flow_job, jobs, cfg.workers)
    drift = max(o[2] for o in out)
    incr = max(o[3] for o in out)
    return drift <= 1e-8 and incr <= 1e-8, {"runs": len(out), "max_mass_drift": drift,
                                            "max_deficit_increase": incr}


def _rate_cases(seed: int, count: int = 20) -> list[tuple[float, float, int]]:
    rng = np.random.default_rng(seed)
    cases = []
    for i in range(count):
        p = float(rng.uniform(1.1, 1.9))
        lo, hi = atlas.m_pm_gauss(p)
        cases.append((p, lo + float(rng.uniform(0.1, 0.9)) * (hi - lo), 1000 + seed + i))
    return cases


def crit_carre_du_champ(cfg: VerifyConfig) -> tuple[bool, dict]:
    errs = {}
    for N in (512, 1024):
        mu = build_gaussian(cfg.grid_l, N)
        errs[N] = [flow.deficit_rate_check(
            families.random_flow_datum(mu, np.random.default_rng(s)), p, m, mu).relative_error
            for p, m, s in _rate_cases(cfg.seed)]
    coarse, fine = max(errs[512]), max(errs[1024])
    ratio = coarse / fine if fine > 0 else math.inf
    return fine <= 1e-3 and ratio >= 4, {"max_rel_err_512": coarse, "max_rel_err_1024": fine,
                                         "improvement": ratio}


def crit_counterexample(cfg: VerifyConfig) -> tuple[bool, dict]:
    mu = build_gaussian(cfg.grid_l, cfg.grid_n)
    out = flow.counterexample_search(1.5, 2.0, mu)
    ins = flow.counterexample_search(1.5, 1.2, mu)
    ok = out.best_rate > 1e-6 and ins.best_rate <= 1e-8
    return ok, {"outside_best_rate": out.best_rate, "inside_best_rate": ins.best_rate}


BRIDGE_GRID = (10.0, 8192)


def crit_bridge(cfg: VerifyConfig) -> tuple[bool, dict]:
    qerr = 0.0
    for d in (5, 10, 20, 50):
        for a, b in ((d - 1, d - 2), (d - 1, d), (1, d), (2, d - 2)):
            q = bridge.zeta_integral_quadrature(a, b, d)
            qerr = max(qerr, abs(q / bridge.zeta_integral(a, b, d) - 1))
    d = 1e4
    lim = math.exp(bridge.log_zeta_integral(d - 1, d - 2, d) - bridge.log_c_d(d))
    lim_err = abs(lim - 4 / math.sqrt(2 * math.pi))
    g = Grid1D(*BRIDGE_GRID)
    v = families.bump(g)
    ds = np.array([1e2, 1e3, 1e4, 1e5, 1e6])
    e = [bridge.sphere_functionals(v, g, x, 1.5).abs_error for x in ds]
    slope = float(np.polyfit(np.log(ds), np.log(e), 1)[0])
    ok = qerr <= 1e-8 and lim_err <= 1e-3 and abs(slope + 1) <= 0.1
    return ok, {"quadrature_rel_err": qerr, "limit_abs_err": lim_err, "slope": round(slope, 6)}


def crit_logsob(cfg: VerifyConfig) -> tuple[bool, dict]:
    g = Grid1D(*BRIDGE_GRID)
    ev = bridge.logsob_bridge(families.bump(g), g, 1e4)
    rel = ev.abs_error / abs(ev.gaussian_target)
    return rel <= 1e-2, {"rel_err": rel}


def crit_eigen(cfg: VerifyConfig) -> tuple[bool, dict]:
    l1 = stability.poincare_lambda1(build_gaussian(cfg.grid_l, cfg.grid_n))
    pc = build_perturbed_cosine(cfg.grid_l, cfg.grid_n)
    fs = families.random_hermite_set(pc, 200, seed=cfg.seed)
    l1c = stability.poincare_lambda1(pc)
    worst = min(stability.lemma37_check(pc, p, fs, lambda1=l1c).min_slack for p in P_SET)
    ok = abs(l1 - 1) <= 1e-6 and l1c >= pc.lambda_star and worst >= -1e-8
    return ok, {"lambda1_gauss_err": abs(l1 - 1), "lambda1_cosine": l1c, "min_slack": worst}


def crit_stability(cfg: VerifyConfig) -> tuple[bool, dict]:
    mu = build_gaussian(cfg.grid_l, cfg.grid_n)
    grid = np.linspace(0.0, 0.3, 21)
    s_min = o_min = math.inf
    for p in P_SET:
        for e in grid:
            for h in grid:
                v = families.mixed_family(mu, e, h)
                s_min = min(s_min, stability.stability_check(v, p, mu).slack)
                o_min = min(o_min, stability.orth_improvement(v, p, mu).slack)
    return s_min >= 0 and o_min >= 0, {"min_stability_slack": s_min, "min_orth_slack": o_min}


def crit_scalar(cfg: VerifyConfig) -> tuple[bool, dict]:
    d2 = max(abs(atlas.psi_second_difference(p) / ((p - 1) / (2 - p)) - 1) for p in P_SET)
    # psi(t)/t -> p - 1 only like t^{-(2-p)/(p-1)}: see the accompanying notes
    lin = max(abs(atlas.psi_func(p, 1e6) / 1e6 - (p - 1)) for p in (1.1, 1.3, 1.5))
    kap = [atlas.kappa_const(p, 601) for p in P_SET]
    stab = max(abs(atlas.kappa_const(p, 1201) - k) / k for p, k in zip(P_SET, kap))
    ok = d2 <= 1e-4 and lin <= 1e-3 and min(kap) > 0 and stab <= 1e-8
    return ok, {"psi2_rel_err": d2, "linear_growth_abs_err": lin, "kappa_min": min(kap),
                "kappa_doubling_rel": stab}


CRITERIA: list[tuple[int, str, Callable[[VerifyConfig], tuple[bool, dict]]]] = [
    (1, "atlas-exactness", crit_atlas_exactness),
    (2, "large-d-slope", crit_large_d),
    (3, "gaussian-sweep", crit_gaussian_sweep),
    (4, "fourth-order", crit_fourth_order),
    (5, "flow-conservation", crit_flow),
    (6, "carre-du-champ", crit_carre_du_champ),
    (7, "counterexample", crit_counterexample),
    (8, "dimension-bridge", crit_bridge),
    (9, "logsob-limit", crit_logsob),
    (10, "eigenvalue", crit_eigen),
    (11, "stability", crit_stability),
    (12, "scalar-machinery", crit_scalar),
]


def run_criterion(number: int, cfg: VerifyConfig | None = None) -> CriterionResult:
    cfg = cfg or VerifyConfig()
    num, name, fn = next(c for c in CRITERIA if c[0] == number)
    t0 = time.perf_counter()
    try:
        ok, metrics = fn(cfg)
    except Exception as exc:  # a crashing criterion is a failing criterion
        ok, metrics = False, {"error": f"{type(exc).__name__}: {exc}"}
    return CriterionResult(num, name, bool(ok), metrics, time.perf_counter() - t0)


def run_all(cfg: VerifyConfig | None = None, echo: Callable[[str], None] | None = print,
            only: list[int] | None = None) -> list[CriterionResult]:
    results = []
    for num, _, _ in CRITERIA:
        if only and num not in only:
            continue
        res = run_criterion(num, cfg)
        if echo:
            echo(res.line())
        results.append(res)
    return results
