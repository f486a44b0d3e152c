import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaussflow import atlas, families, flow
from gaussflow.measure import build_gaussian

MU = build_gaussian(10.0, 256)


def _datum(seed=0, mu=MU):
    return families.random_flow_datum(mu, np.random.default_rng(seed))


@pytest.mark.parametrize("p, m", [(1.5, 1.0), (1.5, 0.6), (1.3, 1.4), (1.9, 0.95)])
def test_short_flow_conserves_and_dissipates(p, m):
    traj = flow.run_flow(_datum(), p, m, MU, 1.0)
    assert traj.mass_drift < 1e-12
    assert traj.monotone(1e-10)
    assert traj.floored_nodes == 0
    assert np.all(traj.fisher >= 0)
    assert traj.deficit[-1] < traj.deficit[0]
    assert np.max(traj.boundary_flux) < 1e-15


def test_constant_is_stationary():
    traj = flow.run_flow(np.full(MU.grid.point_count, 2.0), 1.5, 0.8, MU, 0.5)
    assert traj.terminal_oscillation() < 1e-12
    assert np.max(np.abs(traj.deficit)) < 1e-12


def test_relaxes_to_constant():
    traj = flow.run_flow(_datum(3), 1.5, 1.0, MU, 12.0)
    assert traj.terminal_oscillation() < 1e-4


def test_trajectory_rows_and_columns():
    traj = flow.run_flow(_datum(), 1.5, 1.0, MU, 0.1,
                         flow.FlowControls(record_count=5))
    rows = traj.rows()
    assert len(rows) == 5 and len(rows[0]) == len(flow.FlowTrajectory.COLUMNS)
    assert rows[0][0] == 0.0 and rows[-1][0] == pytest.approx(0.1)


def test_run_flow_rejects_bad_input():
    with pytest.raises(flow.PositivityError):
        flow.run_flow(MU.nodes, 1.5, 1.0, MU, 1.0)
    with pytest.raises(ValueError):
        flow.run_flow(_datum(), 2.0, 1.0, MU, 1.0)
    with pytest.raises(ValueError):
        flow.run_flow(_datum(), 1.5, 1.0, MU, 0.0)
    with pytest.raises(ValueError):
        flow.FlowControls(safety=1.0)


def test_deterministic():
    a = flow.run_flow(_datum(), 1.5, 0.7, MU, 0.2)
    b = flow.run_flow(_datum(), 1.5, 0.7, MU, 0.2)
    assert np.array_equal(a.deficit, b.deficit) and np.array_equal(a.final_w.values, b.final_w.values)


def test_flow_rhs_matches_integrator():
    mu = build_gaussian(10.0, 512)
    w = _datum(1, mu)
    p, m = 1.5, 0.7
    beta = atlas.beta_from_m(p, m)
    integ = flow._Integrator(mu, p, m, flow.FlowControls())
    rf, rb = integ.to_rho(w), integ.to_rho(w)
    tau = 1e-5
    integ.advance(rf, tau)
    integ.advance(rb, tau, sign=-1.0)
    numeric = (integ.to_w(rf) - integ.to_w(rb)) / (2 * tau)
    exact = flow.flow_rhs(w, p, beta, mu).values
    weight = mu.weights
    err = math.sqrt(np.sum(weight * (numeric - exact) ** 2) / np.sum(weight * exact ** 2))
    assert err < 1e-5


@pytest.mark.parametrize("p, m", [(1.5, 1.0), (1.2, 0.8), (1.8, 1.05)])
def test_deficit_rate_matches_carre_du_champ(p, m):
    mu = build_gaussian(10.0, 512)
    check = flow.deficit_rate_check(_datum(2, mu), p, m, mu)
    assert check.relative_error < 1e-4
    assert check.predicted_rate <= 0


def test_q_identity():
    mu = build_gaussian(10.0, 1024)
    w = _datum(4, mu)
    for p, m in [(1.5, 1.0), (1.3, 0.7)]:
        q = flow.q_beta(w, p, atlas.beta_from_m(p, m), mu)
        assert abs(q.identity_gap) < 1e-5 * abs(q.expanded)
        assert q.sum_of_squares >= 0 and abs(q.curvature_excess) < 1e-12


def test_q_no_sos_outside():
    q = flow.q_beta(_datum(), 1.5, 3.0, MU)
    assert q.delta < 0 and q.sum_of_squares is None and math.isnan(q.identity_gap)


@settings(max_examples=10)
@given(st.integers(0, 1000), st.floats(0.05, 0.95))
def test_remainder_nonnegative_inside(seed, u):
    mu = build_gaussian(10.0, 512)
    p = 1.1 + 0.8 * (seed % 9) / 8
    lo, hi = atlas.m_pm_gauss(p)
    m = lo + u * (hi - lo)
    assert flow.initial_deficit_rate(_datum(seed, mu), p, m, mu) <= 1e-12


def test_counterexample_outside_and_inside():
    mu = build_gaussian(10.0, 1024)
    out = flow.counterexample_search(1.5, 2.0, mu)
    assert out.found and out.best_rate > 1e-6 and out.evaluations <= 200
    assert np.min(out.best_datum.values) > 0
    ins = flow.counterexample_search(1.5, 1.2, mu)
    assert not ins.found and ins.best_rate <= 1e-8


def test_counterexample_degenerate_and_budget():
    assert flow.counterexample_search(1.0, 1.0, MU).status == "skipped"
    with pytest.raises(ValueError):
        flow.counterexample_search(1.5, 2.0, MU, family_size=500)


def test_bump_family_without_dip():
    w = flow.hermite_bump_family(MU, 0.0, 0.0)
    assert np.all(w == 1.0)
    wd = flow.hermite_bump_family(MU, 0.0, 0.0, depth=2.0, sigma=1.0)
    assert np.allclose(wd, 1 - 0.99 * np.exp(-0.5 * MU.nodes ** 2), atol=1e-15)
