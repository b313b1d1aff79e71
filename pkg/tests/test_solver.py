import numpy as np
import pytest

from oracles import linear_unit_block_activity
from elapsed_neurons import (ConstantThreshold, Exponential, LinearStationary, ModelConfig, PaperThreshold,
                             UnitBlock, init_grid, linear_stationary_profile, run, snapshot_density, step)
from elapsed_neurons.solver import n_steps


def test_init_grid_unit_block():
    cfg = ModelConfig(ConstantThreshold(0.5))
    st = init_grid(cfg)
    assert st.N == pytest.approx(0.5, abs=1e-12)
    assert st.X == st.N and st.k == 0
    assert st.mass == pytest.approx(1.0, abs=1e-13)
    s, n = snapshot_density(st)
    assert np.allclose(n[s < 1], 1.0, rtol=0, atol=1e-12) and np.all(n[s > 1] == 0.0)


def test_init_grid_stationary():
    st = init_grid(ModelConfig(ConstantThreshold(0.5), initial=LinearStationary(0.5)))
    assert st.N == pytest.approx(2 / 3, abs=2e-3)


def test_step_conserves_mass_and_leaves_input():
    cfg = ModelConfig(ConstantThreshold(0.5))
    st = init_grid(cfg)
    before = st.cells.copy()
    nxt = step(st, cfg)
    assert np.array_equal(st.cells, before)
    assert nxt.k == 1 and nxt.t == pytest.approx(cfg.ds)
    assert abs(nxt.mass - 1.0) <= 1e-13


def test_zero_horizon_gives_single_sample():
    tr = run(ModelConfig(ConstantThreshold(0.5), t_max=0.0))
    assert len(tr) == 1 and tr.N[0] == pytest.approx(0.5)


def test_step_count_and_uniform_times():
    cfg = ModelConfig(ConstantThreshold(0.5), ds=1e-2, t_max=1.0)
    tr = run(cfg)
    assert n_steps(cfg) == 100 and len(tr) == 101
    assert np.allclose(np.diff(tr.t), cfg.dt)


def test_stationary_start_stays_near_equilibrium():
    tr = run(ModelConfig(ConstantThreshold(0.5), initial=LinearStationary(0.5), t_max=20.0))
    assert np.max(np.abs(tr.N - 2 / 3)) <= 5e-3


def test_linear_relaxation_and_snapshot(linear_trace):
    cfg, tr = linear_trace
    assert abs(tr.N[-1] - 2 / 3) <= 1e-3
    s, n = tr.snapshots[20.0]
    A = linear_stationary_profile(0.5)
    assert cfg.ds * np.sum(np.abs(n - A(s))) <= 1e-2
    assert np.max(np.abs(tr.mass - 1)) <= 1e-13


def test_initial_snapshot_is_exact_block(linear_trace):
    _, tr = linear_trace
    s, n = tr.snapshots[0.0]
    assert np.allclose(n[s < 1], 1.0, rtol=0, atol=1e-12) and np.all(n[s > 1] == 0.0)


def test_drift_is_second_order(linear_trace):
    cfg, tr = linear_trace
    assert np.max(np.abs(tr.drift)) < 10 * cfg.ds ** 2


def test_linear_delay_identity(linear_trace):
    # mass balance: neurons fired during the last sigma plus the current discharge
    cfg, tr = linear_trace
    w = int(round(0.5 / cfg.ds))
    cs = np.concatenate([[0.0], np.cumsum(tr.N)])
    k = np.arange(w, len(tr.N))
    recent = cfg.ds * (cs[k + 1] - cs[k + 1 - w])
    assert np.max(np.abs(tr.N[k] + recent - 1)) <= 5 * cfg.ds


def test_grid_refinement_is_first_order():
    T = 2.0
    exact = linear_unit_block_activity(0.5, T)(T)
    errs = [abs(run(ModelConfig(ConstantThreshold(0.5), ds=ds, t_max=T)).N[-1] - exact)
            for ds in (2e-3, 1e-3, 5e-4)]
    for coarse, fine in zip(errs, errs[1:]):
        assert 0.3 <= fine / coarse <= 0.7


def test_matches_exact_linear_activity():
    T = 3.0
    exact = linear_unit_block_activity(0.5, T)
    tr = run(ModelConfig(ConstantThreshold(0.5), t_max=T))
    for t in (0.25, 0.75, 1.3, 2.2, 3.0):
        k = int(round(t / tr.dt))
        assert tr.N[k] == pytest.approx(exact(t), abs=5e-3)


def test_lagged_input_agrees_with_instantaneous():
    # with lambda = dt the filter returns the previous activity; jumps may land a
    # step apart, so compare in time average
    gaps = []
    for ds in (2e-3, 1e-3):
        base = ModelConfig(PaperThreshold(1.0), ds=ds, t_max=3.0)
        a, b = run(base), run(base.replace(delay=ds))
        gaps.append(np.mean(np.abs(a.X - b.X)))
        assert gaps[-1] <= 5 * ds
    assert gaps[1] < 0.7 * gaps[0]


def test_deterministic(linear_trace):
    cfg, tr = linear_trace
    again = run(cfg, snapshot_times=[20.0])
    assert tr.N.tobytes() == again.N.tobytes()
    assert tr.snapshots[20.0][1].tobytes() == again.snapshots[20.0][1].tobytes()


def test_periodic_snapshot_is_discontinuous():
    tr = run(ModelConfig(PaperThreshold(3.0), ds=1e-2, t_max=60.0), snapshot_times=[59.0])
    _, n = tr.snapshots[59.0]
    assert np.max(np.abs(np.diff(n))) > 0.1


def test_bounds_hold_for_exponential_start():
    tr = run(ModelConfig(PaperThreshold(3.0), ds=1e-2, t_max=60.0, initial=Exponential()))
    assert tr.peak.max() <= 1 + 1e-12
    assert tr.N.min() >= 0 and tr.N.max() <= 1 + 1e-12


@pytest.mark.xfail(strict=True, reason="renormalization lifts the unfired unit block above one (about 2e-4)")
def test_density_bound_unit_block(linear_trace):
    _, tr = linear_trace
    assert tr.peak.max() <= 1 + 1e-12
