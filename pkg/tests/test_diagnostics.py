import numpy as np
import pytest

from trigeo.diagnostics import (fractal_dimension_series, lyapunov_limit,
                                lyapunov_series, trajectory_dimension)
from trigeo.dynamics import (JacobiState, LocalState, SimConfig, Trajectory,
                             simulate)
from trigeo.errors import (DegenerateSeparation, GridMismatch, LogDomain,
                           TooShort, ValidationError)

from conftest import EQUILATERAL, table1_row1_model


def synthetic_trajectory(t, s_components, dt=None):
    """Minimal trajectory carrying a prescribed internal-time history."""
    t = np.asarray(t, dtype=float)
    s_components = np.asarray(s_components, dtype=float)
    n = len(t)
    dt = dt if dt is not None else (t[1] - t[0] if n > 1 else 1e-4)
    step = np.rint(t / dt).astype(np.int64)
    cfg = SimConfig(model=table1_row1_model(), dt=dt, steps=max(int(step[-1]), 1),
                    initial=JacobiState(rho=np.array(EQUILATERAL),
                                        rhod=np.array([0.01, 0.01, 0.10])))
    zeros = np.zeros((n, 3))
    return Trajectory(step=step, t=t, x=zeros, zeta=zeros, rho=zeros,
                      rhod=zeros, g=np.ones(n), s_components=s_components,
                      s=s_components.sum(axis=1), termination="completed",
                      steps_completed=int(step[-1]), max_pair_distance=0.0,
                      final_local=LocalState(x=zeros[-1], zeta=zeros[-1]),
                      final_global=JacobiState(rho=zeros[-1], rhod=zeros[-1]),
                      final_s_components=s_components[-1],
                      frame=None, config=cfg)


def exponential_pair(rate=0.5, sep0=1e-5, n=400, dt=0.05):
    """Pair whose separation norm is exactly sep0 * exp(rate t)."""
    t = np.arange(n) * dt
    base = np.zeros((n, 3))
    sep = np.zeros((n, 3))
    sep[:, 0] = sep0 * np.exp(rate * t)
    return (synthetic_trajectory(t, base, dt=dt),
            synthetic_trajectory(t, base + sep, dt=dt))


class TestLyapunovSeries:
    def test_exponential_separation_gives_constant_rate(self):
        a, b = exponential_pair(rate=0.5)
        series = lyapunov_series(a, b)
        assert series.eps == pytest.approx(np.full(len(series.eps), 0.5), rel=1e-9)
        assert series.initial_separation == pytest.approx(1e-5, rel=1e-12)

    def test_identical_trajectories_degenerate(self):
        t = np.arange(100) * 0.05
        s = np.cumsum(np.ones((100, 3)) * 0.01, axis=0)
        a = synthetic_trajectory(t, s)
        b = synthetic_trajectory(t, s.copy())
        with pytest.raises(DegenerateSeparation):
            lyapunov_series(a, b)

    def test_grid_mismatch(self):
        a, _ = exponential_pair(n=100)
        _, b = exponential_pair(n=120)
        with pytest.raises(GridMismatch):
            lyapunov_series(a, b)

    def test_scale_invariance(self):
        # multiplying both separations by a common factor leaves eps alone
        a, b = exponential_pair(rate=0.8, sep0=1e-6)
        c, d = exponential_pair(rate=0.8, sep0=1e-3)
        s1 = lyapunov_series(a, b)
        s2 = lyapunov_series(c, d)
        assert s1.eps == pytest.approx(s2.eps, rel=1e-9)

    def test_real_pair_positive_exponent(self):
        from trigeo.dynamics import trajectory_pair
        cfg = SimConfig(model=table1_row1_model(), dt=1e-4, steps=30_000,
                        seed=5, decimation=100,
                        initial=JacobiState(rho=np.array(EQUILATERAL),
                                            rhod=np.array([0.01, 0.01, 0.10])))
        base, pert = trajectory_pair(cfg, perturbation=1e-2, component=0)
        series = lyapunov_series(base, pert)
        late = series.eps[series.t >= 1.0]
        assert len(late) > 0
        assert np.all(late > 0.0)


class TestLyapunovLimit:
    def test_constant_series(self):
        a, b = exponential_pair(rate=0.7, n=300)
        series = lyapunov_series(a, b)
        assert lyapunov_limit(series) == pytest.approx(0.7, rel=1e-9)

    def test_one_over_t_correction_converges(self):
        # eps(t) = c + 1/t exactly: the tail-window running mean stays
        # within 1/t_min-of-window of c
        n, dt, c = 2000, 0.05, 0.3
        t = np.arange(1, n + 1) * dt
        sep0 = 1e-6
        sep = sep0 * np.exp(c * t + 1.0)  # ln(sep/sep0) = c t + 1 for t > t0
        sep[0] = sep0                      # the reference sample itself
        base = np.zeros((n, 3))
        other = base.copy()
        other[:, 0] += sep
        a = synthetic_trajectory(t, base, dt=dt)
        b = synthetic_trajectory(t, other, dt=dt)
        series = lyapunov_series(a, b)
        assert series.eps == pytest.approx(c + 1.0 / series.t, rel=1e-10)
        window_start = series.t[int(np.floor(len(series.t) * 0.8))]
        limit = lyapunov_limit(series)
        assert c <= limit <= c + 1.0 / window_start + 1e-9

    def test_short_series_rejected(self):
        a, b = exponential_pair(n=20)
        series = lyapunov_series(a, b)
        with pytest.raises(TooShort):
            lyapunov_limit(series)


class TestFractalDimension:
    def test_linear_internal_time(self):
        # s = t: D(t) = ln(t/2)/ln(t); at t = 100 this is 0.849485
        t = np.arange(0.0, 100.0 + 1e-9, 0.01)
        series = fractal_dimension_series(t, t)
        assert series.t[-1] == pytest.approx(100.0, abs=1e-9)
        assert series.d[-1] == pytest.approx(np.log(50.0) / np.log(100.0), abs=1e-5)
        assert series.d[-1] == pytest.approx(0.8494850021680093, abs=1e-5)

    def test_constant_internal_time_decays_to_zero(self):
        t = np.arange(0.0, 1000.0 + 1e-9, 0.05)
        c = 7.3
        series = fractal_dimension_series(t, np.full_like(t, c))
        want = np.log(c) / np.log(series.t)
        assert series.d == pytest.approx(want, abs=1e-6)

    def test_power_law_closed_form(self):
        # s = t^p integrates to t^(p+1)/(p+1); D = (p ln t - ln(p+1)) / ln t
        t = np.arange(0.0, 1000.0 + 1e-9, 0.01)
        for p in (0.5, 1.0):
            series = fractal_dimension_series(t, t**p)
            want = (p * np.log(series.t) - np.log(p + 1.0)) / np.log(series.t)
            sel = series.t >= 999.0
            assert series.d[sel] == pytest.approx(want[sel], abs=1e-3)

    def test_sign_flip_invariance(self):
        t = np.arange(0.0, 50.0, 0.02)
        s = np.sin(0.1 * t) + 0.5 * t
        a = fractal_dimension_series(t, s)
        b = fractal_dimension_series(t, -s)
        assert a.d == pytest.approx(b.d, rel=1e-12)

    def test_zero_series_log_domain(self):
        t = np.arange(0.0, 10.0, 0.01)
        with pytest.raises(LogDomain):
            fractal_dimension_series(t, np.zeros_like(t))

    def test_grid_must_pass_one(self):
        t = np.arange(0.0, 0.9, 0.01)
        with pytest.raises(ValidationError):
            fractal_dimension_series(t, np.ones_like(t))

    def test_real_run_dimension_series(self):
        cfg = SimConfig(model=table1_row1_model(inertia=0.8), dt=1e-4,
                        steps=30_000, seed=5, decimation=100,
                        initial=JacobiState(rho=np.array(EQUILATERAL),
                                            rhod=np.array([1.0, 0.8, 0.6])))
        traj = simulate(cfg)
        series = trajectory_dimension(traj)
        assert len(series.t) > 0
        assert np.all(series.t > 1.0)
        assert np.isfinite(series.d[~np.isnan(series.d)]).all()
