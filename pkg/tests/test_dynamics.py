import numpy as np
import pytest

from trigeo.dynamics import (JacobiState, LocalState, SimConfig, reverse_run,
                             rhs, rk4_step, simulate, simulate_reference,
                             solve_frame, trajectory_pair)
from trigeo.errors import ForbiddenRegion, ValidationError
from trigeo.transforms import MetricSample

from conftest import EQUILATERAL, table1_row1_model


def make_cfg(steps=1000, seed=3, decimation=100, rhod=(0.01, 0.01, 0.10),
             inertia=0.30, rho=None, dt=1e-4):
    return SimConfig(model=table1_row1_model(inertia=inertia),
                     dt=dt, steps=steps, seed=seed, decimation=decimation,
                     initial=JacobiState(
                         rho=np.array(rho if rho is not None else EQUILATERAL),
                         rhod=np.array(rhod)))


class TestRhs:
    def test_flat_region_is_free(self):
        m = MetricSample(g=2.0, a=np.zeros(3), lam=0.7)
        out = rhs(LocalState(x=np.zeros(3), zeta=[0.3, -0.1, 0.9]), m)
        assert np.all(out[:3] == 0.0)
        assert out[3:] == pytest.approx([0.3, -0.1, 0.9], rel=1e-15)

    def test_rest_stays_at_rest(self):
        m = MetricSample(g=1.0, a=[0.4, -0.2, 0.1], lam=0.0)
        out = rhs(LocalState(x=np.ones(3), zeta=np.zeros(3)), m)
        assert np.all(out == 0.0)

    def test_single_axis_quadratic_form(self):
        m = MetricSample(g=1.0, a=[1.0, 0.0, 0.0], lam=0.0)
        out = rhs(LocalState(x=np.zeros(3), zeta=[1.0, 0.0, 0.0]), m)
        assert out == pytest.approx([1.0, 0.0, 0.0, 1.0, 0.0, 0.0], rel=1e-15)

    def test_cross_terms(self):
        # direct evaluation of the printed quadratic forms
        a = np.array([0.3, -0.5, 0.2])
        z = np.array([1.1, 0.7, -0.4])
        lam = 0.6
        m = MetricSample(g=1.0, a=a, lam=lam)
        out = rhs(LocalState(x=np.zeros(3), zeta=z), m)
        want = [
            a[0] * (z[0]**2 - z[1]**2 - z[2]**2 - lam**2) + 2*z[0]*(a[1]*z[1] + a[2]*z[2]),
            a[1] * (z[1]**2 - z[2]**2 - z[0]**2 - lam**2) + 2*z[1]*(a[2]*z[2] + a[0]*z[0]),
            a[2] * (z[2]**2 - z[0]**2 - z[1]**2 - lam**2) + 2*z[2]*(a[0]*z[0] + a[1]*z[1]),
        ]
        assert out[:3] == pytest.approx(want, rel=1e-14)

    def test_forbidden_metric(self):
        with pytest.raises(ForbiddenRegion):
            rhs(LocalState(x=np.zeros(3), zeta=np.zeros(3)),
                MetricSample(g=0.0, a=np.zeros(3), lam=0.0))


class TestRk4Step:
    def test_linear_decay_single_step(self):
        # y' = -y, y0 = 1, dt = 0.1: RK4 polynomial gives 0.90483750
        y1 = rk4_step(np.array([1.0]), 0.1, lambda y: -y)
        assert y1[0] == pytest.approx(0.90483750, abs=1e-8)
        assert abs(y1[0] - np.exp(-0.1)) < 1e-7

    def test_fourth_order_convergence(self):
        # halving dt shrinks the global error on [0, 1] by about 16
        def global_error(dt):
            y = np.array([1.0])
            for _ in range(int(round(1.0 / dt))):
                y = rk4_step(y, dt, lambda v: -v)
            return abs(y[0] - np.exp(-1.0))

        errors = [global_error(dt) for dt in (0.1, 0.05, 0.025, 0.0125)]
        orders = [np.log2(errors[i] / errors[i + 1]) for i in range(3)]
        assert all(3.8 <= o <= 4.2 for o in orders)

    def test_zero_rhs_keeps_state(self):
        y = np.array([1.0, -2.0, 3.0])
        assert np.array_equal(rk4_step(y, 0.5, lambda v: np.zeros(3)), y)

    def test_nonpositive_dt_rejected(self):
        with pytest.raises(ValidationError):
            rk4_step(np.array([1.0]), 0.0, lambda y: -y)

    def test_forbidden_stage_is_annotated(self):
        calls = []

        def rhs_eval(y):
            calls.append(1)
            if len(calls) >= 3:
                raise ForbiddenRegion(-0.1)
            return -y

        with pytest.raises(ForbiddenRegion) as exc_info:
            rk4_step(np.array([1.0]), 0.1, rhs_eval)
        assert exc_info.value.stage == 2


class TestSimulate:
    def test_stationary_full_equilibrium(self):
        # all pairs at their equilibrium distance, zero velocity, J = 0:
        # the state is a fixed point of the flow
        cfg = make_cfg(steps=200, rhod=(0.0, 0.0, 0.0), inertia=0.0,
                       rho=(np.sqrt(3.0), 2.0, np.pi / 2), decimation=1)
        traj = simulate(cfg)
        assert traj.termination == "completed"
        drift = np.abs(traj.x - traj.x[0]).max() + np.abs(traj.zeta - traj.zeta[0]).max()
        assert drift <= 1e-10

    def test_zero_steps_rejected(self):
        with pytest.raises(ValidationError):
            make_cfg(steps=0)

    def test_forbidden_start_raises(self):
        cfg = SimConfig(model=table1_row1_model(),
                        initial=JacobiState(rho=np.array([50.0, 60.0, 1.0]),
                                            rhod=np.zeros(3)),
                        steps=10)
        with pytest.raises(ForbiddenRegion):
            simulate(cfg)

    def test_bounded_short_run(self):
        traj = simulate(make_cfg(steps=20_000))
        assert traj.termination == "completed"
        assert traj.max_pair_distance < 40.0
        assert np.all(traj.g > 0.0)

    def test_deterministic_given_seed(self):
        a = simulate(make_cfg(steps=2000, seed=5))
        b = simulate(make_cfg(steps=2000, seed=5))
        assert np.array_equal(a.x, b.x)
        assert np.array_equal(a.s_components, b.s_components)

    def test_forbidden_termination_recorded_not_raised(self):
        # a barely-allowed start with outward motion crosses the turning
        # surface; the run stops and records the reason
        model = table1_row1_model()
        from dataclasses import replace
        low_e = replace(model, energy=0.25)
        cfg = SimConfig(model=low_e, steps=50_000, decimation=10,
                        initial=JacobiState(rho=np.array(EQUILATERAL),
                                            rhod=np.array([-20.0, -20.0, 0.0])),
                        seed=2)
        traj = simulate(cfg)
        assert traj.termination == "forbidden"
        assert traj.steps_completed < 50_000
        assert np.all(traj.g > 0.0)  # records stop at the last good state

    def test_kernel_matches_reference_implementation(self):
        cfg = make_cfg(steps=50, decimation=1, seed=8)
        unit = solve_frame(cfg)
        traj = simulate(cfg, unit=unit)
        ref = simulate_reference(cfg, unit=unit)
        assert len(ref) == 51 and len(traj) == 51
        for i in (1, 10, 25, 50):
            x_ref, z_ref, rho_ref, rhod_ref, g_ref, s_ref = ref[i]
            assert traj.x[i] == pytest.approx(x_ref, rel=1e-12, abs=1e-14)
            assert traj.zeta[i] == pytest.approx(z_ref, rel=1e-12, abs=1e-14)
            assert traj.rho[i] == pytest.approx(rho_ref, rel=1e-12, abs=1e-14)
            assert traj.rhod[i] == pytest.approx(rhod_ref, rel=1e-12, abs=1e-14)
            assert traj.g[i] == pytest.approx(g_ref, rel=1e-12)
            assert traj.s_components[i] == pytest.approx(s_ref, rel=1e-10, abs=1e-15)


class TestReverseRun:
    def test_thousand_step_retrace(self):
        cfg = make_cfg(steps=1000, decimation=1000)
        fwd = simulate(cfg)
        back = reverse_run(fwd)
        x0, z0 = fwd.x[0], fwd.zeta[0]
        err = np.sqrt(np.sum((back.final_local.x - x0) ** 2)
                      + np.sum((-back.final_local.zeta - z0) ** 2))
        assert err / np.sqrt(np.sum(x0**2) + np.sum(z0**2)) <= 1e-6

    def test_single_step_round_trip(self):
        cfg = make_cfg(steps=1, decimation=1)
        fwd = simulate(cfg)
        back = reverse_run(fwd)
        assert back.final_local.x == pytest.approx(fwd.x[0], abs=1e-12)

    def test_internal_time_negates(self):
        cfg = make_cfg(steps=1000, decimation=1000)
        fwd = simulate(cfg)
        back = reverse_run(fwd)
        s_fwd = fwd.final_s_components.sum()
        s_back = back.final_s_components.sum()
        assert s_back == pytest.approx(-s_fwd, rel=1e-6)

    def test_reverse_of_terminated_run_rejected(self):
        from dataclasses import replace
        model = replace(table1_row1_model(), energy=0.25)
        cfg = SimConfig(model=model, steps=50_000, decimation=10,
                        initial=JacobiState(rho=np.array(EQUILATERAL),
                                            rhod=np.array([-20.0, -20.0, 0.0])),
                        seed=2)
        traj = simulate(cfg)
        assert traj.termination == "forbidden"
        with pytest.raises(ValidationError):
            reverse_run(traj)


class TestTrajectoryPair:
    def test_shared_frame_and_offset(self):
        cfg = make_cfg(steps=500, decimation=100, seed=6)
        base, pert = trajectory_pair(cfg, perturbation=1e-2, component=0)
        assert base.frame is pert.frame
        assert pert.config.initial.rhod[0] == pytest.approx(
            cfg.initial.rhod[0] + 1e-2, rel=1e-15)
        assert not np.array_equal(base.s_components[-1], pert.s_components[-1])
