"""Forward-flow tests against the exact vertical-slit solution.

With zero driving the flow is g_t(z) = sqrt(z^2 + 4t) (upper-half-plane
branch), which gives closed forms for every quantity the module computes:
swallowing times, derivative moduli, conformal radii, capacities.  Those
serve as the oracle; random driving paths then exercise the invariants
that hold for any admissible flow.
"""

import math

import numpy as np
import pytest

from sleflow.loewner import (
    DrivingPath,
    FlowPoint,
    HullReport,
    SwallowedPointError,
    advance_flow,
    conformal_radius,
    flow_point,
    hcap_consistency,
    hcap_estimate,
    hull_report,
    log_gprime_direct,
    run_flow,
    snapshot_csv,
    track_flow,
)


def slit_map(z: complex, t: float) -> complex:
    """g_t for zero driving, principal branch folded into Im >= 0."""
    g = np.sqrt(complex(z) ** 2 + 4.0 * t)
    return -g if g.imag < 0.0 else g


def zero_driving(T: float, n: int) -> DrivingPath:
    return DrivingPath.constant(0.0, T, n)


class TestSlitOracle:
    def test_vertical_ray_stays_vertical(self):
        drv = zero_driving(0.2, 4000)
        for y in (1.0, 2.0, 3.5):
            (pt,) = run_flow(drv, [y * 1j])
            assert pt.X == 0.0
            assert pt.Y == pytest.approx(math.sqrt(y * y - 0.8), rel=1e-12)

    def test_off_axis_matches_complex_sqrt(self):
        drv = zero_driving(0.15, 3000)
        z0s = [0.5 + 1.0j, -1.2 + 0.3j, 2.0 + 2.0j, 0.01 + 0.8j]
        pts = run_flow(drv, z0s)
        for z0, pt in zip(z0s, pts):
            g = slit_map(z0, 0.15)
            assert pt.X == pytest.approx(g.real, abs=1e-12)
            assert pt.Y == pytest.approx(g.imag, abs=1e-12)

    def test_many_steps_compose_to_one(self):
        # n zero-driving steps of dt compose to a single step of n*dt
        # exactly, because each step is the same algebraic map
        T = 0.3
        fine = run_flow(zero_driving(T, 3000), [0.7 + 1.1j])[0]
        one = run_flow(zero_driving(T, 1), [0.7 + 1.1j])[0]
        assert fine.X == pytest.approx(one.X, abs=5e-13)
        assert fine.Y == pytest.approx(one.Y, abs=5e-13)

    def test_swallow_time_of_i(self):
        # i is absorbed at t = 1/4: Y(t) = sqrt(1 - 4t)
        n = 50000
        drv = zero_driving(0.5, n)
        (pt,) = run_flow(drv, [1j])
        assert not pt.alive
        assert pt.status == f"swallowed({pt.t_swallow!r})"
        assert pt.t_swallow == pytest.approx(0.25, abs=2 * drv.dt)
        assert pt.log_upsilon == -math.inf

    def test_single_step_capacity_identity(self):
        # one zero-driving step: Y_new^2 = Y_old^2 - 4 dt exactly
        dt = 1e-3
        pt = flow_point(2.0j)
        advance_flow([pt], 0.0, 0.0, dt)
        assert pt.Y * pt.Y == pytest.approx(4.0 - 4.0 * dt, rel=1e-15)


class TestLogGprime:
    def test_zero_at_time_zero(self):
        (pt,) = run_flow(zero_driving(0.1, 100), [1.5j], k=0)
        assert pt.log_gprime == 0.0
        hist = track_flow(zero_driving(0.1, 100), 1.5j)
        assert log_gprime_direct(hist, 0) == 0.0

    def test_slit_closed_form(self):
        # g_t'(z) = z / sqrt(z^2 + 4t); on the imaginary axis
        # |g'(iy)| = y / sqrt(y^2 - 4t)
        T, y = 0.2, 2.0
        hist = track_flow(zero_driving(T, 2000), y * 1j)
        want = math.log(y / math.sqrt(y * y - 4 * T))
        got = hist.log_gprime[hist.n_valid - 1]
        assert got == pytest.approx(want, abs=1e-12)
        assert log_gprime_direct(hist) == pytest.approx(want, abs=1e-8)

    def test_quadrature_agrees_with_accumulator(self):
        drv = DrivingPath.brownian(6.0, 1.0, 10000, seed=7)
        hist = track_flow(drv, 1.5j)
        k = hist.last_alive
        direct = log_gprime_direct(hist, k)
        assert direct == pytest.approx(hist.log_gprime[k], abs=10 * drv.dt)

    def test_rejects_steps_past_swallowing(self):
        drv = zero_driving(0.5, 20000)
        hist = track_flow(drv, 1j)
        assert hist.k_swallow >= 0
        with pytest.raises(SwallowedPointError):
            log_gprime_direct(hist, hist.last_alive + 1)


class TestConformalRadius:
    def test_time_zero_is_height(self):
        pt = flow_point(0.3 + 2.5j)
        assert conformal_radius(pt) == pytest.approx(2.5, rel=1e-15)

    def test_slit_closed_form(self):
        # Upsilon_t(iy) = Y / |g'| = (y^2 - 4t) / y
        T, y = 0.2, 2.0
        (pt,) = run_flow(zero_driving(T, 2000), [y * 1j])
        assert conformal_radius(pt) == pytest.approx((y * y - 4 * T) / y, rel=1e-12)

    def test_monotone_decreasing_along_flow(self):
        drv = DrivingPath.brownian(8.0 / 3.0, 0.5, 5000, seed=11)
        hist = track_flow(drv, 0.4 + 1.2j)
        lu = hist.log_upsilon
        assert lu[0] == pytest.approx(math.log(1.2), abs=1e-14)
        assert np.all(np.diff(lu) <= 1e-12)

    def test_raises_after_swallowing(self):
        (pt,) = run_flow(zero_driving(0.5, 20000), [1j])
        with pytest.raises(SwallowedPointError):
            conformal_radius(pt)


class TestHcap:
    def test_zero_at_time_zero(self):
        drv = zero_driving(0.1, 100)
        assert hcap_estimate(drv, 0, R=50.0) == pytest.approx(0.0, abs=1e-12)

    def test_slit_matches_evaluation_identity(self):
        # zero driving: Im g_t(iR) = sqrt(R^2 - 4t), so the estimator
        # equals R(R - sqrt(R^2 - 4t)) up to discretisation only
        T = 0.2
        drv = zero_driving(T, 2000)
        for R in (10.0, 100.0, 1000.0):
            want = R * (R - math.sqrt(R * R - 4 * T))
            # rounding drift of Y over n steps is amplified by the
            # R(R - Y) cancellation; 1e-6 is still far below truncation
            assert hcap_estimate(drv, R=R) == pytest.approx(want, rel=1e-6)

    def test_slit_one_percent_window(self):
        for T in (0.04, 0.25):
            drv = zero_driving(T, 4000)
            R = 100.0 * math.sqrt(T)
            est = hcap_estimate(drv, R=R)
            assert est == pytest.approx(2.0 * T, rel=1e-2)

    def test_brownian_capacity_parametrisation(self):
        # driving normalised so hcap(t) = 2t; kappa = 6 sample at t = 1
        drv = DrivingPath.brownian(6.0, 1.0, 10000, seed=7)
        est = hcap_estimate(drv, R=1000.0)
        assert est == pytest.approx(2.0, rel=2e-2)
        est_hi, agree = hcap_consistency(drv, drv.n_steps)
        assert agree
        assert est_hi == est

    def test_rejects_swallowed_probe(self):
        drv = zero_driving(0.5, 100)
        with pytest.raises(ValueError):
            hcap_estimate(drv, R=1.0)


class TestFlowInvariants:
    def test_per_step_capacity_bound(self):
        # each step eats between 0 and 4 dt of squared height
        drv = DrivingPath.brownian(8.0, 0.5, 2000, seed=3)
        hist = track_flow(drv, 0.1 + 1.0j)
        y2 = hist.Y[: hist.n_valid] ** 2
        drops = -np.diff(y2)
        assert np.all(drops >= -1e-15)
        assert np.all(drops <= 4.0 * drv.dt + 1e-12)

    def test_real_part_monotone_right_of_driving(self):
        drv = DrivingPath.brownian(4.0, 0.5, 2000, seed=5)
        lead = float(np.max(drv.xi) - drv.xi[0]) + 1.0
        hist = track_flow(drv, complex(lead, 0.5))
        # absolute real part X + xi must be nondecreasing
        x_abs = hist.X[: hist.n_valid] + drv.xi[: hist.n_valid]
        assert np.all(np.diff(x_abs) >= -1e-12)

    def test_swallowed_point_stays_swallowed(self):
        pt = flow_point(1j)
        dt = 0.26 / 2
        advance_flow([pt], 0.0, 0.0, dt)
        advance_flow([pt], 0.0, 0.0, dt, t_new=2 * dt)
        assert not pt.alive
        frozen = (pt.X, pt.Y, pt.log_gprime, pt.t_swallow)
        advance_flow([pt], 0.0, 1.0, dt, t_new=3 * dt)
        assert (pt.X, pt.Y, pt.log_gprime, pt.t_swallow) == frozen

    def test_scalar_steps_match_batch(self):
        drv = DrivingPath.brownian(2.0, 0.1, 500, seed=13)
        pt = flow_point(0.4 + 0.9j, xi0=float(drv.xi[0]))
        for k in range(drv.n_steps):
            advance_flow([pt], float(drv.xi[k]), float(drv.xi[k + 1]),
                         drv.dt, t_new=(k + 1) * drv.dt)
        (bp,) = run_flow(drv, [0.4 + 0.9j])
        assert pt.X == pytest.approx(bp.X, abs=1e-13)
        assert pt.Y == pytest.approx(bp.Y, abs=1e-13)
        assert pt.log_gprime == pytest.approx(bp.log_gprime, abs=1e-12)

    def test_constant_driving_translates_slit(self):
        # xi = c shifts the whole picture: z_t = c + sqrt((z0-c)^2 + 4t)
        c, T = -0.75, 0.1
        drv = DrivingPath.constant(c, T, 1000)
        z0 = 0.2 + 1.3j
        (pt,) = run_flow(drv, [z0])
        g = slit_map(z0 - c, T)
        assert pt.X == pytest.approx(g.real, abs=1e-12)
        assert pt.Y == pytest.approx(g.imag, abs=1e-12)


class TestDrivingPath:
    def test_brownian_increment_statistics(self):
        kappa, T, n = 3.0, 2.0, 20000
        drv = DrivingPath.brownian(kappa, T, n, seed=42)
        assert drv.xi[0] == 0.0
        assert drv.n_steps == n
        assert drv.dt == pytest.approx(T / n)
        inc = drv.dxi
        var = float(np.var(inc))
        # 3 sigma band for the sample variance of n gaussians
        sd = kappa * drv.dt * math.sqrt(2.0 / n)
        assert abs(var - kappa * drv.dt) < 3 * sd
        assert abs(float(np.mean(inc))) < 3 * math.sqrt(kappa * drv.dt / n)

    def test_brownian_default_step_count(self):
        drv = DrivingPath.brownian(2.0, 1.0, seed=1)
        assert drv.n_steps == 10000

    def test_seed_reproducibility(self):
        a = DrivingPath.brownian(2.0, 1.0, 100, seed=9)
        b = DrivingPath.brownian(2.0, 1.0, 100, seed=9)
        c = DrivingPath.brownian(2.0, 1.0, 100, seed=10)
        assert np.array_equal(a.xi, b.xi)
        assert not np.array_equal(a.xi, c.xi)

    def test_validation(self):
        with pytest.raises(ValueError):
            DrivingPath(dt=0.0, xi=np.zeros(3), generator="samples", kappa=None)
        with pytest.raises(ValueError):
            DrivingPath(dt=0.1, xi=np.array([0.5, 0.0]), generator="samples",
                        kappa=None)
        with pytest.raises(ValueError):
            DrivingPath.from_samples([0.0, 0.1, 0.3], [0.0, 1.0, 2.0])

    def test_csv_round_trip(self, tmp_path):
        drv = DrivingPath.brownian(6.0, 1.0, 257, seed=21)
        f = tmp_path / "driving.csv"
        drv.to_csv(f)
        back = DrivingPath.from_csv(f)
        assert back.dt == pytest.approx(drv.dt, rel=1e-12)
        np.testing.assert_array_equal(back.xi, drv.xi)


class TestHullReport:
    def test_slit_report(self):
        T = 0.25
        rep = hull_report(zero_driving(T, 4000))
        assert rep.t == pytest.approx(T)
        assert rep.hcap_est == pytest.approx(2 * T, rel=1e-2)
        # the hull is the segment [0, 2i sqrt(T)]
        assert rep.height_est == pytest.approx(2 * math.sqrt(T), rel=1e-2)
        assert rep.diam_est == pytest.approx(2 * math.sqrt(T), rel=1e-2)

    @pytest.mark.parametrize("kappa,seed", [(2.0, 1), (6.0, 7), (6.0, 23)])
    def test_comparability_inequalities(self, kappa, seed):
        drv = DrivingPath.brownian(kappa, 1.0, 4000, seed=seed)
        rep = hull_report(drv)
        assert rep.height_est > 0.0
        assert rep.diam_est >= rep.height_est
        assert rep.height_est ** 2 <= 4.0 * rep.hcap_est
        assert rep.hcap_est <= 4.0 * rep.diam_est * rep.height_est


def test_snapshot_csv_round_trip(tmp_path):
    drv = DrivingPath.brownian(6.0, 0.5, 2000, seed=2)
    pts = run_flow(drv, [0.3 + 0.8j, 1j, -0.5 + 0.2j])
    f = tmp_path / "snap.csv"
    snapshot_csv(f, pts)
    lines = f.read_text().strip().split("\n")
    assert lines[0] == "re0,im0,X,Y,log_gprime,status"
    assert len(lines) == 4
    for pt, line in zip(pts, lines[1:]):
        cells = line.split(",", 5)
        assert float(cells[0]) == pt.z0.real
        assert float(cells[2]) == pt.X
        assert cells[5] == pt.status
