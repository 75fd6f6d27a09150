import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.stats import ks_2samp

from synclab import _kernels
from synclab.flow import (
    CircleState,
    Ensemble,
    PolarState,
    advance_ensemble,
    circle_distance,
    circle_step,
    ode_flow,
    polar_step,
    pullback_attractor_sample,
    sde_step,
    sphere_sample,
    square_grid,
)
from synclab.noise import NoisePath, scaled_view
from synclab.potential import RadialPotential

QUARTIC = RadialPotential.quartic(0.5)


class TestOdeFlow:
    def test_origin_is_fixed(self):
        x = ode_flow(QUARTIC, [0.0, 0.0], T=5.0, dt=1e-3)
        assert np.all(x == 0.0)

    def test_relaxes_to_unit_sphere(self):
        x = ode_flow(QUARTIC, [2.0, 0.0], T=50.0, dt=1e-3)
        assert abs(np.linalg.norm(x) - 1.0) <= 1e-6

    def test_matches_reference_integrator_radially(self):
        # independent oracle: radial equation dr/dt = -2 r profile'(r^2)
        sol = solve_ivp(lambda t, r: -2.0 * r * (r * r - 1.0), (0, 3.0), [2.0],
                        rtol=1e-10, atol=1e-12)
        x = ode_flow(QUARTIC, [2.0, 0.0], T=3.0, dt=1e-4)
        assert np.linalg.norm(x) == pytest.approx(sol.y[0, -1], abs=5e-4)

    def test_sphere_points_are_fixed(self):
        x0 = np.array([0.0, 1.0])
        x = ode_flow(QUARTIC, x0, T=1.0, dt=1e-3)
        np.testing.assert_array_equal(x, x0)


class TestSdeStep:
    def test_zero_noise_equals_euler_step_bitwise(self):
        x0 = np.array([[1.7, -0.4], [0.2, 0.1]])
        ens = Ensemble(points=x0, eps=0.0)
        sde_step(QUARTIC, ens, np.zeros(2), dt=1e-3)
        euler = x0 + (-QUARTIC.gradient(x0)) * 1e-3
        np.testing.assert_array_equal(ens.points, euler)

    def test_identical_points_stay_identical(self):
        ens = Ensemble(points=[[0.5, 0.5], [0.5, 0.5]], eps=0.3)
        path = NoisePath(master_seed=3, stream_id=0, dt=1e-3)
        advance_ensemble(QUARTIC, ens, path, 2000)
        np.testing.assert_array_equal(ens.points[0], ens.points[1])

    def test_one_step_mean_displacement_matches_drift(self):
        eps, dt, n = 0.25, 1e-3, 100_000
        w = NoisePath(master_seed=21, stream_id=0, dt=dt).take(n)
        x0 = np.array([2.0, 0.0])
        moved = x0 + (-QUARTIC.gradient(x0)) * dt + math.sqrt(eps) * w
        mean_disp = (moved - x0).mean(axis=0)
        tol = 3.0 * math.sqrt(eps * dt / n)
        assert np.all(np.abs(mean_disp - np.array([-12.0, 0.0]) * dt) <= tol)

    def test_cocycle_at_step_granularity(self):
        ens_a = Ensemble(points=[[1.3, 0.2], [-0.4, 0.8]], eps=0.1)
        advance_ensemble(QUARTIC, ens_a, NoisePath(1, 5, 1e-3), 700 + 4300)

        ens_b = Ensemble(points=[[1.3, 0.2], [-0.4, 0.8]], eps=0.1)
        path = NoisePath(1, 5, 1e-3)
        advance_ensemble(QUARTIC, ens_b, path, 700)
        advance_ensemble(QUARTIC, ens_b, path, 4300)
        np.testing.assert_array_equal(ens_a.points, ens_b.points)

    def test_kernel_matches_python_step_bitwise(self):
        pts = np.array([[0.9, -0.3], [1.5, 0.7], [0.0, 0.0]])
        path = NoisePath(13, 2, 1e-3)
        w = path.increments(0, 50)

        ens = Ensemble(points=pts, eps=0.2)
        for k in range(50):
            sde_step(QUARTIC, ens, w[k], dt=1e-3)

        kernel_pts = pts.copy()
        _kernels.advance_ensemble(kernel_pts, np.asarray(QUARTIC.dcoeffs),
                                  1e-3, math.sqrt(0.2), w, 1e6)
        np.testing.assert_array_equal(ens.points, kernel_pts)

    def test_ray_order_preserved_without_noise(self):
        # stop while the gap is still resolvable in double precision
        inner = np.array([0.3, 0.0])
        outer = np.array([0.7, 0.0])
        for _ in range(2_000):
            inner = inner + (-QUARTIC.gradient(inner)) * 1e-3
            outer = outer + (-QUARTIC.gradient(outer)) * 1e-3
            assert np.linalg.norm(inner) < np.linalg.norm(outer)


class TestPolarStep:
    def test_ito_term_alone_when_profile_is_flat(self):
        flat = RadialPotential.custom([1.0])  # constant profile, derivative 0
        state = PolarState(r_sq=0.5, phi=0.3)
        out = polar_step(flat, state, eps=0.2, dW=np.zeros(2), dt=1e-4)
        assert out.r_sq == 0.5 + 2.0 * 1e-4

    def test_radial_drift_negative_outside_well(self):
        state = PolarState(r_sq=4.0, phi=0.0)
        for eps in (1.0, 0.5, 0.1):
            out = polar_step(QUARTIC, state, eps=eps, dW=np.zeros(2), dt=1e-4)
            det_part = out.r_sq - 4.0
            assert det_part < 0.0

    def test_collapse_raises(self):
        from synclab.flow import RadiusCollapse
        state = PolarState(r_sq=1e-9, phi=0.0)
        with pytest.raises(RadiusCollapse):
            polar_step(QUARTIC, state, eps=0.1, dW=np.zeros(2))

    def test_kernel_pair_matches_python_steps_bitwise(self):
        path = NoisePath(17, 0, 1e-4)
        w = path.increments(0, 200)
        ps = PolarState(r_sq=1.0, phi=0.2)
        cs = CircleState(z=0.2)
        for k in range(200):
            ps = polar_step(QUARTIC, ps, eps=0.1, dW=w[k], dt=1e-4)
            cs = circle_step(cs, w[k], dt=1e-4)

        state = np.array([1.0, 0.2, 0.2])
        track = np.zeros(2)
        status = _kernels.polar_circle_pair(state, np.asarray(QUARTIC.dcoeffs),
                                            1e-4, 0.1, w, 1e-8, True, track)
        assert status == _kernels.NO_HIT
        assert state[0] == ps.r_sq
        assert state[1] == ps.phi
        assert state[2] == cs.z


class TestCircleStep:
    def test_quadratic_variation_matches_step_size(self):
        dt = 1e-3
        w = NoisePath(23, 0, dt).take(100_000)
        z0 = 0.77
        dz = -math.sin(z0) * w[:, 0] + math.cos(z0) * w[:, 1]
        assert abs(dz.var() - dt) / dt <= 0.02

    def test_full_rotation_equivariance(self):
        path = NoisePath(23, 1, 1e-3)
        a = CircleState(z=0.4)
        b = CircleState(z=0.4 + 2.0 * math.pi)
        for w in path.take(10_000):
            a = circle_step(a, w)
            b = circle_step(b, w)
        assert abs((b.z - a.z) - 2.0 * math.pi) <= 1e-9

    def test_antipodal_pair_has_zero_chord_diffusion(self):
        # two-point generator evaluation at separation pi versus pi/2
        dt = 1e-3
        w = NoisePath(23, 2, dt).take(100_000)
        z = 1.1

        def chord_change(sep):
            za = z + (-math.sin(z) * w[:, 0] + math.cos(z) * w[:, 1])
            zb = (z + sep) + (-math.sin(z + sep) * w[:, 0] + math.cos(z + sep) * w[:, 1])
            gap = zb - za
            return 2.0 * np.sin(gap / 2.0) - 2.0 * math.sin(sep / 2.0)

        dc_antipodal = chord_change(math.pi)
        dc_generic = chord_change(math.pi / 2.0)
        assert dc_antipodal.var() <= 20.0 * dt * dt          # O(dt^2): no diffusion
        assert dc_generic.var() >= 0.3 * dt                  # O(dt): diffusive
        # the separation itself is a martingale at the antipode
        za = z + (-math.sin(z) * w[:, 0] + math.cos(z) * w[:, 1])
        zb = (z + math.pi) + (math.sin(z) * w[:, 0] - math.cos(z) * w[:, 1])
        mean_sep = (zb - za).mean()
        assert abs(mean_sep - math.pi) <= 4.0 * math.sqrt(4.0 * dt / w.shape[0])

    def test_circle_distance_is_modular(self):
        assert circle_distance(0.1, 0.1 + 2 * math.pi) == pytest.approx(0.0, abs=1e-12)
        assert circle_distance(0.0, math.pi) == pytest.approx(math.pi)
        assert circle_distance(-0.3, 0.3) == pytest.approx(0.6)


class TestPullback:
    def test_zero_noise_cloud_lands_on_fixed_set(self):
        grid = np.vstack([[0.0, 0.0], sphere_sample(6, 0.3), sphere_sample(6, 1.8),
                          sphere_sample(4, 2.7)])
        path = NoisePath(31, 0, 1e-3)
        cloud = pullback_attractor_sample(QUARTIC, 0.0, path, T_pullback=30.0, grid=grid)
        radii = np.linalg.norm(cloud, axis=1)
        dist_to_fixed_set = np.minimum(np.abs(radii - 1.0), radii)
        assert np.max(dist_to_fixed_set) <= 1e-6

    def test_cloud_diameter_shrinks_with_window(self):
        eps = 0.1
        grid = np.vstack([sphere_sample(8, 0.6), sphere_sample(8, 1.4)])
        diams = []
        for T in (10.0 / eps, 20.0 / eps, 40.0 / eps):
            path = NoisePath(31, 1, 1e-3)
            cloud = pullback_attractor_sample(QUARTIC, eps, path, T, grid,
                                              exclude_origin=True)
            diff = cloud[:, None, :] - cloud[None, :, :]
            diams.append(np.max(np.linalg.norm(diff, axis=-1)))
        assert diams[0] > diams[1] > diams[2]

    def test_radius_distribution_invariant_under_grid_rotation(self):
        # one summary radius per replica: radii within a cloud share the
        # replica's noise and are not independent draws
        eps = 0.15
        grid = square_grid(1.5, 5)
        theta = 0.9
        rot = np.array([[math.cos(theta), -math.sin(theta)],
                        [math.sin(theta), math.cos(theta)]])
        radii_plain, radii_rot = [], []
        for stream in range(60):
            path_a = NoisePath(77, stream, 1e-3)
            cloud = pullback_attractor_sample(QUARTIC, eps, path_a, 40.0, grid,
                                              exclude_origin=True)
            radii_plain.append(np.linalg.norm(cloud, axis=1).mean())
            path_b = NoisePath(77, 100 + stream, 1e-3)
            cloud = pullback_attractor_sample(QUARTIC, eps, path_b, 40.0, grid @ rot.T,
                                              exclude_origin=True)
            radii_rot.append(np.linalg.norm(cloud, axis=1).mean())
        stat = ks_2samp(radii_plain, radii_rot)
        assert stat.pvalue > 0.01


def test_time_change_consistency_of_clocks():
    # the original-clock chain and the accelerated chain driven through the
    # scaled view of the same stream traverse the same states
    eps = 0.1
    base = NoisePath(41, 0, 1e-3)
    ens = Ensemble(points=[[1.2, 0.5]], eps=eps)
    advance_ensemble(QUARTIC, ens, base, 5000)

    view = scaled_view(NoisePath(41, 0, 1e-3), eps)
    y = np.array([1.2, 0.5])
    dt_acc = view.dt
    w = view.take(5000)
    for k in range(5000):
        s = y @ y
        y = y + (-(2.0 * QUARTIC.dprofile(s) / eps) * y) * dt_acc + w[k]
    np.testing.assert_allclose(ens.points[0], y, atol=1e-9)
