import numpy as np
import pytest
from scipy.integrate import quad

import poissonext as px


def theta_oracle(params):
    """Radial oracle for the ball mass of the kernel (adjoint of constants)."""
    val, err = quad(
        lambda r: r ** (params.n - 1) * px.kernel_ball_sphere_mass(r, params),
        0.0, 1.0, limit=400, points=[1.0 - 1e-9],
    )
    assert err < 1e-10
    return val


class TestExtendBall:
    def test_classical_constant_extension_is_one(self, op_3d, sphere_3d):
        one = px.BoundaryFunction(np.ones(len(sphere_3d)), sphere_3d)
        field = op_3d.extend(one)
        assert np.max(np.abs(field.values - 1.0)) < 1e-6

    def test_constant_extension_matches_sphere_mass(self, op_2d, sphere_2d, ball_2d, params_2d):
        one = px.BoundaryFunction(np.ones(len(sphere_2d)), sphere_2d)
        field = op_2d.extend(one)
        expected = px.kernel_ball_sphere_mass(ball_2d.radii, params_2d)
        assert np.max(np.abs(field.values - expected)) < 1e-10

    def test_value_at_center_for_general_a(self, sphere_2d, params_2d):
        one = px.BoundaryFunction(np.ones(len(sphere_2d)), sphere_2d)
        k = px.KernelConstants.for_params(params_2d)
        val = px.extend_at_points(one, np.zeros((1, 2)), params_2d)[0]
        assert val == pytest.approx(k.ball_prefactor * 2 * np.pi, rel=1e-12)

    def test_linearity(self, op_2d, sphere_2d, rng):
        v1 = rng.normal(size=len(sphere_2d))
        v2 = rng.normal(size=len(sphere_2d))
        lhs = op_2d.extend_values(2.5 * v1 - 0.3 * v2)
        rhs = 2.5 * op_2d.extend_values(v1) - 0.3 * op_2d.extend_values(v2)
        assert np.max(np.abs(lhs - rhs)) < 1e-12 * np.max(np.abs(rhs))

    def test_positivity_exact_including_spikes(self, op_2d, sphere_2d, rng):
        # adversarial single-node data: positivity must hold elementwise
        for j in (0, 1, len(sphere_2d) // 2):
            spike = np.zeros(len(sphere_2d))
            spike[j] = 1.0
            assert np.all(op_2d.extend_values(spike) > 0)
        smooth = np.abs(rng.normal(size=len(sphere_2d)))
        assert np.all(op_2d.extend_values(smooth) > 0)

    def test_quadrature_mismatch_rejected(self, op_2d, params_2d):
        other = px.build_sphere_quadrature(params_2d, 32)
        v = px.BoundaryFunction(np.ones(len(other)), other)
        with pytest.raises(ValueError):
            op_2d.extend(v)

    def test_interior_point_accuracy_against_fine_reference(self, params_2d, rng):
        # pure point evaluation converges spectrally in the sphere resolution
        coarse = px.build_sphere_quadrature(params_2d, 64)
        fine = px.build_sphere_quadrature(params_2d, 256)
        theta_c = np.arctan2(coarse.nodes[:, 1], coarse.nodes[:, 0])
        theta_f = np.arctan2(fine.nodes[:, 1], fine.nodes[:, 0])
        fun = lambda t: 1.0 + 0.4 * np.cos(2 * t) - 0.2 * np.sin(3 * t)
        pts = 0.7 * rng.normal(size=(20, 2))
        pts /= np.maximum(1.0, np.linalg.norm(pts, axis=1, keepdims=True) / 0.6)
        vc = px.BoundaryFunction(fun(theta_c), coarse)
        vf = px.BoundaryFunction(fun(theta_f), fine)
        ec = px.extend_at_points(vc, pts, params_2d)
        ef = px.extend_at_points(vf, pts, params_2d)
        assert np.max(np.abs(ec - ef)) < 1e-9


class TestAdjointAndDuality:
    def test_duality_random(self, op_3d, sphere_3d, ball_3d, rng):
        v = rng.random(len(sphere_3d))
        f = rng.random(len(ball_3d))
        lhs = np.dot(ball_3d.weights, op_3d.extend_values(v) * f)
        rhs = np.dot(sphere_3d.weights, v * op_3d.adjoint_values(f))
        assert abs(lhs - rhs) <= 1e-10 * abs(lhs)

    def test_adjoint_of_constants_matches_radial_oracle(self, op_3d, ball_3d, params_3d):
        t1 = op_3d.adjoint_values(np.ones(len(ball_3d)))
        assert t1 == pytest.approx(theta_oracle(params_3d), abs=1e-8)

    def test_adjoint_of_constants_classical_third(self, op_3d, ball_3d):
        # n=3, a=0: the ball mass of the kernel is exactly 1/3
        t1 = op_3d.adjoint_values(np.ones(len(ball_3d)))
        assert np.max(np.abs(t1 - 1.0 / 3.0)) < 1e-9

    def test_adjoint_of_constants_2d(self, op_2d, ball_2d, params_2d):
        t1 = op_2d.adjoint_values(np.ones(len(ball_2d)))
        assert t1 == pytest.approx(theta_oracle(params_2d), abs=1e-8)

    def test_adjoint_positivity(self, op_2d, ball_2d, rng):
        f = np.abs(rng.normal(size=len(ball_2d)))
        assert np.all(op_2d.adjoint_values(f) > 0)
        spike = np.zeros(len(ball_2d))
        spike[-1] = 1.0
        assert np.all(op_2d.adjoint_values(spike) > 0)


class TestAntipodalEquivariance:
    def test_extension_equivariance_bitwise(self, op_2d, sphere_2d, ball_2d, rng):
        v = rng.normal(size=len(sphere_2d))
        flipped = op_2d.extend_values(v[sphere_2d.antipode_index])
        straight = op_2d.extend_values(v)[ball_2d.antipode_index]
        assert np.array_equal(flipped, straight)

    def test_extension_equivariance_bitwise_3d(self, op_3d, sphere_3d, ball_3d, rng):
        v = rng.normal(size=len(sphere_3d))
        flipped = op_3d.extend_values(v[sphere_3d.antipode_index])
        straight = op_3d.extend_values(v)[ball_3d.antipode_index]
        assert np.array_equal(flipped, straight)

    def test_adjoint_maps_antipodal_to_antipodal(self, op_2d, sphere_2d, ball_2d, rng):
        f = rng.random(len(ball_2d))
        f = 0.5 * (f + f[ball_2d.antipode_index])
        t = op_2d.adjoint_values(f)
        assert np.array_equal(t, t[sphere_2d.antipode_index])


class TestCorrectionModes:
    def test_none_mode_is_raw_quadrature(self, params_2d, sphere_2d, ball_2d, rng):
        raw = px.ExtensionOperator(params_2d, sphere_2d, ball_2d, correction="none")
        v = rng.normal(size=len(sphere_2d))
        manual = px.kernel_ball(
            sphere_2d.nodes[None, :, :], ball_2d.nodes[:, None, :], params_2d
        ) @ (sphere_2d.weights * v)
        got = raw.extend_values(v)
        assert np.max(np.abs(got - manual) / np.abs(manual)) < 1e-10

    def test_balanced_mode_repairs_boundary_layer(self, params_2d, sphere_2d, ball_2d):
        raw = px.ExtensionOperator(params_2d, sphere_2d, ball_2d, correction="none")
        bal = px.ExtensionOperator(params_2d, sphere_2d, ball_2d, correction="balanced")
        one = np.ones(len(sphere_2d))
        target = px.kernel_ball_sphere_mass(ball_2d.radii, params_2d)
        raw_err = np.max(np.abs(raw.extend_values(one) / target - 1.0))
        bal_err = np.max(np.abs(bal.extend_values(one) / target - 1.0))
        assert raw_err > 1.0          # raw rows overshoot in the boundary layer
        assert bal_err < 1e-10

    def test_scalings_are_near_one_in_the_interior(self, op_2d, ball_2d):
        interior = ball_2d.radii < 0.5
        assert np.max(np.abs(op_2d.row_scale[interior] - 1.0)) < 1e-10

    def test_diagnostics_fields(self, op_2d):
        d = op_2d.diagnostics()
        assert d["delta_min"] > 0
        assert d["balance_row_dev"] < 1e-11
        assert d["correction"] == "balanced"


class TestExtendHalfspace:
    def test_constant_boundary_function_extends_to_one(self, params_2d):
        grid = px.build_halfspace_grid(params_2d)
        targets = np.array([[0.0, 0.7], [0.4, 1.3], [-1.0, 2.0]])
        vals, tails = px.extend_halfspace(np.ones(len(grid)), grid, targets, params_2d)
        assert np.max(np.abs(vals - 1.0)) < 1e-6
        assert np.all(tails >= 0)

    def test_bubble_extension_matches_closed_form(self, params_3d):
        # P_0 of (1 + |y|^2)^{-1/2} at (0, 0, t) equals 1/(1 + t)
        grid = px.build_halfspace_grid(params_3d, angular_points=64)
        u = (1.0 + np.sum(grid.nodes**2, axis=1)) ** (-0.5)
        for t in (0.5, 1.0, 3.0):
            val, tail = px.extend_halfspace(u, grid, np.array([[0.0, 0.0, t]]), params_3d)
            assert val[0] == pytest.approx(1.0 / (1.0 + t), abs=2e-7)

    def test_bubble_extension_matches_radial_quadrature_oracle(self, params_3d):
        t = 1.4
        oracle, err = quad(
            lambda r: t * r * (r * r + t * t) ** (-1.5) * (1 + r * r) ** (-0.5),
            0, np.inf,
        )
        assert err < 5e-8
        grid = px.build_halfspace_grid(params_3d, angular_points=64)
        u = (1.0 + np.sum(grid.nodes**2, axis=1)) ** (-0.5)
        val, _ = px.extend_halfspace(u, grid, np.array([[0.0, 0.0, t]]), params_3d)
        assert val[0] == pytest.approx(oracle, rel=1e-6)

    def test_linearity(self, params_2d, rng):
        grid = px.build_halfspace_grid(params_2d, truncation_radius=1e6)
        u = np.exp(-np.sum(grid.nodes**2, axis=1))
        x = np.array([[0.1, 0.9]])
        v1, _ = px.extend_halfspace(3.0 * u, grid, x, params_2d)
        v2, _ = px.extend_halfspace(u, grid, x, params_2d)
        assert v1[0] == pytest.approx(3.0 * v2[0], rel=1e-12)

    def test_rejects_boundary_targets(self, params_2d):
        grid = px.build_halfspace_grid(params_2d, truncation_radius=1e5)
        with pytest.raises(ValueError):
            px.extend_halfspace(np.ones(len(grid)), grid, np.array([[0.0, 0.0]]), params_2d)


class TestConformalPullback:
    def test_constant_boundary_function(self, params_2d, sphere_2d, rng):
        grid = px.build_halfspace_grid(params_2d)
        pts = np.stack([rng.uniform(-0.5, 0.5, 5), rng.uniform(0.3, 1.0, 5)], axis=1)
        disc = px.conformal_pullback_check(lambda q: np.ones(len(np.atleast_2d(q))),
                                           sphere_2d, grid, params_2d, pts)
        assert disc < 1e-7

    def test_bandlimited_data_small_discrepancy(self, params_2d, rng):
        sphere = px.build_sphere_quadrature(params_2d, 256)
        grid = px.build_halfspace_grid(params_2d)

        def v(pts):
            pts = np.atleast_2d(pts)
            th = np.arctan2(pts[:, 1], pts[:, 0])
            return 1.0 + 0.5 * np.cos(2 * th) + 0.25 * np.sin(3 * th)

        pts = np.stack([rng.uniform(-1, 1, 6), rng.uniform(0.1, 0.6, 6)], axis=1)
        assert px.conformal_pullback_check(v, sphere, grid, params_2d, pts) < 1e-4

    def test_boundary_function_input_is_interpolated(self, params_2d, rng):
        sphere = px.build_sphere_quadrature(params_2d, 128)
        grid = px.build_halfspace_grid(params_2d)
        theta = np.arctan2(sphere.nodes[:, 1], sphere.nodes[:, 0])
        bf = px.BoundaryFunction(1.0 + 0.3 * np.cos(4 * theta), sphere)
        pts = np.array([[0.2, 0.5], [-0.4, 0.8]])
        assert px.conformal_pullback_check(bf, sphere, grid, params_2d, pts) < 1e-4


class TestSerialization:
    def test_boundary_function_csv(self, sphere_2d, rng, tmp_path):
        v = px.BoundaryFunction(rng.random(len(sphere_2d)), sphere_2d)
        path = tmp_path / "v.csv"
        v.to_csv(path)
        data = np.genfromtxt(path, delimiter=",", skip_header=1)
        assert np.array_equal(data[:, :2], sphere_2d.nodes)
        assert np.array_equal(data[:, 2], v.values)

    def test_extension_field_csv(self, op_3d, sphere_3d, ball_3d, tmp_path):
        one = px.BoundaryFunction(np.ones(len(sphere_3d)), sphere_3d)
        field = op_3d.extend(one)
        path = tmp_path / "f.csv"
        field.to_csv(path)
        first = open(path).readline().strip()
        assert first == "x1,x2,x3,value"
        data = np.genfromtxt(path, delimiter=",", skip_header=1)
        assert np.array_equal(data[:, 3], field.values)


class TestInterpolation:
    def test_trig_interpolation_exact_on_bandlimited(self, sphere_2d, rng):
        theta = np.arctan2(sphere_2d.nodes[:, 1], sphere_2d.nodes[:, 0])
        vals = 2.0 + np.cos(3 * theta) - 0.7 * np.sin(5 * theta)
        interp = px.interpolate_boundary(px.BoundaryFunction(vals, sphere_2d))
        t = rng.uniform(0, 2 * np.pi, 40)
        pts = np.stack([np.cos(t), np.sin(t)], axis=1)
        expected = 2.0 + np.cos(3 * t) - 0.7 * np.sin(5 * t)
        assert np.max(np.abs(interp(pts) - expected)) < 1e-12

    def test_spherical_harmonic_fit_exact_on_low_degree(self, sphere_3d, rng):
        vals = 1.0 + sphere_3d.nodes[:, 2] ** 2 - 0.5 * sphere_3d.nodes[:, 0] * sphere_3d.nodes[:, 1]
        interp = px.interpolate_boundary(px.BoundaryFunction(vals, sphere_3d))
        pts = rng.normal(size=(30, 3))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        expected = 1.0 + pts[:, 2] ** 2 - 0.5 * pts[:, 0] * pts[:, 1]
        assert np.max(np.abs(interp(pts) - expected)) < 1e-10


class TestWeightedHarmonicity:
    def test_constant_field_has_zero_residual(self, params_3d):
        res = px.weighted_harmonic_residual(
            lambda xs: np.ones(len(xs)), np.array([0.0, 0.0, 1.0]), 1e-2, params_3d
        )
        assert abs(res) < 1e-10

    @pytest.mark.parametrize("a", [0.0, 0.5, -0.5])
    def test_bubble_extension_residual_small(self, a):
        p = px.ProblemParams(3, a)
        bp = px.BubbleParams(lambda_scale=1.2, center=np.array([0.1, -0.2]), amplitude=0.8)
        ev = lambda xs: px.bubble_extension_halfspace(xs, p, bp)
        x = np.array([0.3, 0.2, 1.1])
        assert abs(px.weighted_harmonic_residual(ev, x, 1e-2, p)) < 1e-4

    def test_second_order_convergence(self, params_3d):
        bp = px.BubbleParams()
        ev = lambda xs: px.bubble_extension_halfspace(xs, params_3d, bp)
        x = np.array([0.2, -0.4, 0.9])
        r1 = px.weighted_harmonic_residual(ev, x, 1e-2, params_3d)
        r2 = px.weighted_harmonic_residual(ev, x, 5e-3, params_3d)
        assert abs(r1) / abs(r2) == pytest.approx(4.0, abs=0.7)

    def test_rejects_points_close_to_boundary(self, params_3d):
        with pytest.raises(ValueError):
            px.weighted_harmonic_residual(
                lambda xs: np.ones(len(xs)), np.array([0.0, 0.0, 0.015]), 1e-2, params_3d
            )

    def test_rejects_a_outside_extension_range(self):
        p = px.ProblemParams(4, -1.5)
        with pytest.raises(ValueError):
            px.weighted_harmonic_residual(
                lambda xs: np.ones(len(xs)), np.array([0.0, 0.0, 1.0]), 1e-2, p
            )


class TestSharpInequalitySanity:
    def test_random_nonnegative_ratios_stay_below_sharp_constant(
        self, op_2d, sphere_2d, ball_2d, params_2d, rng
    ):
        sharp = px.sharp_constant(
            params_2d, "constant_test_function", sphere_2d, ball_2d
        )
        theta = np.arctan2(sphere_2d.nodes[:, 1], sphere_2d.nodes[:, 0])
        worst = 0.0
        for _ in range(30):
            v = 1.0 + 0.6 * rng.uniform(-1, 1) * np.cos(2 * theta) \
                + 0.4 * rng.uniform(-1, 1) * np.sin(theta)
            v = np.maximum(v, 0.01)
            bf = px.BoundaryFunction(v, sphere_2d)
            ratio = px.bulk_norm(op_2d.extend(bf), params_2d.p_bulk) / px.boundary_norm(
                bf, params_2d.p_crit
            )
            worst = max(worst, ratio / sharp.value)
        assert worst <= 1.0 + 1e-3
