import math

import numpy as np
import pytest

from randers import (ConformalMetric, ConnectivityError, ConstantField,
                     ConstantForm, DegenerateInputError, Domain, DomainError,
                     EuclideanMetric, ExactForm, NonAdmissibleError,
                     PotentialBump, RadialProfile, RandersSpec, RotationalForm,
                     SolverOptions, SumForm, conjugate_point_scan, curve_length,
                     integrate_geodesic, polyline_hausdorff,
                     reversed_geodesic_check, shoot_pairs, solve_bvp, spray)
from randers.geodesics import _bracket_roots, _sweep_angles


class TestSpray:
    def test_constant_coefficients_vanish(self, wind_spec, rng):
        for _ in range(5):
            x = rng.uniform(-0.6, 0.6, 2)
            y = rng.normal(size=2)
            assert np.abs(spray(wind_spec, x, y)).max() == 0.0

    def test_conformal_matches_christoffel(self, dom, kink_profile, rng):
        spec = RandersSpec(dom, ConformalMetric(kink_profile))
        for _ in range(8):
            x = rng.uniform(-0.6, 0.6, 2)
            y = rng.normal(size=2)
            r = np.linalg.norm(x)
            psi_grad = (x / r) / (2.0 - r)   # grad of -ln c for c = 2 - r
            oracle = (psi_grad @ y) * y - 0.5 * psi_grad * (y @ y)
            assert np.abs(spray(spec, x, y) - oracle).max() < 1e-13

    def test_degree_two_homogeneity(self, smooth_bump_spec, rng):
        x = rng.uniform(-0.5, 0.5, 2)
        y = rng.normal(size=2)
        g1 = spray(smooth_bump_spec, x, y)
        g2 = spray(smooth_bump_spec, x, 2.0 * y)
        assert np.abs(g2 - 4.0 * g1).max() <= 1e-6 * max(np.abs(g2).max(), 1e-12)

    def test_zero_vector_rejected(self, euclid_spec):
        with pytest.raises(DegenerateInputError):
            spray(euclid_spec, [0.1, 0.1], [0.0, 0.0])

    def test_matches_nested_finite_differences(self, dom, rng):
        # fully independent route: both derivative layers by central
        # differences through the raw norm, on a spec where alpha and the
        # (non-exact) 1-form both vary in x
        from randers import ComponentForm, MediumModel, RadialProfile, zermelo_construct

        med = MediumModel(dom, speed=RadialProfile("2 - r^2"),
                          wind=ComponentForm(["0.2 - 0.1*x2^2", "0.1*x1"]))
        spec = zermelo_construct(med)

        def F2(x, y):
            return float(spec._raw_norm(np.atleast_2d(x), np.atleast_2d(y))[0]) ** 2

        def spray_fd(x, y, hx=1e-5, hy=1e-5):
            g = np.zeros((2, 2))
            for i in range(2):
                for j in range(2):
                    ei, ej = np.eye(2)[i] * hy, np.eye(2)[j] * hy
                    g[i, j] = (F2(x, y + ei + ej) - F2(x, y + ei - ej)
                               - F2(x, y - ei + ej) + F2(x, y - ei - ej)) / (8 * hy * hy)
            rhs = np.zeros(2)
            for l in range(2):
                el = np.eye(2)[l]
                mixed = 0.0
                for k in range(2):
                    ek = np.eye(2)[k] * hx
                    dp = (F2(x + ek, y + el * hy) - F2(x + ek, y - el * hy)) / (2 * hy)
                    dm = (F2(x - ek, y + el * hy) - F2(x - ek, y - el * hy)) / (2 * hy)
                    mixed += y[k] * (dp - dm) / (2 * hx)
                rhs[l] = mixed - (F2(x + el * hx, y) - F2(x - el * hx, y)) / (2 * hx)
            return 0.25 * np.linalg.solve(g, rhs)

        for _ in range(5):
            x = rng.uniform(-0.5, 0.5, 2)
            y = rng.normal(size=2)
            assert np.abs(spray(spec, x, y) - spray_fd(x, y)).max() <= 1e-4


class TestInitialValue:
    def test_euclidean_chord(self, euclid_spec):
        path = integrate_geodesic(euclid_spec, [-1.0, 0.0], [2.0, 0.0])
        assert path.exit_time == pytest.approx(2.0, abs=1e-9)
        assert np.allclose(path.exit_point, [1.0, 0.0], atol=1e-9)
        assert abs(path.f_length - path.exit_time) <= 1e-8 * path.exit_time

    def test_wind_diameter(self, wind_spec):
        path = integrate_geodesic(wind_spec, [-1.0, 0.0], [1.0, 0.0])
        assert path.exit_time == pytest.approx(4.0 / 3.0, abs=1e-9)
        assert np.allclose(path.exit_point, [1.0, 0.0], atol=1e-8)
        # straight line: all samples on the axis
        assert np.abs(path.x[:, 1]).max() < 1e-12

    def test_unit_speed_conservation(self, dom, kink_profile):
        spec = RandersSpec(dom, ConformalMetric(kink_profile))
        path = integrate_geodesic(spec, dom.boundary_point(0.7),
                                  [-0.8, -0.5])
        assert path.unit_speed_residual(spec) <= 1e-6
        assert abs(path.exit_point @ path.exit_point - 1.0) <= 2e-9

    def test_exit_on_boundary(self, smooth_bump_spec, dom):
        path = integrate_geodesic(smooth_bump_spec, dom.boundary_point(1.2), [-0.2, -0.9])
        assert abs(np.linalg.norm(path.exit_point) - 1.0) <= 1e-9

    def test_outward_start_rejected(self, euclid_spec):
        with pytest.raises(DomainError):
            integrate_geodesic(euclid_spec, [1.0, 0.0], [1.0, 0.0])

    def test_budget_exhaustion_reports_trapped(self, euclid_spec):
        from randers import TrappedGeodesicError

        with pytest.raises(TrappedGeodesicError):
            integrate_geodesic(euclid_spec, [-1.0, 0.0], [1.0, 0.0],
                               SolverOptions(trap_time_factor=0.01))

    def test_geodesic_equation_residual(self, dom, smooth_bump_spec):
        # Hermite-Simpson consistency: the velocity divided difference per
        # interval must match the Simpson average of the spray acceleration,
        # with the midpoint state reconstructed from the stored samples
        path = integrate_geodesic(smooth_bump_spec, dom.boundary_point(0.3), [-0.7, 0.4])
        from randers.geodesics import _spray_and_norm

        def acc_at(x, y):
            G, _ = _spray_and_norm(smooth_bump_spec, np.ascontiguousarray(x),
                                   np.ascontiguousarray(y))
            return -2.0 * G

        h = np.diff(path.t)[:, None]
        x0c, x1c = path.x[:-1], path.x[1:]
        y0c, y1c = path.y[:-1], path.y[1:]
        a0 = acc_at(x0c, y0c)
        a1 = acc_at(x1c, y1c)
        xm = 0.5 * (x0c + x1c) + (5.0 / 32.0) * h * (y0c - y1c) + (h ** 2 / 64.0) * (a0 + a1)
        ym = (15.0 / 8.0) * (x1c - x0c) / h - (7.0 / 16.0) * (y0c + y1c) + (h / 32.0) * (a1 - a0)
        am = acc_at(xm, ym)
        resid = np.abs((y1c - y0c) / h - (a0 + 4.0 * am + a1) / 6.0).max()
        assert resid <= 1e-4


class TestBoundaryValue:
    def test_euclidean_diameter(self, euclid_spec):
        res = solve_bvp(euclid_spec, [-1.0, 0.0], [1.0, 0.0])
        assert res.branch_count == 1
        assert res.path.exit_time == pytest.approx(2.0, abs=1e-8)
        assert abs(res.miss) <= 1e-8

    def test_wind_oracle_times(self, wind_spec):
        down = solve_bvp(wind_spec, [-1.0, 0.0], [1.0, 0.0])
        up = solve_bvp(wind_spec, [1.0, 0.0], [-1.0, 0.0])
        assert down.path.exit_time == pytest.approx(4.0 / 3.0, abs=1e-7)
        assert up.path.exit_time == pytest.approx(4.0, abs=1e-7)

    def test_wind_chord_net_speed(self, dom, wind_spec):
        # analytic travel time for a straight chord under constant drift
        a, b = dom.boundary_point(0.9), dom.boundary_point(3.8)
        chord = b - a
        L = np.linalg.norm(chord)
        d = chord / L
        w = np.array([0.5, 0.0])
        s = w @ d + math.sqrt((w @ d) ** 2 + 1.0 - w @ w)
        res = solve_bvp(wind_spec, a, b)
        assert res.path.exit_time == pytest.approx(L / s, abs=1e-9)

    def test_identical_points_rejected(self, euclid_spec):
        with pytest.raises(DomainError):
            solve_bvp(euclid_spec, [1.0, 0.0], [1.0, 0.0])

    def test_interior_point_rejected(self, euclid_spec):
        with pytest.raises(DomainError):
            solve_bvp(euclid_spec, [0.5, 0.0], [1.0, 0.0])

    def test_no_branch_reports_connectivity(self, euclid_spec):
        # with the ray budget too small every sweep ray fails, so no bracket
        # can form and the solver must report the missing connection
        with pytest.raises(ConnectivityError):
            solve_bvp(euclid_spec, [-1.0, 0.0], [1.0, 0.0],
                      SolverOptions(trap_time_factor=0.01, angle_samples=32))

    def test_minimality_against_competitors(self, dom, smooth_bump_spec, rng):
        a, b = dom.boundary_point(0.2), dom.boundary_point(2.9)
        d = solve_bvp(smooth_bump_spec, a, b).path.exit_time
        for _ in range(10):
            mid = rng.uniform(-0.5, 0.5, (2, 2))
            poly = np.vstack([a, mid, b])
            assert curve_length(smooth_bump_spec, poly).total >= d - 1e-9


class TestBracketLogic:
    def test_single_root(self):
        psi = _sweep_angles(16)
        miss = np.linspace(-1.0, 1.0, 16)
        ok = np.ones(16, dtype=bool)
        brackets, nodes = _bracket_roots(psi, miss, ok, 1e-8)
        assert len(brackets) == 1 and not nodes

    def test_wrap_jump_discarded(self):
        psi = _sweep_angles(8)
        miss = np.array([2.0, 2.8, -2.9, -2.0, -1.0, -0.5, -0.2, -0.1])
        ok = np.ones(8, dtype=bool)
        brackets, nodes = _bracket_roots(psi, miss, ok, 1e-8)
        assert not brackets and not nodes

    def test_node_root_detected(self):
        psi = _sweep_angles(8)
        miss = np.array([1.0, 0.5, 0.0, -0.5, -1.0, -1.5, -2.0, -2.5])
        ok = np.ones(8, dtype=bool)
        brackets, nodes = _bracket_roots(psi, miss, ok, 1e-8)
        assert nodes == [2] and not brackets

    def test_invalid_rays_break_brackets(self):
        psi = _sweep_angles(6)
        miss = np.array([1.0, 0.5, -0.5, -1.0, -1.5, -2.0])
        ok = np.array([True, True, False, True, True, True])
        brackets, _ = _bracket_roots(psi, miss, ok, 1e-8)
        assert not brackets

    def test_multiple_roots_counted(self):
        psi = _sweep_angles(12)
        miss = np.array([1.0, 0.5, -0.5, -1.0, -0.4, 0.3, 0.8, 0.4, -0.3, -0.8, -1.2, -1.6])
        ok = np.ones(12, dtype=bool)
        brackets, _ = _bracket_roots(psi, miss, ok, 1e-8)
        assert len(brackets) == 3


class TestShootPairs:
    def test_matches_solve_bvp(self, dom, smooth_bump_spec):
        angles = np.array([0.0, 1.3, 2.7, 4.4])
        pairs = [(0, 2), (1, 3), (3, 0)]
        shots = shoot_pairs(smooth_bump_spec, angles, pairs)
        for shot in shots:
            ref = solve_bvp(smooth_bump_spec, dom.boundary_point(angles[shot.i]),
                            dom.boundary_point(angles[shot.j]))
            assert shot.converged and shot.branch_count == 1
            assert shot.time == pytest.approx(ref.path.exit_time, abs=1e-9)

    def test_recorded_paths(self, dom, smooth_bump_spec):
        angles = np.array([0.0, 2.0])
        shots = shoot_pairs(smooth_bump_spec, angles, [(0, 1)], record_paths=True)
        path = shots[0].path
        assert path is not None
        assert np.allclose(path.x[-1], dom.boundary_point(2.0), atol=1e-7)
        # recorded re-integration caps the step size, so times agree only
        # to solver accuracy
        assert abs(path.exit_time - shots[0].time) < 1e-9


class TestProjectiveEquivalence:
    def test_bump_preserves_point_sets(self, dom, smooth_alpha, smooth_spec):
        spec2 = RandersSpec(dom, smooth_alpha, ExactForm(PotentialBump(0.25, 1.0)))
        for a, b in [(0.0, 2.2), (1.1, 4.0), (2.5, 5.9)]:
            p1 = solve_bvp(smooth_spec, dom.boundary_point(a), dom.boundary_point(b)).path
            p2 = solve_bvp(spec2, dom.boundary_point(a), dom.boundary_point(b)).path
            h = polyline_hausdorff(p1.resample(), p2.resample())
            assert h <= 1e-6 * dom.radius

    def test_rotational_breaks_point_sets(self, dom, euclid_spec):
        rot = RandersSpec(dom, EuclideanMetric(), RotationalForm(0.4))
        worst = 0.0
        for a, b in [(0.0, 2.2), (1.1, 4.0)]:
            p1 = solve_bvp(euclid_spec, dom.boundary_point(a), dom.boundary_point(b)).path
            p2 = solve_bvp(rot, dom.boundary_point(a), dom.boundary_point(b)).path
            worst = max(worst, polyline_hausdorff(p1.resample(), p2.resample()))
        assert worst > 1e-3 * dom.radius


class TestReversedGeodesics:
    def test_reversible_spec(self, dom, smooth_spec):
        path = solve_bvp(smooth_spec, dom.boundary_point(0.4), dom.boundary_point(2.8)).path
        rep = reversed_geodesic_check(smooth_spec, path)
        assert rep.relative <= 1e-6

    def test_closed_form_bump(self, dom, smooth_bump_spec):
        path = solve_bvp(smooth_bump_spec, dom.boundary_point(5.8), dom.boundary_point(1.9)).path
        rep = reversed_geodesic_check(smooth_bump_spec, path)
        assert rep.relative <= 1e-6
        assert rep.forward_time != rep.backward_time  # non-reversible parametrization

    def test_rotational_counterexample(self, dom):
        rot = RandersSpec(dom, EuclideanMetric(), RotationalForm(0.4))
        path = solve_bvp(rot, dom.boundary_point(0.0), dom.boundary_point(2.5)).path
        rep = reversed_geodesic_check(rot, path)
        assert rep.relative > 1e-3


class TestConjugateScan:
    def test_euclidean_fan_positive(self, dom):
        scan = conjugate_point_scan(ConformalMetric(ConstantField(1.0)), 1.0)
        assert not scan.any_conjugate
        assert np.nanmin(scan.min_jacobi) > 0.0

    def test_herglotz_linear_profile(self, kink_profile):
        scan = conjugate_point_scan(ConformalMetric(kink_profile), 1.0)
        assert scan.herglotz_margin == pytest.approx(0.5, abs=1e-6)
        # negative curvature: no conjugate points, consistent with unique BVP branches
        assert not scan.any_conjugate
        assert np.nanmin(scan.min_jacobi) > 0.0

    def test_constant_curvature_oracle(self):
        # c = (1 + 4 r^2)/2 is the conformal factor of a curvature-4 sphere
        # patch: every geodesic meets its first conjugate point at exactly
        # pi/sqrt(4), giving a sharp quantitative check of the Jacobi solve
        scan = conjugate_point_scan(ConformalMetric(RadialProfile("(1 + 4*r^2)/2")), 1.0)
        assert scan.herglotz_margin < 0.0
        assert scan.any_conjugate
        expected = math.pi / 2.0
        for T, fc in zip(scan.exit_times, scan.first_conjugate):
            if T > expected:
                assert abs(fc - expected) <= 1e-5
            else:
                assert not np.isfinite(fc)

    def test_requires_radial(self, dom):
        with pytest.raises(ValueError):
            conjugate_point_scan(EuclideanMetric(), 1.0)
