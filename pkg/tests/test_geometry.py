"""Curve, chart, and curvilinear-kernel checks.

Curvature oracles use closed forms (circle 1/R, ellipse ab/v^3 with the max
a/b^2), arclengths use the complete elliptic integral, and the circle b-factor
has the closed form -k^2 (r - r')^2 / (2 alpha*)^2.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ellipe

from frontspectra.errors import ConfigError
from frontspectra.geometry import (
    build_chart,
    curvilinear_kernel,
    euclidean_kernel,
    expansion_remainder_scan,
    make_circle,
    make_ellipse,
    periodic_delta,
    periodic_midpoint,
    symmetrization_factor_scan,
)
from frontspectra.kernels import make_default_kernel


@pytest.fixture(scope="module")
def kernel():
    return make_default_kernel()


class TestCurves:
    def test_unit_circle(self):
        c = make_circle(1.0)
        assert c.length == pytest.approx(2.0 * np.pi, abs=1e-14)
        s = np.linspace(0.0, c.length, 17)
        assert np.max(np.abs(c.curvature(s) - 1.0)) == 0.0
        assert np.max(np.abs(np.linalg.norm(c.tangent(s), axis=-1) - 1.0)) < 1e-14
        assert np.max(np.abs(np.linalg.norm(c.normal(s), axis=-1) - 1.0)) < 1e-14
        dot = np.sum(c.tangent(s) * c.normal(s), axis=-1)
        assert np.max(np.abs(dot)) < 1e-14
        assert np.max(np.abs(c.gamma(np.array([0.0])) - c.gamma(np.array([c.length])))) < 1e-12

    def test_circle_frenet_relation(self):
        # nu' = -k gamma' by centered differences
        c = make_circle(0.7)
        s = np.linspace(0.1, c.length, 25)
        h = 1e-5
        nup = (c.normal(s + h) - c.normal(s - h)) / (2 * h)
        target = -c.curvature(s)[:, None] * c.tangent(s)
        assert np.max(np.abs(nup - target)) < 1e-8

    def test_degenerate_ellipse_matches_circle(self):
        e = make_ellipse(1.3, 1.3)
        c = make_circle(1.3)
        assert e.length == pytest.approx(c.length, abs=1e-8)
        s = np.linspace(0.0, e.length, 33, endpoint=False)
        assert np.max(np.abs(e.curvature(s) - 1.0 / 1.3)) < 1e-8
        # same starting point and orientation
        assert np.max(np.abs(e.gamma(s) - c.gamma(s))) < 1e-7

    def test_ellipse_arclength_vs_elliptic_integral(self):
        a, b = 2.0, 1.0
        e = make_ellipse(a, b)
        # perimeter = 4 a E(e^2) with eccentricity^2 = 1 - b^2/a^2
        exact = 4.0 * a * ellipe(1.0 - (b / a) ** 2)
        assert e.length == pytest.approx(exact, abs=1e-9)

    def test_ellipse_max_curvature(self):
        e = make_ellipse(2.0, 1.0)
        # max at the ends of the major axis: a/b^2
        assert e.max_curvature(8192) == pytest.approx(2.0, abs=1e-6)
        # min at the ends of the minor axis: b/a^2
        s = np.linspace(0.0, e.length, 8192, endpoint=False)
        assert np.min(e.curvature(s)) == pytest.approx(0.25, abs=1e-6)

    def test_ellipse_unit_speed(self):
        e = make_ellipse(2.0, 1.0)
        s = np.linspace(0.0, e.length, 40, endpoint=False)
        h = 1e-5
        speed = np.linalg.norm(e.gamma(s + h) - e.gamma(s - h), axis=-1) / (2 * h)
        assert np.max(np.abs(speed - 1.0)) < 1e-6

    def test_ellipse_curvature_vs_tangent_differences(self):
        # independent route: k = tau' . nu
        e = make_ellipse(2.0, 1.0)
        s = np.linspace(0.0, e.length, 50, endpoint=False)
        h = 1e-5
        taup = (e.tangent(s + h) - e.tangent(s - h)) / (2 * h)
        k_fd = np.sum(taup * e.normal(s), axis=-1)
        assert np.max(np.abs(k_fd - e.curvature(s))) < 1e-5

    def test_invalid_radii(self):
        with pytest.raises(ConfigError):
            make_circle(0.0)
        with pytest.raises(ConfigError):
            make_ellipse(1.0, -1.0)


class TestPeriodicHelpers:
    @settings(max_examples=80, deadline=None)
    @given(
        st.floats(min_value=0.0, max_value=10.0, allow_nan=False),
        st.floats(min_value=0.0, max_value=10.0, allow_nan=False),
    )
    def test_delta_antisymmetric_and_short(self, a, b):
        L = 10.0
        d1 = periodic_delta(np.array([a]), np.array([b]), L)[0]
        d2 = periodic_delta(np.array([b]), np.array([a]), L)[0]
        assert d1 == -d2
        assert abs(d1) <= L / 2 + 1e-12

    @settings(max_examples=80, deadline=None)
    @given(
        st.floats(min_value=0.0, max_value=10.0, allow_nan=False),
        st.floats(min_value=0.0, max_value=10.0, allow_nan=False),
    )
    def test_midpoint_symmetric(self, a, b):
        L = 10.0
        m1 = periodic_midpoint(np.array([a]), np.array([b]), L)[0]
        m2 = periodic_midpoint(np.array([b]), np.array([a]), L)[0]
        assert m1 == m2


class TestChart:
    def test_circle_alpha_value(self):
        chart = build_chart(make_circle(1.0), 0.4, 64, 17)
        got = chart.alpha(np.array([0.3]), np.array([0.25]))[0]
        assert got == pytest.approx(0.75, abs=1e-12)

    def test_annulus_area(self):
        R, d0 = 1.0, 0.4
        chart = build_chart(make_circle(R), d0, 256, 41)
        per_s = np.trapezoid(chart.alpha_table, chart.r_nodes, axis=1)
        area = np.sum(per_s) * chart.spacing_s
        exact = np.pi * ((R + d0) ** 2 - (R - d0) ** 2)
        assert area == pytest.approx(exact, rel=1e-12)
        assert exact == pytest.approx(4 * np.pi * R * d0, rel=1e-15)

    def test_curvature_bound_enforced(self):
        with pytest.raises(ConfigError):
            build_chart(make_circle(1.0), 0.6, 32, 9)

    def test_jacobian_range(self):
        chart = build_chart(make_ellipse(2.0, 1.0), 0.25, 128, 21)
        assert chart.alpha_table.min() >= 0.5 - 1e-12
        assert chart.alpha_table.max() <= 1.5 + 1e-12

    def test_change_of_variables_gaussian_bump(self):
        # planar integral of a tube-supported bump equals the alpha-weighted
        # chart integral
        R, d0 = 0.5, 0.15
        curve = make_circle(R)
        chart = build_chart(curve, d0, 16, 5)
        w = 0.02
        center = chart.rho(np.array([0.7]), np.array([0.03]))[0]

        def bump(x, y):
            return np.exp(-((x - center[0]) ** 2 + (y - center[1]) ** 2) / w**2)

        # chart side, fine grid with trapezoid weights in r
        s = curve.length * np.arange(1024) / 1024
        r = np.linspace(-d0, d0, 121)
        S, Rr = np.meshgrid(s, r, indexing="ij")
        pts = chart.rho(S, Rr)
        vals = bump(pts[..., 0], pts[..., 1]) * chart.alpha(S, Rr)
        chart_side = np.sum(np.trapezoid(vals, r, axis=1)) * (curve.length / 1024)
        # planar side
        x = np.linspace(-0.75, 0.75, 1501)
        X, Y = np.meshgrid(x, x, indexing="ij")
        planar_side = np.sum(bump(X, Y)) * (x[1] - x[0]) ** 2
        assert chart_side == pytest.approx(planar_side, rel=1e-6)


class TestCurvilinearKernel:
    def test_on_axis_equals_flat(self, kernel):
        chart = build_chart(make_circle(0.5), 0.15, 64, 13)
        lam = 0.07
        s = np.array([0.3, 0.5, 0.8])
        sp = np.array([0.32, 0.45, 0.81])
        zero = np.zeros(3)
        got = curvilinear_kernel(chart, kernel, lam, s, sp, zero, zero)
        ds = periodic_delta(s, sp, chart.curve.length)
        flat = kernel.scaled_planar(ds, np.zeros(3), lam)
        assert np.array_equal(got, flat)

    def test_flat_limit_large_radius(self, kernel):
        chart = build_chart(make_circle(1e6), 0.15, 64, 13)
        lam = 0.07
        rng = np.random.default_rng(7)
        s = rng.uniform(0, 10.0, 40)
        sp = s + rng.uniform(-2 * lam, 2 * lam, 40)
        r = rng.uniform(-0.1, 0.1, 40)
        rp = rng.uniform(-0.1, 0.1, 40)
        got = curvilinear_kernel(chart, kernel, lam, s, sp, r, rp)
        flat = kernel.scaled_planar(s - sp, r - rp, lam)
        assert np.max(np.abs(got - flat)) < 1e-8

    def test_swap_symmetry_exact(self, kernel):
        chart = build_chart(make_ellipse(2.0, 1.0), 0.25, 64, 13)
        lam = 0.1
        rng = np.random.default_rng(11)
        s = rng.uniform(0, chart.curve.length, 200)
        sp = np.mod(s + rng.uniform(-2 * lam, 2 * lam, 200), chart.curve.length)
        r = rng.uniform(-0.25, 0.25, 200)
        rp = rng.uniform(-0.25, 0.25, 200)
        a = curvilinear_kernel(chart, kernel, lam, s, sp, r, rp)
        b = curvilinear_kernel(chart, kernel, lam, sp, s, rp, r)
        assert np.array_equal(a, b)

    def test_euclidean_swap_symmetry(self, kernel):
        chart = build_chart(make_ellipse(2.0, 1.0), 0.25, 64, 13)
        lam = 0.1
        rng = np.random.default_rng(3)
        s = rng.uniform(0, chart.curve.length, 50)
        sp = np.mod(s + rng.uniform(-2 * lam, 2 * lam, 50), chart.curve.length)
        r = rng.uniform(-0.25, 0.25, 50)
        rp = rng.uniform(-0.25, 0.25, 50)
        a = euclidean_kernel(chart, kernel, lam, s, sp, r, rp)
        b = euclidean_kernel(chart, kernel, lam, sp, s, rp, r)
        assert np.max(np.abs(a - b)) < 1e-12

    def test_lambda_guard(self, kernel):
        chart = build_chart(make_circle(0.5), 0.15, 64, 13)
        with pytest.raises(ConfigError):
            curvilinear_kernel(chart, kernel, 2.0, np.array([0.0]), np.array([0.1]),
                               np.array([0.0]), np.array([0.0]))


class TestRemainderScan:
    def test_flat_proxy_vanishes(self, kernel):
        chart = build_chart(make_circle(1e6), 0.15, 64, 13)
        scan = expansion_remainder_scan(chart, kernel, 0.07, samples=8, quad_points=48)
        assert scan.max_row_norm < 1e-8

    def test_ellipse_quadratic_order(self, kernel):
        chart = build_chart(make_ellipse(2.0, 1.0), 0.25, 64, 13)
        lams = np.array([0.125, 0.09, 0.0625])
        norms = [
            expansion_remainder_scan(chart, kernel, lam, samples=24, quad_points=48).max_row_norm
            for lam in lams
        ]
        slope = np.polyfit(np.log(lams), np.log(norms), 1)[0]
        assert slope >= 1.7

    def test_scan_phase_invariant_on_circle(self, kernel):
        chart = build_chart(make_circle(0.5), 0.15, 64, 13)
        a = expansion_remainder_scan(chart, kernel, 0.06, samples=8, quad_points=40, phase=0.1)
        b = expansion_remainder_scan(chart, kernel, 0.06, samples=8, quad_points=40, phase=0.45)
        assert a.max_row_norm == pytest.approx(b.max_row_norm, rel=1e-8)

    def test_lambda_precondition(self, kernel):
        chart = build_chart(make_ellipse(2.0, 1.0), 0.25, 64, 13)
        with pytest.raises(ConfigError):
            expansion_remainder_scan(chart, kernel, 0.2, samples=4)


class TestSymmetrizationFactor:
    def test_circle_closed_form(self):
        # |b| = k^2 (r - r')^2 / (2 alpha*)^2, maximal at the inner edge
        R, d0, lam = 0.5, 0.15, 0.0625
        chart = build_chart(make_circle(R), d0, 64, 13)
        got = symmetrization_factor_scan(chart, lam, samples=32)
        k = 1.0 / R
        alpha_star = 1.0 - k * (d0 - lam / 2.0)
        expect = k**2 * lam**2 / (2.0 * alpha_star) ** 2
        assert got == pytest.approx(expect, rel=0.05)

    def test_quadratic_order_on_ellipse(self):
        chart = build_chart(make_ellipse(2.0, 1.0), 0.25, 64, 13)
        lams = np.array([0.125, 0.09, 0.0625])
        vals = [symmetrization_factor_scan(chart, lam, samples=48) for lam in lams]
        slope = np.polyfit(np.log(lams), np.log(vals), 1)[0]
        assert slope >= 1.7
