"""Closed plane curves, tubular coordinates, and the curvilinear kernel.

A closed curve is carried in arclength parametrization with inward unit
normal, so convex curves have positive curvature and the tube Jacobian is
alpha(s, r) = 1 - r k(s).  The curvilinear kernel evaluates the interaction
through chart coordinates with curvature corrections at the arithmetic
midpoint; the remainder scans quantify how far that leading form sits from
the true Euclidean kernel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline
from scipy.spatial import cKDTree

from .errors import ConfigError
from .kernels import RadialKernel

_REPARAM_SAMPLES = 32768


def periodic_delta(a: np.ndarray, b: np.ndarray, period: float) -> np.ndarray:
    """Signed shortest-arc difference a - b on a circle of the given period."""
    d = np.asarray(a, float) - np.asarray(b, float)
    return d - period * np.round(d / period)


def periodic_midpoint(a: np.ndarray, b: np.ndarray, period: float) -> np.ndarray:
    """Midpoint of the shorter arc, exactly symmetric in its two arguments."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    raw = 0.5 * (a + b)
    wrap = np.abs(a - b) > 0.5 * period
    return np.mod(raw + np.where(wrap, 0.5 * period, 0.0), period)


@dataclass(frozen=True)
class ClosedCurve:
    """Arclength-parametrized closed curve with inward normal.

    gamma, tangent, normal map arrays of arclength values to (..., 2) point
    arrays; curvature maps to scalars.  Conventions: |gamma'| = 1, the normal
    is the tangent rotated by +90 degrees, and nu' = -k gamma'.
    """

    length: float
    gamma: Callable[[np.ndarray], np.ndarray]
    tangent: Callable[[np.ndarray], np.ndarray]
    normal: Callable[[np.ndarray], np.ndarray]
    curvature: Callable[[np.ndarray], np.ndarray]
    key: str

    def max_curvature(self, samples: int = 4096) -> float:
        s = np.linspace(0.0, self.length, samples, endpoint=False)
        return float(np.max(np.abs(self.curvature(s))))


def make_circle(R: float) -> ClosedCurve:
    """Circle of radius R, counterclockwise, curvature 1/R."""
    if R <= 0.0:
        raise ConfigError(f"circle radius must be positive, got {R}")
    L = 2.0 * np.pi * R

    def gamma(s):
        t = np.asarray(s, float) / R
        return np.stack([R * np.cos(t), R * np.sin(t)], axis=-1)

    def tangent(s):
        t = np.asarray(s, float) / R
        return np.stack([-np.sin(t), np.cos(t)], axis=-1)

    def normal(s):
        t = np.asarray(s, float) / R
        return np.stack([-np.cos(t), -np.sin(t)], axis=-1)

    def curvature(s):
        return np.full(np.asarray(s, float).shape, 1.0 / R)

    return ClosedCurve(length=L, gamma=gamma, tangent=tangent, normal=normal,
                       curvature=curvature, key=f"circle_{R!r}")


def _reparametrized_curve(
    point: Callable[[np.ndarray], np.ndarray],
    velocity: Callable[[np.ndarray], np.ndarray],
    curvature_of_t: Callable[[np.ndarray], np.ndarray],
    t_period: float,
    key: str,
) -> ClosedCurve:
    """Arclength reparametrization by cumulative quadrature plus inversion."""
    t = np.linspace(0.0, t_period, _REPARAM_SAMPLES + 1)
    speed = velocity(t)
    s_of_t = cumulative_trapezoid(speed, t, initial=0.0)
    L = float(s_of_t[-1])
    # invert monotonically; store the periodic deviation from the linear part
    t_interp = CubicSpline(s_of_t, t, bc_type="natural")

    def gamma(s):
        return point(t_interp(np.mod(s, L)))

    def tangent(s):
        tt = t_interp(np.mod(s, L))
        d = _point_derivative(point, tt)
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    def normal(s):
        tau = tangent(s)
        return np.stack([-tau[..., 1], tau[..., 0]], axis=-1)

    def curvature(s):
        return curvature_of_t(t_interp(np.mod(s, L)))

    return ClosedCurve(length=L, gamma=gamma, tangent=tangent, normal=normal,
                       curvature=curvature, key=key)


def _point_derivative(point: Callable, t: np.ndarray, step: float = 1e-6) -> np.ndarray:
    # 4th-order central difference of the position map
    return (8.0 * (point(t + step) - point(t - step)) - (point(t + 2 * step) - point(t - 2 * step))) / (12.0 * step)


def make_ellipse(a: float, b: float) -> ClosedCurve:
    """Ellipse with semi-axes a, b, counterclockwise, arclength parametrized."""
    if a <= 0.0 or b <= 0.0:
        raise ConfigError("ellipse semi-axes must be positive")

    def point(t):
        t = np.asarray(t, float)
        return np.stack([a * np.cos(t), b * np.sin(t)], axis=-1)

    def velocity(t):
        t = np.asarray(t, float)
        return np.sqrt((a * np.sin(t)) ** 2 + (b * np.cos(t)) ** 2)

    def curvature_of_t(t):
        return a * b / velocity(t) ** 3

    return _reparametrized_curve(point, velocity, curvature_of_t, 2.0 * np.pi, key=f"ellipse_{a!r}_{b!r}")


def curve_from_csv(path: str) -> ClosedCurve:
    """Closed curve through (x, y) samples, spline-smoothed and reparametrized.

    The sample polyline is closed automatically; curvature comes from the
    spline derivatives.  Smoothness beyond the spline class is the caller's
    responsibility.
    """
    data = np.loadtxt(path, delimiter=",", dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ConfigError("curve CSV must have two columns x, y")
    pts = data
    if np.allclose(pts[0], pts[-1]):
        pts = pts[:-1]
    if pts.shape[0] < 8:
        raise ConfigError("need at least 8 distinct curve samples")
    u = np.arange(pts.shape[0] + 1, dtype=float) / pts.shape[0]
    closed = np.vstack([pts, pts[:1]])
    sx = CubicSpline(u, closed[:, 0], bc_type="periodic")
    sy = CubicSpline(u, closed[:, 1], bc_type="periodic")

    def point(t):
        t = np.mod(np.asarray(t, float), 1.0)
        return np.stack([sx(t), sy(t)], axis=-1)

    def velocity(t):
        t = np.mod(np.asarray(t, float), 1.0)
        return np.hypot(sx(t, 1), sy(t, 1))

    def curvature_of_t(t):
        t = np.mod(np.asarray(t, float), 1.0)
        num = sx(t, 1) * sy(t, 2) - sy(t, 1) * sx(t, 2)
        return num / velocity(t) ** 3

    import hashlib

    digest = hashlib.sha256(data.tobytes()).hexdigest()[:12]
    return _reparametrized_curve(point, velocity, curvature_of_t, 1.0, key=f"csv_{digest}")


# --------------------------------------------------------------------------
# Tubular chart
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TubularChart:
    """Uniform (s, r) grid on the tube of half-width d0 around a curve."""

    curve: ClosedCurve
    d0: float
    s_nodes: np.ndarray = field(repr=False)
    r_nodes: np.ndarray = field(repr=False)
    k_values: np.ndarray = field(repr=False)
    alpha_table: np.ndarray = field(repr=False)

    @property
    def spacing_s(self) -> float:
        return float(self.s_nodes[1] - self.s_nodes[0])

    @property
    def spacing_r(self) -> float:
        return float(self.r_nodes[1] - self.r_nodes[0])

    def alpha(self, s: np.ndarray, r: np.ndarray) -> np.ndarray:
        return 1.0 - np.asarray(r, float) * self.curve.curvature(np.asarray(s, float))

    def rho(self, s: np.ndarray, r: np.ndarray) -> np.ndarray:
        s = np.asarray(s, float)
        r = np.asarray(r, float)
        return self.curve.gamma(s) + self.curve.normal(s) * r[..., None]

    def grid_points(self) -> np.ndarray:
        """Planar images of all grid nodes, shape (n_s, n_r, 2)."""
        S = np.broadcast_to(self.s_nodes[:, None], (self.s_nodes.size, self.r_nodes.size))
        R = np.broadcast_to(self.r_nodes[None, :], S.shape)
        return self.rho(S, R)


def build_chart(curve: ClosedCurve, d0: float, n_s: int, n_r: int) -> TubularChart:
    """Build the tube grid, checking the curvature bound and injectivity."""
    if d0 <= 0.0:
        raise ConfigError("tube half-width must be positive")
    if n_s < 4 or n_r < 3:
        raise ConfigError("tube grid too small")
    sup_kd0 = curve.max_curvature() * d0
    if sup_kd0 > 0.5 + 1e-12:
        raise ConfigError(
            f"curvature bound violated: sup|k| d0 = {sup_kd0:.4g} > 1/2; shrink d0"
        )
    s_nodes = curve.length * np.arange(n_s) / n_s
    r_nodes = np.linspace(-d0, d0, n_r)
    k_values = curve.curvature(s_nodes)
    alpha_table = 1.0 - r_nodes[None, :] * k_values[:, None]
    chart = TubularChart(curve=curve, d0=d0, s_nodes=s_nodes, r_nodes=r_nodes,
                         k_values=k_values, alpha_table=alpha_table)
    pts = chart.grid_points().reshape(-1, 2)
    tree = cKDTree(pts)
    dist, _ = tree.query(pts, k=2)
    min_sep = float(dist[:, 1].min())
    # genuine overlap means separations far below one grid cell
    cell = min(chart.spacing_s * float(alpha_table.min()), chart.spacing_r)
    if min_sep < 1e-6 * cell:
        raise ConfigError(
            f"chart map not injective on the grid: nearest image separation {min_sep:.3g} (cell {cell:.3g})"
        )
    return chart


# --------------------------------------------------------------------------
# Curvilinear kernel and remainder scans
# --------------------------------------------------------------------------

def _guard_lambda(chart: TubularChart, lam: float) -> None:
    if not 0.0 < lam < chart.curve.length / 4.0:
        raise ConfigError(f"kernel range {lam} must be below a quarter of the curve length")


def curvilinear_kernel(
    chart: TubularChart,
    kernel: RadialKernel,
    lam: float,
    s: np.ndarray,
    sp: np.ndarray,
    r: np.ndarray,
    rp: np.ndarray,
) -> np.ndarray:
    """Leading curvilinear kernel J^lam((s-s')alpha(s*,r*), r-r').

    s*, r* are arithmetic midpoints (shortest arc in s), which makes the
    value exactly symmetric under swapping the primed and unprimed points.
    """
    _guard_lambda(chart, lam)
    L = chart.curve.length
    ds = periodic_delta(s, sp, L)
    mid_s = periodic_midpoint(s, sp, L)
    mid_r = 0.5 * (np.asarray(r, float) + np.asarray(rp, float))
    alpha_star = 1.0 - mid_r * chart.curve.curvature(mid_s)
    dr = np.asarray(r, float) - np.asarray(rp, float)
    return kernel.scaled_planar(ds * alpha_star, dr, lam)


def euclidean_kernel(
    chart: TubularChart,
    kernel: RadialKernel,
    lam: float,
    s: np.ndarray,
    sp: np.ndarray,
    r: np.ndarray,
    rp: np.ndarray,
) -> np.ndarray:
    """True planar kernel J^lam(|rho(s,r) - rho(s',r')|), through the chart."""
    _guard_lambda(chart, lam)
    p = chart.rho(np.asarray(s, float), np.asarray(r, float))
    q = chart.rho(np.asarray(sp, float), np.asarray(rp, float))
    dist = np.linalg.norm(p - q, axis=-1)
    return kernel.radial(dist / lam) / lam**2


@dataclass(frozen=True)
class RemainderScan:
    max_row_norm: float
    row_norms: np.ndarray = field(repr=False)
    sample_s: np.ndarray = field(repr=False)
    sample_r: np.ndarray = field(repr=False)


def expansion_remainder_scan(
    chart: TubularChart,
    kernel: RadialKernel,
    lam: float,
    samples: int = 64,
    quad_points: int = 64,
    phase: float = 0.3,
) -> RemainderScan:
    """Row norms of the difference between true and leading kernels.

    For sampled (s, r) this integrates |J^lam(rho - rho') - J^lam_curvilinear|
    alpha(s', r') over the kernel window and reports the maximum; the paper
    predicts O(lam^2).  The scan integrates the absolute difference, which is
    conservative relative to the signed row bound.
    """
    _guard_lambda(chart, lam)
    if not lam <= chart.d0 / 2.0 + 1e-12:
        raise ConfigError(f"remainder scan requires lam <= d0/2, got lam={lam}, d0={chart.d0}")
    L = chart.curve.length
    s_samples = L * (np.arange(samples) + phase) / samples
    r_samples = np.array([0.0, 0.45 * chart.d0, -0.7 * chart.d0])

    # local quadrature window: |ds| <= 2.5 lam covers alpha >= 1/2 support
    us = np.linspace(-2.5 * lam, 2.5 * lam, quad_points, endpoint=False)
    us += 0.5 * (us[1] - us[0])
    ws = us[1] - us[0]

    rows = np.zeros((samples, r_samples.size))
    for i, s0 in enumerate(s_samples):
        for j, r0 in enumerate(r_samples):
            sp = np.mod(s0 + us, L)
            lo = max(-chart.d0, r0 - 1.25 * lam)
            hi = min(chart.d0, r0 + 1.25 * lam)
            ur = np.linspace(lo, hi, quad_points, endpoint=False)
            ur += 0.5 * (ur[1] - ur[0])
            wr = ur[1] - ur[0]
            SP, RP = np.meshgrid(sp, ur, indexing="ij")
            S0 = np.full_like(SP, s0)
            R0 = np.full_like(RP, r0)
            full = euclidean_kernel(chart, kernel, lam, S0, SP, R0, RP)
            lead = curvilinear_kernel(chart, kernel, lam, S0, SP, R0, RP)
            alpha_p = chart.alpha(SP, RP)
            rows[i, j] = np.sum(np.abs(full - lead) * alpha_p) * ws * wr
    return RemainderScan(
        max_row_norm=float(rows.max()),
        row_norms=rows,
        sample_s=s_samples,
        sample_r=r_samples,
    )


def symmetrization_factor_scan(
    chart: TubularChart,
    lam: float,
    samples: int = 96,
) -> float:
    """Max |b| with sqrt(alpha alpha') = alpha(s*, r*) sqrt(1 + b).

    b is scanned over kernel-adjacent pairs (|ds| <= 2 lam, |dr| <= lam);
    the paper bounds it by C lam^2.
    """
    _guard_lambda(chart, lam)
    L = chart.curve.length
    s0 = L * (np.arange(samples) + 0.15) / samples
    r0 = np.linspace(-chart.d0, chart.d0, 9)
    ds = np.linspace(-2.0 * lam, 2.0 * lam, 17)
    dr = np.linspace(-lam, lam, 9)
    S0, R0, DS, DR = np.meshgrid(s0, r0, ds, dr, indexing="ij")
    SP = np.mod(S0 + DS, L)
    RP = np.clip(R0 + DR, -chart.d0, chart.d0)
    a = chart.alpha(S0, R0)
    ap = chart.alpha(SP, RP)
    mid_s = periodic_midpoint(S0, SP, L)
    mid_r = 0.5 * (R0 + RP)
    a_star = 1.0 - mid_r * chart.curve.curvature(mid_s)
    b = a * ap / a_star**2 - 1.0
    return float(np.max(np.abs(b)))
