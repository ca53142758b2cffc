"""Thermodynamics, the standing front profile, and the approximate solution.

Houses the bulk magnetization (positive root of m = tanh(beta m)), the double
well potential and mobility, the free energy functional, the one-dimensional
front profile solved as a damped fixed point, its decay fit, and the slow
interface ansatz built from the front plus small corrections.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import ConfigError, NumericalError
from .kernels import MarginalKernel

DECAY_FLOOR = 1e-13


@dataclass(frozen=True)
class Thermodynamics:
    """Inverse temperature and the positive bulk magnetization."""

    beta: float
    m_beta: float


def solve_mbeta(beta: float) -> Thermodynamics:
    """Positive root of m = tanh(beta m); exists only above beta = 1."""
    if beta <= 1.0:
        raise ConfigError(f"no positive root of m = tanh(beta m) for beta = {beta} <= 1")
    f = lambda m: m - np.tanh(beta * m)  # noqa: E731
    # f(eps) < 0 for small eps since tanh'(0) = beta > 1; f(1) > 0
    root = brentq(f, 1e-8, 1.0, xtol=1e-15, rtol=8.9e-16)
    if abs(f(root)) > 1e-12:
        raise NumericalError(f"fixed point residual {f(root):.3e} above tolerance")
    return Thermodynamics(beta=float(beta), m_beta=float(root))


def mobility(m: np.ndarray, th: Thermodynamics) -> np.ndarray:
    """sigma(m) = beta (1 - m^2), the local susceptibility factor."""
    m = np.asarray(m, dtype=float)
    if np.any(np.abs(m) > 1.0):
        raise ConfigError("mobility defined for |m| <= 1")
    return th.beta * (1.0 - m * m)


def potential(m: np.ndarray, th: Thermodynamics) -> np.ndarray:
    """Double well free energy density with minima at +-m_beta."""
    m = np.asarray(m, dtype=float)
    if np.any(np.abs(m) >= 1.0):
        raise ConfigError("potential diverges logarithmically at |m| = 1")
    plus = (1.0 + m) / 2.0
    minus = (1.0 - m) / 2.0
    entropy = plus * np.log(plus) + minus * np.log(minus)
    return -0.5 * m * m + entropy / th.beta


def free_energy(
    values: np.ndarray,
    th: Thermodynamics,
    kernel,
    spacing: tuple[float, float],
    lam: float = 1.0,
    periodic_x: bool = False,
    period: float | None = None,
) -> float:
    """Excess free energy of a planar configuration on a rectangle.

    Local part integrates V(m) - V(m_beta); the interaction part is the
    quarter double integral of J(x - y)(m(x) - m(y))^2, evaluated through two
    restricted convolutions (an exact algebraic identity for the symmetric
    discrete kernel).  Nonnegative for every admissible m.
    """
    from .kernels import restricted_convolve_2d

    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise ConfigError("free_energy expects a planar grid function")
    dx, dy = spacing
    cell = dx * dy
    local = float(np.sum(potential(values, th) - potential(np.array(th.m_beta), th)) * cell)
    conv_kwargs = dict(lam=lam, periodic_x=periodic_x, period=period)
    mass = restricted_convolve_2d(kernel, np.ones_like(values), dx, dy, **conv_kwargs)
    smoothed = restricted_convolve_2d(kernel, values, dx, dy, **conv_kwargs)
    interaction = 0.5 * cell * float(np.sum(values * values * mass) - np.sum(values * smoothed))
    return local + interaction


@dataclass(frozen=True)
class FrontProfile:
    """Converged antisymmetric front with derivative and decay data.

    Immutable after solve; the splines give off-grid access for operator
    assembly on grids that are not exact subgrids.
    """

    z: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    derivative: np.ndarray = field(repr=False)
    spacing: float
    Z_max: float
    th: Thermodynamics
    decay_rate: float
    decay_prefactor: float
    residual: float
    _spline: CubicSpline = field(repr=False, compare=False)
    _spline_derivative: CubicSpline = field(repr=False, compare=False)

    def interp(self, z: np.ndarray) -> np.ndarray:
        """Front value at arbitrary points; saturates to +-m_beta outside."""
        z = np.asarray(z, dtype=float)
        out = self._spline(np.clip(z, -self.Z_max, self.Z_max))
        return np.where(np.abs(z) > self.Z_max, np.sign(z) * self.th.m_beta, out)

    def interp_derivative(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        out = self._spline_derivative(np.clip(z, -self.Z_max, self.Z_max))
        return np.where(np.abs(z) > self.Z_max, 0.0, out)


def solve_front(
    th: Thermodynamics,
    marg: MarginalKernel,
    Z_max: float,
    n: int,
    damping: float = 0.5,
    tol: float = 1e-12,
    max_iters: int = 50000,
) -> FrontProfile:
    """Damped fixed point iteration for the antisymmetric front.

    m <- (1 - theta) m + theta tanh(beta Jbar * m), antisymmetrized after
    every step, with values clamped to +-m_beta outside [-Z_max+1, Z_max-1].
    The convolution pads with the bulk values, so no mass is lost at the
    grid edge.  Antisymmetrization removes the neutral translation mode and
    makes the damped map contractive.
    """
    if th.beta <= 1.0:
        raise ConfigError("front requires beta > 1")
    if Z_max < 10.0:
        raise ConfigError(f"Z_max must be >= 10, got {Z_max}")
    if n < 3 or n % 2 == 0:
        raise ConfigError("grid size must be odd so that z = 0 is a node")
    spacing = 2.0 * Z_max / (n - 1)
    halfwidth = marg.support_halfwidth
    if 2.0 * halfwidth / spacing < 20.0:
        raise ConfigError(f"spacing {spacing:.4g} puts fewer than 20 points across the kernel support")

    z = np.linspace(-Z_max, Z_max, n)
    pad = int(np.ceil(halfwidth / spacing)) + 2
    row = marg.evaluate(spacing * np.arange(-pad, pad + 1)) * spacing
    # calibrate the discrete row to exact unit mass so the discrete bulk
    # equilibrium is exactly m_beta and clamping introduces no defect
    row /= marg.discrete_mass(spacing)
    clamp = np.abs(z) > Z_max - 1.0
    m_beta = th.m_beta

    def convolved(m: np.ndarray) -> np.ndarray:
        padded = np.concatenate([np.full(pad, -m_beta), m, np.full(pad, m_beta)])
        return np.convolve(padded, row[::-1], mode="valid")

    m = np.tanh(th.beta * m_beta * z)
    m = 0.5 * (m - m[::-1])
    m[clamp] = np.sign(z[clamp]) * m_beta
    update = np.inf
    for _ in range(max_iters):
        target = np.tanh(th.beta * convolved(m))
        new = (1.0 - damping) * m + damping * target
        new = 0.5 * (new - new[::-1])
        new[clamp] = np.sign(z[clamp]) * m_beta
        update = float(np.max(np.abs(new - m)))
        m = new
        if update < tol:
            break
    else:
        raise NumericalError(f"front iteration did not converge; last update {update:.3e}")

    residual = float(np.max(np.abs(m - np.tanh(th.beta * convolved(m)))))
    # saturated tail values are constant at rounding level; only genuine
    # decreases count as failure
    if np.any(np.diff(m) < -1e-13):
        raise NumericalError("front profile not monotone after convergence")

    # 5-point centered stencil; the profile is saturated near the edges, so
    # constant extension is exact there
    padded = np.concatenate([[m[0], m[0]], m, [m[-1], m[-1]]])
    derivative = (-padded[4:] + 8 * padded[3:-1] - 8 * padded[1:-3] + padded[:-4]) / (12 * spacing)

    spline = CubicSpline(z, m, bc_type="natural")
    dspline = CubicSpline(z, derivative, bc_type="natural")
    alpha, c, _ = _decay_fit_arrays(z, m, m_beta, Z_max)
    return FrontProfile(
        z=z,
        values=m,
        derivative=derivative,
        spacing=spacing,
        Z_max=Z_max,
        th=th,
        decay_rate=alpha,
        decay_prefactor=c,
        residual=residual,
        _spline=spline,
        _spline_derivative=dspline,
    )


class DecayFit(NamedTuple):
    alpha: float
    c: float
    r_squared: float


def decay_fit(p: FrontProfile, window: tuple[float, float] | None = None) -> DecayFit:
    """Exponential fit of the tail excess m_beta^2 - mbar^2 ~ c e^{-alpha z}.

    Default window is [Z_max/3, 2 Z_max/3]; it shrinks toward the front if
    the tail there has saturated at rounding level.
    """
    alpha, c, r2 = _decay_fit_arrays(p.z, p.values, p.th.m_beta, p.Z_max, window)
    return DecayFit(alpha=alpha, c=c, r_squared=r2)


def _decay_fit_arrays(
    z: np.ndarray,
    m: np.ndarray,
    m_beta: float,
    Z_max: float,
    window: tuple[float, float] | None = None,
) -> tuple[float, float, float]:
    y = m_beta**2 - m**2
    valid = (y > DECAY_FLOOR) & (z >= 1.5)
    if not np.any(valid):
        raise NumericalError("profile saturated everywhere in the tail; reduce Z_max")
    if window is None:
        lo, hi = Z_max / 3.0, 2.0 * Z_max / 3.0
    else:
        lo, hi = window
    mask = valid & (z >= lo) & (z <= hi)
    if np.count_nonzero(mask) < 8:
        # saturated window: fall back to the upper part of the usable range
        z_valid = z[valid]
        lo = z_valid[0] + 0.4 * (z_valid[-1] - z_valid[0])
        mask = valid & (z >= lo)
    if np.count_nonzero(mask) < 4:
        raise NumericalError("too few tail points for a decay fit; reduce Z_max")
    zz, yy = z[mask], np.log(y[mask])
    slope, intercept = np.polyfit(zz, yy, 1)
    fit = slope * zz + intercept
    ss_res = float(np.sum((yy - fit) ** 2))
    ss_tot = float(np.sum((yy - yy.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    alpha = -float(slope)
    if alpha <= 0.0:
        raise NumericalError(f"fitted decay rate {alpha:.3e} is not positive")
    return alpha, float(np.exp(intercept)), r2


def front_energy_per_length(p: FrontProfile, kernel_marginal: MarginalKernel) -> float:
    """Free energy of the front per unit of interface length.

    One-dimensional analogue of free_energy with the marginal kernel; used
    to check convergence in Z_max.
    """
    from .kernels import restricted_convolve_1d

    th = p.th
    local = float(np.sum(potential(p.values, th) - potential(np.array(th.m_beta), th)) * p.spacing)
    mass = restricted_convolve_1d(kernel_marginal, np.ones_like(p.values), p.spacing)
    smoothed = restricted_convolve_1d(kernel_marginal, p.values, p.spacing)
    interaction = 0.5 * p.spacing * float(
        np.sum(p.values * p.values * mass) - np.sum(p.values * smoothed)
    )
    return local + interaction


# --------------------------------------------------------------------------
# Approximate solution ansatz
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ApproxSolutionParams:
    """Correction functions for the slow interface ansatz.

    h1 acts on the stretched normal variable z = r / lambda and must be even;
    g lives on the tangential circle; phi and q live on the chart in the
    unstretched variables (s, r).
    """

    h1: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]
    phi: Callable[[np.ndarray, np.ndarray], np.ndarray]
    q: Callable[[np.ndarray, np.ndarray], np.ndarray]
    lam: float


def default_ansatz_params(p: FrontProfile, lam: float, length: float, phi_amplitude: float = 0.1) -> ApproxSolutionParams:
    """Reference corrections: h1 = sup-normalized front derivative (even),
    trigonometric g, a Gaussian-windowed trigonometric phi, and q = 0.

    With these choices the parity orthogonality constraint holds identically.
    h1 is normalized to unit sup so that |m_A| < 1 and the mobility floor
    hold throughout lambda <= 0.25.
    """
    omega = 2.0 * np.pi / length
    sup_d = float(np.max(np.abs(p.derivative)))
    return ApproxSolutionParams(
        h1=lambda z: p.interp_derivative(z) / sup_d,
        g=lambda s: np.cos(omega * np.asarray(s, float)),
        phi=lambda s, r: phi_amplitude * np.cos(omega * np.asarray(s, float)) * np.exp(-(np.asarray(r, float) / lam) ** 2),
        q=lambda s, r: np.zeros(np.broadcast(np.asarray(s, float), np.asarray(r, float)).shape),
        lam=lam,
    )


def zero_ansatz_params(lam: float) -> ApproxSolutionParams:
    zero2 = lambda s, r: np.zeros(np.broadcast(np.asarray(s, float), np.asarray(r, float)).shape)  # noqa: E731
    return ApproxSolutionParams(
        h1=lambda z: np.zeros_like(np.asarray(z, float)),
        g=lambda s: np.zeros_like(np.asarray(s, float)),
        phi=zero2,
        q=zero2,
        lam=lam,
    )


def parity_orthogonality_residual(params: ApproxSolutionParams, p: FrontProfile) -> float:
    """Quadrature value of int (mbar / sigma^2(mbar)) h1 (mbar')^2 dz.

    Vanishes by parity when h1 is even, since the front is odd.
    """
    sig = mobility(p.values, p.th)
    integrand = (p.values / sig**2) * params.h1(p.z) * p.derivative**2
    return float(np.sum(integrand) * p.spacing)


@dataclass(frozen=True)
class AnsatzField:
    """The ansatz sampled on a chart grid, with measured hypothesis data."""

    values: np.ndarray = field(repr=False)
    lam: float
    sigma_min: float
    sigma_max: float
    sup_tangential_derivative: float


def ansatz_values(
    params: ApproxSolutionParams,
    p: FrontProfile,
    s_nodes: np.ndarray,
    z_nodes: np.ndarray,
) -> np.ndarray:
    """Ansatz on a tensor grid in (s, z) with z the stretched normal variable."""
    lam = params.lam
    s = np.asarray(s_nodes, float)[:, None]
    z = np.asarray(z_nodes, float)[None, :]
    r = lam * z
    base = p.interp(np.asarray(z_nodes, float))[None, :]
    correction = params.h1(np.asarray(z_nodes, float))[None, :] * params.g(np.asarray(s_nodes, float))[:, None]
    return base + lam * (correction + params.phi(s, r)) + lam**2 * params.q(s, r)


def build_mA(
    params: ApproxSolutionParams,
    p: FrontProfile,
    chart,
    sigma_floor: float = 0.05,
) -> AnsatzField:
    """Sample the ansatz on a tubular chart and verify its hypotheses.

    chart provides s_nodes, r_nodes and the curve length; the normal
    coordinate is unstretched there, so z = r / lambda.  Checks |m_A| < 1,
    the mobility floor, and records the measured tangential derivative.
    """
    lam = params.lam
    values = ansatz_values(params, p, chart.s_nodes, np.asarray(chart.r_nodes, float) / lam)
    if np.any(np.abs(values) >= 1.0):
        raise ConfigError(f"ansatz exceeds |m| = 1 at lambda = {lam}; corrections too large")
    sig = mobility(values, p.th)
    sigma_min = float(sig.min())
    if sigma_min < sigma_floor:
        raise ConfigError(
            f"mobility floor violated at lambda = {lam}: min sigma(m_A) = {sigma_min:.4g} < {sigma_floor}"
        )
    ds = chart.s_nodes[1] - chart.s_nodes[0]
    tangential = (np.roll(values, -1, axis=0) - np.roll(values, 1, axis=0)) / (2.0 * ds)
    return AnsatzField(
        values=values,
        lam=lam,
        sigma_min=sigma_min,
        sigma_max=float(sig.max()),
        sup_tangential_derivative=float(np.max(np.abs(tangential))),
    )


# --------------------------------------------------------------------------
# CSV export / import
# --------------------------------------------------------------------------

def profile_to_csv(p: FrontProfile, path: str) -> None:
    """Write (z, value, derivative) rows with round-trip-exact formatting."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("z,m,dm\n")
        for zi, mi, di in zip(p.z, p.values, p.derivative):
            fh.write(f"{zi:.16e},{mi:.16e},{di:.16e}\n")


def profile_from_csv(path: str, th: Thermodynamics) -> FrontProfile:
    data = np.loadtxt(path, delimiter=",", skiprows=1, dtype=float)
    if data.ndim != 2 or data.shape[1] != 3:
        raise ConfigError("profile CSV must have columns z, m, dm")
    z, m, d = data[:, 0], data[:, 1], data[:, 2]
    spacing = float(z[1] - z[0])
    Z_max = float(z[-1])
    alpha, c, _ = _decay_fit_arrays(z, m, th.m_beta, Z_max)
    return FrontProfile(
        z=z,
        values=m,
        derivative=d,
        spacing=spacing,
        Z_max=Z_max,
        th=th,
        decay_rate=alpha,
        decay_prefactor=c,
        residual=float("nan"),
        _spline=CubicSpline(z, m, bc_type="natural"),
        _spline_derivative=CubicSpline(z, d, bc_type="natural"),
    )
