"""Interaction kernels: radial family, marginals, frequency slices, moments.

The two-dimensional interaction is a compactly supported, rotation invariant
probability density J(xi) = c * profile(|xi|) on |xi| <= 1.  Everything else
in the package is derived from it:

* the one-dimensional marginal  Jbar(x)   = int J(x, y) dy,
* the frequency slices          J_h(z)    = int J(s, z) cos(h s) ds,
* the tangential second moment  Jtan(z)   = int J(s, z) s^2 ds,
* scaled versions with range lambda, and restricted (truncated) convolutions.

All slice-type integrals share one fixed Gauss-Legendre rule so that the
h = 0 slice reproduces the marginal bit for bit.  Convolution matrices are
assembled elsewhere with the uniform midpoint rule, which keeps them exactly
symmetric; this module only supplies kernel values and caches them per
(kernel, scale, grid) so sweeps do not recompute Toeplitz tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError

# One shared quadrature rule for marginal / slice / moment integrals.
_CHORD_ORDER = 512
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_CHORD_ORDER)


@dataclass(frozen=True)
class RadialKernel:
    """Rotation invariant interaction density on the unit disk.

    profile maps radius in [0, 1] to a nonnegative value; norm_constant is
    chosen so the planar integral equals one.  key identifies the family for
    caching purposes.
    """

    profile: Callable[[np.ndarray], np.ndarray]
    norm_constant: float
    key: str
    support_radius: float = 1.0

    def radial(self, rho: np.ndarray) -> np.ndarray:
        """Kernel value as a function of the radius |xi|."""
        rho = np.asarray(rho, dtype=float)
        inside = rho <= self.support_radius
        out = np.zeros_like(rho)
        if np.any(inside):
            out[inside] = self.norm_constant * np.asarray(self.profile(rho[inside]), dtype=float)
        return out

    def planar(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Kernel value J(x, y) at planar offsets."""
        return self.radial(np.hypot(np.asarray(x, float), np.asarray(y, float)))

    def scaled_planar(self, x: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
        """Range-lambda kernel lambda^-2 J(x/lambda, y/lambda)."""
        if not 0.0 < lam <= 1.0:
            raise ConfigError(f"kernel scale must be in (0, 1], got {lam}")
        return self.planar(np.asarray(x, float) / lam, np.asarray(y, float) / lam) / lam**2


@dataclass(frozen=True)
class MarginalKernel:
    """One-dimensional marginal of a RadialKernel, optionally range-scaled."""

    base: RadialKernel
    scale: float = 1.0

    @property
    def support_halfwidth(self) -> float:
        return self.base.support_radius * self.scale

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float) / self.scale
        return _chord_integral(self.base, x, None) / self.scale

    def discrete_mass(self, spacing: float) -> float:
        """Full-line quadrature mass sum_k spacing * Jbar(k spacing).

        Slightly off unit because the marginal is only C^2 at the support
        edge; 1D assemblies divide their rows by this so the discrete kernel
        keeps the defining unit mass exactly.
        """
        k_max = int(np.ceil(self.support_halfwidth / spacing)) + 1
        offsets = spacing * np.arange(-k_max, k_max + 1)
        return float(np.sum(self.evaluate(offsets)) * spacing)


@dataclass(frozen=True)
class FourierSlice:
    """Cosine slice J_h(z) of a RadialKernel at frequency h.

    Even in h by construction (cosine transform); equals the marginal at
    h = 0 because the same quadrature rule is used for both.
    """

    base: RadialKernel
    h: float

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        return _chord_integral(self.base, np.asarray(z, dtype=float), self.h)


@dataclass(frozen=True)
class GridFourierSlice:
    """Frequency slice evaluated with a prescribed discrete s-quadrature.

    Used to match a periodic s-grid exactly: the slice is the plain sum
    sum_j w_j J(s_j, z) cos(h s_j) over the grid's own offsets, so circulant
    block identities hold to rounding and not just to quadrature tolerance.
    """

    base: RadialKernel
    h: float
    offsets: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        vals = self.base.planar(self.offsets[None, :], z[:, None])
        return (vals * (self.weights * np.cos(self.h * self.offsets))[None, :]).sum(axis=1)


@dataclass(frozen=True)
class TangentialMoment:
    """Second tangential moment Jtan(z) = int J(s, z) s^2 ds."""

    base: RadialKernel

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        return _chord_integral(self.base, np.asarray(z, dtype=float), None, moment=2)


def _chord_integral(kernel: RadialKernel, z: np.ndarray, h: float | None, moment: int = 0) -> np.ndarray:
    """Integrate J(s, z) * weight(s) over the chord |s| <= sqrt(1 - z^2).

    weight is cos(h s) when h is given, s**moment otherwise.  One fixed
    Gauss-Legendre rule serves all three so that h = 0 and moment = 0 agree
    exactly with the marginal.
    """
    z = np.atleast_1d(z)
    out = np.zeros_like(z, dtype=float)
    inside = np.abs(z) < kernel.support_radius
    if not np.any(inside):
        return out
    zi = z[inside]
    half = np.sqrt(np.maximum(kernel.support_radius**2 - zi**2, 0.0))
    # map [-1, 1] nodes onto each chord
    s = half[:, None] * _GL_NODES[None, :]
    vals = kernel.planar(s, zi[:, None])
    if h is not None:
        vals = vals * np.cos(h * s)
    elif moment:
        vals = vals * s**moment
    out[inside] = half * (vals * _GL_WEIGHTS[None, :]).sum(axis=1)
    return out


def make_default_kernel() -> RadialKernel:
    """Quartic bump (1 - |xi|^2)^2, normalized to unit planar mass.

    Continuously differentiable across the support edge; the normalizing
    constant is computed by quadrature (it equals 3/pi in closed form).
    """
    profile = lambda r: (1.0 - r**2) ** 2  # noqa: E731

    # planar mass of the unnormalized profile: 2 pi int_0^1 r profile(r) dr
    r = 0.5 * (_GL_NODES + 1.0)
    mass = 2.0 * np.pi * 0.5 * np.sum(_GL_WEIGHTS * r * profile(r))
    return RadialKernel(profile=profile, norm_constant=1.0 / mass, key="quartic_bump")


def load_radial_profile_csv(path: str) -> RadialKernel:
    """Radial profile from a two-column CSV (radius, value), renormalized.

    Values are interpolated linearly between samples and clamped to zero
    outside [0, 1].
    """
    data = np.loadtxt(path, delimiter=",", dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ConfigError(f"radial profile CSV must have two columns, got shape {data.shape}")
    radius, value = data[:, 0], data[:, 1]
    if np.any(value < 0.0):
        raise ConfigError("radial profile values must be nonnegative")
    order = np.argsort(radius)
    radius, value = radius[order], value[order]

    def profile(r, _radius=radius, _value=value):
        return np.interp(np.asarray(r, float), _radius, _value, left=_value[0], right=0.0)

    r = 0.5 * (_GL_NODES + 1.0)
    mass = 2.0 * np.pi * 0.5 * np.sum(_GL_WEIGHTS * r * profile(r))
    if mass <= 0.0:
        raise ConfigError("radial profile has zero mass")
    import hashlib

    digest = hashlib.sha256(data.tobytes()).hexdigest()[:12]
    return RadialKernel(profile=profile, norm_constant=1.0 / mass, key=f"csv_{digest}")


def marginal(kernel: RadialKernel, scale: float = 1.0) -> MarginalKernel:
    """Marginal Jbar (or its range-lambda scaling) of a radial kernel."""
    if not 0.0 < scale <= 1.0:
        raise ConfigError(f"marginal scale must be in (0, 1], got {scale}")
    return MarginalKernel(base=kernel, scale=scale)


def fourier_slice(kernel: RadialKernel, h: float) -> FourierSlice:
    """Cosine slice at frequency h (a real number, not an FFT index)."""
    return FourierSlice(base=kernel, h=float(h))


def fourier_slice_on_grid(
    kernel: RadialKernel, h: float, offsets: np.ndarray, weights: np.ndarray
) -> GridFourierSlice:
    """Slice at frequency h using a prescribed discrete s-quadrature."""
    offsets = np.asarray(offsets, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if offsets.shape != weights.shape:
        raise ConfigError("offsets and weights must have matching shapes")
    return GridFourierSlice(base=kernel, h=float(h), offsets=offsets, weights=weights)


def tangential_moment(kernel: RadialKernel) -> TangentialMoment:
    return TangentialMoment(base=kernel)


def slice_decay_constant(kernel: RadialKernel, z: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """C(z) = int |d/ds J(s, z)| ds, the decay constant of |J_h| <= C/(1+|h|).

    The s-derivative is taken by central differences; adequate for a
    tolerance-level bound check.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    out = np.zeros_like(z)
    inside = np.abs(z) < kernel.support_radius
    if not np.any(inside):
        return out
    zi = z[inside]
    half = np.sqrt(np.maximum(kernel.support_radius**2 - zi**2, 0.0))
    s = half[:, None] * _GL_NODES[None, :]
    deriv = (kernel.planar(s + step, zi[:, None]) - kernel.planar(s - step, zi[:, None])) / (2 * step)
    out[inside] = half * (np.abs(deriv) * _GL_WEIGHTS[None, :]).sum(axis=1)
    return out


# --------------------------------------------------------------------------
# Restricted convolution and kernel tables
# --------------------------------------------------------------------------

def restricted_convolve_1d(
    kernel: MarginalKernel | FourierSlice | GridFourierSlice,
    values: np.ndarray,
    spacing: float,
) -> np.ndarray:
    """Truncated convolution on a uniform interval grid.

    Kernel mass falling outside the grid is dropped (no renormalization, no
    wrap); this is what produces the exponentially small boundary effects the
    spectral checks look for.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    halfwidth = getattr(kernel, "support_halfwidth", kernel.base.support_radius)
    if spacing > halfwidth:
        raise ConfigError(
            f"grid spacing {spacing} does not resolve kernel support halfwidth {halfwidth}"
        )
    offsets = spacing * np.arange(-(n - 1), n)
    row = kernel.evaluate(offsets) * spacing
    # full correlation with zero padding realizes the truncation exactly
    return np.convolve(values, row[::-1], mode="valid")


def restricted_convolve_2d(
    kernel: RadialKernel,
    values: np.ndarray,
    spacing_x: float,
    spacing_y: float,
    lam: float = 1.0,
    periodic_x: bool = False,
    period: float | None = None,
) -> np.ndarray:
    """Truncated (optionally x-periodic) planar convolution on a rectangle.

    values[i, j] lives on a uniform grid with the given spacings; the kernel
    is the range-lam scaling of the radial kernel.
    """
    values = np.asarray(values, dtype=float)
    support = kernel.support_radius * lam
    if spacing_x > support or spacing_y > support:
        raise ConfigError("grid spacing does not resolve the scaled kernel support")
    nx, ny = values.shape
    dx = spacing_x * np.arange(-(nx - 1), nx)
    if periodic_x:
        if period is None:
            raise ConfigError("periodic_x requires the period")
        dx = _periodic_signed(dx, period)
    dy = spacing_y * np.arange(-(ny - 1), ny)
    table = kernel.scaled_planar(dx[:, None], dy[None, :], lam) * spacing_x * spacing_y
    from scipy.signal import fftconvolve

    out = fftconvolve(values, table[::-1, ::-1], mode="valid")
    return out


def _periodic_signed(delta: np.ndarray, period: float) -> np.ndarray:
    """Signed shortest-arc difference on a circle of the given period."""
    return delta - period * np.round(delta / period)


class KernelTableCache:
    """Toeplitz kernel tables cached per (kernel, kind, scale, grid) key.

    Keys are tuples of floats and strings, so lookups are deterministic and
    shared across a sweep.
    """

    def __init__(self) -> None:
        self._store: dict[tuple, np.ndarray] = {}

    def toeplitz_row(
        self,
        kernel: MarginalKernel | FourierSlice | GridFourierSlice,
        n: int,
        spacing: float,
    ) -> np.ndarray:
        kind = type(kernel).__name__
        h = getattr(kernel, "h", 0.0)
        scale = getattr(kernel, "scale", 1.0)
        extra: tuple = ()
        if isinstance(kernel, GridFourierSlice):
            extra = (kernel.offsets.size, float(kernel.offsets[1] - kernel.offsets[0]) if kernel.offsets.size > 1 else 0.0)
        key = (kernel.base.key, kind, float(h), float(scale), int(n), float(spacing)) + extra
        if key not in self._store:
            offsets = spacing * np.arange(-(n - 1), n)
            self._store[key] = kernel.evaluate(offsets)
        return self._store[key]

    def clear(self) -> None:
        self._store.clear()


#: module level cache shared by the operator builders
TABLE_CACHE = KernelTableCache()
