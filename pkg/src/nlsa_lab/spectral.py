"""Uniform periodic grids, spacing-weighted DFTs, and Fourier multipliers.

Continuum conventions: fhat(xi) = int exp(-i*x*xi) f(x) dx and
f(x) = (1/2pi) int exp(i*x*xi) fhat(xi) dxi.  The discrete transforms
reproduce these on [-length/2, length/2) with spectral accuracy for data
that is negligible near the boundary.  Transformed samples are returned on
the conjugate grid in ascending frequency order (Nyquist on the negative
end), so multipliers, weights, and further transforms compose on either
side without reordering.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "BandRangeError",
    "Grid",
    "GridFunction",
    "EquationParams",
    "dft_forward",
    "dft_inverse",
    "apply_multiplier",
    "propagator_apply",
    "propagator_symbol",
    "fractional_derivative",
    "bracket_multiplier",
    "spatial_derivative",
    "weight_multiply",
    "dealias",
    "eta",
    "smooth_step",
    "qn_symbol",
    "qn_apply",
    "qn_m_apply",
    "qn_resolvable",
]


class BandRangeError(ValueError):
    """Requested dyadic band is not resolvable on the conjugate grid."""


@dataclass
class Grid:
    """Uniform periodic grid on [-length/2, length/2) with even num_points."""

    num_points: int
    length: float

    def __post_init__(self):
        if self.num_points <= 0 or self.num_points % 2 != 0:
            raise ValueError("num_points must be a positive even integer")
        if self.length <= 0:
            raise ValueError("length must be positive")
        self.length = float(self.length)

    @cached_property
    def spacing(self) -> float:
        return self.length / self.num_points

    @cached_property
    def x(self) -> np.ndarray:
        return -self.length / 2 + self.spacing * np.arange(self.num_points)

    @cached_property
    def xi(self) -> np.ndarray:
        """Ascending frequencies 2*pi*k/length; Nyquist kept on the negative side."""
        return 2 * np.pi * np.fft.fftshift(
            np.fft.fftfreq(self.num_points, d=self.spacing)
        )

    @cached_property
    def nyquist(self) -> float:
        return np.pi / self.spacing

    def conjugate(self) -> "Grid":
        """Grid on which the transform samples live (spacing 2*pi/length)."""
        return Grid(self.num_points, 2 * np.pi * self.num_points / self.length)


@dataclass
class GridFunction:
    """Complex samples on a Grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.grid.num_points,):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid "
                f"({self.grid.num_points} points)"
            )

    def copy(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.copy())


@dataclass
class EquationParams:
    """Coefficients of u_t + i*a*u_xx + b*u_xxx + i*c*|u|^2 u + d*|u|^2 u_x + e*u^2 conj(u)_x = 0.

    m is the spatial-weight exponent, s the Sobolev index of the data space.
    """

    a: float
    b: float
    c: complex = 0.0
    d: complex = 0.0
    e: complex = 0.0
    m: float = 0.125
    s: float = 0.25

    def __post_init__(self):
        if not 0 <= self.m < 1:
            raise ValueError(f"weight exponent m={self.m} outside [0, 1)")

    @property
    def airy_enabled(self) -> bool:
        """Third-order dispersion present; required by the contour machinery."""
        return self.b != 0

    @property
    def full_derivative_ok(self) -> bool:
        """Whether d*|u|^2 u_x + e*u^2 conj(u)_x collapses to e*(|u|^2 u)_x."""
        return self.d == 2 * self.e


def dft_forward(f: GridFunction) -> GridFunction:
    """Transform samples; output lives on f.grid.conjugate(), frequencies ascending."""
    g = f.grid
    spectrum = np.fft.fftshift(np.fft.fft(f.values)) * g.spacing
    fgrid = g.conjugate()
    spectrum *= np.exp(-1j * fgrid.x * g.x[0])
    return GridFunction(fgrid, spectrum)


def dft_inverse(F: GridFunction) -> GridFunction:
    """Inverse of dft_forward (carries the 1/2pi factor of the continuum inverse)."""
    fgrid = F.grid
    g = fgrid.conjugate()
    spectrum = F.values * np.exp(1j * fgrid.x * g.x[0])
    vals = np.fft.ifft(np.fft.ifftshift(spectrum)) / g.spacing
    return GridFunction(g, vals)


def apply_multiplier(f: GridFunction, symbol: np.ndarray) -> GridFunction:
    """Apply a Fourier multiplier given as samples over f.grid.xi (ascending)."""
    spec = np.fft.fft(f.values)
    spec *= np.fft.ifftshift(symbol)
    return GridFunction(f.grid, np.fft.ifft(spec))


def propagator_symbol(xi: np.ndarray, t: float, a: float, b: float) -> np.ndarray:
    return np.exp(1j * t * (a * xi**2 + b * xi**3))


def propagator_apply(f: GridFunction, t: float, params: EquationParams) -> GridFunction:
    """Free flow exp(it(a*xi^2 + b*xi^3)) on the transform side; unitary on L^2."""
    return apply_multiplier(f, propagator_symbol(f.grid.xi, t, params.a, params.b))


def fractional_derivative(f: GridFunction, alpha: float) -> GridFunction:
    """Multiplier |xi|^alpha (alpha = 0 gives the identity, including the zero mode)."""
    return apply_multiplier(f, np.abs(f.grid.xi) ** alpha)


def bracket_multiplier(f: GridFunction, sigma: float) -> GridFunction:
    """Multiplier (1 + xi^2)^(sigma/2)."""
    return apply_multiplier(f, (1.0 + f.grid.xi**2) ** (sigma / 2))


def spatial_derivative(f: GridFunction, order: int = 1) -> GridFunction:
    return apply_multiplier(f, (1j * f.grid.xi) ** order)


def weight_multiply(f: GridFunction, m: float) -> GridFunction:
    """Pointwise |x|^m f(x)."""
    return GridFunction(f.grid, np.abs(f.grid.x) ** m * f.values)


def dealias(f: GridFunction) -> GridFunction:
    """Zero all modes above two thirds of the Nyquist frequency (idempotent)."""
    keep = np.abs(f.grid.xi) <= (2.0 / 3.0) * f.grid.nyquist
    return apply_multiplier(f, keep.astype(float))


# ---------------------------------------------------------------------------
# Dyadic partition bump and the band cutoffs built from it.
# ---------------------------------------------------------------------------

def _h(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    with np.errstate(over="ignore", divide="ignore"):
        out[pos] = np.exp(-1.0 / u[pos])
    return out


def smooth_step(u):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1, strictly monotone between."""
    u = np.asarray(u, dtype=float)
    a = _h(u)
    return a / (a + _h(1.0 - u))


def eta(y):
    """Smooth bump supported in [1/2, 2] with sum_N eta(2^-N y) = 1 for y > 0.

    The partition property holds exactly by telescoping: eta(y) =
    smooth_step(2y - 1) - smooth_step(y - 1), so consecutive dilates share
    their step terms.
    """
    y = np.asarray(y, dtype=float)
    return smooth_step(2 * y - 1) - smooth_step(y - 1)


def qn_symbol(conj: np.ndarray, N: int, m: float = 0.0) -> np.ndarray:
    """Band multiplier |2^-N y|^m * (eta(2^-N y) + eta(-2^-N y)) sampled at y=conj."""
    y = np.abs(conj) * 2.0 ** (-N)
    sym = eta(y)
    if m != 0.0:
        sym = sym * y**m
    return sym


def qn_resolvable(grid: Grid, N: int) -> bool:
    """Whether the band [2^(N-1), 2^(N+1)] fits inside the conjugate grid."""
    conj_res = 2 * np.pi / grid.length
    return 2.0 ** (N - 1) >= conj_res and 2.0 ** (N + 1) <= grid.nyquist


def qn_apply(F: GridFunction, N: int, strict: bool = True) -> GridFunction:
    """Dyadic piece of F selecting |y| in [2^(N-1), 2^(N+1)] of the conjugate variable.

    With strict=True an unresolvable band raises BandRangeError; with
    strict=False the multiplier is simply truncated to the available
    conjugate frequencies (the natural choice inside partition sums).
    """
    if strict and not qn_resolvable(F.grid, N):
        raise BandRangeError(
            f"band N={N} outside conjugate range of grid "
            f"(resolution {2 * np.pi / F.grid.length:.3g}, nyquist {F.grid.nyquist:.3g})"
        )
    return apply_multiplier(F, qn_symbol(F.grid.xi, N))


def qn_m_apply(F: GridFunction, N: int, m: float, strict: bool = True) -> GridFunction:
    """Band multiplier with the extra |2^-N y|^m factor; satisfies
    qn_apply(D^m F, N) = 2^(N m) qn_m_apply(F, N, m) on the multiplier level."""
    if strict and not qn_resolvable(F.grid, N):
        raise BandRangeError(
            f"band N={N} outside conjugate range of grid "
            f"(resolution {2 * np.pi / F.grid.length:.3g}, nyquist {F.grid.nyquist:.3g})"
        )
    return apply_multiplier(F, qn_symbol(F.grid.xi, N, m))
