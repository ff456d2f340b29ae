"""Sobolev, weighted, and mixed space-time norms, and the composite fixed-point norm.

A SpaceTimeField stacks one frame per time node; inner time integrals use the
composite trapezoid rule, essential suprema become maxima over nodes or grid
points (fields are smooth, so the grid max converges to the sup).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectral import (
    EquationParams,
    Grid,
    GridFunction,
    apply_multiplier,
    dft_forward,
    weight_multiply,
)

__all__ = [
    "SpaceTimeField",
    "NormReport",
    "l2_norm",
    "sup_norm",
    "lp_norm",
    "sobolev_norm",
    "mixed_norm_x_t",
    "mixed_norm_t_x",
    "mu_norms",
    "weighted_sup_norm",
    "xt_norm",
]


@dataclass
class SpaceTimeField:
    """Frames of a field u(x, t) on a shared grid at increasing times from 0."""

    grid: Grid
    times: np.ndarray
    frames: np.ndarray  # shape (len(times), grid.num_points), complex

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.frames = np.asarray(self.frames, dtype=np.complex128)
        if self.times.ndim != 1 or self.times.size == 0:
            raise ValueError("times must be a nonempty 1-D array")
        if self.times[0] != 0 or (self.times.size > 1 and np.any(np.diff(self.times) <= 0)):
            raise ValueError("times must increase strictly from 0")
        if self.frames.shape != (self.times.size, self.grid.num_points):
            raise ValueError(
                f"frames shape {self.frames.shape}, expected "
                f"({self.times.size}, {self.grid.num_points})"
            )

    @property
    def T(self) -> float:
        return float(self.times[-1])

    def frame(self, k: int) -> GridFunction:
        return GridFunction(self.grid, self.frames[k])

    def apply_symbol(self, symbol: np.ndarray) -> "SpaceTimeField":
        """Apply one Fourier multiplier to every frame at once."""
        spec = np.fft.fft(self.frames, axis=1)
        spec *= np.fft.ifftshift(symbol)[None, :]
        return SpaceTimeField(self.grid, self.times, np.fft.ifft(spec, axis=1))


@dataclass
class NormReport:
    mu1: float
    mu2: float
    mu3: float
    mu4: float
    mu5: float
    y_norm: float
    weighted_sup: float
    x_norm: float
    h_quarter_history: list = field(default_factory=list)
    weighted_history: list = field(default_factory=list)
    h_quarter_ratio: float = math.nan
    weighted_ratio: float = math.nan

    def to_dict(self) -> dict:
        return {
            "mu1": self.mu1,
            "mu2": self.mu2,
            "mu3": self.mu3,
            "mu4": self.mu4,
            "mu5": self.mu5,
            "y_norm": self.y_norm,
            "weighted_sup": self.weighted_sup,
            "x_norm": self.x_norm,
            "h_quarter_history": list(self.h_quarter_history),
            "weighted_history": list(self.weighted_history),
            "h_quarter_ratio": self.h_quarter_ratio,
            "weighted_ratio": self.weighted_ratio,
        }


def l2_norm(f: GridFunction) -> float:
    return float(np.sqrt(f.grid.spacing * np.sum(np.abs(f.values) ** 2)))


def sup_norm(f: GridFunction) -> float:
    return float(np.max(np.abs(f.values)))


def lp_norm(f: GridFunction, p) -> float:
    if p == math.inf:
        return sup_norm(f)
    return float((f.grid.spacing * np.sum(np.abs(f.values) ** p)) ** (1.0 / p))


def sobolev_norm(f: GridFunction, s: float) -> float:
    """H^s norm: (1/2pi * int <xi>^2s |fhat|^2 dxi)^(1/2).

    At s=0 this reduces to the L^2 norm by the Plancherel bookkeeping.
    """
    fhat = dft_forward(f)
    weight = (1.0 + fhat.grid.x**2) ** s
    total = fhat.grid.spacing * np.sum(weight * np.abs(fhat.values) ** 2)
    return float(np.sqrt(total / (2 * np.pi)))


def _time_inner(u: SpaceTimeField, q) -> np.ndarray:
    """Per-grid-point L^q norm in t (trapezoid; max for q = inf)."""
    mag = np.abs(u.frames)
    if q == math.inf:
        return mag.max(axis=0)
    return np.trapezoid(mag**q, x=u.times, axis=0) ** (1.0 / q)


def _space_inner(u: SpaceTimeField, p) -> np.ndarray:
    """Per-time-node L^p norm in x (Riemann sum; max for p = inf)."""
    mag = np.abs(u.frames)
    if p == math.inf:
        return mag.max(axis=1)
    return (u.grid.spacing * np.sum(mag**p, axis=1)) ** (1.0 / p)


def mixed_norm_x_t(u: SpaceTimeField, p, q) -> float:
    """L^p_x L^q_T norm: the time integral is taken first."""
    g = _time_inner(u, q)
    if p == math.inf:
        return float(g.max())
    return float((u.grid.spacing * np.sum(g**p)) ** (1.0 / p))


def mixed_norm_t_x(u: SpaceTimeField, q, p) -> float:
    """L^q_T L^p_x norm: the space integral is taken first."""
    g = _space_inner(u, p)
    if q == math.inf:
        return float(g.max())
    return float(np.trapezoid(g**q, x=u.times) ** (1.0 / q))


def weighted_sup_norm(u: SpaceTimeField, m: float) -> float:
    """sup over time nodes of the weighted L^2 norm || |x|^m u(t) ||."""
    return max(l2_norm(weight_multiply(u.frame(k), m)) for k in range(u.times.size))


def mu_norms(u: SpaceTimeField, params: EquationParams) -> NormReport:
    """All five mixed norms of the fixed-point space plus the weighted component.

    mu1 = ||u|| + ||D^(1/4) u|| in L^inf_T L^2_x
    mu2 = ||u_x|| + ||D^(1/4) u_x|| in L^inf_x L^2_T
    mu3 = ||u_x|| in L^20_x L^(5/2)_T
    mu4 = ||u|| + ||D^(1/4) u|| in L^5_x L^10_T
    mu5 = ||u|| in L^4_x L^inf_T
    """
    if u.times.size < 2:
        raise ValueError("mu norms need at least two time nodes")
    xi = u.grid.xi
    quarter = np.abs(xi) ** 0.25
    du = u.apply_symbol(1j * xi)
    dq_u = u.apply_symbol(quarter)
    dq_du = u.apply_symbol(quarter * 1j * xi)

    mu1 = mixed_norm_t_x(u, math.inf, 2) + mixed_norm_t_x(dq_u, math.inf, 2)
    mu2 = mixed_norm_x_t(du, math.inf, 2) + mixed_norm_x_t(dq_du, math.inf, 2)
    mu3 = mixed_norm_x_t(du, 20, 2.5)
    mu4 = mixed_norm_x_t(u, 5, 10) + mixed_norm_x_t(dq_u, 5, 10)
    mu5 = mixed_norm_x_t(u, 4, math.inf)
    y_norm = mu1 + mu2 + mu3 + mu4 + mu5

    h_hist = [sobolev_norm(u.frame(k), params.s) for k in range(u.times.size)]
    w_hist = [l2_norm(weight_multiply(u.frame(k), params.m)) for k in range(u.times.size)]
    weighted = max(w_hist)
    return NormReport(
        mu1=mu1,
        mu2=mu2,
        mu3=mu3,
        mu4=mu4,
        mu5=mu5,
        y_norm=y_norm,
        weighted_sup=weighted,
        x_norm=y_norm + weighted,
        h_quarter_history=h_hist,
        weighted_history=w_hist,
    )


def xt_norm(u: SpaceTimeField, params: EquationParams) -> float:
    """Composite fixed-point norm: sum of the five mu norms plus the weighted sup."""
    return mu_norms(u, params).x_norm
