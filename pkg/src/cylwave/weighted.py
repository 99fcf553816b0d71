"""Exponentially weighted inner products, norms, and the axial translation.

All quantities integrate against ``e^{c (z - z_ref)}``; ``z_ref`` is a pure
bookkeeping offset guarding against overflow on long windows.  Norms taken
with different offsets convert exactly through ``e^{c (ref1 - ref2) / 2}``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .grids import CylinderGrid, Field, axial_derivative, section_derivative

# e^x overflows double precision just above x ~ 709
MAX_EXPONENT = 700.0


class WeightOverflowError(OverflowError):
    """Weight exponent exceeds the safe range; caller must move z_ref."""


@dataclass(frozen=True)
class WeightedMeasure:
    c: float
    z_ref: float = 0.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("weight rate must be positive, got %g" % self.c)

    def shifted(self, z_ref: float) -> "WeightedMeasure":
        return WeightedMeasure(self.c, z_ref)

    def norm_factor(self, other_ref: float) -> float:
        """Factor converting norms at this offset to norms at ``other_ref``."""
        return float(np.exp(0.5 * self.c * (self.z_ref - other_ref)))


def weight_values(grid: CylinderGrid, m: WeightedMeasure) -> np.ndarray:
    """Pointwise weight ``e^{c (z - z_ref)}`` along the axis."""
    expo = m.c * (grid.z - m.z_ref)
    if expo.max() > MAX_EXPONENT:
        raise WeightOverflowError(
            "re-reference weight: exponent %.3g exceeds %.0f" % (expo.max(), MAX_EXPONENT)
        )
    return np.exp(expo)


def quadrature_weights(grid: CylinderGrid, m: WeightedMeasure) -> np.ndarray:
    """Trapezoidal (n_y, n_z) quadrature weights including the exponential."""
    wz = np.full(grid.n_z, grid.dz)
    wz[0] = wz[-1] = 0.5 * grid.dz
    wz *= weight_values(grid, m)
    return grid.section_weights()[:, None] * wz[None, :]


def weighted_inner(u: Field, v: Field, m: WeightedMeasure) -> float:
    """Symmetric bilinear pairing ``int e^{c(z-z_ref)} u v``."""
    if u.grid is not v.grid and u.grid != v.grid:
        raise ValueError("fields live on different grids")
    w = quadrature_weights(u.grid, m)
    return float(np.sum(w * u.values * v.values))


def weighted_norm_l2(u: Field, m: WeightedMeasure) -> float:
    w = quadrature_weights(u.grid, m)
    return float(np.sqrt(np.sum(w * u.values ** 2)))


def weighted_norm_h1(u: Field, m: WeightedMeasure) -> float:
    """L2 norm of u and of its discrete gradient, root-sum-square."""
    w = quadrature_weights(u.grid, m)
    total = np.sum(w * u.values ** 2)
    total += np.sum(w * axial_derivative(u.values, u.grid) ** 2)
    if u.grid.n_y > 1:
        total += np.sum(w * section_derivative(u.values, u.grid) ** 2)
    return float(np.sqrt(total))


def weighted_norm_h2(u: Field, m: WeightedMeasure) -> float:
    """Norm including all first and second discrete derivatives."""
    g = u.grid
    w = quadrature_weights(g, m)
    uz = axial_derivative(u.values, g)
    uzz = axial_derivative(uz, g)
    total = np.sum(w * u.values ** 2) + np.sum(w * uz ** 2) + np.sum(w * uzz ** 2)
    if g.n_y > 1:
        uy = section_derivative(u.values, g)
        uyy = section_derivative(uy, g)
        uyz = axial_derivative(uy, g)
        total += np.sum(w * uy ** 2) + np.sum(w * uyy ** 2) + np.sum(w * uyz ** 2)
    return float(np.sqrt(total))


def translate(u: Field, R: float) -> Field:
    """Shift along the axis: ``(T_R u)(., z) = u(., z - R)``.

    Rows are interpolated with a monotone cubic so monotone profiles stay
    monotone; coordinates beyond the window take the boundary value.
    """
    g = u.grid
    if abs(R) >= 0.5 * g.window_length:
        raise ValueError(
            "translation %g exceeds half the window length %g" % (R, 0.5 * g.window_length)
        )
    if R == 0.0:
        return u.copy()
    zq = np.clip(g.z - R, g.z_min, g.z_max)
    interp = PchipInterpolator(g.z, u.values, axis=1, extrapolate=True)
    return Field(g, interp(zq))
