"""Projection onto divergence-free fields and pressure recovery, both as
exact Fourier multipliers.

The projector applies the matrix I - zeta zeta^T / |zeta|^2 to each
coefficient triple.  The zero mode is passed through unchanged: constant
fields are divergence free, and this convention conserves mean momentum.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .spectral import (
    GridSpec,
    SpectralScalarField,
    SpectralVectorField,
    wavenumbers,
    wavenumber_square,
    wavenumbers_half,
    wavenumber_square_half,
)

__all__ = ["LerayProjector", "project_stack_half"]


@lru_cache(maxsize=None)
def _inv_ksq(grid: GridSpec) -> np.ndarray:
    ksq = wavenumber_square(grid).copy()
    ksq[0, 0, 0] = 1.0
    return 1.0 / ksq


@lru_cache(maxsize=None)
def _inv_ksq_half(grid: GridSpec) -> np.ndarray:
    ksq = wavenumber_square_half(grid).copy()
    ksq[0, 0, 0] = 1.0
    return 1.0 / ksq


def _project_arrays(grid: GridSpec, stacked: np.ndarray, half: bool) -> np.ndarray:
    if half:
        zx, zy, zz = wavenumbers_half(grid)
        inv = _inv_ksq_half(grid)
    else:
        zx, zy, zz = wavenumbers(grid)
        inv = _inv_ksq(grid)
    zdotv = zx * stacked[0] + zy * stacked[1] + zz * stacked[2]
    scale = zdotv * inv
    out = np.empty_like(stacked)
    out[0] = stacked[0] - zx * scale
    out[1] = stacked[1] - zy * scale
    out[2] = stacked[2] - zz * scale
    return out


def project_stack_half(grid: GridSpec, stacked_half: np.ndarray) -> np.ndarray:
    """Apply the projector to a (3, n, n, n//2+1) half-spectrum stack."""
    return _project_arrays(grid, stacked_half, half=True)


@dataclass(frozen=True)
class LerayProjector:
    """Stateless divergence-free projector bound to one grid."""

    grid: GridSpec

    def project(self, v: SpectralVectorField) -> SpectralVectorField:
        """L^2-orthogonal projection onto divergence-free fields."""
        if v.grid != self.grid:
            raise ValueError("field grid does not match projector grid")
        out = _project_arrays(self.grid, v.stack(), half=False)
        return SpectralVectorField.from_stack(self.grid, out)

    def pressure_from_residual(self, force: SpectralVectorField) -> SpectralScalarField:
        """Mean-zero p with grad p = (I - P) force.

        Solves i zeta p_hat = (zeta . F_hat) zeta / |zeta|^2, i.e.
        p_hat = (zeta . F_hat) / (i |zeta|^2), with p_hat(0) = 0.
        """
        if force.grid != self.grid:
            raise ValueError("field grid does not match projector grid")
        zx, zy, zz = wavenumbers(self.grid)
        stacked = force.stack()
        zdotf = zx * stacked[0] + zy * stacked[1] + zz * stacked[2]
        p_hat = -1j * zdotf * _inv_ksq(self.grid)
        p_hat[0, 0, 0] = 0.0
        return SpectralScalarField(self.grid, p_hat)

    def lq_operator_ratio(self, v: SpectralVectorField, q: float) -> float:
        """Empirical L^q operator ratio ||P v||_q / ||v||_q."""
        from .norms import lp_norm

        if not q > 1:
            raise ValueError(f"q must exceed 1, got {q}")
        denom = lp_norm(v, q)
        if denom == 0.0:
            raise ValueError("ratio undefined for the zero field")
        return lp_norm(self.project(v), q) / denom
