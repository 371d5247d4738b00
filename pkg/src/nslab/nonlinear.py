"""Convective term, symmetric bilinear form, their algebraic identities, and
the convective-term Sobolev bound diagnostic.

All quadratic products are evaluated pseudo-spectrally: inputs are truncated
to the dealias band, multiplied on the lattice, transformed back and
truncated again.  With the 2/3 rule the retained modes of a product are
alias free, which restores the continuous skew symmetry of the convection
pairing to round-off.  The product order is fixed as
multiply(a_component, derivative(b)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .norms import grad_power_l2, inner_l2, l2_norm, lp_norm
from .spectral import (
    GridSpec,
    SpectralVectorField,
    dealias_mask_half,
    derivative_factors_half,
    divergence,
    full_to_half,
    half_to_full,
    irfftn_batch,
    rfftn_batch,
)

__all__ = [
    "DealiasPolicy",
    "advect",
    "convective",
    "bilinear",
    "skew_pairing",
    "quadratic_expansion_residual",
    "nonlinear_sobolev_bound",
    "advect_half",
    "convective_half",
    "bilinear_half",
]


@dataclass(frozen=True)
class DealiasPolicy:
    """Fraction of retained modes around pointwise products."""

    rule: float = 2.0 / 3.0

    def __post_init__(self):
        if not 0.0 < self.rule <= 1.0:
            raise ValueError(f"dealias rule must lie in (0, 1], got {self.rule}")


def _fraction(policy) -> float | None:
    if policy is None:
        return None
    if isinstance(policy, DealiasPolicy):
        return policy.rule
    return float(policy)


def _advect_phys(grid: GridSpec, a_phys: np.ndarray, b_half_d: np.ndarray) -> np.ndarray:
    """sum_j a^j d_j b on the lattice, b given dealiased in half spectrum."""
    n = grid.n
    d = derivative_factors_half(grid)
    db = np.empty((3, 3) + b_half_d.shape[1:], dtype=np.complex128)
    for j in range(3):
        db[j] = d[j] * b_half_d
    db_phys = irfftn_batch(db.reshape((9,) + db.shape[2:]), n).reshape((3, 3, n, n, n))
    out = np.zeros((3, n, n, n))
    for j in range(3):
        out += a_phys[j] * db_phys[j]
    return out


def advect_half(
    grid: GridSpec, a_half: np.ndarray, b_half: np.ndarray, fraction=None
) -> np.ndarray:
    """Dealiased advection sum_j a^j d_j b on half-spectrum stacks."""
    mask = dealias_mask_half(grid, fraction)
    a_d = a_half * mask
    b_d = b_half * mask
    a_phys = irfftn_batch(a_d, grid.n)
    prod = _advect_phys(grid, a_phys, b_d)
    return rfftn_batch(prod, grid.n) * mask


def convective_half(grid: GridSpec, u_half: np.ndarray, fraction=None) -> np.ndarray:
    return advect_half(grid, u_half, u_half, fraction)


def bilinear_half(
    grid: GridSpec, w_half: np.ndarray, u_half: np.ndarray, fraction=None
) -> np.ndarray:
    mask = dealias_mask_half(grid, fraction)
    w_d = w_half * mask
    u_d = u_half * mask
    phys = irfftn_batch(np.concatenate([w_d, u_d]), grid.n)
    w_phys, u_phys = phys[:3], phys[3:]
    prod = _advect_phys(grid, w_phys, u_d) + _advect_phys(grid, u_phys, w_d)
    return rfftn_batch(prod, grid.n) * mask


def _to_half(v: SpectralVectorField) -> np.ndarray:
    return full_to_half(v.grid, v.stack())


def _from_half(grid: GridSpec, half: np.ndarray) -> SpectralVectorField:
    return SpectralVectorField.from_stack(grid, half_to_full(grid, half))


def advect(w: SpectralVectorField, u: SpectralVectorField, policy=None) -> SpectralVectorField:
    """One-directional convection (w . grad) u, dealiased."""
    if w.grid != u.grid:
        raise ValueError("fields live on different grids")
    return _from_half(u.grid, advect_half(u.grid, _to_half(w), _to_half(u), _fraction(policy)))


def convective(u: SpectralVectorField, policy=None) -> SpectralVectorField:
    """Convective term sum_j u^j d_j u."""
    return advect(u, u, policy)


def bilinear(w: SpectralVectorField, u: SpectralVectorField, policy=None) -> SpectralVectorField:
    """Symmetric bilinear form sum_j w^j d_j u + sum_j u^j d_j w."""
    if w.grid != u.grid:
        raise ValueError("fields live on different grids")
    return _from_half(
        u.grid, bilinear_half(u.grid, _to_half(w), _to_half(u), _fraction(policy))
    )


def skew_pairing(
    w: SpectralVectorField,
    u: SpectralVectorField,
    policy=None,
    div_tol: float = 1e-10,
) -> float:
    """Pairing ((w . grad) u, u)_{L^2}; vanishes for divergence-free w."""
    norm_w = l2_norm(w)
    if norm_w > 0 and l2_norm(divergence(w)) > div_tol * norm_w:
        raise ValueError("w is not divergence free within tolerance")
    return inner_l2(advect(w, u, policy), u)


def quadratic_expansion_residual(
    u: SpectralVectorField, u0: SpectralVectorField, policy=None
) -> float:
    """L^2 residual of D(u) - D(u0) = B(u0, u-u0) + (1/2) B(u-u0, u-u0)."""
    if u.grid != u0.grid:
        raise ValueError("fields live on different grids")
    d = u - u0
    lhs = convective(u, policy) - convective(u0, policy)
    rhs = bilinear(u0, d, policy) + 0.5 * bilinear(d, d, policy)
    return l2_norm(lhs - rhs)


def nonlinear_sobolev_bound(u: SpectralVectorField, k: int, exps, eps: float) -> dict:
    """Measure the three quantities in the convective-term bound

        ||grad^k D u||^2 <= eps ||grad^(k+2) u||^2 + c ||u||_{L^r}^s ||grad^(k+1) u||^2

    and return the implied minimal constant c for the given eps."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not exps.r_space > 3:
        raise ValueError("the bound needs r > 3")
    du = convective(u)
    lhs = grad_power_l2(du, k) ** 2
    smoothing = grad_power_l2(u, k + 2) ** 2
    lower = lp_norm(u, exps.r_space) ** exps.s_time * grad_power_l2(u, k + 1) ** 2
    excess = lhs - eps * smoothing
    if lower == 0.0:
        if excess > 0.0:
            raise ValueError("degenerate field: zero lower-order term with positive excess")
        implied_c = 0.0
    else:
        implied_c = max(0.0, excess / lower)
    if not np.isfinite(implied_c):
        raise ValueError("implied constant is not finite")
    return {
        "lhs": float(lhs),
        "smoothing_term": float(smoothing),
        "lower_order_term": float(lower),
        "eps": float(eps),
        "implied_c": float(implied_c),
    }
