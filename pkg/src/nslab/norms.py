"""Norms quantifying the a priori estimates: Lebesgue, Sobolev (spectral
weight form), a negative-order dual proxy, mixed space-time norms, and the
composite (mu, T) solution/data norms.

Sobolev norms use the spectral weight (1 + |zeta|^2)^s; reported constants
depend on this choice of equivalent norm.  The dual-space norm of a forcing
term is realised as the order ``-1`` weight applied to its divergence-free
projection: on the torus the supremum over divergence-free test fields is
attained on the projected part.

L^p norms of vector fields use the pointwise Euclidean magnitude
|u(x)| = (sum_j u_j(x)^2)^(1/2); for p = 2 this coincides with the
componentwise convention.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .leray import LerayProjector
from .spectral import (
    GridSpec,
    RealScalarField,
    SpectralScalarField,
    SpectralVectorField,
    wavenumber_square,
)

__all__ = [
    "BochnerExponents",
    "Trajectory",
    "lp_norm",
    "l2_norm",
    "inner_l2",
    "sobolev_norm",
    "dual_h1_norm",
    "grad_power_l2",
    "bochner_norm",
    "sup_lp_in_time",
    "sol_norm_0muT",
    "data_norm_0muT",
    "data_norm_kmuT",
    "bkss_vel_norm",
    "norm_table",
    "trajectory_from_callable",
]

_trapz = np.trapezoid if hasattr(np, "trapezoid") else np.trapz


@dataclass(frozen=True)
class BochnerExponents:
    """Time/space integrability pair (s, r), possibly tagged with the scaling
    relation it must satisfy."""

    s_time: float
    r_space: float
    tag: str | None = None

    def __post_init__(self):
        if not (self.s_time >= 1 or np.isinf(self.s_time)):
            raise ValueError(f"s_time must be >= 1 or inf, got {self.s_time}")
        if not (self.r_space >= 1 or np.isinf(self.r_space)):
            raise ValueError(f"r_space must be >= 1 or inf, got {self.r_space}")
        if self.tag == "LPS":
            if not self.r_space > 3:
                raise ValueError("LPS pair needs r > 3")
            if abs(2.0 / self.s_time + 3.0 / self.r_space - 1.0) > 1e-12:
                raise ValueError("LPS pair must satisfy 2/s + 3/r = 1")
        elif self.tag == "energy":
            if not 2.0 < self.r_space <= 6.0:
                raise ValueError("energy pair needs 2 < r <= 6")
            if abs(2.0 / self.s_time + 3.0 / self.r_space - 1.5) > 1e-12:
                raise ValueError("energy pair must satisfy 2/s + 3/r = 3/2")
        elif self.tag is not None:
            raise ValueError(f"unknown tag {self.tag!r}")

    @classmethod
    def lps(cls, r: float) -> "BochnerExponents":
        from .inequalities import lps_exponent

        return cls(lps_exponent(r), r, tag="LPS")

    @classmethod
    def energy(cls, r: float) -> "BochnerExponents":
        from .inequalities import energy_exponent

        return cls(energy_exponent(r), r, tag="energy")


@dataclass
class Trajectory:
    """Time-ordered snapshots of a solver run (or of a forcing term)."""

    times: np.ndarray
    velocities: list
    pressures: list | None = None
    dudt: list | None = None
    mu: float | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        if self.times.ndim != 1 or self.times.size < 2:
            raise ValueError("a trajectory needs at least two snapshots")
        if abs(self.times[0]) > 1e-14:
            raise ValueError("trajectory must start at t = 0")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("snapshot times must be strictly increasing")
        if len(self.velocities) != self.times.size:
            raise ValueError("snapshot count does not match times")
        grid = self.velocities[0].grid
        for u in self.velocities:
            if u.grid != grid:
                raise ValueError("all snapshots must share one grid")
        for extra in (self.pressures, self.dudt):
            if extra is not None and len(extra) != self.times.size:
                raise ValueError("auxiliary snapshot count does not match times")

    @property
    def grid(self) -> GridSpec:
        return self.velocities[0].grid

    @property
    def final_time(self) -> float:
        return float(self.times[-1])

    def __len__(self) -> int:
        return int(self.times.size)


def _physical_magnitude(fld) -> tuple:
    """Return (grid, |field| samples on the lattice)."""
    if isinstance(fld, RealScalarField):
        return fld.grid, np.abs(fld.values)
    if isinstance(fld, SpectralScalarField):
        from .spectral import inverse_transform

        return fld.grid, np.abs(inverse_transform(fld).values)
    if isinstance(fld, SpectralVectorField):
        phys = fld.to_physical()
        return fld.grid, np.sqrt(np.sum(phys**2, axis=0))
    raise TypeError(f"unsupported field type {type(fld)!r}")


def lp_norm(fld, p: float) -> float:
    """Rectangle-rule L^p norm over the box; p = inf gives the sup norm."""
    if not (p >= 1 or np.isinf(p)):
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    grid, mag = _physical_magnitude(fld)
    if np.isinf(p):
        return float(np.max(mag))
    return float((grid.cell_volume * np.sum(mag**p)) ** (1.0 / p))


def _coeff_square_sum(fld) -> tuple:
    """(grid, sum over components of |coeffs|^2)."""
    if isinstance(fld, SpectralScalarField):
        return fld.grid, np.abs(fld.coeffs) ** 2
    if isinstance(fld, SpectralVectorField):
        return fld.grid, np.sum(np.abs(fld.stack()) ** 2, axis=0)
    raise TypeError("spectral field required")


def l2_norm(fld) -> float:
    """L^2 norm through Parseval (exact for spectral fields)."""
    grid, sq = _coeff_square_sum(fld)
    return float(np.sqrt(grid.parseval_constant * np.sum(sq)))


def inner_l2(a, b) -> float:
    """Real L^2 inner product of two spectral fields."""
    if isinstance(a, SpectralVectorField):
        sa, sb = a.stack(), b.stack()
    else:
        sa, sb = a.coeffs, b.coeffs
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    return float(a.grid.parseval_constant * np.real(np.sum(np.conj(sb) * sa)))


def sobolev_norm(fld, s: int) -> float:
    """Spectral-weight Sobolev norm (sum (1+|zeta|^2)^s c |coeffs|^2)^(1/2).

    Negative s is allowed; s = -1 is the dual-norm proxy used for data norms.
    """
    grid, sq = _coeff_square_sum(fld)
    weight = (1.0 + wavenumber_square(grid)) ** float(s)
    return float(np.sqrt(grid.parseval_constant * np.sum(weight * sq)))


def grad_power_l2(fld, j: int) -> float:
    """L^2 norm of the j-th gradient, (sum |zeta|^(2j) c |coeffs|^2)^(1/2)."""
    if j < 0:
        raise ValueError(f"gradient order must be nonnegative, got {j}")
    grid, sq = _coeff_square_sum(fld)
    if j == 0:
        weight = 1.0
    else:
        weight = wavenumber_square(grid) ** j
    return float(np.sqrt(grid.parseval_constant * np.sum(weight * sq)))


def dual_h1_norm(fld, projector: LerayProjector | None = None) -> float:
    """Negative-order norm of the divergence-free part (data-norm ingredient)."""
    proj = projector if projector is not None else LerayProjector(fld.grid)
    return sobolev_norm(proj.project(fld), -1)


def time_lp_norm(times: np.ndarray, values: np.ndarray, s: float) -> float:
    """Composite-trapezoid L^s norm in time of a sampled scalar series."""
    values = np.asarray(values, dtype=np.float64)
    if np.isinf(s):
        return float(np.max(values))
    return float(_trapz(values**s, np.asarray(times)) ** (1.0 / s))


def bochner_norm(traj: Trajectory, exps: BochnerExponents) -> float:
    """Mixed space-time norm ||u||_{L^s(I, L^r)}; s = inf gives the C(I, L^r) norm."""
    values = np.array([lp_norm(u, exps.r_space) for u in traj.velocities])
    return time_lp_norm(traj.times, values, exps.s_time)


def sup_lp_in_time(traj: Trajectory, r: float) -> float:
    return float(np.max([lp_norm(u, r) for u in traj.velocities]))


def sol_norm_0muT(traj: Trajectory) -> float:
    """Solution norm (sup_t ||u||_2^2 + mu int ||grad u||_2^2 dt)^(1/2)."""
    if traj.mu is None:
        raise ValueError("trajectory carries no viscosity")
    sup_sq = max(l2_norm(u) ** 2 for u in traj.velocities)
    grads = np.array([grad_power_l2(u, 1) ** 2 for u in traj.velocities])
    return float(np.sqrt(sup_sq + traj.mu * _trapz(grads, traj.times)))


def _restrict(times: np.ndarray, values: np.ndarray, T: float):
    mask = times <= T + 1e-12 * max(1.0, T)
    return times[mask], values[mask]


def data_norm_0muT(
    u0: SpectralVectorField,
    f_traj: Trajectory | None,
    mu: float,
    T: float,
    projector: LerayProjector | None = None,
) -> float:
    """Data norm (||u0||_2^2 + (2/mu) ||f||^2_{L^2 dual} + ||f||^2_{L^1 dual})^(1/2)."""
    if mu <= 0 or T <= 0:
        raise ValueError("mu and T must be positive")
    total = l2_norm(u0) ** 2
    if f_traj is not None:
        proj = projector if projector is not None else LerayProjector(u0.grid)
        duals = np.array([dual_h1_norm(f, proj) for f in f_traj.velocities])
        times, duals = _restrict(f_traj.times, duals, T)
        total += 2.0 / mu * _trapz(duals**2, times)
        total += float(_trapz(duals, times)) ** 2
    return float(np.sqrt(total))


def data_norm_kmuT(
    u0: SpectralVectorField,
    f_traj: Trajectory | None,
    mu: float,
    T: float,
    k: int,
) -> float:
    """Order-k data norm (||grad^k u0||^2 + (4/mu) ||grad^(k-1) f||^2_{L^2(I,L^2)})^(1/2)."""
    if k < 1:
        raise ValueError("data_norm_kmuT needs k >= 1; use data_norm_0muT for k = 0")
    if mu <= 0 or T <= 0:
        raise ValueError("mu and T must be positive")
    total = grad_power_l2(u0, k) ** 2
    if f_traj is not None:
        vals = np.array([grad_power_l2(f, k - 1) ** 2 for f in f_traj.velocities])
        times, vals = _restrict(f_traj.times, vals, T)
        total += 4.0 / mu * _trapz(vals, times)
    return float(np.sqrt(total))


def _multi_indices(max_order: int):
    for a1 in range(max_order + 1):
        for a2 in range(max_order + 1 - a1):
            for a3 in range(max_order + 1 - a1 - a2):
                yield (a1, a2, a3)


def _apply_multi_index(fld: SpectralVectorField, alpha) -> SpectralVectorField:
    from .spectral import partial_derivative

    out = fld
    for axis, reps in enumerate(alpha):
        for _ in range(reps):
            out = partial_derivative(out, axis + 1)
    return out


def _series_imuT_sq(times, fields, i: int, mu: float) -> float:
    sup_sq = max(grad_power_l2(f, i) ** 2 for f in fields)
    ints = np.array([grad_power_l2(f, i + 1) ** 2 for f in fields])
    return sup_sq + mu * float(_trapz(ints, times))


def bkss_vel_norm(traj: Trajectory, k: int, s: int) -> float:
    """Parabolic-scale velocity norm: root of the sum of ||d_x^a d_t^j u||_{i,mu,T}^2
    over i <= k and |a| + 2j <= 2s.

    Time derivatives of order 1 come from the stored right-hand-side snapshots;
    higher orders fall back to finite differences and are flagged approximate.
    """
    if traj.mu is None:
        raise ValueError("trajectory carries no viscosity")
    if k < 0 or s < 0:
        raise ValueError("k and s must be nonnegative")
    time_series = {0: traj.velocities}
    if s >= 1:
        if traj.dudt is None:
            raise ValueError("trajectory lacks time-derivative snapshots")
        time_series[1] = traj.dudt
    if s >= 2:
        warnings.warn(
            "time derivatives of order >= 2 use finite differences (approximate)",
            RuntimeWarning,
            stacklevel=2,
        )
        for j in range(2, s + 1):
            prev = time_series[j - 1]
            t = traj.times
            fd = []
            for idx in range(len(prev)):
                lo = max(idx - 1, 0)
                hi = min(idx + 1, len(prev) - 1)
                fd.append((prev[hi] - prev[lo]) * (1.0 / (t[hi] - t[lo])))
            time_series[j] = fd
    total = 0.0
    for j, fields_j in time_series.items():
        if 2 * j > 2 * s:
            continue
        for alpha in _multi_indices(2 * s - 2 * j):
            d_fields = [_apply_multi_index(f, alpha) for f in fields_j]
            for i in range(k + 1):
                total += _series_imuT_sq(traj.times, d_fields, i, traj.mu)
    return float(np.sqrt(total))


def norm_table(traj: Trajectory, r_values=(4.0,)) -> list:
    """Per-snapshot norm rows; column names: t, l2, grad1_l2, linf, l<r>..."""
    rows = []
    for t, u in zip(traj.times, traj.velocities):
        row = {
            "t": float(t),
            "l2": l2_norm(u),
            "grad1_l2": grad_power_l2(u, 1),
            "linf": lp_norm(u, np.inf),
        }
        for r in r_values:
            row[f"l{r:g}"] = lp_norm(u, r)
        rows.append(row)
    return rows


def trajectory_from_callable(
    grid: GridSpec,
    times,
    fn,
    mu: float | None = None,
    dudt_fn=None,
    pressure_fn=None,
    metadata: dict | None = None,
) -> Trajectory:
    """Sample closed-form fields into a trajectory (test and forcing helper)."""
    times = np.asarray(times, dtype=np.float64)
    velocities = [fn(t) for t in times]
    dudt = [dudt_fn(t) for t in times] if dudt_fn is not None else None
    pressures = [pressure_fn(t) for t in times] if pressure_fn is not None else None
    return Trajectory(
        times=times,
        velocities=velocities,
        pressures=pressures,
        dudt=dudt,
        mu=mu,
        metadata=metadata or {},
    )
