"""Refinement ladders: run a family of solves at decreasing step (or
increasing resolution), measure errors against a reference, and fit the
observed order by least squares on the log-log points."""

from __future__ import annotations

import numpy as np

from .norms import l2_norm, lp_norm
from .solver import (
    ProblemData,
    SolverConfig,
    galerkin_coefficients,
    galerkin_reduce,
    matrix_exponential_solve,
    solve_linearized,
    solve_navier_stokes,
    solve_stokes,
)

__all__ = ["fit_order", "dt_ladder", "expm_oracle_ladder", "grid_ladder_lp_norm"]

_SOLVERS = {
    "stokes": solve_stokes,
    "navier_stokes": solve_navier_stokes,
}


def fit_order(values, errors) -> float:
    """Least-squares slope of log(error) against log(value)."""
    values = np.asarray(values, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if values.size < 2 or np.any(errors <= 0):
        return float("nan")
    slope, _ = np.polyfit(np.log(values), np.log(errors), 1)
    return float(slope)


def _final_only_cfg(cfg: SolverConfig, dt: float) -> SolverConfig:
    return SolverConfig(
        dt=dt,
        scheme=cfg.scheme,
        snapshot_every=10**9,
        dealias=cfg.dealias,
        cfl_safety=cfg.cfl_safety,
        store_dudt=False,
        store_pressure=False,
    )


def dt_ladder(
    data: ProblemData,
    cfg: SolverConfig,
    dts,
    kind: str = "navier_stokes",
    w=None,
    ref_refine: int = 8,
) -> dict:
    """Step-refinement ladder; errors are relative L^2 distances of the final
    state from a reference run at min(dt)/ref_refine."""
    dts = sorted(float(d) for d in dts)
    if len(dts) < 3:
        raise ValueError("a refinement ladder needs at least three entries")

    def run(dt: float):
        c = _final_only_cfg(cfg, dt)
        if kind == "linearized":
            return solve_linearized(data, w, c)
        return _SOLVERS[kind](data, c)

    ref = run(dts[0] / ref_refine).velocities[-1]
    ref_norm = max(l2_norm(ref), 1e-300)
    errors = [l2_norm(run(dt).velocities[-1] - ref) / ref_norm for dt in dts]
    return {
        "quantity": "dt",
        "values": dts,
        "errors": errors,
        "fitted_order": fit_order(dts, errors),
        "reference": f"self, dt = min/{ref_refine}",
    }


def expm_oracle_ladder(
    data: ProblemData,
    w,
    m: int,
    cfg: SolverConfig,
    dts,
) -> dict:
    """Compare the linearized solver against the matrix-exponential solution
    of the m-mode reduction; requires data and w that keep the reduced span
    invariant (constant-in-space w, data in the span)."""
    dts = sorted(float(d) for d in dts)
    if len(dts) < 3:
        raise ValueError("a refinement ladder needs at least three entries")
    system = galerkin_reduce(data, w, m)
    oracle = matrix_exponential_solve(system, data.T)
    scale = max(float(np.max(np.abs(oracle))), l2_norm(data.u0), 1e-300)
    errors = []
    for dt in dts:
        traj = solve_linearized(data, w, _final_only_cfg(cfg, dt))
        coeffs = galerkin_coefficients(traj, system.basis)[-1]
        errors.append(float(np.max(np.abs(coeffs - oracle))) / scale)
    return {
        "quantity": "dt",
        "values": dts,
        "errors": errors,
        "fitted_order": fit_order(dts, errors),
        "reference": f"matrix exponential, m = {m}",
        "oracle_final": oracle.tolist(),
    }


def grid_ladder_lp_norm(field_fn, p: float, ns, box_length: float = 2.0 * np.pi) -> dict:
    """Resolution ladder for the lattice L^p quadrature of a smooth field.

    ``field_fn(X, Y, Z)`` returns physical samples; the reference value is
    the evaluation on a grid twice as fine as the largest requested."""
    from .spectral import GridSpec, RealScalarField

    ns = sorted(int(n) for n in ns)
    if len(ns) < 3:
        raise ValueError("a refinement ladder needs at least three entries")

    def value(n: int) -> float:
        grid = GridSpec(n, box_length)
        X, Y, Z = grid.meshgrid()
        return lp_norm(RealScalarField(grid, field_fn(X, Y, Z)), p)

    ref = value(2 * ns[-1])
    errors = [abs(value(n) - ref) / max(abs(ref), 1e-300) for n in ns]
    return {
        "quantity": "n",
        "values": [float(n) for n in ns],
        "errors": errors,
        "fitted_order": fit_order(ns, errors),
        "reference": f"lattice at n = {2 * ns[-1]}",
    }
