"""Seeded property suites behind ``nslab check``: projector algebra, vector
calculus identities, scalar inequalities, and the nonlinear-term identities.

Each suite returns a list of result dicts {name, worst, tol, passed}; the
same functions back the acceptance tests, so the command line and the test
suite agree by construction.
"""

from __future__ import annotations

import numpy as np

from . import inequalities as ineq
from .leray import LerayProjector
from .nonlinear import bilinear, convective, quadratic_expansion_residual, skew_pairing
from .norms import inner_l2, l2_norm, lp_norm
from .spectral import (
    GridSpec,
    curl,
    divergence,
    forward_transform,
    gradient,
    inverse_transform,
    laplacian,
    partial_derivative,
    random_spectral_noise,
)

__all__ = [
    "check_projector",
    "check_calculus",
    "check_inequalities",
    "check_identities",
    "run_suite",
    "SUITES",
]

DEFAULT_N = 32
DEFAULT_SEEDS = tuple(range(50))


def _result(name: str, worst: float, tol: float) -> dict:
    return {"name": name, "worst": float(worst), "tol": tol, "passed": bool(worst <= tol)}


def _vec_max(field) -> float:
    return max(float(np.max(np.abs(c.coeffs))) for c in field.components)


def check_projector(n: int = DEFAULT_N, seeds=DEFAULT_SEEDS, tol: float = 1e-12) -> list:
    """Idempotence, orthogonality, derivative commutation, annihilated
    gradients, fixed divergence-free fields, zero-mode passthrough."""
    grid = GridSpec(n)
    proj = LerayProjector(grid)
    worst = {
        "idempotent": 0.0,
        "l2_orthogonal": 0.0,
        "derivative_commutes": 0.0,
        "projected_divergence": 0.0,
        "gradient_annihilated": 0.0,
        "divfree_fixed": 0.0,
        "zero_mode_passthrough": 0.0,
    }
    for seed in seeds:
        v = random_spectral_noise(grid, seed, vector=True)
        nv = l2_norm(v)
        pv = proj.project(v)
        worst["idempotent"] = max(
            worst["idempotent"], l2_norm(proj.project(pv) - pv) / max(l2_norm(pv), 1e-300)
        )
        worst["l2_orthogonal"] = max(
            worst["l2_orthogonal"], abs(inner_l2(pv, v - pv)) / nv**2
        )
        axis = 1 + seed % 3
        com = partial_derivative(pv, axis) - proj.project(partial_derivative(v, axis))
        scale = max(_vec_max(partial_derivative(v, axis)), 1e-300)
        worst["derivative_commutes"] = max(worst["derivative_commutes"], _vec_max(com) / scale)
        worst["projected_divergence"] = max(
            worst["projected_divergence"], l2_norm(divergence(pv)) / nv
        )
        phi = random_spectral_noise(grid, seed + 10_000, vector=False)
        gphi = gradient(phi)
        worst["gradient_annihilated"] = max(
            worst["gradient_annihilated"],
            l2_norm(proj.project(gphi)) / max(l2_norm(gphi), 1e-300),
        )
        rotv = curl(v)  # divergence free by construction, independent of P
        worst["divfree_fixed"] = max(
            worst["divfree_fixed"],
            l2_norm(proj.project(rotv) - rotv) / max(l2_norm(rotv), 1e-300),
        )
        zmode = np.array([c.coeffs[0, 0, 0] for c in v.components])
        pz = np.array([c.coeffs[0, 0, 0] for c in pv.components])
        worst["zero_mode_passthrough"] = max(
            worst["zero_mode_passthrough"],
            float(np.max(np.abs(zmode - pz))) / max(float(np.max(np.abs(zmode))), 1e-300),
        )
    return [_result(f"projector.{k}", w, tol) for k, w in worst.items()]


def check_calculus(n: int = DEFAULT_N, seeds=DEFAULT_SEEDS, tol: float = 1e-12) -> list:
    """The four curl/gradient/divergence identities, Parseval, linearity,
    Hermitian symmetry preservation, and transform round trips."""
    grid = GridSpec(n)
    worst = {
        "curl_of_gradient": 0.0,
        "div_of_gradient_is_laplacian": 0.0,
        "div_of_curl": 0.0,
        "curl_curl_identity": 0.0,
        "parseval": 0.0,
        "derivative_linearity": 0.0,
        "hermitian_preserved": 0.0,
        "transform_roundtrip": 0.0,
    }
    for seed in seeds:
        phi = random_spectral_noise(grid, seed, vector=False)
        v = random_spectral_noise(grid, seed + 20_000, vector=True)
        scale_phi = max(float(np.max(np.abs(laplacian(phi).coeffs))), 1e-300)
        worst["curl_of_gradient"] = max(
            worst["curl_of_gradient"], _vec_max(curl(gradient(phi))) / scale_phi
        )
        worst["div_of_gradient_is_laplacian"] = max(
            worst["div_of_gradient_is_laplacian"],
            float(np.max(np.abs((divergence(gradient(phi)) - laplacian(phi)).coeffs)))
            / scale_phi,
        )
        scale_v = max(_vec_max(laplacian(v)), 1e-300)
        worst["div_of_curl"] = max(
            worst["div_of_curl"], float(np.max(np.abs(divergence(curl(v)).coeffs))) / scale_v
        )
        resid = (-1) * curl(curl(v)) + gradient(divergence(v)) - laplacian(v)
        worst["curl_curl_identity"] = max(worst["curl_curl_identity"], _vec_max(resid) / scale_v)
        phys = inverse_transform(phi)
        quad = grid.cell_volume * float(np.sum(phys.values**2))
        spec = l2_norm(phi) ** 2
        worst["parseval"] = max(worst["parseval"], abs(quad - spec) / max(spec, 1e-300))
        psi = random_spectral_noise(grid, seed + 30_000, vector=False)
        lin = (
            partial_derivative(phi * 2.0 + psi * (-3.0), 1)
            - (partial_derivative(phi, 1) * 2.0 + partial_derivative(psi, 1) * (-3.0))
        )
        dscale = max(float(np.max(np.abs(partial_derivative(phi, 1).coeffs))), 1e-300)
        worst["derivative_linearity"] = max(
            worst["derivative_linearity"], float(np.max(np.abs(lin.coeffs))) / dscale
        )
        for out in (gradient(phi).components[0], laplacian(phi), divergence(v)):
            worst["hermitian_preserved"] = max(
                worst["hermitian_preserved"], out.hermitian_defect()
            )
        rt = forward_transform(inverse_transform(phi))
        worst["transform_roundtrip"] = max(
            worst["transform_roundtrip"],
            float(np.max(np.abs(rt.coeffs - phi.coeffs)))
            / max(float(np.max(np.abs(phi.coeffs))), 1e-300),
        )
    return [_result(f"calculus.{k}", w, tol) for k, w in worst.items()]


def check_inequalities(seed: int = 2024, draws: int = 10_000) -> list:
    """Equality cases of the integral bounds, product/power fuzz, exponent
    algebra, and the interpolation/conjugate-exponent checks on fields."""
    results = []

    # equality case: Y = e^t saturates the exponential bound
    t = np.linspace(0.0, 1.0, 10_001)
    A = ineq.SampledFunction(t, np.ones_like(t))
    B = ineq.SampledFunction(t, np.ones_like(t))
    _, bound = ineq.gronwall_bound_curve(A, B)
    results.append(
        _result("gronwall.equality_case", np.max(np.abs(bound - np.exp(t)) / np.exp(t)), 1e-10)
    )

    # equality case: Y = (1 + t/2)^2 saturates the sublinear bound, gamma = 1/2
    C = ineq.SampledFunction(t, np.ones_like(t))
    B0 = ineq.SampledFunction(t, np.zeros_like(t))
    _, pbound = ineq.perov_bound_curve(1.0, B0, C, 0.5)
    exact = (1.0 + t / 2.0) ** 2
    results.append(
        _result("perov.equality_case", np.max(np.abs(pbound - exact) / exact), 1e-10)
    )

    yf = ineq.young_fuzz(seed, draws)
    results.append(_result("young.fuzz_violations", yf["violations"], 0))
    bf = ineq.binomial_fuzz(seed + 1, draws)
    results.append(_result("binomial.fuzz_violations", bf["violations"], 0))

    exact_vals = [
        abs(ineq.lps_exponent(4.0) - 8.0),
        abs(ineq.lps_exponent(5.0) - 5.0),
        abs(ineq.energy_exponent(6.0) - 2.0),
        abs(ineq.gn_q_exponent(1, 1, 6.0) - 2.0),
        abs(ineq.gn_q_exponent(1, 1, 4.0) - 2.0),
        abs(ineq.gn_q_exponent(2, 1, 6.0) - 2.25),
    ]
    results.append(_result("exponents.closed_forms", max(exact_vals), 0.0))

    # scaling relations hold to round-off
    rel = 0.0
    for r in np.linspace(3.01, 10.0, 40):
        s = ineq.lps_exponent(r)
        rel = max(rel, abs(2.0 / s + 3.0 / r - 1.0))
    for r in np.linspace(2.01, 6.0, 40):
        s = ineq.energy_exponent(r)
        rel = max(rel, abs(2.0 / s + 3.0 / r - 1.5))
    results.append(_result("exponents.scaling_relations", rel, 1e-14))

    # q(k, j) > 1 with positive denominator over the parameter lattice
    violations = 0
    for r in np.linspace(3.0 + 1e-9, 10.0, 60):
        for k in range(1, 5):
            for j in range(1, k + 1):
                denom = 2.0 * (k + 1) + j * (r - 4.0)
                q = ineq.gn_q_exponent(k, j, r)
                if denom <= 0 or q <= 1.0:
                    violations += 1
    results.append(_result("exponents.q_lattice_violations", violations, 0))

    # interpolation weight closed forms
    a1 = ineq.gn_validity(ineq.GNParameters(0, 1, 4.0, 2.0, 2.0)).a
    a2 = ineq.gn_validity(ineq.GNParameters(0, 1, 3.0, 2.0, 2.0)).a
    results.append(
        _result(
            "interpolation.weight_closed_forms",
            max(abs(a1 - 0.75), abs(a2 - 0.5)),
            1e-14,
        )
    )

    # random-triple hypothesis/conclusion verification: solve the integral
    # equality Y = A + int B Y by implicit trapezoid stepping, then shrink Y
    # by one percent so the hypothesis holds strictly
    rng = np.random.default_rng(seed + 2)
    failures = 0
    for _ in range(3):
        tt = np.linspace(0.0, 1.0, 512)
        a0 = rng.random() + 0.5
        bvals = rng.random(tt.size) * 0.8
        B = ineq.SampledFunction(tt, bvals)
        A = ineq.SampledFunction(tt, np.full(tt.size, a0))
        y = np.empty(tt.size)
        y[0] = a0
        for i in range(1, tt.size):
            dt = tt[i] - tt[i - 1]
            y[i] = y[i - 1] * (1.0 + 0.5 * dt * bvals[i - 1]) / (1.0 - 0.5 * dt * bvals[i])
        rep = ineq.verify_integral_inequality(ineq.SampledFunction(tt, 0.99 * y), A, B)
        failures += 0 if rep["passed"] else 1
    results.append(_result("integral_inequality.random_triples", failures, 0))

    # conjugate-exponent product bound on random lattice fields
    grid = GridSpec(16)
    holder_worst = -np.inf
    for s in range(5):
        f1 = inverse_transform(random_spectral_noise(grid, 40_000 + s, vector=False)).values
        f2 = inverse_transform(random_spectral_noise(grid, 50_000 + s, vector=False)).values
        q1 = 2.0 + 2.0 * (s % 3)
        q2 = 1.0 / (1.0 - 1.0 / q1) if q1 > 1 else np.inf
        q = 1.0
        lhs = (grid.cell_volume * np.sum(np.abs(f1 * f2) ** q)) ** (1 / q)
        rhs = (grid.cell_volume * np.sum(np.abs(f1) ** q1)) ** (1 / q1) * (
            grid.cell_volume * np.sum(np.abs(f2) ** q2)
        ) ** (1 / q2)
        holder_worst = max(holder_worst, (lhs - rhs) / max(rhs, 1e-300))
    results.append(_result("holder.product_bound", max(holder_worst, 0.0), 1e-10))

    # power-mean interpolation between Lebesgue exponents
    interp_worst = 0.0
    for s in range(5):
        fld = random_spectral_noise(grid, 60_000 + s, vector=True)
        p_lo, p_hi = 2.0, 6.0
        p = 3.0
        theta = (p - p_lo) / (p_hi - p_lo)
        lhs = lp_norm(fld, p)
        rhs = lp_norm(fld, p_hi) ** (p_hi * theta / p) * lp_norm(fld, p_lo) ** (
            p_lo * (1 - theta) / p
        )
        interp_worst = max(interp_worst, (lhs - rhs) / max(rhs, 1e-300))
    results.append(_result("interpolation.lebesgue_exponents", interp_worst, 1e-10))

    return results


def check_identities(n: int = DEFAULT_N, seeds=DEFAULT_SEEDS) -> list:
    """Skew symmetry of the convection pairing, the quadratic expansion of
    the convective term, bilinearity, symmetry, and the product rule."""
    grid = GridSpec(n)
    proj = LerayProjector(grid)
    worst = {
        "skew_pairing": 0.0,
        "quadratic_expansion": 0.0,
        "bilinear_symmetry": 0.0,
        "bilinear_of_self": 0.0,
        "bilinearity": 0.0,
        "product_rule": 0.0,
        "product_rule_second_order": 0.0,
    }
    for seed in seeds:
        w = proj.project(random_spectral_noise(grid, seed, vector=True))
        u = random_spectral_noise(grid, seed + 70_000, vector=True)
        worst["skew_pairing"] = max(
            worst["skew_pairing"],
            abs(skew_pairing(w, u)) / (l2_norm(w) * l2_norm(u) ** 2),
        )
        worst["quadratic_expansion"] = max(
            worst["quadratic_expansion"],
            quadratic_expansion_residual(u, w) / (l2_norm(u) + l2_norm(w)) ** 2,
        )
        buw = bilinear(u, w)
        worst["bilinear_symmetry"] = max(
            worst["bilinear_symmetry"],
            _vec_max(bilinear(w, u) - buw) / max(_vec_max(buw), 1e-300),
        )
        worst["bilinear_of_self"] = max(
            worst["bilinear_of_self"],
            _vec_max(bilinear(u, u) - 2.0 * convective(u))
            / max(_vec_max(convective(u)), 1e-300),
        )
    # linearity and the product rule need only a few draws
    for seed in seeds[:5]:
        w = random_spectral_noise(grid, seed + 80_000, vector=True)
        u = random_spectral_noise(grid, seed + 90_000, vector=True)
        v = random_spectral_noise(grid, seed + 100_000, vector=True)
        lin = bilinear(w, u * 2.0 + v * (-0.5)) - (
            bilinear(w, u) * 2.0 + bilinear(w, v) * (-0.5)
        )
        worst["bilinearity"] = max(
            worst["bilinearity"], _vec_max(lin) / max(_vec_max(bilinear(w, u)), 1e-300)
        )
        axis = 1 + seed % 3
        lhs = partial_derivative(bilinear(w, u), axis)
        rhs = bilinear(partial_derivative(w, axis), u) + bilinear(
            w, partial_derivative(u, axis)
        )
        worst["product_rule"] = max(
            worst["product_rule"], _vec_max(lhs - rhs) / max(_vec_max(lhs), 1e-300)
        )
        lhs2 = partial_derivative(partial_derivative(bilinear(w, u), 1), 2)
        rhs2 = (
            bilinear(partial_derivative(partial_derivative(w, 1), 2), u)
            + bilinear(partial_derivative(w, 1), partial_derivative(u, 2))
            + bilinear(partial_derivative(w, 2), partial_derivative(u, 1))
            + bilinear(w, partial_derivative(partial_derivative(u, 1), 2))
        )
        worst["product_rule_second_order"] = max(
            worst["product_rule_second_order"],
            _vec_max(lhs2 - rhs2) / max(_vec_max(lhs2), 1e-300),
        )
    tols = {
        "skew_pairing": 1e-10,
        "quadratic_expansion": 1e-12,
        "bilinear_symmetry": 1e-13,
        "bilinear_of_self": 1e-12,
        "bilinearity": 1e-12,
        "product_rule": 1e-11,
        "product_rule_second_order": 1e-11,
    }
    return [_result(f"identities.{k}", v, tols[k]) for k, v in worst.items()]


SUITES = {
    "projector": check_projector,
    "calculus": check_calculus,
    "inequalities": check_inequalities,
    "identities": check_identities,
}


def run_suite(name: str, **kwargs) -> list:
    """Run one named suite, or all of them."""
    if name == "all":
        results = []
        for fn in SUITES.values():
            results.extend(fn(**kwargs) if kwargs else fn())
        return results
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)} or 'all'")
    return SUITES[name]()
