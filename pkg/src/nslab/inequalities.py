"""Scalar integral inequalities and exponent algebra: exponential integral
bounds, the sublinear-perturbation variant, discrete product/power
inequalities, and the interpolation exponent bookkeeping.

All time quadrature is composite trapezoid on the given samples.  Inequality
checks pass with slack >= -SLACK to absorb quadrature error; SLACK is the
single documented constant below.

For the interpolation family j0 = 0, m0 = 1, q0 = r0 = 2 in dimension 3 the
dimensional balance has the unique solution a = 3 (p0 - 2) / (2 p0); it
requires p0 equal to the target Lebesgue exponent itself (p0 = r), not its
reciprocal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SLACK",
    "SampledFunction",
    "GNParameters",
    "GNValidity",
    "gronwall_bound",
    "gronwall_bound_curve",
    "perov_bound",
    "perov_bound_curve",
    "verify_integral_inequality",
    "young_check",
    "binomial_check",
    "young_fuzz",
    "binomial_fuzz",
    "gn_validity",
    "gn_q_exponent",
    "lps_exponent",
    "energy_exponent",
    "gn_field_check",
]

# Slack absorbing quadrature error in all inequality verdicts.
SLACK = 1e-9

_trapz = np.trapezoid if hasattr(np, "trapezoid") else np.trapz


def _cumtrapz0(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Cumulative trapezoid integral starting at 0."""
    out = np.zeros_like(values, dtype=np.float64)
    dt = np.diff(times)
    out[1:] = np.cumsum(0.5 * dt * (values[1:] + values[:-1]))
    return out


@dataclass
class SampledFunction:
    """A scalar function known at increasing sample times."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise ValueError("times and values must be 1-D arrays of equal length")
        if self.times.size < 2:
            raise ValueError("need at least two samples")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("sample times must be strictly increasing")

    @classmethod
    def constant(cls, value: float, t0: float, t1: float, num: int = 2):
        t = np.linspace(t0, t1, num)
        return cls(t, np.full(num, float(value)))

    def __call__(self, t) -> np.ndarray:
        return np.interp(t, self.times, self.values)

    def is_nondecreasing(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.diff(self.values) >= -tol))

    def is_nonnegative(self, tol: float = 0.0) -> bool:
        return bool(np.all(self.values >= -tol))


def _common_times(*fns: SampledFunction) -> np.ndarray:
    times = fns[0].times
    for f in fns[1:]:
        if f.times.shape != times.shape or not np.allclose(f.times, times):
            times = np.unique(np.concatenate([times, f.times]))
    return times


def gronwall_bound_curve(A: SampledFunction, B: SampledFunction):
    """Bound A(t) exp(int_0^t B) on the common sample times; returns (times, bound)."""
    if not A.is_nondecreasing(tol=1e-14):
        raise ValueError("A must be nondecreasing")
    if not B.is_nonnegative(tol=0.0):
        raise ValueError("B must be nonnegative")
    times = _common_times(A, B)
    ib = _cumtrapz0(B(times), times)
    with np.errstate(over="ignore"):
        return times, A(times) * np.exp(ib)


def gronwall_bound(A: SampledFunction, B: SampledFunction, t: float) -> float:
    """Exponential integral bound A(t) exp(int B) at time t."""
    times, curve = gronwall_bound_curve(A, B)
    if t < times[0] - 1e-12 or t > times[-1] + 1e-12:
        raise ValueError(f"t = {t} lies outside the sampled interval")
    return float(np.interp(t, times, curve))


def perov_bound_curve(
    A: float, B: SampledFunction, C: SampledFunction, gamma: float
):
    """Sublinear-perturbation bound
    (A^g exp(g int_0^t B) + g int_0^t C(s) exp(g int_s^t B) ds)^(1/g),
    evaluated on the common sample times."""
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    if A < 0:
        raise ValueError("A must be nonnegative")
    if not B.is_nonnegative() or not C.is_nonnegative():
        raise ValueError("B and C must be nonnegative")
    times = _common_times(B, C)
    bv, cv = B(times), C(times)
    ib = _cumtrapz0(bv, times)
    bound = np.empty_like(times)
    for i, t in enumerate(times):
        # int_s^t B = ib[i] - ib[:i+1]
        integrand = cv[: i + 1] * np.exp(gamma * (ib[i] - ib[: i + 1]))
        inner = _trapz(integrand, times[: i + 1]) if i > 0 else 0.0
        bound[i] = (A**gamma * np.exp(gamma * ib[i]) + gamma * inner) ** (1.0 / gamma)
    return times, bound


def perov_bound(
    A: float, B: SampledFunction, C: SampledFunction, gamma: float, t: float
) -> float:
    times, curve = perov_bound_curve(A, B, C, gamma)
    if t < times[0] - 1e-12 or t > times[-1] + 1e-12:
        raise ValueError(f"t = {t} lies outside the sampled interval")
    return float(np.interp(t, times, curve))


def verify_integral_inequality(
    Y: SampledFunction,
    A,
    B: SampledFunction,
    C: SampledFunction | None = None,
    gamma: float | None = None,
) -> dict:
    """Check hypothesis and conclusion of the integral-bound lemmas on samples.

    Gronwall form (C is None): hypothesis Y <= A + int B Y, conclusion
    Y <= A exp(int B).  Otherwise the sublinear form with constant A and
    exponent gamma.  Passes iff both hold with slack >= -SLACK.
    """
    if C is None:
        times = _common_times(Y, A, B)
        yv, av, bv = Y(times), A(times), B(times)
        hyp_rhs = av + _cumtrapz0(bv * yv, times)
        tg, bg = gronwall_bound_curve(A, B)
        bound = np.interp(times, tg, bg)
        form = "exponential"
    else:
        if gamma is None:
            raise ValueError("gamma is required together with C")
        times = _common_times(Y, B, C)
        yv, bv, cv = Y(times), B(times), C(times)
        hyp_rhs = float(A) + _cumtrapz0(bv * yv + cv * yv ** (1.0 - gamma), times)
        tb, bound_tb = perov_bound_curve(float(A), B, C, gamma)
        bound = np.interp(times, tb, bound_tb)
        form = "sublinear"
    hyp_margin = hyp_rhs - yv
    bound_margin = bound - yv
    return {
        "form": form,
        "hypothesis_worst_margin": float(np.min(hyp_margin)),
        "bound_worst_margin": float(np.min(bound_margin)),
        "passed": bool(
            np.min(hyp_margin) >= -SLACK and np.min(bound_margin) >= -SLACK
        ),
    }


def young_check(a, p) -> dict:
    """Product bound prod a_j <= sum a_j^{p_j} / p_j for conjugate exponents."""
    a = np.asarray(a, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if a.shape != p.shape or a.ndim != 1:
        raise ValueError("a and p must be 1-D of equal length")
    if np.any(a <= 0):
        raise ValueError("factors must be positive")
    if np.any(p < 1):
        raise ValueError("exponents must be >= 1")
    if abs(np.sum(1.0 / p) - 1.0) > 1e-12:
        raise ValueError("exponents must satisfy sum 1/p_j = 1")
    lhs = float(np.prod(a))
    rhs = float(np.sum(a**p / p))
    return {"lhs": lhs, "rhs": rhs, "margin": rhs - lhs, "passed": rhs - lhs >= -SLACK}


def binomial_check(a: float, b: float, m: int, n: int) -> dict:
    """Power-sum bound a^{m/n} + b^{m/n} <= 2^{(n-1)/n} (a+b)^{m/n}."""
    if a < 0 or b < 0:
        raise ValueError("a and b must be nonnegative")
    if m < 1 or n < 1 or m != int(m) or n != int(n):
        raise ValueError("m and n must be natural numbers")
    e = m / n
    lhs = a**e + b**e
    rhs = 2.0 ** ((n - 1) / n) * (a + b) ** e
    return {"lhs": lhs, "rhs": rhs, "margin": rhs - lhs, "passed": rhs - lhs >= -SLACK}


def young_fuzz(seed: int, draws: int = 10_000, max_factors: int = 4) -> dict:
    """Randomised check corpus; returns a JSON-ready report."""
    rng = np.random.default_rng(seed)
    worst = np.inf
    violations = 0
    for _ in range(draws):
        k = int(rng.integers(2, max_factors + 1))
        w = rng.random(k) + 0.05
        p = np.sum(w) / w  # sum 1/p_j = 1 by construction
        a = rng.random(k) * 10.0 + 1e-3
        rep = young_check(a, p)
        worst = min(worst, rep["margin"])
        violations += 0 if rep["passed"] else 1
    return {"seed": seed, "draws": draws, "worst_margin": worst, "violations": violations}


def binomial_fuzz(seed: int, draws: int = 10_000) -> dict:
    rng = np.random.default_rng(seed)
    worst = np.inf
    violations = 0
    for _ in range(draws):
        a, b = rng.random(2) * 10.0
        m = int(rng.integers(1, 9))
        n = int(rng.integers(1, 9))
        rep = binomial_check(a, b, m, n)
        worst = min(worst, rep["margin"])
        violations += 0 if rep["passed"] else 1
    return {"seed": seed, "draws": draws, "worst_margin": worst, "violations": violations}


@dataclass(frozen=True)
class GNParameters:
    """Exponent set for the multiplicative interpolation inequality
    ||D^j0 v||_{p0} <= c ||D^m0 v||_{r0}^a ||v||_{q0}^{1-a}."""

    j0: int
    m0: int
    p0: float
    q0: float
    r0: float
    a: float | None = None
    n: int = 3

    def __post_init__(self):
        if self.j0 < 0 or self.m0 < 0:
            raise ValueError("derivative orders must be nonnegative")
        for name in ("p0", "q0", "r0"):
            v = getattr(self, name)
            if not (v >= 1 or math.isinf(v)):
                raise ValueError(f"{name} must be >= 1 or inf")
        if self.a is not None and not 0.0 <= self.a <= 1.0:
            raise ValueError("a must lie in [0, 1]")

    @classmethod
    def solve(cls, j0, m0, p0, q0, r0, n=3) -> "GNParameters":
        params = cls(j0, m0, p0, q0, r0, a=None, n=n)
        return cls(j0, m0, p0, q0, r0, a=gn_validity(params).a, n=n)


@dataclass(frozen=True)
class GNValidity:
    """Solved interpolation weight plus exceptional-case flags."""

    a: float
    needs_decay_hypothesis: bool  # j0 = 0, m0 r0 < n, q0 = inf
    integer_gap_case: bool  # 1 < r0 < inf and m0 - j0 - n/r0 a nonnegative integer


def _inv(x: float) -> float:
    return 0.0 if math.isinf(x) else 1.0 / x


def gn_validity(params: GNParameters) -> GNValidity:
    """Solve the dimensional balance for the weight a and validate it.

    Balance: 1/p0 = j0/n + a (1/r0 - m0/n) + (1-a)/q0, with j0/m0 <= a <= 1.
    Raises ValueError when no admissible a exists.
    """
    n = float(params.n)
    coeff = _inv(params.r0) - params.m0 / n - _inv(params.q0)
    rhs = _inv(params.p0) - params.j0 / n - _inv(params.q0)
    if abs(coeff) < 1e-14:
        if abs(rhs) > 1e-12:
            raise ValueError("dimensional balance has no solution for a")
        a = params.a if params.a is not None else (
            params.j0 / params.m0 if params.m0 > 0 else 0.0
        )
    else:
        a = rhs / coeff
    if params.a is not None and abs(a - params.a) > 1e-10:
        raise ValueError(
            f"supplied weight a = {params.a} violates the balance (need {a})"
        )
    lower = params.j0 / params.m0 if params.m0 > 0 else 0.0
    if not (lower - 1e-12 <= a <= 1.0 + 1e-12):
        raise ValueError(f"weight a = {a} outside the admissible range [{lower}, 1]")
    a = min(max(a, 0.0), 1.0)
    needs_decay = (
        params.j0 == 0 and math.isinf(params.q0) and params.m0 * params.r0 < n
    )
    gap = params.m0 - params.j0 - n * _inv(params.r0)
    integer_gap = (
        1.0 < params.r0 < math.inf
        and gap >= -1e-12
        and abs(gap - round(gap)) < 1e-12
    )
    if integer_gap and a >= 1.0 - 1e-12 and params.j0 < params.m0:
        raise ValueError("this exponent set requires a < 1")
    return GNValidity(a=float(a), needs_decay_hypothesis=needs_decay, integer_gap_case=integer_gap)


def gn_q_exponent(k: int, j: int, r: float) -> float:
    """Conjugate-pairing exponent q(k, j) = (k+1) r / (2(k+1) + j(r-4))."""
    if k < 0 or not 1 <= j <= k:
        raise ValueError(f"need 1 <= j <= k, got k={k}, j={j}")
    if not r > 3:
        raise ValueError(f"need r > 3, got {r}")
    denom = 2.0 * (k + 1) + j * (r - 4.0)
    if denom <= 0:
        raise ValueError("exponent denominator is not positive")
    q = (k + 1) * r / denom
    if q <= 1.0:
        raise ValueError("derived exponent q must exceed 1")
    return float(q)


def lps_exponent(r: float) -> float:
    """Time exponent pairing with L^r in the scaling 2/s + 3/r = 1 (r > 3)."""
    if not r > 3:
        raise ValueError(f"need r > 3, got {r}")
    if math.isinf(r):
        return 2.0
    return 2.0 * r / (r - 3.0)


def energy_exponent(r: float) -> float:
    """Time exponent pairing with L^r in the scaling 2/s + 3/r = 3/2 (2 < r <= 6)."""
    if not 2.0 < r <= 6.0:
        raise ValueError(f"need 2 < r <= 6, got {r}")
    return 4.0 * r / (3.0 * r - 6.0)


def gn_field_check(fld, params: GNParameters) -> float:
    """Empirical interpolation ratio
    ||D^j0 v||_{p0} / (||D^m0 v||_{r0}^a ||v||_{q0}^{1-a}) on the lattice,
    with D^j the max over derivative multi-indices of order j."""
    from .norms import lp_norm
    from .spectral import partial_derivative

    validity = gn_validity(params)
    a = validity.a

    def d_norm(order: int, p: float) -> float:
        if order == 0:
            return lp_norm(fld, p)
        best = 0.0
        for alpha in _order_multi_indices(order):
            g = fld
            for axis, reps in enumerate(alpha):
                for _ in range(reps):
                    g = partial_derivative(g, axis + 1)
            best = max(best, lp_norm(g, p))
        return best

    num = d_norm(params.j0, params.p0)
    den_hi = d_norm(params.m0, params.r0)
    den_lo = lp_norm(fld, params.q0)
    if den_hi == 0.0 or den_lo == 0.0:
        raise ValueError("degenerate denominator in interpolation ratio")
    ratio = num / (den_hi**a * den_lo ** (1.0 - a))
    if not np.isfinite(ratio):
        raise ValueError("interpolation ratio is not finite")
    return float(ratio)


def _order_multi_indices(order: int):
    for a1 in range(order + 1):
        for a2 in range(order + 1 - a1):
            yield (a1, a2, order - a1 - a2)
