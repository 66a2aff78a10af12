"""Small-d asymptotics of steady profiles.

Setting d = 0 leaves an outer problem in which

    u_plus*c*p_plus - nu_minus*p_minus = alpha        (constant)
    (c + alpha/k)'' = (k/D) (c + alpha/k)

and a scalar linear ODE for z = u_plus*c*p_plus.  Only p_plus(0) and the
c datum survive as boundary conditions; the mismatch in p_minus(0) is
absorbed by an inner layer of width O(d) in which p_plus and c are frozen
and p_minus relaxes exponentially at rate nu_minus in x/d.

Two outer families exist: c(+inf) = 0 ("I", alpha = 0, p_plus dies out
super-exponentially) and c(+inf) = c_inf > 0 ("II", alpha = -k*c_inf).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import SolverError, TrivialOnlyError
from .model import (DIRICHLET, BoundaryCondition, ModelParams, _check_physical,
                    endstate_from_c)

__all__ = [
    "CASE_I",
    "CASE_II",
    "SlowSolution",
    "FastLayer",
    "slow_solve",
    "fast_layer_solve",
    "composite",
    "outer_region_start",
    "outer_error",
    "d_sweep",
]

CASE_I = "I"
CASE_II = "II"
X_MAX = 60.0
_RTOL, _ATOL = 1e-12, 1e-14


@dataclass(frozen=True)
class SlowSolution:
    """Outer solution on [0, x_max]; constant continuation beyond."""

    params: ModelParams
    case: str
    alpha_cons: float
    c0: float
    c_inf: float
    p_plus_0: float
    x_max: float
    _log_pp: object = None      # case I: dense solution for log|p+| in tau = exp(s x)
    _z: object = None           # case II: dense solution for z = u_plus c p+

    @property
    def decay_rate(self) -> float:
        return float(np.sqrt(self.params.k / self.params.D))

    def c_of_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.c_inf + np.exp(-self.decay_rate * x) * (self.c0 - self.c_inf)

    def log_abs_p_plus(self, x) -> np.ndarray:
        """log|p+|; only meaningful in case I with p_plus(0) != 0."""
        if self._log_pp is None:
            raise ValueError("log|p+| is tracked only for case I solutions")
        x = np.clip(np.asarray(x, dtype=float), 0.0, self.x_max)
        return self._log_pp(np.exp(self.decay_rate * x))[0]

    def p_plus_of_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.case == CASE_I:
            if self.p_plus_0 == 0.0:
                return np.zeros_like(x)
            return np.sign(self.p_plus_0) * np.exp(self.log_abs_p_plus(x))
        z = self._z(np.clip(x, 0.0, self.x_max))[0]
        return z / (self.params.u_plus * self.c_of_x(x))

    def p_minus_of_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        nu_plus = self.params.u_plus * self.c_of_x(x)
        return (nu_plus * self.p_plus_of_x(x) - self.alpha_cons) / self.params.nu_minus

    def __call__(self, x) -> np.ndarray:
        """(3, n) array of (p+, p-, c)."""
        return np.array([self.p_plus_of_x(x), self.p_minus_of_x(x), self.c_of_x(x)])

    def limit(self) -> np.ndarray:
        if self.case == CASE_I:
            return np.zeros(3)
        return endstate_from_c(self.params, self.c_inf).state

    def p_plus_closed_form(self, x) -> np.ndarray:
        """Explicit case I formula, used as an independent check of the quadrature."""
        if self.case != CASE_I:
            raise ValueError("closed form available for case I only")
        return np.sign(self.p_plus_0) * np.exp(_case1_log_closed(self.params, self.c0, self.p_plus_0, x))

    def at_zero(self) -> np.ndarray:
        return self(np.array([0.0]))[:, 0]


def _case1_log_closed(params, c0, p0, x):
    x = np.asarray(x, dtype=float)
    s = np.sqrt(params.k / params.D)
    return (np.log(abs(p0))
            + params.omega * c0 / (params.nu_minus * s) * (-np.expm1(-s * x))
            - params.f_cat / (params.u_plus * c0 * s) * np.expm1(s * x)
            + s * x)


def slow_solve(params: ModelParams, bc: BoundaryCondition, case: str = CASE_I,
               c_inf: float = 0.0, x_max: float = X_MAX) -> SlowSolution:
    """Outer (d = 0) solution; ``params.d`` is ignored."""
    case = str(case).upper()
    if case not in (CASE_I, CASE_II):
        raise ValueError(f"case must be 'I' or 'II', got {case!r}")
    s = np.sqrt(params.k / params.D)
    if case == CASE_I:
        if bc.kind != DIRICHLET:
            raise TrivialOnlyError(
                "zero-flux c data with c(+inf) = 0 forces c = 0, hence p- = 0 and p+ = 0: "
                "only the trivial outer solution exists")
        c0 = float(bc.c_0)
        if not c0 > 0:
            raise ValueError("case I outer solution needs c(0) > 0")
        p0 = float(bc.p_plus_0)
        sol = None
        if p0 != 0.0:
            tau_max = np.exp(s * x_max)
            a = params.omega * c0 / (s * params.nu_minus)
            b = params.f_cat / (params.u_plus * c0 * s)

            def rhs(tau, y):
                return [a / tau**2 - b + 1.0 / tau]

            res = solve_ivp(rhs, (1.0, tau_max), [np.log(abs(p0))], method="DOP853",
                            rtol=_RTOL, atol=_ATOL, dense_output=True)
            if not res.success:
                raise SolverError(f"case I quadrature failed: {res.message}")
            sol = res.sol
        return SlowSolution(params, CASE_I, 0.0, c0, 0.0, p0, x_max, _log_pp=sol)

    c_inf = float(c_inf)
    if not c_inf > 0:
        raise ValueError("case II needs c_inf > 0")
    _check_physical(params, c_inf)
    alpha = -params.k * c_inf
    c0 = float(bc.c_0) if bc.kind == DIRICHLET else c_inf
    if not c0 > 0:
        raise ValueError("outer p+ equation is singular at c = 0; need c(0) > 0")
    p0 = float(bc.p_plus_0)
    w, nu, up, f = params.omega, params.nu_minus, params.u_plus, params.f_cat

    def c_of(x):
        return c_inf + np.exp(-s * x) * (c0 - c_inf)

    def rhs(x, z):
        c = c_of(x)
        return (w * c / nu - f / (up * c)) * z - w * c * alpha / nu

    res = solve_ivp(rhs, (0.0, x_max), [up * c0 * p0], method="DOP853",
                    rtol=_RTOL, atol=_ATOL, dense_output=True)
    if not res.success:
        raise SolverError(f"case II quadrature failed: {res.message}")
    return SlowSolution(params, CASE_II, alpha, c0, c_inf, p0, x_max, _z=res.sol)


@dataclass(frozen=True)
class FastLayer:
    """Inner layer in the stretched variable x/d."""

    params: ModelParams
    p_plus: float
    c: float
    p_minus_outer: float
    p_minus_jump: float

    def __call__(self, x_tilde) -> np.ndarray:
        xt = np.asarray(x_tilde, dtype=float)
        pm = self.p_minus_outer + self.p_minus_jump * np.exp(-self.params.nu_minus * xt)
        return np.array([np.full_like(xt, self.p_plus), pm, np.full_like(xt, self.c)])

    @property
    def half_width(self) -> float:
        """Stretched distance over which the p- mismatch halves."""
        return np.log(2.0) / self.params.nu_minus

    def limit(self) -> np.ndarray:
        return np.array([self.p_plus, self.p_minus_outer, self.c])


def fast_layer_solve(params: ModelParams, outer_value_at_0, bc: BoundaryCondition) -> FastLayer:
    pp, pm, c = np.asarray(outer_value_at_0, dtype=float)
    return FastLayer(params, float(pp), float(c), float(pm), float(bc.p_minus_0 - pm))


def composite(params: ModelParams, bc: BoundaryCondition, case: str = CASE_I, x=None,
              c_inf: float = 0.0, slow: Optional[SlowSolution] = None) -> np.ndarray:
    """Outer + inner - common limit on ``x``; (3, n) array of (p+, p-, c)."""
    if x is None:
        x = np.linspace(0.0, 30.0, 601)
    x = np.asarray(x, dtype=float)
    if slow is None:
        slow = slow_solve(params, bc, case, c_inf)
    outer = slow(x)
    layer = fast_layer_solve(params, slow.at_zero(), bc)
    return outer + layer(x / params.d) - layer.limit()[:, None]


def outer_region_start(d: float) -> float:
    return max(0.5, 10.0 * d)


def outer_error(profile, case: str = CASE_I, c_inf: float = 0.0, x_min: float = 0.5,
                n: int = 4001) -> float:
    """Max-norm gap between a full profile and the composite on [x_min, .8 M].

    A fixed ``x_min`` makes errors at different d comparable; pass
    ``outer_region_start(d)`` to measure strictly outside the layer.
    """
    params = profile.params
    x = np.linspace(x_min, 0.8 * profile.M, n)
    approx = composite(params, profile.bc, case, x, c_inf)
    full = profile(x)[[0, 2, 4]]
    return float(np.max(np.abs(full - approx)))


def d_sweep(params: ModelParams, bc: BoundaryCondition, ds: Sequence[float] = (0.1, 0.05, 0.025),
            case: str = CASE_I, c_inf: float = 0.0, **profile_kw) -> list[dict]:
    """Full profiles at each d against the composite; rows {d, sup_error_outer}."""
    from .profile import solve_profile

    es = endstate_from_c(params, 0.0 if str(case).upper() == CASE_I else c_inf)
    rows = []
    for d in ds:
        p = params.replace(d=float(d))
        prof = solve_profile(p, bc, es, **profile_kw)
        rows.append({"d": float(d), "sup_error_outer": outer_error(prof, case, c_inf)})
    return rows
