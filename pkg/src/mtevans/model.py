"""Parameters, state types and coefficient matrices of the microtubule model.

The time-dependent system is

    U_t = A(U) U_x + B(U) U + C U_xx,    U = (p_plus, p_minus, c),

with growth speed ``u_plus * c`` and rescue rate ``omega * c``.  Steady
states are written as the first-order system ``Y' = F(Y)`` with
``Y = (p+, p+_x, p-, p-_x, c, c_x)``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import PhysicalityError

__all__ = [
    "ModelParams",
    "Endstate",
    "BoundaryCondition",
    "DIRICHLET",
    "NEUMANN",
    "fig3_params",
    "typical_params",
    "physicality",
    "physicality_margin",
    "endstate_from_c",
    "endstate_from_total_density",
    "matrix_A",
    "matrix_B",
    "matrix_C",
    "matrix_B_tilde",
    "linearized_B",
    "rhs_F",
    "jacobian_F",
    "jacobian_at_infinity",
]

DIRICHLET = "dirichlet"
NEUMANN = "neumann"


@dataclass(frozen=True)
class ModelParams:
    """The seven positive model constants.

    ``f_cat`` is the constant growth->shrink (catastrophe) rate; the rescue
    rate is ``omega * c``.
    """

    d: float
    D: float
    omega: float
    nu_minus: float
    f_cat: float
    u_plus: float
    k: float

    def __post_init__(self):
        for name, val in asdict(self).items():
            if not np.isfinite(val) or val <= 0:
                raise ValueError(f"ModelParams.{name} must be a positive finite number, got {val!r}")

    def replace(self, **changes) -> "ModelParams":
        vals = asdict(self)
        vals.update(changes)
        return ModelParams(**vals)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        return cls(**{k: float(data[k]) for k in ("d", "D", "omega", "nu_minus", "f_cat", "u_plus", "k")})


def fig3_params(**overrides) -> ModelParams:
    """d = .1, D = 1 and every other constant equal to one."""
    base = dict(d=0.1, D=1.0, omega=1.0, nu_minus=1.0, f_cat=1.0, u_plus=1.0, k=1.0)
    base.update(overrides)
    return ModelParams(**base)


def typical_params(u_plus: float, k: float, d: float = 1e-3) -> ModelParams:
    """Literature-scale constants; ``u_plus`` and ``k`` have no typical value and must be given.

    The tip diffusion ``d`` is nominally ~0; a small positive default keeps the
    model parabolic.
    """
    return ModelParams(d=d, D=0.5, omega=0.15, nu_minus=0.05, f_cat=0.0005, u_plus=u_plus, k=k)


@dataclass(frozen=True)
class Endstate:
    """A point of the equilibrium curve, parameterized by its concentration."""

    c_plus: float
    p_plus_inf: float
    p_minus_inf: float

    @property
    def state(self) -> np.ndarray:
        """``(p+, p-, c)`` as an array."""
        return np.array([self.p_plus_inf, self.p_minus_inf, self.c_plus])

    @property
    def y(self) -> np.ndarray:
        """The rest point of ``Y' = F(Y)``: values with zero derivatives."""
        return np.array([self.p_plus_inf, 0.0, self.p_minus_inf, 0.0, self.c_plus, 0.0])

    @property
    def total_density(self) -> float:
        return self.p_plus_inf + self.p_minus_inf

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BoundaryCondition:
    """Data at x = 0: Dirichlet on both densities, Dirichlet or zero flux on c."""

    kind: str
    p_plus_0: float
    p_minus_0: float
    c_0: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (DIRICHLET, NEUMANN):
            raise ValueError(f"unknown boundary condition kind {self.kind!r}")
        if self.kind == DIRICHLET and self.c_0 is None:
            raise ValueError("Dirichlet boundary condition needs c_0")
        if self.kind == NEUMANN and self.c_0 is not None:
            raise ValueError("Neumann boundary condition prescribes c_x(0) = 0, not c_0")

    @classmethod
    def dirichlet(cls, p_plus_0, p_minus_0, c_0) -> "BoundaryCondition":
        return cls(DIRICHLET, float(p_plus_0), float(p_minus_0), float(c_0))

    @classmethod
    def neumann(cls, p_plus_0, p_minus_0) -> "BoundaryCondition":
        return cls(NEUMANN, float(p_plus_0), float(p_minus_0))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "BoundaryCondition":
        kind = data.get("kind", DIRICHLET).lower()
        if kind == DIRICHLET:
            return cls.dirichlet(data["p_plus_0"], data["p_minus_0"], data["c_0"])
        return cls.neumann(data["p_plus_0"], data["p_minus_0"])


def physicality_margin(params: ModelParams, c: float) -> float:
    return params.nu_minus * params.f_cat - params.u_plus * params.omega * c * c


def physicality(params: ModelParams, c: float) -> bool:
    """True iff ``nu_minus*f_cat - u_plus*omega*c**2 > 0``."""
    return bool(physicality_margin(params, c) > 0)


def _check_physical(params, c):
    margin = physicality_margin(params, c)
    if not margin > 0:
        raise PhysicalityError(
            f"physicality violated at c = {c!r}: nu_minus*f_cat - u_plus*omega*c^2 = {margin!r} <= 0",
            margin=margin,
        )
    return margin


def endstate_from_c(params: ModelParams, c_plus: float) -> Endstate:
    """The equilibrium with concentration ``c_plus``.

    Raises PhysicalityError when the densities would be negative or infinite.
    """
    c_plus = float(c_plus)
    if c_plus < 0:
        raise ValueError(f"c_plus must be nonnegative, got {c_plus}")
    denom = _check_physical(params, c_plus)
    p_plus = params.omega * params.k * c_plus**2 / denom
    p_minus = params.k * c_plus * params.f_cat / denom
    return Endstate(c_plus, p_plus, p_minus)


def endstate_from_total_density(params: ModelParams, p_total: float) -> Endstate:
    """The equilibrium whose density p+ + p- equals ``p_total``.

    Total density increases monotonically from 0 to infinity as c runs over
    the physical range, so the root is unique.
    """
    p_total = float(p_total)
    if p_total < 0:
        raise PhysicalityError(f"no physical equilibrium has negative total density {p_total!r}")
    if p_total == 0:
        return endstate_from_c(params, 0.0)
    c_max = np.sqrt(params.nu_minus * params.f_cat / (params.u_plus * params.omega))

    def excess(c):
        return endstate_from_c(params, c).total_density - p_total

    hi = c_max * (1 - 1e-15)
    c = brentq(excess, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return endstate_from_c(params, c)


def _state(U):
    U = np.asarray(U, dtype=float)
    return U[0], U[1], U[2]


def matrix_A(params: ModelParams, U) -> np.ndarray:
    p_plus, _, c = _state(U)
    up = params.u_plus
    return np.array([
        [-up * c, 0.0, -up * p_plus],
        [0.0, params.nu_minus, 0.0],
        [0.0, 0.0, 0.0],
    ])


def matrix_B(params: ModelParams, U) -> np.ndarray:
    _, _, c = _state(U)
    wc = params.omega * c
    return np.array([
        [-params.f_cat, wc, 0.0],
        [params.f_cat, -wc, 0.0],
        [-params.u_plus * c, params.nu_minus, -params.k],
    ])


def matrix_C(params: ModelParams) -> np.ndarray:
    return np.diag([params.d, params.d, params.D])


def linearized_B(params: ModelParams, U) -> np.ndarray:
    """Jacobian of ``U -> B(U) U`` at an arbitrary state."""
    p_plus, p_minus, c = _state(U)
    w, up = params.omega, params.u_plus
    return np.array([
        [-params.f_cat, w * c, w * p_minus],
        [params.f_cat, -w * c, -w * p_minus],
        [-up * c, params.nu_minus, -params.k - up * p_plus],
    ])


def matrix_B_tilde(params: ModelParams, endstate: Endstate) -> np.ndarray:
    """Zero-order coefficient of the linearization about a constant endstate."""
    _check_physical(params, endstate.c_plus)
    return linearized_B(params, endstate.state)


def rhs_F(params: ModelParams, Y) -> np.ndarray:
    """Steady-state vector field; ``Y`` may be (6,) or (6, n)."""
    Y = np.asarray(Y, dtype=float)
    y1, y2, y3, y4, y5, y6 = Y
    d, D, w = params.d, params.D, params.omega
    up, nu, f, k = params.u_plus, params.nu_minus, params.f_cat, params.k
    return np.array([
        y2,
        (up * y5 * y2 + up * y1 * y6 + f * y1 - w * y5 * y3) / d,
        y4,
        (w * y5 * y3 - nu * y4 - f * y1) / d,
        y6,
        (up * y5 * y1 - nu * y3 + k * y5) / D,
    ])


def jacobian_F(params: ModelParams, Y) -> np.ndarray:
    """dF/dY; for (6, n) input returns shape (6, 6, n)."""
    Y = np.asarray(Y, dtype=float)
    y1, y2, y3, y4, y5, y6 = Y
    d, D, w = params.d, params.D, params.omega
    up, nu, f, k = params.u_plus, params.nu_minus, params.f_cat, params.k
    one = np.ones_like(y1)
    zero = np.zeros_like(y1)
    J = np.array([
        [zero, one, zero, zero, zero, zero],
        [(up * y6 + f) / d, up * y5 / d, -w * y5 / d, zero, (up * y2 - w * y3) / d, up * y1 / d],
        [zero, zero, zero, one, zero, zero],
        [-f / d * one, zero, w * y5 / d, -nu / d * one, w * y3 / d, zero],
        [zero, zero, zero, zero, zero, one],
        [up * y5 / D, zero, -nu / D * one, zero, (up * y1 + k) / D, zero],
    ])
    return J


def jacobian_at_infinity(params: ModelParams, endstate: Endstate) -> np.ndarray:
    _check_physical(params, endstate.c_plus)
    return jacobian_F(params, endstate.y)
