"""Constant-coefficient spectral analysis at an endstate.

Everything here is derived from the coefficient matrices at the endstate:
the quintic ``q`` with ``det(mu A + Bt + mu^2 C) = mu q(mu)``, its
imaginary-axis roots, the dispersion curves of ``Bt + i xi A - xi^2 C``,
root counts of the indicial equation, the mod-two stability index and the
transport speed of the neutral mode.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import linear_sum_assignment

from .errors import MTEvansError
from .model import (
    Endstate,
    ModelParams,
    _check_physical,
    jacobian_at_infinity,
    linearized_B,
    matrix_A,
    matrix_C,
    matrix_B_tilde,
    physicality_margin,
)

__all__ = [
    "QuinticQ",
    "DispersionSample",
    "SplittingCount",
    "HighFreqBound",
    "ZeroRootCheck",
    "ImaginaryRootVerdict",
    "GoodDispVerdict",
    "TOL_NEUTRAL",
    "TOL_ZERO",
    "quadratic_pencil_det",
    "quintic_from_matrices",
    "quintic_q",
    "split_imaginary",
    "printed_quintic_coefficients",
    "printed_appendix_quadratics",
    "zero_root_check",
    "imaginary_root_check",
    "common_positive_root",
    "dispersion_matrix",
    "dispersion_curves",
    "check_gooddisp",
    "limit_evans_matrix",
    "indicial_roots",
    "count_splitting",
    "consistent_splitting",
    "stability_index",
    "alpha_transport",
    "linearization_zero_order",
    "high_frequency_bound",
    "high_frequency_bound_states",
    "constant_high_frequency_bound",
]

# eigensolver noise floor with margin
TOL_NEUTRAL = 1e-9
TOL_ZERO = 1e-10


class InternalConsistencyError(MTEvansError):
    pass


@dataclass(frozen=True)
class QuinticQ:
    """Coefficients of q, highest degree first (``numpy.polyval`` order)."""

    coeffs: np.ndarray

    def __call__(self, mu):
        return np.polyval(self.coeffs, mu)

    @property
    def q0(self) -> float:
        return float(self.coeffs[-1])

    @property
    def leading(self) -> float:
        return float(self.coeffs[0])

    def roots(self) -> np.ndarray:
        return np.roots(self.coeffs)

    def ascending(self) -> np.ndarray:
        return self.coeffs[::-1].copy()


@dataclass(frozen=True)
class DispersionSample:
    xi: float
    lambdas: np.ndarray


@dataclass(frozen=True)
class SplittingCount:
    lam: complex
    n_stable: int
    n_unstable: int
    n_neutral: int

    @property
    def counts(self) -> tuple[int, int, int]:
        return self.n_stable, self.n_unstable, self.n_neutral

    @property
    def consistent(self) -> bool:
        return self.counts == (3, 3, 0)


@dataclass(frozen=True)
class HighFreqBound:
    alpha_norm: float
    beta_norm: float
    delta: float

    @property
    def r_hat(self) -> float:
        return self.alpha_norm**2 / self.delta + self.beta_norm

    def to_dict(self) -> dict:
        return dict(alpha_norm=self.alpha_norm, beta_norm=self.beta_norm, delta=self.delta, r_hat=self.r_hat)


@dataclass(frozen=True)
class ZeroRootCheck:
    ok: bool
    q0: float

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class ImaginaryRootVerdict:
    """Outcome of the search for a common positive root of q1, q2 (x = xi^2).

    ``degenerate`` flags the case where the x^2-eliminated combination
    vanishes identically, i.e. q1 and q2 are proportional; the decision is
    then taken from the roots of q1 directly and the Sylvester resultant is
    reported.
    """

    no_common_root: bool
    common_root_at: Optional[float]
    q1: np.ndarray
    q2: np.ndarray
    degenerate: bool
    resultant: float
    combination: np.ndarray = field(repr=False)

    def __bool__(self):
        return self.no_common_root


@dataclass(frozen=True)
class GoodDispVerdict:
    holds: bool
    violated_at: Optional[float]
    max_real_part: float
    xi_max: float
    n_samples: int

    def __bool__(self):
        return self.holds


# --------------------------------------------------------------------------
# polynomials


def _polymat_det3(M):
    """Determinant of a 3x3 matrix of ascending-coefficient polynomials."""
    def mul(a, b):
        return P.polymul(a, b)

    def sub(a, b):
        return P.polysub(a, b)

    t0 = mul(M[0][0], sub(mul(M[1][1], M[2][2]), mul(M[1][2], M[2][1])))
    t1 = mul(M[0][1], sub(mul(M[1][0], M[2][2]), mul(M[1][2], M[2][0])))
    t2 = mul(M[0][2], sub(mul(M[1][0], M[2][1]), mul(M[1][1], M[2][0])))
    return P.polyadd(P.polysub(t0, t1), t2)


def quadratic_pencil_det(A, Bt, C, shift=0.0) -> np.ndarray:
    """Ascending coefficients of ``det(mu^2 C + mu A + Bt - shift I)`` in mu."""
    A, Bt, C = (np.asarray(m) for m in (A, Bt, C))
    B0 = Bt - shift * np.eye(3)
    M = [[np.array([B0[i, j], A[i, j], C[i, j]]) for j in range(3)] for i in range(3)]
    out = np.zeros(7, dtype=np.result_type(B0, A, C))
    det = _polymat_det3(M)
    out[: len(det)] = det
    return out


def quintic_from_matrices(A, Bt, C, rtol=1e-10) -> QuinticQ:
    """Divide ``det(mu^2 C + mu A + Bt)`` by mu after checking it vanishes at 0."""
    det = quadratic_pencil_det(A, Bt, C)
    scale = max(np.max(np.abs(det)), 1e-300)
    if abs(det[0]) > rtol * scale:
        raise InternalConsistencyError(
            f"det(mu^2 C + mu A + Bt) has constant term {det[0]!r}; expected a root at mu = 0"
        )
    asc = det[1:7]
    return QuinticQ(np.real_if_close(asc[::-1]).astype(float))


def quintic_q(params: ModelParams, endstate: Endstate) -> QuinticQ:
    _check_physical(params, endstate.c_plus)
    U = endstate.state
    return quintic_from_matrices(matrix_A(params, U), linearized_B(params, U), matrix_C(params))


def split_imaginary(q: QuinticQ) -> tuple[np.ndarray, np.ndarray]:
    """q(i xi) = i xi q1(xi^2) + q2(xi^2); returns (q1, q2) highest degree first."""
    a = q.ascending()
    q1 = np.array([a[5], -a[3], a[1]])
    q2 = np.array([a[4], -a[2], a[0]])
    return q1, q2


def printed_quintic_coefficients(d, D, omega, nu_minus, f_cat, u_plus, k, c, p_plus, p_minus) -> np.ndarray:
    """Transcription of the reference closed-form coefficients of q (highest first).

    Kept only as a cross-check.  It expands the determinant built with the
    opposite sign on the ``omega * p_minus`` entries of the linearization, so
    it differs from :func:`quintic_q` in the mu^1 coefficient whenever
    ``p_minus != 0``.
    """
    w, nu, f, u = omega, nu_minus, f_cat, u_plus
    a5 = D * d**2
    a4 = D * d * nu - d * D * u * c
    a3 = -(d**2 * u * p_plus + d**2 * k + f * d * D + u * c * nu * D + d * w * c * D)
    a2 = -f * nu * D + u * c**2 * w * D + u * c * d * k - d * nu * u * p_plus - d * nu * k
    a1 = (d * w * c * k - d * w * p_minus * nu + u * c * nu * k + d * w * c * u * p_plus
          + f * d * k + f * d * u * p_plus - u * c * d * w * p_minus)
    a0 = f * nu * k - u * c**2 * w * k
    return np.array([a5, a4, a3, a2, a1, a0])


def printed_appendix_quadratics(d, D, omega, nu_minus, f_cat, u_plus, k, c, p_plus, p_minus):
    """Transcription of the reference (q1, q2) used in the resultant argument.

    Returned highest degree first.  Note the constant term of q2 carries
    ``-f*nu*k`` where the real part of q(i xi) has ``+f*nu*k``.
    """
    w, nu, f, u = omega, nu_minus, f_cat, u_plus
    q1 = np.array([
        D * d**2,
        d**2 * u * p_plus + d**2 * k + f * d * D + u * c * nu * D + d * w * c * D,
        (d * w * c * k - d * w * p_minus * nu + u * c * nu * k + d * w * c * u * p_plus
         + f * d * k + f * d * u * p_plus - u * c * d * w * p_minus),
    ])
    q2 = np.array([
        D * d * nu - d * D * u * c,
        -(-f * nu * D + u * c**2 * w * D + u * c * d * k - d * nu * u * p_plus - d * nu * k),
        -f * nu * k - u * c**2 * w * k,
    ])
    return q1, q2


# --------------------------------------------------------------------------
# zero and imaginary roots


def zero_root_check(params: ModelParams, endstate: Endstate) -> ZeroRootCheck:
    """q(0) != 0, i.e. mu = 0 is a simple root of the full sextic."""
    U = endstate.state
    q = quintic_from_matrices(matrix_A(params, U), linearized_B(params, U), matrix_C(params))
    scale = np.max(np.abs(q.coeffs))
    return ZeroRootCheck(bool(abs(q.q0) > 1e-14 * scale), q.q0)


def _sylvester_resultant(a, b) -> float:
    """Resultant of two quadratics given highest degree first."""
    a2, a1, a0 = a
    b2, b1, b0 = b
    S = np.array([
        [a2, a1, a0, 0.0],
        [0.0, a2, a1, a0],
        [b2, b1, b0, 0.0],
        [0.0, b2, b1, b0],
    ])
    return float(np.linalg.det(S))


def common_positive_root(q1, q2, rtol=1e-10) -> ImaginaryRootVerdict:
    """Decide whether quadratics q1, q2 (highest first) share a root x > 0.

    Eliminate x^2, solve the resulting linear equation, substitute back.
    If the combination vanishes identically the quadratics are proportional
    and share every root; those of q1 are then inspected.
    """
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    scale = max(np.max(np.abs(q1)), np.max(np.abs(q2)), 1e-300)
    res = _sylvester_resultant(q1, q2)
    if abs(q1[0]) < rtol * scale and abs(q2[0]) < rtol * scale:
        # both already linear
        comb = np.array([0.0, q1[1] * q2[2] - q2[1] * q1[2]])
        lin_a, lin_b = q1[1], q1[2]
        if abs(lin_a) < rtol * scale:
            lin_a, lin_b = q2[1], q2[2]
        candidates = [] if abs(lin_a) < rtol * scale else [-lin_b / lin_a]
        degenerate = False
    else:
        lead, other = (q1, q2) if abs(q1[0]) >= abs(q2[0]) else (q2, q1)
        comb = other[0] * lead - lead[0] * other   # x^2 term cancels
        comb = comb[1:]
        cscale = max(abs(lead[0]) * scale, 1e-300)
        if np.all(np.abs(comb) <= rtol * cscale):
            degenerate = True
            candidates = [r.real for r in np.roots(lead) if abs(r.imag) <= 1e-12 * max(1.0, abs(r))]
        else:
            degenerate = False
            if abs(comb[0]) <= rtol * cscale:
                candidates = []      # nonzero constant: inconsistent
            else:
                candidates = [-comb[1] / comb[0]]
    for x in candidates:
        if x > 0:
            v1 = np.polyval(q1, x)
            v2 = np.polyval(q2, x)
            tol = rtol * scale * max(1.0, x * x)
            if abs(v1) <= tol and abs(v2) <= tol:
                return ImaginaryRootVerdict(False, float(x), q1, q2, degenerate, res, comb)
    return ImaginaryRootVerdict(True, None, q1, q2, degenerate, res, comb)


def imaginary_root_check(params: ModelParams, endstate: Endstate) -> ImaginaryRootVerdict:
    """Check that q has no roots mu = i xi with xi real and nonzero."""
    q = quintic_q(params, endstate)
    q1, q2 = split_imaginary(q)
    return common_positive_root(q1, q2)


# --------------------------------------------------------------------------
# dispersion relation and the indicial equation


def dispersion_matrix(params: ModelParams, endstate: Endstate, xi: float) -> np.ndarray:
    U = endstate.state
    return (linearized_B(params, U) + 1j * xi * matrix_A(params, U) - xi**2 * matrix_C(params))


def _lex_sort(vals):
    order = np.lexsort((vals.imag, vals.real))
    return vals[order]


def dispersion_curves(params: ModelParams, endstate: Endstate, xi_grid: Sequence[float]) -> list[DispersionSample]:
    """Eigenvalues of ``Bt + i xi A - xi^2 C`` along ``xi_grid``, continued branchwise."""
    _check_physical(params, endstate.c_plus)
    U = endstate.state
    Bt = linearized_B(params, U)
    A = matrix_A(params, U)
    C = matrix_C(params)
    out = []
    prev = None
    for xi in np.asarray(xi_grid, dtype=float):
        lam = np.linalg.eigvals(Bt + 1j * xi * A - xi**2 * C)
        if prev is None:
            lam = _lex_sort(lam)
        else:
            cost = np.abs(prev[:, None] - lam[None, :])
            _, cols = linear_sum_assignment(cost)
            lam = lam[cols]
        out.append(DispersionSample(float(xi), lam))
        prev = lam
    return out


def constant_high_frequency_bound(params: ModelParams, endstate: Endstate) -> HighFreqBound:
    """Energy bound for the constant state itself."""
    U = endstate.state
    return HighFreqBound(
        float(np.linalg.norm(matrix_A(params, U), 2)),
        float(np.linalg.norm(linearized_B(params, U), 2)),
        min(params.d, params.D),
    )


def check_gooddisp(params: ModelParams, endstate: Endstate, xi_max: Optional[float] = None,
                   n_samples: int = 2001, tol_zero: float = TOL_ZERO) -> GoodDispVerdict:
    """Sample Re lambda_j(xi) on a symmetric grid.

    Holds when every real part is <= ``tol_zero`` and the only samples that
    come within ``tol_zero`` of zero sit within one grid spacing of xi = 0.
    """
    _check_physical(params, endstate.c_plus)
    hf = constant_high_frequency_bound(params, endstate)
    bound = np.sqrt(hf.r_hat / hf.delta)
    if xi_max is None:
        xi_max = max(10.0, 2.0 * bound)
    elif xi_max < bound:
        raise ValueError(f"xi_max = {xi_max} is below the decay bound {bound:.6g}")
    if n_samples % 2 == 0:
        n_samples += 1
    grid = np.linspace(-xi_max, xi_max, n_samples)
    h = grid[1] - grid[0]
    U = endstate.state
    Bt = linearized_B(params, U)
    A = matrix_A(params, U)
    C = matrix_C(params)
    mats = Bt[None] + 1j * grid[:, None, None] * A[None] - grid[:, None, None] ** 2 * C[None]
    re = np.linalg.eigvals(mats).real.max(axis=1)
    max_re = float(re.max())
    away = np.abs(grid) > h * (1 + 1e-12)
    bad = np.flatnonzero((re > tol_zero) | (away & (re > -tol_zero)))
    if bad.size:
        j = bad[np.argmax(re[bad])]
        return GoodDispVerdict(False, float(grid[j]), max_re, float(xi_max), n_samples)
    return GoodDispVerdict(True, None, max_re, float(xi_max), n_samples)


def limit_evans_matrix(params: ModelParams, endstate: Endstate, lam: complex) -> np.ndarray:
    """First-order matrix of the eigenvalue ODE at x = +infinity."""
    J = jacobian_at_infinity(params, endstate).astype(complex)
    J[1, 0] += lam / params.d
    J[3, 2] += lam / params.d
    J[5, 4] += lam / params.D
    return J


def indicial_roots(params: ModelParams, endstate: Endstate, lam: complex) -> np.ndarray:
    """Roots mu of ``det(Bt + mu A + mu^2 C - lam I) = 0``, sorted by real part."""
    mu = np.linalg.eigvals(limit_evans_matrix(params, endstate, lam))
    return mu[np.argsort(mu.real)]


def count_splitting(mu, lam=0.0, tol: float = TOL_NEUTRAL) -> SplittingCount:
    re = np.real(mu)
    n_s = int(np.sum(re < -tol))
    n_u = int(np.sum(re > tol))
    return SplittingCount(complex(lam), n_s, n_u, len(re) - n_s - n_u)


def consistent_splitting(params: ModelParams, endstate: Endstate, lam: complex,
                         tol: float = TOL_NEUTRAL) -> SplittingCount:
    return count_splitting(indicial_roots(params, endstate, lam), lam, tol)


def stability_index(params: ModelParams, endstate: Endstate) -> int:
    """sgn(q(0) * q(+inf)); zero at the physicality boundary."""
    q = quintic_from_matrices(
        matrix_A(params, endstate.state), linearized_B(params, endstate.state), matrix_C(params)
    )
    scale = np.max(np.abs(q.coeffs))
    q0 = q.q0 if abs(q.q0) > 1e-14 * scale else 0.0
    return int(np.sign(q0) * np.sign(q.leading))


def alpha_transport(params: ModelParams, endstate: Endstate) -> float:
    """Inward speed of the neutral (total-density) mode."""
    margin = _check_physical(params, endstate.c_plus)
    return margin / params.f_cat


# --------------------------------------------------------------------------
# high-frequency bound along a profile


def linearization_zero_order(params: ModelParams, Y) -> np.ndarray:
    """Zero-order coefficient of the linearization about a profile, shape (n, 3, 3).

    ``Y`` holds (p+, p+_x, p-, p-_x, c, c_x) as rows, one column per point.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[0] != 6:
        Y = Y.T
    pp, ppx, pm, _, c, cx = Y
    w, up, f = params.omega, params.u_plus, params.f_cat
    n = Y.shape[1]
    B = np.empty((n, 3, 3))
    B[:, 0, 0] = -up * cx - f
    B[:, 0, 1] = w * c
    B[:, 0, 2] = -up * ppx + w * pm
    B[:, 1, 0] = f
    B[:, 1, 1] = -w * c
    B[:, 1, 2] = -w * pm
    B[:, 2, 0] = -up * c
    B[:, 2, 1] = params.nu_minus
    B[:, 2, 2] = -params.k - up * pp
    return B


def high_frequency_bound_states(params: ModelParams, Y) -> HighFreqBound:
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[0] != 6:
        Y = Y.T
    n = Y.shape[1]
    A = np.zeros((n, 3, 3))
    A[:, 0, 0] = -params.u_plus * Y[4]
    A[:, 0, 2] = -params.u_plus * Y[0]
    A[:, 1, 1] = params.nu_minus
    alpha = np.linalg.norm(A, 2, axis=(1, 2)).max()
    beta = np.linalg.norm(linearization_zero_order(params, Y), 2, axis=(1, 2)).max()
    return HighFreqBound(float(alpha), float(beta), min(params.d, params.D))


def high_frequency_bound(profile) -> HighFreqBound:
    """Max operator norms of the first- and zero-order coefficients over the profile mesh."""
    return high_frequency_bound_states(profile.params, profile.values)
