"""Steady boundary-layer profiles on a truncated half-line.

The first-order system ``Y' = F(Y)`` is discretized by three-point Lobatto
collocation (Hermite-Simpson, fourth order) on a mesh graded toward x = 0
and solved by damped Newton iteration with a sparse Jacobian.  At x = M the
deviation from the endstate is required to lie in the stable subspace of
the linearization (projective conditions).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainSizeError, NongenericEndstateError, SolverError
from .model import (
    DIRICHLET,
    BoundaryCondition,
    Endstate,
    ModelParams,
    _check_physical,
    jacobian_at_infinity,
    jacobian_F,
    rhs_F,
)

__all__ = [
    "ProjectiveBC",
    "Profile",
    "projective_matrix",
    "graded_mesh",
    "solve_profile",
    "solve_on_mesh",
    "residual",
    "refine",
    "collocation_residual",
    "constant_profile",
]

log = logging.getLogger(__name__)

RES_TOL = 1e-8
STEP_TOL = 1e-10
TRUNC_TOL = 1e-3
DEFAULT_M = 30.0
DEFAULT_INTERVALS = 600
CENTER_TOL = 1e-9


@dataclass(frozen=True)
class ProjectiveBC:
    """Real orthonormal rows spanning the center-unstable left eigenspace at the endstate."""

    l_matrix: np.ndarray
    eigenvalues: np.ndarray

    def __call__(self, y_M, y_plus):
        return self.l_matrix @ (np.asarray(y_M) - np.asarray(y_plus))


@dataclass(frozen=True)
class Profile:
    params: ModelParams
    bc: BoundaryCondition
    endstate: Endstate
    mesh: np.ndarray
    values: np.ndarray          # (6, n) ordered (p+, p+_x, p-, p-_x, c, c_x)
    truncation_error: float
    collocation_residual: float = 0.0
    projective: Optional[ProjectiveBC] = field(default=None, repr=False)
    newton_iterations: int = 0

    @property
    def M(self) -> float:
        return float(self.mesh[-1])

    @property
    def n_nodes(self) -> int:
        return self.mesh.size

    @property
    def U(self) -> np.ndarray:
        """(3, n) array of (p+, p-, c)."""
        return self.values[[0, 2, 4]]

    def interpolant(self) -> CubicHermiteSpline:
        """C^1 cubic Hermite interpolant using F(Y) as nodal slopes."""
        return CubicHermiteSpline(self.mesh, self.values, rhs_F(self.params, self.values), axis=1)

    def __call__(self, x) -> np.ndarray:
        """Evaluate Y at ``x``; beyond M the endstate is returned."""
        x = np.asarray(x, dtype=float)
        out = self.interpolant()(np.clip(x, 0.0, self.M))
        beyond = x > self.M
        if np.any(beyond):
            out[..., beyond] = self.endstate.y[:, None]
        return out

    def boundary_defect(self) -> float:
        y0 = self.values[:, 0]
        rows = [y0[0] - self.bc.p_plus_0, y0[2] - self.bc.p_minus_0]
        rows.append(y0[4] - self.bc.c_0 if self.bc.kind == DIRICHLET else y0[5])
        if self.projective is not None:
            rows.extend(self.projective(self.values[:, -1], self.endstate.y))
        return float(np.max(np.abs(rows)))


def projective_matrix(params: ModelParams, endstate: Endstate) -> ProjectiveBC:
    """Rows spanning the left eigenspace of eigenvalues with Re >= -1e-9.

    Raises NongenericEndstateError unless that space is three-dimensional.
    """
    J = jacobian_at_infinity(params, endstate)
    w, vl = scipy.linalg.eig(J, left=True, right=False)
    keep = w.real >= -CENTER_TOL
    if keep.sum() != 3:
        raise NongenericEndstateError(
            f"center-unstable dimension is {int(keep.sum())}, expected 3 (eigenvalues {np.sort_complex(w)})"
        )
    V = vl[:, keep]                           # columns: left eigenvectors (w^H J = lam w^H)
    # real span of a conjugation-closed set
    R = np.hstack([V.real, V.imag])
    U_, s, _ = np.linalg.svd(R, full_matrices=False)
    rank = int(np.sum(s > 1e-10 * s[0]))
    if rank != 3:
        raise NongenericEndstateError(f"projective rows have rank {rank}")
    L = U_[:, :3].T
    return ProjectiveBC(L, w[keep])


def graded_mesh(M: float, n_intervals: int = DEFAULT_INTERVALS, grading: float = 5.0) -> np.ndarray:
    """Exponentially graded nodes, finest at x = 0."""
    s = np.linspace(0.0, 1.0, n_intervals + 1)
    if grading == 0:
        return M * s
    x = M * np.expm1(grading * s) / np.expm1(grading)
    x[0], x[-1] = 0.0, M
    return x


def constant_profile(params: ModelParams, endstate: Endstate, M: float = DEFAULT_M,
                     n_intervals: int = 50) -> Profile:
    """The rest-point profile Y = Y+ with matching Dirichlet data."""
    mesh = graded_mesh(M, n_intervals)
    vals = np.repeat(endstate.y[:, None], mesh.size, axis=1)
    bc = BoundaryCondition.dirichlet(endstate.p_plus_inf, endstate.p_minus_inf, endstate.c_plus)
    return Profile(params, bc, endstate, mesh, vals, 0.0, 0.0, projective_matrix(params, endstate))


# --------------------------------------------------------------------------
# collocation


def _residual_and_jacobian(params, bc, y_plus, L, mesh, Y, want_jac=True):
    n = mesh.size
    h = np.diff(mesh)
    F = rhs_F(params, Y)
    Yl, Yr = Y[:, :-1], Y[:, 1:]
    Fl, Fr = F[:, :-1], F[:, 1:]
    Ym = 0.5 * (Yl + Yr) - (h / 8.0) * (Fr - Fl)
    Fm = rhs_F(params, Ym)
    R_int = Yr - Yl - (h / 6.0) * (Fl + 4.0 * Fm + Fr)

    y0 = Y[:, 0]
    bc0 = [y0[0] - bc.p_plus_0, y0[2] - bc.p_minus_0,
           (y0[4] - bc.c_0) if bc.kind == DIRICHLET else y0[5]]
    bcM = L @ (Y[:, -1] - y_plus)
    R = np.concatenate([bc0, R_int.T.ravel(), bcM])
    if not want_jac:
        return R, None

    J = np.moveaxis(jacobian_F(params, Y), 2, 0)        # (n, 6, 6)
    Jm = np.moveaxis(jacobian_F(params, Ym), 2, 0)      # (n-1, 6, 6)
    Jl, Jr = J[:-1], J[1:]
    I = np.eye(6)
    hh = h[:, None, None]
    dL = -I - hh / 6.0 * (Jl + 4.0 * Jm @ (0.5 * I + hh / 8.0 * Jl))
    dR = I - hh / 6.0 * (Jr + 4.0 * Jm @ (0.5 * I - hh / 8.0 * Jr))

    N = 6 * n
    rows, cols, vals = [], [], []
    # boundary rows at 0
    c_idx = 4 if bc.kind == DIRICHLET else 5
    rows += [0, 1, 2]
    cols += [0, 2, c_idx]
    vals += [1.0, 1.0, 1.0]
    # interval blocks
    blk_r = np.arange(6)[:, None] * np.ones(6, dtype=int)[None, :]
    blk_c = blk_r.T
    i = np.arange(n - 1)
    r0 = 3 + 6 * i[:, None, None] + blk_r[None]
    cL = 6 * i[:, None, None] + blk_c[None]
    rows.append(r0.ravel())
    cols.append(cL.ravel())
    vals.append(dL.ravel())
    rows.append(r0.ravel())
    cols.append((cL + 6).ravel())
    vals.append(dR.ravel())
    # projective rows at M
    rM = 3 + 6 * (n - 1) + np.repeat(np.arange(3), 6)
    cM = 6 * (n - 1) + np.tile(np.arange(6), 3)
    rows.append(rM)
    cols.append(cM)
    vals.append(L.ravel())
    rows = np.concatenate([np.atleast_1d(np.asarray(r)) for r in rows])
    cols = np.concatenate([np.atleast_1d(np.asarray(c)) for c in cols])
    vals = np.concatenate([np.atleast_1d(np.asarray(v, dtype=float)) for v in vals])
    Jac = sp.csc_matrix((vals, (rows, cols)), shape=(N, N))
    return R, Jac


def collocation_residual(profile: Profile) -> float:
    """Max-norm of the interval collocation equations of the stored solution."""
    L = profile.projective.l_matrix if profile.projective is not None else np.zeros((3, 6))
    R, _ = _residual_and_jacobian(profile.params, profile.bc, profile.endstate.y, L,
                                  profile.mesh, profile.values, want_jac=False)
    return float(np.max(np.abs(R[3:-3]))) if R.size > 6 else 0.0


def _newton(params, bc, y_plus, L, mesh, Y0, max_iter=50, step_tol=STEP_TOL, res_tol=RES_TOL):
    Y = Y0.copy()
    n = mesh.size
    R, Jac = _residual_and_jacobian(params, bc, y_plus, L, mesh, Y)
    rnorm = np.max(np.abs(R))
    for it in range(1, max_iter + 1):
        try:
            step = spla.splu(Jac).solve(-R)
        except RuntimeError as exc:     # singular factor
            raise SolverError(f"singular collocation Jacobian: {exc}", rnorm) from exc
        if not np.all(np.isfinite(step)):
            raise SolverError("non-finite Newton step", rnorm)
        step = step.reshape(n, 6).T
        t = 1.0
        while True:
            Yt = Y + t * step
            Rt, _ = _residual_and_jacobian(params, bc, y_plus, L, mesh, Yt, want_jac=False)
            rt = np.max(np.abs(Rt))
            if np.isfinite(rt) and (rt <= (1 - 1e-4 * t) * rnorm or rt < res_tol):
                break
            t *= 0.5
            if t < 1e-6:
                raise SolverError(f"damped Newton stalled at residual {rnorm:.3e}", rnorm)
        Y = Yt
        snorm = t * np.max(np.abs(step))
        R, Jac = _residual_and_jacobian(params, bc, y_plus, L, mesh, Y)
        rnorm = np.max(np.abs(R))
        log.debug("newton it=%d damping=%.3g step=%.3e residual=%.3e", it, t, snorm, rnorm)
        if snorm <= step_tol and rnorm <= res_tol:
            return Y, rnorm, it
    raise SolverError(f"Newton did not converge in {max_iter} iterations (residual {rnorm:.3e})", rnorm)


def _bc_state(bc: BoundaryCondition, y_plus):
    c0 = bc.c_0 if bc.kind == DIRICHLET else y_plus[4]
    return np.array([bc.p_plus_0, bc.p_minus_0, c0])


def _linear_guess(bc, y_plus, mesh):
    M = mesh[-1]
    u0 = _bc_state(bc, y_plus)
    uinf = y_plus[[0, 2, 4]]
    s = mesh / M
    U = u0[:, None] * (1 - s) + uinf[:, None] * s
    slope = (uinf - u0) / M
    Y = np.empty((6, mesh.size))
    Y[[0, 2, 4]] = U
    Y[[1, 3, 5]] = slope[:, None]
    return Y


def _scaled_bc(bc, y_plus, s):
    u0 = _bc_state(bc, y_plus)
    uinf = y_plus[[0, 2, 4]]
    v = uinf + s * (u0 - uinf)
    if bc.kind == DIRICHLET:
        return BoundaryCondition.dirichlet(v[0], v[1], v[2])
    return BoundaryCondition.neumann(v[0], v[1])


def solve_on_mesh(params: ModelParams, bc: BoundaryCondition, endstate: Endstate, mesh,
                  guess=None, res_tol: float = RES_TOL, continuation_steps: int = 8) -> Profile:
    """Solve the collocation system on a fixed mesh (no domain adaptation)."""
    _check_physical(params, endstate.c_plus)
    mesh = np.asarray(mesh, dtype=float)
    proj = projective_matrix(params, endstate)
    y_plus = endstate.y
    Y0 = _linear_guess(bc, y_plus, mesh) if guess is None else np.asarray(guess, dtype=float)
    try:
        Y, rnorm, its = _newton(params, bc, y_plus, proj.l_matrix, mesh, Y0, res_tol=res_tol)
    except SolverError as first:
        log.info("direct Newton failed (%s); continuing in boundary data", first)
        Y = np.repeat(y_plus[:, None], mesh.size, axis=1)
        its = 0
        for s in np.linspace(0.0, 1.0, continuation_steps + 1)[1:]:
            Y, rnorm, k = _newton(params, _scaled_bc(bc, y_plus, s), y_plus, proj.l_matrix, mesh, Y,
                                  res_tol=res_tol)
            its += k
    trunc = float(np.max(np.abs(Y[[0, 2, 4], -1] - y_plus[[0, 2, 4]])))
    prof = Profile(params, bc, endstate, mesh, Y, trunc, 0.0, proj, its)
    return replace(prof, collocation_residual=collocation_residual(prof))


def solve_profile(params: ModelParams, bc: BoundaryCondition, endstate: Endstate,
                  M: float = DEFAULT_M, tol: float = TRUNC_TOL, n_intervals: int = DEFAULT_INTERVALS,
                  grading: float = 5.0, res_tol: float = RES_TOL, max_doublings: int = 4) -> Profile:
    """Boundary-layer profile from ``bc`` at x = 0 to ``endstate``.

    If ``|U(M) - U+|`` exceeds ``tol`` the domain is doubled, up to
    ``max_doublings`` times, warm-starting from the previous solution.
    """
    if M <= 0:
        raise ValueError("M must be positive")
    guess = None
    for attempt in range(max_doublings + 1):
        mesh = graded_mesh(M, n_intervals, grading)
        prof = solve_on_mesh(params, bc, endstate, mesh, guess=guess, res_tol=res_tol)
        _verify(prof, res_tol)
        if prof.truncation_error <= tol:
            return prof
        log.info("truncation error %.3e > %.1e at M=%g; doubling", prof.truncation_error, tol, M)
        old = prof
        M *= 2.0
        guess = old(graded_mesh(M, n_intervals, grading))
    raise DomainSizeError(
        f"truncation error {prof.truncation_error:.3e} exceeds {tol} after {max_doublings} doublings",
        prof.truncation_error,
    )


def _verify(prof: Profile, res_tol):
    if prof.collocation_residual > res_tol:
        raise SolverError(f"collocation residual {prof.collocation_residual:.3e} above {res_tol}",
                          prof.collocation_residual)
    if prof.boundary_defect() > max(res_tol, 1e-8):
        raise SolverError(f"boundary conditions violated by {prof.boundary_defect():.3e}")


# --------------------------------------------------------------------------
# a posteriori checks


def _fd_weights(xs, x0):
    """First-derivative weights on nodes ``xs`` at ``x0`` (exact for degree len(xs)-1)."""
    m = len(xs)
    dx = xs - x0
    V = np.vander(dx, m, increasing=True).T    # V[j, i] = dx_i^j
    rhs = np.zeros(m)
    rhs[1] = 1.0
    return np.linalg.solve(V, rhs)


def residual(profile: Profile) -> float:
    """Max-norm of F(Y) - Y' at interior nodes, Y' by five-point differences."""
    x = profile.mesh
    Y = profile.values
    n = x.size
    if n < 5:
        return 0.0
    F = rhs_F(profile.params, Y)
    worst = 0.0
    for i in range(1, n - 1):
        lo = min(max(i - 2, 0), n - 5)
        idx = slice(lo, lo + 5)
        w = _fd_weights(x[idx], x[i])
        dY = Y[:, idx] @ w
        worst = max(worst, float(np.max(np.abs(dY - F[:, i]))))
    return worst


def refine(profile: Profile, res_tol: float = RES_TOL) -> Profile:
    """Re-solve with every interval bisected, warm-started from the current solution."""
    x = profile.mesh
    mid = 0.5 * (x[:-1] + x[1:])
    new_mesh = np.empty(2 * x.size - 1)
    new_mesh[0::2] = x
    new_mesh[1::2] = mid
    guess = profile.interpolant()(new_mesh)
    prof = solve_on_mesh(profile.params, profile.bc, profile.endstate, new_mesh, guess=guess, res_tol=res_tol)
    _verify(prof, res_tol)
    return prof
