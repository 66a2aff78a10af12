"""Direct time integration of the full reaction-convection-diffusion system.

Method of lines on a uniform grid over [0, x_far]: second-order central
differences, the growth flux ``u_plus * c * p_plus`` differenced in
conservative form, boundary data imposed at x = 0 and zero flux at x_far.
The default IMEX scheme is second-order SBDF (implicit diffusion,
extrapolated reaction and convection).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .errors import StepSizeError, SolverError
from .model import DIRICHLET, BoundaryCondition, ModelParams
from .profile import Profile

__all__ = [
    "GridSpec",
    "Trajectory",
    "IMEX",
    "IMPLICIT",
    "evolve",
    "step_initial",
    "constant_initial",
    "distance_to_profile",
    "limiting_total_density",
    "is_stationary",
    "semidiscrete_rhs",
]

log = logging.getLogger(__name__)

IMEX = "imex"
IMPLICIT = "implicit"
BLOWUP = 1e6


@dataclass(frozen=True)
class GridSpec:
    x_far: float = 50.0
    nx: int = 1000
    dt: float = 0.01
    t_end: float = 200.0
    scheme: str = IMEX

    def __post_init__(self):
        if not self.x_far > 0:
            raise ValueError("x_far must be positive")
        if self.nx < 50:
            raise ValueError("nx must be at least 50")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.scheme not in (IMEX, IMPLICIT):
            raise ValueError(f"unknown scheme {self.scheme!r}")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.x_far, self.nx)

    @property
    def dx(self) -> float:
        return self.x_far / (self.nx - 1)


@dataclass
class Trajectory:
    grid: GridSpec
    times: np.ndarray
    states: np.ndarray          # (n_snapshots, 3, nx)
    bc: BoundaryCondition
    params: ModelParams
    initial_bc_mismatch: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def step_initial(grid: GridSpec, inner=(0.2, 0.2, 0.2), width: float = 3.0, outer=(0.0, 0.0, 0.0)) -> np.ndarray:
    """``inner`` on [0, width], ``outer`` beyond; each entry may be a scalar per component."""
    x = grid.x
    inside = x <= width
    U = np.empty((3, x.size))
    for j in range(3):
        U[j] = np.where(inside, inner[j], outer[j])
    return U


def constant_initial(grid: GridSpec, state) -> np.ndarray:
    return np.repeat(np.asarray(state, dtype=float)[:, None], grid.nx, axis=1)


def limiting_total_density(initial) -> float:
    """p+ + p- at the far end of the initial data."""
    U = np.asarray(initial, dtype=float)
    return float(U[0, -1] + U[1, -1])


# --------------------------------------------------------------------------
# spatial operators


def _ddx(f, dx):
    """Central first derivative with even reflection at the right end; row 0 unused."""
    g = np.empty_like(f)
    g[1:-1] = (f[2:] - f[:-2]) / (2 * dx)
    g[-1] = 0.0
    g[0] = (f[1] - f[0]) / dx
    return g


def _explicit_terms(params: ModelParams, U, dx):
    """Convection and reaction: everything except diffusion."""
    pp, pm, c = U
    flux = params.u_plus * c * pp
    rescue = params.omega * c * pm
    cat = params.f_cat * pp
    dpp = -_ddx(flux, dx) - cat + rescue
    dpm = params.nu_minus * _ddx(pm, dx) + cat - rescue
    dc = -params.k * c + params.nu_minus * pm - params.u_plus * c * pp
    return np.array([dpp, dpm, dc])


def _laplacian(n, dx, left_neumann):
    main = -2.0 * np.ones(n)
    off = np.ones(n - 1)
    L = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    L[n - 1, n - 2] = 2.0
    if left_neumann:
        L[0, 1] = 2.0
    else:
        L[0, :] = 0.0
    return (L / dx**2).tocsc()


def semidiscrete_rhs(params: ModelParams, bc: BoundaryCondition, grid: GridSpec):
    """dU/dt of the spatial discretization as a function of the flattened state."""
    dx = grid.dx
    n = grid.nx
    neumann_c = bc.kind != DIRICHLET
    Lp = _laplacian(n, dx, False)
    Lc = _laplacian(n, dx, neumann_c)

    def rhs(t, y):
        U = y.reshape(3, n)
        out = _explicit_terms(params, U, dx)
        out[0] += params.d * (Lp @ U[0])
        out[1] += params.d * (Lp @ U[1])
        out[2] += params.D * (Lc @ U[2])
        out[0, 0] = 0.0
        out[1, 0] = 0.0
        if not neumann_c:
            out[2, 0] = 0.0
        return out.ravel()

    return rhs


def _apply_bc(U, bc: BoundaryCondition):
    U[0, 0] = bc.p_plus_0
    U[1, 0] = bc.p_minus_0
    if bc.kind == DIRICHLET:
        U[2, 0] = bc.c_0


def _snapshot_steps(times, dt):
    """Distinct step indices nearest to the requested times."""
    return np.unique(np.rint(np.asarray(times, dtype=float) / dt).astype(int))


def evolve(params: ModelParams, bc: BoundaryCondition, initial, grid: GridSpec,
           snapshot_times: Optional[Sequence[float]] = None) -> Trajectory:
    """Integrate from ``initial`` (shape (3, nx)) to ``grid.t_end``.

    Boundary data are imposed from the first step; a mismatch with the
    initial data at x = 0 is recorded in ``initial_bc_mismatch``.
    """
    U0 = np.array(initial, dtype=float, copy=True)
    if U0.shape != (3, grid.nx):
        raise ValueError(f"initial data must have shape (3, {grid.nx}), got {U0.shape}")
    if not np.all(np.isfinite(U0)):
        raise ValueError("initial data must be finite")
    ref = [bc.p_plus_0, bc.p_minus_0] + ([bc.c_0] if bc.kind == DIRICHLET else [])
    mismatch = float(np.max(np.abs(U0[: len(ref), 0] - np.asarray(ref))))
    if snapshot_times is None:
        snapshot_times = np.linspace(0.0, grid.t_end, 201)
    snapshot_times = np.unique(np.clip(np.asarray(snapshot_times, dtype=float), 0.0, grid.t_end))
    if grid.scheme == IMEX:
        times, states = _evolve_imex(params, bc, U0, grid, snapshot_times)
    else:
        times, states = _evolve_implicit(params, bc, U0, grid, snapshot_times)
    traj = Trajectory(grid, times, states, bc, params, mismatch)
    traj.states[0] = U0          # t = 0 snapshot is the supplied data
    traj.diagnostics["total_density_mass"] = _mass(traj)
    traj.diagnostics["min_value"] = float(np.min(states[1:])) if len(states) > 1 else float(np.min(U0))
    return traj


def _mass(traj):
    x = traj.x
    p = traj.states[:, 0] + traj.states[:, 1]
    return np.trapezoid(p, x, axis=1) if hasattr(np, "trapezoid") else np.trapz(p, x, axis=1)


def _evolve_imex(params, bc, U0, grid, snapshot_times):
    n, dx, dt = grid.nx, grid.dx, grid.dt
    neumann_c = bc.kind != DIRICHLET
    diff = [params.d, params.d, params.D]
    lap = [_laplacian(n, dx, False), _laplacian(n, dx, False), _laplacian(n, dx, neumann_c)]
    I = sp.identity(n, format="csc")
    fixed = [True, True, not neumann_c]

    def solver(gamma):
        out = []
        for j in range(3):
            A = (gamma * I - dt * diff[j] * lap[j]).tolil()
            if fixed[j]:
                A[0, :] = 0.0
                A[0, 0] = 1.0
            out.append(spla.factorized(A.tocsc()))
        return out

    euler = solver(1.0)
    bdf2 = solver(1.5)
    bvals = [bc.p_plus_0, bc.p_minus_0, bc.c_0]

    n_steps = int(np.rint(grid.t_end / dt))
    snap_steps = _snapshot_steps(snapshot_times, dt)
    out_t, out_U = [], []
    U = U0.copy()
    if snap_steps[0] == 0:
        out_t.append(0.0)
        out_U.append(U.copy())
    U_prev, N_prev = None, None
    si = 1 if snap_steps[0] == 0 else 0
    for step in range(1, n_steps + 1):
        N = _explicit_terms(params, U, dx)
        if U_prev is None:
            rhs = U + dt * N
            solve = euler
        else:
            rhs = 2.0 * U - 0.5 * U_prev + dt * (2.0 * N - N_prev)
            solve = bdf2
        new = np.empty_like(U)
        for j in range(3):
            r = rhs[j].copy()
            if fixed[j]:
                r[0] = bvals[j]
            new[j] = solve[j](r)
            if fixed[j]:
                new[j, 0] = bvals[j]        # exact, not up to LU roundoff
        U_prev, N_prev, U = U, N, new
        amp = np.max(np.abs(U))
        if not np.isfinite(amp) or amp > BLOWUP:
            raise StepSizeError(f"solution norm {amp:.3e} at t = {step * dt:.4g}; retry with dt = {dt / 2}",
                                suggested_dt=dt / 2)
        while si < snap_steps.size and snap_steps[si] == step:
            out_t.append(step * dt)
            out_U.append(U.copy())
            si += 1
    return np.asarray(out_t), np.asarray(out_U)


def _evolve_implicit(params, bc, U0, grid, snapshot_times):
    n = grid.nx
    rhs = semidiscrete_rhs(params, bc, grid)
    U = U0.copy()
    _apply_bc(U, bc)
    # sparsity: tridiagonal within a component, local coupling across components
    band = sp.diags([1, 1, 1], [-1, 0, 1], shape=(n, n))
    pattern = sp.bmat([[band] * 3] * 3).tocsc()
    sol = solve_ivp(rhs, (0.0, grid.t_end), U.ravel(), method="BDF", t_eval=snapshot_times,
                    jac_sparsity=pattern, rtol=1e-8, atol=1e-10, max_step=max(grid.dt * 100, 0.5))
    if not sol.success:
        raise SolverError(f"implicit integration failed: {sol.message}")
    states = sol.y.T.reshape(-1, 3, n)
    if np.max(np.abs(states)) > BLOWUP:
        raise StepSizeError("implicit integration diverged", suggested_dt=grid.dt / 2)
    return sol.t, states


# --------------------------------------------------------------------------
# diagnostics


def distance_to_profile(traj: Trajectory, profile: Profile, x_max: Optional[float] = None) -> np.ndarray:
    """Max-norm distance of each snapshot to the profile on [0, min(M, 0.8 x_far)]."""
    if traj.params != profile.params:
        raise ValueError("trajectory and profile were computed with different parameters")
    if x_max is None:
        x_max = min(profile.M, 0.8 * traj.grid.x_far)
    x = traj.x
    mask = x <= x_max + 1e-12
    ref = profile(x[mask])[[0, 2, 4]]
    return np.max(np.abs(traj.states[:, :, mask] - ref[None]), axis=(1, 2))


def is_stationary(traj: Trajectory, tol: float = 1e-6, window: int = 10) -> bool:
    """Successive snapshots differ by less than ``tol`` over the last ``window`` gaps."""
    if len(traj.times) < window + 1:
        return False
    diffs = np.max(np.abs(np.diff(traj.states[-(window + 1):], axis=0)), axis=(1, 2))
    return bool(np.all(diffs < tol))
