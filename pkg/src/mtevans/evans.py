"""Evans function and winding-number stability check.

Decaying solutions of the eigenvalue ODE ``W' = A(x, lam) W`` are carried
from x = M down to x = 0 by continuous orthogonalization: an orthonormal
6x3 frame ``Q`` with ``Q' = (I - Q Q^H) A Q`` and a scalar log-determinant
``rho' = tr(Q^H A Q) - tau(lam)``.  ``tau`` is the sum of the stable
eigenvalues of the limiting matrix, which keeps magnitudes in range and
multiplies E by a nonvanishing analytic factor.  All contour points are
integrated together as one batched ODE.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import SolverError, SplittingError
from .model import DIRICHLET, NEUMANN, jacobian_F
from .profile import Profile
from .spectral import (
    TOL_NEUTRAL,
    SplittingCount,
    count_splitting,
    high_frequency_bound,
    limit_evans_matrix,
)

__all__ = [
    "EvansSystem",
    "ContourSpec",
    "StableBasis",
    "EvansResult",
    "evans_matrix",
    "boundary_basis",
    "stable_basis_at_infinity",
    "transport_bases",
    "evans_eval",
    "evans_values",
    "semicircle",
    "winding_number",
    "default_contour",
]

log = logging.getLogger(__name__)

RTOL = 1e-8
ATOL = 1e-10
DIAMETER_OFFSET = 1e-8


@dataclass(frozen=True)
class EvansSystem:
    profile: Profile
    bc_kind: str
    interpolant: object = field(repr=False)

    @classmethod
    def from_profile(cls, profile: Profile) -> "EvansSystem":
        return cls(profile, profile.bc.kind, profile.interpolant())

    @property
    def params(self):
        return self.profile.params

    @property
    def endstate(self):
        return self.profile.endstate

    @property
    def M(self) -> float:
        return self.profile.M

    def lam_matrix(self) -> np.ndarray:
        """dA/dlam, constant."""
        p = self.params
        E = np.zeros((6, 6))
        E[1, 0] = 1.0 / p.d
        E[3, 2] = 1.0 / p.d
        E[5, 4] = 1.0 / p.D
        return E

    def base_matrix(self, x: float) -> np.ndarray:
        """A(x, 0), which is dF/dY along the profile."""
        if x >= self.M:
            return jacobian_F(self.params, self.endstate.y)
        return jacobian_F(self.params, self.interpolant(x))


def evans_matrix(system: EvansSystem, x: float, lam: complex) -> np.ndarray:
    """Coefficient matrix of the eigenvalue ODE; the limiting matrix for x >= M."""
    if x >= system.M:
        return limit_evans_matrix(system.params, system.endstate, lam)
    return system.base_matrix(x) + lam * system.lam_matrix()


def boundary_basis(bc_kind: str) -> np.ndarray:
    """6x3 basis of solutions of the homogeneous boundary conditions at x = 0."""
    I = np.eye(6)
    if bc_kind == DIRICHLET:
        return I[:, [1, 3, 5]]
    if bc_kind == NEUMANN:
        return I[:, [1, 3, 4]]
    raise ValueError(f"unknown boundary condition kind {bc_kind!r}")


@dataclass(frozen=True)
class StableBasis:
    """Orthonormal basis of the stable subspace and the log of its scalar normalization."""

    lam: complex
    vectors: np.ndarray
    log_factor: complex
    tau: complex
    splitting: SplittingCount


def _stable_projector(Ap, lam, tol=TOL_NEUTRAL):
    mu, V = np.linalg.eig(Ap)
    split = count_splitting(mu, lam, tol)
    stable = mu.real < 0
    Vinv = np.linalg.inv(V)
    Pr = V[:, stable] @ Vinv[stable, :]
    tau = mu[stable].sum()
    return Pr, V[:, stable], tau, split


def _require_split(split: SplittingCount):
    if not split.consistent:
        raise SplittingError(
            f"splitting {split.counts} at lambda = {split.lam}; expected (3, 3, 0)",
            lam=split.lam, counts=split.counts,
        )


def stable_basis_at_infinity(system: EvansSystem, lam: complex,
                             previous: Optional[StableBasis] = None) -> StableBasis:
    """Stable subspace of the limiting matrix at ``lam``.

    Without ``previous`` the basis comes from a sorted eigendecomposition
    (real when ``lam`` is real).  With ``previous`` the old frame is
    projected onto the new subspace and re-orthonormalized; the determinant
    of the triangular factor is accumulated in ``log_factor``.
    """
    Ap = limit_evans_matrix(system.params, system.endstate, lam)
    Pr, Vs, tau, split = _stable_projector(Ap, lam)
    _require_split(split)
    if previous is None:
        if abs(np.imag(lam)) == 0.0:
            # real subspace: real orthonormal basis of range(P)
            U_, s, _ = np.linalg.svd(Pr.real)
            Q = U_[:, :3].astype(complex)
        else:
            Q, _ = np.linalg.qr(Vs)
        return StableBasis(complex(lam), Q, 0.0j, complex(tau), split)
    Q, R = np.linalg.qr(Pr @ previous.vectors)
    logdet = np.sum(np.log(np.diag(R).astype(complex)))
    return StableBasis(complex(lam), Q, previous.log_factor + logdet, complex(tau), split)


def transport_bases(system: EvansSystem, lams: Sequence[complex]) -> list[StableBasis]:
    """Sequential projector transport of the stable basis along a path of lambdas."""
    out = []
    prev = None
    for lam in lams:
        prev = stable_basis_at_infinity(system, lam, prev)
        out.append(prev)
    return out


def _integrate(system: EvansSystem, bases: Sequence[StableBasis], rtol=RTOL, atol=ATOL):
    """Batched continuous orthogonalization from M to 0; returns E for every basis."""
    n = len(bases)
    lams = np.array([b.lam for b in bases])
    taus = np.array([b.tau for b in bases])
    E = system.lam_matrix()
    Q0 = np.stack([b.vectors for b in bases])              # (n, 6, 3)
    y0 = np.concatenate([Q0.ravel(), np.zeros(n, dtype=complex)])
    nq = Q0.size

    def rhs(x, y):
        Q = y[:nq].reshape(n, 6, 3)
        A0 = system.base_matrix(x)
        AQ = A0 @ Q + lams[:, None, None] * (E @ Q)
        H = np.conj(np.swapaxes(Q, 1, 2)) @ AQ              # (n, 3, 3)
        dQ = AQ - Q @ H
        drho = np.trace(H, axis1=1, axis2=2) - taus
        return np.concatenate([dQ.ravel(), drho])

    sol = solve_ivp(rhs, (system.M, 0.0), y0, method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise SolverError(f"Evans integration failed: {sol.message}")
    y = sol.y[:, -1]
    Q = y[:nq].reshape(n, 6, 3)
    rho = y[nq:]
    W0 = boundary_basis(system.bc_kind).astype(complex)
    mats = np.concatenate([np.broadcast_to(W0, (n, 6, 3)), Q], axis=2)
    dets = np.linalg.det(mats)
    logf = np.array([b.log_factor for b in bases])
    # rho integrates from M down to 0, so it already carries the minus sign
    return dets * np.exp(rho + logf), sol.nfev


def evans_values(system: EvansSystem, bases: Sequence[StableBasis], chunk: int = 64,
                 workers: int = 1) -> np.ndarray:
    """Evans function at the lambdas of ``bases``."""
    chunks = [bases[i:i + chunk] for i in range(0, len(bases), chunk)]
    if workers > 1 and len(chunks) > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda c: _integrate(system, c)[0], chunks))
    else:
        parts = [_integrate(system, c)[0] for c in chunks]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=complex)


def evans_eval(system: EvansSystem, lam: complex, basis: Optional[StableBasis] = None) -> complex:
    if basis is None:
        basis = stable_basis_at_infinity(system, lam)
    return complex(_integrate(system, [basis])[0][0])


# --------------------------------------------------------------------------
# contour


@dataclass(frozen=True)
class ContourSpec:
    radius: float
    n_points: int = 120
    max_rel_step: float = 0.2
    offset: float = DIAMETER_OFFSET
    max_points: int = 4000
    symmetric: bool = True


def default_contour(profile: Profile, **kw) -> ContourSpec:
    r_hat = high_frequency_bound(profile).r_hat
    return ContourSpec(radius=max(12.0, 1.05 * r_hat), **kw)


def semicircle(spec: ContourSpec, upper_only: bool = False):
    """Contour points and a part label (0 = arc, 1 = diameter).

    The full contour runs counterclockwise: from R along the arc to iR, down
    the shifted diameter Re = offset to -iR, and along the arc back to R.
    ``upper_only`` returns the first half, from R to the real point on the
    diameter.  Corner points are always included.
    """
    R, eps = spec.radius, spec.offset
    n_half = max(spec.n_points // 2, 8)
    n_arc = max(n_half // 2, 4)
    n_dia = max(n_half - n_arc, 4)
    theta = np.linspace(0.0, np.pi / 2, n_arc + 1)
    arc = R * np.exp(1j * theta)
    s = np.linspace(1.0, 0.0, n_dia + 1)[1:]
    dia = eps + 1j * R * s**2
    lams = np.concatenate([arc, dia])
    part = np.concatenate([np.zeros(arc.size, int), np.ones(dia.size, int)])
    if upper_only:
        return lams, part
    lower = np.conj(lams[::-1])[1:]
    lower_part = part[::-1][1:]
    return np.concatenate([lams, lower]), np.concatenate([part, lower_part])


@dataclass
class EvansResult:
    lambdas: np.ndarray
    values: np.ndarray
    splittings: list
    winding_number: Optional[int]
    winding_raw: float
    gooddisp_verdict: bool
    radius: float
    n_points_final: int
    conclusive: bool
    arc_increment: float = np.nan
    diameter_increment: float = np.nan
    message: str = ""

    @property
    def stable(self) -> bool:
        return self.conclusive and self.gooddisp_verdict and self.winding_number == 0

    def to_dict(self) -> dict:
        return dict(
            winding_number=self.winding_number,
            winding_raw=self.winding_raw,
            gooddisp_verdict=self.gooddisp_verdict,
            radius=self.radius,
            n_points_final=self.n_points_final,
            conclusive=self.conclusive,
            arc_increment=self.arc_increment,
            diameter_increment=self.diameter_increment,
            message=self.message,
        )


def _arg_increments(vals):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.angle(vals[1:] / vals[:-1])


def _rel_steps(vals):
    a = np.abs(vals)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.abs(np.diff(vals)) / np.minimum(a[:-1], a[1:])


def winding_number(system: EvansSystem, contour: Optional[ContourSpec] = None,
                   workers: int = 1) -> EvansResult:
    """Winding number of E around the right half-disk of radius ``contour.radius``.

    Segments are bisected until the relative change of E between
    neighbours is at most ``max_rel_step`` and the total argument change is
    within 0.05 of a multiple of 2 pi, or the point budget runs out.
    """
    if contour is None:
        contour = default_contour(system.profile)
    r_hat = high_frequency_bound(system.profile).r_hat
    if contour.radius <= r_hat:
        raise ValueError(f"contour radius {contour.radius} must exceed r_hat = {r_hat:.6g}")

    lams, part = semicircle(contour, upper_only=contour.symmetric)
    try:
        bases = transport_bases(system, lams)
    except SplittingError as exc:
        return EvansResult(lams, np.full(lams.size, np.nan + 0j), [], None, np.nan, False,
                           contour.radius, lams.size, False, message=str(exc))
    vals = evans_values(system, bases, workers=workers)
    lams = list(lams)
    part = list(part)
    bases = list(bases)
    vals = list(vals)

    def closed(v, lam_list, prt):
        v = np.asarray(v)
        if contour.symmetric:
            full = np.concatenate([v, np.conj(v[::-1])[1:], v[:1]])
            fpart = np.concatenate([prt, prt[::-1][1:], prt[:1]])
        else:
            full = np.concatenate([v, v[:1]])
            fpart = np.concatenate([prt, prt[:1]])
        return full, fpart

    message = ""
    while True:
        v = np.asarray(vals)
        if np.any(~np.isfinite(v)) or np.min(np.abs(v)) <= 1e-12 * np.max(np.abs(v)):
            message = "Evans function nearly vanishes on the contour"
            conclusive = False
            break
        full, _ = closed(v, lams, part)
        steps = _rel_steps(full)
        total = np.sum(_arg_increments(full)) / (2 * np.pi)
        bad = np.flatnonzero(steps[: len(v) - 1] > contour.max_rel_step)
        residual_ok = abs(total - np.round(total)) <= 0.05
        if bad.size == 0 and residual_ok:
            conclusive = True
            break
        if bad.size == 0:
            bad = np.arange(len(v) - 1)
        npts = len(v) * (2 if contour.symmetric else 1)
        if npts + bad.size * (2 if contour.symmetric else 1) > contour.max_points:
            message = "point budget exhausted before the winding number settled"
            conclusive = False
            break
        new_lams, new_bases, insert_at = [], [], []
        for j in bad:
            a, b = lams[j], lams[j + 1]
            if part[j] == 0 and part[j + 1] == 0:
                th = 0.5 * (np.angle(a) + np.angle(b))
                lam_mid = contour.radius * np.exp(1j * th)
            else:
                lam_mid = 0.5 * (a + b)
            try:
                nb = stable_basis_at_infinity(system, lam_mid, bases[j])
            except SplittingError as exc:
                return EvansResult(np.asarray(lams), v, [bb.splitting for bb in bases], None, np.nan,
                                   False, contour.radius, len(lams), False, message=str(exc))
            new_lams.append(lam_mid)
            new_bases.append(nb)
            insert_at.append(j)
        new_vals = evans_values(system, new_bases, workers=workers)
        for j, lam_mid, nb, val in sorted(zip(insert_at, new_lams, new_bases, new_vals),
                                          key=lambda t: t[0], reverse=True):
            lams.insert(j + 1, lam_mid)
            bases.insert(j + 1, nb)
            vals.insert(j + 1, val)
            part.insert(j + 1, part[j] if part[j] == part[j + 1] else 1)
        log.debug("refined %d segments; now %d points", len(insert_at), len(lams))

    v = np.asarray(vals)
    lam_arr = np.asarray(lams)
    prt = np.asarray(part)
    full, fpart = closed(v, lam_arr, prt)
    inc = _arg_increments(full)
    seg_part = np.maximum(fpart[:-1], fpart[1:])
    total = float(np.sum(inc) / (2 * np.pi))
    if contour.symmetric:
        lam_full = np.concatenate([lam_arr, np.conj(lam_arr[::-1])[1:]])
        split_full = [b.splitting for b in bases] + [b.splitting for b in bases[::-1][1:]]
    else:
        lam_full = lam_arr
        split_full = [b.splitting for b in bases]
    gooddisp = all(s.consistent for s in split_full)
    wn = int(np.round(total)) if conclusive and gooddisp else None
    return EvansResult(
        lam_full, full[:-1], split_full, wn, total, gooddisp, contour.radius, lam_full.size, conclusive,
        arc_increment=float(np.sum(inc[seg_part == 0])),
        diameter_increment=float(np.sum(inc[seg_part == 1])),
        message=message,
    )
