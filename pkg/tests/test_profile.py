from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import solve_bvp

from mtevans import profile as profile_mod
from mtevans.errors import DomainSizeError, NongenericEndstateError
from mtevans.model import BoundaryCondition, endstate_from_c, fig3_params, jacobian_at_infinity, rhs_F
from mtevans.profile import (
    constant_profile,
    graded_mesh,
    projective_matrix,
    refine,
    residual,
    solve_on_mesh,
    solve_profile,
)


def test_projective_rows_annihilate_stable_eigenvectors(fig3, zero_endstate):
    proj = projective_matrix(fig3, zero_endstate)
    w, V = np.linalg.eig(jacobian_at_infinity(fig3, zero_endstate))
    stable = V[:, w.real < -1e-9]
    assert stable.shape[1] == 3
    assert np.abs(proj.l_matrix @ stable).max() < 1e-8
    assert np.linalg.svd(proj.l_matrix, compute_uv=False).min() > 1e-10
    assert np.allclose(proj.l_matrix @ proj.l_matrix.T, np.eye(3), atol=1e-12)


def test_projective_rows_at_positive_endstate():
    p = fig3_params()
    es = endstate_from_c(p, 0.4)
    proj = projective_matrix(p, es)
    assert proj.l_matrix.shape == (3, 6)
    assert np.sum(np.abs(proj.eigenvalues) < 1e-9) == 1     # the neutral total-density mode


def test_nongeneric_endstate_rejected(monkeypatch, fig3, zero_endstate):
    monkeypatch.setattr(profile_mod, "jacobian_at_infinity", lambda p, e: np.diag([1.0, 2, 3, 4, -1, -2]))
    with pytest.raises(NongenericEndstateError):
        projective_matrix(fig3, zero_endstate)


def test_graded_mesh():
    x = graded_mesh(30.0, 100)
    assert x[0] == 0.0 and x[-1] == 30.0 and x.size == 101
    assert np.all(np.diff(x) > 0) and np.all(np.diff(np.diff(x)) > 0)


@pytest.mark.parametrize("c", [0.0, 0.3])
def test_rest_point_profile(c):
    p = fig3_params()
    es = endstate_from_c(p, c)
    bc = BoundaryCondition.dirichlet(*es.state)
    prof = solve_profile(p, bc, es)
    assert np.abs(prof.values - es.y[:, None]).max() < 1e-12
    assert residual(prof) < 1e-12


def test_fig3_profile_invariants(fig3_profile):
    prof = fig3_profile
    assert np.all(np.diff(prof.mesh) > 0) and prof.mesh[0] == 0.0
    assert prof.truncation_error < 1e-3
    assert prof.collocation_residual < 1e-8
    assert prof.boundary_defect() < 1e-10
    y0 = prof.values[:, 0]
    assert (y0[0], y0[2], y0[4]) == pytest.approx((0.2, 0.2, 0.2), abs=1e-12)
    assert np.abs(prof.U).max() == pytest.approx(0.2)
    assert residual(prof) <= 1e-6


def test_fig3_profile_against_solve_bvp(fig3, fig3_profile):
    """Independent oracle: scipy's collocation solver with the same conditions."""
    L = fig3_profile.projective.l_matrix
    x = np.linspace(0, fig3_profile.M, 400)

    def bc(ya, yb):
        return np.concatenate([[ya[0] - 0.2, ya[2] - 0.2, ya[4] - 0.2], L @ yb])

    sol = solve_bvp(lambda t, y: rhs_F(fig3, y), bc, x, fig3_profile(x), tol=1e-10, max_nodes=100000)
    assert sol.success
    xs = np.linspace(0, 20, 301)
    assert np.abs(sol.sol(xs) - fig3_profile(xs)).max() < 1e-7


def test_mesh_doubling_self_consistency(fig3, fig3_bc, zero_endstate):
    coarse = solve_profile(fig3, fig3_bc, zero_endstate, n_intervals=300)
    fine = solve_profile(fig3, fig3_bc, zero_endstate, n_intervals=600)
    xs = np.linspace(0, 25, 500)
    assert np.abs(coarse(xs) - fine(xs)).max() < 1e-4


def test_residual_detects_perturbation(fig3_profile):
    vals = fig3_profile.values.copy()
    vals[2, 40] += 1e-3
    assert residual(replace(fig3_profile, values=vals)) > 1e-5


def test_refine_converges(fig3, fig3_bc, zero_endstate):
    p0 = solve_profile(fig3, fig3_bc, zero_endstate, n_intervals=40)
    p1 = refine(p0)
    p2 = refine(p1)
    assert p1.n_nodes == 2 * p0.n_nodes - 1 and p2.n_nodes == 2 * p1.n_nodes - 1
    d1 = np.abs(p1.values[:, ::2] - p0.values).max()
    d2 =np.abs(p2.values[:, ::2] - p1.values).max()
    assert d2 / d1 <= 0.3
    assert residual(p2) <= residual(p0)


def test_refine_rest_point(fig3, zero_endstate):
    prof = constant_profile(fig3, zero_endstate)
    ref = refine(prof)
    assert np.abs(ref.values - zero_endstate.y[:, None]).max() == 0.0


def test_tail_decay_rate(fig3_profile):
    prof = fig3_profile
    x = prof.mesh
    dev = np.abs(prof.U - prof.endstate.state[:, None]).max(axis=0)
    tail = (x >= 0.75 * prof.M) & (dev > 1e-300)
    slope = np.polyfit(x[tail], np.log(dev[tail]), 1)[0]
    w = np.linalg.eigvals(jacobian_at_infinity(prof.params, prof.endstate))
    slowest = w.real[w.real < -1e-9].max()
    assert abs(slope - slowest) <= 0.25 * abs(slowest)
    logdev = np.log(dev[tail])
    assert np.all(np.diff(logdev) < 0)


def test_domain_extension_is_idempotent(fig3, fig3_bc, zero_endstate, fig3_profile):
    ext = solve_profile(fig3, fig3_bc, zero_endstate, M=1.5 * fig3_profile.M)
    xs = np.linspace(0, 0.8 * fig3_profile.M, 400)
    assert np.abs(ext(xs) - fig3_profile(xs)).max() < 1e-3


def test_dirichlet_neumann_consistency(fig3, zero_endstate):
    neu = solve_profile(fig3, BoundaryCondition.neumann(0.2, 0.2), zero_endstate)
    assert abs(neu.values[5, 0]) < 1e-10
    c0 = neu.values[4, 0]
    dir_ = solve_profile(fig3, BoundaryCondition.dirichlet(0.2, 0.2, c0), zero_endstate)
    xs = np.linspace(0, 25, 400)
    assert np.abs(dir_(xs) - neu(xs)).max() < 1e-8


def test_positive_endstate_profile():
    p = fig3_params()
    es = endstate_from_c(p, 1 / 6)
    prof = solve_profile(p, BoundaryCondition.dirichlet(0.2, 0.2, 0.2), es)
    assert prof.truncation_error < 1e-3
    assert residual(prof) < 1e-6


def test_large_data_uses_continuation(fig3, zero_endstate):
    bc = BoundaryCondition.dirichlet(3.0, 3.0, 0.9)
    prof = solve_on_mesh(fig3, bc, zero_endstate, graded_mesh(30.0, 600))
    assert prof.collocation_residual < 1e-8
    assert prof.boundary_defect() < 1e-8


def test_errors(fig3, fig3_bc, zero_endstate):
    with pytest.raises(ValueError):
        solve_profile(fig3, fig3_bc, zero_endstate, M=0.0)
    with pytest.raises(DomainSizeError):
        solve_profile(fig3, fig3_bc, zero_endstate, M=2.0, tol=1e-30, max_doublings=1)


def test_evaluation_beyond_M_returns_endstate(fig3_profile):
    assert np.all(fig3_profile(np.array([fig3_profile.M + 5.0]))[:, 0] == fig3_profile.endstate.y)
