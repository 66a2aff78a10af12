import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtevans.errors import PhysicalityError
from mtevans.model import (
    BoundaryCondition,
    ModelParams,
    endstate_from_c,
    endstate_from_total_density,
    fig3_params,
    jacobian_at_infinity,
    jacobian_F,
    linearized_B,
    matrix_A,
    matrix_B,
    matrix_B_tilde,
    matrix_C,
    physicality,
    physicality_margin,
    rhs_F,
    typical_params,
)

from conftest import physical_pair, params_strategy, random_params


def fd_jacobian(fun, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        cols.append((fun(x + e) - fun(x - e)) / (2 * h))
    return np.array(cols).T


def test_params_reject_nonpositive():
    with pytest.raises(ValueError):
        fig3_params(d=0.0)
    with pytest.raises(ValueError):
        fig3_params(k=-1.0)
    with pytest.raises(ValueError):
        fig3_params(D=float("nan"))


def test_params_roundtrip():
    p = fig3_params(omega=0.3)
    assert ModelParams.from_dict(p.to_dict()) == p
    assert p.replace(d=0.05).d == 0.05


def test_presets():
    p = fig3_params()
    assert (p.d, p.D) == (0.1, 1.0)
    assert all(v == 1.0 for k, v in p.to_dict().items() if k not in ("d", "D"))
    t = typical_params(u_plus=2.0, k=0.5)
    assert t.u_plus == 2.0 and t.k == 0.5 and t.omega == 0.15


def test_boundary_condition_validation():
    with pytest.raises(ValueError):
        BoundaryCondition("dirichlet", 0.1, 0.1)
    with pytest.raises(ValueError):
        BoundaryCondition("robin", 0.1, 0.1, 0.1)
    with pytest.raises(ValueError):
        BoundaryCondition("neumann", 0.1, 0.1, 0.3)
    bc = BoundaryCondition.from_dict({"kind": "Neumann", "p_plus_0": 1, "p_minus_0": 2})
    assert bc.c_0 is None and bc.kind == "neumann"


def test_zero_endstate_is_origin(fig3):
    es = endstate_from_c(fig3, 0.0)
    assert np.all(es.state == 0.0)


def test_endstate_all_ones_half():
    p = fig3_params()
    es = endstate_from_c(p, 0.5)
    # omega k c^2 / (nu f - u omega c^2) = .25/.75, k c f/(...) = .5/.75
    assert es.p_plus_inf == pytest.approx(1 / 3, rel=1e-15)
    assert es.p_minus_inf == pytest.approx(2 / 3, rel=1e-15)


def test_physicality_boundary(fig3):
    assert physicality(fig3, 0.999)
    assert not physicality(fig3, 1.0)
    with pytest.raises(PhysicalityError) as exc:
        endstate_from_c(fig3, 2.0)
    assert exc.value.margin == pytest.approx(-3.0)
    with pytest.raises(ValueError):
        endstate_from_c(fig3, -0.1)


def test_equilibrium_residual_random():
    rng = np.random.default_rng(1)
    for _ in range(100):
        p = random_params(rng)
        c_max = np.sqrt(p.nu_minus * p.f_cat / (p.u_plus * p.omega))
        es = endstate_from_c(p, rng.uniform(0, 0.99) * c_max)
        U = es.state
        scale = max(1.0, np.abs(U).max())
        assert np.max(np.abs(matrix_B(p, U) @ U)) < 1e-12 * scale * 10


@given(physical_pair())
@settings(max_examples=60, deadline=None)
def test_linearized_B_matches_finite_differences(pair):
    p, es = pair
    fd = fd_jacobian(lambda U: matrix_B(p, U) @ U, es.state)
    assert np.allclose(matrix_B_tilde(p, es), fd, atol=1e-7, rtol=1e-7)


def test_linearized_B_sign_of_rescue_terms():
    p = fig3_params(omega=2.0)
    Bt = linearized_B(p, [0.3, 0.7, 0.4])
    # rescue flux omega*c*p_minus feeds p_plus
    assert Bt[0, 2] == pytest.approx(2.0 * 0.7)
    assert Bt[1, 2] == pytest.approx(-2.0 * 0.7)


@given(params_strategy(), st.lists(st.floats(-2, 2), min_size=6, max_size=6))
@settings(max_examples=60, deadline=None)
def test_rhs_matches_steady_equations(p, y):
    """Y' = F(Y) is C U'' + A(U) U' + B(U) U = 0 solved for U''."""
    Y = np.array(y)
    U, Ux = Y[[0, 2, 4]], Y[[1, 3, 5]]
    Uxx = -np.linalg.solve(matrix_C(p), matrix_A(p, U) @ Ux + matrix_B(p, U) @ U)
    F = rhs_F(p, Y)
    assert np.allclose(F[[0, 2, 4]], Ux)
    assert np.allclose(F[[1, 3, 5]], Uxx, rtol=1e-12, atol=1e-10)


@given(params_strategy(), st.lists(st.floats(-2, 2), min_size=6, max_size=6))
@settings(max_examples=60, deadline=None)
def test_jacobian_F_matches_finite_differences(p, y):
    Y = np.array(y)
    fd = fd_jacobian(lambda Z: rhs_F(p, Z), Y)
    J = jacobian_F(p, Y)
    assert np.allclose(J, fd, atol=1e-5 * max(1.0, np.abs(J).max()))


def test_vectorized_F_and_jacobian():
    p = fig3_params()
    rng = np.random.default_rng(3)
    Y = rng.normal(size=(6, 5))
    F = rhs_F(p, Y)
    J = jacobian_F(p, Y)
    for i in range(5):
        assert np.allclose(F[:, i], rhs_F(p, Y[:, i]))
        assert np.allclose(J[:, :, i], jacobian_F(p, Y[:, i]))


def test_jacobian_at_infinity_blocks(fig3):
    es = endstate_from_c(fig3, 0.3)
    J = jacobian_at_infinity(fig3, es)
    Ci = np.linalg.inv(matrix_C(fig3))
    lower_u = -Ci @ matrix_B_tilde(fig3, es)
    lower_ux = -Ci @ matrix_A(fig3, es.state)
    assert np.allclose(J[np.ix_([1, 3, 5], [0, 2, 4])], lower_u)
    assert np.allclose(J[np.ix_([1, 3, 5], [1, 3, 5])], lower_ux)


@given(params_strategy(), st.floats(min_value=0.0, max_value=50.0))
@settings(max_examples=80, deadline=None)
def test_total_density_inverse(p, total):
    es = endstate_from_total_density(p, total)
    assert physicality(p, es.c_plus)
    assert es.total_density == pytest.approx(total, rel=1e-9, abs=1e-12)


def test_total_density_examples():
    p = fig3_params()
    es = endstate_from_total_density(p, 0.2)
    assert es.c_plus == pytest.approx(1 / 6, rel=1e-12)
    assert es.p_plus_inf == pytest.approx(1 / 35, rel=1e-12)
    assert es.p_minus_inf == pytest.approx(6 / 35, rel=1e-12)
    with pytest.raises(PhysicalityError):
        endstate_from_total_density(p, -0.1)


def test_physicality_margin_formula():
    p = ModelParams(d=1, D=1, omega=2, nu_minus=3, f_cat=5, u_plus=7, k=1)
    assert physicality_margin(p, 0.5) == pytest.approx(15 - 7 * 2 * 0.25)
