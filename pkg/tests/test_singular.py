import numpy as np
import pytest

from mtevans.errors import PhysicalityError, TrivialOnlyError
from mtevans.model import BoundaryCondition, endstate_from_c, fig3_params, matrix_B
from mtevans.singular import (
    CASE_I,
    CASE_II,
    composite,
    d_sweep,
    fast_layer_solve,
    outer_region_start,
    slow_solve,
)

ONES = fig3_params(d=1.0)
BC = BoundaryCondition.dirichlet(0.2, 0.2, 0.2)


def fd(f, x, h=1e-4):
    return (f(x + h) - f(x - h)) / (2 * h)


def fd2(f, x, h=1e-3):
    return (f(x + h) - 2 * f(x) + f(x - h)) / h**2


@pytest.fixture(scope="module")
def case1():
    return slow_solve(ONES, BC, CASE_I)


@pytest.fixture(scope="module")
def case2():
    return slow_solve(ONES, BC, CASE_II, c_inf=0.5)


def test_case1_c_profile(case1):
    x = np.linspace(0, 20, 201)
    assert np.allclose(case1.c_of_x(x), 0.2 * np.exp(-x), rtol=1e-14, atol=0)
    assert case1.alpha_cons == 0.0 and np.array_equal(case1.limit(), np.zeros(3))


def test_case1_superexponential_decay(case1):
    x = np.linspace(5, 15, 201)
    logp = case1.log_abs_p_plus(x)
    basis = np.exp(x)
    coef = np.polyfit(basis, logp, 1)
    fit = np.polyval(coef, basis)
    assert np.max(np.abs(fit - logp)) / np.max(np.abs(logp)) < 1e-3
    assert coef[0] < 0
    assert np.all(case1.p_plus_of_x(np.array([10.0, 20.0])) == 0.0)     # below the smallest double


def test_case1_matches_closed_form(case1):
    from mtevans.singular import _case1_log_closed

    x = np.linspace(0, 40, 401)
    closed = _case1_log_closed(ONES, 0.2, 0.2, x)
    assert np.max(np.abs(case1.log_abs_p_plus(x) - closed) / np.maximum(1, np.abs(closed))) < 1e-10
    xs = np.linspace(0, 3, 31)
    assert np.allclose(case1.p_plus_of_x(xs), case1.p_plus_closed_form(xs), rtol=1e-9)


def test_case2_limit_matches_endstate(case2):
    es = endstate_from_c(ONES, 0.5)
    lim = case2(np.array([case2.x_max]))[:, 0]
    assert lim[0] == pytest.approx(1 / 3, abs=1e-8)
    assert np.allclose(lim, es.state, atol=1e-8)
    assert np.allclose(case2.limit(), es.state)
    assert np.max(np.abs(matrix_B(ONES, lim) @ lim)) < 1e-8
    assert np.max(np.abs(matrix_B(ONES, case2.limit()) @ case2.limit())) < 1e-10


def test_case2_alpha(case2):
    assert case2.alpha_cons == -0.5
    assert slow_solve(ONES.replace(k=2.0), BC, CASE_II, c_inf=0.25).alpha_cons == -0.5


@pytest.mark.parametrize("case,c_inf", [(CASE_I, 0.0), (CASE_II, 0.5), (CASE_II, 0.1)])
def test_conservation(case, c_inf):
    sol = slow_solve(ONES, BC, case, c_inf)
    x = np.linspace(0, 3 if case == CASE_I else 40, 301)
    pp, pm, c = sol(x)
    assert np.max(np.abs(ONES.u_plus * c * pp - ONES.nu_minus * pm - sol.alpha_cons)) < 1e-10


@pytest.mark.parametrize("case,c_inf", [(CASE_I, 0.0), (CASE_II, 0.5)])
def test_slow_equations_hold(case, c_inf):
    p = fig3_params(omega=0.7, f_cat=1.3, k=0.8, D=1.5)
    sol = slow_solve(p, BC, case, c_inf)
    x = np.linspace(0.2, 2.5, 24)
    pp, pm, c = sol(x)
    flux = lambda t: p.u_plus * sol.c_of_x(t) * sol.p_plus_of_x(t)
    res_pp = -fd(flux, x) - p.f_cat * pp + p.omega * c * pm
    res_c = p.D * fd2(sol.c_of_x, x) - p.k * c + p.nu_minus * pm - p.u_plus * c * pp
    assert np.max(np.abs(res_pp)) < 1e-6
    assert np.max(np.abs(res_c)) < 1e-5


def test_neumann_case1_is_trivial_only():
    with pytest.raises(TrivialOnlyError):
        slow_solve(ONES, BoundaryCondition.neumann(0.2, 0.2), CASE_I)


def test_dirichlet_case1_nontrivial_for_positive_data():
    rng = np.random.default_rng(29)
    for _ in range(10):
        bc = BoundaryCondition.dirichlet(*rng.uniform(0.01, 2.0, 3))
        sol = slow_solve(ONES, bc, CASE_I)
        assert sol.at_zero()[0] == pytest.approx(bc.p_plus_0)
        assert np.abs(sol(np.linspace(0, 1, 5))).max() > 0


def test_case_argument_errors():
    with pytest.raises(ValueError):
        slow_solve(ONES, BC, "III")
    with pytest.raises(ValueError):
        slow_solve(ONES, BC, CASE_II, c_inf=0.0)
    with pytest.raises(PhysicalityError):
        slow_solve(ONES, BC, CASE_II, c_inf=2.0)
    with pytest.raises(ValueError):
        slow_solve(ONES, BoundaryCondition.dirichlet(0.2, 0.2, 0.0), CASE_I)


def test_fast_layer_without_mismatch():
    layer = fast_layer_solve(ONES, [0.1, 0.3, 0.2], BoundaryCondition.dirichlet(0.1, 0.3, 0.2))
    xt = np.linspace(0, 10, 11)
    assert np.all(layer(xt) == np.array([[0.1], [0.3], [0.2]]))


def test_fast_layer_decay():
    layer = fast_layer_solve(ONES, [0.1, 0.3, 0.2], BoundaryCondition.dirichlet(0.1, 0.4, 0.2))
    assert layer.p_minus_jump == pytest.approx(0.1)
    v = layer(np.array([5.0]))[:, 0]
    assert abs(v[1] - 0.3) <= 0.1 * np.exp(-5) * (1 + 1e-12)
    assert v[0] == 0.1 and v[2] == 0.2
    assert layer.half_width == pytest.approx(np.log(2))
    half = layer(np.array([layer.half_width]))[1, 0]
    assert half - 0.3 == pytest.approx(0.05)
    assert np.allclose(layer(np.array([1e3]))[:, 0], layer.limit())


def test_composite_matches_bc_and_outer():
    p = fig3_params(d=0.01)
    x = np.linspace(0, 10, 1001)
    comp = composite(p, BC, CASE_I, x)
    assert np.allclose(comp[:, 0], [0.2, 0.2, 0.2], atol=1e-14)
    slow = slow_solve(p, BC, CASE_I)
    far = x >= outer_region_start(p.d)
    assert np.max(np.abs(comp[:, far] - slow(x[far]))) < 1e-12


def test_composite_collapses_to_slow_as_d_vanishes():
    x = np.linspace(0.5, 10, 200)
    slow = slow_solve(ONES, BC, CASE_I)
    gaps = [np.max(np.abs(composite(ONES.replace(d=d), BC, CASE_I, x) - slow(x))) for d in (1e-2, 1e-3)]
    assert max(gaps) < 1e-15


def test_neumann_case2_constant_c():
    bc = BoundaryCondition.neumann(0.2, 0.2)
    comp = composite(fig3_params(), bc, CASE_II, np.linspace(0, 20, 201), c_inf=0.3)
    assert np.all(comp[2] == 0.3)


def test_outer_region_start():
    assert outer_region_start(0.01) == 0.5 and outer_region_start(0.1) == 1.0


@pytest.mark.parametrize("case,c_inf", [(CASE_I, 0.0), (CASE_II, 1 / 6)])
def test_d_sweep_error_decreases(case, c_inf):
    rows = d_sweep(fig3_params(), BC, case=case, c_inf=c_inf)
    errs = [r["sup_error_outer"] for r in rows]
    assert [r["d"] for r in rows] == [0.1, 0.05, 0.025]
    assert errs[0] > errs[1] > errs[2]
    assert all(b / a <= 0.7 for a, b in zip(errs, errs[1:]))
