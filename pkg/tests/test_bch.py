from fractions import Fraction
from math import comb

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from xxchain.bch import (
    OneParticleOp,
    SeriesMethod,
    cross_validate_with_exact,
    free_hopping,
    full_space_residual,
    lambda_prime_sequence,
    lambda_sequence,
    odd_compositions,
    solve_A_series,
    solve_h_series,
    solve_sylvester,
)
from xxchain.errors import PreconditionError

I = sympy.I


def test_first_lambdas():
    lam = lambda_sequence(7)
    assert lam.value(1) == Fraction(1, 6)
    assert lam.value(2) == Fraction(-1, 360)
    assert lam.value(6) == Fraction(-691, 653837184000)


def test_first_lambda_primes():
    lp = lambda_prime_sequence(3)
    assert list(lp) == [Fraction(1, 4), Fraction(-1, 192), Fraction(1, 7680)]


def test_lambda_prime_recursion_is_consistent():
    # lambda'_k = (2k-1)/(2^{2k-1}(2k)!) - sum_j lambda_{k-j}/(2^{2j}(2j)!)
    from math import factorial
    lam, lp = lambda_sequence(8), lambda_prime_sequence(8)
    for k in range(1, 9):
        rhs = Fraction(2 * k - 1, 2 ** (2 * k - 1) * factorial(2 * k))
        rhs -= sum(lam.value(k - j) / (2 ** (2 * j) * factorial(2 * j)) for j in range(1, k))
        assert lp.value(k) == rhs


def test_odd_compositions():
    assert sorted(odd_compositions(5, 3)) == [(1, 1, 3), (1, 3, 1), (3, 1, 1)]
    assert list(odd_compositions(4, 3)) == []


@settings(max_examples=30, deadline=None)
@given(total=st.integers(1, 13), parts=st.integers(1, 7))
def test_odd_composition_count(total, parts):
    found = list(odd_compositions(total, parts))
    assert all(len(p) == parts and sum(p) == total and all(x % 2 for x in p) for p in found)
    if (total - parts) % 2 or total < parts:
        assert found == []
    else:
        assert len(found) == comb((total + parts) // 2 - 1, parts - 1)


def test_a1_on_imaginary_axis():
    s = solve_A_series(6, 1)
    assert s.kappa_table(1) == [(x, x + 1, I, 0) for x in range(1, 6)]


def test_a3_boundary_terms():
    table = {(x, y): (p, m) for x, y, p, m in solve_A_series(8, 3).kappa_table(3)}
    assert table[(1, 2)] == (-1 / (6 * I), 0)
    assert table[(7, 8)] == (-1 / (6 * I), 0)
    assert table[(2, 5)] == (1 / (3 * I), 0)


def test_a5_entry():
    table = {(x, y): p for x, y, p, _ in solve_A_series(10, 5).kappa_table(5)}
    assert sympy.simplify(table[(1, 4)] + sympy.Rational(11, 120) * I) == 0


def test_structured_and_direct_routes_agree():
    a = solve_h_series(7, 7, method=SeriesMethod.STRUCTURED)
    b = solve_h_series(7, 7, method=SeriesMethod.DIRECT)
    for n in a.A:
        assert a.A[n].matrix == b.A[n].matrix
    for n in a.h:
        assert a.h[n].matrix == b.h[n].matrix


def test_exact_and_float_agree():
    a = solve_A_series(6, 5)
    b = solve_A_series(6, 5, exact=False)
    for n in a.A:
        assert np.abs(a.A[n].to_numpy() - b.A[n].to_numpy()).max() < 1e-12


def test_orders_are_checked():
    with pytest.raises(PreconditionError):
        solve_A_series(5, 12)
    with pytest.raises(PreconditionError):
        solve_A_series(5, 3, theta=1.0, method="structured")
    assert solve_A_series(5, 0).A == {}


def test_first_order_hermitian_part_general_theta():
    theta = 1.0
    s = solve_h_series(5, 1, theta=theta)
    expected = np.zeros((5, 5))
    expected[0, 0] = expected[4, 4] = np.cos(theta)
    assert np.abs(s.h[1].to_numpy() - expected).max() < 1e-12
    assert abs(s.h[1].scalar + np.cos(theta)) < 1e-12


@pytest.mark.parametrize("theta", [np.pi / 2, 1.0, 0.0])
def test_full_space_equations(theta):
    s = solve_A_series(4, 5, theta=theta)
    for n in s.A:
        assert full_space_residual(s, n) < 1e-12


def test_free_chain_residual_is_zero():
    report = cross_validate_with_exact(3, 0.0)
    assert report.eta_residuals == [0.0, 0.0, 0.0]


def test_convergence_order_three():
    report = cross_validate_with_exact(4, 0.1, order=3)
    assert report.eta_slope >= 4 - 0.3 and report.eta_slope_error < 0.3


def test_convergence_h_order_five():
    report = cross_validate_with_exact(6, 0.2, order=5)
    assert report.h_slope >= 6 - 0.3


def test_convergence_general_theta():
    report = cross_validate_with_exact(4, 0.1, theta=1.0, order=3)
    assert report.passes(margin=0.3)


def test_p_table_first_entries():
    table = solve_h_series(8, 4).p_table()
    assert table[(1, 1)] == {0: 1, 2: sympy.Rational(-1, 4), 4: sympy.Rational(-1, 64)}
    assert table[(3, 1)] == {4: sympy.Rational(5, 64)}
    assert (2, 1) not in table  # even-distance hoppings vanish


@settings(max_examples=20, deadline=None)
@given(M=st.integers(3, 7), seed=st.integers(0, 10_000))
def test_sylvester_recovers_a_gauge_fixed_solution(M, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(M, M)) + 1j * rng.normal(size=(M, M))
    h0 = free_hopping(M, exact=False)
    R = h0 @ X - X @ h0
    sol, kernel = solve_sylvester(R)
    sol = np.asarray(sol, dtype=complex)
    assert np.abs(h0 @ sol - sol @ h0 - R).max() < 1e-9
    assert kernel < 1e-9


def test_one_particle_op_helpers():
    op = OneParticleOp(free_hopping(4))
    assert op.exact and op.hermitian and op.sites == 4
    assert op.entry(1, 2) == -1
    assert op.full().shape == (16, 16)
