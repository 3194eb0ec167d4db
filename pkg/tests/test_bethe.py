from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xxchain.bethe import (
    Regime,
    approx_energies,
    bethe_spectrum,
    build_palindromic,
    build_reduced_F,
    cross_validate_spectrum,
    groundstate_energy,
    groundstate_scan,
    many_body_spectrum,
    match_multisets,
    reduce_palindromic,
    single_particle_energies,
)
from xxchain.chain import HamiltonianSpec, build_hamiltonian
from xxchain.errors import PreconditionError


def test_palindromic_polynomial_imaginary_axis():
    poly = build_palindromic(HamiltonianSpec.hg(2, 1.0))
    assert np.allclose(poly.as_array(), [1, 0, 2, 0, 1])


def test_palindromic_polynomial_real_fields():
    poly = build_palindromic(HamiltonianSpec.polar(3, 1.0, 0.0))
    assert np.allclose(poly.as_array(), [1, 2, 2, 2, 2, 2, 1])


def test_reduced_polynomial_pole_at_threshold():
    F = build_reduced_F(3, Fraction(2))
    assert F.coefficients[0] == 0
    assert build_reduced_F(3, Fraction(1, 2)).coefficients[0] != 0


@pytest.mark.parametrize("g2", [Fraction(1, 3), Fraction(1, 2), Fraction(4, 5)])
def test_reduced_polynomial_m8_coefficient(g2):
    sigma = 1 + g2
    assert build_reduced_F(8, g2).coefficients[6] == -(8 - sigma)
    numeric = reduce_palindromic(build_palindromic(HamiltonianSpec.hg(8, float(g2) ** 0.5)))
    assert abs(numeric.coefficients[6] - float(-(8 - sigma))) < 1e-12


def test_closed_form_reduced_polynomial_matches_chebyshev_route():
    for M in range(2, 11):
        closed = build_reduced_F(M, 0.36)
        cheb = reduce_palindromic(build_palindromic(HamiltonianSpec.hg(M, 0.6)))
        a, b = closed.as_array(), cheb.as_array()
        scale = b[-1] / a[-1]
        assert np.abs(a * scale - b).max() < 1e-10 * np.abs(b).max()


def test_zero_mode_for_odd_m():
    s = bethe_spectrum(HamiltonianSpec.hg(5, 0.6))
    k = int(np.argmin(np.abs(s.energies)))
    assert abs(s.energies[k]) < 1e-14 and abs(s.roots[k] - 1j) < 1e-14


def test_free_chain_energies():
    s = bethe_spectrum(HamiltonianSpec.hg(3, 0.0))
    assert np.allclose(np.sort(s.energies.real), [-np.sqrt(2), 0, np.sqrt(2)], atol=1e-12)
    s4 = bethe_spectrum(HamiltonianSpec.hg(4, 0.0))
    assert np.allclose(np.sort(s4.energies.real), np.sort(2 * np.cos(np.pi * np.arange(1, 5) / 5)))


def test_complex_energies_outside_unit_disc():
    s = bethe_spectrum(HamiltonianSpec.hg(4, 1.2))
    assert s.regime is Regime.OFF_CIRCLE
    assert np.abs(s.energies.imag).max() > 1e-6


def test_many_body_spectrum_two_sites():
    spec = HamiltonianSpec.hg(2, 0.0)
    E = many_body_spectrum(spec, bethe_spectrum(spec))
    assert np.allclose(np.sort(E.real), [-1, 0, 0, 1])
    assert np.allclose(np.sort(np.linalg.eigvalsh(build_hamiltonian(spec))), [-1, 0, 0, 1])


def test_many_body_spectrum_matches_dense_at_g1():
    assert cross_validate_spectrum(HamiltonianSpec.hg(5, 1.0), tol=1e-9) < 1e-9


def test_hprime_variant_spectrum():
    spec = HamiltonianSpec.polar(4, 0.7, 0.9, "Hprime")
    assert cross_validate_spectrum(spec) < 1e-8


def test_groundstate_three_sites_free():
    spec = HamiltonianSpec.polar(3, 0.0)
    E0 = groundstate_energy(spec)
    assert abs(E0 - np.linalg.eigvalsh(build_hamiltonian(spec)).min()) < 1e-12
    assert abs(E0 + np.sqrt(2)) < 1e-12


def test_single_particle_routes_agree():
    spec = HamiltonianSpec.hg(12, 0.8)
    ref = np.sort(single_particle_energies(spec, "matrix").real)
    for method in ("bethe", "trig"):
        assert np.abs(np.sort(single_particle_energies(spec, method).real) - ref).max() < 1e-10


def test_near_zero_approximation():
    approx = approx_energies(8, 0.1, "NearZero").energies
    t = np.pi / 9
    assert abs(approx[0] - (2 * np.cos(t) - 2 * 0.01 * np.sin(t) * np.sin(2 * t) / 9)) < 1e-14
    exact = np.sort(bethe_spectrum(HamiltonianSpec.hg(8, 0.1)).energies.real)[::-1]
    assert np.abs(exact - approx).max() < 10 * 0.1 ** 4


def test_near_one_approximation_warns_far_from_one():
    with pytest.warns(RuntimeWarning):
        out = approx_energies(6, 0.1, "NearOne")
    assert out.mismatch


def test_scan_needs_enough_points():
    with pytest.raises(PreconditionError):
        groundstate_scan(0.0, sites=[64, 66, 68])
    with pytest.raises(PreconditionError):
        groundstate_scan(0.0, sites=[64, 65, 66, 67, 68, 69])


@pytest.mark.parametrize("g,parity,expected", [(0.0, 0, 1.0), (1.0, 0, -2.0)])
def test_central_charge_even_chains(g, parity, expected):
    fit = groundstate_scan(g, parity=parity)
    assert abs(fit.c_eff - expected) < 0.01 * abs(expected)


def test_match_multisets_complex():
    a = np.array([1 + 1j, 1 - 1j, 2])
    assert match_multisets(a, a[::-1]) < 1e-15


@settings(max_examples=30, deadline=None)
@given(M=st.integers(2, 9), g=st.floats(0, 0.999), theta=st.floats(0, 2 * np.pi))
def test_roots_on_unit_circle_inside_disc(M, g, theta):
    s = bethe_spectrum(HamiltonianSpec.polar(M, g, theta))
    assert np.abs(np.abs(s.roots) - 1).max() < 1e-10
    assert np.abs(s.energies.imag).max() < 1e-9


@settings(max_examples=30, deadline=None)
@given(M=st.integers(2, 9), g=st.floats(0, 2), theta=st.floats(0, 2 * np.pi))
def test_roots_come_in_reciprocal_pairs(M, g, theta):
    spec = HamiltonianSpec.polar(M, g, theta)
    f = build_palindromic(spec).as_array()
    s = bethe_spectrum(spec, cross_validate=False, tol=1e-8)
    for z in s.roots:
        assert abs(np.polyval(f[::-1], 1 / z)) < 1e-7 * np.abs(f).sum() * max(1, abs(1 / z)) ** (2 * M)
