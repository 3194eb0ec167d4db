"""Acceptance criteria 1-12, one or more tests per criterion.

Test names carry the criterion number; the conftest prints one PASS/FAIL line
per criterion at the end of the run.  Every test also prints its own verdict
(visible with -s).
"""

import time
from fractions import Fraction

import numpy as np
import pytest
import sympy

from reference_values import (
    H_5_2,
    LAMBDA,
    LAMBDA_PRIME,
    WORDS_5_2,
    a_table,
    eta_sqrt_three_sites_g1,
    eta_three_sites,
    gram_5_2,
    p_table_full,
    rho_five_sites_g1,
)
from xxchain.algebra import (
    check_symmetry,
    exceptional_coupling,
    gl11_rep,
    hecke_rep,
    jordan_analyze,
    sector_matrix,
    tl_relation_audit,
    uqgl11_rep,
    uqsl2_rep,
)
from xxchain.bch import (
    convention_report,
    cross_validate_with_exact,
    lambda_prime_sequence,
    lambda_sequence,
    solve_A_series,
    solve_h_series,
)
from xxchain.bethe import Regime, bethe_spectrum, cross_validate_spectrum, groundstate_scan
from xxchain.chain import (
    HamiltonianSpec,
    build_hamiltonian,
    one_body_operator,
    one_particle_block,
    sector_permutation,
)
from xxchain.diagrams import check_conjecture, gram_matrix, parse_word
from xxchain.metric import metric_for


def report(criterion: int, ok: bool, detail: str = "") -> None:
    print(f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}")


def _sector_ordered(op: np.ndarray, sites: int) -> np.ndarray:
    P = sector_permutation(sites)
    return op[np.ix_(P, P)]


# 1 -------------------------------------------------------------------------


def test_criterion_01_lambda_sequence():
    start = time.perf_counter()
    got = list(lambda_sequence(7))
    elapsed = time.perf_counter() - start
    ok = got == LAMBDA and elapsed < 1
    report(1, ok, f"lambda_1..7 exact, {elapsed:.3f}s")
    assert got == LAMBDA
    assert elapsed < 1


def test_criterion_01_lambda_prime_sequence():
    start = time.perf_counter()
    got = list(lambda_prime_sequence(6))
    elapsed = time.perf_counter() - start
    diff = [(k + 1, str(a), str(b)) for k, (a, b) in enumerate(zip(got, LAMBDA_PRIME)) if a != b]
    report(1, not diff and elapsed < 1, f"lambda'_1..6 mismatches (k, computed, reference): {diff}")
    assert got == LAMBDA_PRIME
    assert elapsed < 1


# 2 -------------------------------------------------------------------------


@pytest.mark.parametrize("g", [0.3, 0.7, 1.0])
def test_criterion_02_eta_three_sites(g):
    start = time.perf_counter()
    bundle = metric_for(HamiltonianSpec.hg(3, g))
    err = np.abs(_sector_ordered(bundle.eta, 3) - eta_three_sites(g)).max()
    elapsed = time.perf_counter() - start
    report(2, err < 1e-10 and elapsed < 1, f"eta at g={g}: max deviation {err:.2e}")
    assert err < 1e-10
    assert elapsed < 1


def test_criterion_02_eta_sqrt_three_sites():
    bundle = metric_for(HamiltonianSpec.hg(3, 1.0))
    err = np.abs(_sector_ordered(bundle.eta_sqrt, 3) - eta_sqrt_three_sites_g1()).max()
    report(2, err < 1e-10, f"eta^1/2 at g=1: max deviation {err:.2e}")
    assert err < 1e-10


def test_criterion_02_hermitian_counterpart_three_sites():
    bundle = metric_for(HamiltonianSpec.hg(3, 1.0))
    K = np.zeros((3, 3))
    K[0, 1] = K[1, 0] = K[1, 2] = K[2, 1] = 1 / np.sqrt(2)
    expected = one_body_operator(3, K)  # (a-_12 + a-_23)/sqrt(2)
    err = np.abs(bundle.h - expected).max()
    flipped = np.abs(bundle.h + expected).max()
    report(2, err < 1e-10,
           f"h at g=1: deviation {err:.2e}; deviation from the negated form {flipped:.2e}")
    assert err < 1e-10


# 3 -------------------------------------------------------------------------


def test_criterion_03_five_site_hopping_radicals():
    start = time.perf_counter()
    bundle = metric_for(HamiltonianSpec.hg(5, 1.0))
    K, const = one_particle_block(bundle.h, 5)
    rho1, rho2, rho3 = rho_five_sites_g1()
    expected = np.zeros((5, 5))
    for (x, y), value in {(1, 2): rho1, (4, 5): rho1, (2, 3): rho2, (3, 4): rho2,
                          (1, 4): rho3, (2, 5): rho3}.items():
        expected[x - 1, y - 1] = expected[y - 1, x - 1] = value
    err = max(np.abs(K - expected).max(), abs(const))
    elapsed = time.perf_counter() - start
    report(3, err < 1e-9 and elapsed < 5, f"rho_1..3 max deviation {err:.2e}, {elapsed:.2f}s")
    assert err < 1e-9
    assert elapsed < 5


# 4 -------------------------------------------------------------------------


def test_criterion_04_hopping_table_through_g6():
    M = 12
    start = time.perf_counter()
    table = solve_h_series(M, 6).p_table()
    elapsed = time.perf_counter() - start
    expected = p_table_full(M)
    got = {key: {p: sympy.Rational(v) for p, v in terms.items()} for key, terms in table.items()}
    want = {key: {p: sympy.Rational(v.numerator, v.denominator) for p, v in terms.items()}
            for key, terms in expected.items()}
    bad = sorted(k for k in set(got) | set(want) if got.get(k) != want.get(k))
    report(4, not bad and elapsed < 30, f"M={M} p-table mismatches {bad}, {elapsed:.2f}s")
    assert not bad
    assert elapsed < 30


# 5 -------------------------------------------------------------------------


def _a_coefficients(series, n):
    """{(x, y): coefficient of a+_{xy}} and the largest a- coefficient."""
    plus = {(x, y): sympy.nsimplify(p) for x, y, p, _ in series.kappa_table(n)}
    minus = max((abs(complex(m)) for _, _, _, m in series.kappa_table(n)), default=0.0)
    return plus, minus


@pytest.mark.parametrize("n,sites", [(3, 8), (5, 12), (7, 16)])
def test_criterion_05_a_series_exact(n, sites):
    series = solve_A_series(sites, n)
    plus, minus = _a_coefficients(series, n)
    expected = {k: sympy.I * sympy.Rational(v.numerator, v.denominator)
                for k, v in a_table(n, sites).items()}
    bad = sorted(k for k in set(plus) | set(expected)
                 if sympy.simplify(plus.get(k, 0) - expected.get(k, 0)) != 0)
    report(5, not bad and minus == 0, f"A_{n} on M={sites}: mismatches {bad}")
    assert not bad
    assert minus == 0


def test_criterion_05_a9_magnitudes_and_convention():
    sites = 20
    series = solve_A_series(sites, 9)
    reference = {k: 1j * float(v) for k, v in a_table(9, sites).items()}
    entries = convention_report(series, 9, reference, symbol="a-")
    magnitudes = all(e.magnitude_match for e in entries)
    signs = all(e.sign_match for e in entries)
    computed = {(x, y) for x, y, _, _ in series.kappa_table(9)}
    report(5, magnitudes and signs and computed == set(reference),
           f"A_9 on M={sites}: {len(entries)} entries, magnitudes match: {magnitudes}, "
           f"signs match with the table read on a+: {signs}")
    assert magnitudes
    assert signs
    assert computed == set(reference)


# 6 -------------------------------------------------------------------------


@pytest.mark.parametrize("sites", [4, 6])
@pytest.mark.parametrize("order", [3, 5])
def test_criterion_06_series_convergence(sites, order):
    start = time.perf_counter()
    rep = cross_validate_with_exact(sites, [0.2, 0.1, 0.05], order=order)
    elapsed = time.perf_counter() - start
    ok = (rep.eta_slope >= order + 1 and rep.eta_slope_error < 0.3 and elapsed < 60)
    report(6, ok, f"M={sites} order {order}: slope {rep.eta_slope:.3f} "
                  f"+- {rep.eta_slope_error:.3f}, {elapsed:.1f}s")
    assert rep.eta_slope >= order + 1
    assert rep.eta_slope_error < 0.3
    assert elapsed < 60


# 7 -------------------------------------------------------------------------


def test_criterion_07_roots_on_circle_and_spectra():
    rng = np.random.default_rng(20261019)
    worst_root, worst_spec = 0.0, 0.0
    for _ in range(50):
        M = int(rng.integers(2, 11))
        g = float(rng.uniform(0, 1))
        theta = float(rng.uniform(0, 2 * np.pi))
        spec = HamiltonianSpec.polar(M, g, theta)
        spectrum = bethe_spectrum(spec)
        worst_root = max(worst_root, float(np.abs(np.abs(spectrum.roots) - 1).max()))
        worst_spec = max(worst_spec, cross_validate_spectrum(spec, spectrum, tol=1e-8))
    ok = worst_root < 1e-10 and worst_spec < 1e-8
    report(7, ok, f"50 samples: ||z|-1| <= {worst_root:.1e}, spectrum mismatch <= {worst_spec:.1e}")
    assert worst_root < 1e-10
    assert worst_spec < 1e-8


# 8 -------------------------------------------------------------------------


def test_criterion_08_jordan_even_chain():
    rep = jordan_analyze(sector_matrix(HamiltonianSpec.hg(4, 1.0), 0))
    blocks = (rep.blocks_at(np.sqrt(2)), rep.blocks_at(-np.sqrt(2)), rep.blocks_at(0.0))
    ok = blocks == ((2,), (2,), (1, 1))
    report(8, ok, f"M=4 g=1 S^z=0 blocks at +sqrt2, -sqrt2, 0: {blocks}")
    assert ok


def test_criterion_08_jordan_odd_chain():
    spec = HamiltonianSpec.hg(5, np.sqrt(1.5))
    rep = jordan_analyze(sector_matrix(spec, Fraction(1, 2)))
    r = np.sqrt(2.5)
    blocks = (rep.blocks_at(r), rep.blocks_at(-r), rep.blocks_at(0.0))
    ok = blocks == ((3,), (3,), (3, 1))
    report(8, ok, f"M=5 g=sqrt(3/2) S^z=1/2 blocks at +r, -r, 0: {blocks}")
    assert ok


@pytest.mark.parametrize("sites,sz", [(4, 0), (5, Fraction(1, 2))])
def test_criterion_08_diagonalizable_below_threshold(sites, sz):
    g = 0.95 * exceptional_coupling(sites)
    rep = jordan_analyze(sector_matrix(HamiltonianSpec.hg(sites, g), sz))
    report(8, rep.diagonalizable, f"M={sites} g={g:.4f}: diagonalizable={rep.diagonalizable}")
    assert rep.diagonalizable


# 9 -------------------------------------------------------------------------

# (g, parity) -> (c_eff, coefficient of M, constant, coefficient of 1/M)
SCALING = {
    (0.0, "even"): (1.0, -2 / np.pi, 1 - 2 / np.pi, -np.pi / 12),
    (0.0, "odd"): (-2.0, -2 / np.pi, 1 - 2 / np.pi, np.pi / 6),
    (1.0, "even"): (-2.0, -2 / np.pi, 1.0, np.pi / 6),
    (1.0, "odd"): (1.0, -2 / np.pi, 1.0, -np.pi / 12),
}


@pytest.mark.parametrize("g,parity", list(SCALING))
def test_criterion_09_central_charge(g, parity):
    c_ref, a_ref, b_ref, c1_ref = SCALING[(g, parity)]
    start = time.perf_counter()
    fit = groundstate_scan(g, parity=int(parity == "odd"))
    elapsed = time.perf_counter() - start
    a, b, c1 = fit.coefficients[:3]
    ok = (abs(fit.c_eff - c_ref) < 0.01 * abs(c_ref) and abs(c1 - c1_ref) < 0.01 * abs(c1_ref)
          and abs(a - a_ref) < 1e-8 and abs(b - b_ref) < 1e-5 and elapsed < 120)
    report(9, ok, f"g={g} {parity}: c_eff {fit.c_eff:.5f}, 1/M coefficient {c1:.5f} "
                  f"(expected {c1_ref:.5f}), {elapsed:.2f}s")
    assert abs(fit.c_eff - c_ref) < 0.01 * abs(c_ref)
    assert abs(c1 - c1_ref) < 0.01 * abs(c1_ref)
    assert abs(a - a_ref) < 1e-8
    assert abs(b - b_ref) < 1e-5
    assert elapsed < 120


# 10 ------------------------------------------------------------------------


@pytest.mark.parametrize("sites", [3, 5])
def test_criterion_10_conjecture_all_sectors(sites):
    metric = metric_for(HamiltonianSpec.hg(sites, 1.0))
    violations = {}
    for m in range(sites + 1):
        rep = check_conjecture(sites, m, metric=metric)
        if rep.violations:
            violations[m] = rep.violations
    report(10, not violations, f"M={sites}: violations {violations}")
    assert not violations


def test_criterion_10_reference_gram_and_hamiltonian():
    gm = gram_matrix(5, 2, order=[parse_word(w) for w in WORDS_5_2])
    g_err = float(np.abs(gm.G - gram_5_2()).max())
    h_ok = np.array_equal(gm.H, H_5_2)
    r = gm.residuals
    ok = (g_err < 1e-8 and h_ok and r["G H - H^t G"] < 1e-8 and r["M* G M - G"] < 1e-8)
    report(10, ok, f"G deviation {g_err:.1e}, H integer match {h_ok}, "
                   f"GH-H^tG {r['G H - H^t G']:.1e}, M*GM-G {r['M* G M - G']:.1e}")
    assert g_err < 1e-8
    assert h_ok
    assert r["G H - H^t G"] < 1e-8
    assert r["M* G M - G"] < 1e-8


@pytest.mark.slow
def test_criterion_10_conjecture_seven_sites():
    start = time.perf_counter()
    metric = metric_for(HamiltonianSpec.hg(7, 1.0))
    violations = {m: rep.violations for m in range(8)
                  if (rep := check_conjecture(7, m, metric=metric)).violations}
    elapsed = time.perf_counter() - start
    report(10, not violations and elapsed < 600, f"M=7: violations {violations}, {elapsed:.1f}s")
    assert not violations
    assert elapsed < 600


# 11 ------------------------------------------------------------------------

RELATION_TOL = 1e-10


def test_criterion_11_uqsl2():
    worst = 0.0
    for M in range(2, 8):
        for frac in (0.0, 0.3, 0.6, 0.9):
            g = frac * exceptional_coupling(M)
            worst = max(worst, uqsl2_rep(M, g).worst_relation())
            if M % 2 == 0:
                worst = max(worst, uqsl2_rep(M, g, "PT").worst_relation())
    report(11, worst < RELATION_TOL, f"U_q(sl2), q = +-i: worst relation {worst:.1e}")
    assert worst < RELATION_TOL


def test_criterion_11_gl11_with_symmetry():
    worst_rel, worst_sym = 0.0, 0.0
    for M in range(2, 8):
        for g in (0.0, 0.4, 0.8, 1.0, 1.5):
            rep = gl11_rep(M, g)
            worst_rel = max(worst_rel, rep.worst_relation())
            worst_sym = max(worst_sym, max(check_symmetry(rep).values()))
        for which in ("U", "V"):
            worst_rel = max(worst_rel, gl11_rep(M, 0.5, which).worst_relation())
    ok = worst_rel < RELATION_TOL and worst_sym < RELATION_TOL
    report(11, ok, f"gl(1|1): relations {worst_rel:.1e}, [H_g, X] {worst_sym:.1e}")
    assert worst_rel < RELATION_TOL
    assert worst_sym < RELATION_TOL


def test_criterion_11_uqgl11_with_symmetry():
    worst_rel, worst_sym = 0.0, 0.0
    for M in range(2, 7):
        for theta in (0.3, 0.9, np.pi / 2, 2.2, 2.9):
            if abs(np.sin(M * theta)) < 1e-6:
                continue
            rep = uqgl11_rep(M, theta)
            worst_rel = max(worst_rel, rep.worst_relation())
            sym = check_symmetry(rep)
            sym.pop("c*_theta")  # a zero mode of H', not a symmetry generator
            worst_sym = max(worst_sym, max(sym.values()))
    ok = worst_rel < RELATION_TOL and worst_sym < RELATION_TOL
    report(11, ok, f"U_p(gl(1|1)): relations {worst_rel:.1e}, [H', X] {worst_sym:.1e}")
    assert worst_rel < RELATION_TOL
    assert worst_sym < RELATION_TOL


def test_criterion_11_hecke():
    worst = 0.0
    for M in range(2, 6):
        for theta in (0.2, 1.0, np.pi / 3, 2.5):
            worst = max(worst, hecke_rep(M, theta=theta).worst_relation())
        for alpha in (0.7 + 0.2j, -1.3j, 2.0):
            worst = max(worst, hecke_rep(M, alpha=alpha).worst_relation())
    report(11, worst < RELATION_TOL, f"Hecke: worst relation {worst:.1e}")
    assert worst < RELATION_TOL


def test_criterion_11_temperley_lieb():
    worst = 0.0
    for M in range(2, 7):
        for g in (0.0, 0.3, 0.7, 1.0, 1.4):
            worst = max(worst, max(tl_relation_audit(M, g).values(), default=0.0))
    report(11, worst < RELATION_TOL, f"modified TL: worst relation {worst:.1e}")
    assert worst < RELATION_TOL


# 12 ------------------------------------------------------------------------


@pytest.mark.parametrize("sites", [4, 5])
def test_criterion_12_positivity_margin_decreases(sites):
    couplings = np.linspace(0, exceptional_coupling(sites), 20, endpoint=False)
    margins = np.array([metric_for(HamiltonianSpec.hg(sites, g)).margin for g in couplings])
    ok = bool(np.all(np.diff(margins) < 0) and margins[-1] > 0)
    report(12, ok, f"M={sites}: margins {margins[0]:.3f} -> {margins[-1]:.3f}")
    assert np.all(np.diff(margins) < 0)
    assert margins[-1] > 0


@pytest.mark.parametrize("sites,g", [(4, 0.3), (4, 0.8), (5, 0.5), (5, 1.1)])
def test_criterion_12_c_operator_and_real_spectrum(sites, g):
    spec = HamiltonianSpec.hg(sites, g)
    bundle = metric_for(spec)
    H, C = build_hamiltonian(spec), bundle.C
    c_sq = float(np.abs(C @ C - np.eye(2 ** sites)).max())
    c_comm = float(np.abs(H @ C - C @ H).max())
    imag = float(np.abs(np.linalg.eigvals(bundle.h).imag).max())
    ok = c_sq < 1e-9 and c_comm < 1e-9 and imag < 1e-10
    report(12, ok, f"M={sites} g={g}: C^2-1 {c_sq:.1e}, [H,C] {c_comm:.1e}, Im spec(h) {imag:.1e}")
    assert c_sq < 1e-9
    assert c_comm < 1e-9
    assert imag < 1e-10


@pytest.mark.parametrize("sites,g", [(4, 1.2), (5, 1.4), (6, 1.1)])
def test_criterion_12_complex_beyond_threshold(sites, g):
    spec = HamiltonianSpec.hg(sites, g)
    imag = float(np.abs(np.linalg.eigvals(build_hamiltonian(spec)).imag).max())
    regime = bethe_spectrum(spec).regime
    ok = imag > 1e-6 and regime is Regime.OFF_CIRCLE
    report(12, ok, f"M={sites} g={g}: max |Im E| {imag:.2e}, regime {regime.value}")
    assert imag > 1e-6
    assert regime is Regime.OFF_CIRCLE
