"""Bethe roots, single-particle energies, many-body spectra and scaling fits.

The single-particle problem reduces to the self-reciprocal polynomial

    f(z) = z^{2M} + 1 + (1 + alpha beta) sum_{m=1}^{M-1} z^{2m}
           + (alpha + beta) sum_{m=0}^{M-1} z^{2m+1},

whose roots pair up as (z, 1/z).  Writing eps = z + 1/z turns z^{-M} f(z)
into a degree-M polynomial F(eps) (Chebyshev reduction), and the roots of F
are the single-particle energies.  Many-body energies are
-(alpha + beta)/2 - sum_{j in S} eps_j over subsets S.
"""

from __future__ import annotations

import enum
import logging
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.optimize import brentq, linear_sum_assignment

from .chain import HamiltonianSpec, build_hamiltonian, one_body_matrix
from .errors import CrossValidationError, PreconditionError

log = logging.getLogger(__name__)

ROOT_TOL = 1e-10


class Regime(enum.Enum):
    ON_CIRCLE = "OnCircle"
    OFF_CIRCLE = "OffCircle"


class Approximation(enum.Enum):
    NEAR_ZERO = "NearZero"
    NEAR_ONE = "NearOne"


# ---------------------------------------------------------------------------
# polynomials


@dataclass(frozen=True)
class ReducedPolynomial:
    """Polynomial with coefficients in ascending powers.

    ``variable`` is "z" for the self-reciprocal f(z) and "eps" for F(eps).
    ``zero_modes`` counts eps = 0 roots divided out of F; ``source`` keeps the
    coefficients of f(z), which solve_roots uses for polishing and residuals.
    """

    coefficients: tuple
    variable: str
    sites: int
    alpha: complex
    beta: complex
    zero_modes: int = 0
    exact: bool = False
    source: tuple = ()

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def even_only(self) -> bool:
        return all(c == 0 for c in self.coefficients[1::2])

    def __call__(self, x):
        acc = 0
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc

    def as_array(self) -> np.ndarray:
        return np.array([complex(c) for c in self.coefficients])


def palindromic_coefficients(sites: int, alpha, beta) -> list:
    """Ascending coefficients of f(z); works for Fraction or complex inputs."""
    sigma = 1 + alpha * beta
    rho = alpha + beta
    coeffs = [0] * (2 * sites + 1)
    coeffs[0] = coeffs[-1] = 1
    for m in range(1, sites):
        coeffs[2 * m] = sigma
    for m in range(sites):
        coeffs[2 * m + 1] = rho
    return coeffs


def build_palindromic(spec: HamiltonianSpec) -> ReducedPolynomial:
    """The self-reciprocal polynomial f(z) of degree 2M.

    The construction holds for any complex (alpha, beta); the unit-circle
    property of its roots needs alpha = conj(beta), |alpha| <= 1.
    """
    if spec.variant not in ("H", "Hprime", "Hg"):
        raise PreconditionError(f"no Bethe polynomial for variant {spec.variant}")
    coeffs = palindromic_coefficients(spec.sites, spec.alpha, spec.beta)
    return ReducedPolynomial(tuple(coeffs), "z", spec.sites, spec.alpha, spec.beta,
                             source=tuple(coeffs))


def _chebyshev_reduce(f: list, sites: int) -> list:
    """z^{-M} f(z) written as a polynomial in eps = z + 1/z (ascending)."""
    zero = f[sites] * 0
    out = [zero] * (sites + 1)
    out[0] = f[sites]
    prev, cur = [2], [0, 1]  # D_0 = 2, D_1 = eps
    for k in range(1, sites + 1):
        coeff = f[sites + k]
        for i, d in enumerate(cur):
            out[i] = out[i] + coeff * d
        nxt = [0] + list(cur)
        for i, d in enumerate(prev):
            nxt[i] = nxt[i] - d
        prev, cur = cur, nxt
    return out


def reduce_palindromic(poly: ReducedPolynomial, divide_zero_modes: bool = True) -> ReducedPolynomial:
    """F(eps) from f(z); optionally divide out the odd-M zero mode."""
    if poly.variable != "z":
        raise PreconditionError("expected a polynomial in z")
    F = _chebyshev_reduce(list(poly.coefficients), poly.sites)
    zero_modes = 0
    # on the imaginary axis F has the parity of M; for M odd eps = 0 is a
    # structural root (z = +-i) and is divided out, accidental ones are kept
    odd = all(c == 0 for c in F[0::2])
    if divide_zero_modes and poly.sites % 2 and odd:
        F = F[1:]
        zero_modes = 1
    return ReducedPolynomial(tuple(F), "eps", poly.sites, poly.alpha, poly.beta,
                             zero_modes=zero_modes, exact=poly.exact, source=poly.source)


def build_reduced_F(sites: int, g2) -> ReducedPolynomial:
    """F(eps) at theta = pi/2 from the closed-form coefficient formulas.

    ``g2`` is g^2; pass a Fraction (or int) for exact rational coefficients.
    For odd M the zero mode eps = 0 is already divided out.
    """
    exact = isinstance(g2, (int, Fraction))
    g2 = Fraction(g2) if exact else float(g2)
    one = Fraction(1) if exact else 1.0
    if sites % 2:
        m = (sites - 1) // 2
        coeffs = [0 * one] * (2 * m + 1)
        for k in range(m + 1):
            bracket = Fraction(factorial(m + 1 + k), factorial(m - k))
            if k <= m - 1:
                bracket_g = Fraction(factorial(m + k), factorial(m - 1 - k))
            else:
                bracket_g = 0
            c = (-1) ** (m + k) * (bracket - g2 * bracket_g) / factorial(2 * k + 1)
            coeffs[2 * k] = c if exact else float(c)
        zero_modes = 1
    else:
        m = sites // 2
        coeffs = [0 * one] * (2 * m + 1)
        for k in range(m + 1):
            bracket = Fraction(factorial(m + k), factorial(m - k))
            bracket_g = Fraction(factorial(m - 1 + k), factorial(m - 1 - k)) if k <= m - 1 else 0
            c = (-1) ** (m + k) * (bracket - g2 * bracket_g) / factorial(2 * k)
            coeffs[2 * k] = c if exact else float(c)
        zero_modes = 0
    alpha = 1j * np.sqrt(float(g2))
    if exact:
        # sigma = 1 + g^2 and rho = 0 on the imaginary axis
        source = [Fraction(0)] * (2 * sites + 1)
        source[0] = source[-1] = Fraction(1)
        for mm in range(1, sites):
            source[2 * mm] = 1 + g2
    else:
        source = palindromic_coefficients(sites, alpha, -alpha)
    return ReducedPolynomial(tuple(coeffs), "eps", sites, alpha, -alpha,
                             zero_modes=zero_modes, exact=exact, source=tuple(source))


# ---------------------------------------------------------------------------
# roots


@dataclass
class BetheSpectrum:
    """One representative Bethe root per reciprocal pair, sorted by Re k."""

    sites: int
    roots: np.ndarray  # z_j
    momenta: np.ndarray  # k_j = -i log z_j (complex in general)
    energies: np.ndarray  # eps_j = z_j + 1/z_j
    residuals: np.ndarray  # relative |f(z_j)|
    regime: Regime
    alpha: complex = 0j
    beta: complex = 0j
    notes: list = field(default_factory=list)

    @property
    def worst_residual(self) -> float:
        return float(self.residuals.max()) if len(self.residuals) else 0.0


def companion_roots(coeffs) -> np.ndarray:
    """Roots from the eigenvalues of the companion matrix (ascending coeffs)."""
    c = np.array([complex(x) for x in coeffs])
    while len(c) > 1 and c[-1] == 0:
        c = c[:-1]
    deg = len(c) - 1
    if deg < 1:
        return np.array([], dtype=complex)
    C = np.zeros((deg, deg), dtype=complex)
    C[1:, :-1] = np.eye(deg - 1)
    C[:, -1] = -c[:-1] / c[-1]
    return np.linalg.eigvals(C)


def colleague_roots(poly: ReducedPolynomial) -> np.ndarray:
    """Roots of F from the companion matrix in the Chebyshev basis.

    Since D_k(eps) = 2 T_k(eps/2), z^{-M} f(z) is a Chebyshev series in
    x = eps/2 with coefficients (f_M, 2 f_{M+1}, ..., 2 f_{2M}).  Its
    companion ("colleague") matrix stays well conditioned for long chains,
    unlike the monomial one.
    """
    M = poly.sites
    f = [complex(c) for c in poly.source]
    cheb = np.array([f[M]] + [2 * f[M + k] for k in range(1, M + 1)])
    for _ in range(poly.zero_modes):
        cheb, rem = C.chebdiv(cheb, [0, 1])
        if np.abs(rem).max() > 1e-12 * np.abs(cheb).max():
            raise CrossValidationError("zero mode does not divide F")
    return 2 * C.chebroots(cheb)


def _poly_eval(coeffs: np.ndarray, z):
    return np.polynomial.polynomial.polyval(z, coeffs)


def _relative_residual(coeffs: np.ndarray, z) -> float:
    scale = np.polynomial.polynomial.polyval(abs(z), np.abs(coeffs))
    return abs(_poly_eval(coeffs, z)) / scale


def z_from_energy(eps: complex) -> complex:
    """Root of z^2 - eps z + 1 = 0 with k in (0, pi] on the circle.

    Off the circle the root with positive imaginary part is taken; for real
    z (|eps| > 2) the one outside the unit disc.
    """
    eps = complex(eps)
    s = np.sqrt(eps * eps - 4 + 0j)
    z1, z2 = (eps + s) / 2, (eps - s) / 2
    if abs(z1.imag - z2.imag) > 1e-14:
        return z1 if z1.imag > z2.imag else z2
    return z1 if abs(z1) >= abs(z2) else z2


def _polish(coeffs: np.ndarray, z: complex) -> complex:
    """One Newton step on f(z), kept only if it lowers |f|."""
    deriv = np.polynomial.polynomial.polyder(coeffs)
    fz = _poly_eval(coeffs, z)
    dz = _poly_eval(deriv, z)
    if dz == 0:
        return z
    trial = z - fz / dz
    return trial if abs(_poly_eval(coeffs, trial)) < abs(fz) else z


def trig_roots(sites: int, g: float, samples: int = 64) -> np.ndarray:
    """eps = 2 cos(zeta) from sin((M+1)zeta) + g^2 sin((M-1)zeta) = 0 on (0, pi).

    Bisection on a sign-change grid; only reliable for 0 < g < 1, where all
    roots are simple and real.  Returned in descending order of eps.
    """
    g2 = g * g

    def phi(zeta):
        return np.sin((sites + 1) * zeta) + g2 * np.sin((sites - 1) * zeta)

    grid = np.linspace(0, np.pi, samples * (sites + 1) + 1)[1:-1]
    vals = phi(grid)
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(brentq(phi, a, b, xtol=1e-15, rtol=1e-15))
    return 2 * np.cos(np.array(roots))


def solve_roots(poly: ReducedPolynomial, tol: float = ROOT_TOL,
                cross_validate: bool = True) -> BetheSpectrum:
    """Single-particle spectrum from F(eps) via its (Chebyshev) companion matrix."""
    if poly.variable == "z":
        poly = reduce_palindromic(poly)
    M = poly.sites
    eps = list(colleague_roots(poly))
    eps += [0j] * poly.zero_modes
    if len(eps) != M:
        raise CrossValidationError(f"expected {M} roots, found {len(eps)}")
    f = np.array([complex(c) for c in poly.source])
    zs, residuals = [], []
    for e in eps:
        z = z_from_energy(e)
        if e != 0:  # z = i is exact for the zero mode
            z = _polish(f, z)
        zs.append(z)
        residuals.append(_relative_residual(f, z))
    zs = np.array(zs)
    residuals = np.array(residuals)
    energies = zs + 1 / zs
    momenta = -1j * np.log(zs)
    order = np.lexsort((momenta.imag, np.round(momenta.real, 12)))
    zs, energies, momenta, residuals = zs[order], energies[order], momenta[order], residuals[order]
    if residuals.max() > tol:
        raise CrossValidationError(
            f"Bethe root residual {residuals.max():.3e} above tolerance {tol:.1e}",
            worst=float(residuals.max()),
        )
    on_circle = np.all(np.abs(np.abs(zs) - 1) < tol)
    regime = Regime.ON_CIRCLE if on_circle else Regime.OFF_CIRCLE
    spectrum = BetheSpectrum(M, zs, momenta, energies, residuals, regime, poly.alpha, poly.beta)
    g = abs(poly.alpha)
    if cross_validate and _on_imaginary_axis(poly.alpha, poly.beta) and 0 < g < 1:
        ref = np.sort(trig_roots(M, g))[::-1]
        mine = np.sort(energies.real)[::-1]
        if len(ref) != M:
            spectrum.notes.append(f"bisection found {len(ref)} of {M} roots; cross-check skipped")
        else:
            worst = np.abs(ref - mine).max()
            if worst > 1e-8:
                raise CrossValidationError(
                    f"companion and bisection roots differ by {worst:.3e}", worst=float(worst))
            spectrum.notes.append(f"bisection cross-check {worst:.1e}")
    return spectrum


def _on_imaginary_axis(alpha, beta) -> bool:
    return abs(alpha.real) < 1e-14 and abs(alpha + beta) < 1e-14


def bethe_spectrum(spec: HamiltonianSpec, **kwargs) -> BetheSpectrum:
    """Convenience: build f, reduce, solve."""
    return solve_roots(build_palindromic(spec), **kwargs)


# ---------------------------------------------------------------------------
# many-body spectra


def vacuum_energy(spec: HamiltonianSpec) -> complex:
    return one_body_matrix(spec)[1]


def mode_energies(spec: HamiltonianSpec, spectrum: BetheSpectrum) -> np.ndarray:
    """Energy cost of occupying each mode (-eps_j, shifted for Hprime)."""
    shift = (spec.alpha + spec.beta) if spec.variant == "Hprime" else 0
    return -spectrum.energies - shift


def many_body_spectrum(spec: HamiltonianSpec, spectrum: BetheSpectrum) -> np.ndarray:
    """All 2^M energies E(S) = E_vac + sum_{j in S} (-eps_j), sorted."""
    if spec.sites != spectrum.sites:
        raise PreconditionError("spectrum and spec have different M")
    if spec.variant not in ("H", "Hprime", "Hg"):
        raise PreconditionError(f"variant {spec.variant} has no Bethe spectrum here")
    energies = np.array([vacuum_energy(spec)], dtype=complex)
    for cost in mode_energies(spec, spectrum):
        energies = np.concatenate([energies, energies + cost])
    return _sort_complex(energies)


def _sort_complex(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=complex)
    order = np.lexsort((values.imag, np.round(values.real, 9)))
    return values[order]


def match_multisets(a: np.ndarray, b: np.ndarray) -> float:
    """Largest distance in the optimal pairing of two complex multisets."""
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise PreconditionError(f"multisets of different size {a.shape} vs {b.shape}")
    if np.abs(a.imag).max(initial=0) < 1e-12 and np.abs(b.imag).max(initial=0) < 1e-12:
        return float(np.abs(np.sort(a.real) - np.sort(b.real)).max(initial=0))
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max(initial=0))


def cross_validate_spectrum(spec: HamiltonianSpec, spectrum: BetheSpectrum | None = None,
                            tol: float = 1e-8) -> float:
    """Compare the Bethe many-body spectrum with dense diagonalization."""
    if spectrum is None:
        spectrum = bethe_spectrum(spec)
    bethe = many_body_spectrum(spec, spectrum)
    dense = np.linalg.eigvals(build_hamiltonian(spec))
    worst = match_multisets(bethe, dense)
    if worst > tol:
        raise CrossValidationError(f"Bethe vs dense spectra differ by {worst:.3e}", worst=worst)
    return worst


# ---------------------------------------------------------------------------
# groundstate energies and finite-size scaling


def single_particle_energies(spec: HamiltonianSpec, method: str = "auto") -> np.ndarray:
    """eps_j either from the Bethe polynomial or from the M x M hopping matrix.

    The companion matrix of F loses accuracy for long chains (coefficients
    grow like 2^M), so "auto" switches to the one-particle matrix beyond 40
    sites.  "trig" bisects the scalar root equation on the imaginary axis,
    which stays accurate at the g = 1 exceptional point where the matrix
    eigenvalues split like sqrt(machine epsilon).  Both routes give the same numbers where they overlap.  The
    energies are those of the open chain H with the same boundary fields.
    """
    if method == "auto":
        method = "bethe" if spec.sites <= 40 else "matrix"
    if method == "trig":
        g = spec.coupling
        if not _on_imaginary_axis(spec.alpha, spec.beta) or g > 1:
            raise PreconditionError("trig route needs theta = pi/2 and g <= 1")
        eps = trig_roots(spec.sites, g)
        if abs(g - 1) < 1e-12 and spec.sites % 2 == 0:
            # the double root eps = 0 has no clean sign change; insert it exactly
            eps = eps[np.abs(eps) > 1e-9]
            eps = np.concatenate([eps, np.zeros(2)])
        if len(eps) != spec.sites:
            raise CrossValidationError(f"bisection found {len(eps)} of {spec.sites} roots")
        return eps.astype(complex)
    if method == "bethe":
        return bethe_spectrum(spec.replace(variant="H"), cross_validate=False).energies
    if method == "matrix":
        K, _ = one_body_matrix(spec.replace(variant="H"))
        if np.array_equal(K, K.conj().T):
            return -np.linalg.eigvalsh(K).astype(complex)
        return -np.linalg.eigvals(K)
    raise PreconditionError(f"unknown method {method!r}")


def groundstate_energy(spec: HamiltonianSpec, method: str = "auto", zero_tol: float = 1e-9) -> float:
    """Lowest energy: occupy every mode of negative cost.

    Modes whose cost is below ``zero_tol`` in magnitude are left empty, which
    picks one of the degenerate ground states.
    """
    eps = single_particle_energies(spec, method)
    shift = (spec.alpha + spec.beta) if spec.variant == "Hprime" else 0
    costs = -eps - shift
    if np.abs(costs.imag).max() > 1e-8:
        raise PreconditionError("complex single-particle energies; no ordered ground state")
    costs = costs.real
    return float(vacuum_energy(spec).real + costs[costs < -zero_tol].sum())


@dataclass
class ScalingFit:
    g: float
    theta: float
    sites: np.ndarray
    energies: np.ndarray
    f_inf: float
    f_s: float
    c_eff: float
    rms: float
    coefficients: np.ndarray  # a, b, c, d in E0 = a M + b + c/M + d/M^2

    def to_json(self) -> dict:
        return {"f_inf": self.f_inf, "f_s": self.f_s, "c_eff": self.c_eff, "rms": self.rms}


def default_scan_sites(parity: int, lo: int = 64, hi: int = 1024) -> list[int]:
    """Roughly geometric grid of fixed-parity chain lengths in [lo, hi]."""
    raw = np.unique(np.round(np.geomspace(lo, hi, 13)).astype(int))
    out = []
    for m in raw:
        m = int(m)
        if m % 2 != parity:
            m = m + 1 if m + 1 <= hi else m - 1
        out.append(m)
    return sorted(set(out))


def groundstate_scan(g: float, theta: float = np.pi / 2, sites=None, parity: int | None = None,
                     include_quadratic: bool = True) -> ScalingFit:
    """Fit E0(M) = 2 M f_inf + f_s - pi c_eff / (12 M) (+ d/M^2), weights M^2."""
    if sites is None:
        if parity is None:
            raise PreconditionError("give either explicit sites or a parity")
        sites = default_scan_sites(parity)
    sites = np.array(sorted(set(int(m) for m in sites)))
    if len(set(sites % 2)) != 1:
        raise PreconditionError("scan sites must share one parity")
    ncoef = 4 if include_quadratic else 3
    if len(sites) < ncoef + 2:
        raise PreconditionError(f"need at least {ncoef + 2} chain lengths for a stable fit")
    probe = HamiltonianSpec.polar(2, g, theta)
    method = "trig" if _on_imaginary_axis(probe.alpha, probe.beta) and g <= 1 else "matrix"
    energies = np.array([
        groundstate_energy(HamiltonianSpec.polar(int(m), g, theta), method=method)
        for m in sites
    ])
    cols = [sites.astype(float), np.ones(len(sites)), 1.0 / sites, 1.0 / sites ** 2][:ncoef]
    X = np.stack(cols, axis=1)
    w = sites.astype(float)  # sqrt of the M^2 weights
    coef, *_ = np.linalg.lstsq(X * w[:, None], energies * w, rcond=None)
    resid = energies - X @ coef
    c_eff = -12 * coef[2] / np.pi
    return ScalingFit(g, theta, sites, energies, coef[0] / 2, coef[1], float(c_eff),
                      float(np.sqrt(np.mean(resid ** 2))), coef)


# ---------------------------------------------------------------------------
# perturbative approximations


@dataclass
class ApproxResult:
    energies: np.ndarray
    regime: Approximation
    mismatch: bool  # parameters far from the regime's expansion point


def approx_energies(sites: int, g: float, regime: Approximation | str) -> ApproxResult:
    """Leading-order single-particle energies near g = 0 or g = 1 (theta = pi/2)."""
    regime = Approximation(regime) if isinstance(regime, str) else regime
    M = sites
    g2 = g * g
    if regime is Approximation.NEAR_ZERO:
        k = np.arange(1, M + 1)
        t = np.pi * k / (M + 1)
        eps = 2 * np.cos(t) - 2 * g2 * np.sin(t) * np.sin(2 * t) / (M + 1)
        mismatch = g2 > 0.5
    else:
        k = np.array([k for k in range(1, M) if 2 * k != M])
        t = np.pi * k / M
        eps = list(2 * np.cos(t) + (1 - g2) * np.sin(t) * np.tan(t) / M)
        if M % 2 == 0:
            eps += list(middle_pair(M, g))
        else:
            eps.append(0.0)
        eps = np.array(eps)
        mismatch = g2 < 0.5
    if mismatch:
        warnings.warn(f"{regime.value} approximation used at g={g}", RuntimeWarning, stacklevel=2)
    return ApproxResult(np.sort(eps)[::-1], regime, bool(mismatch))


def middle_pair(sites: int, g: float) -> tuple[float, float]:
    """The two energies that meet at eps = 0 when g -> 1 (M even)."""
    if sites % 2:
        raise PreconditionError("the middle pair only exists for even M")
    g2 = g * g
    val = 2 * np.sqrt(2 * (1 - g2) / (sites * (sites + 2 - g2 * (sites - 2))))
    return val, -val
