"""Power series for A = log(eta) and h = e^{A/2} H e^{-A/2} in the coupling g.

Everything here lives in the one-particle picture.  The Hamiltonian, A and h
are all bilinears sum_xy K_xy c*_x c_y (plus a scalar), and the commutator of
two bilinears is the bilinear of the matrix commutator, so each order reduces
to M x M matrix algebra and a Sylvester problem [h0, X] = R with
h0 = -(nearest-neighbour adjacency).

Two independent routes produce the series:

* ``structured`` (purely imaginary fields only): nested commutators over
  compositions with the lambda / lambda' weights,
* ``direct``: expand e^{ad A} H = H^dagger order by order.

At theta a multiple of pi/2 both run in exact Gaussian-rational arithmetic
(sympy ``DomainMatrix`` over QQ_I); otherwise ``direct`` runs in floats and
solves the Sylvester problem in the eigenbasis of h0.

Operator conventions: a+_{xy} = c*_x c_y + c_x c*_y is E_xy - E_yx as a
one-particle matrix and a-_{xy} = c*_x c_y - c_x c*_y is E_xy + E_yx.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np
import sympy
from scipy.linalg import expm
from sympy import QQ, QQ_I
from sympy.polys.matrices import DomainMatrix

from .chain import HamiltonianSpec, check_dim, one_body_operator, unit_phase
from .errors import ConstructionError, PreconditionError

DEFAULT_MAX_ORDER = 11
SOLVABILITY_TOL = 1e-12
HERMITICITY_TOL = 1e-10


# ---------------------------------------------------------------------------
# coefficient recursions


class SequenceKind(enum.Enum):
    LAMBDA = "Lambda"
    LAMBDA_PRIME = "LambdaPrime"


@dataclass(frozen=True)
class RationalSequence:
    kind: SequenceKind
    values: tuple  # Fractions, values[0] is the k = 1 entry

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def value(self, k: int) -> Fraction:
        """1-based access, matching the usual lambda_k labelling."""
        if not 1 <= k <= len(self.values):
            raise IndexError(f"k={k} outside 1..{len(self.values)}")
        return self.values[k - 1]


def _lambdas(n: int) -> list:
    lam = []
    for k in range(1, n + 1):
        v = Fraction(2 * k - 1, factorial(2 * k + 1))
        v -= sum(lam[k - j - 1] / factorial(2 * j + 1) for j in range(1, k))
        lam.append(v)
    return lam


def lambda_sequence(n: int) -> RationalSequence:
    """Weights of the nested commutators in the order-by-order equations for A."""
    if n < 1:
        raise PreconditionError(f"need n >= 1, got {n}")
    return RationalSequence(SequenceKind.LAMBDA, tuple(_lambdas(n)))


def lambda_prime_sequence(n: int) -> RationalSequence:
    """Weights of the nested commutators building the terms of h."""
    if n < 1:
        raise PreconditionError(f"need n >= 1, got {n}")
    lam = _lambdas(n)
    out = []
    for k in range(1, n + 1):
        v = Fraction(2 * k - 1, 2 ** (2 * k - 1) * factorial(2 * k))
        v -= sum(lam[k - j - 1] / (2 ** (2 * j) * factorial(2 * j)) for j in range(1, k))
        out.append(v)
    return RationalSequence(SequenceKind.LAMBDA_PRIME, tuple(out))


def odd_compositions(total: int, parts: int):
    """Ordered tuples of `parts` odd positive integers summing to `total`."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(1, total - (parts - 1) + 1, 2):
        for rest in odd_compositions(total - first, parts - 1):
            yield (first,) + rest


# ---------------------------------------------------------------------------
# exact / float matrix helpers
#
# Exact matrices are DomainMatrix over QQ_I; float ones are complex ndarrays.


def _is_exact(X) -> bool:
    return isinstance(X, DomainMatrix)


def _qq_i(value) -> object:
    if isinstance(value, complex):
        raise TypeError("complex floats cannot enter the exact pipeline")
    if isinstance(value, tuple):
        re, im = value
        return QQ_I(QQ(re.numerator, re.denominator), QQ(im.numerator, im.denominator))
    value = Fraction(value)
    return QQ_I.convert(QQ(value.numerator, value.denominator))


def _scale(X, factor):
    """factor: Fraction, or (re, im) pair of Fractions for Gaussian rationals."""
    if _is_exact(X):
        return X * _qq_i(factor)
    if isinstance(factor, tuple):
        factor = complex(float(factor[0]), float(factor[1]))
    return X * complex(factor)


def _comm(X, Y):
    return X * Y - Y * X if _is_exact(X) else X @ Y - Y @ X


def _zeros_like(X):
    if _is_exact(X):
        return DomainMatrix.zeros(X.shape, QQ_I)
    return np.zeros_like(X)


def _conj_element(e):
    return QQ_I(e.x, -e.y)


def _element_to_sympy(e) -> sympy.Expr:
    return QQ_I.to_sympy(e)


def _to_numpy(X) -> np.ndarray:
    if not _is_exact(X):
        return np.asarray(X, dtype=complex)
    rows = X.to_list()
    return np.array([[complex(float(e.x), float(e.y)) for e in row] for row in rows])


def _is_zero(X, tol=0.0) -> bool:
    if _is_exact(X):
        return X.is_zero_matrix
    return float(np.abs(X).max(initial=0.0)) <= tol


def free_hopping(sites: int, exact: bool = True):
    """h0 = -sum a-_{x,x+1}, i.e. minus the path adjacency matrix."""
    if exact:
        one = QQ_I.convert(QQ(-1))
        entries = {}
        for x in range(sites - 1):
            entries.setdefault(x, {})[x + 1] = one
            entries.setdefault(x + 1, {})[x] = one
        return DomainMatrix(entries, (sites, sites), QQ_I)
    K = np.zeros((sites, sites), dtype=complex)
    for x in range(sites - 1):
        K[x, x + 1] = K[x + 1, x] = -1.0
    return K


def _exact_phase(theta: float):
    """e^{i theta} as a Gaussian rational if theta is a multiple of pi/2, else None."""
    quarter = theta / (np.pi / 2)
    if abs(quarter - round(quarter)) > 1e-12:
        return None
    re, im = {0: (1, 0), 1: (0, 1), 2: (-1, 0), 3: (0, -1)}[round(quarter) % 4]
    return (Fraction(re), Fraction(im))


def boundary_field(sites: int, theta: float, exact: bool):
    """V with H = h0 + g V + const: V = diag(e^{i theta}, 0, ..., 0, e^{-i theta})."""
    if exact:
        phase = _exact_phase(theta)
        if phase is None:
            raise PreconditionError(f"theta={theta} has no exact phase; use exact=False")
        re, im = phase
        entries = {0: {0: _qq_i((re, im))}}
        entries[sites - 1] = {sites - 1: _qq_i((re, -im))}
        return DomainMatrix(entries, (sites, sites), QQ_I)
    V = np.zeros((sites, sites), dtype=complex)
    z = unit_phase(theta)
    V[0, 0] = z
    V[sites - 1, sites - 1] = np.conj(z)
    return V


# ---------------------------------------------------------------------------
# one-particle operators


@dataclass(frozen=True)
class OneParticleOp:
    """sum_xy K_xy c*_x c_y + scalar, with K exact (DomainMatrix) or float."""

    matrix: object
    scalar: object = 0

    @property
    def exact(self) -> bool:
        return _is_exact(self.matrix)

    @property
    def sites(self) -> int:
        return self.matrix.shape[0]

    def to_numpy(self) -> np.ndarray:
        return _to_numpy(self.matrix)

    def hermiticity_residual(self) -> float:
        K = self.to_numpy()
        return float(np.abs(K - K.conj().T).max(initial=0.0))

    @property
    def hermitian(self) -> bool:
        if self.exact:
            return self.matrix == self.matrix.transpose().applyfunc(_conj_element, QQ_I)
        return self.hermiticity_residual() < HERMITICITY_TOL

    def commutator(self, other: "OneParticleOp") -> "OneParticleOp":
        """[dGamma(K), dGamma(L)] = dGamma([K, L]); scalars drop out."""
        return OneParticleOp(_comm(self.matrix, other.matrix))

    def full(self) -> np.ndarray:
        """The operator on the 2^M spin space."""
        M = self.sites
        check_dim(2 ** M, "one-particle lift")
        out = one_body_operator(M, self.to_numpy())
        return out + complex(self.scalar) * np.eye(2 ** M)

    def entry(self, x: int, y: int):
        """K_xy with 1-based sites; sympy number when exact."""
        if self.exact:
            return _element_to_sympy(self.matrix.to_list()[x - 1][y - 1])
        return complex(self.matrix[x - 1, y - 1])

    def pair_coefficients(self) -> list:
        """[(x, y, coeff of a+_{xy}, coeff of a-_{xy})] for x < y, nonzero pairs only."""
        M = self.sites
        if self.exact:
            rows = [[_element_to_sympy(e) for e in row] for row in self.matrix.to_list()]
            half = sympy.Rational(1, 2)
        else:
            rows = self.to_numpy()
            half = 0.5
        out = []
        for x in range(M):
            for y in range(x + 1, M):
                plus = half * (rows[x][y] - rows[y][x])
                minus = half * (rows[x][y] + rows[y][x])
                if self.exact:
                    plus, minus = sympy.nsimplify(plus), sympy.nsimplify(minus)
                    if plus == 0 and minus == 0:
                        continue
                elif abs(plus) < 1e-15 and abs(minus) < 1e-15:
                    continue
                out.append((x + 1, y + 1, plus, minus))
        return out


# ---------------------------------------------------------------------------
# Sylvester problem [h0, X] = R


@lru_cache(maxsize=16)
def _ad_system(sites: int) -> DomainMatrix:
    """Rows: vec([h0, X]) followed by the gauge rows tr(h0^k X), k < M.

    The gauge removes the commutant of h0 (polynomials in h0, dimension M
    since the free spectrum is simple) so the solution is unique.
    """
    M = sites
    h0 = np.zeros((M, M), dtype=int)
    for x in range(M - 1):
        h0[x, x + 1] = h0[x + 1, x] = -1
    n = M * M
    rows = []
    for i in range(M):
        for j in range(M):
            row = [0] * n
            # ([h0, X])_ij = sum_k h0_ik X_kj - X_ik h0_kj
            for k in range(M):
                if h0[i, k]:
                    row[k * M + j] += int(h0[i, k])
                if h0[k, j]:
                    row[i * M + k] -= int(h0[k, j])
            rows.append(row)
    power = np.eye(M, dtype=object)
    for _ in range(M):
        # tr(P X) = sum_ij P_ji X_ij
        rows.append([int(power[j, i]) for i in range(M) for j in range(M)])
        power = power.dot(h0.astype(object))
    return DomainMatrix([[QQ(v) for v in row] for row in rows], (len(rows), n), QQ)


def _solve_exact(R: DomainMatrix) -> DomainMatrix:
    M = R.shape[0]
    L = _ad_system(M)
    rhs_re, rhs_im = [], []
    for row in R.to_list():
        for e in row:
            rhs_re.append(QQ.convert(e.x))
            rhs_im.append(QQ.convert(e.y))
    rhs_re += [QQ(0)] * M
    rhs_im += [QQ(0)] * M
    rhs = DomainMatrix([[a, b] for a, b in zip(rhs_re, rhs_im)], (len(rhs_re), 2), QQ)
    aug = L.hstack(rhs)
    reduced, pivots = aug.rref()
    n = M * M
    if any(p >= n for p in pivots):
        raise ConstructionError("exact Sylvester system is inconsistent: the right-hand side "
                                "has a component along ker ad_h0", residual=float("inf"))
    if len(pivots) != n:
        raise ConstructionError("Sylvester system is rank deficient", residual=float("nan"))
    red = reduced.to_list()
    entries = {}
    for r, p in enumerate(pivots):
        re, im = red[r][n], red[r][n + 1]
        if re or im:
            entries.setdefault(p // M, {})[p % M] = QQ_I(re, im)
    return DomainMatrix(entries, (M, M), QQ_I)


@lru_cache(maxsize=32)
def _h0_eigensystem(sites: int):
    w, V = np.linalg.eigh(free_hopping(sites, exact=False).real)
    if np.min(np.diff(w)) < 1e-12:
        raise PreconditionError("h0 has a degenerate spectrum; Sylvester gauge is ill-defined")
    return w, V


def _solve_float(R: np.ndarray) -> tuple[np.ndarray, float]:
    w, V = _h0_eigensystem(R.shape[0])
    Rt = V.T @ R @ V
    kernel = float(np.abs(np.diag(Rt)).max()) / max(1.0, float(np.abs(Rt).max()))
    gaps = w[:, None] - w[None, :]
    np.fill_diagonal(gaps, 1.0)
    Xt = Rt / gaps
    np.fill_diagonal(Xt, 0.0)
    return V @ Xt @ V.T, kernel


def solve_sylvester(R, tol: float = SOLVABILITY_TOL):
    """X with [h0, X] = R and no component along the commutant of h0.

    Returns (X, kernel_residual).  Exact input gives an exact X (residual 0)
    or raises; float input raises if the kernel projection of R exceeds tol.
    """
    if _is_exact(R):
        return _solve_exact(R), 0.0
    X, kernel = _solve_float(np.asarray(R, dtype=complex))
    if kernel > tol:
        raise ConstructionError(f"right-hand side has kernel component {kernel:.2e}", residual=kernel)
    return X, kernel


# ---------------------------------------------------------------------------
# series


class SeriesMethod(enum.Enum):
    STRUCTURED = "structured"
    DIRECT = "direct"


@dataclass
class SeriesExpansion:
    """A = sum_n g^n A_n and h = h0 + sum_n g^n h_n as one-particle operators."""

    sites: int
    order: int
    theta: float
    method: SeriesMethod
    A: dict = field(default_factory=dict)  # n -> OneParticleOp
    h: dict = field(default_factory=dict)  # n -> OneParticleOp, h[0] = h0
    kernel_residuals: dict = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return bool(self.A) and next(iter(self.A.values())).exact

    def A_matrix(self, g: float) -> np.ndarray:
        M = self.sites
        out = np.zeros((M, M), dtype=complex)
        for n, term in self.A.items():
            out += g ** n * term.to_numpy()
        return out

    def h_matrix(self, g: float) -> tuple[np.ndarray, complex]:
        M = self.sites
        out = np.zeros((M, M), dtype=complex)
        const = 0j
        for n, term in self.h.items():
            out += g ** n * term.to_numpy()
            const += g ** n * complex(term.scalar)
        return out, const

    def eta_full(self, g: float) -> np.ndarray:
        return expm(one_body_operator(self.sites, self.A_matrix(g)))

    def h_full(self, g: float) -> np.ndarray:
        K, c = self.h_matrix(g)
        return one_body_operator(self.sites, K) + c * np.eye(2 ** self.sites)

    def kappa_table(self, n: int) -> list:
        """[(x, y, coeff of a+, coeff of a-)] for A_n."""
        return self.A[n].pair_coefficients() if n in self.A else []

    def p_table(self) -> dict:
        """{(n, x): {power of g: p coefficient}} with h = -sum p_x^(n) a-_{x,x+n}.

        n = 0 collects on-site terms (-K_xx).  For complex hoppings p is the
        coefficient of c*_x c_{x+n}, the conjugate partner being implied.
        """
        table: dict = {}
        for power, term in sorted(self.h.items()):
            M = self.sites
            for x in range(1, M + 1):
                for y in range(x, M + 1):
                    value = term.entry(x, y)
                    zero = value == 0 if term.exact else abs(value) < 1e-14
                    if zero:
                        continue
                    table.setdefault((y - x, x), {})[power] = -value
        return table


def _check_order(order: int, max_order: int) -> None:
    if order < 0:
        raise PreconditionError(f"order must be >= 0, got {order}")
    if order > max_order:
        raise PreconditionError(f"order {order} exceeds the cap {max_order}")


def _structured_A(sites: int, order: int, exact: bool):
    """Odd-order A_n for alpha = -beta = i g via the lambda-weighted compositions."""
    h0 = free_hopping(sites, exact)
    V = boundary_field(sites, np.pi / 2, exact)  # = i H1 with H1 = n_1 - n_M
    H1 = _scale(V, (Fraction(0), Fraction(-1)))
    lam = _lambdas(max(1, order // 2))
    A, kernel = {}, {}
    if order >= 1:
        A[1], kernel[1] = solve_sylvester(_scale(H1, (Fraction(0), Fraction(2))))
    nested: dict = {(): H1}

    def nest(parts):
        if parts not in nested:
            nested[parts] = _comm(A[parts[0]], nest(parts[1:]))
        return nested[parts]

    for n in range(1, (order - 1) // 2 + 1):
        rhs = _zeros_like(h0)
        for k in range(1, n + 1):
            block = _zeros_like(h0)
            for parts in odd_compositions(2 * n, 2 * k):
                block = block + nest(parts)
            rhs = rhs + _scale(block, (Fraction(0), lam[k - 1]))
        A[2 * n + 1], kernel[2 * n + 1] = solve_sylvester(rhs)
    return h0, H1, A, kernel, nest


def _structured_h(sites, order, h0, H1, A, nest) -> dict:
    lamp = lambda_prime_sequence(max(1, order // 2)).values
    h = {0: OneParticleOp(h0)}
    for n in range(1, order // 2 + 1):
        out = _zeros_like(h0)
        for k in range(1, n + 1):
            block = _zeros_like(h0)
            for parts in odd_compositions(2 * n - 1, 2 * k - 1):
                block = block + nest(parts)
            out = out + _scale(block, (Fraction(0), lamp[k - 1]))
        h[2 * n] = OneParticleOp(out)
    return h


def _series_ad(A: dict, base: dict, order: int, scale: Fraction = Fraction(1)) -> dict:
    """Orders 0..order of sum_k (1/k!) ad_{scale A}^k (base), all as order -> matrix."""
    total = dict(base)
    term = dict(base)
    for k in range(1, order + 1):
        nxt: dict = {}
        for p, a in A.items():
            for q, b in term.items():
                if p + q <= order:
                    c = _comm(a, b)
                    nxt[p + q] = nxt[p + q] + c if p + q in nxt else c
        if not nxt:
            break
        weight = scale ** k / factorial(k)
        term = nxt
        for n, mat in term.items():
            scaled = _scale(mat, weight)
            total[n] = total[n] + scaled if n in total else scaled
    return total


def _adjoint(X):
    if _is_exact(X):
        return X.transpose().applyfunc(_conj_element, QQ_I)
    return X.conj().T


def _direct_A(sites: int, order: int, theta: float, exact: bool):
    """A_n from e^{ad A}(h0 + g V) = h0 + g V^dagger, one order at a time."""
    h0 = free_hopping(sites, exact)
    V = boundary_field(sites, theta, exact)
    A, kernel = {}, {}
    for n in range(1, order + 1):
        lhs = _series_ad(A, {0: h0, 1: V}, n)
        rhs = lhs.get(n, _zeros_like(h0))
        if n == 1:
            rhs = rhs - _adjoint(V)
        # order n reads [A_n, h0] + rhs = 0, i.e. [h0, A_n] = rhs
        if _is_zero(rhs, 1e-15):
            A[n], kernel[n] = _zeros_like(h0), 0.0
        else:
            A[n], kernel[n] = solve_sylvester(rhs)
    A = {n: a for n, a in A.items() if not _is_zero(a, 1e-15)}
    return h0, V, A, kernel


def _direct_h(sites, order, theta, h0, V, A, exact) -> dict:
    raw = _series_ad(A, {0: h0, 1: V}, order, scale=Fraction(1, 2))
    phase = _exact_phase(theta)
    if exact:
        # constant -(alpha + beta)/2 = -g cos(theta)
        const = -phase[0]
    else:
        const = -np.cos(theta)
    h = {}
    for n, mat in raw.items():
        if n > order:
            continue
        scalar = const if n == 1 else 0
        if _is_zero(mat, 1e-15) and not scalar:
            continue
        h[n] = OneParticleOp(mat, scalar)
    return h


def solve_A_series(sites: int, order: int, theta: float = np.pi / 2, exact: bool | None = None,
                   method: SeriesMethod | str | None = None,
                   max_order: int = DEFAULT_MAX_ORDER) -> SeriesExpansion:
    """A = log(eta) through g^order for alpha = conj(beta) = g e^{i theta}.

    ``method`` defaults to ``structured`` at theta = pi/2 and ``direct``
    otherwise; ``exact`` defaults to True whenever theta is a multiple of pi/2.
    """
    return _solve(sites, order, theta, exact, method, max_order, with_h=False)


def solve_h_series(sites: int, order: int, theta: float = np.pi / 2, exact: bool | None = None,
                   method: SeriesMethod | str | None = None,
                   max_order: int = DEFAULT_MAX_ORDER) -> SeriesExpansion:
    """A and h = e^{A/2} H e^{-A/2} through g^order; h[0] is the free hopping."""
    return _solve(sites, order, theta, exact, method, max_order, with_h=True)


def _solve(sites, order, theta, exact, method, max_order, with_h) -> SeriesExpansion:
    if sites < 2:
        raise PreconditionError(f"need at least 2 sites, got {sites}")
    _check_order(order, max_order)
    imaginary = _exact_phase(theta) in ((Fraction(0), Fraction(1)),)
    if exact is None:
        exact = _exact_phase(theta) is not None
    if method is None:
        method = SeriesMethod.STRUCTURED if imaginary else SeriesMethod.DIRECT
    method = SeriesMethod(method)
    if method is SeriesMethod.STRUCTURED and not imaginary:
        raise PreconditionError("the structured route needs theta = pi/2 (alpha = -beta = i g)")
    series = SeriesExpansion(sites, order, float(theta), method)
    if method is SeriesMethod.STRUCTURED:
        h0, H1, A, kernel, nest = _structured_A(sites, order, exact)
        if with_h:
            # h_{2n} needs A up to 2n - 1, already there
            series.h = _structured_h(sites, order, h0, H1, A, nest)
    else:
        h0, V, A, kernel = _direct_A(sites, order, theta, exact)
        if with_h:
            series.h = _direct_h(sites, order, theta, h0, V, A, exact)
    series.A = {n: OneParticleOp(a) for n, a in sorted(A.items())}
    series.kernel_residuals = kernel
    for n, term in series.h.items():
        if not term.hermitian:
            raise ConstructionError(f"h_{n} is not Hermitian ({term.hermiticity_residual():.2e})",
                                    residual=term.hermiticity_residual())
    return series


# ---------------------------------------------------------------------------
# checks against the exact metric


@dataclass
class CrossCheckReport:
    sites: int
    theta: float
    order: int
    couplings: list
    eta_residuals: list
    h_residuals: list
    eta_slope: float
    h_slope: float
    eta_slope_error: float
    h_slope_error: float

    def passes(self, margin: float = 0.0) -> bool:
        need = self.order + 1 - margin
        return self.eta_slope >= need and self.h_slope >= need

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _loglog_fit(xs, ys) -> tuple[float, float]:
    x, y = np.log(np.asarray(xs)), np.log(np.asarray(ys))
    coeffs, cov = np.polyfit(x, y, 1, cov=True) if len(xs) > 2 else (np.polyfit(x, y, 1), None)
    err = float(np.sqrt(cov[0, 0])) if cov is not None else 0.0
    return float(coeffs[0]), err


def cross_validate_with_exact(sites: int, g, theta: float = np.pi / 2, order: int = 3,
                              series: SeriesExpansion | None = None) -> CrossCheckReport:
    """Compare exp(A_series) and h_series with the exact metric and fit the error exponent.

    ``g`` may be a single coupling (then g, g/2 and g/4 are used) or a list.
    Residuals are max-abs entry differences on the full 2^M space.
    """
    from .metric import metric_for  # local: metric pulls in the Bethe solver

    couplings = sorted([g, g / 2, g / 4] if np.isscalar(g) else list(g), reverse=True)
    if series is None:
        series = solve_h_series(sites, order, theta)
    eta_res, h_res = [], []
    for c in couplings:
        if c == 0:
            eta_res.append(float(np.abs(series.eta_full(0.0) - np.eye(2 ** sites)).max()))
            h_res.append(0.0)
            continue
        bundle = metric_for(HamiltonianSpec.polar(sites, c, theta))
        eta_res.append(float(np.abs(series.eta_full(c) - bundle.eta).max()))
        h_res.append(float(np.abs(series.h_full(c) - bundle.h).max()))
    positive = [c for c in couplings if c > 0]
    if len(positive) >= 2:
        idx = [couplings.index(c) for c in positive]
        eta_slope, eta_err = _loglog_fit(positive, [max(eta_res[i], 1e-300) for i in idx])
        h_slope, h_err = _loglog_fit(positive, [max(h_res[i], 1e-300) for i in idx])
    else:
        eta_slope = h_slope = eta_err = h_err = float("nan")
    return CrossCheckReport(sites, float(theta), order, couplings, eta_res, h_res,
                            eta_slope, h_slope, eta_err, h_err)


def full_space_residual(series: SeriesExpansion, n: int) -> float:
    """Check the order-n equation with everything lifted to the 2^M space.

    Uses the direct form: the order-n part of e^{ad A} H - H^dagger, computed
    from full-space commutators of the lifted A_m.
    """
    M = series.sites
    lifted = {m: one_body_operator(M, term.to_numpy()) for m, term in series.A.items() if m <= n}
    h0 = one_body_operator(M, free_hopping(M, exact=False))
    V = one_body_operator(M, boundary_field(M, series.theta, exact=False))
    total = _series_ad(lifted, {0: h0, 1: V}, n)
    residual = total.get(n, np.zeros_like(h0))
    if n == 1:
        residual = residual - V.conj().T
    return float(np.abs(residual).max())


# ---------------------------------------------------------------------------
# comparison with externally supplied coefficient tables


@dataclass
class ConventionEntry:
    x: int
    y: int
    reference: complex
    computed_plus: complex
    computed_minus: complex
    magnitude_match: bool
    sign_match: bool


def convention_report(series: SeriesExpansion, n: int, reference: dict, symbol: str = "a-",
                      tol: float = 1e-12) -> list:
    """Compare a reference table {(x, y): coefficient of symbol_{xy}} with A_n.

    A_n is Hermitian, so it is spanned by i a+ (real antisymmetric part) and a-
    with real coefficients.  A table written on the other symbol is compared
    by magnitude, and the sign comparison is made after reading the table's
    symbol as the one A_n actually uses; the entries record both.
    """
    if symbol not in ("a+", "a-"):
        raise PreconditionError(f"symbol must be 'a+' or 'a-', got {symbol!r}")
    computed = {(x, y): (complex(p), complex(m)) for x, y, p, m in series.kappa_table(n)}
    out = []
    for (x, y), ref in sorted(reference.items()):
        ref = complex(ref)
        plus, minus = computed.get((x, y), (0j, 0j))
        used = plus if abs(plus) >= abs(minus) else minus
        out.append(ConventionEntry(x, y, ref, plus, minus,
                                   magnitude_match=abs(abs(ref) - abs(used)) < tol,
                                   sign_match=abs(ref - used) < tol))
    return out
