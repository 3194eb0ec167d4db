"""Symmetry algebras of the chain and a rank-based Jordan structure probe.

Representations are built from fermion operators on the full 2^M space:

* U(gl(1|1)) from the zero-mode combinations U, V (purely imaginary fields),
* U_q(sl2) at q = +-i (odd M, even M and the PT-reflected even-M variant),
* the extended Temperley-Lieb generators e_x,
* the Hecke algebra and U_p(gl(1|1)) for fields on the unit circle.

Hecke / U_p(gl(1|1)) parameter: with these generator formulas every relation
holds for p = -alpha (the inverse of the often quoted -1/alpha).  Both
``hecke_rep`` and ``uqgl11_rep`` take theta with -1/alpha = e^{i theta}, so
p = e^{-i theta}; the report keeps both numbers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .chain import (
    DenseOperator,
    FullSpinBasis,
    HamiltonianSpec,
    build_hamiltonian,
    check_dim,
    jordan_wigner_ops,
    symmetry_ops,
    unit_phase,
)
from .errors import ExceptionalPointError, PreconditionError

RELATION_TOL = 1e-10
CLUSTER_TOL = 1e-7
RANK_TOL = 1e-9
MERGE_RADIUS = 1e-3


class AlgebraTag(enum.Enum):
    UQ_SL2 = "UqSl2"
    GL11 = "Gl11"
    UQ_GL11 = "UqGl11"
    TEMPERLEY_LIEB = "TemperleyLieb"
    HECKE = "Hecke"


@dataclass
class AlgebraRep:
    tag: AlgebraTag
    sites: int
    generators: dict  # name -> ndarray on the full space
    params: dict
    relations: dict = field(default_factory=dict)  # relation name -> residual

    @property
    def odd_sites(self) -> bool:
        return self.sites % 2 == 1

    def operator(self, name: str) -> DenseOperator:
        return DenseOperator(self.generators[name], FullSpinBasis(self.sites))

    def worst_relation(self) -> float:
        return max(self.relations.values(), default=0.0)

    def holds(self, tol: float = RELATION_TOL) -> bool:
        return self.worst_relation() < tol

    def to_json(self, symmetry: dict | None = None) -> dict:
        params = {k: (v if not isinstance(v, complex) else [v.real, v.imag])
                  for k, v in self.params.items()}
        out = {
            "algebra": self.tag.value,
            "params": params,
            "relations": [{"name": k, "residual": v} for k, v in self.relations.items()],
        }
        if symmetry is not None:
            out["symmetry"] = [{"generator": k, "commutator_norm": v} for k, v in symmetry.items()]
        return out


# ---------------------------------------------------------------------------
# building blocks


def _res(X: np.ndarray) -> float:
    return float(np.abs(X).max(initial=0.0))


def _comm(A, B):
    return A @ B - B @ A


def _acomm(A, B):
    return A @ B + B @ A


@lru_cache(maxsize=8)
def _fermions(sites: int):
    check_dim(2 ** sites, "fermion operators")
    ops = jordan_wigner_ops(sites)
    return tuple(c for c, _ in ops), tuple(cd for _, cd in ops)


def mode(sites: int, coeffs, create: bool = False) -> np.ndarray:
    """sum_x coeffs[x-1] c_x, or sum_x coeffs[x-1] c*_x with create=True."""
    c, cd = _fermions(sites)
    ops = cd if create else c
    out = np.zeros((2 ** sites, 2 ** sites), dtype=complex)
    for a, op in zip(coeffs, ops):
        if a != 0:
            out += a * op
    return out


def _occupations(sites: int) -> list:
    c, cd = _fermions(sites)
    return [cd[x] @ c[x] for x in range(sites)]


def zero_mode_ops(sites: int) -> tuple[np.ndarray, np.ndarray]:
    """(U, V) = (sum_x sin(pi x/2) c_x, sum_x cos(pi x/2) c_x)."""
    s = [(0, 1, 0, -1)[x % 4] for x in range(1, sites + 1)]
    co = [(1, 0, -1, 0)[x % 4] for x in range(1, sites + 1)]
    return mode(sites, s), mode(sites, co)


def central_value(sites: int, g: float) -> float:
    """Scalar of Z in the combined gl(1|1) representation."""
    if sites % 2:
        return (sites + 1) / 2 - g * g * (sites - 1) / 2
    return sites * (1 - g * g) / 2


def exceptional_coupling(sites: int) -> float:
    """g where Z vanishes: sqrt((M+1)/(M-1)) for odd M, 1 for even M."""
    return float(np.sqrt((sites + 1) / (sites - 1))) if sites % 2 else 1.0


def _sz(sites: int) -> np.ndarray:
    return symmetry_ops(sites)[2].astype(complex)


def _sigma_product(sites: int) -> np.ndarray:
    """Diagonal of prod_x sigma^z_x: (-1)^(number of down spins)."""
    idx = np.arange(2 ** sites)
    ups = np.array([bin(i).count("1") for i in idx])
    return (-1.0) ** (sites - ups)


def tl_generators(sites: int, g: float) -> list:
    """e_x = c_x c*_{x+1} - c*_x c_{x+1} + i g (n_x - n_{x+1}), x = 1..M-1."""
    c, cd = _fermions(sites)
    n = _occupations(sites)
    return [c[x] @ cd[x + 1] - cd[x] @ c[x + 1] + 1j * g * (n[x] - n[x + 1])
            for x in range(sites - 1)]


def periodic_generator(sites: int, g: float) -> np.ndarray:
    """e_M = c_M c*_1 - c*_M c_1 + i g (n_M - n_1), closing the ring."""
    c, cd = _fermions(sites)
    n = _occupations(sites)
    return c[-1] @ cd[0] - cd[-1] @ c[0] + 1j * g * (n[-1] - n[0])


# ---------------------------------------------------------------------------
# relation sets


def _gl11_relations(X_plus, X_minus, Y, Z) -> dict:
    return {
        "[Y,X+] = X+": _res(_comm(Y, X_plus) - X_plus),
        "[Y,X-] = -X-": _res(_comm(Y, X_minus) + X_minus),
        "[Z,Y] = 0": _res(_comm(Z, Y)),
        "[Z,X+] = 0": _res(_comm(Z, X_plus)),
        "[Z,X-] = 0": _res(_comm(Z, X_minus)),
        "{X+,X-} = Z": _res(_acomm(X_plus, X_minus) - Z),
        "(X+)^2 = 0": _res(X_plus @ X_plus),
        "(X-)^2 = 0": _res(X_minus @ X_minus),
    }


def _uqsl2_relations(E, F, K, Kinv, q, k_square) -> dict:
    eye = np.eye(len(K))
    return {
        "K K^-1 = 1": _res(K @ Kinv - eye),
        "K^-1 K = 1": _res(Kinv @ K - eye),
        "K E = q^2 E K": _res(K @ E - q * q * E @ K),
        "K F = q^-2 F K": _res(K @ F - F @ K / (q * q)),
        "[E,F] = (K-K^-1)/(q-q^-1)": _res(_comm(E, F) - (K - Kinv) / (q - 1 / q)),
        "E^2 = 0": _res(E @ E),
        "F^2 = 0": _res(F @ F),
        "K^2 = sign": _res(K @ K - k_square * eye),
    }


def _tl_relations(e: list, sites: int, g: float) -> dict:
    n = _occupations(sites)
    eye = np.eye(2 ** sites)
    sq, braid, far = 0.0, 0.0, 0.0
    for x, ex in enumerate(e):
        rhs = (1 - g * g) * ((eye - n[x]) @ n[x + 1] + n[x] @ (eye - n[x + 1]))
        sq = max(sq, _res(ex @ ex - rhs))
        d = n[x] - n[x + 1]
        for y in (x - 1, x + 1):
            if 0 <= y < len(e):
                dn = n[y] - n[y + 1]
                rhs = g * g * ex + 1j * g * (1 - g * g) * d @ (eye + dn @ d)
                braid = max(braid, _res(ex @ e[y] @ ex - rhs))
        for y in range(x + 2, len(e)):
            far = max(far, _res(_comm(ex, e[y])))
    return {
        "e_x^2 = (1-g^2)(single occupancy)": sq,
        "e_x e_x+-1 e_x = g^2 e_x + correction": braid,
        "[e_x, e_y] = 0, |x-y|>1": far,
    }


# ---------------------------------------------------------------------------
# constructors


def _require_imaginary_domain(sites: int, g: float, strict: bool = True) -> float:
    if g < 0:
        raise PreconditionError(f"g must be non-negative, got {g}")
    z = central_value(sites, g)
    if abs(z) < 1e-12:
        raise ExceptionalPointError(
            f"Z = {z:.3e} vanishes at g = {g} (M={sites}); the normalisation is singular")
    if strict and z < 0:
        raise PreconditionError(
            f"g = {g} lies beyond the exceptional coupling {exceptional_coupling(sites):.6g}")
    return z


def gl11_rep(sites: int, g: float, which: str = "combined") -> AlgebraRep:
    """U(gl(1|1)) with X+ = U* - i g V*, X- = U - i g V (or the separate U, V reps)."""
    U, V = zero_mode_ops(sites)
    Y = _sz(sites)
    eye = np.eye(2 ** sites)
    if which == "combined":
        Xp, Xm = U.conj().T - 1j * g * V.conj().T, U - 1j * g * V
        z = central_value(sites, g)
    elif which == "U":
        Xp, Xm = U.conj().T, U
        z = (sites + 1) // 2 if sites % 2 else sites / 2
    elif which == "V":
        Xp, Xm = V.conj().T, V
        z = (sites - 1) // 2 if sites % 2 else sites / 2
    else:
        raise PreconditionError(f"unknown gl(1|1) representation {which!r}")
    Z = z * eye
    rep = AlgebraRep(AlgebraTag.GL11, sites, {"X+": Xp, "X-": Xm, "Y": Y, "Z": Z},
                     {"M": sites, "g": g, "theta": np.pi / 2, "Z": float(z), "which": which})
    rep.relations = _gl11_relations(Xp, Xm, Y, Z)
    return rep


def uqsl2_rep(sites: int, g: float, variant: str = "standard") -> AlgebraRep:
    """U_q(sl2) at q = i (q = -i for the PT variant, even M only).

    The normalisation is sqrt(Z), so the rep exists strictly below the
    exceptional coupling.
    """
    z = _require_imaginary_domain(sites, g)
    U, V = zero_mode_ops(sites)
    Ud, Vd = U.conj().T, V.conj().T
    sig = np.diag(_sigma_product(sites)).astype(complex)
    norm = np.sqrt(z)
    M = sites
    if variant == "standard":
        q = 1j
        shift = M if M % 2 else M - 1
        K = 1j ** shift * sig
        Kinv = 1j ** (-shift) * sig
        E = (Ud - 1j * g * Vd) / norm
        F = -(g * V + 1j * U) @ K / norm
    elif variant == "PT":
        if M % 2:
            raise PreconditionError("the PT-reflected U_q(sl2) variant is defined for even M")
        q = -1j
        K = 1j ** (1 - M) * sig
        Kinv = 1j ** (M - 1) * sig
        E = (Vd + 1j * g * Ud) / norm
        F = -(g * U - 1j * V) @ K / norm
    else:
        raise PreconditionError(f"unknown U_q(sl2) variant {variant!r}")
    k_square = (-1) ** (M if M % 2 else M - 1)
    rep = AlgebraRep(AlgebraTag.UQ_SL2, sites, {"E": E, "F": F, "K": K, "K^-1": Kinv},
                     {"M": sites, "g": g, "theta": np.pi / 2, "q": q, "variant": variant,
                      "Z": float(z)})
    rep.relations = _uqsl2_relations(E, F, K, Kinv, q, k_square)
    return rep


def tl_rep(sites: int, g: float) -> AlgebraRep:
    e = tl_generators(sites, g)
    rep = AlgebraRep(AlgebraTag.TEMPERLEY_LIEB, sites, {f"e{x + 1}": ex for x, ex in enumerate(e)},
                     {"M": sites, "g": g, "theta": np.pi / 2})
    rep.relations = _tl_relations(e, sites, g)
    return rep


def _unit_alpha(theta: float | None, alpha: complex | None) -> complex:
    if (theta is None) == (alpha is None):
        raise PreconditionError("give exactly one of theta or alpha")
    if alpha is None:
        # -1/alpha = e^{i theta}
        alpha = -1 / unit_phase(theta)
    alpha = complex(alpha)
    if alpha == 0:
        raise PreconditionError("alpha = 0 leaves the Hecke parameter undefined")
    return alpha


def hecke_rep(sites: int, theta: float | None = None, alpha: complex | None = None) -> AlgebraRep:
    """b_i = c_i c*_{i+1} - c*_i c_{i+1} - alpha^-1 n_i - alpha (n_{i+1} - 1).

    Relations are checked with the Hecke parameter p = -alpha; ``q`` in the
    params is -1/alpha.  alpha off the unit circle is allowed.
    """
    alpha = _unit_alpha(theta, alpha)
    c, cd = _fermions(sites)
    n = _occupations(sites)
    eye = np.eye(2 ** sites)
    b, binv = [], []
    for i in range(sites - 1):
        hop = c[i] @ cd[i + 1] - cd[i] @ c[i + 1]
        b.append(hop - n[i] / alpha - alpha * (n[i + 1] - eye))
        binv.append(hop - (n[i] - eye) / alpha - alpha * n[i + 1])
    p = -alpha
    gens = {f"b{i + 1}": bi for i, bi in enumerate(b)}
    gens.update({f"b{i + 1}^-1": bi for i, bi in enumerate(binv)})
    rel = {"b b^-1 = 1": 0.0, "b^-1 b = 1": 0.0, "b^2 + (p-p^-1) b = 1": 0.0,
           "braid": 0.0, "far commute": 0.0}
    for i, bi in enumerate(b):
        rel["b b^-1 = 1"] = max(rel["b b^-1 = 1"], _res(bi @ binv[i] - eye))
        rel["b^-1 b = 1"] = max(rel["b^-1 b = 1"], _res(binv[i] @ bi - eye))
        rel["b^2 + (p-p^-1) b = 1"] = max(rel["b^2 + (p-p^-1) b = 1"],
                                          _res(bi @ bi + (p - 1 / p) * bi - eye))
        if i + 1 < len(b):
            rel["braid"] = max(rel["braid"], _res(bi @ b[i + 1] @ bi - b[i + 1] @ bi @ b[i + 1]))
        for j in range(i + 2, len(b)):
            rel["far commute"] = max(rel["far commute"], _res(_comm(bi, b[j])))
    rep = AlgebraRep(AlgebraTag.HECKE, sites, gens,
                     {"M": sites, "alpha": alpha, "q": -1 / alpha, "p": p})
    rep.relations = rel
    return rep


def hecke_hamiltonian(rep: AlgebraRep) -> np.ndarray:
    """sum_i (b_i + b_i^-1) / 2."""
    M = rep.sites
    return sum((rep.generators[f"b{i}"] + rep.generators[f"b{i}^-1"]) / 2 for i in range(1, M))


def unit_circle_spec(sites: int, theta: float, variant: str = "Hprime") -> HamiltonianSpec:
    """PT-symmetric chain with -1/alpha = e^{i theta}, i.e. alpha = -e^{-i theta}."""
    alpha = -1 / unit_phase(theta)
    return HamiltonianSpec(sites, alpha, np.conj(alpha), variant)


def zero_mode_wavefunction(sites: int, theta: float) -> np.ndarray:
    """psi_theta(x) = sqrt(sin t / sin M t) e^{i (x - (M+1)/2) t}, bilinearly normalised."""
    s_m = np.sin(sites * theta)
    s_1 = np.sin(theta)
    if abs(s_1) < 1e-14:
        raise PreconditionError("theta must not be a multiple of pi")
    if abs(s_m / s_1) < 1e-12:
        raise ExceptionalPointError(
            f"sin(M theta)/sin(theta) vanishes at M={sites}, theta={theta}: the zero mode has "
            "zero norm", )
    x = np.arange(1, sites + 1)
    return np.sqrt(complex(s_1 / s_m)) * np.exp(1j * (x - (sites + 1) / 2) * theta)


def uqgl11_rep(sites: int, theta: float) -> AlgebraRep:
    """U_p(gl(1|1)) with p = -alpha = e^{-i theta}.

    Y^{+-1} = p^{+-S^z}, Z^{+-1} = p^{+-M}, X+ = sum_x p^{(M+1)/2 - x} c*_x and
    X- = sum_x p^{(M+1)/2 - x} c_x.  Also returns the zero-mode creator
    c*_theta = sum_x psi_theta(x) c*_x under the name "c*_theta".
    """
    psi = zero_mode_wavefunction(sites, theta)
    p = unit_phase(-theta)
    M = sites
    x = np.arange(1, M + 1)
    coeff = p ** ((M + 1) / 2 - x)
    Xp, Xm = mode(M, coeff, create=True), mode(M, coeff)
    sz = np.diag(_sz(M))
    Y = np.diag(p ** sz)
    Yinv = np.diag(p ** (-sz))
    eye = np.eye(2 ** M)
    Z, Zinv = p ** M * eye, p ** (-M) * eye
    rel = {
        "Z Z^-1 = 1": _res(Z @ Zinv - eye),
        "Y Y^-1 = 1": _res(Y @ Yinv - eye),
        "Y X+ Y^-1 = p X+": _res(Y @ Xp @ Yinv - p * Xp),
        "Y X- Y^-1 = p^-1 X-": _res(Y @ Xm @ Yinv - Xm / p),
        "[Y,Z] = 0": _res(_comm(Y, Z)),
        "[Z,X+] = 0": _res(_comm(Z, Xp)),
        "[Z,X-] = 0": _res(_comm(Z, Xm)),
        "{X+,X+} = 0": _res(_acomm(Xp, Xp)),
        "{X-,X-} = 0": _res(_acomm(Xm, Xm)),
        "{X+,X-} = (Z-Z^-1)/(p-p^-1)": _res(_acomm(Xp, Xm) - (Z - Zinv) / (p - 1 / p)),
    }
    gens = {"X+": Xp, "X-": Xm, "Y": Y, "Y^-1": Yinv, "Z": Z, "Z^-1": Zinv,
            "c*_theta": mode(M, psi, create=True)}
    # eta X+ = s (X-)* eta with s the sign of sin(M theta)/sin(theta): X+ is the
    # zero-mode creator divided by sqrt(sin t / sin M t), real only when s = +1
    star_sign = float(np.sign(np.sin(M * theta) / np.sin(theta)))
    rep = AlgebraRep(AlgebraTag.UQ_GL11, sites, gens,
                     {"M": M, "theta": theta, "p": p, "q": 1 / p, "alpha": -p,
                      "star_sign": star_sign})
    rep.relations = rel
    return rep


def build_rep(tag: AlgebraTag | str, sites: int, g: float = 1.0, theta: float = np.pi / 2,
              variant: str | None = None) -> AlgebraRep:
    """Dispatch on the algebra tag; theta only matters for Hecke / U_p(gl(1|1))."""
    tag = AlgebraTag(tag)
    if tag is AlgebraTag.GL11:
        return gl11_rep(sites, g, variant or "combined")
    if tag is AlgebraTag.UQ_SL2:
        return uqsl2_rep(sites, g, variant or "standard")
    if tag is AlgebraTag.TEMPERLEY_LIEB:
        return tl_rep(sites, g)
    if tag is AlgebraTag.HECKE:
        return hecke_rep(sites, theta=theta)
    return uqgl11_rep(sites, theta)


# ---------------------------------------------------------------------------
# symmetry and star-structure checks


def default_hamiltonian(rep: AlgebraRep) -> np.ndarray:
    """The Hamiltonian each representation is meant to commute with."""
    M = rep.sites
    if rep.tag in (AlgebraTag.GL11, AlgebraTag.UQ_SL2):
        variant = "Hg" if M % 2 else "HgTruncated"
        return build_hamiltonian(HamiltonianSpec.hg(M, rep.params["g"], variant))
    if rep.tag is AlgebraTag.UQ_GL11:
        return build_hamiltonian(unit_circle_spec(M, rep.params["theta"]))
    if rep.tag is AlgebraTag.HECKE:
        return hecke_hamiltonian(rep)
    return sum(rep.generators.values())


def check_symmetry(rep: AlgebraRep, hamiltonian: np.ndarray | None = None) -> dict:
    """max |[H, X]| for each generator X."""
    H = default_hamiltonian(rep) if hamiltonian is None else np.asarray(hamiltonian)
    if H.shape != (2 ** rep.sites, 2 ** rep.sites):
        raise PreconditionError("Hamiltonian and representation act on different spaces")
    return {name: _res(_comm(H, X)) for name, X in rep.generators.items()}


def schur_weyl_pairs(sites: int, g: float, variant: str = "standard") -> dict:
    """[E, e_x + e_{x+1}] and [F, e_x + e_{x+1}] for x = 1, 3, 5, ...

    Odd M runs up to x = M-2, even M up to x = M-3.
    """
    rep = uqsl2_rep(sites, g, variant)
    e = tl_generators(sites, g)
    last = sites - 2 if sites % 2 else sites - 3
    out = {}
    for x in range(1, last + 1, 2):
        pair = e[x - 1] + e[x]
        out[f"[E,e{x}+e{x + 1}]"] = _res(_comm(rep.generators["E"], pair))
        out[f"[F,e{x}+e{x + 1}]"] = _res(_comm(rep.generators["F"], pair))
    return out


def tl_relation_audit(sites: int, g: float) -> dict:
    """Modified TL relations at coupling g, plus the q = i TL relations when g = 1."""
    e = tl_generators(sites, g)
    report = dict(_tl_relations(e, sites, g))
    if abs(g - 1) < 1e-15:
        q = 1j
        report["e^2 = -(q+q^-1) e"] = max(_res(ex @ ex + (q + 1 / q) * ex) for ex in e)
        report["e_x e_x+-1 e_x = e_x"] = max(
            [_res(e[x] @ e[y] @ e[x] - e[x]) for x in range(len(e)) for y in (x - 1, x + 1)
             if 0 <= y < len(e)], default=0.0)
    return report


def metric_star_structure_check(rep: AlgebraRep, metric) -> dict:
    """Residuals of eta X+ = (X-)^dagger eta and eta X- = (X+)^dagger eta.

    For U_p(gl(1|1)) with sin(M theta)/sin(theta) < 0 the identities hold with
    an extra factor s = -1; those signed residuals are reported as well.
    """
    eta = metric.eta if hasattr(metric, "eta") else np.asarray(metric)
    Xp, Xm = rep.generators["X+"], rep.generators["X-"]
    scale = max(1.0, _res(eta))
    out = {
        "eta X+ = (X-)* eta": _res(eta @ Xp - Xm.conj().T @ eta) / scale,
        "eta X- = (X+)* eta": _res(eta @ Xm - Xp.conj().T @ eta) / scale,
    }
    s = rep.params.get("star_sign", 1.0)
    if s != 1.0:
        out["eta X+ = s (X-)* eta"] = _res(eta @ Xp - s * Xm.conj().T @ eta) / scale
        out["eta X- = s (X+)* eta"] = _res(eta @ Xm - s * Xp.conj().T @ eta) / scale
    return out


# ---------------------------------------------------------------------------
# Jordan structure


@dataclass
class JordanCluster:
    eigenvalue: complex
    algebraic: int
    geometric: int
    blocks: tuple  # block sizes, descending
    spread: float  # max distance of member eigenvalues from the centre


@dataclass
class JordanReport:
    dimension: int
    clusters: list
    warnings: list = field(default_factory=list)

    @property
    def diagonalizable(self) -> bool:
        return all(c.algebraic == c.geometric for c in self.clusters)

    def blocks_at(self, value: complex, tol: float = 1e-6) -> tuple:
        sizes = []
        for c in self.clusters:
            if abs(c.eigenvalue - value) < tol:
                sizes.extend(c.blocks)
        return tuple(sorted(sizes, reverse=True))

    def to_json(self) -> dict:
        return {
            "dimension": self.dimension,
            "diagonalizable": self.diagonalizable,
            "clusters": [{"re": c.eigenvalue.real, "im": c.eigenvalue.imag,
                          "algebraic": c.algebraic, "geometric": c.geometric,
                          "blocks": list(c.blocks)} for c in self.clusters],
            "warnings": list(self.warnings),
        }


def _nullity(A: np.ndarray, rank_tol: float, scale: float) -> int:
    s = np.linalg.svd(A, compute_uv=False)
    return int(np.sum(s <= rank_tol * max(scale, 1e-300)))


def _single_linkage(values: np.ndarray, tol: float) -> list:
    n = len(values)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) < tol:
                parent[find(i)] = find(j)
    groups: dict = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def jordan_analyze(op, cluster_tol: float = CLUSTER_TOL, rank_tol: float = RANK_TOL,
                   merge_radius: float = MERGE_RADIUS) -> JordanReport:
    """Jordan block sizes from rank sequences of (A - lambda)^k.

    Eigenvalues of a k x k Jordan block split by about eps^(1/k) in floating
    point, so clusters found at ``cluster_tol`` are merged when they lie
    within ``merge_radius`` of each other (single linkage) and the merged
    centre passes the nullity test dim ker (A - lambda)^m = m for the merged
    multiplicity m.  A candidate group that fails the test stays split.
    """
    A = op.entries if isinstance(op, DenseOperator) else np.asarray(op, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise PreconditionError("jordan_analyze needs a square matrix")
    N = A.shape[0]
    w = np.linalg.eigvals(A)
    groups = _single_linkage(w, cluster_tol)
    warnings = []
    eye = np.eye(N)
    scale = max(1.0, float(np.linalg.norm(A, 2)))

    def passes(members):
        lam = w[members].mean()
        m = len(members)
        B = np.linalg.matrix_power(A - lam * eye, m)
        return _nullity(B, rank_tol, max(1.0, scale) ** m) == m

    centres = np.array([w[g].mean() for g in groups])
    merged_groups = []
    for component in _single_linkage(centres, merge_radius):
        members = [i for k in component for i in groups[k]]
        if len(component) > 1 and passes(members):
            merged_groups.append(members)
        else:
            merged_groups.extend(groups[k] for k in component)
    groups = merged_groups
    clusters = []
    centres = [w[g].mean() for g in groups]
    for k, g in enumerate(groups):
        lam = centres[k]
        m = len(g)
        others = [abs(lam - centres[j]) for j in range(len(groups)) if j != k]
        if others and min(others) < 10 * cluster_tol:
            warnings.append(f"clusters at {lam:.6g} closer than 10x the clustering tolerance")
        nullities = [0]
        B = eye
        for _ in range(m):
            B = B @ (A - lam * eye)
            nullities.append(min(m, _nullity(B, rank_tol, scale ** len(nullities))))
            if nullities[-1] == m:
                break
        if nullities[-1] != m:
            warnings.append(f"rank sequence at {lam:.6g} never reached multiplicity {m}")
        at_least = [nullities[k] - nullities[k - 1] for k in range(1, len(nullities))]
        blocks = []
        for size in range(len(at_least), 0, -1):
            exact_count = at_least[size - 1] - (at_least[size] if size < len(at_least) else 0)
            blocks.extend([size] * exact_count)
        spread = float(np.abs(w[g] - lam).max())
        clusters.append(JordanCluster(complex(lam), m, nullities[1], tuple(blocks), spread))
    clusters.sort(key=lambda c: (round(c.eigenvalue.real, 9), round(c.eigenvalue.imag, 9)))
    return JordanReport(N, clusters, warnings)


def sector_matrix(spec: HamiltonianSpec, sz) -> np.ndarray:
    """Dense Hamiltonian restricted to one S^z sector."""
    from .chain import sector_hamiltonian
    return sector_hamiltonian(spec, Fraction(sz)).entries
