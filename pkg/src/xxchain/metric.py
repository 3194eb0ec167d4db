"""Quasi-fermions, the metric operator eta and the Hermitian counterpart h.

For a PT-symmetric chain (alpha = conj(beta)) with all Bethe roots on the
unit circle, the one-particle eigenvectors psi_j of the complex-symmetric
hopping matrix are normalised bilinearly, sum_x psi_j(x)^2 = 1.  They define

    c*_j = sum_x psi_j(x) c*_x,        d_j = sum_x psi_j(x) c_x,

which obey the CAR {c*_j, d_l} = delta_jl.  The metric is

    eta = sum_S d*_S |0><0| d_S,      eta^{-1} = sum_S c*_S |0><0| c_S,

with S running over subsets of modes.  It commutes with S^z, so it is built
sector by sector: in the n-particle sector the columns of Phi_c are the
states c*_S|0>, whose amplitudes are n x n minors of Psi times a Fock sign,
and eta = Phi_d Phi_d^dagger with Phi_d = conj(Phi_c).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .bethe import BetheSpectrum, Regime, bethe_spectrum
from .chain import (
    DenseOperator,
    HamiltonianSpec,
    SectorBasis,
    _bits,
    assemble_sectors,
    build_hamiltonian,
    check_dim,
    fock_signs,
    hamiltonian_on_states,
    jordan_wigner_ops,
    sector_states,
    symmetry_ops,
)
from .errors import ConstructionError, ExceptionalPointError, JordanBlockSuspected, PreconditionError

ZERO_NORM_TOL = 1e-12
POSITIVITY_TOL = 1e-12


@dataclass
class WaveFunctionSet:
    """Bilinearly normalised one-particle wave functions, psi[x-1, j]."""

    sites: int
    psi: np.ndarray
    raw_norms: np.ndarray  # sum_x psitilde_j(x)^2 before normalising
    zero_norm: np.ndarray  # bool per mode
    spectrum: BetheSpectrum
    alpha: complex
    beta: complex

    @property
    def energies(self) -> np.ndarray:
        return self.spectrum.energies

    def orthonormality_residual(self) -> float:
        return float(np.abs(self.psi.T @ self.psi - np.eye(self.sites)).max())

    def completeness_residual(self) -> float:
        return float(np.abs(self.psi @ self.psi.T - np.eye(self.sites)).max())


def raw_wavefunction(z: complex, alpha: complex, sites: int) -> np.ndarray:
    """psitilde(x) = z^x - A z^{-x} with A = (1 + alpha z)/(1 + alpha/z)."""
    x = np.arange(1, sites + 1)
    A = (1 + alpha * z) / (1 + alpha / z)
    return z ** x - A * z ** (-x.astype(float))


def build_wavefunctions(spec: HamiltonianSpec, spectrum: BetheSpectrum | None = None,
                        force: bool = False) -> WaveFunctionSet:
    spec.require_pt()
    if spectrum is None:
        spectrum = bethe_spectrum(spec.replace(variant="H"))
    if spectrum.regime is not Regime.ON_CIRCLE and not force:
        raise ExceptionalPointError(
            "Bethe roots off the unit circle (past the exceptional point); pass force=True to continue")
    M = spec.sites
    psi = np.zeros((M, M), dtype=complex)
    raw = np.zeros(M, dtype=complex)
    for j, z in enumerate(spectrum.roots):
        t = raw_wavefunction(z, spec.alpha, M)
        raw[j] = np.sum(t * t)
        psi[:, j] = t / np.sqrt(raw[j]) if raw[j] != 0 else t
    zero = np.abs(raw) < ZERO_NORM_TOL
    return WaveFunctionSet(M, psi, raw, zero, spectrum, spec.alpha, spec.beta)


# ---------------------------------------------------------------------------
# full-space quasi-fermions (small M; also the independent route to eta)


@dataclass
class QuasiFermionBasis:
    wavefunctions: WaveFunctionSet
    creators: list  # c*_j on the full space
    annihilators: list  # d_j on the full space
    car_residual: float

    @property
    def sites(self) -> int:
        return self.wavefunctions.sites

    def vacuum(self) -> np.ndarray:
        v = np.zeros(2 ** self.sites, dtype=complex)
        v[0] = 1
        return v

    def spectral_residual(self, H: np.ndarray) -> float:
        """max_j of ||[H, c*_j] + eps_j c*_j|| and ||[H, d_j] - eps_j d_j||."""
        worst = 0.0
        for eps, cs, d in zip(self.wavefunctions.energies, self.creators, self.annihilators):
            worst = max(worst,
                        np.abs(H @ cs - cs @ H + eps * cs).max(),
                        np.abs(H @ d - d @ H - eps * d).max())
        return float(worst)

    def metric_from_operators(self) -> np.ndarray:
        """eta = Phi_d Phi_d^dagger by literally applying d*_j to the vacuum."""
        M = self.sites
        cols = []
        dstar = [d.conj().T for d in self.annihilators]
        for n in range(M + 1):
            for S in itertools.combinations(range(M), n):
                v = self.vacuum()
                for j in reversed(S):
                    v = dstar[j] @ v
                cols.append(v)
        Phi = np.stack(cols, axis=1)
        return Phi @ Phi.conj().T


def build_quasifermions(wfs: WaveFunctionSet, tol: float = 1e-8) -> QuasiFermionBasis:
    if wfs.zero_norm.any():
        raise JordanBlockSuspected("zero-norm mode present; the quasi-fermions do not exist")
    M = wfs.sites
    ops = jordan_wigner_ops(M)
    creators = [sum(wfs.psi[x, j] * ops[x][1] for x in range(M)) for j in range(M)]
    annihilators = [sum(wfs.psi[x, j] * ops[x][0] for x in range(M)) for j in range(M)]
    eye = np.eye(2 ** M)
    worst = 0.0
    for j in range(M):
        for l in range(M):
            cd = creators[j] @ annihilators[l] + annihilators[l] @ creators[j]
            cc = creators[j] @ creators[l] + creators[l] @ creators[j]
            dd = annihilators[j] @ annihilators[l] + annihilators[l] @ annihilators[j]
            worst = max(worst, np.abs(cd - (j == l) * eye).max(), np.abs(cc).max(), np.abs(dd).max())
    if worst > tol:
        raise ConstructionError(f"CAR residual {worst:.3e} exceeds {tol:.1e}", residual=worst)
    return QuasiFermionBasis(wfs, creators, annihilators, float(worst))


# ---------------------------------------------------------------------------
# sector-wise metric


def _minors(psi: np.ndarray, positions: np.ndarray, subsets: list, chunk: int = 4_000_000):
    """Matrix of det(psi[X, S]) for rows X (site tuples) and columns S."""
    nX = len(positions)
    nS = len(subsets)
    n = positions.shape[1] if nX else 0
    if n == 0:
        return np.ones((nX, nS), dtype=complex)
    S = np.array(subsets)
    out = np.empty((nX, nS), dtype=complex)
    rows = max(1, chunk // max(1, nS * n * n))
    for start in range(0, nX, rows):
        pos = positions[start:start + rows]
        block = psi[pos][:, :, S]  # (rows, n, nS, n)
        block = np.moveaxis(block, 2, 1)  # (rows, nS, n, n)
        out[start:start + rows] = np.linalg.det(block)
    return out


@dataclass
class SectorMetric:
    particles: int
    states: np.ndarray
    subsets: list
    phi_c: np.ndarray  # columns c*_S|0>
    eta: np.ndarray
    eta_inv: np.ndarray
    eta_sqrt: np.ndarray
    eta_isqrt: np.ndarray
    hamiltonian: np.ndarray
    h: np.ndarray
    C: np.ndarray
    min_eigenvalue: float


@dataclass
class MetricBundle:
    spec: HamiltonianSpec
    wavefunctions: WaveFunctionSet
    sectors: list
    margin: float  # smallest eigenvalue of eta
    log: list = field(default_factory=list)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def sites(self) -> int:
        return self.spec.sites

    def _full(self, name: str) -> np.ndarray:
        if name not in self._cache:
            check_dim(2 ** self.sites, name)
            self._cache[name] = assemble_sectors([getattr(s, name) for s in self.sectors], self.sites)
        return self._cache[name]

    @property
    def eta(self) -> np.ndarray:
        return self._full("eta")

    @property
    def eta_inv(self) -> np.ndarray:
        return self._full("eta_inv")

    @property
    def eta_sqrt(self) -> np.ndarray:
        return self._full("eta_sqrt")

    @property
    def eta_isqrt(self) -> np.ndarray:
        return self._full("eta_isqrt")

    @property
    def h(self) -> np.ndarray:
        return self._full("h")

    @property
    def C(self) -> np.ndarray:
        return self._full("C")

    def sector(self, sz) -> SectorMetric:
        n = Fraction(sz) + Fraction(self.sites, 2)
        if n.denominator != 1 or not 0 <= n <= self.sites:
            raise PreconditionError(f"no sector S^z={sz} for M={self.sites}")
        return self.sectors[int(n)]

    def operator(self, name: str, sz=None) -> DenseOperator:
        """Wrap one of eta, eta_inv, eta_sqrt, eta_isqrt, h, C with its basis tag."""
        from .chain import FullSpinBasis
        if sz is None:
            return DenseOperator(self._full(name), FullSpinBasis(self.sites))
        return DenseOperator(getattr(self.sector(sz), name), SectorBasis(self.sites, Fraction(sz)))


def _mirror_within(states: np.ndarray, sites: int) -> np.ndarray:
    """Permutation matrix of P restricted to a sector (P maps sector to itself)."""
    bits = _bits(sites, states)
    mirrored = (bits * (1 << np.arange(sites))).sum(axis=1)
    lookup = {s: i for i, s in enumerate(states)}
    P = np.zeros((len(states), len(states)))
    for i, m in enumerate(mirrored):
        P[lookup[int(m)], i] = 1.0
    return P


def _hermitian_power_pair(eta: np.ndarray):
    w, U = np.linalg.eigh(eta)
    root = np.sqrt(np.clip(w, 0, None))
    sq = (U * root) @ U.conj().T
    isq = (U / root) @ U.conj().T if w.min() > 0 else None
    return w, sq, isq


def build_metric(wfs: WaveFunctionSet, spec: HamiltonianSpec | None = None,
                 check_tol: float = 1e-8) -> MetricBundle:
    """eta, its inverse, square roots, C = P eta and h, one S^z sector at a time."""
    if spec is None:
        spec = HamiltonianSpec(wfs.sites, wfs.alpha, wfs.beta)
    if wfs.zero_norm.any():
        j = int(np.nonzero(wfs.zero_norm)[0][0])
        raise JordanBlockSuspected(
            f"mode {j + 1} has vanishing bilinear norm ({abs(wfs.raw_norms[j]):.2e}); "
            "the chain sits at an exceptional point", eigenvalue=0.0)
    M = wfs.sites
    psi = wfs.psi
    sectors, log = [], []
    margin = np.inf
    for n in range(M + 1):
        states = sector_states(M, n)
        bits = _bits(M, states)
        positions = np.array([np.nonzero(b)[0] for b in bits]) if n else np.zeros((len(states), 0), int)
        subsets = list(itertools.combinations(range(M), n))
        signs = fock_signs(M, states)
        phi_c = signs[:, None] * _minors(psi, positions, subsets)
        phi_d = phi_c.conj()
        eta = phi_d @ phi_d.conj().T
        eta_inv = phi_c @ phi_c.conj().T
        inv_res = np.abs(eta @ eta_inv - np.eye(len(states))).max()
        log.append(f"n={n}: |eta eta^-1 - 1| = {inv_res:.2e}")
        if inv_res > check_tol * max(1.0, np.abs(eta).max() * np.abs(eta_inv).max()):
            raise ConstructionError(f"eta eta^-1 != 1 in sector n={n} ({inv_res:.2e})", inv_res)
        eta = (eta + eta.conj().T) / 2
        w, sq, isq = _hermitian_power_pair(eta)
        margin = min(margin, float(w.min()))
        if w.min() <= POSITIVITY_TOL:
            raise JordanBlockSuspected(
                f"eta not positive in sector n={n}: smallest eigenvalue {w.min():.3e}",
                eigenvalue=float(w.min()))
        H = hamiltonian_on_states(spec, states)
        h = sq @ H @ isq
        C = _mirror_within(states, M) @ eta
        sectors.append(SectorMetric(n, states, subsets, phi_c, eta, eta_inv, sq, isq, H, h, C,
                                    float(w.min())))
    log.append(f"positivity margin {margin:.3e}")
    return MetricBundle(spec, wfs, sectors, margin, log)


def metric_for(spec: HamiltonianSpec, force: bool = False) -> MetricBundle:
    """Bethe roots -> wave functions -> metric in one call."""
    wfs = build_wavefunctions(spec, force=force)
    return build_metric(wfs, spec)


# ---------------------------------------------------------------------------
# checks on the bundle


def mode_parities(wfs: WaveFunctionSet) -> np.ndarray:
    """r_j with conj(psi_j(M+1-x)) = r_j psi_j(x); real signs for PT modes."""
    mirrored = wfs.psi[::-1].conj()
    return np.sum(mirrored * wfs.psi, axis=0)


def c_operator_weights(wfs: WaveFunctionSet) -> dict:
    """Eigenvalue of C on each quasi-particle state c*_S|0>, S as a tuple.

    Mode j (counted from 1 in order of increasing momentum) has mirror
    parity (-1)^{j+1}, and P c*_x|0> = (-1)^{M-1} c*_{M+1-x}|0>.  Reversing
    the order of n creation operators adds (-1)^{n(n-1)/2}, so

        w_S = (-1)^{n(n-1)/2} prod_{j in S} (-1)^{M+j}.
    """
    M = wfs.sites
    weights = {}
    for n in range(M + 1):
        reorder = (-1) ** (n * (n - 1) // 2)
        for S in itertools.combinations(range(M), n):
            weights[S] = float(reorder * np.prod([(-1) ** (M + j + 1) for j in S]))
    return weights


def build_c_operator(bundle: MetricBundle, tol: float = 1e-9) -> DenseOperator:
    """C = P eta, checked against its quasi-particle closed form."""
    from .chain import FullSpinBasis
    weights = c_operator_weights(bundle.wavefunctions)
    worst = 0.0
    for sec in bundle.sectors:
        w = np.array([weights[S] for S in sec.subsets])
        closed = (sec.phi_c * w) @ sec.phi_c.T  # Phi_c diag(w) Phi_d^dagger, Phi_d^dagger = Phi_c^T
        worst = max(worst, float(np.abs(closed - sec.C).max()))
    bundle.log.append(f"C closed form residual {worst:.2e}")
    if worst > tol:
        raise ConstructionError(f"C = P eta differs from the closed form by {worst:.3e}", worst)
    return DenseOperator(bundle.C, FullSpinBasis(bundle.sites))


def diagonal_form_residual(spec: HamiltonianSpec, basis: QuasiFermionBasis) -> float:
    """|| H - (E_vac - sum_j eps_j c*_j d_j) || entrywise."""
    H = build_hamiltonian(spec)
    M = spec.sites
    recon = -(spec.alpha + spec.beta) / 2 * np.eye(2 ** M, dtype=complex)
    for eps, cs, d in zip(basis.wavefunctions.energies, basis.creators, basis.annihilators):
        recon = recon - eps * (cs @ d)
    return float(np.abs(recon - H).max())


def metric_residuals(bundle: MetricBundle) -> dict:
    """The defining identities of the bundle, as max-abs residuals."""
    spec = bundle.spec
    M = spec.sites
    H = build_hamiltonian(spec)
    eta, eta_inv, h, C = bundle.eta, bundle.eta_inv, bundle.h, bundle.C
    P, _, Sz = symmetry_ops(M)
    eye = np.eye(2 ** M)
    scale = max(1.0, np.abs(eta).max() * np.abs(H).max())
    return {
        "hermitian": float(np.abs(eta - eta.conj().T).max()),
        "intertwiner": float(np.abs(eta @ H - H.conj().T @ eta).max() / scale),
        "inverse": float(np.abs(eta @ eta_inv - eye).max()),
        "sz": float(np.abs(eta @ Sz - Sz @ eta).max()),
        "P_eta_P": float(np.abs(P @ eta @ P - eta_inv).max()),
        "conj_eta": float(np.abs(eta.conj() - eta_inv).max()),
        "C_squared": float(np.abs(C @ C - eye).max()),
        "C_commutes": float(np.abs(C @ H - H @ C).max()),
        "h_hermitian": float(np.abs(h - h.conj().T).max()),
        "h_parity": float(np.abs(P @ h @ P - h).max()),
    }
