"""Spin-chain state space, Pauli/fermion operators and Hamiltonian variants.

Basis convention
----------------
A basis state is a tuple of spins (eps_1, ..., eps_M).  Its index is the
binary number b_1 b_2 ... b_M with b_m = 1 for spin up (eps_m = +1) and
b_m = 0 for spin down, site 1 being the most significant bit.  So the
ordering is lexicographic with spin down *before* spin up, index 0 is the
all-down state and that state is the fermion vacuum (n_x = (1 + sigma^z_x)/2).

With this ordering the exact small-chain matrices of the metric operator come
out entry for entry; the opposite ordering produces their complex conjugates.

Matrices are plain ``numpy.ndarray`` objects.  :class:`DenseOperator` wraps a
matrix together with a basis tag when bookkeeping matters (sector blocks,
JSON output).
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from .errors import PreconditionError, ResourceLimitError

VARIANTS = ("H", "Hprime", "Hg", "HgTruncated", "Periodic")
DEFAULT_MAX_DIM = 4096  # full space at M=12 is 4096 x 4096 complex, ~270 MB


def max_dim() -> int:
    """Dimension cap for dense matrices; override with XXCHAIN_MAX_DIM."""
    raw = os.environ.get("XXCHAIN_MAX_DIM")
    if raw is None:
        return DEFAULT_MAX_DIM
    try:
        value = int(raw)
    except ValueError as exc:
        raise PreconditionError(f"XXCHAIN_MAX_DIM must be an integer, got {raw!r}") from exc
    if value < 1:
        raise PreconditionError("XXCHAIN_MAX_DIM must be positive")
    return value


def check_dim(dim: int, what: str = "operator") -> None:
    cap = max_dim()
    if dim > cap:
        raise ResourceLimitError(
            f"{what} of dimension {dim} exceeds the cap {cap} (set XXCHAIN_MAX_DIM to raise it)"
        )


def unit_phase(theta: float) -> complex:
    """e^{i theta}, exact when theta is a multiple of pi/2 up to rounding."""
    quarter = theta / (np.pi / 2)
    nearest = round(quarter)
    if abs(quarter - nearest) < 1e-12:
        return (1, 1j, -1, -1j)[nearest % 4]
    return complex(np.cos(theta), np.sin(theta))


# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class HamiltonianSpec:
    """Chain length, boundary fields and variant.

    ``alpha`` couples to sigma^z_1 and ``beta`` to sigma^z_M.  The polar form
    ``alpha = conj(beta) = g e^{i theta}`` is the PT-symmetric family; theta =
    pi/2 gives the purely imaginary fields of ``Hg``.
    """

    sites: int
    alpha: complex = 0j
    beta: complex = 0j
    variant: str = "H"
    g: float | None = None
    theta: float | None = None

    def __post_init__(self):
        if int(self.sites) != self.sites or self.sites < 2:
            raise PreconditionError(f"need an integer number of sites >= 2, got {self.sites}")
        if self.variant not in VARIANTS:
            raise PreconditionError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        object.__setattr__(self, "sites", int(self.sites))
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))
        if self.variant in ("Hg", "HgTruncated"):
            if abs(self.alpha + self.beta) > 1e-14 or abs(self.alpha.real) > 1e-14:
                raise PreconditionError(
                    f"variant {self.variant} needs alpha = -beta purely imaginary, got "
                    f"alpha={self.alpha}, beta={self.beta}"
                )

    @classmethod
    def polar(cls, sites: int, g: float, theta: float = np.pi / 2, variant: str = "H"):
        if g < 0:
            raise PreconditionError(f"g must be non-negative, got {g}")
        alpha = g * unit_phase(theta)
        return cls(sites, alpha, alpha.conjugate(), variant, g=float(g), theta=float(theta))

    @classmethod
    def hg(cls, sites: int, g: float, variant: str = "Hg"):
        """Purely imaginary boundary fields alpha = -beta = i g."""
        return cls.polar(sites, g, np.pi / 2, variant)

    @property
    def is_pt(self) -> bool:
        return abs(self.alpha - self.beta.conjugate()) < 1e-14

    def require_pt(self) -> None:
        if not self.is_pt:
            raise PreconditionError(
                f"operation needs alpha = conj(beta), got alpha={self.alpha}, beta={self.beta}"
            )

    @property
    def coupling(self) -> float:
        """|alpha|, i.e. g in the polar form."""
        return self.g if self.g is not None else abs(self.alpha)

    @property
    def angle(self) -> float:
        if self.theta is not None:
            return self.theta
        return float(np.angle(self.alpha)) % (2 * np.pi)

    def replace(self, **changes) -> "HamiltonianSpec":
        """Copy with changes; touching alpha/beta drops the polar labels."""
        if ("alpha" in changes or "beta" in changes) and "g" not in changes:
            changes.update(g=None, theta=None)
        return dataclasses.replace(self, **changes)

    @property
    def dim(self) -> int:
        return 2 ** self.sites


# ---------------------------------------------------------------------------
# basis bookkeeping


@dataclass(frozen=True)
class FullSpinBasis:
    sites: int

    @property
    def dimension(self) -> int:
        return 2 ** self.sites

    @property
    def label(self) -> str:
        return f"full(M={self.sites})"


@dataclass(frozen=True)
class SectorBasis:
    sites: int
    sz: Fraction

    @property
    def particles(self) -> int:
        return int(self.sz + Fraction(self.sites, 2))

    @property
    def dimension(self) -> int:
        return comb(self.sites, self.particles)

    @property
    def label(self) -> str:
        return f"sector(M={self.sites},Sz={self.sz})"


@dataclass(frozen=True)
class CustomBasis:
    label: str
    dimension: int


@dataclass
class DenseOperator:
    """A complex matrix plus the basis it is written in."""

    entries: np.ndarray
    basis: FullSpinBasis | SectorBasis | CustomBasis = field(default=None)

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        n, m = self.entries.shape
        if n != m:
            raise PreconditionError(f"operator must be square, got {self.entries.shape}")
        if self.basis is None:
            self.basis = CustomBasis("unlabelled", n)
        if self.basis.dimension != n:
            raise PreconditionError(
                f"basis {self.basis.label} has dimension {self.basis.dimension}, matrix has {n}"
            )

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    def to_json(self) -> dict:
        return {
            "dim": self.dimension,
            "basis": self.basis.label,
            "re": self.entries.real.tolist(),
            "im": self.entries.imag.tolist(),
        }


def _bits(sites: int, states: np.ndarray) -> np.ndarray:
    """Occupation bits, shape (len(states), sites); column m-1 is site m."""
    shifts = sites - 1 - np.arange(sites)
    return (states[:, None] >> shifts) & 1


def sector_states(sites: int, particles: int) -> np.ndarray:
    """Indices of basis states with the given number of up spins, ascending."""
    if not 0 <= particles <= sites:
        raise PreconditionError(f"particle number {particles} outside 0..{sites}")
    idx = np.arange(2 ** sites)
    counts = _bits(sites, idx).sum(axis=1)
    return idx[counts == particles]


def particles_for_sz(sites: int, sz) -> int:
    n = Fraction(sz) + Fraction(sites, 2)
    if n.denominator != 1 or not 0 <= n <= sites:
        raise PreconditionError(f"S^z={sz} is not a valid sector for M={sites}")
    return int(n)


def sector_permutation(sites: int) -> np.ndarray:
    """Full-space indices grouped by S^z (ascending), each group ascending."""
    return np.concatenate([sector_states(sites, n) for n in range(sites + 1)])


def fock_signs(sites: int, states: np.ndarray) -> np.ndarray:
    """Sign s_X with c*_{x1} ... c*_{xn}|0> = s_X |X>, x1 < ... < xn.

    The string of c*_x counts down spins to the left of x, which are all the
    sites y < x when the operators act in this order, so s_X = (-1)^{sum(x-1)}.
    """
    bits = _bits(sites, np.asarray(states))
    positions = np.arange(sites)  # x - 1
    return (-1.0) ** ((bits * positions).sum(axis=1) % 2)


# ---------------------------------------------------------------------------
# operators


def _hop_matrix(sites: int, states: np.ndarray, pairs, values, lookup=None) -> np.ndarray:
    """Matrix of sum_pairs v * (s^+_x s^-_y + s^-_x s^+_y) restricted to ``states``."""
    n = len(states)
    out = np.zeros((n, n), dtype=complex)
    if lookup is None:
        lookup = np.full(2 ** sites, -1, dtype=np.int64)
        lookup[states] = np.arange(n)
    bits = _bits(sites, states)
    for (x, y), v in zip(pairs, values):
        flip = bits[:, x - 1] != bits[:, y - 1]
        src = np.nonzero(flip)[0]
        mask = (1 << (sites - x)) | (1 << (sites - y))
        dst = lookup[states[src] ^ mask]
        out[dst, src] += v
    return out


def _sz_columns(sites: int, states: np.ndarray) -> np.ndarray:
    return 2.0 * _bits(sites, states) - 1.0


def hamiltonian_on_states(spec: HamiltonianSpec, states: np.ndarray) -> np.ndarray:
    """The Hamiltonian restricted to a set of basis states closed under hopping."""
    M = spec.sites
    states = np.asarray(states, dtype=np.int64)
    if spec.variant == "Periodic":
        full = one_body_operator(M, one_body_matrix(spec)[0])
        return full[np.ix_(states, states)]
    bonds = M - 2 if spec.variant == "HgTruncated" else M - 1
    pairs = [(x, x + 1) for x in range(1, bonds + 1)]
    out = _hop_matrix(M, states, pairs, [1.0] * len(pairs))
    sz = _sz_columns(M, states)
    a, b = spec.alpha, spec.beta
    if spec.variant == "HgTruncated":
        diag = (a * sz[:, 0] + b * sz[:, M - 2]) / 2
    else:
        diag = (a * sz[:, 0] + b * sz[:, M - 1]) / 2
        if spec.variant == "Hprime":
            diag = diag - (a + b) / 2 * sz.sum(axis=1)
    out[np.diag_indices_from(out)] += diag
    return out


def build_hamiltonian(spec: HamiltonianSpec) -> np.ndarray:
    """Dense 2^M x 2^M Hamiltonian in the spin basis."""
    check_dim(spec.dim, "Hamiltonian")
    return hamiltonian_on_states(spec, np.arange(spec.dim))


def sector_hamiltonian(spec: HamiltonianSpec, sz) -> DenseOperator:
    """Hamiltonian block of one S^z sector, built without the full matrix."""
    n = particles_for_sz(spec.sites, sz)
    states = sector_states(spec.sites, n)
    check_dim(len(states), "sector Hamiltonian")
    basis = SectorBasis(spec.sites, Fraction(sz))
    return DenseOperator(hamiltonian_on_states(spec, states), basis)


def one_body_matrix(spec: HamiltonianSpec) -> tuple[np.ndarray, complex]:
    """(K, c) with H = sum_xy K_xy c*_x c_y + c."""
    M = spec.sites
    K = np.zeros((M, M), dtype=complex)
    a, b = spec.alpha, spec.beta
    bonds = M - 2 if spec.variant == "HgTruncated" else M - 1
    for x in range(bonds):
        K[x, x + 1] = K[x + 1, x] = -1.0
    if spec.variant == "Periodic":
        K[M - 1, 0] = K[0, M - 1] = -1.0
        return K, 0j
    if spec.variant == "HgTruncated":
        # ig(n_1 - n_{M-1}); the constant -(a+b)/2 vanishes since b = -a
        K[0, 0] += a
        K[M - 2, M - 2] += b
        return K, 0j
    K[0, 0] += a
    K[M - 1, M - 1] += b
    const = -(a + b) / 2
    if spec.variant == "Hprime":
        K -= (a + b) * np.eye(M)
        const += (a + b) * M / 2
    return K, const


def one_body_operator(sites: int, K: np.ndarray, states: np.ndarray | None = None) -> np.ndarray:
    """Full-space (or state-restricted) matrix of sum_xy K_xy c*_x c_y.

    Built directly from the Jordan-Wigner signs: the string of c_x counts the
    *down* spins to the left of x, because sigma^z = +1 on occupied sites.
    """
    if states is None:
        check_dim(2 ** sites, "one-body operator")
        states = np.arange(2 ** sites)
    states = np.asarray(states, dtype=np.int64)
    K = np.asarray(K)
    n = len(states)
    out = np.zeros((n, n), dtype=complex)
    lookup = np.full(2 ** sites, -1, dtype=np.int64)
    lookup[states] = np.arange(n)
    bits = _bits(sites, states)
    empty_before = np.cumsum(1 - bits, axis=1) - (1 - bits)  # downs strictly left of x
    for x in range(sites):
        occ = bits[:, x] == 1
        out[np.nonzero(occ)[0], np.nonzero(occ)[0]] += K[x, x]
    for x in range(sites):
        for y in range(sites):
            if x == y or K[x, y] == 0:
                continue
            ok = (bits[:, y] == 1) & (bits[:, x] == 0)
            src = np.nonzero(ok)[0]
            # c_y first: downs left of y in the original state
            s1 = empty_before[src, y]
            # after removing y, the down count left of x grows by one if y < x
            s2 = empty_before[src, x] + (1 if y < x else 0)
            sign = (-1.0) ** ((s1 + s2) % 2)
            dst = lookup[states[src] ^ (1 << (sites - 1 - y)) ^ (1 << (sites - 1 - x))]
            out[dst, src] += K[x, y] * sign
    return out


def jordan_wigner_ops(sites: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """[(c_x, c*_x) for x = 1..M] with c_x = prod_{y<x} sigma^z_y sigma^-_x."""
    check_dim(2 ** sites, "fermion operator")
    idx = np.arange(2 ** sites)
    bits = _bits(sites, idx)
    ops = []
    for x in range(sites):
        string = np.prod(2.0 * bits[:, :x] - 1.0, axis=1) if x else np.ones(len(idx))
        c = np.zeros((len(idx), len(idx)))
        src = idx[bits[:, x] == 1]
        c[src ^ (1 << (sites - 1 - x)), src] = string[src]
        ops.append((c, c.T.copy()))
    return ops


def pauli(sites: int, site: int, which: str) -> np.ndarray:
    """Single-site Pauli matrix (x, y, z, +, -) embedded in the full space."""
    local = {
        "x": np.array([[0, 1], [1, 0]], dtype=complex),
        "y": np.array([[0, 1j], [-1j, 0]], dtype=complex),
        "z": np.array([[-1, 0], [0, 1]], dtype=complex),
        "+": np.array([[0, 0], [1, 0]], dtype=complex),
        "-": np.array([[0, 1], [0, 0]], dtype=complex),
    }[which]
    # local basis is (down, up); sigma^y v_+ = i v_-, sigma^+ v_- = v_+
    check_dim(2 ** sites, "Pauli operator")
    left = np.eye(2 ** (site - 1))
    right = np.eye(2 ** (sites - site))
    return np.kron(np.kron(left, local), right)


def number_operator(sites: int, site: int) -> np.ndarray:
    idx = np.arange(2 ** sites)
    return np.diag(_bits(sites, idx)[:, site - 1].astype(complex))


def symmetry_ops(sites: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(P, R, S^z): site mirror, global spin flip and total S^z."""
    dim = 2 ** sites
    check_dim(dim, "symmetry operator")
    idx = np.arange(dim)
    bits = _bits(sites, idx)
    weights = 1 << np.arange(sites)  # reversed bit significance
    mirrored = (bits * weights).sum(axis=1)
    P = np.zeros((dim, dim))
    P[mirrored, idx] = 1.0
    R = np.zeros((dim, dim))
    R[dim - 1 - idx, idx] = 1.0
    Sz = np.diag(bits.sum(axis=1) - sites / 2).astype(float)
    return P, R, Sz


def time_reverse(v: np.ndarray) -> np.ndarray:
    """Antilinear T: complex conjugation of amplitudes in the spin basis."""
    return np.conj(v)


def conjugate_operator(op: np.ndarray) -> np.ndarray:
    """T op T, i.e. entrywise conjugation (not the adjoint)."""
    return np.conj(op)


def sector_decompose(op: np.ndarray, sites: int, tol: float = 1e-10) -> list[DenseOperator]:
    """Split an S^z-conserving operator into blocks, S^z ascending."""
    op = np.asarray(op)
    dim = 2 ** sites
    if op.shape != (dim, dim):
        raise PreconditionError(f"operator shape {op.shape} does not match M={sites}")
    sz = _sz_diag(sites)
    comm = op * (sz[None, :] - sz[:, None])  # [S^z, op] entrywise
    norm = np.linalg.norm(op)
    cnorm = np.linalg.norm(comm)
    if cnorm > tol * max(norm, 1.0):
        raise PreconditionError(f"operator does not commute with S^z (commutator norm {cnorm:.3e})")
    blocks = []
    for n in range(sites + 1):
        states = sector_states(sites, n)
        basis = SectorBasis(sites, Fraction(2 * n - sites, 2))
        blocks.append(DenseOperator(op[np.ix_(states, states)], basis))
    return blocks


def _sz_diag(sites: int) -> np.ndarray:
    idx = np.arange(2 ** sites)
    return _bits(sites, idx).sum(axis=1) - sites / 2


def assemble_sectors(blocks: list, sites: int) -> np.ndarray:
    """Inverse of :func:`sector_decompose`."""
    dim = 2 ** sites
    out = np.zeros((dim, dim), dtype=complex)
    for n, block in enumerate(blocks):
        entries = block.entries if isinstance(block, DenseOperator) else np.asarray(block)
        states = sector_states(sites, n)
        out[np.ix_(states, states)] = entries
    return out


def block_diagonal_form(op: np.ndarray, sites: int) -> np.ndarray:
    """op conjugated by the sector permutation (S^z blocks along the diagonal)."""
    perm = sector_permutation(sites)
    return np.asarray(op)[np.ix_(perm, perm)]


def one_particle_block(op: np.ndarray, sites: int) -> tuple[np.ndarray, complex]:
    """(K, c) such that op restricted to <= 1 particle equals dGamma(K) + c.

    Only meaningful when op is a bilinear plus a constant; the caller checks
    that by rebuilding the operator if needed.
    """
    idx = [1 << (sites - x) for x in range(1, sites + 1)]
    signs = np.array([(-1.0) ** (x - 1) for x in range(1, sites + 1)])
    c = op[0, 0]
    K = signs[:, None] * op[np.ix_(idx, idx)] * signs[None, :] - c * np.eye(sites)
    return K, c
