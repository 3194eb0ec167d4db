"""Planar Temperley-Lieb diagrams, the q -> i dual canonical basis and Gram matrices.

A diagram on M strands has 2M boundary points: top points 0..M-1 and bottom
points M..2M-1 (bottom point M+k sits under top point k).  The pairing is a
fixed-point-free involution on these labels.  The product a*b stacks a on top
of b (b acts first on vectors); closed loops created in the middle are counted
and removed.

Basis elements for the sector with m down spins are indexed by Young
subdiagrams of the m x (M-m) rectangle, given as row lengths r_1 >= r_2 >= ...
Row k of the tableau holds the consecutive entries m-k+1, ..., m-k+r_k and
contributes e_{m-k+r_k} ... e_{m-k+1}; later rows multiply on the left.  The
vector is the word applied to Omega_m = (down)^m (up)^(M-m) with the e_x of
the g = 1 representation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .algebra import tl_generators
from .chain import HamiltonianSpec, build_hamiltonian, symmetry_ops
from .errors import ConstructionError, PreconditionError

ZERO_TOL = 1e-9
CONFIRM_TOL = 1e-6


# ---------------------------------------------------------------------------
# diagrams


def _boundary_position(label: int, strands: int) -> int:
    """Position on the disc boundary: top left-to-right, then bottom right-to-left."""
    return label if label < strands else 2 * strands - 1 - (label - strands)


def _non_crossing(pairing: tuple, strands: int) -> bool:
    stack = []
    order = sorted(range(2 * strands), key=lambda p: _boundary_position(p, strands))
    for p in order:
        partner = pairing[p]
        if _boundary_position(partner, strands) > _boundary_position(p, strands):
            stack.append(p)
        elif not stack or stack.pop() != partner:
            return False
    return not stack


@dataclass(frozen=True)
class PlanarDiagram:
    strands: int
    pairing: tuple
    loops: int = 0

    def __post_init__(self):
        n = 2 * self.strands
        if len(self.pairing) != n:
            raise PreconditionError(f"pairing needs {n} entries, got {len(self.pairing)}")
        for a, b in enumerate(self.pairing):
            if a == b or self.pairing[b] != a:
                raise PreconditionError("pairing must be a fixed-point-free involution")
        if not _non_crossing(self.pairing, self.strands):
            raise PreconditionError("pairing is not planar")
        if self.loops < 0:
            raise PreconditionError("loop count must be non-negative")

    @classmethod
    def identity(cls, strands: int) -> "PlanarDiagram":
        pairing = [0] * (2 * strands)
        for k in range(strands):
            pairing[k], pairing[strands + k] = strands + k, k
        return cls(strands, tuple(pairing))

    @classmethod
    def generator(cls, strands: int, i: int) -> "PlanarDiagram":
        """e_i, 1 <= i < strands: cap on top points i, i+1 and cup on the bottom ones."""
        if not 1 <= i < strands:
            raise PreconditionError(f"e_{i} does not exist on {strands} strands")
        pairing = list(cls.identity(strands).pairing)
        a, b = i - 1, i
        pairing[a], pairing[b] = b, a
        pairing[strands + a], pairing[strands + b] = strands + b, strands + a
        return cls(strands, tuple(pairing))

    @classmethod
    def from_word(cls, strands: int, word) -> "PlanarDiagram":
        out = cls.identity(strands)
        for i in word:
            out = compose(out, cls.generator(strands, i))
        return out

    def weight(self, delta: complex) -> complex:
        """Scalar picked up from closed loops, each worth delta."""
        return delta ** self.loops

    def embed(self, strands: int) -> "PlanarDiagram":
        """Add through lines on the right up to `strands` strands."""
        if strands < self.strands:
            raise PreconditionError("cannot embed into fewer strands")
        M, N = self.strands, strands
        pairing = [0] * (2 * N)

        def lift(p):
            return p if p < M else N + (p - M)

        for a, b in enumerate(self.pairing):
            pairing[lift(a)] = lift(b)
        for k in range(M, N):
            pairing[k], pairing[N + k] = N + k, k
        return PlanarDiagram(N, tuple(pairing), self.loops)

    def shape(self) -> "PlanarDiagram":
        """Same pairing, loop count dropped."""
        return PlanarDiagram(self.strands, self.pairing)

    def render(self) -> str:
        """One-line text form: top cups, bottom caps and through lines (1-based)."""
        M = self.strands
        top, bottom, through = [], [], []
        for a, b in enumerate(self.pairing):
            if a > b:
                continue
            if b < M:
                top.append(f"{a + 1}-{b + 1}")
            elif a >= M:
                bottom.append(f"{a - M + 1}-{b - M + 1}")
            else:
                through.append(f"{a + 1}|{b - M + 1}")
        return (f"top[{' '.join(top)}] bottom[{' '.join(bottom)}] "
                f"through[{' '.join(through)}] loops={self.loops}")


def compose(d1: PlanarDiagram, d2: PlanarDiagram) -> PlanarDiagram:
    """d1 * d2: d1 stacked on top of d2, closed loops counted."""
    if d1.strands != d2.strands:
        raise PreconditionError(f"strand mismatch: {d1.strands} vs {d2.strands}")
    M = d1.strands
    # d1 labels 0..2M-1, d2 labels 2M..4M-1; d1 bottom M+k is glued to d2 top 2M+k
    def partner(p):
        return d1.pairing[p] if p < 2 * M else 2 * M + d2.pairing[p - 2 * M]

    def glue(p):
        if M <= p < 2 * M:
            return 2 * M + (p - M)
        if 2 * M <= p < 3 * M:
            return M + (p - 2 * M)
        return None

    def outer(p):
        """Map outer labels to the result: d1 top stays, d2 bottom shifts down."""
        return p if p < M else p - 2 * M

    pairing = [None] * (2 * M)
    seen = set()
    for start in list(range(M)) + list(range(3 * M, 4 * M)):
        if start in seen:
            continue
        p = start
        seen.add(p)
        while True:
            q = partner(p)
            seen.add(q)
            nxt = glue(q)
            if nxt is None:
                break
            seen.add(nxt)
            p = nxt
        a, b = outer(start), outer(q)
        pairing[a], pairing[b] = b, a
    loops = 0
    for start in range(M, 2 * M):
        if start in seen:
            continue
        loops += 1
        p = start
        while p not in seen:
            seen.add(p)
            q = partner(p)
            seen.add(q)
            p = glue(q)
    return PlanarDiagram(M, tuple(pairing), d1.loops + d2.loops + loops)


def trace_closure(d: PlanarDiagram) -> int:
    """Loops after joining top k to bottom k around the diagram, plus internal loops."""
    M = d.strands
    seen = set()
    loops = 0
    for start in range(2 * M):
        if start in seen:
            continue
        loops += 1
        p = start
        while p not in seen:
            seen.add(p)
            q = d.pairing[p]
            seen.add(q)
            p = q - M if q >= M else q + M
    return loops + d.loops


def markov_closure(d: PlanarDiagram) -> int:
    """Loops of the closure of (d on M+1 strands) * e_M; equals trace_closure(d)."""
    M = d.strands
    return trace_closure(compose(d.embed(M + 1), PlanarDiagram.generator(M + 1, M)))


# ---------------------------------------------------------------------------
# dual canonical basis


@dataclass
class CanonicalBasisElement:
    rows: tuple  # Young subdiagram row lengths, r_1 >= r_2 >= ...
    word: tuple  # generator indices, leftmost acts last
    diagram: PlanarDiagram
    vector: np.ndarray

    @property
    def label(self) -> str:
        return "1" if not self.word else "".join(f"e{i}" for i in self.word)


def subdiagrams(rows: int, cols: int) -> list:
    """All partitions fitting in a rows x cols box, as length-`rows` tuples."""
    out = []

    def rec(prefix, bound):
        if len(prefix) == rows:
            out.append(tuple(prefix))
            return
        for r in range(bound, -1, -1):
            rec(prefix + [r], r)

    rec([], cols)
    return out


def tableau_word(rows: tuple, m: int) -> tuple:
    word = []
    for k, r in enumerate(rows, start=1):
        start = m - k + 1
        row_word = tuple(range(start + r - 1, start - 1, -1))
        word = list(row_word) + word
    return tuple(word)


def omega(sites: int, m: int) -> np.ndarray:
    """(down)^m (up)^(M-m) as a unit vector in the spin basis."""
    index = (1 << (sites - m)) - 1  # last M-m sites up
    v = np.zeros(2 ** sites, dtype=complex)
    v[index] = 1.0
    return v


def _word_matrix_apply(e: list, word: tuple, v: np.ndarray) -> np.ndarray:
    for i in reversed(word):
        v = e[i - 1] @ v
    return v


def _default_key(rows: tuple) -> tuple:
    return (sum(rows), tuple(-r for r in rows))


def generate_basis(sites: int, m: int, order: list | None = None) -> list:
    """Dual canonical basis of the sector with m down spins (S^z = M/2 - m).

    ``order`` optionally lists the words (as tuples of generator indices) in
    the desired order; otherwise elements are sorted by size then by rows.
    """
    if sites % 2 == 0:
        raise PreconditionError("the dual canonical basis construction here needs odd M")
    if not 0 <= m <= sites:
        raise PreconditionError(f"m must be in 0..{sites}, got {m}")
    e = tl_generators(sites, 1.0)
    base = omega(sites, m)
    shapes = sorted(subdiagrams(m, sites - m), key=_default_key)
    elements = []
    for rows in shapes:
        word = tableau_word(rows, m)
        vec = _word_matrix_apply(e, word, base)
        elements.append(CanonicalBasisElement(rows, word, PlanarDiagram.from_word(sites, word), vec))
    if len(elements) != comb(sites, m):
        raise ConstructionError(f"{len(elements)} tableaux for a sector of dimension {comb(sites, m)}")
    if order is not None:
        by_word = {el.word: el for el in elements}
        wanted = [tuple(w) for w in order]
        if sorted(wanted) != sorted(by_word):
            raise ConstructionError("requested word order does not match the generated words")
        elements = [by_word[w] for w in wanted]
    return elements


def parse_word(text: str) -> tuple:
    """'e2e1e3e2' -> (2, 1, 3, 2); '1' -> ()."""
    text = text.strip()
    if text in ("", "1"):
        return ()
    parts = text.split("e")[1:]
    return tuple(int(p) for p in parts)


def word_matrix(sites: int, word: tuple, g: float = 1.0) -> np.ndarray:
    e = tl_generators(sites, g)
    out = np.eye(2 ** sites, dtype=complex)
    for i in word:
        out = out @ e[i - 1]
    return out


def diagram_consistency(sites: int, words: list, delta: complex = 0.0) -> float:
    """Worst mismatch between word matrices that share a diagram shape.

    Each matrix is divided by its loop weight delta**loops; at the g = 1 point
    delta = 0, so any word whose diagram closes a loop must map to zero.
    """
    groups: dict = {}
    worst = 0.0
    for w in words:
        d = PlanarDiagram.from_word(sites, w)
        mat = word_matrix(sites, w)
        if d.loops and delta == 0:
            worst = max(worst, float(np.abs(mat).max()))
            continue
        mat = mat / d.weight(delta)
        ref = groups.setdefault(d.shape(), mat)
        worst = max(worst, float(np.abs(mat - ref).max()))
    return worst


# ---------------------------------------------------------------------------
# Gram matrix


@dataclass
class GramMatrix:
    sites: int
    m: int
    basis: list
    G: np.ndarray
    H: np.ndarray  # integer matrix with H t_i = sum_j t_j H_ji
    PT: np.ndarray  # PT t_i = sum_j t_j PT_ji
    residuals: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "M": self.sites,
            "m": self.m,
            "words": [el.label for el in self.basis],
            "G": self.G.real.tolist(),
            "H": self.H.astype(int).tolist(),
            "residuals": self.residuals,
        }


def _coordinates(T: np.ndarray, X: np.ndarray) -> tuple[np.ndarray, float]:
    """C with T C = X on the sector, plus the fit residual."""
    C, *_ = np.linalg.lstsq(T, X, rcond=None)
    return C, float(np.abs(T @ C - X).max(initial=0.0))


def gram_matrix(sites: int, m: int, metric=None, order: list | None = None,
                integer_tol: float = 1e-9) -> GramMatrix:
    """G_ij = <t_i, eta t_j> at g = 1, theta = pi/2, with the integer matrix of H."""
    from .metric import metric_for

    spec = HamiltonianSpec.hg(sites, 1.0)
    if metric is None:
        metric = metric_for(spec)
    eta = metric.eta if hasattr(metric, "eta") else np.asarray(metric)
    basis = generate_basis(sites, m, order)
    T = np.column_stack([el.vector for el in basis])
    G = T.conj().T @ eta @ T
    H = build_hamiltonian(spec)
    Hc, fit = _coordinates(T, H @ T)
    Hint = np.rint(Hc.real)
    if np.abs(Hc - Hint).max(initial=0.0) > integer_tol or fit > integer_tol:
        raise ConstructionError(
            f"H is not integral on the basis (deviation {np.abs(Hc - Hint).max():.2e}, fit {fit:.2e}); "
            "check the word order", residual=float(np.abs(Hc - Hint).max()))
    P = symmetry_ops(sites)[0]
    Mpt, fit_pt = _coordinates(T, P @ T.conj())
    residuals = {
        "G symmetric real": float(max(np.abs(G - G.T).max(), np.abs(G.imag).max())),
        "det G - 1": float(abs(np.linalg.det(G) - 1)),
        "min eig G": float(np.linalg.eigvalsh((G + G.conj().T) / 2).min()),
        "G H - H^t G": float(np.abs(G @ Hint - Hint.T @ G).max()),
        "M* G M - G": float(np.abs(Mpt.conj().T @ G @ Mpt - G).max()),
        "PT fit": fit_pt,
    }
    return GramMatrix(sites, m, basis, G, Hint.astype(int), Mpt, residuals)


# ---------------------------------------------------------------------------
# conjecture


@dataclass
class ConjectureReport:
    sites: int
    m: int
    violations: list  # (i, j, loops, |G_ij|) with even loops but G_ij != 0
    vacuous: list  # (i, j, loops) with odd loops and G_ij == 0
    pairs_checked: int
    reversed_left: bool

    @property
    def vacuous_count(self) -> int:
        return len(self.vacuous)

    @property
    def holds(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"M": self.sites, "m": self.m, "violations": self.violations,
                "vacuous_count": self.vacuous_count, "pairs_checked": self.pairs_checked}


def _is_zero(G: np.ndarray, i: int, j: int, basis: list, eta) -> bool:
    value = abs(G[i, j])
    if value >= CONFIRM_TOL:
        return False
    if value < ZERO_TOL * 1e-3:
        return True
    # near the threshold: recompute the entry directly from the two vectors
    redo = abs(np.vdot(basis[i].vector, eta @ basis[j].vector))
    return redo < ZERO_TOL


def loop_parity_table(basis: list, reversed_left: bool = False) -> np.ndarray:
    """tr(a_i a_j) as closed-loop counts."""
    n = len(basis)
    out = np.zeros((n, n), dtype=int)
    for i, j in itertools.product(range(n), repeat=2):
        left = basis[i].diagram
        if reversed_left:
            left = PlanarDiagram.from_word(left.strands, tuple(reversed(basis[i].word)))
        out[i, j] = trace_closure(compose(left, basis[j].diagram))
    return out


def check_conjecture(sites: int, m: int, gram: GramMatrix | None = None, metric=None,
                     reversed_left: bool = False) -> ConjectureReport:
    """G_ij = 0 whenever tr(a_i a_j) is even; also lists odd pairs with G_ij = 0."""
    from .metric import metric_for

    if metric is None:
        metric = metric_for(HamiltonianSpec.hg(sites, 1.0))
    if gram is None:
        gram = gram_matrix(sites, m, metric)
    eta = metric.eta if hasattr(metric, "eta") else np.asarray(metric)
    loops = loop_parity_table(gram.basis, reversed_left)
    violations, vacuous = [], []
    n = len(gram.basis)
    for i, j in itertools.product(range(n), repeat=2):
        zero = _is_zero(gram.G, i, j, gram.basis, eta)
        if loops[i, j] % 2 == 0 and not zero:
            violations.append((i + 1, j + 1, int(loops[i, j]), float(abs(gram.G[i, j]))))
        elif loops[i, j] % 2 == 1 and zero:
            vacuous.append((i + 1, j + 1, int(loops[i, j])))
    return ConjectureReport(sites, m, violations, vacuous, n * n, reversed_left)
