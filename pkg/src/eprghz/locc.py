"""Local operations and classical communication: operators, POVMs, sampling.

Operators act on one party's local space and are stored sparse, since the
protocols only ever need diagonal weights, projectors, and permutations on
local dimensions that grow like d**N. Classical communication is implicit:
later operations may depend on outcome indices recorded in a transcript.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .hilbert import NORM_TOL, PureState

IMPOSSIBLE_EPS = 1e-12
ORTHO_EPS = 1e-12


class ImpossibleOutcomeError(RuntimeError):
    """A measurement branch with probability at (numerical) zero was forced."""


@dataclass(frozen=True)
class LocalOperator:
    """A matrix acting on one party's local space (out_dim x in_dim)."""

    party: int
    matrix: sp.csc_matrix

    def __post_init__(self):
        m = self.matrix
        if not sp.issparse(m):
            m = sp.csc_matrix(np.asarray(m, dtype=complex))
        else:
            m = m.tocsc().astype(complex)
        if m.ndim != 2:
            raise ValueError("operator matrix must be 2-dimensional")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "party", int(self.party))

    @property
    def out_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def in_dim(self) -> int:
        return self.matrix.shape[1]


def identity_operator(party: int, dim: int) -> LocalOperator:
    return LocalOperator(party, sp.identity(dim, dtype=complex, format="csc"))


def diagonal_operator(party: int, values) -> LocalOperator:
    values = np.asarray(values, dtype=complex)
    return LocalOperator(party, sp.diags(values, format="csc"))


def projector_onto_labels(party: int, labels, dim: int) -> LocalOperator:
    """Diagonal 0/1 projector onto the given local labels."""
    diag = np.zeros(dim, dtype=complex)
    for l in labels:
        if not 0 <= l < dim:
            raise ValueError(f"label {l} out of range for dim {dim}")
        diag[l] = 1.0
    return diagonal_operator(party, diag)


def permutation_operator(party: int, mapping: dict[int, int],
                         dim: int) -> LocalOperator:
    """Unitary relabeling |old> -> |new>; labels absent from the map stay."""
    perm = np.arange(dim)
    for old, new in mapping.items():
        if not (0 <= old < dim and 0 <= new < dim):
            raise ValueError(f"label map {old}->{new} out of range for dim {dim}")
        perm[old] = new
    if len(set(perm.tolist())) != dim:
        raise ValueError("label map is not a permutation")
    data = np.ones(dim, dtype=complex)
    return LocalOperator(party, sp.csc_matrix((data, (perm, np.arange(dim))),
                                              shape=(dim, dim)))


@dataclass(frozen=True)
class Povm:
    """A list of local operators on one party, intended to be complete."""

    party: int
    elements: tuple[LocalOperator, ...]

    def __post_init__(self):
        elems = tuple(self.elements)
        if not elems:
            raise ValueError("a POVM needs at least one element")
        if any(e.party != elems[0].party for e in elems):
            raise ValueError("POVM elements act on different parties")
        if any(e.in_dim != elems[0].in_dim for e in elems):
            raise ValueError("POVM elements have mismatched input dimensions")
        object.__setattr__(self, "elements", elems)
        object.__setattr__(self, "party", int(elems[0].party))

    @property
    def in_dim(self) -> int:
        return self.elements[0].in_dim


def check_completeness(p: Povm, dim: int | None = None,
                       tol: float = NORM_TOL) -> bool:
    """True iff sum_j M_j^dag M_j is the identity within tol (max entry)."""
    if dim is None:
        dim = p.in_dim
    elif dim != p.in_dim:
        raise ValueError(f"POVM acts on dim {p.in_dim}, not {dim}")
    total = sp.csc_matrix((dim, dim), dtype=complex)
    for e in p.elements:
        total = total + e.matrix.conj().T @ e.matrix
    diff = total - sp.identity(dim, dtype=complex, format="csc")
    if diff.nnz == 0:
        return True
    return float(np.abs(diff.data).max()) <= tol


def _apply_matrix(s: PureState, party: int, m: sp.csc_matrix):
    """Return (amplitude map, squared norm) of (m on party) applied to s."""
    indptr, indices, data = m.indptr, m.indices, m.data
    amps: dict[tuple[int, ...], complex] = {}
    for labels, amp in s.amplitudes.items():
        col = labels[party]
        for k in range(indptr[col], indptr[col + 1]):
            nl = labels[:party] + (int(indices[k]),) + labels[party + 1:]
            amps[nl] = amps.get(nl, 0j) + data[k] * amp
    sq = sum(abs(v) ** 2 for v in amps.values())
    return amps, sq


def apply_operator(s: PureState, op: LocalOperator) -> PureState:
    """Apply without renormalizing (for unitaries and linear-algebra checks)."""
    if op.in_dim != s.local_dims[op.party]:
        raise ValueError(
            f"operator in_dim {op.in_dim} != local dim "
            f"{s.local_dims[op.party]} of party {op.party}")
    amps, _ = _apply_matrix(s, op.party, op.matrix)
    dims = (s.local_dims[:op.party] + (op.out_dim,)
            + s.local_dims[op.party + 1:])
    return PureState(dims, amps)


def apply_element(s: PureState, op: LocalOperator) -> tuple[PureState, float]:
    """Apply one measurement operator; return (normalized state, probability).

    Probability is the squared norm of the unnormalized branch. A branch at
    numerically zero probability raises rather than returning garbage.
    """
    if op.in_dim != s.local_dims[op.party]:
        raise ValueError(
            f"operator in_dim {op.in_dim} != local dim "
            f"{s.local_dims[op.party]} of party {op.party}")
    amps, sq = _apply_matrix(s, op.party, op.matrix)
    if sq <= IMPOSSIBLE_EPS:
        raise ImpossibleOutcomeError(
            f"outcome on party {op.party} has probability {sq:.3e}")
    n = math.sqrt(sq)
    dims = (s.local_dims[:op.party] + (op.out_dim,)
            + s.local_dims[op.party + 1:])
    return PureState(dims, {l: a / n for l, a in amps.items()}), sq


@dataclass(frozen=True)
class TranscriptEntry:
    step: str
    party: int
    outcome: int
    probability: float

    def to_line(self) -> str:
        return f"{self.step}\t{self.party}\t{self.outcome}\t{self.probability:.17g}"


@dataclass
class Transcript:
    """Ordered record of measurement outcomes along one protocol branch."""

    entries: list[TranscriptEntry] = field(default_factory=list)

    def add(self, step: str, party: int, outcome: int,
            probability: float) -> TranscriptEntry:
        if not -NORM_TOL <= probability <= 1.0 + NORM_TOL:
            raise ValueError(f"probability {probability} outside [0,1]")
        e = TranscriptEntry(str(step), int(party), int(outcome),
                            float(probability))
        self.entries.append(e)
        return e

    def branch_probability(self) -> float:
        return math.prod(e.probability for e in self.entries)

    def to_text(self) -> str:
        header = "step\tparty\toutcome\tprobability"
        return "\n".join([header] + [e.to_line() for e in self.entries]) + "\n"

    def __len__(self):
        return len(self.entries)


def as_generator(rng) -> np.random.Generator:
    """Accept a seed, a SeedSequence, or a ready Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, np.random.SeedSequence):
        return np.random.default_rng(rng)
    return np.random.default_rng(int(rng))


def trial_seeds(seed: int, trials: int) -> list[np.random.SeedSequence]:
    """Independent per-trial sub-seeds from one root seed."""
    return np.random.SeedSequence(int(seed)).spawn(int(trials))


def outcome_probabilities(s: PureState, p: Povm) -> np.ndarray:
    """Born probabilities of every POVM outcome on s (must sum to 1)."""
    probs = np.empty(len(p.elements))
    for j, e in enumerate(p.elements):
        _, sq = _apply_matrix(s, p.party, e.matrix)
        probs[j] = sq
    if abs(probs.sum() - 1.0) > NORM_TOL:
        raise ValueError(
            f"outcome probabilities sum to {probs.sum()}, not 1; "
            "POVM incomplete or state unnormalized")
    return probs


def sample(s: PureState, p: Povm, rng,
           step: str = "measure") -> tuple[int, PureState, TranscriptEntry]:
    """Draw one outcome with Born probabilities; return its branch.

    The POVM is completeness-checked here because sampling from an
    incomplete element list silently skews every downstream statistic.
    """
    if not check_completeness(p):
        raise ValueError("POVM is not complete on its local space")
    gen = as_generator(rng)
    probs = outcome_probabilities(s, p)
    cum = np.cumsum(probs)
    outcome = int(np.searchsorted(cum, gen.random() * cum[-1], side="right"))
    outcome = min(outcome, len(probs) - 1)
    post, sq = apply_element(s, p.elements[outcome])
    entry = TranscriptEntry(str(step), p.party, outcome, float(sq))
    return outcome, post, entry


def check_local_orthogonality(components, tol: float = ORTHO_EPS) -> bool:
    """True iff every pair of components has vanishing local density overlap
    Tr[rho_i rho_j] on every party."""
    comps = list(components)
    if len(comps) < 2:
        return True
    shape = comps[0].local_dims
    if any(c.local_dims != shape for c in comps):
        raise ValueError("components have mismatched shapes")
    for party in range(len(shape)):
        densities = [_compact_density(c, party) for c in comps]
        for i in range(len(comps)):
            for j in range(i + 1, len(comps)):
                if _density_overlap(densities[i], densities[j]) > tol:
                    return False
    return True


def _compact_density(s: PureState, party: int) -> dict[tuple[int, int], complex]:
    """Single-party reduced density as a sparse {(x, y): value} map."""
    groups: dict[tuple[int, ...], list[tuple[int, complex]]] = {}
    for labels, amp in s.amplitudes.items():
        rest = labels[:party] + labels[party + 1:]
        groups.setdefault(rest, []).append((labels[party], amp))
    rho: dict[tuple[int, int], complex] = {}
    for entries in groups.values():
        for x, ax in entries:
            for y, ay in entries:
                key = (x, y)
                rho[key] = rho.get(key, 0j) + ax * ay.conjugate()
    return rho


def _density_overlap(ra: dict, rb: dict) -> float:
    small, big = (ra, rb) if len(ra) <= len(rb) else (rb, ra)
    tot = 0j
    for key, v in small.items():
        w = big.get(key)
        if w is not None:
            tot += v * w.conjugate()
    return abs(tot)
