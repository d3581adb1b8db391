"""Block structure of N-copy states built from a StateSpec.

The N-fold power of a spec state splits, per party and locally, into
subspaces indexed by how many copies carry each component (a count vector).
Every such block is a uniform superposition: its rows are the ways of
assigning components to copy slots, and within a row each copy of an
entangled component ranges over its correlated kets. A block is therefore
equivalent, up to local relabeling, to a tensor product of level-d
canonical states on the component supports and one multiplicity-level
GHZ-type state over the full party set.

Counting conventions for the 2-component seed state: k = number of copies
carrying the product component |000>, r = 2**(N-k) (within-row range on the
B/C pair), t = binomial(N, k) (row count).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.special import gammaln

from .hilbert import (EXPLICIT_BUDGET, BudgetError, PureState, relabel,
                      states_equal, tensor)
from .canonical import StateSpec, level_epr, level_ghz

EXACT_N_MAX = 30
LN2 = math.log(2.0)
DECOMPOSE_MAX_ENTRIES = 200_000


def log2_factorial(n: int) -> float:
    if n <= EXACT_N_MAX:
        return math.log2(math.factorial(n))
    return math.lgamma(n + 1) / LN2


def log2_binomial(n: int, k: int) -> float:
    if not 0 <= k <= n:
        raise ValueError(f"binomial index {k} outside 0..{n}")
    if n <= EXACT_N_MAX:
        return math.log2(math.comb(n, k))
    return (math.lgamma(n + 1) - math.lgamma(k + 1)
            - math.lgamma(n - k + 1)) / LN2


def log2_binomial_array(n: int, ks) -> np.ndarray:
    ks = np.asarray(ks)
    if np.any((ks < 0) | (ks > n)):
        raise ValueError(f"binomial index outside 0..{n}")
    if n <= EXACT_N_MAX:
        return np.array([math.log2(math.comb(n, int(k))) for k in ks.ravel()],
                        dtype=float).reshape(ks.shape)
    kf = ks.astype(float)
    return (gammaln(n + 1) - gammaln(kf + 1) - gammaln(n - kf + 1)) / LN2


def multinomial_exact(counts) -> int:
    """Exact N! / prod(k_i!) as a Python integer."""
    total, out = 0, 1
    for k in counts:
        total += k
        out *= math.comb(total, k)
    return out


def log2_multinomial(counts) -> float:
    counts = tuple(int(k) for k in counts)
    if any(k < 0 for k in counts):
        raise ValueError(f"negative count in {counts}")
    n = sum(counts)
    if n <= EXACT_N_MAX:
        return math.log2(multinomial_exact(counts))
    return (math.lgamma(n + 1)
            - sum(math.lgamma(k + 1) for k in counts)) / LN2


@dataclass(frozen=True)
class BlockIndex:
    """Count vector (k_0, ..., k_l): copies carrying each spec component."""

    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(k) for k in self.counts)
        if not counts or any(k < 0 for k in counts):
            raise ValueError(f"bad count vector {counts}")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def k(self) -> int:
        """Binomial shorthand: count of the first (product) component."""
        return self.counts[0]


def iter_block_counts(n: int, num_components: int):
    """All count vectors with the given sum, lexicographically ascending."""
    if num_components == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in iter_block_counts(n - first, num_components - 1):
            yield (first,) + rest


def block_probability(n: int, idx, coeffs_sq) -> float:
    """log2 of multinomial(n; counts) * prod(coeffs_sq ** counts)."""
    coeffs_sq = tuple(float(c) for c in coeffs_sq)
    if abs(sum(coeffs_sq) - 1.0) > 1e-9:
        raise ValueError(f"squared coefficients sum to {sum(coeffs_sq)}, not 1")
    if isinstance(idx, BlockIndex):
        counts = idx.counts
    elif isinstance(idx, (int, np.integer)):
        if len(coeffs_sq) != 2:
            raise ValueError("integer index is only the 2-component shorthand")
        counts = (int(idx), n - int(idx))
    else:
        counts = tuple(int(k) for k in idx)
    if sum(counts) != n:
        raise ValueError(f"counts {counts} do not sum to {n}")
    if len(counts) != len(coeffs_sq):
        raise ValueError("count vector and coefficient vector lengths differ")
    out = log2_multinomial(counts)
    for k, c in zip(counts, coeffs_sq):
        if k:
            if c == 0.0:
                return -math.inf
            out += k * math.log2(c)
    return out


@dataclass(frozen=True)
class BlockEntry:
    index: BlockIndex
    coefficient: float
    multiplicity: int
    log2_probability: float


@dataclass(frozen=True)
class BlockDecomposition:
    n_copies: int
    entries: tuple[BlockEntry, ...]

    def total_probability(self) -> float:
        return float(sum(np.exp2(e.log2_probability) for e in self.entries
                         if e.log2_probability > -math.inf))


def _component_of_label(spec: StateSpec, party: int):
    """Lookup array: local label on ``party`` -> component index."""
    dims = spec.local_dims()
    lut = np.empty(dims[party], dtype=np.int64)
    pos = 0
    for i, comp in enumerate(spec.components):
        w = comp.width(party)
        lut[pos:pos + w] = i
        pos += w
    return lut


def classify_copies_label(spec: StateSpec, party: int, label: int,
                          n: int) -> tuple[int, ...]:
    """Count vector of one party's flattened N-copy label."""
    d = spec.local_dims()[party]
    lut = _component_of_label(spec, party)
    counts = [0] * len(spec.components)
    for _ in range(n):
        label, digit = divmod(label, d)
        counts[lut[digit]] += 1
    return tuple(counts)


def decompose(spec: StateSpec, n: int,
              state: PureState | None = None,
              tol: float = 1e-9) -> BlockDecomposition:
    """Enumerate all blocks of the N-copy power of the spec state.

    With ``state`` (the explicit N-copy state), each entry is verified
    against the projection norm: |projection| = coefficient * sqrt(mult).
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    ncomp = len(spec.components)
    total = math.comb(n + ncomp - 1, ncomp - 1)
    if total > DECOMPOSE_MAX_ENTRIES:
        raise BudgetError(
            f"{total} block entries exceed the enumeration budget "
            f"{DECOMPOSE_MAX_ENTRIES}; use block_probability or the "
            "expected-yield paths for large N")
    coeffs = [c.coefficient for c in spec.components]
    coeffs_sq = spec.squared_coefficients()

    projected: dict[tuple[int, ...], float] | None = None
    if state is not None:
        dims = spec.local_dims()
        expect = tuple(d**n for d in dims)
        if state.local_dims != expect:
            raise ValueError(
                f"state dims {state.local_dims} do not match {n} copies of "
                f"the spec (expected {expect}); unknown block structure")
        d0 = dims[0]
        lut = _component_of_label(spec, 0)
        projected = {}
        for labels, amp in state.amplitudes.items():
            label = labels[0]
            counts = [0] * ncomp
            for _ in range(n):
                label, digit = divmod(label, d0)
                counts[lut[digit]] += 1
            key = tuple(counts)
            projected[key] = projected.get(key, 0.0) + abs(amp) ** 2

    entries = []
    for counts in iter_block_counts(n, ncomp):
        coeff = math.prod(c**k for c, k in zip(coeffs, counts))
        mult = multinomial_exact(counts)
        logp = block_probability(n, counts, coeffs_sq)
        if projected is not None:
            norm = math.sqrt(projected.get(counts, 0.0))
            if abs(norm - coeff * math.sqrt(mult)) > tol:
                raise ValueError(
                    f"projection norm {norm} of block {counts} does not "
                    f"match coefficient*sqrt(multiplicity) "
                    f"{coeff * math.sqrt(mult)}")
        entries.append(BlockEntry(BlockIndex(counts), coeff, mult, logp))
    if projected is not None:
        stray = set(projected) - {e.index.counts for e in entries}
        if stray:
            raise ValueError(f"state support outside every block: {stray}")
    return BlockDecomposition(n, tuple(entries))


def total_block_probability(spec: StateSpec, n: int) -> float:
    """Sum of exp2(log2 probability) over every block (streaming)."""
    coeffs_sq = spec.squared_coefficients()
    ncomp = len(coeffs_sq)
    if ncomp == 2:
        ks = np.arange(n + 1, dtype=float)
        logp = log2_binomial_array(n, np.arange(n + 1))
        c0, c1 = coeffs_sq
        with np.errstate(divide="ignore", invalid="ignore"):
            logp = logp + np.where(ks > 0, ks * np.log2(c0) if c0 > 0 else -np.inf, 0.0)
            logp = logp + np.where(n - ks > 0,
                                   (n - ks) * np.log2(c1) if c1 > 0 else -np.inf, 0.0)
        return float(np.exp2(logp[logp > -np.inf]).sum())
    log_cs = [math.log2(c) if c > 0 else -math.inf for c in coeffs_sq]
    lg = [math.lgamma(k + 1) / LN2 for k in range(n + 1)]
    total = 0.0
    for counts in iter_block_counts(n, ncomp):
        logp = lg[n]
        dead = False
        for k, lc in zip(counts, log_cs):
            if k:
                if lc == -math.inf:
                    dead = True
                    break
                logp += k * lc - lg[k]
            # k = 0 contributes no factor
        if not dead:
            total += 2.0**logp
    return total


# -- canonical labeling of the 2-component seed's blocks --------------------

def zero_position_rows(n: int, k: int) -> list[tuple[int, ...]]:
    """Rows of block (n, k): the k-subsets of copy slots carrying |000>,
    in lexicographic order."""
    return list(combinations(range(n), k))


def row_a_label(n: int, zeros: tuple[int, ...]) -> int:
    """Alice's flattened binary label for a row: 0 on |000> slots, 1 elsewhere."""
    zs = set(zeros)
    label = 0
    for i in range(n):
        label = label * 2 + (0 if i in zs else 1)
    return label


def row_bc_label(n: int, zeros: tuple[int, ...], e: int) -> int:
    """Bob's (= Claire's) flattened ternary label for within-row index e.

    The N-k non-|000> slots take digits 1 or 2; ``e`` enumerates the
    assignments lexicographically over slots (first slot most significant).
    """
    zs = set(zeros)
    free = [i for i in range(n) if i not in zs]
    bits = {}
    for j, slot in enumerate(reversed(free)):
        bits[slot] = (e >> j) & 1
    label = 0
    for i in range(n):
        label = label * 3 + (0 if i in zs else 1 + bits[i])
    return label


def block_state(n: int, k: int) -> PureState:
    """The normalized (n, k) block of the seed state's N-copy power:
    r*t equal amplitudes on dims (2**n, 3**n, 3**n)."""
    n, k = int(n), int(k)
    if n < 0 or not 0 <= k <= n:
        raise ValueError(f"bad block index ({n}, {k})")
    r, t = 2 ** (n - k), math.comb(n, k)
    if r * t > EXPLICIT_BUDGET:
        raise BudgetError(f"block support {r * t} exceeds the explicit budget")
    amp = 1.0 / math.sqrt(r * t)
    amps = {}
    for zeros in zero_position_rows(n, k):
        a = row_a_label(n, zeros)
        for e in range(r):
            bc = row_bc_label(n, zeros, e)
            amps[(a, bc, bc)] = amp
    return PureState((2**n, 3**n, 3**n), amps)


def verify_block_equivalence(n: int, k: int, tol: float = 1e-9) -> bool:
    """Check that block (n, k) is an r-level B-C pair times a t-level
    three-party GHZ, under the canonical relabeling."""
    n, k = int(n), int(k)
    if n < 0 or not 0 <= k <= n:
        raise ValueError(f"bad block index ({n}, {k})")
    r, t = 2 ** (n - k), math.comb(n, k)
    if r * t > EXPLICIT_BUDGET:
        raise BudgetError(f"block support {r * t} exceeds the explicit budget")
    pair = level_epr(r, (1, 2), 3)
    rows = level_ghz(t, (0, 1, 2))
    joint = tensor(pair, rows)  # labels (g, e*t+g, e*t+g)

    zrows = zero_position_rows(n, k)
    a_map = {g: row_a_label(n, zeros) for g, zeros in enumerate(zrows)}
    bc_map = {}
    for g, zeros in enumerate(zrows):
        for e in range(r):
            bc_map[e * t + g] = row_bc_label(n, zeros, e)
    out = relabel(joint, 0, a_map, new_dim=2**n)
    out = relabel(out, 1, bc_map, new_dim=3**n)
    out = relabel(out, 2, bc_map, new_dim=3**n)
    return states_equal(out, block_state(n, k), tol)


def block_yields(idx, spec: StateSpec) -> dict[tuple[int, ...], float]:
    """Canonical units produced by landing in one block.

    Keys are party subsets; each entangled component's support earns
    counts * log2(level) units, and the full party set earns log2(row
    multiplicity) GHZ-type units (plus any full-support component units).
    """
    counts = idx.counts if isinstance(idx, BlockIndex) else tuple(idx)
    if len(counts) != len(spec.components):
        raise ValueError(
            f"count vector length {len(counts)} != {len(spec.components)} components")
    full = tuple(range(spec.party_count))
    out: dict[tuple[int, ...], float] = {full: 0.0}
    for comp in spec.components:
        if len(comp.support) >= 2:
            out.setdefault(comp.support, 0.0)
    out[full] += log2_multinomial(counts)
    for comp, k in zip(spec.components, counts):
        if len(comp.support) >= 2 and k:
            out[comp.support] += k * math.log2(comp.level)
    return out
