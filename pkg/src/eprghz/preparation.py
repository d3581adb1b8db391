"""Reverse protocol: assemble N-copy states of the seed from canonical inputs.

Two copies come out exactly; general N comes out as the normalized
truncation of the N-copy power to a window of blocks around the probability
peak, with fidelity approaching 1 while the consumed resources stay within
a sublinear excess of the asymptotic rates. The two measurement primitives
are a weighting POVM (imprint arbitrary row weights on a uniform GHZ-type
state, every outcome correctable) and row shortening (cut a row's length by
an integer factor without touching any row weight).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hilbert import (EXPLICIT_BUDGET, NORM_TOL, BudgetError, PureState,
                      relabel, tensor)
from .canonical import level_epr, level_ghz
from .locc import (Povm, Transcript, apply_operator, as_generator,
                   diagonal_operator, permutation_operator, sample)
from .blocks import (log2_binomial, log2_binomial_array, row_a_label,
                     row_bc_label, zero_position_rows)


@dataclass(frozen=True)
class Window:
    """Block index band [k_minus, k_plus] kept by the truncated target."""

    n: int
    k_minus: int
    k_plus: int
    alpha: float
    beta: float

    def __post_init__(self):
        if not 0 <= self.k_minus <= self.k_plus <= self.n:
            raise ValueError(
                f"window ({self.k_minus}, {self.k_plus}) outside 0..{self.n}")


@dataclass(frozen=True)
class ResourceCount:
    """Canonical inputs consumed: ebits per entangled subset plus full-set
    GHZ units (log2 of the level actually used, or of its planning bound)."""

    epr_per_subset: dict[tuple[int, ...], float]
    ghz: float


def target_window(n: int, c0_sq: float, alpha: float = 1.0,
                  beta: float = 0.6) -> Window:
    """Integer window c0^2 N -/+ alpha N^beta, rounded inward and clamped.

    Blocks with zero amplitude (c0^2 at 0 or 1) are dropped from the band:
    a window must never claim resources for dead blocks.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if not 0.0 <= c0_sq <= 1.0:
        raise ValueError(f"c0_sq {c0_sq} outside [0, 1]")
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if not 0.5 < beta < 1.0:
        raise ValueError(f"beta must lie in (1/2, 1), got {beta}")
    half = alpha * n**beta
    k_minus = max(0, math.ceil(c0_sq * n - half))
    k_plus = min(n, math.floor(c0_sq * n + half))
    if c0_sq == 0.0:
        k_plus = 0
    if c0_sq == 1.0:
        k_minus = n
    return Window(n, k_minus, k_plus, alpha, beta)


def _window_tuple(window) -> tuple[int, int]:
    if isinstance(window, Window):
        return window.k_minus, window.k_plus
    k_minus, k_plus = window
    return int(k_minus), int(k_plus)


def fidelity(n: int, c0_sq: float, window) -> float:
    """Squared overlap of the windowed target with the full N-copy power:
    the binomial mass inside the window.

    Summed as the complement of the tail mass when the window holds the
    bulk, so the result stays monotone in N instead of drowning in the
    absolute rounding noise of huge log-binomial values.
    """
    n = int(n)
    k_minus, k_plus = _window_tuple(window)
    if not 0 <= k_minus <= k_plus <= n:
        raise ValueError(f"window ({k_minus}, {k_plus}) outside 0..{n}")
    if c0_sq <= 0.0:
        return 1.0 if k_minus == 0 else 0.0
    if c0_sq >= 1.0:
        return 1.0 if k_plus == n else 0.0
    ks = np.arange(n + 1)
    logp = (log2_binomial_array(n, ks) + ks * math.log2(c0_sq)
            + (n - ks) * math.log2(1.0 - c0_sq))
    p = np.exp2(logp)
    total = float(p.sum())
    inside = float(p[k_minus:k_plus + 1].sum())
    if inside >= total / 2.0:
        tails = float(p[:k_minus].sum()) + float(p[k_plus + 1:].sum())
        return min(1.0, max(0.0, (total - tails) / total))
    return min(1.0, max(0.0, inside / total))


def fidelity_bound(n: int, alpha: float = 1.0, beta: float = 0.6) -> float:
    """Central normal mass at 2*alpha*N^(beta-1/2): the guaranteed floor
    under the fidelity for the default window of the same alpha, beta."""
    x = 2.0 * alpha * float(n) ** (beta - 0.5)
    return math.erf(x / math.sqrt(2.0))


def resource_count(n: int, window) -> ResourceCount:
    """Planning bound for the windowed target: N - k_minus ebits on the
    pair subset, and GHZ units bounded by the window width times the
    largest block multiplicity (at k0, the window point nearest N/2,
    smaller index on ties)."""
    n = int(n)
    k_minus, k_plus = _window_tuple(window)
    candidates = [k for k in {n // 2, (n + 1) // 2} if k_minus <= k <= k_plus]
    if candidates:
        k0 = min(candidates)
    else:
        k0 = k_minus if k_minus > n / 2 else k_plus
    ghz = math.log2(k_plus - k_minus + 1) + log2_binomial(n, k0)
    return ResourceCount({(1, 2): float(n - k_minus)}, ghz)


def build_target(n: int, c0: float, c1: float, window) -> PureState:
    """Explicit windowed target: the normalized restriction of the N-copy
    power to the window's blocks (small N only)."""
    n = int(n)
    k_minus, k_plus = _window_tuple(window)
    if not 0 <= k_minus <= k_plus <= n:
        raise ValueError(f"window ({k_minus}, {k_plus}) outside 0..{n}")
    support = sum(math.comb(n, k) * 2**(n - k)
                  for k in range(k_minus, k_plus + 1))
    if support > EXPLICIT_BUDGET:
        raise BudgetError(f"windowed target needs {support} terms, "
                          f"budget is {EXPLICIT_BUDGET}")
    amps: dict[tuple[int, ...], complex] = {}
    for k in range(k_minus, k_plus + 1):
        r = 2**(n - k)
        base = c0**k * c1**(n - k) / math.sqrt(r)
        if base == 0.0:
            continue
        for zeros in zero_position_rows(n, k):
            a = row_a_label(n, zeros)
            for e in range(r):
                bc = row_bc_label(n, zeros, e)
                amps[(a, bc, bc)] = complex(base)
    norm = math.sqrt(sum(abs(v)**2 for v in amps.values()))
    if norm == 0.0:
        raise ValueError("window carries no amplitude for these coefficients")
    amps = {l: v / norm for l, v in amps.items()}
    return PureState((2**n, 3**n, 3**n), amps)


def ghz_weighting_povm(weights, party: int = 0
                       ) -> tuple[Povm, tuple[dict[int, int], ...]]:
    """Imprint row weights on a uniform t-level GHZ-type state.

    Element j is diagonal with entry weights[(m - j) mod t] at level m, so
    the t elements are cyclic shifts of one diagonal and completeness is
    the normalization of the weights. On the uniform state every outcome
    has probability exactly 1/t, and applying outcome j's correction (the
    cyclic relabeling m -> m - j, on every party) lands each branch on the
    same weighted state.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or len(w) < 1:
        raise ValueError("weights must be a non-empty vector")
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    if abs(float(w @ w) - 1.0) > NORM_TOL:
        raise ValueError(f"weights have squared sum {float(w @ w)}, need 1")
    t = len(w)
    elements = []
    corrections = []
    for j in range(t):
        elements.append(diagonal_operator(party, np.roll(w, j)))
        corrections.append({m: (m - j) % t for m in range(t)
                            if (m - j) % t != m})
    return Povm(party, tuple(elements)), tuple(corrections)


@dataclass(frozen=True)
class ShortenStage:
    """One row's shortening measurement: POVM plus, per outcome, the label
    map the entangled parties apply to pull the kept kets to the row head."""

    row: int
    povm: Povm
    corrections: tuple[dict[int, int], ...]


def row_shorten_povm(rows: Sequence[tuple[Sequence[int], int]], party: int,
                     dim: int | None = None) -> list[ShortenStage]:
    """Stages that cut each row to its keep count without moving weights.

    ``rows`` lists (row labels, keep count) with disjoint label sets; keep
    must divide the row length. Stage j has length/keep outcomes: outcome
    o keeps the o-th chunk of row j's labels at unit weight, kills the
    rest of that row, and scales every other label by sqrt(keep/length),
    which makes the stage complete and every outcome probability exactly
    keep/length. The correction maps the kept chunk onto the row's first
    keep labels; applied on each party sharing the labels, all outcomes
    land on the same shortened state with all row weights untouched.
    """
    seen: set[int] = set()
    for labels, keep in rows:
        ls = set(labels)
        if len(ls) != len(labels):
            raise ValueError("row labels repeat")
        if ls & seen:
            raise ValueError("rows overlap")
        seen |= ls
        if not 1 <= keep <= len(labels):
            raise ValueError(f"keep count {keep} outside 1..{len(labels)}")
        if len(labels) % keep:
            raise ValueError(
                f"keep count {keep} does not divide row length {len(labels)}")
    if dim is None:
        dim = max(seen) + 1
    if seen and max(seen) >= dim:
        raise ValueError(f"row label {max(seen)} outside dimension {dim}")

    stages = []
    for j, (labels, keep) in enumerate(rows):
        labels = list(labels)
        length = len(labels)
        scale = math.sqrt(keep / length)
        elements = []
        corrections = []
        for o in range(length // keep):
            diag = np.full(dim, scale)
            diag[labels] = 0.0
            chunk = labels[o * keep:(o + 1) * keep]
            diag[chunk] = 1.0
            elements.append(diagonal_operator(party, diag))
            corr: dict[int, int] = {}
            for i in range(keep):
                if chunk[i] != labels[i]:
                    corr[chunk[i]] = labels[i]
                    corr[labels[i]] = chunk[i]
            corrections.append(corr)
        stages.append(ShortenStage(j, Povm(party, tuple(elements)),
                                   tuple(corrections)))
    return stages


def _window_rows(n: int, k_minus: int, k_plus: int):
    """(k, zero slots) for every row of every window block, block index
    ascending and rows lexicographic within a block."""
    out = []
    for k in range(k_minus, k_plus + 1):
        for zeros in zero_position_rows(n, k):
            out.append((k, zeros))
    return out


def _prepare_windowed(n: int, c0: float, c1: float, window,
                      seed) -> tuple[PureState, Transcript, ResourceCount]:
    """Run one branch of the preparation protocol.

    Inputs: one R-level GHZ-type state (R = window row count) and
    N - k_minus B-C pairs. Steps: weight the rows, attach the pairs,
    shorten each row to its block's length, then relabel every party into
    the N-copy label space.
    """
    n = int(n)
    k_minus, k_plus = _window_tuple(window)
    if abs(c0 * c0 + c1 * c1 - 1.0) > NORM_TOL:
        raise ValueError(f"coefficients not normalized: {c0}, {c1}")
    rows = _window_rows(n, k_minus, k_plus)
    big_r = len(rows)
    pair_levels = 2**(n - k_minus)
    if big_r * pair_levels > EXPLICIT_BUDGET:
        raise BudgetError(f"protocol needs {big_r * pair_levels} terms, "
                          f"budget is {EXPLICIT_BUDGET}")

    lam = np.array([c0**k * c1**(n - k) for k, _ in rows])
    nrm = float(np.linalg.norm(lam))
    if nrm == 0.0:
        raise ValueError("window carries no amplitude for these coefficients")
    lam = lam / nrm

    gen = as_generator(seed)
    transcript = Transcript()

    state = level_ghz(big_r, (0, 1, 2))
    povm, corrections = ghz_weighting_povm(lam, party=0)
    outcome, state, entry = sample(state, povm, gen, step="weighting")
    transcript.entries.append(entry)
    if corrections[outcome]:
        for p in (0, 1, 2):
            state = apply_operator(
                state, permutation_operator(p, corrections[outcome], big_r))

    if pair_levels > 1:
        pair = level_epr(pair_levels, (0, 1), 2)
        state = tensor(state, pair, b_map=(1, 2))
    dim_bc = big_r * pair_levels

    stage_rows = [([g * pair_levels + e for e in range(pair_levels)],
                   2**(n - k)) for g, (k, _) in enumerate(rows)]
    for st in row_shorten_povm(stage_rows, party=1, dim=dim_bc):
        outcome, state, entry = sample(state, st.povm, gen,
                                       step=f"shorten_row{st.row}")
        transcript.entries.append(entry)
        if st.corrections[outcome]:
            for p in (1, 2):
                state = apply_operator(
                    state,
                    permutation_operator(p, st.corrections[outcome], dim_bc))

    a_map = {g: row_a_label(n, zeros) for g, (_, zeros) in enumerate(rows)}
    bc_map = {}
    for g, (k, zeros) in enumerate(rows):
        for e in range(2**(n - k)):
            bc_map[g * pair_levels + e] = row_bc_label(n, zeros, e)
    state = relabel(state, 0, a_map, new_dim=2**n)
    state = relabel(state, 1, bc_map, new_dim=3**n)
    state = relabel(state, 2, bc_map, new_dim=3**n)

    resources = ResourceCount({(1, 2): float(n - k_minus)},
                              math.log2(big_r))
    return state, transcript, resources


def prepare_exact_n2(c0: float, c1: float, seed=0
                     ) -> tuple[PureState, Transcript, ResourceCount]:
    """Two copies of the seed state, exactly, from 2 B-C pairs and a
    4-level GHZ-type state (2 canonical GHZ units), on every branch."""
    return _prepare_windowed(2, c0, c1, (0, 2), seed)


def prepare_approx(n: int, c0: float, c1: float, alpha: float = 1.0,
                   beta: float = 0.6, seed=0, window: Window | None = None
                   ) -> tuple[PureState, Transcript, ResourceCount]:
    """Windowed preparation at explicit scale: every branch lands exactly
    on build_target for the same window."""
    if window is None:
        window = target_window(n, c0 * c0, alpha, beta)
    return _prepare_windowed(n, c0, c1, window, seed)
