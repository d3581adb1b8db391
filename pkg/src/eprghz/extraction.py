"""Forward protocol: measure N copies onto blocks and account the resources.

A local projective measurement onto the block subspaces (performable by any
single party, since each party's labels identify the block) leaves the
parties sharing canonical states: level-d pairs on each entangled
component's support and a multiplicity-level GHZ-type state on the full
party set. Expected per-copy yields follow by summing block probabilities;
the component counts are multinomial, so every expectation reduces to
binomial marginals, which keeps the sums O(N) at any N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .hilbert import PureState, entanglement_entropy, entropy
from .canonical import StateSpec, copies, psi_general
from .locc import (Povm, Transcript, as_generator, outcome_probabilities,
                   projector_onto_labels, trial_seeds)
from .blocks import (EXACT_N_MAX, LN2, BlockIndex, block_probability,
                     block_yields, iter_block_counts, log2_binomial_array,
                     log2_multinomial)

MOMENT_ENUM_MAX = 200_000


@dataclass(frozen=True)
class Rates:
    """Asymptotic canonical units per copy: proper/component subsets plus
    the full-set GHZ rate (the coefficient entropy)."""

    per_subset: dict[tuple[int, ...], float]
    full: float


@dataclass(frozen=True)
class YieldReport:
    """Per-copy canonical units at finite N: expectation or sample mean.

    ``trials`` is None for analytic expectations; variances are across
    single protocol runs (NaN where no tractable exact path exists).
    """

    n_copies: int
    epr_per_copy: dict[tuple[int, ...], float]
    ghz_per_copy: float
    epr_variance: dict[tuple[int, ...], float]
    ghz_variance: float
    trials: int | None = None


def asymptotic_rates(spec: StateSpec) -> Rates:
    per: dict[tuple[int, ...], float] = {}
    for comp in spec.components:
        if len(comp.support) >= 2:
            per[comp.support] = (per.get(comp.support, 0.0)
                                 + comp.coefficient**2 * math.log2(comp.level))
    full = entropy(spec.squared_coefficients())
    return Rates(per, full)


def _log2_factorials(n: int) -> np.ndarray:
    """log2(j!) for j = 0..n."""
    if n <= EXACT_N_MAX:
        return np.array([math.log2(math.factorial(j)) for j in range(n + 1)])
    return gammaln(np.arange(n + 1, dtype=float) + 1.0) / LN2


def _binomial_pmf(n: int, p: float) -> np.ndarray:
    """Binomial(n, p) weights, normalized to unit sum."""
    if p <= 0.0:
        out = np.zeros(n + 1)
        out[0] = 1.0
        return out
    if p >= 1.0:
        out = np.zeros(n + 1)
        out[n] = 1.0
        return out
    ks = np.arange(n + 1, dtype=float)
    logp = (log2_binomial_array(n, np.arange(n + 1))
            + ks * math.log2(p) + (n - ks) * math.log2(1.0 - p))
    w = np.exp2(logp - logp.max())
    return w / w.sum()


def expected_yields(spec: StateSpec, n: int) -> YieldReport:
    """Exact finite-N expected yields by summing block probabilities.

    Component counts are jointly multinomial, so per-subset sums use the
    binomial marginal of each count and the row-multiplicity term uses
    log2(N!/prod k_i!) = log2 N! - sum_i log2 k_i!, again marginal by
    marginal. Variances need joint moments: computed exactly for the
    2-component case at any N and by full block enumeration when small.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    csq = spec.squared_coefficients()
    lf = _log2_factorials(n)
    full = tuple(range(spec.party_count))

    pmfs = [_binomial_pmf(n, c) for c in csq]
    ks = np.arange(n + 1, dtype=float)

    epr: dict[tuple[int, ...], float] = {}
    ghz = float(lf[n])
    for comp, pmf in zip(spec.components, pmfs):
        ghz -= float(pmf @ lf)
        if len(comp.support) < 2:
            continue
        units = math.log2(comp.level) * float(pmf @ ks) / n
        epr[comp.support] = epr.get(comp.support, 0.0) + units
    ghz = ghz / n
    # full-support component units live in the full-set (GHZ) account
    ghz += epr.pop(full, 0.0)

    epr_var, ghz_var = _yield_variances(spec, n, epr, ghz)
    return YieldReport(n, epr, ghz, epr_var, ghz_var, trials=None)


def _yield_variances(spec, n, epr_mean, ghz_mean):
    csq = spec.squared_coefficients()
    ncomp = len(csq)
    subsets = sorted({c.support for c in spec.components
                      if len(c.support) >= 2
                      and c.support != tuple(range(spec.party_count))})
    if ncomp == 2:
        pmf = _binomial_pmf(n, csq[0])
        k0 = np.arange(n + 1, dtype=float)
        counts = (k0, n - k0)
        lmult = log2_binomial_array(n, np.arange(n + 1))
        ghz_vals = lmult / n
        for comp, k in zip(spec.components, counts):
            if comp.support == tuple(range(spec.party_count)) and \
                    len(comp.support) >= 2:
                ghz_vals = ghz_vals + math.log2(comp.level) * k / n
        ghz_var = float(pmf @ (ghz_vals - ghz_mean) ** 2)
        epr_var = {}
        for s in subsets:
            vals = np.zeros(n + 1)
            for comp, k in zip(spec.components, counts):
                if comp.support == s:
                    vals = vals + math.log2(comp.level) * k / n
            epr_var[s] = float(pmf @ (vals - epr_mean.get(s, 0.0)) ** 2)
        return epr_var, ghz_var

    total_entries = math.comb(n + ncomp - 1, ncomp - 1)
    if total_entries > MOMENT_ENUM_MAX:
        return {s: math.nan for s in subsets}, math.nan
    acc2 = {s: 0.0 for s in subsets}
    ghz2 = 0.0
    full = tuple(range(spec.party_count))
    for counts in iter_block_counts(n, ncomp):
        logp = block_probability(n, counts, csq)
        if logp == -math.inf:
            continue
        w = 2.0**logp
        y = block_yields(counts, spec)
        ghz2 += w * (y[full] / n - ghz_mean) ** 2
        for s in subsets:
            acc2[s] += w * (y.get(s, 0.0) / n - epr_mean.get(s, 0.0)) ** 2
    return acc2, ghz2


def block_measurement_povm(spec: StateSpec, n: int,
                           party: int = 0) -> tuple[Povm, list[BlockIndex]]:
    """Projective measurement onto block subspaces via one party's labels.

    Any party works: component label ranges are disjoint on every party,
    so each local label sequence identifies the block.
    """
    from .blocks import classify_copies_label

    dims = spec.local_dims()
    d = dims[party]
    if d**n > 4_000_000:
        raise ValueError(
            f"local dimension {d}**{n} too large for an explicit projector "
            "family; use the analytic sampling path")
    groups: dict[tuple[int, ...], list[int]] = {}
    for label in range(d**n):
        key = classify_copies_label(spec, party, label, n)
        groups.setdefault(key, []).append(label)
    indices = [BlockIndex(c) for c in iter_block_counts(n, len(spec.components))]
    elements = [projector_onto_labels(party, groups[idx.counts], d**n)
                for idx in indices]
    return Povm(party, tuple(elements)), indices


def run_extraction(spec: StateSpec, n: int, trials: int, seed: int,
                   analytic: bool = False, party: int = 0,
                   verify_blocks: bool = False
                   ) -> tuple[YieldReport, Transcript]:
    """Sample the block measurement ``trials`` times and account the yields.

    Explicit mode builds the N-copy state and measures it; analytic mode
    draws block indices from the multinomial law directly (identical
    statistics at any N). Each trial uses its own sub-seed.
    """
    n, trials = int(n), int(trials)
    if trials < 1:
        raise ValueError(f"need trials >= 1, got {trials}")
    csq = spec.squared_coefficients()
    full = tuple(range(spec.party_count))
    subsets = sorted({c.support for c in spec.components
                      if len(c.support) >= 2 and c.support != full})
    seeds = trial_seeds(seed, trials)
    transcript = Transcript()

    ghz_samples = np.empty(trials)
    epr_samples = {s: np.empty(trials) for s in subsets}

    if analytic:
        for t, ss in enumerate(seeds):
            gen = as_generator(ss)
            counts = tuple(int(x) for x in gen.multinomial(n, csq))
            y = block_yields(counts, spec)
            ghz_samples[t] = y[full] / n
            for s in subsets:
                epr_samples[s][t] = y.get(s, 0.0) / n
            prob = 2.0 ** block_probability(n, counts, csq)
            transcript.add(f"trial{t}", party, _flat_outcome(counts), prob)
    else:
        state = copies(psi_general(spec), n)
        povm, indices = block_measurement_povm(spec, n, party)
        probs = outcome_probabilities(state, povm)
        if verify_blocks:
            _verify_psi_blocks(spec, state, povm, indices, probs)
        cum = np.cumsum(probs)
        yields = [block_yields(idx, spec) for idx in indices]
        for t, ss in enumerate(seeds):
            gen = as_generator(ss)
            o = int(np.searchsorted(cum, gen.random() * cum[-1], side="right"))
            o = min(o, len(probs) - 1)
            y = yields[o]
            ghz_samples[t] = y[full] / n
            for s in subsets:
                epr_samples[s][t] = y.get(s, 0.0) / n
            transcript.add(f"trial{t}", party, o, float(probs[o]))

    ddof = 1 if trials > 1 else 0
    report = YieldReport(
        n,
        {s: float(v.mean()) for s, v in epr_samples.items()},
        float(ghz_samples.mean()),
        {s: float(v.var(ddof=ddof)) for s, v in epr_samples.items()},
        float(ghz_samples.var(ddof=ddof)),
        trials=trials,
    )
    return report, transcript


def _flat_outcome(counts: tuple[int, ...]) -> int:
    """Deterministic scalar id for a count vector (for transcript lines):
    its position in the lexicographic enumeration."""
    n = sum(counts)
    ncomp = len(counts)
    rank = 0
    remaining = n
    for pos, k in enumerate(counts[:-1]):
        comps_left = ncomp - pos - 1
        for smaller in range(k):
            rank += math.comb(remaining - smaller + comps_left - 1,
                              comps_left - 1)
        remaining -= k
    return rank


def _verify_psi_blocks(spec, state, povm, indices, probs):
    """Post-measurement states of the 2-component seed must be the
    canonical pair x row-GHZ blocks."""
    from .blocks import block_state, verify_block_equivalence
    from .hilbert import states_equal
    from .locc import apply_element

    if len(spec.components) != 2:
        return
    n = indices[0].n
    for j, idx in enumerate(indices):
        if probs[j] <= 1e-12:
            continue
        post, _ = apply_element(state, povm.elements[j])
        k = idx.counts[0]
        if not states_equal(post, block_state(n, k), 1e-9):
            raise AssertionError(f"post-measurement state of block {idx} is "
                                 "not the canonical block state")
        if not verify_block_equivalence(n, k):
            raise AssertionError(f"block ({n},{k}) failed the canonical "
                                 "pair x GHZ equivalence")


def entropy_consistency(spec: StateSpec, tol: float = 1e-9) -> bool:
    """Every bipartite entanglement entropy must equal the crossing rates:
    sum of l_T over subsets T crossing the cut, plus the full-set rate."""
    state = psi_general(spec)
    rates = asymptotic_rates(spec)
    m = spec.party_count
    parties = set(range(m))
    for bits in range(1, 2 ** (m - 1)):
        cut = tuple(p for p in range(m) if (bits >> p) & 1)
        rest = parties - set(cut)
        expect = rates.full
        for sub, l in rates.per_subset.items():
            if set(sub) & set(cut) and set(sub) & rest:
                expect += l
        if abs(entanglement_entropy(state, cut) - expect) > tol:
            return False
    return True
