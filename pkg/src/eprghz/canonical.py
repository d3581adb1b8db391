"""Constructors for canonical resource states and the shared-tripartite family.

Canonical resources are the uniform maximally correlated states: the 2-party
EPR pair, the n-party GHZ state, and their r-level / t-level generalizations.
The family of interest is built from a ``StateSpec``: a list of components,
each either a product ket or a level-d canonical state on a party subset,
embedded so that different components occupy disjoint local label ranges on
every party (which makes them locally orthogonal by construction).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .hilbert import (EXPLICIT_BUDGET, NORM_TOL, BudgetError, PureState,
                      states_equal, tensor)

SQ2 = math.sqrt(2.0)


def _embed_dims(parties, party_count, dim):
    if party_count is None:
        party_count = max(parties) + 1
    if party_count <= max(parties):
        raise ValueError(f"party_count {party_count} too small for {parties}")
    return tuple(dim if p in parties else 1 for p in range(party_count))


def level_ghz(t: int, parties, party_count: int | None = None) -> PureState:
    """t-level GHZ: (1/sqrt t) sum_i |i i ... i> on the given parties.

    Non-member parties (if ``party_count`` exceeds them) are dim-1
    placeholders, so the result composes with states on the full party set.
    """
    t = int(t)
    if t < 1:
        raise ValueError(f"level must be >= 1, got {t}")
    parties = tuple(sorted(set(int(p) for p in parties)))
    if len(parties) < 2:
        raise ValueError("a GHZ-type state needs at least 2 parties")
    if min(parties) < 0:
        raise ValueError(f"negative party id in {parties}")
    dims = _embed_dims(parties, party_count, t)
    amp = 1.0 / math.sqrt(t)
    amps = {}
    for i in range(t):
        amps[tuple(i if p in parties else 0 for p in range(len(dims)))] = amp
    return PureState(dims, amps)


def level_epr(r: int, parties, party_count: int | None = None) -> PureState:
    """r-level maximally entangled pair: (1/sqrt r) sum_i |ii>."""
    parties = tuple(sorted(set(int(p) for p in parties)))
    if len(parties) != 2:
        raise ValueError(f"an EPR-type state needs exactly 2 parties, got {parties}")
    return level_ghz(r, parties, party_count)


def epr(parties, party_count: int | None = None) -> PureState:
    """The EPR pair (|00> + |11>)/sqrt 2 on two distinct parties."""
    return level_epr(2, parties, party_count)


def ghz(n: int) -> PureState:
    """The n-party GHZ state (|0...0> + |1...1>)/sqrt 2."""
    n = int(n)
    if n < 2:
        raise ValueError(f"GHZ needs n >= 2 parties, got {n}")
    return level_ghz(2, range(n))


def psi(c0: float, c1: float) -> PureState:
    """The tripartite seed state c0|000> + c1|1>(|11>+|22>)/sqrt2, dims (2,3,3)."""
    _check_unit(c0, c1)
    amps = {(0, 0, 0): c0, (1, 1, 1): c1 / SQ2, (1, 2, 2): c1 / SQ2}
    return PureState((2, 3, 3), amps)


def psi_prime(c0: float, c1: float, c2: float, c3: float) -> PureState:
    """Four-component tripartite state on dims (6,6,6).

    Component subsets: c0 product |000>; c1 pairs B with C (A parked); c2
    pairs A with C (B parked); c3 pairs A with B (C parked). Label ranges
    per party are disjoint across components.
    """
    _check_unit(c0, c1, c2, c3)
    amps = {
        (0, 0, 0): c0,
        (1, 1, 1): c1 / SQ2, (1, 2, 2): c1 / SQ2,
        (2, 3, 3): c2 / SQ2, (3, 3, 4): c2 / SQ2,
        (4, 4, 5): c3 / SQ2, (5, 5, 5): c3 / SQ2,
    }
    return PureState((6, 6, 6), amps)


def _check_unit(*cs):
    if any(c < 0 for c in cs):
        raise ValueError(f"coefficients must be non-negative, got {cs}")
    if abs(sum(c * c for c in cs) - 1.0) > NORM_TOL:
        raise ValueError(f"squared coefficients sum to {sum(c*c for c in cs)}, not 1")


@dataclass(frozen=True)
class CanonicalComponent:
    """One term of a StateSpec.

    ``support`` of size >= 2 carries a level-``level`` canonical state;
    support of size 1 marks a pure product component (every party parked on
    a single label). Labels are assigned by the spec, not stored here.
    """

    coefficient: float
    support: tuple[int, ...]
    level: int = 2

    def __post_init__(self):
        object.__setattr__(self, "support",
                           tuple(sorted(set(int(p) for p in self.support))))
        object.__setattr__(self, "coefficient", float(self.coefficient))
        object.__setattr__(self, "level", int(self.level))
        if not self.support or min(self.support) < 0:
            raise ValueError(f"bad support {self.support}")
        if not 0.0 < self.coefficient <= 1.0 + NORM_TOL:
            raise ValueError(f"coefficient must be in (0,1], got {self.coefficient}")
        if self.level < 2:
            raise ValueError(f"level must be >= 2, got {self.level}")

    def width(self, party: int) -> int:
        """Local label-range width this component occupies on ``party``."""
        if len(self.support) >= 2 and party in self.support:
            return self.level
        return 1


@dataclass(frozen=True)
class StateSpec:
    """Component list defining a multipartite state of the shared family."""

    party_count: int
    components: tuple[CanonicalComponent, ...]

    def __post_init__(self):
        comps = tuple(c for c in self.components if c.coefficient > 0.0)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "party_count", int(self.party_count))
        if self.party_count < 2:
            raise ValueError("need at least 2 parties")
        if not comps:
            raise ValueError("spec has no nonzero components")
        for c in comps:
            if max(c.support) >= self.party_count:
                raise ValueError(
                    f"support {c.support} outside {self.party_count} parties")
        tot = sum(c.coefficient**2 for c in comps)
        if abs(tot - 1.0) > NORM_TOL:
            raise ValueError(f"squared coefficients sum to {tot}, not 1")

    def local_dims(self) -> tuple[int, ...]:
        return tuple(sum(c.width(p) for c in self.components)
                     for p in range(self.party_count))

    def offsets(self, i: int) -> tuple[int, ...]:
        """Per-party label offset of component ``i`` (cumulative widths)."""
        return tuple(sum(c.width(p) for c in self.components[:i])
                     for p in range(self.party_count))

    def product_labels(self, i: int) -> dict[int, int]:
        """Realized parked label per non-correlated party of component ``i``."""
        comp = self.components[i]
        offs = self.offsets(i)
        return {p: offs[p] for p in range(self.party_count)
                if comp.width(p) == 1}

    def component_state(self, i: int) -> PureState:
        """Component ``i`` embedded in the full label space, normalized."""
        comp = self.components[i]
        offs = self.offsets(i)
        dims = self.local_dims()
        if len(comp.support) == 1:
            return PureState(dims, {offs: 1.0})
        amp = 1.0 / math.sqrt(comp.level)
        amps = {}
        for q in range(comp.level):
            labels = tuple(offs[p] + (q if comp.width(p) > 1 else 0)
                           for p in range(self.party_count))
            amps[labels] = amp
        return PureState(dims, amps)

    def squared_coefficients(self) -> tuple[float, ...]:
        return tuple(c.coefficient**2 for c in self.components)


def psi_spec(c0: float, c1: float) -> StateSpec:
    _check_unit(c0, c1)
    comps = []
    if c0 > 0:
        comps.append(CanonicalComponent(c0, (0,)))
    if c1 > 0:
        comps.append(CanonicalComponent(c1, (1, 2)))
    return StateSpec(3, tuple(comps))


def psi_prime_spec(c0: float, c1: float, c2: float, c3: float) -> StateSpec:
    _check_unit(c0, c1, c2, c3)
    supports = [(0,), (1, 2), (0, 2), (0, 1)]
    comps = [CanonicalComponent(c, s)
             for c, s in zip((c0, c1, c2, c3), supports) if c > 0]
    return StateSpec(3, tuple(comps))


def random_spec(party_count: int, rng: np.random.Generator,
                num_components: int | None = None) -> StateSpec:
    """Random member of the family: random supports, levels, and weights.

    Disjoint label ranges keep the components locally orthogonal whatever
    the draw, so every sample is a valid input to the block machinery.
    """
    if num_components is None:
        num_components = int(rng.integers(2, 5))
    comps = []
    for _ in range(num_components):
        size = int(rng.integers(1, party_count + 1))
        support = tuple(int(p) for p in
                        rng.choice(party_count, size=size, replace=False))
        level = int(rng.integers(2, 4))
        comps.append((support, level))
    # floor keeps every coefficient safely nonzero
    w = rng.random(num_components) + 0.1
    w = np.sqrt(w / w.sum())
    return StateSpec(party_count, tuple(
        CanonicalComponent(float(c), s, l)
        for c, (s, l) in zip(w, comps)))


def psi_general(spec: StateSpec) -> PureState:
    """Assemble the spec's state: sum_i c_i |component_i>.

    Disjoint per-party label ranges make the components locally orthogonal
    by construction; this is re-verified here against the trace criterion.
    """
    from .locc import check_local_orthogonality

    parts = [spec.component_state(i) for i in range(len(spec.components))]
    if len(parts) > 1 and not check_local_orthogonality(parts):
        raise ValueError("spec components are not locally orthogonal")
    amps: dict[tuple[int, ...], complex] = {}
    for comp, part in zip(spec.components, parts):
        for labels, a in part.amplitudes.items():
            amps[labels] = amps.get(labels, 0j) + comp.coefficient * a
    return PureState(spec.local_dims(), amps)


def copies(s: PureState, n: int) -> PureState:
    """N-fold tensor power with per-party mixed-radix label flattening.

    Copy 0 is the most significant digit of each party's flattened label.
    Refuses supports beyond the explicit budget; large-N questions have
    analytic paths (block probabilities, expected yields, fidelity).
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"need n >= 1 copies, got {n}")
    if s.support_size**n > EXPLICIT_BUDGET:
        raise BudgetError(
            f"support {s.support_size}^{n} exceeds the explicit budget "
            f"{EXPLICIT_BUDGET:.0e}; use the analytic (log-space) paths")
    out = s
    for _ in range(n - 1):
        out = tensor(out, s)
    return out


# -- StateSpec serialization (consumed by the CLI --spec flag) --------------

def spec_to_dict(spec: StateSpec) -> dict:
    comps = []
    for i, c in enumerate(spec.components):
        entry = {"c": c.coefficient, "support": list(c.support)}
        if c.level != 2:
            entry["level"] = c.level
        entry["product_labels"] = {str(p): l
                                   for p, l in spec.product_labels(i).items()}
        comps.append(entry)
    return {"m": spec.party_count, "components": comps}


def spec_from_dict(data: dict) -> StateSpec:
    try:
        m = int(data["m"])
        raw = data["components"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"spec object needs 'm' and 'components': {exc}")
    comps = []
    for entry in raw:
        comps.append(CanonicalComponent(float(entry["c"]),
                                        tuple(entry["support"]),
                                        int(entry.get("level", 2))))
    spec = StateSpec(m, tuple(comps))
    for i, entry in enumerate(raw):
        declared = entry.get("product_labels")
        if declared is None:
            continue
        realized = spec.product_labels(i)
        declared = {int(p): int(l) for p, l in declared.items()}
        if declared != realized:
            raise ValueError(
                f"component {i}: declared product labels {declared} do not "
                f"match the label-range construction {realized}")
    return spec


def spec_to_json(spec: StateSpec) -> str:
    return json.dumps(spec_to_dict(spec), indent=2, sort_keys=True)


def spec_from_json(text: str) -> StateSpec:
    return spec_from_dict(json.loads(text))


def spec_matches_state(spec: StateSpec, state: PureState,
                       tol: float = NORM_TOL) -> bool:
    """True iff the spec assembles to ``state`` (used as a cross-check)."""
    return states_equal(psi_general(spec), state, tol)
