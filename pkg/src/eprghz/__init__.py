"""Sparse multipartite simulator for reversible interconversion between a
family of tripartite states and canonical EPR / GHZ resources."""

from .hilbert import (BudgetError, DensityMatrix, PureState,
                      amplitude_distance, entanglement_entropy, entropy,
                      inner, reduced_density, relabel, states_equal, tensor)
from .canonical import (CanonicalComponent, StateSpec, copies, epr, ghz,
                        level_epr, level_ghz, psi, psi_general, psi_prime,
                        psi_prime_spec, psi_spec, random_spec,
                        spec_from_dict, spec_from_json, spec_matches_state,
                        spec_to_dict, spec_to_json)
from .locc import (ImpossibleOutcomeError, LocalOperator, Povm, Transcript,
                   TranscriptEntry, apply_element, apply_operator,
                   as_generator, check_completeness,
                   check_local_orthogonality, diagonal_operator,
                   identity_operator, outcome_probabilities,
                   permutation_operator, projector_onto_labels, sample,
                   trial_seeds)
from .blocks import (BlockDecomposition, BlockEntry, BlockIndex, block_state,
                     block_probability, block_yields, decompose,
                     iter_block_counts, log2_binomial, log2_factorial,
                     log2_multinomial, multinomial_exact,
                     total_block_probability, verify_block_equivalence,
                     zero_position_rows)
from .extraction import (Rates, YieldReport, asymptotic_rates,
                         block_measurement_povm, entropy_consistency,
                         expected_yields, run_extraction)
from .preparation import (ResourceCount, ShortenStage, Window, build_target,
                          fidelity, fidelity_bound, ghz_weighting_povm,
                          prepare_approx, prepare_exact_n2, resource_count,
                          row_shorten_povm, target_window)

__version__ = "0.1.0"

__all__ = [
    "BlockDecomposition", "BlockEntry", "BlockIndex", "BudgetError",
    "CanonicalComponent", "DensityMatrix", "ImpossibleOutcomeError",
    "LocalOperator", "Povm", "PureState", "Rates", "ResourceCount",
    "ShortenStage", "StateSpec", "Transcript", "TranscriptEntry", "Window",
    "YieldReport", "amplitude_distance", "apply_element", "apply_operator",
    "as_generator", "asymptotic_rates", "block_measurement_povm",
    "block_probability", "block_state", "block_yields", "build_target",
    "check_completeness", "check_local_orthogonality", "copies", "decompose",
    "diagonal_operator", "entanglement_entropy", "entropy",
    "entropy_consistency", "epr", "expected_yields", "fidelity",
    "fidelity_bound", "ghz", "ghz_weighting_povm", "identity_operator",
    "inner", "iter_block_counts", "level_epr", "level_ghz", "log2_binomial",
    "log2_factorial", "log2_multinomial", "multinomial_exact",
    "outcome_probabilities", "permutation_operator", "prepare_approx",
    "prepare_exact_n2", "projector_onto_labels", "psi", "psi_general",
    "psi_prime", "psi_prime_spec", "psi_spec", "random_spec",
    "reduced_density", "relabel", "resource_count", "row_shorten_povm",
    "run_extraction", "sample", "spec_from_dict", "spec_from_json",
    "spec_matches_state", "spec_to_dict", "spec_to_json", "states_equal",
    "target_window", "tensor", "total_block_probability", "trial_seeds",
    "verify_block_equivalence", "zero_position_rows",
]
