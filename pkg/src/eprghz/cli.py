"""Command-line surface: reproducible tables for rates, extraction,
preparation, fidelity sweeps, block decompositions, and invariant checks.

Exit codes: 0 success, 1 invariant failure, 2 usage or input error. Output
is CSV (default) or JSON; identical configuration and seed give
byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .hilbert import NORM_TOL, BudgetError, amplitude_distance
from .canonical import (StateSpec, copies, psi, psi_spec, psi_prime_spec,
                        random_spec, spec_from_json)
from .locc import (Povm, Transcript, check_completeness,
                   check_local_orthogonality, trial_seeds)
from .blocks import decompose, verify_block_equivalence
from .extraction import (asymptotic_rates, block_measurement_povm,
                         entropy_consistency, expected_yields, run_extraction)
from .preparation import (build_target, fidelity, fidelity_bound,
                          ghz_weighting_povm, prepare_approx,
                          prepare_exact_n2, resource_count, row_shorten_povm,
                          target_window)

EXIT_OK, EXIT_INVARIANT, EXIT_USAGE = 0, 1, 2
AMPLITUDE_SLOP = 1e-3


class UsageError(Exception):
    """Bad flags or malformed state input (exit code 2)."""


def _letters(subset) -> str:
    return "".join(chr(ord("A") + p) for p in subset)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _emit_table(header, rows, args) -> None:
    if args.format == "json":
        payload = [dict(zip(header, row)) for row in rows]
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        lines = [",".join(header)]
        lines += [",".join(_fmt(v) for v in row) for row in rows]
        text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_transcript(transcript: Transcript | None, args) -> None:
    if not args.transcript:
        return
    if transcript is None:
        raise UsageError("--transcript needs a sampling run (--trials > 0)")
    with open(args.transcript, "w") as fh:
        fh.write(transcript.to_text())


def _renormalize(cs) -> tuple[float, ...]:
    """Accept amplitudes with small rounding slop; reject real mismatches.

    Truncated decimals like 0.7071 are renormalized (noted on stderr, never
    silently); anything off by more than 1e-3 in squared sum is an error.
    """
    cs = [float(c) for c in cs]
    if any(c < 0 for c in cs):
        raise UsageError(f"amplitudes must be non-negative, got {cs}")
    s = sum(c * c for c in cs)
    if abs(s - 1.0) > AMPLITUDE_SLOP:
        raise UsageError(f"squared amplitudes sum to {s:.6g}, not 1")
    if abs(s - 1.0) > NORM_TOL:
        print(f"note: renormalizing amplitudes (squared sum {s:.9g})",
              file=sys.stderr)
        r = math.sqrt(s)
        cs = [c / r for c in cs]
    return tuple(cs)


def _load_spec(args) -> StateSpec:
    given = sum(x is not None for x in (args.psi, args.psi_prime, args.spec))
    if given != 1:
        raise UsageError("exactly one of --psi, --psi-prime, --spec required")
    try:
        if args.psi is not None:
            return psi_spec(*_renormalize(args.psi))
        if args.psi_prime is not None:
            return psi_prime_spec(*_renormalize(args.psi_prime))
        with open(args.spec) as fh:
            return spec_from_json(fh.read())
    except UsageError:
        raise
    except (ValueError, KeyError, TypeError, OSError,
            json.JSONDecodeError) as e:
        raise UsageError(f"bad state specification: {e}")


def _seed_amplitudes(args) -> tuple[float, float]:
    if args.psi is None:
        raise UsageError(
            "this subcommand works on the 2-component seed: pass --psi C0 C1")
    pair = _renormalize(args.psi)
    if len(pair) != 2:
        raise UsageError("--psi takes exactly two amplitudes")
    return pair


def _require_n(args) -> int:
    if args.n is None:
        raise UsageError("-N is required for this subcommand")
    if args.n < 1:
        raise UsageError(f"-N must be >= 1, got {args.n}")
    return args.n


def cmd_rates(args) -> int:
    spec = _load_spec(args)
    rates = asymptotic_rates(spec)
    full = tuple(range(spec.party_count))
    per = dict(rates.per_subset)
    full_rate = rates.full + per.pop(full, 0.0)
    rows = [(_letters(s), v) for s, v in sorted(per.items())]
    rows.append((_letters(full), full_rate))
    _emit_table(("subset", "rate"), rows, args)
    return EXIT_OK


def cmd_extract(args) -> int:
    spec = _load_spec(args)
    n = _require_n(args)
    expected = expected_yields(spec, n)
    empirical = stderr = None
    transcript = None
    if args.trials > 0:
        report, transcript = run_extraction(spec, n, args.trials, args.seed,
                                            analytic=args.analytic)
        empirical = dict(report.epr_per_copy)
        stderr = {s: math.sqrt(v / report.trials)
                  for s, v in report.epr_variance.items()}
        full = tuple(range(spec.party_count))
        empirical[full] = report.ghz_per_copy
        stderr[full] = math.sqrt(report.ghz_variance / report.trials)
    full = tuple(range(spec.party_count))
    rows = []
    for s in sorted(expected.epr_per_copy):
        rows.append((n, _letters(s), expected.epr_per_copy[s],
                     None if empirical is None else empirical[s],
                     None if stderr is None else stderr[s]))
    rows.append((n, _letters(full), expected.ghz_per_copy,
                 None if empirical is None else empirical[full],
                 None if stderr is None else stderr[full]))
    _emit_table(("N", "subset", "expected", "empirical", "stderr"),
                rows, args)
    _write_transcript(transcript, args)
    return EXIT_OK


def cmd_prepare(args) -> int:
    c0, c1 = _seed_amplitudes(args)
    n = _require_n(args)
    branches = args.trials if args.trials > 0 else 1
    seed0 = 0 if args.seed is None else args.seed
    if n == 2:
        window = (0, 2)
        target = copies(psi(c0, c1), 2)
    else:
        window = target_window(n, c0 * c0, args.alpha, args.beta)
        target = build_target(n, c0, c1, window)
    worst = 0.0
    resources = None
    combined = Transcript()
    for i, ss in enumerate(trial_seeds(seed0, branches)):
        if n == 2:
            state, transcript, resources = prepare_exact_n2(c0, c1, seed=ss)
        else:
            state, transcript, resources = prepare_approx(
                n, c0, c1, args.alpha, args.beta, seed=ss, window=window)
        worst = max(worst, amplitude_distance(state, target))
        for e in transcript.entries:
            combined.add(f"branch{i}.{e.step}", e.party, e.outcome,
                         e.probability)
    ok = worst <= 1e-9
    f = fidelity(n, c0 * c0, window)
    rows = [(n, branches, worst, resources.epr_per_subset[(1, 2)],
             resources.ghz, f, ok)]
    _emit_table(("N", "branches", "max_distance", "epr_BC", "ghz",
                 "fidelity", "ok"), rows, args)
    _write_transcript(combined, args)
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_fidelity(args) -> int:
    c0, _ = _seed_amplitudes(args)
    if args.n_sweep:
        ns = args.n_sweep
    elif args.n is not None:
        ns = [args.n]
    else:
        raise UsageError("pass -N or --n-sweep")
    c0_sq = c0 * c0
    rows = []
    for n in ns:
        w = target_window(n, c0_sq, args.alpha, args.beta)
        rc = resource_count(n, w)
        rows.append((n, w.k_minus, w.k_plus,
                     fidelity(n, c0_sq, w),
                     fidelity_bound(n, args.alpha, args.beta),
                     rc.epr_per_subset[(1, 2)] / n, rc.ghz / n))
    _emit_table(("N", "k_minus", "k_plus", "F", "bound", "epr_per_copy",
                 "ghz_per_copy"), rows, args)
    return EXIT_OK


def cmd_blocks(args) -> int:
    spec = _load_spec(args)
    n = _require_n(args)
    decomp = decompose(spec, n)
    ncomp = len(spec.components)
    header = tuple(f"k{i}" for i in range(ncomp)) + (
        "coefficient", "multiplicity", "log2_probability")
    rows = [e.index.counts + (e.coefficient, e.multiplicity,
                              e.log2_probability)
            for e in decomp.entries]
    _emit_table(header, rows, args)
    return EXIT_OK


def _verify_suites(args) -> list[tuple[str, bool]]:
    rng = np.random.default_rng(0 if args.seed is None else args.seed)
    results = []

    ok = all(verify_block_equivalence(n, k)
             for n in range(args.blocks_max_n + 1) for k in range(n + 1))
    results.append(("block_equivalence", ok))

    specs = [psi_spec(0.6, 0.8),
             psi_prime_spec(0.5, 0.5, 0.5, 0.5),
             psi_prime_spec(*np.sqrt((0.1, 0.2, 0.3, 0.4))),
             random_spec(3, rng), random_spec(4, rng)]
    ok = all(check_local_orthogonality(
        [s.component_state(i) for i in range(len(s.components))])
        for s in specs)
    results.append(("local_orthogonality", ok))

    checks = []
    for lam in ([1.0],
                (0.64, 0.48, 0.48, 0.36),
                np.full(5, 1.0 / math.sqrt(5.0))):
        povm, _ = ghz_weighting_povm(lam)
        checks.append(check_completeness(povm))
    w = rng.random(8) + 0.1
    povm, _ = ghz_weighting_povm(w / np.linalg.norm(w))
    checks.append(check_completeness(povm))
    stages = row_shorten_povm([([0, 1, 2, 3], 4), ([4, 5, 6, 7], 2),
                               ([8, 9, 10, 11], 2), ([12, 13, 14, 15], 1)],
                              party=1)
    checks += [check_completeness(st.povm) for st in stages]
    block_povm, _ = block_measurement_povm(psi_spec(0.6, 0.8), 3)
    checks.append(check_completeness(block_povm))
    if args.negative_control:
        broken = Povm(block_povm.party, block_povm.elements[:-1])
        checks.append(check_completeness(broken))
    results.append(("povm_completeness", all(checks)))

    specs = [psi_spec(0.6, 0.8), psi_spec(math.sqrt(0.5), math.sqrt(0.5)),
             psi_prime_spec(0.5, 0.5, 0.5, 0.5),
             psi_prime_spec(*np.sqrt((0.1, 0.2, 0.3, 0.4))),
             random_spec(3, rng), random_spec(4, rng)]
    results.append(("entropy_consistency",
                    all(entropy_consistency(s) for s in specs)))
    return results


def cmd_verify(args) -> int:
    results = _verify_suites(args)
    rows = [(name, "pass" if ok else "fail") for name, ok in results]
    _emit_table(("suite", "status"), rows, args)
    return EXIT_OK if all(ok for _, ok in results) else EXIT_INVARIANT


COMMANDS = {
    "rates": cmd_rates,
    "extract": cmd_extract,
    "prepare": cmd_prepare,
    "fidelity": cmd_fidelity,
    "blocks": cmd_blocks,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eprghz",
        description="Multipartite entanglement interconversion: block "
                    "decompositions, resource yields, and preparation "
                    "protocols for the shared-tripartite state family.")
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "rates": "asymptotic canonical units per copy",
        "extract": "finite-N expected and sampled yields",
        "prepare": "run the preparation protocol and verify its output",
        "fidelity": "windowed-target fidelity and resource sweep",
        "blocks": "block decomposition table of the N-copy power",
        "verify": "run the invariant suites",
    }
    for name, desc in descriptions.items():
        sp = sub.add_parser(name, help=desc)
        sp.add_argument("--psi", nargs=2, type=float, metavar=("C0", "C1"),
                        help="2-component seed amplitudes")
        sp.add_argument("--psi-prime", nargs=4, type=float,
                        metavar=("C0", "C1", "C2", "C3"),
                        help="4-component generalization amplitudes")
        sp.add_argument("--spec", metavar="FILE",
                        help="JSON component-list state file")
        sp.add_argument("-N", "--copies", dest="n", type=int, metavar="N",
                        help="number of copies")
        sp.add_argument("--n-sweep", metavar="N1,N2,...",
                        type=lambda s: [int(x) for x in s.split(",")],
                        help="comma-separated copy counts (fidelity sweep)")
        sp.add_argument("--alpha", type=float, default=1.0,
                        help="window half-width scale (default 1)")
        sp.add_argument("--beta", type=float, default=0.6,
                        help="window half-width exponent (default 0.6)")
        sp.add_argument("--trials", type=int, default=0,
                        help="Monte-Carlo trials / protocol branches")
        sp.add_argument("--seed", type=int,
                        help="root seed (required when --trials > 0)")
        sp.add_argument("--analytic", action="store_true",
                        help="sample block indices directly (any N)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--out", metavar="FILE",
                        help="write the table here instead of stdout")
        sp.add_argument("--transcript", metavar="FILE",
                        help="write measurement transcript here")
        if name == "verify":
            sp.add_argument("--blocks-max-n", type=int, default=8,
                            help="largest N for block equivalence (default 8)")
            sp.add_argument("--negative-control", action="store_true",
                            help="inject a broken measurement; the "
                                 "completeness suite must then fail")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.trials > 0 and args.seed is None:
            raise UsageError("--seed is required when --trials > 0")
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
