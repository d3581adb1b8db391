"""End-to-end command-line behavior: tables, determinism, exit codes."""

import json
import math

import pytest

from eprghz.canonical import psi_prime_spec, spec_to_json
from eprghz.cli import EXIT_INVARIANT, EXIT_OK, EXIT_USAGE, main
from eprghz.extraction import expected_yields
from eprghz.preparation import fidelity, fidelity_bound
from eprghz.canonical import psi_spec


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def rows_of(out):
    lines = out.strip().splitlines()
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:]]


# -- rates ---------------------------------------------------------------------

def test_rates_psi(capsys):
    code, out, _ = run(capsys, "rates", "--psi", "0.6", "0.8")
    assert code == EXIT_OK
    table = rows_of(out)
    assert [r["subset"] for r in table] == ["BC", "ABC"]
    assert float(table[0]["rate"]) == pytest.approx(0.64)
    assert float(table[1]["rate"]) == pytest.approx(0.9426831892554922,
                                                    abs=1e-12)


def test_rates_product_state(capsys):
    code, out, _ = run(capsys, "rates", "--psi", "1", "0")
    assert code == EXIT_OK
    assert rows_of(out) == [{"subset": "ABC", "rate": "0"}]


def test_rates_psi_prime_inline(capsys):
    code, out, _ = run(capsys, "rates", "--psi-prime",
                       "0.5", "0.5", "0.5", "0.5")
    assert code == EXIT_OK
    got = {r["subset"]: float(r["rate"]) for r in rows_of(out)}
    assert got == pytest.approx(
        {"AB": 0.25, "AC": 0.25, "BC": 0.25, "ABC": 2.0})


def test_rates_spec_file(capsys, tmp_path):
    path = tmp_path / "psi_prime_equal.json"
    path.write_text(spec_to_json(psi_prime_spec(0.5, 0.5, 0.5, 0.5)))
    code, out, _ = run(capsys, "rates", "--spec", str(path))
    assert code == EXIT_OK
    assert {r["subset"] for r in rows_of(out)} == {"AB", "AC", "BC", "ABC"}


def test_rates_json_format(capsys):
    code, out, _ = run(capsys, "rates", "--psi", "0.6", "0.8",
                       "--format", "json")
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload[0]["subset"] == "BC"
    assert payload[0]["rate"] == pytest.approx(0.64)
    assert list(payload[0]) == sorted(payload[0])


# -- extract -------------------------------------------------------------------

def test_extract_expected_only(capsys):
    code, out, _ = run(capsys, "extract", "--psi", "0.6", "0.8", "-N", "2")
    assert code == EXIT_OK
    table = rows_of(out)
    assert [r["subset"] for r in table] == ["BC", "ABC"]
    assert float(table[0]["expected"]) == pytest.approx(0.64)
    assert float(table[1]["expected"]) == pytest.approx(0.2304)
    assert table[0]["empirical"] == "" and table[0]["stderr"] == ""


def test_extract_expected_round_trips_17g(capsys):
    code, out, _ = run(capsys, "extract", "--psi", "0.6", "0.8", "-N", "2")
    want = expected_yields(psi_spec(0.6, 0.8), 2)
    table = rows_of(out)
    assert float(table[0]["expected"]) == want.epr_per_copy[(1, 2)]
    assert float(table[1]["expected"]) == want.ghz_per_copy


def test_extract_sampled(capsys):
    code, out, _ = run(capsys, "extract", "--psi", "0.6", "0.8", "-N", "2",
                       "--trials", "2000", "--seed", "7")
    assert code == EXIT_OK
    for row in rows_of(out):
        need = abs(float(row["empirical"]) - float(row["expected"]))
        assert need < 4 * float(row["stderr"])


def test_extract_byte_identical(capsys):
    argv = ("extract", "--psi", "0.6", "0.8", "-N", "3",
            "--trials", "500", "--seed", "9")
    _, out1, _ = run(capsys, *argv)
    _, out2, _ = run(capsys, *argv)
    assert out1 == out2


def test_extract_analytic_large_n(capsys):
    code, out, err = run(capsys, "extract", "--psi", "0.7071", "0.7071",
                         "-N", "10000", "--analytic",
                         "--trials", "16", "--seed", "3")
    assert code == EXIT_OK
    assert "renormalizing" in err
    table = rows_of(out)
    ghz = [r for r in table if r["subset"] == "ABC"][0]
    assert abs(float(ghz["empirical"]) - 1.0) < 0.01


def test_extract_explicit_budget_refusal(capsys):
    code, _, err = run(capsys, "extract", "--psi", "0.6", "0.8", "-N", "16",
                       "--trials", "1", "--seed", "1")
    assert code == EXIT_USAGE
    assert "error" in err


def test_extract_writes_transcript(capsys, tmp_path):
    path = tmp_path / "t.tsv"
    code, _, _ = run(capsys, "extract", "--psi", "0.6", "0.8", "-N", "2",
                     "--trials", "10", "--seed", "4",
                     "--transcript", str(path))
    assert code == EXIT_OK
    lines = path.read_text().splitlines()
    assert lines[0] == "step\tparty\toutcome\tprobability"
    assert len(lines) == 11


# -- prepare -------------------------------------------------------------------

def test_prepare_two_copies(capsys):
    code, out, _ = run(capsys, "prepare", "--psi", "0.6", "0.8", "-N", "2",
                       "--seed", "1")
    assert code == EXIT_OK
    row = rows_of(out)[0]
    assert row["ok"] == "true"
    assert float(row["max_distance"]) < 1e-9
    assert row["epr_BC"] == "2" and row["ghz"] == "2"
    assert float(row["fidelity"]) == 1.0


def test_prepare_branch_count(capsys):
    code, out, _ = run(capsys, "prepare", "--psi", "0.6", "0.8", "-N", "2",
                       "--trials", "5", "--seed", "3")
    assert code == EXIT_OK
    assert rows_of(out)[0]["branches"] == "5"


def test_prepare_pair_only(capsys):
    code, out, _ = run(capsys, "prepare", "--psi", "0", "1", "-N", "3")
    assert code == EXIT_OK
    row = rows_of(out)[0]
    assert row["epr_BC"] == "3" and row["ghz"] == "0"
    assert float(row["max_distance"]) < 1e-9


def test_prepare_windowed_n4(capsys):
    code, out, err = run(capsys, "prepare", "--psi", "0.7071", "0.7071",
                         "-N", "4", "--alpha", "1", "--beta", "0.6")
    assert code == EXIT_OK
    assert "renormalizing" in err
    row = rows_of(out)[0]
    # the default window at N=4 clamps to (0, 4): full mass, 16 rows
    assert float(row["fidelity"]) == 1.0
    assert row["ghz"] == "4" and row["ok"] == "true"


def test_prepare_transcript(capsys, tmp_path):
    path = tmp_path / "prep.tsv"
    code, _, _ = run(capsys, "prepare", "--psi", "0.6", "0.8", "-N", "2",
                     "--trials", "2", "--seed", "5",
                     "--transcript", str(path))
    assert code == EXIT_OK
    lines = path.read_text().splitlines()
    assert lines[1].startswith("branch0.weighting\t")
    assert any(l.startswith("branch1.") for l in lines)


# -- fidelity ------------------------------------------------------------------

def test_fidelity_sweep(capsys):
    code, out, _ = run(capsys, "fidelity", "--psi", "0.7071", "0.7071",
                       "--n-sweep", "100,1000,10000")
    assert code == EXIT_OK
    table = rows_of(out)
    assert [r["N"] for r in table] == ["100", "1000", "10000"]
    assert (table[0]["k_minus"], table[0]["k_plus"]) == ("35", "65")
    fs = [float(r["F"]) for r in table]
    assert fs == sorted(fs)
    assert fs[0] == pytest.approx(fidelity(100, 0.5, (35, 65)), abs=1e-15)
    assert float(table[0]["bound"]) == pytest.approx(fidelity_bound(100),
                                                     abs=1e-15)


def test_fidelity_single_n(capsys):
    code, out, _ = run(capsys, "fidelity", "--psi", "0.6", "0.8", "-N", "50")
    assert code == EXIT_OK
    row = rows_of(out)[0]
    assert float(row["epr_per_copy"]) == pytest.approx(
        (50 - int(row["k_minus"])) / 50)


def test_fidelity_needs_n(capsys):
    code, _, err = run(capsys, "fidelity", "--psi", "0.6", "0.8")
    assert code == EXIT_USAGE
    assert "error" in err


# -- blocks --------------------------------------------------------------------

def test_blocks_psi_n3(capsys):
    code, out, _ = run(capsys, "blocks", "--psi", "0.6", "0.8", "-N", "3")
    assert code == EXIT_OK
    lines = out.strip().splitlines()
    assert lines[0] == "k0,k1,coefficient,multiplicity,log2_probability"
    table = rows_of(out)
    assert [float(r["coefficient"]) for r in table] == \
        pytest.approx([0.512, 0.384, 0.288, 0.216])
    assert [r["multiplicity"] for r in table] == ["1", "3", "3", "1"]
    assert 2.0 ** float(table[1]["log2_probability"]) == \
        pytest.approx(0.442368)


def test_blocks_psi_prime_n2(capsys):
    code, out, _ = run(capsys, "blocks", "--psi-prime",
                       "0.5", "0.5", "0.5", "0.5", "-N", "2")
    assert code == EXIT_OK
    table = rows_of(out)
    assert len(table) == 10
    assert sum(int(r["multiplicity"]) for r in table) == 16   # 4^2 rows


# -- verify --------------------------------------------------------------------

def test_verify_passes(capsys):
    code, out, _ = run(capsys, "verify", "--blocks-max-n", "6", "--seed", "0")
    assert code == EXIT_OK
    table = rows_of(out)
    assert {r["suite"] for r in table} == {
        "block_equivalence", "local_orthogonality", "povm_completeness",
        "entropy_consistency"}
    assert all(r["status"] == "pass" for r in table)


def test_verify_negative_control(capsys):
    code, out, _ = run(capsys, "verify", "--blocks-max-n", "3",
                       "--negative-control")
    assert code == EXIT_INVARIANT
    table = {r["suite"]: r["status"] for r in rows_of(out)}
    assert table["povm_completeness"] == "fail"
    assert table["block_equivalence"] == "pass"


# -- output plumbing and exit codes ----------------------------------------------

def test_out_flag_writes_file(capsys, tmp_path):
    path = tmp_path / "rates.csv"
    code, out, _ = run(capsys, "rates", "--psi", "0.6", "0.8",
                       "--out", str(path))
    assert code == EXIT_OK
    assert out == ""
    assert path.read_text().startswith("subset,rate\n")


@pytest.mark.parametrize("argv", [
    ("rates",),                                            # no source
    ("rates", "--psi", "0.6", "0.8", "--psi-prime",
     "0.5", "0.5", "0.5", "0.5"),                          # two sources
    ("extract", "--psi", "0.6", "0.8", "-N", "2",
     "--trials", "5"),                                     # trials, no seed
    ("rates", "--psi", "0.5", "0.5"),                      # badly off norm
    ("extract", "--psi", "0.6", "0.8"),                    # missing -N
    ("prepare", "--psi-prime", "0.5", "0.5", "0.5", "0.5",
     "-N", "2"),                                           # needs the seed pair
])
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_USAGE
    assert "error" in err


def test_malformed_spec_file(capsys, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    code, _, err = run(capsys, "rates", "--spec", str(path))
    assert code == EXIT_USAGE
    assert "error" in err
    code, _, err = run(capsys, "rates", "--spec", str(tmp_path / "nope.json"))
    assert code == EXIT_USAGE


def test_amplitude_slop_boundary(capsys):
    # squared sum off by more than 1e-3 is refused, within is renormalized
    code, _, err = run(capsys, "rates", "--psi", "0.71", "0.71")
    assert code == EXIT_USAGE
    code, _, err = run(capsys, "rates", "--psi", "0.70710678", "0.70710678")
    assert code == EXIT_OK
