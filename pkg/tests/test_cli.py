import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

import xxchain.cli as cli
from xxchain.errors import PreconditionError


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_spectrum_csv_has_zero_mode(capsys):
    code, out, err = run(capsys, "spectrum", "--sites", "5", "--g", "1")
    assert code == cli.EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 5
    assert list(rows[0]) == ["M", "g", "theta", "j", "Re_eps", "Im_eps", "residual"]
    assert sum(abs(float(r["Re_eps"])) < 1e-10 for r in rows) == 1
    assert "regime" in err


def test_spectrum_off_circle_is_reported_not_fatal(capsys):
    code, out, _ = run(capsys, "spectrum", "--sites", "4", "--g", "1.5", "--format", "json")
    assert code == cli.EXIT_OK
    assert json.loads(out)["runs"][0]["regime"] == "OffCircle"


def test_spectrum_dense_cross_check(capsys):
    code, out, _ = run(capsys, "spectrum", "--sites", "3-5", "--g", "0.5", "--format", "json",
                       "--dense")
    assert code == cli.EXIT_OK
    runs = json.loads(out)["runs"]
    assert [r["M"] for r in runs] == [3, 4, 5]
    assert all(r["dense_mismatch"] < 1e-8 for r in runs)


def test_metric_json(capsys):
    code, out, _ = run(capsys, "metric", "--sites", "3", "--g", "0.5")
    assert code == cli.EXIT_OK
    data = json.loads(out)
    assert {"eta", "h", "C", "residuals", "meta"} <= set(data)
    assert max(data["residuals"].values()) < 1e-9


def test_metric_sector(capsys):
    code, out, _ = run(capsys, "metric", "--sites", "3", "--g", "0.5", "--sector", "1/2")
    assert code == cli.EXIT_OK


def test_metric_at_threshold_exits_exceptional(capsys):
    code, _, err = run(capsys, "metric", "--sites", "3", "--g", "1.4142136")
    assert code == cli.EXIT_EXCEPTIONAL
    assert "exceptional" in err


def test_json_output_is_byte_stable(capsys):
    _, first, _ = run(capsys, "metric", "--sites", "3", "--g", "0.7")
    _, second, _ = run(capsys, "metric", "--sites", "3", "--g", "0.7")
    assert first == second


def test_perturb_lambdas(capsys):
    code, out, _ = run(capsys, "perturb", "--order", "4", "--emit", "lambdas")
    assert code == cli.EXIT_OK
    assert json.loads(out)["lambdas"] == ["1/6", "-1/360", "1/15120", "-1/604800"]


def test_perturb_order_zero_is_empty(capsys):
    code, out, _ = run(capsys, "perturb", "--order", "0", "--emit", "A")
    assert code == cli.EXIT_OK
    assert json.loads(out)["A"] == {}


def test_perturb_p_table_csv(capsys):
    code, out, _ = run(capsys, "perturb", "--sites", "8", "--order", "3", "--emit", "p-table",
                       "--format", "csv")
    assert code == cli.EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    entry = next(r for r in rows if r["x"] == "1" and r["n"] == "3")
    assert entry["g^4"] == "5/64"


def test_perturb_negative_order(capsys):
    code, _, _ = run(capsys, "perturb", "--order", "-1")
    assert code == cli.EXIT_VALIDATION


def test_perturb_cross_check(capsys):
    code, out, _ = run(capsys, "perturb", "--sites", "5", "--order", "3", "--emit", "h",
                       "--check", "0.1")
    assert code == cli.EXIT_OK
    assert "cross_check" in json.loads(out)


def test_resource_cap_exit_code(capsys, monkeypatch):
    monkeypatch.setenv("XXCHAIN_MAX_DIM", "16")
    code, _, err = run(capsys, "metric", "--sites", "5", "--g", "0.5")
    assert code == cli.EXIT_RESOURCE
    assert "XXCHAIN_MAX_DIM" in err


def test_bad_angle_exit_code(capsys):
    code, _, _ = run(capsys, "spectrum", "--theta", "pix")
    assert code == cli.EXIT_VALIDATION


def test_verify_fast_passes(capsys):
    code, out, _ = run(capsys, "verify")
    assert code == cli.EXIT_OK
    assert "all checks passed" in out
    assert "FAIL" not in out


def test_verify_catches_corrupted_metric(capsys, monkeypatch):
    real = cli._metric

    def transposed(spec):
        bundle = real(spec)
        bundle._cache["eta"] = bundle.eta.T.copy()
        return bundle

    monkeypatch.setattr(cli, "_metric", transposed)
    code, out, _ = run(capsys, "verify")
    assert code == cli.EXIT_VERIFY
    assert "FAIL" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "xxchain", "perturb", "--order", "2",
                           "--emit", "lambda-primes", "--format", "csv"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines() == ["k,value", "1,1/4", "2,-1/192"]


@pytest.mark.parametrize("text,value", [("0.5pi", math.pi / 2), ("pi/2", math.pi / 2),
                                        ("-pi", -math.pi), ("1/3pi", math.pi / 3),
                                        ("0.25", 0.25)])
def test_parse_angle_examples(text, value):
    assert cli.parse_angle(text) == pytest.approx(value)


@given(st.fractions(min_value=-4, max_value=4, max_denominator=50))
def test_parse_angle_fraction_of_pi(frac):
    assert cli.parse_angle(f"{frac}pi") == pytest.approx(float(frac) * math.pi)


def test_parse_lists_and_tolerances():
    assert cli.parse_int_list("4-6,9") == [4, 5, 6, 9]
    assert cli.parse_float_list("0.5,1") == [0.5, 1.0]
    assert cli.parse_tolerances(["metric=1e-6"])["metric"] == 1e-6
    with pytest.raises(PreconditionError):
        cli.parse_tolerances(["metric=-1"])


def test_dumps_formats_floats_and_complex():
    text = cli.dumps({"b": np.float64(0.1), "a": 1 + 2j})
    assert text.index('"a"') < text.index('"b"')
    assert "0.10000000000000001" in text
    assert json.loads(text)["a"] == [1.0, 2.0]
