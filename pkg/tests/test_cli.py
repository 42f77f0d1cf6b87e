import json
from importlib import resources

import jsonschema
import pytest

from zeckgaps.cli import main


def schema(name):
    return json.loads(resources.files("zeckgaps").joinpath(f"schemas/{name}.json").read_text())


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize(
    "name, argv",
    [
        ("seq", ["seq", "-r", "2,4", "--N", "6"]),
        ("decompose", ["decompose", "-r", "1,1", "--m", "100"]),
        ("spectral", ["spectral", "-r", "1,1,1"]),
        ("bulk", ["bulk", "-r", "1,1", "--n", "12"]),
        ("bulk", ["bulk", "-r", "10", "--n", "9", "--mode", "exact"]),
        ("bulk", ["bulk", "-r", "2,4", "--n", "9", "--mode", "closed-form"]),
        ("bulk", ["bulk", "-r", "1,1", "--n", "300", "--mode", "theory"]),
        ("bulk", ["bulk", "-r", "1,1", "--n", "300", "--mode", "sample", "--samples", "20", "--seed", "1"]),
        ("longest", ["longest", "-r", "1,1", "--n", "1000000", "--mode", "closed-form"]),
        ("longest", ["longest", "-r", "2,4", "--n", "200", "--mode", "exact"]),
        ("longest", ["longest", "-r", "1,1", "--n", "5000", "--mode", "asymptotic"]),
        ("experiment", ["experiment", "--kind", "longest", "-r", "1,1", "--n", "300", "--samples", "20", "--seed", "1"]),
        ("experiment", ["experiment", "--kind", "summand", "-r", "2,4", "--n", "300", "--samples", "20", "--seed", "1"]),
        ("verify", ["verify", "-r", "1,1", "--max-n", "10"]),
    ],
)
def test_outputs_match_schemas(capsys, name, argv):
    code, out, _ = run(capsys, *argv)
    assert code == 0
    jsonschema.validate(json.loads(out), schema(name))


def test_decompose_output(capsys):
    code, out, _ = run(capsys, "decompose", "-r", "1,1", "--m", "100")
    payload = json.loads(out)
    assert payload["terms"] == [[10, 1], [5, 1], [3, 1]]
    assert payload["sum"] == "100 = G_10 + G_5 + G_3"
    code, out, _ = run(capsys, "decompose", "-r", "1,1", "--m", "100", "--format", "pretty")
    assert out.strip() == "100 = G_10 + G_5 + G_3"


def test_longest_closed_form_value(capsys):
    _, out, _ = run(capsys, "longest", "-r", "1,1", "--n", "1000000", "--mode", "closed-form")
    assert abs(json.loads(out)["mean"] - 28.73) < 0.02


def test_verify_passes(capsys):
    code, out, _ = run(capsys, "verify", "-r", "1,1", "--max-n", "14")
    assert code == 0 and json.loads(out)["passed"]


def test_exit_codes(capsys, monkeypatch):
    assert run(capsys, "seq", "-r", "0,1", "--N", "3")[0] == 2
    assert run(capsys, "seq", "-r", "1,1")[0] == 1
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys, "decompose", "-r", "1,1", "--m", "0")[0] == 2
    assert run(capsys, "longest", "-r", "1,1,1", "--n", "100")[0] == 2
    assert run(capsys, "longest", "-r", "1,1,1", "--n", "100", "--relaxed")[0] == 0
    monkeypatch.setenv("CI", "1")
    code, _, err = run(capsys, "experiment", "--kind", "longest", "-r", "1,1", "--n", "50")
    assert code == 1 and "--seed" in err


def test_verify_mismatch_exit(capsys, monkeypatch):
    import zeckgaps.cli as cli

    monkeypatch.setattr(cli.bulkgaps, "x_total", lambda *a: -1)
    assert run(capsys, "verify", "-r", "1,1", "--max-n", "6")[0] == 3


def test_byte_identical_reruns(capsys):
    argv = ["experiment", "--kind", "longest", "-r", "2,4", "--n", "400", "--samples", "30", "--seed", "9"]
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_csv_and_out_file(capsys, tmp_path):
    code, out, _ = run(capsys, "bulk", "-r", "10", "--n", "2", "--format", "csv")
    lines = out.splitlines()
    assert lines[0] == "k,count,p_empirical,p_theory"
    target = tmp_path / "cdf.csv"
    code, out, _ = run(capsys, "longest", "-r", "1,1", "--n", "300", "--mode", "exact", "--format", "csv",
                       "--f-min", "5", "--f-max", "20", "--out", str(target))
    assert code == 0 and out == ""
    rows = target.read_text().splitlines()
    assert rows[0] == "f,cdf_exact,cdf_asymptotic" and len(rows) == 17


def test_samples_csv(capsys, tmp_path):
    target = tmp_path / "samples.csv"
    code, _, _ = run(capsys, "experiment", "--kind", "longest", "-r", "1,1", "--n", "200", "--samples", "5",
                     "--seed", "2", "--samples-csv", str(target))
    assert code == 0 and len(target.read_text().splitlines()) == 6


def test_workers_env(monkeypatch):
    from zeckgaps.montecarlo import default_workers

    monkeypatch.setenv("ZECKGAPS_WORKERS", "3")
    assert default_workers() == 3
