import csv
import io

import pytest

from spreadlab.cli import main
from spreadlab.graph import complete_bipartite, graph_to_text


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_threshold_latin_full(capsys):
    code, out, _ = run(capsys, "threshold", "--property", "latin", "--n", "6", "--p", "1", "--trials", "10")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[0]["fraction"] == "1.000000" and rows[0]["trials"] == "10"


def test_threshold_grid_and_lists(capsys):
    code, out, _ = run(capsys, "threshold", "--property", "list-bipartite", "--n", "4", "--grid", "2,4",
                       "--trials", "5")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [r["p"] for r in rows] == ["2", "4"] and rows[1]["fraction"] == "1.000000"


def test_threshold_unreliable_exit(capsys):
    code, _, _ = run(capsys, "threshold", "--property", "latin", "--n", "7", "--p", "0.6", "--trials", "3",
                     "--budget", "5")
    assert code == 3


def test_decompose_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    for path in (a, b):
        code, _, _ = run(capsys, "decompose", "--n", "64", "--S", "2", "--rounds", "3", "--profile", "desk",
                         "--seed", "7", "--out", str(path))
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "64 64 2 3" and len(lines) == 1 + 8 + 8
    ids = sorted(int(x) for line in lines[9:] for x in line.split())
    assert ids == list(range(64 * 64))


def test_decompose_from_graph_file(tmp_path, capsys):
    g = tmp_path / "g.txt"
    g.write_text(graph_to_text(complete_bipartite(16)))
    code, out, _ = run(capsys, "decompose", "--graph", str(g), "--rounds", "1", "--seed", "1")
    assert code == 0 and out.startswith("16 16 2 1\n")


def test_verify_nice(capsys):
    code, out, _ = run(capsys, "verify-nice", "--n", "6", "--profile", "paper")
    assert code == 0 and "nice True" in out


def test_verify_nice_violation(tmp_path, capsys):
    g = tmp_path / "g.txt"
    g.write_text(graph_to_text(complete_bipartite(6)))
    code, out, _ = run(capsys, "verify-nice", "--graph", str(g), "--D0", "20", "--profile", "paper")
    assert code == 1 and "n1 False" in out


def test_verify_admissible(capsys):
    code, out, _ = run(capsys, "verify-admissible", "--n", "8", "--seed", "2")
    assert code in (0, 1)
    assert out.startswith("mode exhaustive\n")


def test_spread(capsys):
    code, out, _ = run(capsys, "spread", "--n", "16", "--rounds", "1", "--trials", "20", "--seed", "1")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "test_id,size,empirical_prob,ratio,stderr" and len(lines) > 10


def test_solve_and_lll(capsys):
    code, out, _ = run(capsys, "solve", "--property", "latin", "--n", "4", "--p", "1")
    assert code == 0 and len(out.splitlines()) == 16
    code, out, _ = run(capsys, "solve", "--property", "sts", "--n", "6", "--p", "1")
    assert code == 0 and out == "absent\n"
    code, out, _ = run(capsys, "solve", "--property", "list-complete", "--n", "4", "--k", "3")
    assert code == 0 and len(out.splitlines()) == 6
    code, out, _ = run(capsys, "lll-check", "--trials", "5", "--vars", "8")
    assert code == 0 and len(out.splitlines()) == 6


def test_solve_from_file(tmp_path, capsys):
    f = tmp_path / "t.txt"
    f.write_text("tripartite 2\n0 0 0\n0 1 1\n1 0 1\n1 1 0\n")
    code, out, _ = run(capsys, "solve", "--property", "latin", "--input", str(f))
    assert code == 0 and out == "0 0 0\n0 1 1\n1 0 1\n1 1 0\n"


@pytest.mark.parametrize("argv", [
    [],
    ["bogus"],
    ["threshold", "--property", "latin"],
    ["threshold", "--property", "latin", "--n", "4"],
    ["threshold", "--property", "latin", "--n", "4", "--p", "1", "--trials", "0"],
    ["decompose", "--graph", "/nonexistent/file"],
    ["spread", "--n", "16", "--part", "9"],
])
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err


def test_decompose_budget_exit(capsys):
    # K_{8,8} is too small for any split to complete
    code, _, err = run(capsys, "decompose", "--n", "8", "--rounds", "1", "--seed", "1")
    assert code == 3 and "budget exhausted" in err
