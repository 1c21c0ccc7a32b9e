import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from halfwsne import approximate_wsne
from halfwsne.cli import main
from halfwsne.gamefile import generate, read_game, write_game


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def mp_file(tmp_path):
    path = tmp_path / "mp.json"
    path.write_text(json.dumps({"rows": 2, "cols": 2, "R": [[1, 0], [0, 1]], "C": [[0, 1], [1, 0]]}))
    return path


def test_solve_and_verify_agree(capsys, tmp_path, mp_file):
    out_file = tmp_path / "sol.json"
    code, out, _ = run(capsys, "solve", "--game", mp_file, "--delta", 0.5, "--json", "--out", out_file)
    assert code == 0
    sol = json.loads(out)
    assert sol["branch"] == "3a" and sol["certified_epsilon"] == 0
    code, out, _ = run(capsys, "verify", "--game", mp_file, "--profile", out_file, "--json")
    assert code == 0 and json.loads(out)["wsne_epsilon"] == sol["certified_epsilon"]


def test_generate_round_trip(capsys, tmp_path):
    path = tmp_path / "g.json"
    assert run(capsys, "generate", "--kind", "uniform", "--rows", 5, "--cols", 4, "--seed", 3, "--out", path)[0] == 0
    g, rec = read_game(path)
    mem = generate("uniform", 5, 4, 3)
    assert rec is None and np.array_equal(g.R, mem.R) and np.array_equal(g.C, mem.C)
    a, b = approximate_wsne(g, 0.5), approximate_wsne(mem, 0.5)
    assert a.profile.row.to_list() == b.profile.row.to_list() and a.branch == b.branch
    write_game(tmp_path / "h.json", g)
    assert (tmp_path / "h.json").read_bytes() == path.read_bytes()


def test_generate_is_byte_identical(capsys):
    first = run(capsys, "generate", "--kind", "force-3c", "--rows", 4, "--seed", 7)[1]
    second = run(capsys, "generate", "--kind", "force-3c", "--rows", 4, "--seed", 7)[1]
    assert first == second


def test_unnormalized_input_is_normalized(capsys, tmp_path):
    path = tmp_path / "raw.json"
    path.write_text(json.dumps({"rows": 2, "cols": 2, "R": [[2, 4], [4, 2]], "C": [[4, 2], [2, 4]]}))
    code, out, _ = run(capsys, "solve", "--game", path, "--delta", 0.5, "--json")
    assert code == 0 and json.loads(out)["normalized"] is True


MALFORMED = [
    "not json",
    "[1, 2]",
    '{"rows": 2, "cols": 2, "R": [[0, 1]], "C": [[0, 1], [1, 0]]}',
    '{"rows": 0, "cols": 2, "R": [], "C": []}',
    '{"rows": 1, "cols": 1, "R": [[NaN]], "C": [[0]]}',
    '{"rows": 1, "cols": 1, "R": [[Infinity]], "C": [[0]]}',
    '{"rows": 1, "cols": 1, "R": [["a"]], "C": [[0]]}',
    '{"rows": 1, "cols": 1, "R": [[true]], "C": [[0]]}',
    '{"rows": "2", "cols": 1, "R": [[0], [1]], "C": [[0], [1]]}',
    '{"rows": 1, "cols": 2, "R": [[0, 1]]}',
]


@pytest.mark.parametrize("text", MALFORMED)
def test_malformed_games_exit_1(capsys, tmp_path, text):
    path = tmp_path / "bad.json"
    path.write_text(text)
    assert run(capsys, "solve", "--game", path, "--delta", 0.5)[0] == 1


def test_missing_file_and_bad_profile(capsys, tmp_path, mp_file):
    assert run(capsys, "solve", "--game", tmp_path / "nope.json", "--delta", 0.5)[0] == 1
    prof = tmp_path / "p.json"
    prof.write_text('{"x": [0.5, 0.6], "y": [1, 0]}')
    assert run(capsys, "verify", "--game", mp_file, "--profile", prof)[0] == 1
    prof.write_text('{"x": [1, 0, 0], "y": [1, 0]}')
    assert run(capsys, "verify", "--game", mp_file, "--profile", prof)[0] == 1
    prof.write_text('{"y": [1, 0]}')
    assert run(capsys, "verify", "--game", mp_file, "--profile", prof)[0] == 1


def test_verify_breach_exit_2(capsys, tmp_path, mp_file):
    prof = tmp_path / "p.json"
    prof.write_text('{"x": [1, 0], "y": [1, 0]}')
    assert run(capsys, "verify", "--game", mp_file, "--profile", prof, "--delta", 0.2)[0] == 2
    assert run(capsys, "verify", "--game", mp_file, "--profile", prof)[0] == 0


def test_bad_flags_are_usage_errors(capsys, mp_file):
    with pytest.raises(SystemExit):
        main(["solve", "--game", str(mp_file), "--delta", "1.5"])
    with pytest.raises(SystemExit):
        main(["bench", "--sizes", "3,a", "--delta", "0.5"])


def test_solve_query(capsys, mp_file):
    code, out, _ = run(capsys, "solve-query", "--game", mp_file, "--delta", 0.5, "--epsilon", 0.1,
                       "--audit", "--json")
    res = json.loads(out)
    assert code == 0 and res["branch"] == "3a" and res["audited_epsilon"] == 0
    assert res["queries"]["zero_sum_R"] == res["queries"]["zero_sum_C"] == 4


def test_bench_rows_and_bounds(capsys, tmp_path):
    path = tmp_path / "b.csv"
    code, _, _ = run(capsys, "bench", "--kind", "uniform", "--sizes", "5,10", "--count", 20,
                     "--delta", 0.5, "--seed", 1, "--csv", path)
    lines = path.read_text().splitlines()
    assert code == 0 and len(lines) == 41
    header = lines[0].split(",")
    assert header[:3] == ["instance_id", "m", "n"]
    col = header.index("certified_epsilon")
    ids = [int(l.split(",")[0]) for l in lines[1:]]
    assert ids == list(range(40))
    assert all(float(l.split(",")[col]) <= 1.0 + 1e-6 for l in lines[1:])


def test_bench_parallel_matches_serial(capsys):
    args = ["bench", "--sizes", "3x4", "--count", 6, "--delta", 0.5, "--seed", 2]
    serial = run(capsys, *args)[1]
    parallel = run(capsys, *args, "--jobs", 2)[1]
    assert serial == parallel


def test_bench_query_mode(capsys):
    code, out, _ = run(capsys, "bench", "--sizes", "6", "--count", 3, "--delta", 0.5, "--mode", "query",
                       "--epsilon", 0.2, "--audit", "--seed", 5)
    rows = out.splitlines()[1:]
    assert code == 0 and len(rows) == 3
    assert all(r.endswith(",query") for r in rows)
    assert run(capsys, "bench", "--sizes", "6", "--delta", 0.5, "--mode", "query")[0] == 1


def test_entry_point_runs(tmp_path, mp_file):
    res = subprocess.run([sys.executable, "-m", "halfwsne", "solve", "--game", str(mp_file), "--delta", "0.5"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "branch: 3a" in res.stdout


def test_outputs_hash_stable(capsys, mp_file):
    def digest():
        h = hashlib.sha256()
        h.update(run(capsys, "solve", "--game", mp_file, "--delta", 0.5, "--json")[1].encode())
        h.update(run(capsys, "solve-query", "--game", mp_file, "--delta", 0.5, "--epsilon", 0.2,
                     "--seed", 3, "--audit", "--json")[1].encode())
        h.update(run(capsys, "bench", "--sizes", "4", "--count", 5, "--delta", 0.5, "--seed", 3)[1].encode())
        return h.hexdigest()
    assert digest() == digest()


def test_solve_query_mwu_json(capsys, tmp_path):
    path = tmp_path / "g.json"
    write_game(path, generate("uniform", 8, 8, 1))
    code, out, _ = run(capsys, "solve-query", "--game", path, "--delta", 0.5, "--epsilon", 0.3,
                       "--zs-solver", "mwu", "--audit", "--json")
    res = json.loads(out)
    assert code == 0 and isinstance(res["zero_sum_low_confidence"], bool)
