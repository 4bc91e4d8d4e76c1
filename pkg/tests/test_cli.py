import json
import subprocess
import sys

import pytest

from eonbench.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def traffic(tmp_path, capsys):
    path = tmp_path / "t.csv"
    assert run(capsys, "gen", "--topology", "six_node", "--demands", "6", "--seed", "4", "-o", str(path))[0] == 0
    return path


def test_gen_is_byte_identical(tmp_path, capsys, traffic):
    again = tmp_path / "again.csv"
    run(capsys, "gen", "--topology", "six_node", "--demands", "6", "--seed", "4", "-o", str(again))
    assert again.read_bytes() == traffic.read_bytes()
    assert traffic.read_text().splitlines()[0] == "id,src,dst,slices,rate_gbps"


def test_solve_then_validate(tmp_path, capsys, traffic):
    sol, outcome = tmp_path / "s.json", tmp_path / "o.json"
    code, out, _ = run(
        capsys, "solve", "--topology", "six_node", "--traffic", str(traffic),
        "--problem", "rsa", "--method", "exact", "-o", str(sol), "--outcome", str(outcome),
    )
    assert code == 0 and out.startswith("status Optimal")
    first = outcome.read_bytes()
    code, out, _ = run(capsys, "validate", "--topology", "six_node", "--traffic", str(traffic), "--solution", str(sol))
    assert code == 0 and out.strip() == "0 violations"
    run(
        capsys, "solve", "--topology", "six_node", "--traffic", str(traffic),
        "--problem", "rsa", "--method", "exact", "--outcome", str(outcome),
    )
    assert outcome.read_bytes() == first


def test_validate_flags_tampered_solution(tmp_path, capsys, traffic):
    sol = tmp_path / "s.json"
    run(capsys, "solve", "--topology", "six_node", "--traffic", str(traffic),
        "--problem", "rsa", "--method", "msf", "-o", str(sol))
    data = json.loads(sol.read_text())
    first = next(iter(data["routes"].values())) if isinstance(data["routes"], dict) else data["routes"][0]
    first["start"] = 10_000
    sol.write_text(json.dumps(data))
    code, out, _ = run(capsys, "validate", "--topology", "six_node", "--traffic", str(traffic),
                       "--solution", str(sol), "--json")
    assert code == 3 and json.loads(out)["count"] >= 1


def test_ga_json_output(capsys, traffic):
    code, out, _ = run(
        capsys, "solve", "--topology", "six_node", "--traffic", str(traffic), "--problem", "rwa",
        "--method", "ga", "--population", "6", "--generations", "3", "--json",
    )
    data = json.loads(out)
    assert code == 0 and data["status"] == "Heuristic" and data["objective"] >= data["lower_bound"]


def test_emit_lp_header(tmp_path, capsys, traffic):
    lp = tmp_path / "m.lp"
    code, out, _ = run(capsys, "emit-lp", "--topology", "six_node", "--traffic", str(traffic),
                       "--slots", "12", "-o", str(lp))
    assert code == 0
    assert out.splitlines()[0].startswith("RSA model: 6 nodes")
    assert "variables:" in out and "demand 0:" in out
    assert lp.read_text().rstrip().endswith("End")


def test_exit_codes(tmp_path, capsys, traffic):
    assert run(capsys, "solve", "--topology", "six_node", "--traffic", str(tmp_path / "missing.csv"),
               "--problem", "rsa", "--method", "msf")[0] == 1
    assert run(capsys, "gen", "--topology", "nowhere.json", "--demands", "2", "-o", str(tmp_path / "x"))[0] == 1
    assert run(capsys, "solve", "--topology", "six_node", "--traffic", str(traffic),
               "--problem", "rsa", "--method", "ga")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["gen", "--topology", "six_node", "--demands", "0", "-o", "x"])
    assert exc.value.code == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("id,src,dst,slices,rate_gbps\n0,1,1,2,50\n")
    assert run(capsys, "solve", "--topology", "six_node", "--traffic", str(bad),
               "--problem", "rsa", "--method", "msf")[0] == 1


def test_bench_small(tmp_path, capsys):
    code, out, _ = run(capsys, "bench", "--experiment", "small", "--instances", "2",
                       "--out-dir", str(tmp_path), "--json")
    assert code == 0
    data = json.loads(out)
    assert data["violations"] == [] and data["rsa_mean_gap"] >= 0
    for suffix in ("csv", "md", "config.json"):
        assert (tmp_path / f"small.{suffix}").exists()
    assert json.loads((tmp_path / "small.config.json").read_text())["instance_count"] == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "eonbench", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "bench" in res.stdout
