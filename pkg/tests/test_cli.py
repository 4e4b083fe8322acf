import json
import math
import subprocess
import sys

import pytest

from spectral_bounds import bounds as B
from spectral_bounds.battery import GROUPS, bounds_suite, Battery
from spectral_bounds.cli import main
from spectral_bounds.domain import generate_domain
from spectral_bounds.mesh import triangulate, write_mesh

from conftest import PI2, square_spec


@pytest.fixture
def files(tmp_path):
    sq = tmp_path / "square.json"
    sq.write_text(json.dumps(square_spec().to_dict()))
    db = tmp_path / "dumbbell.json"
    db.write_text(json.dumps({"kind": "dumbbell",
                              "parameters": {"ball_radius": 1.0, "neck_width": 0.2, "neck_length": 1.0}}))
    good = tmp_path / "good.mesh"
    write_mesh(triangulate(generate_domain(square_spec()), 0.2), good)
    bad = tmp_path / "bad.mesh"
    bad.write_text(good.read_text()[: len(good.read_text()) // 2] + "\nnot a number\n")
    return {"square": str(sq), "dumbbell": str(db), "good": str(good), "bad": str(bad), "dir": tmp_path}


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_spectrum_domain(files, capsys):
    code, out, _ = run(capsys, "spectrum", "--domain", files["square"], "--bc", "dirichlet", "--h", "0.1",
                       "--kmax", "4")
    assert code == 0
    data = json.loads(out)
    assert data["bc"] == "dirichlet" and data["extrapolated"][0] == pytest.approx(2 * PI2, rel=5e-3)


def test_spectrum_mesh_files(files, capsys):
    code, out, _ = run(capsys, "spectrum", "--mesh", files["good"], "--bc", "neumann", "--kmax", "3")
    assert code == 0 and json.loads(out)["eigenvalues"][0] == pytest.approx(0.0, abs=1e-8)
    code, _, err = run(capsys, "spectrum", "--mesh", files["bad"], "--kmax", "3")
    assert code == 1 and "MeshError" in err


def test_usage_errors(files, capsys):
    assert run(capsys, "invariants", "--domain", str(files["dir"] / "missing.json"))[0] == 2
    assert run(capsys, "verify-all", "--filter", "no_such_check")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    bad = files["dir"] / "bad.json"
    bad.write_text('{"kind": "polygon", "parameters": {"vertices": [[0, 0], [1, 1]]}}')
    assert run(capsys, "invariants", "--domain", str(bad))[0] == 2


def test_invariants(files, capsys):
    code, out, _ = run(capsys, "invariants", "--domain", files["square"])
    inv = json.loads(out)
    assert code == 0 and inv["d"] == pytest.approx(math.sqrt(2)) and inv["convex"]


def test_bounds_filter(files, capsys):
    code, out, _ = run(capsys, "bounds", "--domain", files["square"], "--filter", "ourcheng", "--h", "0.1")
    lines = out.strip().splitlines()
    assert code == 0 and len(lines) == 11
    assert all(l.startswith("cheng_neumann_convex,") for l in lines[1:])


def test_bounds_refused_on_nonconvex(files, capsys):
    code, out, err = run(capsys, "bounds", "--domain", files["dumbbell"], "--filter", "li_yau", "--h", "0.1")
    assert code == 0 and len(out.strip().splitlines()) == 1 and "skipped li_yau" in err


def test_covering_and_sweep(files, capsys):
    code, out, _ = run(capsys, "covering", "--domain", files["square"], "--kmax", "4")
    rep = json.loads(out)
    assert code == 0 and rep["passed"] and len(rep["packings"]) == 3
    out_dir = files["dir"] / "sweep"
    code, _, err = run(capsys, "sweep", "--family", "torus", "--out", str(out_dir))
    assert code == 0 and (out_dir / "necessity_torus.csv").exists() and (out_dir / "necessity_torus.dat").exists()
    assert run(capsys, "sweep", "--family", "torus", "--values", "a,b")[0] == 2


def test_verify_all_filter_deterministic(capsys):
    a = run(capsys, "verify-all", "--filter", "ourcheng", "--no-times", "--quiet")
    b = run(capsys, "verify-all", "--filter", "ourcheng", "--no-times", "--quiet")
    assert a[0] == 0 and a[1] == b[1]
    tags = [l.split()[0] for l in a[1].splitlines()[1:-1]]
    assert tags == ["cheng_neumann_convex", "cheng_neumann_convex:corpus_max"]


def test_verify_all_reports_broken_mesh(files, capsys):
    code, out, _ = run(capsys, "verify-all", "--filter", "weyl", "--mesh", files["bad"], "--mesh", files["good"],
                       "--no-times", "--quiet")
    assert code == 1
    assert "FAIL" in out and "bad.mesh" in out


def test_every_bound_has_a_row():
    tags = {r.tag for r in bounds_suite(Battery(0))}
    assert set(B.BOUND_IDS) <= tags
    grouped = {t for tags, _ in GROUPS for t in tags}
    assert set(B.BOUND_IDS) <= grouped


def _scenario(path, **kw):
    data = {"name": "mini", "domains": [
        {"id": "sq", "kind": "polygon", "parameters": {"vertices": [[0, 0], [1, 0], [1, 1], [0, 1]]}, "convex_hint": True},
        {"id": "disk", "kind": "disk", "parameters": {"radius": 1.0}, "convex_hint": True}],
        "bc": ["neumann", "dirichlet"], "h": [0.1], "k_max": 6, "bounds": ["ourcheng", "cheng_yang", "li_yau"]}
    data.update(kw)
    path.write_text(json.dumps(data))
    return str(path)


def test_run_scenario_parallel_matches_serial(tmp_path, capsys):
    scen = _scenario(tmp_path / "mini.json")
    assert run(capsys, "run", scen, "--out", str(tmp_path / "a"), "--jobs", "1")[0] == 0
    assert run(capsys, "run", scen, "--out", str(tmp_path / "b"), "--jobs", "2")[0] == 0
    fa = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    fb = sorted(p.relative_to(tmp_path / "b") for p in (tmp_path / "b").rglob("*") if p.is_file())
    assert fa == fb and len(fa) > 4
    for f in fa:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["checks"]["failed"] == 0 and summary["domains"] == ["disk", "sq"]


def test_run_scenario_errors(tmp_path, capsys):
    assert run(capsys, "run", _scenario(tmp_path / "e.json", domains=[]), "--out", str(tmp_path / "e"))[0] == 0
    assert run(capsys, "run", _scenario(tmp_path / "u.json", bounds=["nope"]), "--out", str(tmp_path / "u"))[0] == 2
    assert run(capsys, "run", _scenario(tmp_path / "x.json", colour="red"), "--out", str(tmp_path / "x"))[0] == 2
    assert run(capsys, "run", str(tmp_path / "missing.json"))[0] == 2


def test_bundled_necessity_scenario(tmp_path, capsys):
    code, out, _ = run(capsys, "run", "necessity_dumbbell", "--out", str(tmp_path))
    assert code == 0 and (tmp_path / "necessity_dumbbell.csv").exists()


def test_console_script(files):
    res = subprocess.run([sys.executable, "-m", "spectral_bounds.cli", "invariants", "--domain", files["square"]],
                         capture_output=True, text=True, timeout=120)
    assert res.returncode == 0 and json.loads(res.stdout)["vol"] == pytest.approx(1.0)
