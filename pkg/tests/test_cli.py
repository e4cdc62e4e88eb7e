import csv
import json

import pytest

from ncvem import cli
from ncvem.mesh import lshape_mesh, read_mesh, write_mesh
from ncvem.system import SingularSystemError


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_adaptive_benchmark_run(tmp_path, capsys):
    code = cli.run_cli(["--problem", "lshape", "--mode", "adaptive", "--levels", "5",
                        "--out", str(tmp_path), "--save-mesh"])
    assert code == 0
    levels = rows(tmp_path / "levels.csv")
    assert len(levels) == 5
    assert list(levels[0]) == ["level", "ndof", "hmax", "H1e", "L2e", "eta", "zeta", "lambda",
                               "xi", "H1mu", "L2mu", "eff_index", "seconds"]
    for name in ("components_h1.csv", "components_l2.csv"):
        assert list(rows(tmp_path / name)[0]) == ["level", "ndof", "eta", "zeta", "lambda", "xi"]
    rates = json.loads((tmp_path / "rates.json").read_text())
    assert rates["H1e"] > 0
    mesh = read_mesh(tmp_path / "final.mesh")
    assert mesh.n_edges == int(levels[-1]["ndof"])
    assert "rates vs ndof" in capsys.readouterr().out


def test_square_layer_fifteen_levels(tmp_path):
    assert cli.run_cli(["--problem", "square-layer", "--levels", "15",
                        "--out", str(tmp_path)]) == 0
    assert len(rows(tmp_path / "levels.csv")) == 15
    rate = json.loads((tmp_path / "rates.json").read_text())["H1e"]
    assert 0.35 < rate < 0.65


def test_file_mesh_patch_test(tmp_path):
    path = tmp_path / "l.mesh"
    write_mesh(lshape_mesh(2), path)
    code = cli.run_cli(["--problem", f"file:{path}", "--out", str(tmp_path / "o")])
    assert code == 0
    levels = rows(tmp_path / "o" / "levels.csv")
    assert len(levels) == 1 and float(levels[0]["H1e"]) < 1e-10


def test_file_mesh_with_benchmark_pde(tmp_path):
    path = tmp_path / "l.mesh"
    write_mesh(lshape_mesh(2), path)
    code = cli.run_cli(["--problem", f"file:{path}", "--pde", "lshape", "--levels", "2",
                        "--out", str(tmp_path / "o")])
    assert code == 0 and len(rows(tmp_path / "o" / "levels.csv")) == 2


@pytest.mark.parametrize("argv", [
    ["--problem", "nonsense"],
    ["--problem", "lshape", "--theta", "1.5"],
    ["--problem", "lshape", "--norm", "h3"],
    ["--problem", "lshape", "--levels", "0"],
    ["--problem", "lshape", "--quad-order", "20", "--levels", "1"],
    ["--problem", "file:/nonexistent/mesh"],
    ["--mode", "uniform"],
])
def test_bad_input_exit_code(argv, tmp_path, capsys):
    assert cli.run_cli(argv + ["--out", str(tmp_path)]) == 1
    assert "error" in capsys.readouterr().err


def test_malformed_mesh_file_exit_code(tmp_path):
    path = tmp_path / "bad.mesh"
    path.write_text("ncvem-mesh 1\nvertices 2\n0 0\n")
    assert cli.run_cli(["--problem", f"file:{path}", "--out", str(tmp_path)]) == 1


def test_solver_failure_exit_code(tmp_path, monkeypatch, capsys):
    def broken(*args, **kwargs):
        raise SingularSystemError("near-singular system")

    monkeypatch.setattr("ncvem.adapt.solve", broken)
    assert cli.run_cli(["--problem", "helmholtz", "--out", str(tmp_path)]) == 2
    assert "solver failure" in capsys.readouterr().err


def test_identical_flags_give_identical_csv(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / str(k)
        assert cli.run_cli(["--problem", "helmholtz", "--mode", "uniform", "--levels", "3",
                            "--out", str(out)]) == 0
        outs.append([r[:-1] for r in csv.reader(open(out / "levels.csv"))])
    assert outs[0] == outs[1]
