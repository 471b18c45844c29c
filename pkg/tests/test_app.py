import json

import numpy as np
import pandas as pd
import pytest
from typer.testing import CliRunner

from app import app
from cdma.fixtures import load_fixture
from common.oracle import direct_solve
from common.repository import write_matrix_market, write_vector
from tests.conftest import MEASURED_COUNTS, identity

runner = CliRunner()


@pytest.fixture
def r3_files(tmp_path):
    R = load_fixture("R3").R
    write_matrix_market(R, tmp_path / "R3.mtx")
    write_vector(np.ones(3), tmp_path / "b.txt")
    return tmp_path / "R3.mtx", tmp_path / "b.txt"


@pytest.fixture
def divergent_files(tmp_path):
    (tmp_path / "A.mtx").write_text("%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 1\n2 1 2\n2 2 1\n")
    write_vector([1.0, 1.0], tmp_path / "b.txt")
    return tmp_path / "A.mtx", tmp_path / "b.txt"


class TestSolve:
    def test_solves_matrix_files(self, r3_files, tmp_path):
        matrix, rhs = r3_files
        out = tmp_path / "x.json"
        result = runner.invoke(app, ["solve", "--matrix", str(matrix), "--rhs", str(rhs),
                                     "--format", "json", "--out", str(out)])
        assert result.exit_code == 0
        payload = json.loads(out.read_text())
        assert payload["converged"] is True
        assert payload["method"] == "gabp-serial"
        assert payload["iterations"] == MEASURED_COUNTS["gabp-serial"][0]
        np.testing.assert_allclose(payload["x"], direct_solve(load_fixture("R3").R, np.ones(3)), atol=1e-5)

    def test_text_output(self):
        result = runner.invoke(app, ["solve", "--fixture", "R4", "--method", "gs"])
        assert result.exit_code == 0
        assert "method: gs" in result.output
        assert "converged: true" in result.output

    def test_non_convergence_exits_with_two(self, divergent_files):
        matrix, rhs = divergent_files
        result = runner.invoke(app, ["solve", "--matrix", str(matrix), "--rhs", str(rhs),
                                     "--method", "jacobi", "--max-iters", "200"])
        assert result.exit_code == 2
        assert "converged: false" in result.output

    def test_identity_takes_one_iteration(self, tmp_path):
        write_matrix_market(identity(3), tmp_path / "I.mtx")
        write_vector([1.0, 2.0, 3.0], tmp_path / "b.txt")
        out = tmp_path / "x.json"
        result = runner.invoke(app, ["solve", "--matrix", str(tmp_path / "I.mtx"), "--rhs", str(tmp_path / "b.txt"),
                                     "--format", "json", "--out", str(out)])
        assert result.exit_code == 0
        payload = json.loads(out.read_text())
        assert payload["iterations"] == 1
        assert payload["x"] == [1.0, 2.0, 3.0]

    def test_sor_with_automatic_weight(self, tmp_path):
        out = tmp_path / "x.json"
        result = runner.invoke(app, ["solve", "--fixture", "R3", "--method", "sor", "--omega", "auto",
                                     "--format", "json", "--out", str(out)])
        assert result.exit_code == 0
        assert 1.0 < json.loads(out.read_text())["metadata"]["omega"] < 2.0

    def test_unknown_method(self):
        result = runner.invoke(app, ["solve", "--fixture", "R3", "--method", "cg"])
        assert result.exit_code == 1
        assert "Unknown method: cg" in result.output

    def test_parse_error_names_file_and_line(self, tmp_path):
        bad = tmp_path / "bad.mtx"
        bad.write_text("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1\n2 2 oops\n")
        write_vector([1.0, 1.0], tmp_path / "b.txt")
        result = runner.invoke(app, ["solve", "--matrix", str(bad), "--rhs", str(tmp_path / "b.txt")])
        assert result.exit_code == 1
        assert "bad.mtx:4" in result.output

    def test_matrix_without_rhs(self, r3_files):
        matrix, _ = r3_files
        result = runner.invoke(app, ["solve", "--matrix", str(matrix)])
        assert result.exit_code == 1

    def test_invalid_omega(self):
        result = runner.invoke(app, ["solve", "--fixture", "R3", "--method", "sor", "--omega", "2.5"])
        assert result.exit_code == 1


class TestDiagnose:
    def test_fixture_verdict(self):
        result = runner.invoke(app, ["diagnose", "--fixture", "R3"])
        assert result.exit_code == 0
        assert "rho(|I-A|): 0.9008" in result.output
        assert "GaBP convergence guaranteed" in result.output

    def test_no_guarantee(self, divergent_files):
        matrix, _ = divergent_files
        result = runner.invoke(app, ["diagnose", "--matrix", str(matrix)])
        assert result.exit_code == 0
        assert "no guarantee (may still converge)" in result.output

    def test_json(self, tmp_path):
        out = tmp_path / "d.json"
        result = runner.invoke(app, ["diagnose", "--fixture", "R4", "--format", "json", "--out", str(out)])
        assert result.exit_code == 0
        payload = json.loads(out.read_text())
        assert payload["spectral_radius_abs_shift"] == pytest.approx(0.8747, abs=5e-5)
        assert payload["strictly_diagonally_dominant"] is False


class TestBench:
    def test_text_table(self, tmp_path):
        out = tmp_path / "bench.txt"
        result = runner.invoke(app, ["bench", "--out", str(out)])
        assert result.exit_code == 0
        text = out.read_text()
        for label in ("Jacobi", "GS", "Parallel GaBP", "Optimal SOR", "Serial GaBP",
                      "Jacobi+Steffensen", "Parallel GaBP+Steffensen", "Serial GaBP+Steffensen"):
            assert label in text

    def test_json_is_deterministic(self, tmp_path):
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        assert runner.invoke(app, ["bench", "--format", "json", "--out", str(first)]).exit_code == 0
        assert runner.invoke(app, ["bench", "--format", "json", "--out", str(second)]).exit_code == 0
        assert first.read_text() == second.read_text()
        assert len(json.loads(first.read_text())["cells"]) == 16


class TestTrace:
    def test_jacobi_trace_on_R3(self, r3_files, tmp_path):
        matrix, rhs = r3_files
        out = tmp_path / "trace.csv"
        result = runner.invoke(app, ["trace", "--matrix", str(matrix), "--rhs", str(rhs),
                                     "--method", "jacobi", "--out", str(out)])
        assert result.exit_code == 0
        frame = pd.read_csv(out)
        assert list(frame.columns) == ["iter", "x_1", "x_2", "x_3"]
        assert len(frame) - 1 == MEASURED_COUNTS["jacobi"][0]
        np.testing.assert_array_equal(frame.loc[0, ["x_1", "x_2", "x_3"]].to_numpy(dtype=float), np.ones(3))
        assert frame["iter"].tolist() == list(range(len(frame)))

    def test_non_converging_trace_exits_with_two(self, divergent_files, tmp_path):
        matrix, rhs = divergent_files
        out = tmp_path / "trace.csv"
        result = runner.invoke(app, ["trace", "--matrix", str(matrix), "--rhs", str(rhs),
                                     "--method", "jacobi", "--max-iters", "5", "--out", str(out)])
        assert result.exit_code == 2
        assert len(pd.read_csv(out)) == 6
