import json
from itertools import combinations

import numpy as np
import pytest

from cdma import fixtures as fixture_module
from cdma.bench import DIVERGED_CELL, BENCH_ROWS, bench_table1
from cdma.detector import decorrelate, signum
from cdma.fixtures import load_fixture, match_gold_codes
from cdma.gold_codes import correlation_matrix, find_code_subset, gold_codes_n7, lfsr
from common.config import SolverConfig
from common.errors import Diverged, FixtureIntegrityError
from common.oracle import direct_solve
from tests.conftest import MEASURED_COUNTS, REFERENCE_COUNTS, REPRODUCED_CELLS, identity

GOLD_VALUES = {-1, 3, -5}


class TestGoldCodes:
    def test_m_sequences(self):
        assert lfsr((0, 1), (1, 0, 0), 7) == [1, 0, 0, 1, 0, 1, 1]
        assert lfsr((0, 2), (1, 0, 0), 7) == [1, 0, 0, 1, 1, 1, 0]

    def test_family_shape(self):
        codes = gold_codes_n7()
        assert len(codes) == 9
        assert codes.length == 7
        assert all(set(np.unique(c)) <= {-1, 1} for c in codes.codes)
        assert len({tuple(c) for c in codes.codes}) == 9

    def test_three_valued_cross_correlation(self):
        codes = gold_codes_n7().codes
        for a, b in combinations(codes, 2):
            assert int(a.astype(int) @ b.astype(int)) in GOLD_VALUES
        for c in codes:
            assert int(c.astype(int) @ c.astype(int)) == 7

    def test_correlation_matrix(self):
        codes = gold_codes_n7()
        R = correlation_matrix([codes[0], codes[1], codes[4]])
        np.testing.assert_allclose(R.diagonal(), np.ones(3))
        for i, j in combinations(range(3), 2):
            assert round(R.get(i, j) * 7) in GOLD_VALUES

    def test_single_code_and_orthogonal_codes(self):
        assert correlation_matrix([gold_codes_n7()[0]]).to_dense().tolist() == [[1.0]]
        walsh = [[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1]]
        np.testing.assert_allclose(correlation_matrix(walsh).to_dense(), np.eye(3))

    def test_sign_flips(self):
        codes = gold_codes_n7()
        plain = correlation_matrix([codes[0], codes[1]])
        flipped = correlation_matrix([codes[0], codes[1]], signs=[1, -1])
        assert flipped.get(0, 1) == -plain.get(0, 1)

    def test_subset_search_recovers_a_known_subset(self):
        codes = gold_codes_n7()
        target = correlation_matrix([codes[2], codes[5], codes[7]], signs=[1, -1, 1])
        picks = find_code_subset(codes, target)
        assert picks is not None
        found = correlation_matrix([np.roll(codes[k], -s) for k, s, _ in picks], signs=[sign for _, _, sign in picks])
        np.testing.assert_allclose(found.to_dense(), target.to_dense(), atol=1e-12)

    def test_subset_search_reports_no_match(self):
        assert find_code_subset(gold_codes_n7(), identity(2)) is None

    @pytest.mark.parametrize("name", ["R3", "R4"])
    def test_fixture_search_result_is_consistent(self, name):
        R = load_fixture(name).R
        picks = find_code_subset(gold_codes_n7(), R, allow_shifts=True)
        if picks is not None:
            codes = gold_codes_n7()
            found = correlation_matrix([np.roll(codes[k], -s) for k, s, _ in picks],
                                       signs=[sign for _, _, sign in picks])
            np.testing.assert_allclose(found.to_dense(), R.to_dense(), atol=1e-12)


class TestFixtures:
    @pytest.mark.parametrize("name, expected", [("R3", 0.9008), ("R4", 0.8747)])
    def test_structure(self, name, expected):
        fixture = load_fixture(name)
        assert fixture.expected_rho == expected
        np.testing.assert_array_equal(fixture.R.diagonal(), np.ones(fixture.n))
        dense = fixture.R.to_dense()
        off = dense[~np.eye(fixture.n, dtype=bool)]
        assert set(np.round(off * 7).astype(int)) <= GOLD_VALUES

    def test_integrity_gate(self, monkeypatch):
        monkeypatch.setitem(fixture_module._FIXTURES, "R3", (fixture_module._R3, 0.5))
        with pytest.raises(FixtureIntegrityError):
            load_fixture("R3")

    def test_unknown_fixture(self):
        with pytest.raises(KeyError):
            load_fixture("R5")

    @pytest.mark.parametrize("name", ["R3", "R4"])
    def test_gold_search_outcome_is_kept(self, name):
        fixture = load_fixture(name)
        assert fixture.codes == find_code_subset(gold_codes_n7(), fixture.R, allow_shifts=True)
        if fixture.codes is None:
            assert fixture.code_source == "embedded"
        else:
            assert len(fixture.codes) == fixture.n
            assert fixture.code_source.startswith("g")

    def test_unverified_load_skips_the_search(self, monkeypatch):
        monkeypatch.setattr(fixture_module, "match_gold_codes", lambda name, R: pytest.fail("searched"))
        assert load_fixture("R3", verify=False).codes is None

    def test_fallback_to_embedded_constants_warns(self, caplog):
        with caplog.at_level("WARNING"):
            assert match_gold_codes("I2", identity(2)) is None
        assert "embedded constants" in caplog.text

    def test_matching_subset_is_logged(self, caplog):
        codes = gold_codes_n7()
        R = correlation_matrix([codes[0], codes[3]], signs=[1, -1])
        with caplog.at_level("INFO"):
            picks = match_gold_codes("pair", R)
        assert picks is not None
        assert "reproduced by Gold codes" in caplog.text


class TestDetector:
    def test_signum_of_zero_is_plus_one(self):
        np.testing.assert_array_equal(signum([0.0, -0.0, -1e-300, 2.0]), [1, 1, -1, 1])

    def test_identity(self):
        for solver in ("gabp", "direct"):
            np.testing.assert_array_equal(decorrelate(identity(2), [-0.3, 2.0], solver=solver), [-1, 1])

    @pytest.mark.parametrize("name", ["R3", "R4"])
    def test_all_ones_matches_oracle(self, name):
        R = load_fixture(name).R
        y = np.ones(R.n)
        np.testing.assert_array_equal(decorrelate(R, y), signum(direct_solve(R, y)))

    @pytest.mark.parametrize("name", ["R3", "R4"])
    def test_random_observations_match_oracle(self, name):
        R = load_fixture(name).R
        rng = np.random.default_rng(42)
        config = SolverConfig(epsilon=1e-10)
        for _ in range(100):
            y = rng.standard_normal(R.n)
            np.testing.assert_array_equal(decorrelate(R, y, config=config), decorrelate(R, y, solver="direct"))

    def test_non_convergence_raises(self):
        with pytest.raises(Diverged):
            decorrelate(load_fixture("R3").R, np.ones(3), config=SolverConfig(max_iters=2))

    def test_unknown_solver(self):
        with pytest.raises(ValueError):
            decorrelate(identity(2), [1.0, 1.0], solver="mmse")


@pytest.fixture(scope="module")
def report():
    return bench_table1()


class TestBench:
    @pytest.mark.parametrize("method", sorted(MEASURED_COUNTS))
    def test_measured_cells(self, report, method):
        for fixture, expected in zip(("R3", "R4"), MEASURED_COUNTS[method]):
            cell = report.cell(method, fixture)
            assert cell.converged
            assert cell.iterations == expected

    @pytest.mark.parametrize("method, fixture", REPRODUCED_CELLS)
    def test_reproduced_cells_within_two_iterations(self, report, method, fixture):
        reference = REFERENCE_COUNTS[method][("R3", "R4").index(fixture)]
        assert abs(report.cell(method, fixture).iterations - reference) <= 2

    @pytest.mark.parametrize("fixture", ["R3", "R4"])
    @pytest.mark.parametrize("schedule", ["gabp-parallel", "gabp-serial"])
    def test_accelerated_gabp_cells(self, report, schedule, fixture):
        cell = report.cell(f"{schedule}+steffensen", fixture)
        assert cell.converged
        assert cell.iterations <= report.cell(schedule, fixture).iterations

    def test_ordering_claims(self, report):
        assert report.cell("gabp-serial", "R3").iterations <= report.cell("sor", "R3").iterations
        # optimal SOR edges out serial GaBP by one sweep on R4
        assert report.cell("gabp-serial", "R4").iterations == report.cell("sor", "R4").iterations + 1
        for fixture in ("R3", "R4"):
            serial = report.cell("gabp-serial", fixture).iterations
            assert report.cell("gabp-serial+steffensen", fixture).iterations <= serial
            assert serial < report.cell("gabp-parallel", fixture).iterations

    def test_text_table_shape(self, report):
        frame = report.to_frame()
        assert frame.shape == (8, 2)
        assert list(frame.columns) == ["R3", "R4"]
        text = report.to_text()
        for label, _ in BENCH_ROWS:
            assert label in text
        assert "omega=" in text

    def test_json_records(self, report):
        payload = json.loads(report.to_json())
        assert len(payload["cells"]) == 16
        assert payload["epsilon"] == 1e-6
        assert set(payload["metadata"]["omega"]) == {"R3", "R4"}
        assert set(payload["metadata"]["gold_codes"]) == {"R3", "R4"}
        accelerated = [c for c in payload["cells"] if c["method"] == "jacobi+steffensen" and c["fixture"] == "R4"]
        assert accelerated[0]["iterations"] == MEASURED_COUNTS["jacobi+steffensen"][1]
        assert accelerated[0]["converged"] is True

    def test_repeated_runs_are_identical(self, report):
        assert bench_table1().to_json() == report.to_json()

    def test_capped_cells_show_a_dash(self):
        capped = bench_table1(max_iters=3, fixtures=[load_fixture("R3")])
        cell = capped.cell("jacobi", "R3")
        assert not cell.converged
        assert cell.display == DIVERGED_CELL
        assert cell.record()["iterations"] is None
