import os

import numpy as np
import pytest

from granger_dr.config.config import RuntimeConfig
from granger_dr.core.dml import DrSitConfig, dr_sit
from granger_dr.formats.dream3 import read_dream3, read_expression, read_gold
from granger_dr.formats.panel_csv import read_panel_csv, write_panel_csv
from granger_dr.formats.report import (
    SCHEMA_VERSION,
    dump_reports,
    read_report,
    read_reports,
    write_report,
    write_reports,
)
from granger_dr.formats.truth import read_truth, structure_truth, write_truth
from granger_dr.synth.dgp import simulate_panel
from granger_dr.utils.errors import (
    InconsistentSchema,
    ParseError,
    SchemaVersionMismatch,
    UnevenTrajectories,
    UnknownGene,
)

DREAM3_EXPRESSION = (
    "Time\tG1\tG2\tG3\n"
    "0\t0.1\t0.2\t0.3\n"
    "10\t0.4\t0.5\t0.6\n"
    "20\t0.7\t0.8\t0.9\n"
    "0\t1.1\t1.2\t1.3\n"
    "10\t1.4\t1.5\t1.6\n"
    "20\t1.7\t1.8\t1.9\n"
)


def write_text(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestPanelCsv:
    def test_minimal_file(self, tmp_path):
        path = write_text(tmp_path / "p.csv", "traj,time,Y,X1\n0,0,1,2\n0,1,3,4\n1,0,5,6\n1,1,7,8\n")
        panel = read_panel_csv(path)
        assert panel.n_trajectories == 2
        assert panel.variable_names == ("Y", "X1")
        np.testing.assert_array_equal(panel.trajectories[1], [[5.0, 6.0], [7.0, 8.0]])

    def test_single_trajectory(self, tmp_path):
        path = write_text(tmp_path / "p.csv", "traj,time,Y,X1\n0,0,1,2\n0,1,3,4\n0,2,5,6\n0,3,7,8\n")
        assert read_panel_csv(path).lengths == [4]

    def test_target_by_name(self, tmp_path):
        path = write_text(tmp_path / "p.csv", "traj,time,Y,X1\n0,0,1,2\n0,1,3,4\n")
        assert read_panel_csv(path, target="X1").target_index == 1

    def test_out_of_order_time(self, tmp_path):
        path = write_text(tmp_path / "p.csv", "traj,time,Y,X1\n0,1,1,2\n0,0,3,4\n")
        with pytest.raises(ParseError) as info:
            read_panel_csv(path)
        assert ":3:" in str(info.value)

    def test_bad_header(self, tmp_path):
        path = write_text(tmp_path / "p.csv", "run,time,Y,X1\n0,0,1,2\n0,1,3,4\n")
        with pytest.raises(InconsistentSchema):
            read_panel_csv(path)

    def test_duplicate_variable_names(self, tmp_path):
        path = write_text(tmp_path / "p.csv", "traj,time,Y,Y\n0,0,1,2\n0,1,3,4\n")
        with pytest.raises(InconsistentSchema) as info:
            read_panel_csv(path)
        assert info.value.exit_code == 3

    def test_non_numeric_value(self, tmp_path):
        path = write_text(tmp_path / "p.csv", "traj,time,Y,X1\n0,0,1,2\n0,1,abc,4\n")
        with pytest.raises(ParseError) as info:
            read_panel_csv(path)
        assert ":3:" in str(info.value)
        assert info.value.exit_code == 3

    def test_round_trip(self, tmp_path, small_synth):
        panel, _ = simulate_panel(small_synth)
        write_panel_csv(panel, tmp_path / "p.csv")
        again = read_panel_csv(tmp_path / "p.csv")
        assert again.variable_names == panel.variable_names
        for a, b in zip(panel.trajectories, again.trajectories):
            np.testing.assert_array_equal(a, b)

    def test_byte_identical(self, tmp_path, small_synth):
        panel, _ = simulate_panel(small_synth)
        write_panel_csv(panel, tmp_path / "a.csv")
        write_panel_csv(panel, tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


class TestDream3:
    def test_time_reset_splits(self, tmp_path):
        panel = read_expression(write_text(tmp_path / "e.tsv", DREAM3_EXPRESSION))
        assert panel.n_trajectories == 2
        assert panel.lengths == [3, 3]
        assert panel.variable_names == ("G1", "G2", "G3")

    def test_blank_line_splits(self, tmp_path):
        text = DREAM3_EXPRESSION.replace("20\t0.7\t0.8\t0.9\n", "20\t0.7\t0.8\t0.9\n\n")
        panel = read_expression(write_text(tmp_path / "e.tsv", text))
        assert panel.n_trajectories == 2

    def test_fixed_length(self, tmp_path):
        panel = read_expression(write_text(tmp_path / "e.tsv", DREAM3_EXPRESSION), traj_len=3)
        assert panel.n_trajectories == 2
        with pytest.raises(UnevenTrajectories):
            read_expression(tmp_path / "e.tsv", traj_len=4)

    def test_uneven(self, tmp_path):
        text = DREAM3_EXPRESSION + "0\t2.1\t2.2\t2.3\n10\t2.4\t2.5\t2.6\n"
        with pytest.raises(UnevenTrajectories):
            read_expression(write_text(tmp_path / "e.tsv", text))

    def test_duplicate_gene_names(self, tmp_path):
        text = DREAM3_EXPRESSION.replace("G3\n", "G1\n", 1)
        with pytest.raises(InconsistentSchema):
            read_expression(write_text(tmp_path / "e.tsv", text))

    def test_gold(self, tmp_path):
        write_text(tmp_path / "e.tsv", DREAM3_EXPRESSION)
        write_text(tmp_path / "g.tsv", "G1\tG2\t1\nG2\tG3\t0\nG3\tG1\t1\n")
        bundle = read_dream3(tmp_path / "e.tsv", tmp_path / "g.tsv")
        assert bundle.has_gold
        assert bundle.gold_edges == {("G1", "G2"), ("G3", "G1")}

    def test_unknown_gene(self, tmp_path):
        write_text(tmp_path / "g.tsv", "G1\tG999\t1\n")
        with pytest.raises(UnknownGene):
            read_gold(tmp_path / "g.tsv", ("G1", "G2", "G3"))

    def test_bad_label(self, tmp_path):
        write_text(tmp_path / "g.tsv", "G1\tG2\tyes\n")
        with pytest.raises(ParseError):
            read_gold(tmp_path / "g.tsv", ("G1", "G2"))


class TestTruth:
    def test_round_trip(self, tmp_path, small_synth):
        panel, structure = simulate_panel(small_synth)
        write_truth(structure, tmp_path / "t.txt", panel.variable_names)
        truth = read_truth(tmp_path / "t.txt")
        assert truth.names == panel.variable_names
        assert truth.delta == small_synth.delta
        assert truth.edges == structure_truth(structure).edges

    def test_grammar(self, tmp_path):
        write_text(tmp_path / "t.txt", "# names=Y,X1,X2\n1 0 1\nY 2 0\n")
        assert read_truth(tmp_path / "t.txt").edges == {("X1", "X2"), ("X1", "Y")}

    def test_needs_names(self, tmp_path):
        write_text(tmp_path / "t.txt", "1 0 1\n")
        with pytest.raises(ParseError):
            read_truth(tmp_path / "t.txt")

    def test_index_out_of_range(self, tmp_path):
        write_text(tmp_path / "t.txt", "# names=Y,X1\nY 1 4\n")
        with pytest.raises(ParseError) as info:
            read_truth(tmp_path / "t.txt")
        assert ":2:" in str(info.value)


class TestReport:
    @pytest.fixture
    def report(self, lagged_panel):
        return dr_sit(lagged_panel, 0, DrSitConfig(lag=1))

    def test_round_trip(self, tmp_path, report):
        write_report(report, tmp_path / "r.yaml")
        again = read_report(tmp_path / "r.yaml")
        assert again.edges == report.edges
        assert again.config == report.config
        assert again.fold_diagnostics == report.fold_diagnostics
        assert again.variable_names == report.variable_names

    def test_deterministic_bytes(self, lagged_panel, report):
        other = dr_sit(lagged_panel, 0, DrSitConfig(lag=1))
        assert dump_reports([report]) == dump_reports([other])
        assert "elapsed_seconds" not in dump_reports([report])

    def test_timing_is_opt_in(self, tmp_path, report):
        write_reports([report], tmp_path / "r.yaml", include_timing=True)
        assert read_report(tmp_path / "r.yaml").elapsed_seconds == pytest.approx(report.elapsed_seconds)

    def test_multi_report(self, tmp_path, report):
        write_reports([report, report], tmp_path / "r.yaml")
        assert len(read_reports(tmp_path / "r.yaml")) == 2
        with pytest.raises(ParseError):
            read_report(tmp_path / "r.yaml")

    def test_schema_version(self, tmp_path):
        write_text(tmp_path / "r.yaml", f"schema_version: {SCHEMA_VERSION + 1}\nreports: []\n")
        with pytest.raises(SchemaVersionMismatch):
            read_reports(tmp_path / "r.yaml")

    def test_not_a_report(self, tmp_path):
        write_text(tmp_path / "r.yaml", "- just\n- a list\n")
        with pytest.raises(ParseError):
            read_reports(tmp_path / "r.yaml")


@pytest.mark.skipif(
    not RuntimeConfig().DREAM3_DIR, reason="dataset not supplied"
)
class TestOfficialDream3:
    def test_ecoli1_shape(self):
        directory = RuntimeConfig().DREAM3_DIR
        expression = os.path.join(directory, "InSilicoSize100-Ecoli1-trajectories.tsv")
        if not os.path.exists(expression):
            pytest.skip(f"{expression} not found")
        panel = read_expression(expression)
        assert panel.n_trajectories == 46
        assert panel.lengths == [21] * 46
        assert panel.n_variables == 100
