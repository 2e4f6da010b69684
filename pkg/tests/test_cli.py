# Standard Library Imports
import json
from pathlib import Path

# Third-Party Library Imports
import pandas as pd
import pytest

# Local Application Imports
from src.cli import build_parser, normalize_sweep, run_command
from src.common import AlgorithmSettings, Config, SolverSettings, SweepRow
from src.common.constants import EXIT_BOUND_ONLY, EXIT_GLOBAL_OPTIMAL, EXIT_INFEASIBLE, EXIT_USAGE
from src.main import main

INVERTED_LIMITS = """mpc.baseMVA = 100;
mpc.bus = [
1 3 0 0 0 0 1 1 0 230 1 1.1 0.9;
2 1 50 20 0 0 1 1 0 230 1 0.9 1.0;
];
mpc.gen = [
1 0 0 100 -100 1 100 1 200 0;
];
mpc.branch = [
1 2 0.01 0.1 0 0 0 0 0 0 1 -360 360;
];
"""


@pytest.fixture
def config(tmp_path) -> Config:
    return Config(
        app_env="dev",
        debug=True,
        output_dir=tmp_path / "output",
        solver_settings=SolverSettings(),
        algorithm_settings=AlgorithmSettings(),
        external_solver_config=None,
    )


def run(argv, config) -> int:
    return run_command(build_parser().parse_args(argv), config)


def test_missing_case_is_usage_error(config, capsys):
    assert run(["export", "missing.m"], config) == EXIT_USAGE
    error = json.loads(capsys.readouterr().err)
    assert error["error"] == "UsageError"
    assert "missing.m" in error["message"]


def test_main_maps_usage_error():
    assert main(["export", "missing.m"]) == EXIT_USAGE


def test_bad_flag_values(config, cases_dir, capsys):
    case = str(cases_dir / "case2.m")
    assert run(["solve", case, "--max-gamma", "4"], config) == EXIT_USAGE
    assert run(["solve", case, "--h", "0"], config) == EXIT_USAGE
    assert run(["export", case, "--eps-mva", "-1"], config) == EXIT_USAGE
    capsys.readouterr()


def test_external_solver_needs_binary(config, cases_dir, capsys):
    assert run(["solve", str(cases_dir / "case2.m"), "--solver", "external"], config) == EXIT_USAGE
    assert "MOMENT_OPF_SDPA_SOLVER" in json.loads(capsys.readouterr().err)["message"]


def test_inverted_voltage_limits_exit_infeasible(config, tmp_path, capsys):
    path = tmp_path / "inverted.m"
    path.write_text(INVERTED_LIMITS, encoding="utf-8")
    assert run(["export", str(path)], config) == EXIT_INFEASIBLE
    assert json.loads(capsys.readouterr().err)["error"] == "InfeasibleCaseError"


@pytest.mark.parametrize("hierarchy", ["real", "complex"])
def test_export_is_deterministic(config, cases_dir, tmp_path, capsys, hierarchy):
    case = str(cases_dir / "case9.m")
    first, second = tmp_path / "first.dat-s", tmp_path / "second.dat-s"
    assert run(["export", case, "--hierarchy", hierarchy, "--orders", "2", "--out", str(first)], config) == 0
    census = json.loads(capsys.readouterr().out)
    assert run(["export", case, "--hierarchy", hierarchy, "--orders", "2", "--out", str(second)], config) == 0
    capsys.readouterr()
    assert first.read_text() == second.read_text()
    assert census["file"] == str(first)
    assert census["blocks"] == sum(census["blocks_by_kind"].values())
    assert census["blocks_by_kind"]["moment"] >= 1
    assert census["blocks"] > 0 and census["max_block_dim"] > 0


def test_export_defaults_to_output_dir(config, cases_dir, capsys):
    assert run(["export", str(cases_dir / "case2.m")], config) == EXIT_GLOBAL_OPTIMAL
    capsys.readouterr()
    assert (config.output_dir / "case2_complex_g1.dat-s").is_file()


def test_analyze_sparsity_json(config, cases_dir, tmp_path, capsys):
    out = tmp_path / "case14.json"
    assert run(["analyze-sparsity", str(cases_dir / "case14.m"), "--out", str(out)], config) == 0
    printed = json.loads(capsys.readouterr().out)
    report = json.loads(out.read_text())
    assert printed == report
    assert report["buses"] == 14
    assert sum(report["clique_histogram"].values()) == report["cliques"]
    order_one = report["predicted_block_dims"]["1"]
    assert order_one["real_dense"] == 28 and order_one["complex_dense"] == 30
    assert order_one["real_max"] <= order_one["real_dense"]


def test_analyze_sparsity_csv(config, cases_dir, tmp_path, capsys):
    out = tmp_path / "case9.csv"
    assert run(["analyze-sparsity", str(cases_dir / "case9.m"), "--out", str(out)], config) == 0
    report = json.loads(capsys.readouterr().out)
    table = pd.read_csv(out)
    assert len(table) == report["cliques"]
    assert list(table.columns[:3]) == ["clique", "size", "buses"]
    assert (table["complex_dim_g1"] == 2 * (table["size"] + 1)).all()


def sweep_row(hierarchy: str, h: int, solver_time: float) -> SweepRow:
    return SweepRow(
        case="wb2",
        hierarchy=hierarchy,
        h=h,
        status="global_optimal",
        iterations=2,
        solver_time=solver_time,
        final_gap=0.0,
        gamma_max=2,
        normalized_time=None,
    )


def test_normalize_sweep_uses_real_h2_baseline():
    table = normalize_sweep([sweep_row("complex", 1, 3.0), sweep_row("real", 2, 2.0), sweep_row("real", 1, 4.0)])
    assert list(zip(table["hierarchy"], table["h"])) == [("complex", 1), ("real", 1), ("real", 2)]
    assert list(table["normalized_time"]) == [1.5, 2.0, 1.0]


def test_normalize_sweep_without_baseline():
    table = normalize_sweep([sweep_row("complex", 3, 3.0)])
    assert table["normalized_time"].isna().all()


@pytest.mark.slow
def test_solve_reports_global_optimum(config, cases_dir, tmp_path, capsys):
    out = tmp_path / "case2.json"
    assert run(["solve", str(cases_dir / "case2.m"), "--out", str(out)], config) == EXIT_GLOBAL_OPTIMAL
    assert "global_optimal" in capsys.readouterr().out
    report = json.loads(out.read_text())
    assert report["status"] == "global_optimal"
    assert report["gap"] < 1e-5
    assert [row["bus"] for row in report["voltages"]] == [1, 2]
    assert report["voltages"][0]["va_deg"] == pytest.approx(0.0, abs=1e-9)
    assert len(report["iterations"]) == 1


@pytest.mark.slow
def test_iteration_cap_exits_with_bound(config, cases_dir, tmp_path, capsys):
    out = tmp_path / "wb2.json"
    argv = ["solve", str(cases_dir / "wb2.m"), "--hierarchy", "real", "--max-iter", "1", "--out", str(out)]
    assert run(argv, config) == EXIT_BOUND_ONLY
    capsys.readouterr()
    report = json.loads(Path(out).read_text())
    assert report["status"] == "bound_only"
    assert report["reason"] == "max_iterations"
    assert report["objective"] is None
