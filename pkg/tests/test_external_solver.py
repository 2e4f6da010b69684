# Standard Library Imports
from pathlib import Path

# Third-Party Library Imports
import numpy as np
import pytest

# Local Application Imports
from src.integrations import ExternalSolverConfig, UnretryableExternalSolverError, solve_with_external
from src.sdp import export_sdpa

from .conftest import FIXTURES_DIR, two_by_two


def fake_solver(directory: Path, body: str) -> str:
    script = directory / "fake_solver.sh"
    script.write_text(f"#!/bin/sh\n{body}\n", encoding="utf-8")
    script.chmod(0o755)
    return str(script)


@pytest.fixture
def external(monkeypatch, tmp_path):
    def configure(body: str) -> ExternalSolverConfig:
        monkeypatch.setenv("MOMENT_OPF_SDPA_SOLVER", fake_solver(tmp_path, body))
        monkeypatch.setenv("MOMENT_OPF_SDPA_TIMEOUT", "30")
        return ExternalSolverConfig()

    return configure


def test_config_requires_binary(monkeypatch):
    monkeypatch.delenv("MOMENT_OPF_SDPA_SOLVER", raising=False)
    with pytest.raises(ValueError, match="MOMENT_OPF_SDPA_SOLVER"):
        ExternalSolverConfig()
    monkeypatch.setenv("MOMENT_OPF_SDPA_SOLVER", "   ")
    with pytest.raises(ValueError, match="--solver external"):
        ExternalSolverConfig()


def test_config_expands_home_in_binary_path(monkeypatch, tmp_path):
    monkeypatch.setenv("HOME", str(tmp_path))
    monkeypatch.setenv("MOMENT_OPF_SDPA_SOLVER", " ~/bin/csdp ")
    config = ExternalSolverConfig()
    assert config.binary == str(tmp_path / "bin" / "csdp")


def test_config_rejects_nonpositive_timeout(monkeypatch):
    monkeypatch.setenv("MOMENT_OPF_SDPA_SOLVER", "csdp")
    monkeypatch.setenv("MOMENT_OPF_SDPA_TIMEOUT", "0")
    with pytest.raises(ValueError):
        ExternalSolverConfig()


def test_solution_file_is_parsed(external, solver_settings):
    config = external(f'cp "{FIXTURES_DIR / "two_by_two.sol"}" "$2"')
    solution = solve_with_external(two_by_two(), config, solver_settings)
    assert solution.status == "optimal"
    assert solution.objective == pytest.approx(2.0)
    np.testing.assert_allclose(solution.y, [1.0, 1.0])
    assert solution.solve_time >= 0


def test_exported_problem_reaches_binary(external, tmp_path, solver_settings):
    copy = tmp_path / "seen.dat-s"
    config = external(f'cp "$1" "{copy}"\ncp "{FIXTURES_DIR / "two_by_two.sol"}" "$2"')
    solve_with_external(two_by_two(), config, solver_settings)
    assert copy.read_text(encoding="utf-8") == export_sdpa(two_by_two())


def test_exit_code_maps_to_status(external, solver_settings):
    config = external(f'cp "{FIXTURES_DIR / "two_by_two.sol"}" "$2"\nexit 3')
    assert solve_with_external(two_by_two(), config, solver_settings).status == "near_optimal"


def test_missing_output_is_not_retried(external):
    config = external("echo diverged >&2\nexit 1")
    with pytest.raises(UnretryableExternalSolverError) as info:
        solve_with_external(two_by_two(), config)
    assert "diverged" in info.value.message


def test_missing_binary(monkeypatch, tmp_path):
    monkeypatch.setenv("MOMENT_OPF_SDPA_SOLVER", str(tmp_path / "no_such_solver"))
    with pytest.raises(UnretryableExternalSolverError):
        solve_with_external(two_by_two(), ExternalSolverConfig())


def test_garbage_output_is_reported(external):
    config = external('echo "not a solution" > "$2"')
    with pytest.raises(UnretryableExternalSolverError):
        solve_with_external(two_by_two(), config)
