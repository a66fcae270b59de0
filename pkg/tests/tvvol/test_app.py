"""
Tests for the command-line entry point: subcommands, outputs and exit codes.
"""
import json
import logging
from pathlib import Path
from typing import Generator

import pytest
from pytest_mock import MockerFixture

from src.tvvol import __version__
from src.tvvol.app import EXIT_FAILED, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, main
from src.tvvol.models.common import NumericalError
from src.tvvol.services import data_io
from src.tvvol.services.property_suite import CheckResult, CheckStatus, SuiteLevel, SuiteReport


@pytest.fixture(autouse=True)
def restore_logging() -> Generator[None, None, None]:
    """The CLI reconfigures the root logger; put the original handlers back."""
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


@pytest.fixture
def scripted(mocker: MockerFixture) -> None:
    mocker.patch("src.tvvol.app._interactive", return_value=False)


@pytest.fixture
def simulated_csv(tmp_path: Path) -> Path:
    path = tmp_path / "garch.csv"
    assert main(["simulate", "--scenario", "garch11", "--n", "120", "--seed", "4", "--out", str(path)]) == EXIT_OK
    return path


def error_payload(stderr: str) -> dict[str, str]:
    payload: dict[str, str] = json.loads(stderr.strip().splitlines()[-1])
    return payload


@pytest.mark.unit
def test_version(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["--version"]) == EXIT_OK
    assert __version__ in capsys.readouterr().out


@pytest.mark.unit
def test_simulate_writes_series(simulated_csv: Path) -> None:
    series = data_io.load_series(simulated_csv)
    assert series.n == 120
    assert series.meta["scenario"] == "garch11"
    assert series.meta["seed"] == "4"


@pytest.mark.unit
@pytest.mark.usefixtures("scripted")
def test_scripted_run_requires_seed(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    code = main(["simulate", "--scenario", "arch1", "--n", "50", "--out", str(tmp_path / "x.csv")])

    assert code == EXIT_USAGE
    assert error_payload(capsys.readouterr().err)["error"] == "InvalidArgumentError"
    assert not (tmp_path / "x.csv").exists()


@pytest.mark.unit
def test_usage_errors_exit_two(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["simulate", "--scenario", "egarch", "--seed", "1", "--out", str(tmp_path / "x.csv")]) == EXIT_USAGE
    assert main(["summarize", str(tmp_path / "missing")]) == EXIT_USAGE
    assert main(["frobnicate"]) == EXIT_USAGE


@pytest.mark.unit
def test_fit_constant(simulated_csv: Path, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    out = tmp_path / "fit"
    code = main([
        "fit", "--data", str(simulated_csv), "--method", "constant", "--model", "garch",
        "--knots", "2", "--seed", "1", "--out", str(out),
    ])

    assert code == EXIT_OK
    printed = json.loads(capsys.readouterr().out)
    assert printed["method"] == "constant"
    assert printed["n"] == 120
    assert (out / "metrics.json").is_file()
    assert (out / "curves.csv").is_file()


@pytest.mark.integration
def test_fit_kernel_with_uniform_weights(simulated_csv: Path, tmp_path: Path) -> None:
    out = tmp_path / "kernel"
    code = main([
        "fit", "--data", str(simulated_csv), "--method", "kernel", "--kernel", "uniform", "--bandwidth", "0.3",
        "--model", "arch", "--knots", "2", "--seed", "1", "--out", str(out),
    ])

    assert code == EXIT_OK
    metrics = json.loads((out / "metrics.json").read_text(encoding="utf-8"))
    assert (metrics["kernel"], metrics["bandwidth"]) == ("uniform", 0.3)
    assert "kind: uniform" in (out / "config.yaml").read_text(encoding="utf-8")
    assert main(["fit", "--data", str(simulated_csv), "--kernel", "gaussian", "--seed", "1", "--out", str(out)]) == EXIT_USAGE


@pytest.mark.unit
def test_config_file_supplies_seed(simulated_csv: Path, tmp_path: Path, config_dir: Path, mocker: MockerFixture) -> None:
    mocker.patch("src.tvvol.app._interactive", return_value=False)
    config = config_dir / "seeded.yaml"
    config.write_text("model:\n  kind: arch\n  knots: 2\nhmc:\n  seed: 21\n", encoding="utf-8")
    out = tmp_path / "fit"

    code = main(["fit", "--data", str(simulated_csv), "--method", "constant", "--config", str(config), "--out", str(out)])

    assert code == EXIT_OK
    assert json.loads((out / "metrics.json").read_text(encoding="utf-8"))["seed"] == 21


@pytest.mark.unit
def test_numerical_failure_exits_three(simulated_csv: Path, tmp_path: Path, mocker: MockerFixture, capsys: pytest.CaptureFixture[str]) -> None:
    mocker.patch("src.tvvol.app.run_fit", side_effect=NumericalError("variance became nonpositive"))
    code = main(["fit", "--data", str(simulated_csv), "--seed", "1", "--out", str(tmp_path / "fit")])

    assert code == EXIT_NUMERICAL
    payload = error_payload(capsys.readouterr().err)
    assert payload == {"error": "NumericalError", "message": "variance became nonpositive"}


@pytest.mark.integration
def test_gradcheck_passes(tmp_path: Path) -> None:
    out = tmp_path / "grad.json"
    assert main(["gradcheck", "--trials", "3", "--n", "40", "--out", str(out)]) == EXIT_OK
    summary = json.loads(out.read_text(encoding="utf-8"))
    assert summary["trials"] == 3
    assert summary["failed"] == 0


@pytest.mark.unit
def test_gradcheck_failure_exits_one(mocker: MockerFixture, capsys: pytest.CaptureFixture[str]) -> None:
    trials = mocker.Mock(passed=False)
    trials.summary.return_value = {"trials": 1, "failed": 1}
    mocker.patch("src.tvvol.app.run_gradient_trials", return_value=trials)

    assert main(["gradcheck", "--model", "arch", "--trials", "1"]) == EXIT_FAILED
    assert json.loads(capsys.readouterr().out)["failed"] == 1


@pytest.mark.unit
def test_selftest_writes_report_even_on_failure(tmp_path: Path, mocker: MockerFixture) -> None:
    report = SuiteReport(level=SuiteLevel.FAST, seed=3, checks=[
        CheckResult("determinism", CheckStatus.FAIL, {"identical": 0.0}, {"identical": 1.0}, 3),
    ])
    run_suite = mocker.patch("src.tvvol.app.run_suite", return_value=report)
    out = tmp_path / "selftest.json"

    assert main(["selftest", "--seed", "3", "--out", str(out)]) == EXIT_FAILED
    run_suite.assert_called_once_with("fast", 3)
    assert json.loads(out.read_text(encoding="utf-8"))["passed"] is False
