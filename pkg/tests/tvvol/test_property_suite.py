"""Tests for the self-test suite runner and its cheaper checks."""

import itertools
import json
from pathlib import Path
from typing import Any, Optional

import pytest
from pytest_mock import MockerFixture

from src.tvvol.models.common import InvalidArgumentError, NumericalError
from src.tvvol.services import property_suite
from src.tvvol.services.fit_service import FitMethod
from src.tvvol.services.property_suite import (
    CHECK_NAMES,
    DETERMINISM_BANDWIDTH,
    CheckResult,
    CheckStatus,
    SuiteLevel,
    SuiteReport,
    SuiteSettings,
    check_constraint_support,
    check_determinism,
    check_gradient_correctness,
    check_pipeline_integrity,
    check_spline_correctness,
    run_suite,
)


def passing(settings: SuiteSettings, seed: int, max_workers: Optional[int] = None) -> CheckResult:
    return CheckResult("stub", CheckStatus.PASS, {"value": 1.0}, {"value": 1.0}, seed)


def stub_all(mocker: MockerFixture) -> dict[str, Any]:
    stubs = {name: mocker.Mock(side_effect=passing) for name in CHECK_NAMES}
    mocker.patch.dict(property_suite.CHECKS, stubs)
    return stubs


@pytest.mark.unit
def test_suite_level_parse() -> None:
    assert SuiteLevel.parse("FULL") is SuiteLevel.FULL
    with pytest.raises(InvalidArgumentError):
        SuiteLevel.parse("medium")


@pytest.mark.unit
def test_fast_level_settings() -> None:
    fast = SuiteSettings.for_level(SuiteLevel.FAST)
    full = SuiteSettings.for_level(SuiteLevel.FULL)

    assert fast.skipped == {"igarch_amse_star", "comparison_direction"}
    assert fast.recovery_n == 200 and fast.seeds == 1
    assert not full.skipped
    assert full.seeds == 11 and full.majority == 6
    assert full.hmc.total_iters == 10000


@pytest.mark.unit
def test_fast_suite_reports_every_check(mocker: MockerFixture) -> None:
    stubs = stub_all(mocker)
    report = run_suite("fast", seed=5)

    assert [check.status for check in report.checks].count(CheckStatus.SKIPPED) == 2
    assert len(report.checks) == len(CHECK_NAMES)
    assert report.passed
    stubs["igarch_amse_star"].assert_not_called()
    stubs["gradient_correctness"].assert_called_once()
    assert stubs["determinism"].call_args.args[1] == 5


@pytest.mark.unit
def test_raising_check_is_reported_as_error(mocker: MockerFixture) -> None:
    stubs = stub_all(mocker)
    stubs["hmc_validity"].side_effect = NumericalError("potential is not finite")
    report = run_suite(SuiteLevel.FULL, seed=1)

    broken = report.check("hmc_validity")
    assert broken.status is CheckStatus.ERROR
    assert "NumericalError" in broken.detail
    assert not report.passed
    stubs["pipeline_integrity"].assert_called_once()


@pytest.mark.unit
def test_report_serialization(tmp_path: Path) -> None:
    report = SuiteReport(level=SuiteLevel.FAST, seed=2, checks=[
        CheckResult("spline_correctness", CheckStatus.PASS, {"error": 1e-15}, {"error": 1e-12}, 2),
        CheckResult("determinism", CheckStatus.FAIL, {"identical": 0.0}, {"identical": 1.0}, 2, "abc"),
    ])
    payload = json.loads(report.write(tmp_path / "report.json").read_text(encoding="utf-8"))

    assert payload["passed"] is False
    assert payload["level"] == "fast"
    assert [check["status"] for check in payload["checks"]] == ["pass", "fail"]
    with pytest.raises(KeyError):
        report.check("gradient_correctness")


@pytest.mark.unit
def test_spline_check_passes() -> None:
    result = check_spline_correctness(SuiteSettings(spline_points=500), seed=0)
    assert result.status is CheckStatus.PASS
    assert result.measured["bernstein_error"] <= 1e-12


@pytest.mark.unit
def test_constraint_check_passes() -> None:
    result = check_constraint_support(SuiteSettings(constraint_draws=20, constraint_grid=100), seed=0)
    assert result.status is CheckStatus.PASS
    assert result.measured["igarch.violations"] == 0


@pytest.mark.integration
def test_gradient_check_passes() -> None:
    result = check_gradient_correctness(SuiteSettings(gradient_trials=3), seed=0)
    assert result.status is CheckStatus.PASS
    assert result.measured["trials"] == 3


@pytest.mark.unit
@pytest.mark.parametrize("unstable", [None, FitMethod.BAYES, FitMethod.KERNEL, FitMethod.CONSTANT])
def test_determinism_hashes_written_files_of_every_method(mocker: MockerFixture, unstable: Optional[FitMethod]) -> None:
    calls = itertools.count()

    def write(result: FitMethod, out_dir: Path, draws_csv: bool = False) -> Path:
        target = Path(out_dir)
        target.mkdir(parents=True)
        stamp = next(calls) if result is unstable else 0
        (target / "metrics.json").write_text(f"{result.value}:{stamp}", encoding="utf-8")
        return target

    run_fit = mocker.patch.object(property_suite, "run_fit", side_effect=lambda method, *args, **kwargs: method)
    mocker.patch.object(property_suite, "write_fit", side_effect=write)

    result = check_determinism(SuiteSettings(pipeline_n=60), seed=3)

    assert result.status is (CheckStatus.PASS if unstable is None else CheckStatus.FAIL)
    assert [call.args[0] for call in run_fit.call_args_list] == list(FitMethod) * 2
    assert all(call.args[1].bandwidth == DETERMINISM_BANDWIDTH for call in run_fit.call_args_list)


@pytest.mark.unit
@pytest.mark.parametrize("limit, passed", [(300.0, False), (1000.0, True)])
def test_pipeline_check_enforces_time_limit(mocker: MockerFixture, limit: float, passed: bool) -> None:
    mocker.patch.object(property_suite, "_run_pipeline", return_value=(3, True, True))
    clock = mocker.patch.object(property_suite, "time")
    clock.monotonic.side_effect = [10.0, 410.0]

    result = check_pipeline_integrity(SuiteSettings(pipeline_time_limit=limit), seed=4)

    assert result.status is (CheckStatus.PASS if passed else CheckStatus.FAIL)
    assert result.measured["within_time_limit"] == float(passed)
    assert result.tolerance["time_limit_seconds"] == limit
    assert ("exceeded" in result.detail) is not passed
