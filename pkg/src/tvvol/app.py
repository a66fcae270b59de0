"""
Command-line entry point.

Subcommands: simulate, fit, summarize, compare, forecast, gradcheck and
selftest. Results go to files or stdout as JSON; errors are reported on
stderr as {"error": <class>, "message": <text>}.

Exit codes: 0 success, 1 failed selftest/gradcheck, 2 usage or invalid
argument, 3 numerical failure.
"""

import json
import logging
import sys
from typing import Any, Optional, Sequence

import click
from dotenv import load_dotenv

from src.tvvol import __version__
from src.tvvol.models.common import InvalidArgumentError, NumericalError
from src.tvvol.models.series import SeriesData
from src.tvvol.models.likelihood import run_gradient_trials
from src.tvvol.models.volatility import ModelKind
from src.tvvol.services import data_io
from src.tvvol.services.fit_service import run_fit, summarize_fits, write_fit
from src.tvvol.services.model_comparison import REGIMES, compare_models, forecast_study, split_regimes
from src.tvvol.services.property_suite import run_suite
from src.tvvol.services.scenario_factory import ScenarioFactory
from src.tvvol.services.simulator import simulate

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

MODEL_CHOICES = [kind.value for kind in ModelKind]
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _emit(payload: Any, out: Optional[str] = None) -> None:
    """Write a JSON payload to a file, or to stdout when no file is given."""
    if out:
        data_io.write_json(payload, out)
        logger.info("Wrote %s", out)
    else:
        click.echo(data_io.dump_json(payload))


def _error(error: BaseException, code: int) -> int:
    click.echo(json.dumps({"error": type(error).__name__, "message": str(error)}), err=True)
    return code


def _int_list(value: Optional[str]) -> list[int]:
    if not value:
        return []
    try:
        return [int(item) for item in value.split(",") if item.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}")


def _name_list(value: str) -> list[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def _interactive() -> bool:
    return sys.stdin.isatty()


def _knots(value: Optional[str]) -> Optional[Any]:
    if value is None or value == data_io.AUTO_KNOTS:
        return value
    try:
        return int(value)
    except ValueError:
        raise click.BadParameter(f"knots must be an integer or 'auto', got {value!r}")


def model_options(function: Any) -> Any:
    """Options shared by every command that fits a model."""
    options = [
        click.option("--p", "p", type=int, default=None, help="ARCH lag order"),
        click.option("--q", "q", type=int, default=None, help="GARCH lag order"),
        click.option("--knots", default=None, help="Interior knots per curve, or 'auto'"),
        click.option("--iters", type=int, default=None, help="Total HMC iterations"),
        click.option("--burnin", type=int, default=None, help="Burn-in iterations"),
        click.option("--leapfrog", type=int, default=None, help="Leapfrog steps per iteration"),
        click.option("--step-size", type=float, default=None, help="Initial leapfrog step size"),
        click.option("--boundary", type=click.Choice(["clamp", "reflect", "none"]), default=None),
        click.option("--chains", type=int, default=None, help="Independent chains to pool"),
        click.option("--seed", type=int, default=None, help="RNG seed (required in scripts)"),
        click.option("--c1", type=float, default=None, help="Prior variance of the softmax logits"),
        click.option("--c2", type=float, default=None, help="Prior variance of the intercept coefficients"),
        click.option("--d1", type=float, default=None, help="Inverse-gamma shape/scale for sigma0^2"),
        click.option("--column", default=None, help="Input column (default: return, else close)"),
        click.option("--scale", type=float, default=None, help="Multiplier for price log-returns"),
        click.option("--last-n", type=int, default=None, help="Keep the most recent N returns"),
        click.option("--config", "config_name", default=None, help="Run-config name or path"),
    ]
    for option in reversed(options):
        function = option(function)
    return function


def _overrides(kind: Optional[str], params: dict[str, Any]) -> dict[str, Any]:
    return {
        "model": {"kind": kind, "p": params["p"], "q": params["q"], "knots": _knots(params["knots"])},
        "hmc": {
            "total_iters": params["iters"],
            "burn_in": params["burnin"],
            "leapfrog_steps": params["leapfrog"],
            "initial_step_size": params["step_size"],
            "boundary": params["boundary"],
            "chains": params["chains"],
            "seed": params["seed"],
        },
        "hyper": {"c1": params["c1"], "c2": params["c2"], "d1": params["d1"]},
        "data": {"column": params["column"], "scale": params["scale"], "last_n": params["last_n"]},
        "kernel": {"bandwidth": params.get("bandwidth"), "kind": params.get("kernel_kind")},
    }


def _load_inputs(data_path: str, kind: Optional[str], params: dict[str, Any]) -> tuple[dict[str, Any], dict[str, Any], SeriesData]:
    """Config file, command-line overrides and the loaded series."""
    file_config = dict(data_io.load_config_file(params["config_name"]))
    overrides = _overrides(kind, params)
    data_section = {**(file_config.get("data") or {}), **{k: v for k, v in overrides["data"].items() if v is not None}}
    seed = overrides["hmc"]["seed"]
    if seed is None:
        seed = (file_config.get("hmc") or {}).get("seed")
    overrides["hmc"]["seed"] = data_io.require_seed(seed, _interactive())
    series = data_io.load_series(
        data_path,
        column=data_section.get("column"),
        last_n=data_section.get("last_n"),
        scale=float(data_section.get("scale", data_io.DEFAULT_SCALE)),
    )
    return file_config, overrides, series


@click.group()
@click.version_option(__version__, prog_name="tvvol")
@click.option("-v", "--verbose", is_flag=True, help="Debug logging")
def cli(verbose: bool) -> None:
    """Bayesian time-varying ARCH/GARCH/iGARCH models."""
    load_dotenv()
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format=LOG_FORMAT, stream=sys.stderr, force=True)


@cli.command("simulate")
@click.option("--scenario", type=click.Choice(ScenarioFactory.names()), required=True)
@click.option("--n", "n", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--zero-history", is_flag=True, help="Start the variance recursion from zero")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def simulate_command(scenario: str, n: int, seed: Optional[int], zero_history: bool, out: str) -> int:
    """Simulate a built-in scenario and write `index,return`."""
    seed = data_io.require_seed(seed, _interactive())
    series = simulate(ScenarioFactory.create(scenario, n, seed, zero_history=zero_history))
    path = data_io.write_series_csv(series, out)
    logger.info("Wrote %d simulated returns to %s", series.n, path)
    return EXIT_OK


@cli.command("fit")
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--method", type=click.Choice(["bayes", "kernel", "constant"]), default="bayes", show_default=True)
@click.option("--model", "kind", type=click.Choice(MODEL_CHOICES), default=None)
@click.option("--bandwidth", type=float, default=None, help="Kernel bandwidth (default: cross-validated)")
@click.option("--kernel", "kernel_kind", type=click.Choice(["epanechnikov", "uniform"]), default=None, help="Kernel baseline weights")
@click.option("--draws-csv", is_flag=True, help="Also write the draws as CSV")
@click.option("--out", type=click.Path(file_okay=False), required=True)
@model_options
def fit_command(data_path: str, method: str, kind: Optional[str], draws_csv: bool, out: str, **params: Any) -> int:
    """Fit one model to a return or price file."""
    file_config, overrides, series = _load_inputs(data_path, kind, params)
    config = data_io.build_run_config(file_config, overrides, series.n)
    result = run_fit(method, config, series)
    write_fit(result, out, draws_csv=draws_csv)
    _emit({key: result.metrics[key] for key in ("method", "model", "n", "amse", "seed")})
    return EXIT_OK


@cli.command("summarize")
@click.argument("fit_dirs", nargs=-1, required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--level", type=float, default=0.95, show_default=True, help="Band level for coverage")
@click.option("--out", default=None, help="JSON output file (default: stdout)")
def summarize_command(fit_dirs: Sequence[str], level: float, out: Optional[str]) -> int:
    """AMSE per fit, AMSE* per method/model group and band coverage of simulated truths."""
    _emit(summarize_fits(list(fit_dirs), level), out)
    return EXIT_OK


@cli.command("compare")
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--models", default="garch,igarch", show_default=True, help="Comma-separated model kinds")
@click.option("--holdouts", default="", help="Comma-separated holdout sizes")
@click.option("--cuts", type=int, default=0, show_default=True, help="One-step forecast origins (0 skips)")
@click.option("--regimes", default="full", show_default=True, help=f"Comma-separated subset of {','.join(REGIMES)}")
@click.option("--out", default=None, help="JSON output file (default: stdout)")
@model_options
def compare_command(data_path: str, models: str, holdouts: str, cuts: int, regimes: str, out: Optional[str], **params: Any) -> int:
    """Bayes factor, predictive log-likelihood and forecast MSE across models."""
    names = _name_list(models)
    for name in names:
        ModelKind.parse(name)
    file_config, overrides, series = _load_inputs(data_path, None, params)
    reports: dict[str, Any] = {}
    for regime, segment in split_regimes(series, _name_list(regimes)).items():
        configs = {}
        for name in names:
            overrides["model"]["kind"] = name
            configs[name] = data_io.build_run_config(file_config, overrides, segment.n)
        first = configs[names[0]]
        report = compare_models(
            {name: config.model for name, config in configs.items()},
            segment, first.hyper, first.hmc,
            holdouts=_int_list(holdouts), forecast_cuts=cuts, chains=first.chains, regime=regime,
        )
        reports[regime] = report.to_dict()
    _emit({"regimes": reports}, out)
    return EXIT_OK


@cli.command("forecast")
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--model", "kind", type=click.Choice(MODEL_CHOICES), default=None)
@click.option("--cuts", type=int, default=15, show_default=True, help="Number of forecast origins")
@click.option("--out", default=None, help="JSON output file (default: stdout)")
@model_options
def forecast_command(data_path: str, kind: Optional[str], cuts: int, out: Optional[str], **params: Any) -> int:
    """One-step-ahead forecast MSE averaged over seeded cut points."""
    file_config, overrides, series = _load_inputs(data_path, kind, params)
    config = data_io.build_run_config(file_config, overrides, series.n)
    study = forecast_study(config.model.describe(), config.model, series, config.hyper, config.hmc, cuts, config.chains)
    _emit({"model": study.model, "cut_points": study.cut_points, "errors": study.errors, "mean_mse": study.mean_mse}, out)
    return EXIT_OK


@cli.command("gradcheck")
@click.option("--model", "kind", type=click.Choice(MODEL_CHOICES + ["all"]), default="all", show_default=True)
@click.option("--n", "n", type=int, default=80, show_default=True)
@click.option("--trials", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", default=None, help="JSON output file (default: stdout)")
def gradcheck_command(kind: str, n: int, trials: int, seed: int, out: Optional[str]) -> int:
    """Compare analytic gradients with central finite differences."""
    kinds = list(ModelKind) if kind == "all" else [ModelKind.parse(kind)]
    result = run_gradient_trials(kinds, trials, seed, n)
    _emit(result.summary(), out)
    return EXIT_OK if result.passed else EXIT_FAILED


@cli.command("selftest")
@click.option("--level", type=click.Choice(["fast", "full"]), default="fast", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", default=None, help="Report file (default: stdout)")
def selftest_command(level: str, seed: int, out: Optional[str]) -> int:
    """Run the acceptance checks; the report is written even when a check fails."""
    report = run_suite(level, seed)
    _emit(report.to_dict(), out)
    return EXIT_OK if report.passed else EXIT_FAILED


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and map failures to exit codes."""
    try:
        result = cli.main(args=list(argv) if argv is not None else None, prog_name="tvvol", standalone_mode=False)
    except click.UsageError as error:
        return _error(error, EXIT_USAGE)
    except click.ClickException as error:
        return _error(error, error.exit_code)
    except click.Abort as error:
        return _error(error, EXIT_FAILED)
    except (InvalidArgumentError, FileNotFoundError) as error:
        return _error(error, EXIT_USAGE)
    except NumericalError as error:
        return _error(error, EXIT_NUMERICAL)
    return result if isinstance(result, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
