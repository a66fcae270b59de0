"""
File formats: price/return CSVs, run configs and fit outputs.

Input CSVs carry a header row; prices default to the `close` column and
return files use `index,return`. All floating point output is written with
17 significant digits so a written series reads back bit-for-bit.
"""

import io
import json
import logging
import math
import zipfile
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Any, Mapping, Optional, Union, cast

import numpy as np
import pandas as pd
import yaml
from numpy.typing import NDArray

from src.tvvol.models.common import DataFormatError, InvalidArgumentError, NumericalError, SchemaError
from src.tvvol.models.likelihood import PriorHyper
from src.tvvol.models.sampling import HmcConfig
from src.tvvol.models.scenarios import ConfigLoader, RunConfigDTO
from src.tvvol.models.series import SeriesData, SeriesSource
from src.tvvol.models.spline import auto_interior_knots
from src.tvvol.models.volatility import ModelKind, ModelSpec, ParamLayout
from .hmc_sampler import PosteriorSamples
from .inference_summaries import CurveSummary
from .kernel_baseline import DEFAULT_BANDWIDTHS, KernelKind

logger = logging.getLogger(__name__)

DEFAULT_SCALE = 100.0
DEFAULT_PRICE_COLUMN = "close"
RETURN_COLUMN = "return"
FLOAT_FORMAT = "%.17g"
LOW_VARIANCE = 1e-12
AUTO_KNOTS = "auto"
NPZ_TIMESTAMP = (1980, 1, 1, 0, 0, 0)


def _read_csv(path: Union[str, Path]) -> pd.DataFrame:
    try:
        return pd.read_csv(path, float_precision="round_trip")
    except FileNotFoundError:
        raise
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as error:
        raise DataFormatError(f"Cannot parse {path}: {error}") from error


def _numeric_column(frame: pd.DataFrame, column: str, path: Union[str, Path]) -> NDArray[np.float64]:
    if column not in frame.columns:
        raise SchemaError(f"{path} has no column '{column}' (columns: {', '.join(map(str, frame.columns))})")
    values = pd.to_numeric(frame[column], errors="coerce").to_numpy(dtype=float)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        row = int(bad[0])
        raise DataFormatError(f"{path}: row {row + 1} has non-numeric {column} value {frame[column].iloc[row]!r}")
    return values


def _truncate(values: NDArray[np.float64], last_n: Optional[int], path: Union[str, Path]) -> NDArray[np.float64]:
    if last_n is None:
        return values
    if not 0 < last_n <= values.size:
        raise InvalidArgumentError(f"last_n={last_n} but {path} yields {values.size} returns")
    return values[values.size - last_n:]


def _warn_if_flat(values: NDArray[np.float64], path: Union[str, Path]) -> None:
    if values.size and float(np.var(values)) < LOW_VARIANCE:
        logger.warning("Returns from %s have variance %.3e; the series is (nearly) constant", path, np.var(values))


def load_prices(
    path: Union[str, Path],
    column: str = DEFAULT_PRICE_COLUMN,
    last_n: Optional[int] = None,
    scale: float = DEFAULT_SCALE,
) -> SeriesData:
    """
    Log-returns of a price column, scaled and optionally truncated.

    Args:
        path: CSV file with a header row
        column: Price column
        last_n: Keep only the most recent last_n returns
        scale: Multiplier for the log-returns (100 gives percent returns)

    Raises:
        SchemaError: If the column is missing
        DataFormatError: On a non-numeric or nonpositive price (the row is named)
    """
    frame = _read_csv(path)
    prices = _numeric_column(frame, column, path)
    nonpositive = np.flatnonzero(prices <= 0.0)
    if nonpositive.size:
        row = int(nonpositive[0])
        raise DataFormatError(f"{path}: row {row + 1} has nonpositive price {prices[row]!r}")
    returns = _truncate(np.diff(np.log(prices)) * scale, last_n, path)
    _warn_if_flat(returns, path)
    meta = {"file": str(path), "column": column, "rows": str(len(frame))}
    if "date" in frame.columns and len(frame) > 1:
        dates = frame["date"].astype(str)
        meta["date_range"] = f"{dates.iloc[len(frame) - returns.size]}..{dates.iloc[-1]}"
    if last_n is not None:
        meta["last_n"] = str(last_n)
    logger.info("Loaded %d returns from %s (column %s, scale %g)", returns.size, path, column, scale)
    return SeriesData(values=returns, source=SeriesSource.RAW_PRICES, scale=scale, meta=meta)


def meta_path(path: Union[str, Path]) -> Path:
    """Provenance sidecar of a series file: a.csv -> a.meta.json."""
    return Path(path).with_suffix(".meta.json")


def load_returns(
    path: Union[str, Path],
    column: str = RETURN_COLUMN,
    last_n: Optional[int] = None,
) -> SeriesData:
    """
    Returns stored as-is (`index,return` files written by write_series_csv).

    Provenance from a sidecar written alongside the file is kept.
    """
    frame = _read_csv(path)
    values = _truncate(_numeric_column(frame, column, path), last_n, path)
    _warn_if_flat(values, path)
    meta: dict[str, str] = {}
    sidecar = meta_path(path)
    if sidecar.is_file():
        meta.update({str(key): str(value) for key, value in json.loads(sidecar.read_text(encoding="utf-8")).items()})
    source = SeriesSource.SIMULATED if "scenario" in meta else SeriesSource.RETURNS
    meta.update({"file": str(path), "column": column})
    if last_n is not None:
        meta["last_n"] = str(last_n)
    return SeriesData(values=values, source=source, scale=1.0, meta=meta)


def load_series(
    path: Union[str, Path],
    column: Optional[str] = None,
    last_n: Optional[int] = None,
    scale: float = DEFAULT_SCALE,
) -> SeriesData:
    """
    Load either file layout: a `return` column is read as-is, anything else as prices.
    """
    if column is None:
        header = pd.read_csv(path, nrows=0).columns
        column = RETURN_COLUMN if RETURN_COLUMN in header else DEFAULT_PRICE_COLUMN
    if column == RETURN_COLUMN:
        return load_returns(path, column, last_n)
    return load_prices(path, column, last_n, scale)


def write_series_csv(series: SeriesData, path: Union[str, Path]) -> Path:
    """Write `index,return` with full precision, plus the provenance sidecar."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame({"index": np.arange(1, series.n + 1), RETURN_COLUMN: series.values})
    frame.to_csv(target, index=False, float_format=FLOAT_FORMAT)
    if series.meta:
        meta_path(target).write_text(json.dumps(dict(series.meta), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return target


def write_curves_csv(summary: CurveSummary, path: Union[str, Path]) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    summary.to_frame().to_csv(target, index=False, float_format=FLOAT_FORMAT)
    return target


def write_variances_csv(variances: NDArray[np.float64], path: Union[str, Path]) -> Path:
    target = Path(path)
    frame = pd.DataFrame({"index": np.arange(1, variances.size + 1), "variance": variances})
    frame.to_csv(target, index=False, float_format=FLOAT_FORMAT)
    return target


def _plain(value: Any) -> Any:
    """numpy scalars, arrays and enums to JSON-ready Python objects."""
    if isinstance(value, Mapping):
        return {str(key): _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if isinstance(value, np.ndarray):
        return [_plain(item) for item in value.tolist()]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Enum):
        return value.value
    return value


def dump_json(payload: Mapping[str, Any]) -> str:
    """
    Deterministic JSON (sorted keys).

    Raises:
        NumericalError: If the payload holds NaN or infinity
    """
    try:
        return json.dumps(_plain(payload), indent=2, sort_keys=True, allow_nan=False)
    except ValueError as error:
        raise NumericalError(f"Output contains a non-finite value: {error}") from error


def write_json(payload: Mapping[str, Any], path: Union[str, Path]) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(dump_json(payload) + "\n", encoding="utf-8")
    return target


def write_draws(samples: PosteriorSamples, path: Union[str, Path], as_csv: bool = False) -> Path:
    """
    Dump draws and chain traces to .npz (plus a CSV of the draws when asked).

    The archive is readable by `np.load`; entries carry a fixed timestamp so
    equal draws give equal bytes.
    """
    target = Path(path)
    spec = samples.spec
    arrays: dict[str, NDArray[Any]] = {
        "draws": samples.draws,
        "accept_rate_trace": samples.accept_rate_trace,
        "step_size_trace": samples.step_size_trace,
        "chain_seeds": np.asarray(samples.chain_seeds, dtype=np.int64),
        "meta": np.array(json.dumps({
            "kind": spec.kind.value, "p": spec.p, "q": spec.q,
            "k1": spec.k1, "k2": spec.k2, "k3": spec.k3,
            "seed": samples.seed, "horizon": samples.horizon,
            "accept_rate": samples.accept_rate,
        })),
    }
    target.parent.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(target, "w", compression=zipfile.ZIP_STORED) as archive:
        for name, array in arrays.items():
            buffer = io.BytesIO()
            np.save(buffer, array, allow_pickle=False)
            archive.writestr(zipfile.ZipInfo(f"{name}.npy", date_time=NPZ_TIMESTAMP), buffer.getvalue())
    if as_csv:
        frame = pd.DataFrame(samples.draws, columns=ParamLayout(spec).column_names())
        frame.to_csv(target.with_suffix(".csv"), index=False, float_format=FLOAT_FORMAT)
    return target


def load_draws(path: Union[str, Path]) -> PosteriorSamples:
    with np.load(path) as archive:
        meta = json.loads(str(archive["meta"]))
        spec = ModelSpec(
            kind=ModelKind.parse(meta["kind"]), p=meta["p"], q=meta["q"],
            k1=meta["k1"], k2=meta["k2"], k3=meta["k3"],
        )
        return PosteriorSamples(
            spec=spec,
            draws=archive["draws"],
            accept_rate_trace=archive["accept_rate_trace"],
            step_size_trace=archive["step_size_trace"],
            seed=int(meta["seed"]),
            horizon=int(meta["horizon"]),
            accept_rate=float(meta["accept_rate"]),
            chain_seeds=tuple(int(s) for s in archive["chain_seeds"]),
        )


@dataclass(frozen=True)
class RunConfig:
    """
    Effective configuration of one fit.

    Attributes:
        model: Resolved model specification
        hmc: Sampler settings
        hyper: Prior hyperparameters
        knots: Requested interior knot count, or "auto"
        last_n: Truncate to the most recent last_n returns
        scale: Return multiplier for price files
        column: Input column (None picks by file layout)
        chains: Independent chains to pool
        bandwidth: Kernel bandwidth (None selects by cross-validation)
        candidates: Bandwidths tried by the selector
        kernel: Weighting kernel of the kernel baseline
    """
    model: ModelSpec
    hmc: HmcConfig = field(default_factory=HmcConfig)
    hyper: PriorHyper = field(default_factory=PriorHyper)
    knots: Union[int, str] = AUTO_KNOTS
    last_n: Optional[int] = None
    scale: float = DEFAULT_SCALE
    column: Optional[str] = None
    chains: int = 1
    bandwidth: Optional[float] = None
    candidates: tuple[float, ...] = DEFAULT_BANDWIDTHS
    kernel: KernelKind = KernelKind.EPANECHNIKOV

    def __post_init__(self) -> None:
        if self.chains < 1:
            raise InvalidArgumentError(f"chains must be >= 1, got {self.chains}")
        if self.last_n is not None and self.last_n < 1:
            raise InvalidArgumentError(f"last_n must be positive, got {self.last_n}")
        if self.bandwidth is not None and not self.bandwidth > 0.0:
            raise InvalidArgumentError(f"Bandwidth must be positive, got {self.bandwidth}")

    def to_dto(self) -> RunConfigDTO:
        hmc = {f.name: getattr(self.hmc, f.name) for f in fields(self.hmc)}
        hmc["boundary"] = self.hmc.boundary.value
        hmc["chains"] = self.chains
        return cast(RunConfigDTO, {
            "model": {
                "kind": self.model.kind.value, "p": self.model.p, "q": self.model.q, "knots": self.knots,
                "k1": self.model.k1, "k2": self.model.k2, "k3": self.model.k3,
            },
            "hmc": hmc,
            "hyper": asdict(self.hyper),
            "data": {"scale": self.scale, "last_n": self.last_n, "column": self.column},
            "kernel": {"bandwidth": self.bandwidth, "candidates": list(self.candidates), "kind": self.kernel.value},
        })


def _merged(file_config: Mapping[str, Any], overrides: Mapping[str, Any], section: str) -> dict[str, Any]:
    merged = dict(file_config.get(section) or {})
    merged.update({key: value for key, value in (overrides.get(section) or {}).items() if value is not None})
    return merged


def _build(cls: Any, section: str, values: Mapping[str, Any]) -> Any:
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise SchemaError(f"Unknown key(s) in '{section}' section: {', '.join(unknown)}")
    return cls(**values)


def resolve_knots(knots: Union[int, str, None], n: int) -> int:
    """Interior knot count: an integer as given, or the automatic rule for 'auto'."""
    if knots is None or knots == AUTO_KNOTS:
        return auto_interior_knots(n)
    try:
        count = int(knots)
    except (TypeError, ValueError):
        raise InvalidArgumentError(f"knots must be a nonnegative integer or 'auto', got {knots!r}")
    if count < 0:
        raise InvalidArgumentError(f"knots must be a nonnegative integer or 'auto', got {count}")
    return count


def build_run_config(
    file_config: Optional[Mapping[str, Any]],
    overrides: Optional[Mapping[str, Any]],
    n: int,
) -> RunConfig:
    """
    Effective RunConfig: command-line overrides over the config file over defaults.

    Args:
        file_config: Parsed config file (RunConfigDTO) or None
        overrides: Same layout; None values mean "not given"
        n: Length of the series to fit (resolves knots='auto')

    Raises:
        SchemaError: On unknown keys inside a section
        InvalidArgumentError: On invalid values
    """
    file_config = file_config or {}
    overrides = overrides or {}
    model = _merged(file_config, overrides, "model")
    hmc = _merged(file_config, overrides, "hmc")
    hyper = _merged(file_config, overrides, "hyper")
    data = _merged(file_config, overrides, "data")
    kernel = _merged(file_config, overrides, "kernel")

    kind = ModelKind.parse(str(model.get("kind", ModelKind.TV_GARCH.value)))
    default_q = 0 if kind is ModelKind.TV_ARCH else 1
    knots = model.get("knots", AUTO_KNOTS)
    size = resolve_knots(knots, n) + 4
    spec = ModelSpec(
        kind=kind,
        p=int(model.get("p", 1)),
        q=int(model.get("q", default_q)),
        k1=int(model.get("k1", size)),
        k2=int(model.get("k2", size)),
        k3=int(model.get("k3", size)),
    )
    chains = int(hmc.pop("chains", 1))
    unknown_data = sorted(set(data) - {"scale", "last_n", "column"})
    if unknown_data:
        raise SchemaError(f"Unknown key(s) in 'data' section: {', '.join(unknown_data)}")
    unknown_kernel = sorted(set(kernel) - {"bandwidth", "candidates", "kind"})
    if unknown_kernel:
        raise SchemaError(f"Unknown key(s) in 'kernel' section: {', '.join(unknown_kernel)}")
    return RunConfig(
        model=spec,
        hmc=_build(HmcConfig, "hmc", hmc),
        hyper=_build(PriorHyper, "hyper", hyper),
        knots=knots if knots == AUTO_KNOTS else resolve_knots(knots, n),
        last_n=data.get("last_n"),
        scale=float(data.get("scale", DEFAULT_SCALE)),
        column=data.get("column"),
        chains=chains,
        bandwidth=kernel.get("bandwidth"),
        candidates=tuple(float(h) for h in kernel.get("candidates", DEFAULT_BANDWIDTHS)),
        kernel=KernelKind.parse(str(kernel.get("kind", KernelKind.EPANECHNIKOV.value))),
    )


def load_config_file(name: Optional[str], loader: Optional[ConfigLoader] = None) -> RunConfigDTO:
    """Parsed config file, or an empty config when no name is given."""
    if not name:
        return cast(RunConfigDTO, {})
    return (loader or ConfigLoader()).load(name)


def write_config(config: RunConfig, path: Union[str, Path]) -> Path:
    """Echo the effective configuration as YAML."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(yaml.safe_dump(_plain(config.to_dto()), sort_keys=False), encoding="utf-8")
    return target


def require_seed(seed: Optional[int], interactive: bool) -> int:
    """
    Seed for a seeded command; scripted (non-TTY) runs must pass one explicitly.

    Raises:
        InvalidArgumentError: If no seed is given in scripted mode
    """
    if seed is not None:
        return seed
    if not interactive:
        raise InvalidArgumentError("--seed is required when not running in a terminal")
    logger.info("No --seed given; using 0")
    return 0


def is_finite_tree(payload: Any) -> bool:
    """True when no float anywhere in a nested payload is NaN or infinite."""
    plain = _plain(payload)
    if isinstance(plain, dict):
        return all(is_finite_tree(item) for item in plain.values())
    if isinstance(plain, list):
        return all(is_finite_tree(item) for item in plain)
    if isinstance(plain, float):
        return math.isfinite(plain)
    return True
