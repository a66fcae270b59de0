"""Tests for return series."""

import numpy as np
import pytest

from src.tvvol.models.common import InvalidArgumentError
from src.tvvol.models.series import MIN_SERIES_LENGTH, SeriesData, SeriesSource, make_series, series_values


@pytest.mark.unit
def test_series_is_frozen_copy() -> None:
    raw = np.linspace(-1.0, 1.0, 30)
    series = make_series(raw, meta={"file": "x.csv"})
    raw[0] = 99.0

    assert series.n == 30
    assert series.values[0] == -1.0
    assert not series.values.flags.writeable
    assert series.source is SeriesSource.RETURNS


@pytest.mark.unit
def test_series_rejects_short_input() -> None:
    with pytest.raises(InvalidArgumentError, match="at least"):
        SeriesData(values=np.ones(MIN_SERIES_LENGTH - 1))


@pytest.mark.unit
def test_series_reports_non_finite_positions() -> None:
    values = np.ones(25)
    values[[3, 7]] = [np.nan, np.inf]
    with pytest.raises(InvalidArgumentError, match=r"\[3, 7\]"):
        SeriesData(values=values)


@pytest.mark.unit
def test_series_rejects_bad_scale() -> None:
    with pytest.raises(InvalidArgumentError):
        SeriesData(values=np.ones(25), scale=0.0)


@pytest.mark.unit
def test_head_tail_segment_keep_provenance() -> None:
    series = make_series(np.arange(40.0), source=SeriesSource.SIMULATED, meta={"seed": "1"})

    head = series.head(25)
    tail = series.tail(20)
    second_half = series.segment(20, 40)

    assert head.values[-1] == 24.0 and head.meta["prefix"] == "25"
    assert tail.values[0] == 20.0 and tail.meta["last_n"] == "20"
    assert second_half.meta["segment"] == "20:40"
    assert all(part.meta["seed"] == "1" for part in (head, tail, second_half))
    assert tail.source is SeriesSource.SIMULATED
    with pytest.raises(InvalidArgumentError):
        series.tail(41)
    with pytest.raises(InvalidArgumentError):
        series.segment(10, 10)


@pytest.mark.unit
def test_series_values_accepts_arrays() -> None:
    np.testing.assert_array_equal(series_values([[1.0, 2.0]]), [1.0, 2.0])
