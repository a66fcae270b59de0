"""
Series package: return series and their provenance.
"""

from .series_data import (
    MIN_SERIES_LENGTH,
    SeriesSource,
    SeriesData,
    series_values,
    make_series,
)

__all__ = [
    'MIN_SERIES_LENGTH',
    'SeriesSource',
    'SeriesData',
    'series_values',
    'make_series',
]
