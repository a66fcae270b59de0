"""
Run-config files: DTO shapes and the loader.
"""

from .config_loader import DEFAULT_CONFIG_DIR, ConfigLoader
from .config_schema import (
    DataSectionDTO,
    HmcSectionDTO,
    HyperSectionDTO,
    KernelSectionDTO,
    ModelSectionDTO,
    RunConfigDTO,
)

__all__ = [
    'DEFAULT_CONFIG_DIR',
    'ConfigLoader',
    'DataSectionDTO',
    'HmcSectionDTO',
    'HyperSectionDTO',
    'KernelSectionDTO',
    'ModelSectionDTO',
    'RunConfigDTO',
]
