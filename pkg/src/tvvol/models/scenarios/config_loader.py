"""Run-config loader.

Resolves config names against `assets/configs/` (or takes an explicit path),
parses YAML or JSON and checks the top-level layout. Conversion into typed
configuration objects happens in the data_io service.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, cast

import yaml

from ..common.errors import DataFormatError, SchemaError
from .config_schema import KNOWN_SECTIONS, RunConfigDTO

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_DIR = Path("assets/configs")


@dataclass
class ConfigLoader:
    """Locate and parse run-config files."""

    base_dir: Path = DEFAULT_CONFIG_DIR

    def resolve(self, name: str, ext: Optional[str] = None) -> Path:
        """Find the file for a config name or path.

        Args:
            name: Existing file path, or a config name without extension
                (e.g., "long_run")
            ext: Optional explicit extension ("yaml" or "json"). When omitted,
                 tries .yaml then .json in that order.

        Raises:
            FileNotFoundError: if no matching file is found.
        """
        direct = Path(name)
        if direct.is_file():
            return direct
        candidates = [self.base_dir / f"{name}.{ext}"] if ext else [
            self.base_dir / f"{name}.yaml",
            self.base_dir / f"{name}.json",
        ]
        for path in candidates:
            if path.exists():
                return path
        raise FileNotFoundError(f"Config '{name}' not found in {self.base_dir}")

    def load_raw(self, name: str, ext: Optional[str] = None) -> str:
        return self.resolve(name, ext).read_text(encoding="utf-8")

    def load(self, name: str, ext: Optional[str] = None) -> RunConfigDTO:
        """Parse a config file into its DTO.

        Raises:
            FileNotFoundError: if the config does not exist
            DataFormatError: if the file is not valid YAML/JSON
            SchemaError: on unknown top-level sections or non-mapping sections
        """
        path = self.resolve(name, ext)
        text = path.read_text(encoding="utf-8")
        try:
            raw: Any = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
        except (json.JSONDecodeError, yaml.YAMLError) as error:
            raise DataFormatError(f"Cannot parse config {path}: {error}") from error
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise SchemaError(f"Config {path} must be a mapping at the top level")
        unknown = sorted(set(raw) - KNOWN_SECTIONS)
        if unknown:
            raise SchemaError(f"Config {path} has unknown sections: {', '.join(unknown)}")
        for section in ("model", "hmc", "hyper", "data", "kernel"):
            if section in raw and not isinstance(raw[section], dict):
                raise SchemaError(f"Config section '{section}' in {path} must be a mapping")
        logger.debug("Loaded config %s", path)
        return cast(RunConfigDTO, raw)
