"""DTOs describing run-config files.

These are transport-layer shapes for YAML/JSON configs. Convert to the typed
configuration objects (ModelSpec, HmcConfig, PriorHyper) at load time.
"""

from typing import List, Optional, TypedDict, Union


class ModelSectionDTO(TypedDict, total=False):
    """`model:` section. `knots` is an integer or "auto"; k1..k3 override it per family."""

    kind: str
    p: int
    q: int
    knots: Union[int, str]
    k1: int
    k2: int
    k3: int


class HmcSectionDTO(TypedDict, total=False):
    """`hmc:` section, field names as in HmcConfig."""

    leapfrog_steps: int
    initial_step_size: float
    total_iters: int
    burn_in: int
    adapt_window: int
    target_accept_low: float
    target_accept_high: float
    adapt_factor: float
    seed: int
    boundary: str
    chains: int


class HyperSectionDTO(TypedDict, total=False):
    c1: float
    c2: float
    d1: float


class DataSectionDTO(TypedDict, total=False):
    """`data:` section controlling price ingestion."""

    scale: float
    last_n: Optional[int]
    column: str


class KernelSectionDTO(TypedDict, total=False):
    bandwidth: Optional[float]
    candidates: List[float]
    kind: str


class RunConfigDTO(TypedDict, total=False):
    """Config file root DTO (YAML/JSON)."""

    name: str
    description: str
    model: ModelSectionDTO
    hmc: HmcSectionDTO
    hyper: HyperSectionDTO
    data: DataSectionDTO
    kernel: KernelSectionDTO


KNOWN_SECTIONS = frozenset(RunConfigDTO.__annotations__)
