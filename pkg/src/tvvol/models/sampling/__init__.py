"""
Sampling package: sampler configuration, chain phases and step-size adaptation.
"""

from .chain_phase import ChainPhase, ChainStateMachine
from .hmc_config import BoundaryMode, HmcConfig
from .step_size import StepSizeController

__all__ = [
    'ChainPhase',
    'ChainStateMachine',
    'BoundaryMode',
    'HmcConfig',
    'StepSizeController',
]
