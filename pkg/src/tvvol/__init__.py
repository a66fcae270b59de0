"""
tvvol: Bayesian estimation of time-varying ARCH, GARCH and iGARCH models.

Coefficient functions are modelled with cubic B-splines under shape
constraints and sampled with Hamiltonian Monte Carlo. The package also ships
the simulation, kernel-baseline and model-comparison tooling used to assess
the fits.
"""

__version__ = "0.1.0"
