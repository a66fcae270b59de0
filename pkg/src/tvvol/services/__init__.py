"""
Services package: sampling, simulation, baselines, summaries and orchestration.

These modules coordinate the models package into runnable estimation and
comparison workflows.
"""

from .hmc_sampler import PosteriorSamples, run_chain, run_hmc
from .chain_pool import run_chains
from .simulator import Scenario, simulate
from .scenario_factory import ScenarioFactory
from .kernel_baseline import constant_fit, estimate_constant, kernel_fit, select_bandwidth
from .inference_summaries import CurveSummary, amse, amse_star, fitted_variances, l2_deviation_trace, summarize_curves
from .model_comparison import ComparisonReport, compare_models, log_marginal_harmonic, one_step_forecast_mse, predictive_loglik
from .fit_service import FitMethod, FitResult, run_fit, write_fit
from .property_suite import SuiteLevel, SuiteReport, run_suite

__all__ = [
    'PosteriorSamples',
    'run_chain',
    'run_hmc',
    'run_chains',
    'Scenario',
    'simulate',
    'ScenarioFactory',
    'constant_fit',
    'estimate_constant',
    'kernel_fit',
    'select_bandwidth',
    'CurveSummary',
    'amse',
    'amse_star',
    'fitted_variances',
    'l2_deviation_trace',
    'summarize_curves',
    'ComparisonReport',
    'compare_models',
    'log_marginal_harmonic',
    'one_step_forecast_mse',
    'predictive_loglik',
    'FitMethod',
    'FitResult',
    'run_fit',
    'write_fit',
    'SuiteLevel',
    'SuiteReport',
    'run_suite',
]
