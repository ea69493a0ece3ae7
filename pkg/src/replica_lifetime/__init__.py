"""Lifetime of a replicated file in a network of failing data centers."""

from .approx_ph import (
    CorrectedRates,
    PhRepresentation,
    build_absorbing_generator,
    closed_form_s_inverse,
    corrected_rates,
    mean_lifetime_approx,
    ph_moment,
    ph_moments,
)
from .model import LifetimeReport, ModelParams, validate_params
from .montecarlo import SimConfig, SimResult, sample_initial_from_alpha, simulate_lifetime
from .qbd import (
    QbdBlocks,
    RgFactorization,
    build_blocks,
    expected_absorption_vector,
    mean_lifetime_qbd,
    rg_factorize,
)
from .stationary import (
    StationaryDist,
    poisson_stationary,
    prob_no_available_center,
    stationary_by_solve,
)

__all__ = [
    "CorrectedRates", "LifetimeReport", "ModelParams", "PhRepresentation", "QbdBlocks",
    "RgFactorization", "SimConfig", "SimResult", "StationaryDist",
    "build_absorbing_generator", "build_blocks", "closed_form_s_inverse", "corrected_rates",
    "expected_absorption_vector", "mean_lifetime_approx", "mean_lifetime_qbd",
    "ph_moment", "ph_moments", "poisson_stationary", "prob_no_available_center",
    "rg_factorize", "sample_initial_from_alpha", "simulate_lifetime", "stationary_by_solve",
    "validate_params",
]
