"""Stationary law of the number of working data centers.

Centers arrive at rate ``beta`` and each fails at rate ``lambda``, so the count
is an M/M/infinity birth-death chain whose stationary law is Poisson with mean
``beta / lambda``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc

from .errors import SingularSystem
from .linalg import solve
from .model import ModelParams, validate_params

_NORMAL_FLOOR = 1e-290


@dataclass(frozen=True)
class StationaryDist:
    probs: np.ndarray
    tail_mass: float
    tol: float | None = None

    @property
    def truncation_level(self) -> int:
        return len(self.probs) - 1

    def cdf(self, k: int) -> float:
        return float(np.sum(self.probs[: k + 1]))

    def survival(self, k: int) -> float:
        """P{N > k}, using the recorded tail mass rather than summing a tail."""
        if k >= self.truncation_level:
            return self.tail_mass
        return float(np.sum(self.probs[k + 1:])) + self.tail_mass


def poisson_stationary(params: ModelParams, tol: float = 1e-12) -> StationaryDist:
    """Poisson(beta/lambda) pmf, truncated where the remaining mass drops below ``tol``."""
    params = validate_params(params)
    if not 0.0 < tol < 1.0:
        raise ValueError(f"tol must lie in (0, 1), got {tol}")
    rho = params.beta / params.lam
    if rho == 0.0:
        return StationaryDist(np.array([1.0]), 0.0, tol)

    # Multiplicative recurrence; while the terms sit in the subnormal range
    # (large rho, before the mode) they are taken from lgamma instead so the
    # recurrence never amplifies a denormal rounding error.
    log_rho = math.log(rho)
    probs = []
    p = math.exp(-rho)
    k = 0
    while True:
        probs.append(p)
        if k >= rho:
            tail = _poisson_tail(rho, k)
            if tail < tol:
                break
        k += 1
        if p >= _NORMAL_FLOOR:
            p = p * rho / k
        else:
            p = math.exp(-rho + k * log_rho - math.lgamma(k + 1))
    return StationaryDist(np.array(probs), tail, tol)


def _poisson_tail(rho: float, k: int) -> float:
    # P{N > k} via the regularized lower gamma function; accurate where
    # 1 - partial_sum would cancel.
    return float(gammainc(k + 1, rho))


def birth_death_generator(params: ModelParams, L: int) -> np.ndarray:
    """Generator of the center count truncated at level ``L`` by reflection."""
    q = np.zeros((L + 1, L + 1))
    for k in range(L + 1):
        if k < L:
            q[k, k + 1] = params.beta
        if k > 0:
            q[k, k - 1] = k * params.lam
        q[k, k] = -q[k].sum()
    return q


def stationary_by_solve(params: ModelParams, L: int) -> StationaryDist:
    """Solve ``theta Q = 0, theta e = 1`` on the reflected truncation."""
    params = validate_params(params)
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    q = birth_death_generator(params, L)
    # Replace one balance equation by the normalization constraint.
    a = q.T.copy()
    a[-1, :] = 1.0
    rhs = np.zeros(L + 1)
    rhs[-1] = 1.0
    theta = solve(a, rhs, SingularSystem)
    theta = np.clip(theta, 0.0, None)
    return StationaryDist(theta / theta.sum(), 0.0)


def prob_no_available_center(params: ModelParams) -> float:
    params = validate_params(params)
    return math.exp(-params.beta / params.lam)
