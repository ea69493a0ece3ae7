"""One-dimensional approximation of the file lifetime.

The copy count is modelled as a birth-death chain on ``{0, 1, ..., d}``.
Copies are lost at rate ``k * lambda`` and gained at a corrected rate that
discounts ``k * mu`` by the stationary probability that a spare data center
exists. The lifetime is the phase-type absorption time into state 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, SingularSubgenerator
from .linalg import invert, lu, lu_solve
from .model import LifetimeReport, ModelParams, validate_params
from .stationary import StationaryDist, poisson_stationary

STATIONARY_TOL = 1e-12


@dataclass(frozen=True)
class CorrectedRates:
    """Effective copy rates ``rates[k-1]`` out of state ``k``, for ``k = 1..d-1``."""

    rates: np.ndarray

    def __getitem__(self, k: int) -> float:
        # 1-based, matching the copy count
        return float(self.rates[k - 1])


@dataclass(frozen=True)
class PhRepresentation:
    initial: np.ndarray
    subgen: np.ndarray
    exit: np.ndarray
    absorb_mass: float

    def __post_init__(self):
        n = self.subgen.shape[0]
        if self.subgen.shape != (n, n) or self.exit.shape != (n,) or self.initial.shape != (n,):
            raise DimensionMismatch("initial, subgen and exit sizes disagree")

    @property
    def size(self) -> int:
        return self.subgen.shape[0]


def corrected_rates(params: ModelParams, stat: StationaryDist | None = None) -> CorrectedRates:
    params = validate_params(params)
    if stat is None:
        stat = poisson_stationary(params, STATIONARY_TOL)
    rates = np.array([k * params.mu * stat.survival(k) for k in range(1, params.d)])
    return CorrectedRates(rates)


def _default_initial(d: int) -> np.ndarray:
    gamma = np.zeros(d)
    gamma[0] = 1.0
    return gamma


def _check_initial(initial, d: int) -> np.ndarray:
    gamma = np.asarray(initial, dtype=float).ravel()
    if gamma.shape != (d,):
        raise DimensionMismatch(f"initial vector has length {gamma.size}, expected d={d}")
    if np.any(gamma < 0) or gamma.sum() > 1.0 + 1e-12:
        raise ValueError("initial vector must be nonnegative with total mass <= 1")
    return gamma


def build_absorbing_generator(params: ModelParams, rates: CorrectedRates,
                              initial=None) -> PhRepresentation:
    """Sub-generator over the transient copy counts ``1..d``.

    State ``d`` is the replication cap and has no upward transition.
    """
    params = validate_params(params)
    d = params.d
    if rates.rates.shape != (d - 1,):
        raise DimensionMismatch(f"expected {d - 1} corrected rates, got {rates.rates.size}")
    gamma = _default_initial(d) if initial is None else _check_initial(initial, d)

    s = np.zeros((d, d))
    for k in range(1, d + 1):
        i = k - 1
        if k < d:
            s[i, i + 1] = rates[k]
        if k > 1:
            s[i, i - 1] = k * params.lam
    exit_ = np.zeros(d)
    exit_[0] = params.lam
    s[np.diag_indices(d)] = -(s.sum(axis=1) + exit_)
    return PhRepresentation(gamma, s, exit_, float(1.0 - gamma.sum()))


def ph_moments(rep: PhRepresentation, k_max: int) -> list[float]:
    """Raw moments ``E[X^k] = (-1)^k k! gamma S^{-k} e`` for ``k = 1..k_max``.

    Uses one LU factorization of ``S`` and ``k_max`` solves; ``S^{-k}`` is
    never formed.
    """
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    factor = lu(rep.subgen, SingularSubgenerator)
    x = np.ones(rep.size)
    out = []
    for k in range(1, k_max + 1):
        # x_k = -k S^{-1} x_{k-1} = (-1)^k k! S^{-k} e
        x = -k * lu_solve(factor, x)
        out.append(float(rep.initial @ x))
    return out


def ph_moment(rep: PhRepresentation, k: int) -> float:
    return ph_moments(rep, k)[-1]


def closed_form_s_inverse(params: ModelParams, rates: CorrectedRates) -> np.ndarray:
    """Entrywise closed form of ``S^{-1}`` as published, transcribed as displayed.

    Column 1 is ``-1/lambda``. Rows 1, 2 and 3 of later columns follow their
    individual displays; remaining rows above the diagonal follow the
    ``(k-1, k)`` display with ``k-1`` replaced by the row index, and rows on
    or below the diagonal follow the shared lower formula. The row-3 display
    is known not to match ``S^{-1}``; compare against :func:`numeric_s_inverse`
    with :func:`s_inverse_mismatches` before relying on any entry beyond
    column 1.
    """
    params = validate_params(params)
    lam, d = params.lam, params.d
    mu = [0.0] + [rates[k] for k in range(1, d)]  # mu[k] for k = 1..d-1

    def prod(lo, hi):
        return math.prod(mu[i] for i in range(lo, hi + 1))

    def ladder(n):
        # (n-1)! lam^(n-1) + (n-2)! lam^(n-2) mu_{n-1} + ... + mu_1 ... mu_{n-1}
        return sum(math.factorial(n - 1 - m) * lam ** (n - 1 - m) * prod(n - m, n - 1)
                   for m in range(n))

    inv = np.zeros((d, d))
    inv[:, 0] = -1.0 / lam
    for k in range(2, d + 1):
        denom = math.factorial(k) * lam ** k
        for j in range(1, d + 1):
            if j >= k:
                num = ladder(k)
            elif j == 1:
                num = prod(1, k - 1)
            elif j == 2:
                num = (lam + mu[1]) * prod(2, k - 1)
            elif j == 3:
                num = 2.0 * lam ** 2 + (lam + mu[1]) * prod(3, k - 1)
            else:
                num = ladder(j) * prod(j, k - 1)
            inv[j - 1, k - 1] = -num / denom
    return inv


def numeric_s_inverse(rep: PhRepresentation) -> np.ndarray:
    return invert(rep.subgen, SingularSubgenerator)


def s_inverse_mismatches(params: ModelParams, rates: CorrectedRates,
                         rtol: float = 1e-10) -> list[tuple[int, int, float, float]]:
    """Entries ``(row, col, closed_form, numeric)`` (1-based) that disagree."""
    closed = closed_form_s_inverse(params, rates)
    numeric = numeric_s_inverse(build_absorbing_generator(params, rates))
    bad = ~np.isclose(closed, numeric, rtol=rtol, atol=rtol * np.max(np.abs(numeric)))
    return [(int(i) + 1, int(j) + 1, float(closed[i, j]), float(numeric[i, j]))
            for i, j in zip(*np.nonzero(bad))]


def mean_lifetime_approx(params: ModelParams, initial=None, k_max: int = 2) -> LifetimeReport:
    """Lifetime moments under the corrected-rate approximation.

    By default the file starts with a single copy.
    """
    params = validate_params(params)
    stat = poisson_stationary(params, STATIONARY_TOL)
    rates = corrected_rates(params, stat)
    rep = build_absorbing_generator(params, rates, initial)
    moments = ph_moments(rep, k_max)
    return LifetimeReport(
        "approx_ph", moments, 0.0,
        {"d": params.d, "stationary_tol": STATIONARY_TOL,
         "stationary_level": stat.truncation_level},
    )
