"""Event-driven simulation of file lifetimes.

Two chains are simulated exactly (competing exponentials, one jump at a
time):

* ``physical_2d``: the pair (working centers, copies of the tagged file).
  Centers fail independently at rate ``lambda``, new centers arrive at rate
  ``beta``, each copy spawns a new copy onto a free center at rate ``mu``
  while fewer than ``min(centers, d)`` copies exist, and a failing center
  takes its copy with it.
* ``corrected_1d``: the copy count alone, with the corrected replication
  rates of :mod:`replica_lifetime.approx_ph`.

Every replication draws from its own substream, derived from
``(seed, replication index)`` with :class:`numpy.random.SeedSequence`, so
results do not depend on how replications are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import InvalidInitialState
from .model import LifetimeReport, ModelParams, validate_params
from .stationary import poisson_stationary

MODELS = ("physical_2d", "corrected_1d")

_CHUNK = 256


@dataclass(frozen=True)
class SimConfig:
    """What to simulate.

    ``initial`` is ``(k0, j0)`` for ``physical_2d`` or ``j0`` for
    ``corrected_1d``. ``None`` means the default start: one copy in a
    network whose size is drawn from the stationary law conditioned on at
    least one center (``physical_2d``), or a single copy (``corrected_1d``).
    """

    params: ModelParams
    model: str = "physical_2d"
    samples: int = 100_000
    seed: int = 42
    initial: tuple[int, int] | int | None = None

    def __post_init__(self):
        object.__setattr__(self, "params", validate_params(self.params))
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")
        _check_initial(self)


@dataclass(frozen=True)
class SimResult:
    mean: float
    second_moment: float
    std_error: float
    samples: int
    seed: int
    second_moment_se: float = 0.0

    def report(self, model: str) -> LifetimeReport:
        return LifetimeReport("simulation", (self.mean, self.second_moment), self.std_error,
                              {"samples": self.samples, "seed": self.seed, "model": model,
                               "second_moment_se": self.second_moment_se})


def _check_initial(config: SimConfig) -> None:
    init, d = config.initial, config.params.d
    if init is None:
        if config.model == "physical_2d" and config.params.beta == 0.0:
            raise InvalidInitialState("default start needs beta > 0; give (k0, j0)")
        return
    if config.model == "physical_2d":
        try:
            k0, j0 = init
        except (TypeError, ValueError):
            raise InvalidInitialState(f"expected (k0, j0), got {init!r}") from None
        if not (1 <= j0 <= min(k0, d)):
            raise InvalidInitialState(f"need 1 <= j0 <= min(k0, d); got k0={k0}, j0={j0}, d={d}")
    else:
        if isinstance(init, tuple):
            raise InvalidInitialState(f"corrected_1d takes a copy count, got {init!r}")
        if not 1 <= init <= d:
            raise InvalidInitialState(f"need 1 <= j0 <= d; got j0={init}, d={d}")


def substream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def jump_rates(params: ModelParams, k: int, j: int) -> list[tuple[float, int, int]]:
    """Rates ``(rate, dk, dj)`` of every possible jump out of ``(k, j)``."""
    lam = params.lam
    out = [(j * lam, -1, -1)]
    if k > j:
        out.append(((k - j) * lam, -1, 0))
    if j < min(k, params.d) and params.mu > 0:
        out.append((j * params.mu, 0, 1))
    if params.beta > 0:
        out.append((params.beta, 1, 0))
    return out


class _Uniforms:
    """Buffered uniforms from a generator; keeps per-draw overhead low."""

    __slots__ = ("rng", "buf", "pos")

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.buf = rng.random(_CHUNK)
        self.pos = 0

    def next(self) -> float:
        if self.pos == _CHUNK:
            self.buf = self.rng.random(_CHUNK)
            self.pos = 0
        u = self.buf[self.pos]
        self.pos += 1
        return u


def _conditional_cdf(params: ModelParams) -> np.ndarray:
    stat = poisson_stationary(params, 1e-16)
    p = stat.probs[1:].copy()
    if p.size == 0 or p.sum() <= 0.0:
        raise InvalidInitialState("stationary law puts no mass on k >= 1")
    cdf = np.cumsum(p) / (1.0 - stat.probs[0])
    cdf[-1] = 1.0
    return cdf


def sample_initial_from_alpha(params: ModelParams, seed, size: int | None = None):
    """Draw ``(k, 1)`` with ``k ~ Poisson(beta/lambda)`` conditioned on ``k >= 1``.

    ``seed`` may be an integer or a :class:`numpy.random.Generator`. With
    ``size`` an array of ``k`` values is returned instead of a single state.
    Sampling is by inversion of the conditional cdf.
    """
    params = validate_params(params)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    cdf = _conditional_cdf(params)
    u = rng.random(size)
    k = np.searchsorted(cdf, u, side="left") + 1
    if size is None:
        return int(k), 1
    return k


def _lifetime_2d(params: ModelParams, k: int, j: int, unif: _Uniforms) -> float:
    lam, beta, mu, d = params.lam, params.beta, params.mu, params.d
    t = 0.0
    while True:
        r_hold = j * lam
        r_other = (k - j) * lam
        r_copy = j * mu if j < (k if k < d else d) else 0.0
        total = r_hold + r_other + r_copy + beta
        t -= math.log(1.0 - unif.next()) / total
        x = unif.next() * total
        if x < r_hold:
            if j == 1:
                return t
            k -= 1
            j -= 1
        elif x < r_hold + r_other:
            k -= 1
        elif x < r_hold + r_other + r_copy:
            j += 1
        else:
            k += 1


def _lifetime_1d(lam: float, up: list, j: int, unif: _Uniforms) -> float:
    t = 0.0
    while True:
        r_down = j * lam
        r_up = up[j]
        total = r_down + r_up
        t -= math.log(1.0 - unif.next()) / total
        if unif.next() * total < r_down:
            if j == 1:
                return t
            j -= 1
        else:
            j += 1


def simulate_samples(config: SimConfig, indices: Iterable[int] | None = None) -> np.ndarray:
    """Absorption times of the given replications (default: all of them)."""
    p = config.params
    if indices is None:
        indices = range(config.samples)
    out = []
    if config.model == "physical_2d":
        cdf = _conditional_cdf(p) if config.initial is None else None
        for i in indices:
            rng = substream(config.seed, i)
            if cdf is None:
                k0, j0 = config.initial
            else:
                k0 = int(np.searchsorted(cdf, rng.random(), side="left")) + 1
                j0 = 1
            out.append(_lifetime_2d(p, k0, j0, _Uniforms(rng)))
    else:
        from .approx_ph import corrected_rates

        # up[j] is the corrected rate out of j copies; zero at the cap
        up = [0.0] + list(corrected_rates(p).rates) + [0.0]
        j0 = 1 if config.initial is None else int(config.initial)
        for i in indices:
            out.append(_lifetime_1d(p.lam, up, j0, _Uniforms(substream(config.seed, i))))
    return np.array(out)


def summarize(times: np.ndarray, seed: int) -> SimResult:
    n = times.size
    mean = float(np.mean(times))
    sq = times * times
    m2 = float(np.mean(sq))
    if n > 1:
        se = float(np.std(times, ddof=1) / math.sqrt(n))
        se2 = float(np.std(sq, ddof=1) / math.sqrt(n))
    else:
        se = se2 = 0.0
    return SimResult(mean, m2, se, n, seed, se2)


def simulate_lifetime(config: SimConfig, workers: int = 1) -> SimResult:
    """Run all replications and aggregate them.

    With ``workers > 1`` contiguous index blocks run in separate processes;
    the blocks are concatenated in index order, so the result is identical
    to a serial run.
    """
    if workers <= 1 or config.samples < 2 * workers:
        return summarize(simulate_samples(config), config.seed)
    from concurrent.futures import ProcessPoolExecutor

    bounds = np.linspace(0, config.samples, workers + 1).astype(int)
    blocks = [range(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]
    with ProcessPoolExecutor(workers) as pool:
        parts = list(pool.map(simulate_samples, [config] * workers, blocks))
    return summarize(np.concatenate(parts), config.seed)
