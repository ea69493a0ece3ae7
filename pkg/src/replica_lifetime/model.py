"""Model parameters and the lifetime report shared by all solvers."""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field
from typing import Any

from .errors import DTooLarge, NegativeRate, NonFiniteInput, NonPositiveLambda, ZeroD

D_MAX_DEFAULT = 10_000

METHODS = ("approx_ph", "qbd", "simulation")


@dataclass(frozen=True)
class ModelParams:
    """Rates of the replicated-file model.

    Attributes:
        lam: failure rate of a single data center.
        beta: arrival rate of new data centers.
        mu: per-copy replication rate.
        d: maximum number of simultaneous copies of a file.
    """

    lam: float
    beta: float
    mu: float
    d: int


def validate_params(lam, beta=None, mu=None, d=None, *, d_max: int = D_MAX_DEFAULT) -> ModelParams:
    """Check raw rates and return a :class:`ModelParams`.

    Accepts either the four scalars or an existing ``ModelParams`` (which is
    re-validated and returned as an equal value).
    """
    if isinstance(lam, ModelParams):
        lam, beta, mu, d = lam.lam, lam.beta, lam.mu, lam.d

    values = {}
    for name, raw in (("lambda", lam), ("beta", beta), ("mu", mu)):
        if isinstance(raw, bool) or not isinstance(raw, numbers.Real):
            raise NonFiniteInput(name, f"expected a real number, got {raw!r}")
        x = float(raw)
        if not math.isfinite(x):
            raise NonFiniteInput(name, f"must be finite, got {x}")
        values[name] = x

    if values["lambda"] <= 0.0:
        raise NonPositiveLambda("lambda", f"must be > 0, got {values['lambda']}")
    for name in ("beta", "mu"):
        if values[name] < 0.0:
            raise NegativeRate(name, f"must be >= 0, got {values[name]}")

    if isinstance(d, bool) or not isinstance(d, numbers.Integral):
        if isinstance(d, numbers.Real) and math.isfinite(d) and float(d).is_integer():
            d = int(d)
        else:
            raise NonFiniteInput("d", f"expected an integer, got {d!r}")
    d = int(d)
    if d < 1:
        raise ZeroD("d", f"must be >= 1, got {d}")
    if d > d_max:
        raise DTooLarge("d", f"must be <= {d_max}, got {d}")

    return ModelParams(values["lambda"], values["beta"], values["mu"], d)


@dataclass(frozen=True)
class LifetimeReport:
    """Raw moments of a file lifetime together with how they were obtained.

    ``moments[0]`` is the first moment (the mean); ``meta`` carries the
    truncation level, sample count or tolerance that produced the numbers.
    """

    method: str
    moments: tuple[float, ...]
    std_error: float = 0.0
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not self.moments:
            raise ValueError("at least one moment is required")
        object.__setattr__(self, "moments", tuple(float(m) for m in self.moments))

    @property
    def mean(self) -> float:
        return self.moments[0]

    @property
    def variance(self) -> float | None:
        if len(self.moments) < 2:
            return None
        return self.moments[1] - self.moments[0] ** 2
