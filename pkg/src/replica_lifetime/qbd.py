"""Exact two-dimensional lifetime model solved with an RG-factorization.

The state ``(k, j)`` holds ``k`` working data centers of which ``j`` store a
copy of the tagged file. Levels are indexed by ``k`` and carry
``min(k, d)`` phases (``j = 1..min(k, d)``); every ``(k, 0)`` state is lumped
into a single absorbing state. The transient generator ``T`` is block
tridiagonal and is factorized as ``(I - R_L) U_D (I - G_U)``, which turns
every solve against ``T`` into a forward sweep, block-diagonal solves and a
backward sweep.

Levels are truncated at ``L_max`` by dropping the arrivals out of the top
level (reflection). Lifetime moments are monotone in ``L_max``, so
:func:`mean_lifetime_qbd` doubles the level until the mean settles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .errors import NoConvergence, SingularU, TruncationTooSmall
from .linalg import lu, lu_solve, solve, solve_right
from .model import LifetimeReport, ModelParams, validate_params
from .stationary import poisson_stationary

LEVEL_CAP_DEFAULT = 16_384


def phase_count(k: int, d: int) -> int:
    return min(k, d)


@dataclass(frozen=True)
class QbdBlocks:
    """Blocks of the truncated generator, stored per level.

    ``down[i]``, ``local[i]``, ``up[i]`` and ``exit[i]`` belong to level
    ``k = i + 1``: ``down[i]`` is ``A_{k,k-1}`` (``None`` at level 1),
    ``local[i]`` is ``A_{k,k}``, ``up[i]`` is ``A_{k,k+1}`` (``None`` at the
    top level) and ``exit[i]`` is the absorption-rate vector of the level.
    """

    params: ModelParams
    L_max: int
    down: list
    local: list
    up: list
    exit: list

    def phases(self, k: int) -> int:
        return phase_count(k, self.params.d)

    @property
    def offsets(self) -> np.ndarray:
        sizes = [self.phases(k) for k in range(1, self.L_max + 1)]
        return np.concatenate([[0], np.cumsum(sizes)])

    @property
    def n_states(self) -> int:
        return int(self.offsets[-1])

    def dense(self) -> np.ndarray:
        """Assemble the truncated ``T`` as a dense matrix (for checks only)."""
        off = self.offsets
        t = np.zeros((self.n_states, self.n_states))
        for i in range(self.L_max):
            rows = slice(off[i], off[i + 1])
            t[rows, off[i]:off[i + 1]] = self.local[i]
            if self.down[i] is not None:
                t[rows, off[i - 1]:off[i]] = self.down[i]
            if self.up[i] is not None:
                t[rows, off[i + 1]:off[i + 2]] = self.up[i]
        return t

    def dense_exit(self) -> np.ndarray:
        return np.concatenate(self.exit)


def level_rates(params: ModelParams, k: int, j: int, top: bool = False) -> dict:
    """Outgoing jump rates of state ``(k, j)`` keyed by target state.

    The absorbing state is keyed as ``"absorb"``. ``top`` suppresses arrivals
    (reflection at the truncation level).
    """
    lam, beta, mu, d = params.lam, params.beta, params.mu, params.d
    out = {}
    # a copy-holding center fails
    out["absorb" if j == 1 else (k - 1, j - 1)] = j * lam
    # a center without a copy fails
    if k - j > 0:
        out[(k - 1, j)] = (k - j) * lam
    # a copy completes onto a free center
    if j < phase_count(k, d) and mu > 0:
        out[(k, j + 1)] = j * mu
    if not top and beta > 0:
        out[(k + 1, j)] = beta
    return out


def build_blocks(params: ModelParams, L_max: int) -> QbdBlocks:
    params = validate_params(params)
    d = params.d
    if L_max <= d:
        raise TruncationTooSmall(f"L_max must exceed d={d}, got {L_max}")

    down, local, up, exit_ = [], [], [], []
    for k in range(1, L_max + 1):
        m = phase_count(k, d)
        m_lo = phase_count(k - 1, d)
        m_hi = phase_count(k + 1, d)
        top = k == L_max
        a_down = np.zeros((m, m_lo)) if k > 1 else None
        a_local = np.zeros((m, m))
        a_up = None if top else np.zeros((m, m_hi))
        ex = np.zeros(m)
        for j in range(1, m + 1):
            for target, rate in level_rates(params, k, j, top).items():
                if target == "absorb":
                    ex[j - 1] += rate
                    continue
                k2, j2 = target
                if k2 == k - 1:
                    a_down[j - 1, j2 - 1] += rate
                elif k2 == k:
                    a_local[j - 1, j2 - 1] += rate
                else:
                    a_up[j - 1, j2 - 1] += rate
            total = ex[j - 1] + a_local[j - 1].sum()
            if a_down is not None:
                total += a_down[j - 1].sum()
            if a_up is not None:
                total += a_up[j - 1].sum()
            a_local[j - 1, j - 1] = -total
        down.append(a_down)
        local.append(a_local)
        up.append(a_up)
        exit_.append(ex)
    return QbdBlocks(params, L_max, down, local, up, exit_)


@dataclass(frozen=True)
class RgFactorization:
    """U-, R- and G-measures of a truncated block-tridiagonal generator.

    ``u[l]`` is ``U_l`` for ``l = 0..L_max-1``; ``r[k]`` is ``R_k`` for
    ``k = 1..L_max-1`` (``r[0]`` is ``None``); ``g[l]`` is ``G_l`` for
    ``l = 0..L_max-2``.
    """

    u: list
    r: list
    g: list
    u_lu: list

    @property
    def L_max(self) -> int:
        return len(self.u)

    def reassemble(self, offsets) -> np.ndarray:
        """Dense ``(I - R_L) U_D (I - G_U)``."""
        n = int(offsets[-1])
        lower = np.eye(n)
        diag = np.zeros((n, n))
        upper = np.eye(n)
        for i in range(self.L_max):
            s = slice(offsets[i], offsets[i + 1])
            diag[s, s] = self.u[i]
            if i > 0:
                lower[s, offsets[i - 1]:offsets[i]] = -self.r[i]
            if i < self.L_max - 1:
                upper[s, offsets[i + 1]:offsets[i + 2]] = -self.g[i]
        return lower @ diag @ upper


def factorization_residual(blocks: QbdBlocks, fact: RgFactorization) -> float:
    """Max-norm of ``(I - R_L) U_D (I - G_U) - T``, computed block by block."""
    worst = 0.0
    for k in range(blocks.L_max):
        diag = fact.u[k].copy()
        if k > 0:
            diag += fact.r[k] @ fact.u[k - 1] @ fact.g[k - 1]
            worst = max(worst, np.max(np.abs(-fact.r[k] @ fact.u[k - 1] - blocks.down[k])))
        worst = max(worst, np.max(np.abs(diag - blocks.local[k])))
        if k < blocks.L_max - 1:
            worst = max(worst, np.max(np.abs(-fact.u[k] @ fact.g[k] - blocks.up[k])))
    return float(worst)


def rg_factorize(blocks: QbdBlocks) -> RgFactorization:
    """Forward U-recursion ``U_k = A_{k+1,k+1} + A_{k+1,k} (-U_{k-1})^{-1} A_{k,k+1}``."""
    L = blocks.L_max
    u = [blocks.local[0].copy()]
    u_lu = [lu(-u[0], SingularU)]
    r = [None]
    g = []
    for k in range(1, L):
        # G_{k-1} = (-U_{k-1})^{-1} A_{k,k+1}
        g.append(lu_solve(u_lu[k - 1], blocks.up[k - 1]))
        # R_k = A_{k+1,k} (-U_{k-1})^{-1}
        r.append(solve_right(blocks.down[k], -u[k - 1], SingularU))
        u_k = blocks.local[k] + blocks.down[k] @ g[k - 1]
        u.append(u_k)
        u_lu.append(lu(-u_k, SingularU))
    return RgFactorization(u, r, g, u_lu)


def block_solve(fact: RgFactorization, rhs: list) -> list:
    """Solve ``T x = rhs`` with ``rhs`` and the result given per level."""
    L = fact.L_max
    # (I - R_L) z = rhs
    z = [np.asarray(rhs[0], dtype=float)]
    for k in range(1, L):
        z.append(rhs[k] + fact.r[k] @ z[k - 1])
    # U_D w = z, with U_k = -(-U_k)
    w = [-lu_solve(fact.u_lu[k], z[k]) for k in range(L)]
    # (I - G_U) x = w
    x = [None] * L
    x[L - 1] = w[L - 1]
    for k in range(L - 2, -1, -1):
        x[k] = w[k] + fact.g[k] @ x[k + 1]
    return x


class LevelVector:
    """Per-level vector indexed by state ``(k, j)``, both 1-based."""

    def __init__(self, levels: list):
        self.levels = levels

    def __getitem__(self, state):
        k, j = state
        return float(self.levels[k - 1][j - 1])

    def flat(self) -> np.ndarray:
        return np.concatenate(self.levels)

    def dot(self, other: "LevelVector") -> float:
        return float(sum(a @ b for a, b in zip(self.levels, other.levels)))


def expected_absorption_vector(blocks: QbdBlocks, fact: RgFactorization | None = None) -> LevelVector:
    """Mean time to absorption from every transient state: ``x = -T^{-1} e``."""
    if fact is None:
        fact = rg_factorize(blocks)
    rhs = [-np.ones(blocks.phases(k)) for k in range(1, blocks.L_max + 1)]
    return LevelVector(block_solve(fact, rhs))


def absorption_moments(blocks: QbdBlocks, fact: RgFactorization, k_max: int) -> list[LevelVector]:
    """Vectors ``x_n = (-1)^n n! T^{-n} e`` for ``n = 1..k_max``."""
    x = [np.ones(blocks.phases(k)) for k in range(1, blocks.L_max + 1)]
    out = []
    for n in range(1, k_max + 1):
        x = [-n * v for v in block_solve(fact, x)]
        out.append(LevelVector(x))
    return out


def default_initial(params: ModelParams, L_max: int) -> LevelVector:
    """One copy, network size Poisson(beta/lambda) conditioned on at least one center.

    Mass above ``L_max`` is placed on the top level.
    """
    params = validate_params(params)
    stat = poisson_stationary(params, 1e-16)
    theta = np.zeros(L_max + 1)
    n = min(len(stat.probs), L_max + 1)
    theta[:n] = stat.probs[:n]
    norm = 1.0 - stat.probs[0]
    if norm <= 0.0:
        raise ValueError("beta/lambda is too small for the default initial law; pass initial")
    theta[L_max] = stat.survival(L_max - 1)
    levels = []
    for k in range(1, L_max + 1):
        v = np.zeros(phase_count(k, params.d))
        v[0] = theta[k] / norm
        levels.append(v)
    return LevelVector(levels)


def initial_from_mapping(params: ModelParams, L_max: int, masses: Mapping) -> LevelVector:
    """Place ``{(k, j): mass}`` on the truncated levels; levels above ``L_max`` are lumped onto it."""
    d = params.d
    levels = [np.zeros(phase_count(k, d)) for k in range(1, L_max + 1)]
    total = 0.0
    for (k, j), mass in masses.items():
        if mass < 0:
            raise ValueError(f"negative mass at {(k, j)}")
        if j == 0:
            # starts absorbed; contributes nothing to the moments
            total += mass
            continue
        if not (1 <= j <= phase_count(k, d)):
            raise ValueError(f"state {(k, j)} is not a transient state for d={d}")
        levels[min(k, L_max) - 1][j - 1] += mass
        total += mass
    if total > 1.0 + 1e-12:
        raise ValueError(f"initial masses sum to {total} > 1")
    return LevelVector(levels)


def _initial_vector(params, L_max, initial) -> LevelVector:
    if initial is None:
        return default_initial(params, L_max)
    if callable(initial):
        return initial(params, L_max)
    return initial_from_mapping(params, L_max, initial)


def _start_level(params: ModelParams, tol: float) -> int:
    stat = poisson_stationary(params, min(tol, 1e-3))
    return max(params.d + 1, stat.truncation_level + 1, 2)


def moments_at_level(params: ModelParams, L_max: int, initial=None, k_max: int = 2) -> list[float]:
    blocks = build_blocks(params, L_max)
    fact = rg_factorize(blocks)
    alpha = _initial_vector(params, L_max, initial)
    return [alpha.dot(x) for x in absorption_moments(blocks, fact, k_max)]


def mean_lifetime_qbd(params: ModelParams, initial: Mapping | Callable | None = None,
                      tol: float = 1e-8, k_max: int = 2,
                      level_cap: int = LEVEL_CAP_DEFAULT,
                      L_start: int | None = None) -> LifetimeReport:
    """Lifetime moments of the exact model with a certified truncation level.

    ``initial`` is ``None`` (default law, see :func:`default_initial`), a
    mapping ``{(k, j): mass}`` or a callable ``(params, L_max) -> LevelVector``.
    The level starts at the Poisson tail quantile (at least ``d + 1``) and is
    doubled until the mean changes by less than ``tol`` relative; the report
    carries the final level and the history of means.
    """
    params = validate_params(params)
    if not 0.0 < tol < 1.0:
        raise ValueError(f"tol must lie in (0, 1), got {tol}")
    L = L_start if L_start is not None else _start_level(params, tol)
    L = max(L, params.d + 1)
    if L > level_cap:
        raise NoConvergence(f"starting level {L} exceeds the level cap {level_cap}")

    history = []
    prev = moments_at_level(params, L, initial, k_max)
    history.append((L, prev[0]))
    while True:
        L2 = 2 * L
        if L2 > level_cap:
            raise NoConvergence(
                f"mean did not settle to rel. tol {tol} below level cap {level_cap} "
                f"(last levels {history[-2:]})")
        cur = moments_at_level(params, L2, initial, k_max)
        history.append((L2, cur[0]))
        L = L2
        if abs(cur[0] - prev[0]) <= tol * abs(cur[0]):
            break
        prev = cur
    return LifetimeReport("qbd", cur, 0.0,
                          {"L_max": L, "tol": tol, "d": params.d, "levels": history})
