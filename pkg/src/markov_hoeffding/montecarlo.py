"""Monte Carlo sampling of stationary chains and of the regeneration chain.

The regeneration construction draws refresh indicators ``I'_1 = 1``,
``I'_k ~ Bernoulli(1 - lam0)`` and innovations ``Z_j ~ pi``; the state at
time ``k`` is the innovation drawn at the last refresh time ``J(k) <= k``.
The resulting chain has kernel ``Q = lam0 I + (1 - lam0) A``, and
``sum_k f(X'_k) = sum_j N(j) f(Z_j)`` with ``N(j)`` the length of the
block started at ``j``.  Replacing ``f(Z_j)`` by ``B_j ~ Bernoulli(f(Z_j))``
with the same refresh times gives the two-state chain ``M(lam0, mu)``
coupled to it.

Seeding
-------
Replicates are generated in fixed-size blocks; block ``b`` draws from
``default_rng([seed, b])``.  Counts are integers and means are combined
with ``math.fsum``, so results do not depend on the order in which blocks
are evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np
from scipy import stats

from .chain_model import ReversibleChainSpec

__all__ = [
    "BLOCK",
    "ConvexOrderRow",
    "RegenerationPath",
    "TailEstimate",
    "clopper_pearson",
    "convex_order_check",
    "default_psi_family",
    "estimate_tail",
    "regeneration_batch",
    "sample_regeneration_path",
    "sample_stationary_path",
    "stationary_batch",
    "stationary_sum_sampler",
    "two_state_sum_sampler",
]

BLOCK = 4096
DEFAULT_SEED = 20040501
_TIE_TOL = 1e-9


def _categorical(rng, probs, size):
    cum = np.cumsum(probs)
    cum[-1] = 1.0
    return np.minimum(np.searchsorted(cum, rng.random(size), side="right"), len(probs) - 1)


def stationary_batch(spec: ReversibleChainSpec, n: int, rng, size: int) -> np.ndarray:
    """``size`` independent stationary paths of length ``n`` (state indices)."""
    cum = np.cumsum(spec.P, axis=1)
    cum[:, -1] = 1.0
    m = spec.size
    out = np.empty((size, n), dtype=np.int64)
    out[:, 0] = _categorical(rng, spec.pi, size)
    u = rng.random((size, n))
    for k in range(1, n):
        rows = cum[out[:, k - 1]]
        out[:, k] = np.minimum((u[:, k, None] >= rows).sum(axis=1), m - 1)
    return out


def sample_stationary_path(spec: ReversibleChainSpec, n: int, seed=DEFAULT_SEED) -> np.ndarray:
    """One stationary path ``X_1 ~ pi``, transitions by ``P``."""
    return stationary_batch(spec, n, np.random.default_rng(seed), 1)[0]


@dataclass(frozen=True, eq=False)
class RegenerationPath:
    refresh: np.ndarray  # I'_k, bool
    innovations: np.ndarray  # Z_j, state indices
    counts: np.ndarray  # N(j)
    states: np.ndarray  # X'_k
    last_refresh: np.ndarray  # J(k)


def regeneration_batch(pi, lam0: float, n: int, rng, size: int):
    """Refresh indicators, innovations and last-refresh indices, each (size, n)."""
    refresh = rng.random((size, n)) < (1.0 - lam0)
    refresh[:, 0] = True
    Z = _categorical(rng, np.asarray(pi, dtype=float), (size, n))
    idx = np.where(refresh, np.arange(n), 0)
    last = np.maximum.accumulate(idx, axis=1)
    return refresh, Z, last


def _block_counts(last, n):
    size = last.shape[0]
    counts = np.zeros((size, n), dtype=np.int64)
    np.add.at(counts, (np.repeat(np.arange(size), n), last.ravel()), 1)
    return counts


def sample_regeneration_path(pi, lam0: float, n: int, seed=DEFAULT_SEED) -> RegenerationPath:
    """One path of the regeneration chain with kernel ``lam0 I + (1-lam0) A``."""
    if not 0.0 <= lam0 < 1.0:
        raise ValueError("lam0 must lie in [0, 1)")
    refresh, Z, last = regeneration_batch(pi, lam0, n, np.random.default_rng(seed), 1)
    states = np.take_along_axis(Z, last, axis=1)
    return RegenerationPath(
        refresh=refresh[0],
        innovations=Z[0],
        counts=_block_counts(last, n)[0],
        states=states[0],
        last_refresh=last[0],
    )


def stationary_sum_sampler(spec: ReversibleChainSpec) -> Callable:
    """Sampler of ``S_n`` for the chain itself, for :func:`estimate_tail`."""

    def sampler(rng, size, n):
        return spec.f[stationary_batch(spec, n, rng, size)].sum(axis=1)

    return sampler


def regeneration_sum_sampler(pi, f, lam0) -> Callable:
    f = np.asarray(f, dtype=float)

    def sampler(rng, size, n):
        _, Z, last = regeneration_batch(pi, lam0, n, rng, size)
        return f[np.take_along_axis(Z, last, axis=1)].sum(axis=1)

    return sampler


def two_state_sum_sampler(lam0, mu) -> Callable:
    """Sampler of ``sum Y_k`` for ``Y`` with kernel ``M(lam0, mu)`` on {0, 1}."""
    return regeneration_sum_sampler([1.0 - mu, mu], [0.0, 1.0], lam0)


def clopper_pearson(count: int, reps: int, alpha: float):
    """One-sided exact binomial limits ``(lower, upper)``, each at level ``1 - alpha``."""
    lower = 0.0 if count == 0 else float(stats.beta.ppf(alpha, count, reps - count + 1))
    upper = 1.0 if count == reps else float(stats.beta.ppf(1.0 - alpha, count + 1, reps - count))
    return lower, upper


@dataclass(frozen=True)
class TailEstimate:
    p_hat: float
    count: int
    reps: int
    alpha: float
    lower: float
    upper: float

    @property
    def radius(self) -> float:
        return self.upper - self.p_hat


def _blocks(reps):
    b = 0
    while b * BLOCK < reps:
        yield b, min(BLOCK, reps - b * BLOCK)
        b += 1


def estimate_tail(sampler: Callable, n: int, threshold: float, reps: int, alpha=0.01, seed=DEFAULT_SEED) -> TailEstimate:
    """Fraction of replicates with ``S_n >= threshold`` plus Clopper-Pearson limits."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    cut = threshold - _TIE_TOL * max(1.0, abs(threshold))
    count = 0
    for b, size in _blocks(reps):
        sums = sampler(np.random.default_rng([seed, b]), size, n)
        count += int(np.count_nonzero(sums >= cut))
    lower, upper = clopper_pearson(count, reps, alpha)
    return TailEstimate(p_hat=count / reps, count=count, reps=reps, alpha=alpha, lower=lower, upper=upper)


def default_psi_family(n: int, mu: float) -> Dict[str, Callable]:
    """Convex test functions: exponentials, the square and call payoffs."""
    fam = {f"exp({t}x)": (lambda s, t=t: np.exp(t * s)) for t in (0.25, 0.5)}
    fam["x^2"] = np.square
    for c in (n * mu, n * mu + math.sqrt(n)):
        fam[f"(x-{c:.6g})+"] = lambda s, c=c: np.maximum(s - c, 0.0)
    return fam


@dataclass(frozen=True)
class ConvexOrderRow:
    """Paired comparison of ``E Psi(S'_n)`` and ``E Psi(sum Y_k)``.

    ``radius`` is the one-sided ``1 - alpha`` normal radius of the mean
    paired difference; ``passed`` means ``mean_q <= mean_two + radius``.
    """

    name: str
    mean_q: float
    mean_two: float
    diff: float
    se: float
    radius: float

    @property
    def passed(self) -> bool:
        return self.mean_q <= self.mean_two + self.radius


def convex_order_check(
    spec: ReversibleChainSpec,
    n: int,
    reps: int,
    alpha=0.01,
    seed=DEFAULT_SEED,
    lam0: Optional[float] = None,
    psis: Optional[Dict[str, Callable]] = None,
):
    """Check ``E Psi(S'_n) <= E Psi(sum Y_k)`` with common random numbers.

    The regeneration chain uses ``spec.pi`` and the normalized ``spec.f``;
    the two-state chain shares its refresh times and block lengths, with
    ``B_j ~ Bernoulli(f(Z_j))`` drawn given ``Z_j``.

    Returns
    -------
    list of ConvexOrderRow
    """
    if lam0 is None:
        from .spectral import decompose, gap_summary

        lam0 = gap_summary(decompose(spec)).lam0
    if psis is None:
        psis = default_psi_family(n, spec.mu)
    f = spec.f
    acc = {k: ([], [], [], []) for k in psis}
    for b, size in _blocks(reps):
        rng = np.random.default_rng([seed, b])
        _, Z, last = regeneration_batch(spec.pi, lam0, n, rng, size)
        Bj = rng.random((size, n)) < f[Z]
        counts = _block_counts(last, n)
        s_q = (counts * f[Z]).sum(axis=1)
        s_two = (counts * Bj).sum(axis=1).astype(float)
        for name, psi in psis.items():
            a, c = psi(s_q), psi(s_two)
            dd = a - c
            acc[name][0].append(math.fsum(a))
            acc[name][1].append(math.fsum(c))
            acc[name][2].append(math.fsum(dd))
            acc[name][3].append(math.fsum(dd * dd))
    z = float(stats.norm.ppf(1.0 - alpha))
    rows = []
    for name in psis:
        sa, sc, sd, sdd = (math.fsum(v) for v in acc[name])
        mean_d = sd / reps
        var = max(sdd / reps - mean_d * mean_d, 0.0) * reps / max(reps - 1, 1)
        se = math.sqrt(var / reps)
        rows.append(
            ConvexOrderRow(name=name, mean_q=sa / reps, mean_two=sc / reps, diff=mean_d, se=se, radius=z * se)
        )
    return rows
