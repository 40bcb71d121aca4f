"""Exact stationary tail probabilities for small instances.

When every value of the normalized observable is a multiple of ``1/L``
the sum ``L S_n`` is an integer, and its exact law under the stationary
chain follows from a forward dynamic program over (state, partial sum).
Path enumeration and the binomial tail serve as independent checks.

The event ``S_n >= c`` is resolved on the lattice as
``L S_n >= ceil(L c)``, ties included.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.special import gammaln, logsumexp

from .chain_model import ReversibleChainSpec
from .errors import BudgetExceededError, NonLatticeError

__all__ = [
    "LatticeObservable",
    "TailTable",
    "binomial_tail",
    "detect_lattice",
    "enumerate_paths",
    "exact_tail_dp",
    "lattice_threshold",
    "sum_distribution_dp",
]

DP_BUDGET = 10**6
EXACT_BUDGET = 10**4
ENUM_CAP = 10**7
_LATTICE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class LatticeObservable:
    """``f(i) = levels[i] / L``."""

    L: int
    levels: np.ndarray


@dataclass(frozen=True, eq=False)
class TailTable:
    """Exact law of ``S_n``.

    ``values`` are the distinct attainable sums in increasing order and
    ``probs`` their probabilities.
    """

    n: int
    values: np.ndarray
    probs: np.ndarray
    method: str

    def tail(self, threshold: float) -> float:
        """``P[S_n >= threshold]`` with ties included."""
        tol = _LATTICE_TOL * max(1.0, abs(threshold))
        return float(math.fsum(self.probs[self.values >= threshold - tol]))

    def mgf(self, t: float) -> float:
        return float(math.fsum(self.probs * np.exp(t * self.values)))

    @property
    def total(self) -> float:
        return float(math.fsum(self.probs))


def detect_lattice(f, L=None, L_max=64) -> LatticeObservable:
    """Find the smallest ``L <= L_max`` with ``f * L`` integral.

    Raises
    ------
    NonLatticeError
    """
    f = np.asarray(f, dtype=float)
    candidates = [L] if L is not None else range(1, L_max + 1)
    for cand in candidates:
        scaled = f * cand
        levels = np.rint(scaled)
        if np.all(np.abs(scaled - levels) <= _LATTICE_TOL * cand):
            levels = levels.astype(np.int64)
            if levels.min() < 0 or levels.max() > cand:
                break
            return LatticeObservable(L=int(cand), levels=levels)
    raise NonLatticeError(f"observable is not on a 1/L lattice with L <= {L if L is not None else L_max}")


def lattice_threshold(threshold: float, L: int) -> int:
    """Smallest integer ``k`` with ``k >= L * threshold`` (roundoff-tolerant)."""
    v = threshold * L
    return int(math.ceil(v - _LATTICE_TOL * max(1.0, abs(v))))


def _kahan_dp(P, pi, levels, n):
    m = len(pi)
    width = n * int(levels.max()) + 1
    cur = np.zeros((m, width))
    cur[np.arange(m), levels] = pi
    for _ in range(n - 1):
        acc = np.zeros((m, width))
        comp = np.zeros((m, width))
        for i in range(m):
            y = np.outer(P[i], cur[i]) - comp
            t = acc + y
            comp = (t - acc) - y
            acc = t
        nxt = np.zeros((m, width))
        for j in range(m):
            k = levels[j]
            nxt[j, k:] = acc[j, : width - k]
        cur = nxt
    return cur.sum(axis=0)


def _exact_dp(P, pi, levels, n):
    m = len(pi)
    Pq = [[Fraction(float(v)) for v in row] for row in P]
    cur = [dict() for _ in range(m)]
    for j in range(m):
        cur[j][int(levels[j])] = Fraction(float(pi[j]))
    for _ in range(n - 1):
        nxt = [dict() for _ in range(m)]
        for i in range(m):
            for s, p in cur[i].items():
                for j in range(m):
                    if Pq[i][j]:
                        key = s + int(levels[j])
                        nxt[j][key] = nxt[j].get(key, 0) + p * Pq[i][j]
        cur = nxt
    total = {}
    for d in cur:
        for s, p in d.items():
            total[s] = total.get(s, 0) + p
    return total


def sum_distribution_dp(
    spec: ReversibleChainSpec,
    n: int,
    lattice: Optional[LatticeObservable] = None,
    budget=DP_BUDGET,
    exact=False,
) -> TailTable:
    """Exact law of ``S_n`` for a lattice observable.

    Parameters
    ----------
    exact : bool
        Use rational arithmetic on the binary values of ``P`` and ``pi``;
        allowed when ``|E| n L <= 1e4``.
    """
    if lattice is None:
        lattice = detect_lattice(spec.f)
    L = lattice.L
    if n * L > budget:
        raise BudgetExceededError(f"n L = {n * L} exceeds the DP budget {budget}")
    if exact:
        if spec.size * n * L > EXACT_BUDGET:
            raise BudgetExceededError("exact mode limited to |E| n L <= 1e4")
        dist = _exact_dp(spec.P, spec.pi, lattice.levels, n)
        keys = sorted(dist)
        return TailTable(
            n=n,
            values=np.array(keys, dtype=float) / L,
            probs=np.array([float(dist[k]) for k in keys]),
            method="dp-exact",
        )
    probs = _kahan_dp(spec.P, spec.pi, lattice.levels, n)
    values = np.arange(len(probs), dtype=float) / L
    return TailTable(n=n, values=values, probs=probs, method="dp")


def exact_tail_dp(
    spec: ReversibleChainSpec,
    n: int,
    threshold: float,
    lattice: Optional[LatticeObservable] = None,
    budget=DP_BUDGET,
    exact=False,
) -> float:
    """``P_pi[S_n >= threshold]`` for the normalized observable."""
    if lattice is None:
        lattice = detect_lattice(spec.f)
    table = sum_distribution_dp(spec, n, lattice, budget, exact)
    k = lattice_threshold(threshold, lattice.L)
    ints = np.rint(table.values * lattice.L)
    return float(math.fsum(table.probs[ints >= k]))


def enumerate_paths(spec: ReversibleChainSpec, n: int, lattice: Optional[LatticeObservable] = None) -> TailTable:
    """Law of ``S_n`` by summing ``pi_{x1} p_{x1 x2} ... `` over all paths.

    Sums are accumulated as lattice integers when ``lattice`` is given
    (or detectable) and as floats otherwise.
    """
    m = spec.size
    if m**n > ENUM_CAP:
        raise BudgetExceededError(f"{m}^{n} paths exceed the enumeration cap {ENUM_CAP}")
    if lattice is None:
        try:
            lattice = detect_lattice(spec.f)
        except NonLatticeError:
            lattice = None
    P, pi = spec.P, spec.pi
    out = {}
    for path in itertools.product(range(m), repeat=n):
        p = pi[path[0]]
        for a, b in zip(path, path[1:]):
            p *= P[a, b]
        if lattice is not None:
            key = int(sum(int(lattice.levels[s]) for s in path))
        else:
            key = math.fsum(spec.f[s] for s in path)
        out[key] = out.get(key, 0.0) + p
    keys = sorted(out)
    scale = lattice.L if lattice is not None else 1
    return TailTable(
        n=n,
        values=np.array(keys, dtype=float) / scale,
        probs=np.array([out[k] for k in keys]),
        method="enumeration",
    )


def binomial_tail(mu: float, n: int, k: int) -> float:
    """``sum_{j >= k} C(n, j) mu^j (1-mu)^{n-j}``, summed in log space."""
    if not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n")
    if k == 0:
        return 1.0
    j = np.arange(k, n + 1)
    logpmf = gammaln(n + 1) - gammaln(j + 1) - gammaln(n - j + 1) + j * math.log(mu) + (n - j) * math.log1p(-mu)
    return float(min(1.0, math.exp(logsumexp(logpmf))))
