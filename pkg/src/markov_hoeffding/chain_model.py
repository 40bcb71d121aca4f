"""Ingestion and validation of finite reversible chains.

A chain is described by a row-stochastic matrix ``P``, its stationary
distribution ``pi`` and a real observable ``f`` on the states.  Everything
downstream works with ``f`` affinely rescaled to ``[0, 1]``; the raw
endpoints ``a = min f`` and ``b = max f`` are kept so results can be
reported in raw units again.

The chain-spec document is JSON::

    {
      "states": ["s0", "s1"],
      "transition": [[0.75, 0.25], [0.25, 0.75]],
      "observable": [0.0, 1.0],
      "stationary": [0.5, 0.5]        # optional
    }
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import ChainValidationError

__all__ = [
    "DEFAULT_TOL",
    "ReversibleChainSpec",
    "chain_from_arrays",
    "compute_stationary",
    "denormalize_observable",
    "detailed_balance_residual",
    "is_irreducible",
    "load_chain",
    "normalize_observable",
    "parse_chain",
    "serialize_chain",
    "two_sided_setup",
]

DEFAULT_TOL = 1e-10
# Supplied stationary vectors must be normalized to this accuracy.
_PI_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ReversibleChainSpec:
    """Validated chain bundle.

    Attributes
    ----------
    states : tuple of str
        State labels in document order.
    P : ndarray, shape (m, m)
        Row-stochastic, irreducible, reversible with respect to ``pi``.
    pi : ndarray, shape (m,)
        Strictly positive stationary distribution.
    f : ndarray, shape (m,)
        Observable rescaled to ``[0, 1]`` (min 0, max 1).
    f_raw : ndarray, shape (m,)
        Observable as supplied.
    a, b : float
        Raw endpoints ``min f_raw`` and ``max f_raw``.
    mu : float
        Stationary mean of ``f``, strictly inside ``(0, 1)``.
    """

    states: tuple
    P: np.ndarray
    pi: np.ndarray
    f: np.ndarray
    f_raw: np.ndarray
    a: float
    b: float
    mu: float

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def mu_bar(self) -> float:
        return 1.0 - self.mu

    @property
    def mu_raw(self) -> float:
        return self.a + (self.b - self.a) * self.mu

    @property
    def scale(self) -> float:
        return self.b - self.a

    def to_normalized_eps(self, eps_raw: float) -> float:
        return eps_raw / (self.b - self.a)

    def to_raw_eps(self, eps: float) -> float:
        return eps * (self.b - self.a)

    def to_normalized_x(self, x_raw: float) -> float:
        return (x_raw - self.a) / (self.b - self.a)

    def to_raw_x(self, x: float) -> float:
        return self.a + (self.b - self.a) * x


def normalize_observable(f):
    """Affinely map ``f`` onto ``[0, 1]``.

    Returns
    -------
    g : ndarray
        ``(f - a) / (b - a)``.
    a, b : float
        Minimum and maximum of ``f``.

    Raises
    ------
    ChainValidationError
        If ``f`` is constant.
    """
    f = np.asarray(f, dtype=float)
    a = float(f.min())
    b = float(f.max())
    if not b > a:
        raise ChainValidationError("observable is constant (a = b)")
    g = (f - a) / (b - a)
    # pin the endpoints exactly; the division may round them
    g[f == a] = 0.0
    g[f == b] = 1.0
    return g, a, b


def denormalize_observable(g, a, b):
    """Inverse of :func:`normalize_observable`."""
    return a + (b - a) * np.asarray(g, dtype=float)


def is_irreducible(P) -> bool:
    """True when the transition graph of ``P`` is strongly connected."""
    ncomp, _ = connected_components(np.asarray(P) > 0, directed=True, connection="strong")
    return ncomp == 1


def compute_stationary(P) -> np.ndarray:
    """Stationary distribution of an irreducible stochastic matrix.

    Uses Grassmann-Taksar-Heyman state reduction, which involves no
    subtractions and is accurate to machine precision for small dense
    chains.

    Raises
    ------
    ChainValidationError
        If ``P`` is reducible.
    """
    P = np.array(P, dtype=float)
    m = P.shape[0]
    if not is_irreducible(P):
        raise ChainValidationError("transition graph is not strongly connected")
    A = P.copy()
    for k in range(m - 1, 0, -1):
        s = A[k, :k].sum()
        if s <= 0.0:
            raise ChainValidationError("stationary solver failed: zero exit mass during reduction")
        A[:k, k] /= s
        A[:k, :k] += np.outer(A[:k, k], A[k, :k])
    pi = np.zeros(m)
    pi[0] = 1.0
    for k in range(1, m):
        pi[k] = pi[:k] @ A[:k, k]
    pi /= pi.sum()
    return pi


def detailed_balance_residual(P, pi) -> np.ndarray:
    """Matrix of ``pi_i p_ij - pi_j p_ji``; antisymmetric by construction."""
    F = np.asarray(pi)[:, None] * np.asarray(P)
    return F - F.T


def chain_from_arrays(P, f, states=None, stationary=None, tol=DEFAULT_TOL) -> ReversibleChainSpec:
    """Validate arrays and build a :class:`ReversibleChainSpec`.

    All violated invariants are collected and reported together.

    Parameters
    ----------
    P : array_like, shape (m, m)
    f : array_like, shape (m,)
    states : sequence of str, optional
        Defaults to ``"0", "1", ...``.
    stationary : array_like, optional
        Verified against ``P`` rather than trusted.
    tol : float
        Tolerance for row sums, stationarity and detailed balance.
    """
    problems = []
    P = np.array(P, dtype=float)
    f_raw = np.array(f, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ChainValidationError(f"transition matrix must be square, got shape {P.shape}")
    m = P.shape[0]
    if m < 2:
        raise ChainValidationError("state space needs at least 2 states")
    if states is None:
        states = [str(i) for i in range(m)]
    states = tuple(str(s) for s in states)
    if len(states) != m:
        problems.append(f"{len(states)} state labels for a {m}x{m} matrix")
    if len(set(states)) != len(states):
        problems.append("state labels are not distinct")
    if f_raw.shape != (m,):
        problems.append(f"observable has shape {f_raw.shape}, expected ({m},)")
    if not np.all(np.isfinite(P)):
        problems.append("transition matrix has non-finite entries")
    if not np.all(np.isfinite(f_raw)):
        problems.append("observable has non-finite entries")
    if problems:
        raise ChainValidationError(problems)

    if np.any(P < -tol) or np.any(P > 1 + tol):
        problems.append("transition entries outside [0, 1]")
    bad_rows = np.flatnonzero(np.abs(P.sum(axis=1) - 1.0) > tol)
    for i in bad_rows:
        problems.append(f"row not stochastic: row {states[i]} sums to {P[i].sum():.17g}")
    P = np.clip(P, 0.0, 1.0)
    irreducible = is_irreducible(P)
    if not irreducible:
        problems.append("transition graph is not strongly connected (chain reducible)")
    if problems:
        raise ChainValidationError(problems)

    if stationary is None:
        pi = compute_stationary(P)
    else:
        pi = np.array(stationary, dtype=float)
        if pi.shape != (m,):
            raise ChainValidationError(f"stationary has shape {pi.shape}, expected ({m},)")
        if not np.all(pi > 0):
            problems.append("stationary distribution must be strictly positive")
        if abs(pi.sum() - 1.0) > _PI_SUM_TOL:
            problems.append(f"stationary distribution sums to {pi.sum():.17g}, not 1")
    if np.max(np.abs(pi @ P - pi)) > tol:
        problems.append("stationary distribution does not satisfy pi P = pi")
    if np.max(np.abs(detailed_balance_residual(P, pi))) > tol:
        problems.append("detailed balance violated: chain is not reversible")
    if problems:
        raise ChainValidationError(problems)

    g, a, b = normalize_observable(f_raw)
    mu = float(pi @ g)
    return ReversibleChainSpec(
        states=states, P=P, pi=pi, f=g, f_raw=f_raw, a=a, b=b, mu=mu,
    )


def parse_chain(document: str, tol=DEFAULT_TOL) -> ReversibleChainSpec:
    """Parse and validate a JSON chain-spec document."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ChainValidationError(f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ChainValidationError("chain document must be a JSON object")
    missing = [k for k in ("states", "transition", "observable") if k not in doc]
    if missing:
        raise ChainValidationError([f"missing key {k!r}" for k in missing])
    try:
        P = np.array(doc["transition"], dtype=float)
        f = np.array(doc["observable"], dtype=float)
        stationary = doc.get("stationary")
        if stationary is not None:
            stationary = np.array(stationary, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ChainValidationError(f"non-numeric content: {exc}") from None
    return chain_from_arrays(P, f, states=doc["states"], stationary=stationary, tol=tol)


def load_chain(path, tol=DEFAULT_TOL) -> ReversibleChainSpec:
    """Read a chain-spec file.  I/O errors propagate as ``OSError``."""
    return parse_chain(Path(path).read_text(), tol=tol)


def serialize_chain(spec: ReversibleChainSpec) -> str:
    """Canonical JSON document; floats use shortest round-trip repr."""
    doc = {
        "states": list(spec.states),
        "transition": [[float(v) for v in row] for row in spec.P],
        "observable": [float(v) for v in spec.f_raw],
        "stationary": [float(v) for v in spec.pi],
    }
    return json.dumps(doc, indent=2)


def two_sided_setup(spec: ReversibleChainSpec, eps: float):
    """Split a two-sided deviation into two upper-deviation problems.

    Returns ``((spec, eps), (complement, eps))`` where ``complement``
    carries the observable ``1 - f``.  A two-sided bound is the sum of
    the two one-sided bounds.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    comp = dataclasses.replace(
        spec,
        f=1.0 - spec.f,
        f_raw=(spec.a + spec.b) - spec.f_raw,
        mu=1.0 - spec.mu,
    )
    return (spec, eps), (comp, eps)
