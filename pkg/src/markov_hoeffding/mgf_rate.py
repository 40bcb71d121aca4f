"""Transfer-matrix machinery for general reversible chains.

With ``D_t = diag(exp(t f / 2))`` the stationary moment generating
function is ``E[exp(t S_n)] = pi' (P D_t^2)^n 1
= gamma1' D_t G_t^{n-1} D_t gamma1`` where ``G_t = D_t S D_t`` and ``S``
is the symmetric conjugate of ``P``.  ``zeta(t)`` is the Perron root of
``G_t``; ``eta(t)`` is the Perron root of ``H_t``, the same construction
applied to the clipped kernel ``Q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chain_model import ReversibleChainSpec
from .errors import DomainError, NonConvergenceError
from .spectral import SpectralDecomposition, clipped_symmetric, decompose, gap_summary

__all__ = [
    "ChernoffBound",
    "PerronEvaluation",
    "TiltedOperators",
    "empirical_rate",
    "log_mgf_exact",
    "log_perron",
    "matrix_chernoff_bound",
    "maximize_tilt",
    "mgf_exact",
    "perron_values",
    "tilted_operators",
]

T_START = 8.0
T_MAX = 64.0
GOLDEN_TOL = 1e-10
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class TiltedOperators:
    t: float
    d_t: np.ndarray
    G: np.ndarray
    H: np.ndarray


@dataclass(frozen=True)
class PerronEvaluation:
    t: float
    log_zeta: float
    log_eta: float
    log_prefactor: float

    @property
    def zeta(self) -> float:
        return math.exp(self.log_zeta)

    @property
    def eta(self) -> float:
        return math.exp(self.log_eta)

    @property
    def prefactor(self) -> float:
        """``||D_t gamma1||^2 = sum_i pi_i exp(t f_i)``."""
        return math.exp(self.log_prefactor)


@dataclass(frozen=True)
class ChernoffBound:
    log_bound: float
    t: float
    exponent: float  # t x - log(root) at the chosen t


def _symmetric_form(dec: SpectralDecomposition, which: str) -> np.ndarray:
    if which == "zeta":
        return dec.symmetric
    if which == "eta":
        return clipped_symmetric(dec, gap_summary(dec).lam0)
    raise ValueError(f"which must be 'zeta' or 'eta', got {which!r}")


def tilted_operators(spec: ReversibleChainSpec, dec: SpectralDecomposition, t: float) -> TiltedOperators:
    """Explicit ``G_t`` and ``H_t``.  May overflow for large ``|t|``."""
    d_t = np.exp(0.5 * t * spec.f)
    G = d_t[:, None] * _symmetric_form(dec, "zeta") * d_t[None, :]
    H = d_t[:, None] * _symmetric_form(dec, "eta") * d_t[None, :]
    return TiltedOperators(t=t, d_t=d_t, G=G, H=H)


def _log_root_and_slope(f, S, t):
    # scale by exp(-max(t f)) so entries stay <= 1
    shift = float(np.max(t * f))
    d = np.exp(0.5 * (t * f - shift))
    M = d[:, None] * S * d[None, :]
    w, v = np.linalg.eigh(0.5 * (M + M.T))
    top = v[:, -1]
    if w[-1] <= 0.0:
        raise NonConvergenceError(f"non-positive Perron root at t={t!r}")
    return shift + math.log(w[-1]), float(f @ (top * top))


def log_perron(spec: ReversibleChainSpec, dec: SpectralDecomposition, t: float, which="zeta") -> float:
    """``log zeta(t)`` or ``log eta(t)`` from a symmetric eigensolve."""
    return _log_root_and_slope(spec.f, _symmetric_form(dec, which), t)[0]


def _log_prefactor(spec, t):
    shift = float(np.max(t * spec.f))
    return shift + math.log(float(spec.pi @ np.exp(t * spec.f - shift)))


def perron_values(spec: ReversibleChainSpec, dec: Optional[SpectralDecomposition], t: float) -> PerronEvaluation:
    if dec is None:
        dec = decompose(spec)
    return PerronEvaluation(
        t=t,
        log_zeta=log_perron(spec, dec, t, "zeta"),
        log_eta=log_perron(spec, dec, t, "eta"),
        log_prefactor=_log_prefactor(spec, t),
    )


def log_mgf_exact(spec: ReversibleChainSpec, t: float, n: int) -> float:
    """``log E_pi[exp(t S_n)]`` by forward products with per-step rescaling."""
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    shift = float(np.max(t * spec.f))
    w = np.exp(t * spec.f - shift)
    v = spec.pi * w
    log_acc = 0.0
    for step in range(int(n)):
        if step:
            v = (v @ spec.P) * w
        total = float(v.sum())
        if not (math.isfinite(total) and total > 0.0):
            raise NonConvergenceError(f"overflow in mgf at t={t!r}; |t| too large")
        log_acc += shift + math.log(total)
        v = v / total
    return log_acc


def mgf_exact(spec: ReversibleChainSpec, t: float, n: int) -> float:
    """``E_pi[exp(t S_n)] = pi' (P D_t^2)^n 1``."""
    return math.exp(log_mgf_exact(spec, t, n))


def _golden_max(fun, lo, hi, tol):
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fun(d)
    t = 0.5 * (a + b)
    return t, fun(t)


def maximize_tilt(spec: ReversibleChainSpec, dec: SpectralDecomposition, x: float, which="zeta", t_max=T_MAX):
    """Maximize ``t x - log root(t)`` over ``t >= 0`` (``t <= 0`` if ``x < mu``).

    The bracket starts at ``[0, 8]`` and doubles until the slope turns
    negative, up to ``t_max``; golden-section search then narrows it to
    ``1e-10`` in ``t``.

    Returns
    -------
    t : float
    value : float
        The maximum, i.e. the rate at ``x``.
    """
    if not 0.0 < x < 1.0:
        raise DomainError(f"x = {x!r} must lie strictly between min f and max f")
    S = _symmetric_form(dec, which)
    f = spec.f
    sign = 1.0 if x >= spec.mu else -1.0

    def slope(tau):
        return sign * (x - _log_root_and_slope(f, S, sign * tau)[1])

    def objective(tau):
        return sign * tau * x - _log_root_and_slope(f, S, sign * tau)[0]

    # the slope at t = 0 is exactly x - mu; the eigenvector form only adds noise
    if x == spec.mu:
        return 0.0, 0.0
    lo, hi = 0.0, T_START
    while slope(hi) > 0.0:
        if hi >= t_max:
            raise NonConvergenceError(f"maximizer not bracketed below t = {t_max}")
        lo, hi = hi, min(2.0 * hi, t_max)
    tau, value = _golden_max(objective, lo, hi, GOLDEN_TOL)
    # the optimum is never below the t = 0 value
    return sign * tau, max(value, 0.0)


def empirical_rate(spec: ReversibleChainSpec, x: float, which="zeta", dec=None) -> float:
    """``I_zeta(x)`` or ``I_eta(x)``: numeric Legendre transform of the
    log-Perron root."""
    if dec is None:
        dec = decompose(spec)
    return maximize_tilt(spec, dec, x, which)[1]


def matrix_chernoff_bound(
    spec: ReversibleChainSpec,
    x: float,
    n: int,
    which="zeta",
    optimize=True,
    t=None,
    dec=None,
    prefactor=True,
) -> ChernoffBound:
    """Log of ``||D_t gamma1||^2 root(t)^{-1} exp(-n [t x - log root(t)])``.

    Valid for every ``t >= 0`` with ``which="zeta"``; the ``eta`` variant
    additionally needs ``lam0 >= 0`` (always true after clipping).  With
    ``prefactor=False`` only the exponential term is returned, which is a
    bound for the ``eta`` variant.

    If ``x`` lies beyond every long-run average the chain can sustain, the
    exponent keeps growing with ``t`` and no maximizer exists; the bound is
    then evaluated at ``t = T_MAX``, which is valid like any ``t >= 0``.
    """
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    if not spec.mu <= x < 1.0:
        raise DomainError(f"x = {x!r} must lie in [mu, 1)")
    if dec is None:
        dec = decompose(spec)
    if optimize:
        try:
            t, _ = maximize_tilt(spec, dec, x, which)
        except NonConvergenceError:
            t = T_MAX
    elif t is None:
        raise ValueError("t is required when optimize=False")
    if t < 0:
        raise DomainError("t must be nonnegative")
    log_root = log_perron(spec, dec, t, which)
    exponent = t * x - log_root
    log_bound = -n * exponent
    if prefactor:
        log_bound += _log_prefactor(spec, t) - log_root
    return ChernoffBound(log_bound=log_bound, t=t, exponent=exponent)
