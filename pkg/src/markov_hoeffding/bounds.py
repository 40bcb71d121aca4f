"""Closed-form deviation bounds for reversible chains.

Everything here depends on the chain only through the stationary mean
``mu`` of an observable rescaled to ``[0, 1]`` and the clipped second
eigenvalue ``lam0 = max(0, lam)``.  The extremal chain is the two-state
kernel ``M(lam, mu) = lam I + (1 - lam) 1 mu'`` on ``{0, 1}``; its
log-Perron root ``log theta(t)`` has the Legendre transform ``I_theta``,
which is available in closed form.

All bounds are returned as natural logarithms of probabilities.

Numerical notes
---------------
``I_theta`` vanishes to second order at ``x = mu``.  Writing the rate as
``x log u + (1 - x) log v`` with ``u, v -> 1`` at the mean, the
increments ``u - 1`` and ``v - 1`` are formed from ``x - mu`` and
``sqrt(Delta(x)) - sqrt(Delta(mu))`` directly, so no cancellation occurs
before ``log1p``.  The two first-order terms still cancel in the sum, so
within ``0.1 min(mu, 1 - mu)`` of the mean the rate is instead taken from
``I(x) = int_mu^x (x - y) I''(y) dy`` by Gauss-Legendre quadrature, whose
terms are all positive.  ``log theta(t)`` avoids cancellation through
``expm1(t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import DomainError, LezaudDomainError

__all__ = [
    "BoundInput",
    "BoundReport",
    "QuadraticDiagnostics",
    "RateEvaluation",
    "tilt_quadratic_diagnostics",
    "appendix_a_diagnostics",
    "bound_report",
    "delta",
    "g_ratio",
    "h_function",
    "legendre_objective",
    "lezaud_h",
    "lezaud_rate",
    "log_gaussian_bound",
    "log_hoeffding_bound",
    "log_lezaud_bound",
    "log_product_bound",
    "log_theta",
    "optimal_tilt",
    "plan_sample_size",
    "rate_I_theta",
    "rate_derivative",
    "rate_evaluation",
    "rate_ratio_asymptote",
    "rate_second_derivative",
    "rate_third_derivative",
    "theta_of_t",
    "trace_G",
]


def _check_mu(mu):
    if not 0.0 < mu < 1.0:
        raise DomainError(f"mu must lie in (0, 1), got {mu!r}")


def _check_lam(lam, allow_negative=False):
    if not lam < 1.0:
        raise DomainError(f"no spectral gap: lambda = {lam!r}")
    lo = -1.0 if allow_negative else 0.0
    if lam < lo or (allow_negative and lam <= -1.0):
        raise DomainError(f"lambda = {lam!r} outside the admissible range")


def _check_x(x, closed=False):
    ok = 0.0 <= x <= 1.0 if closed else 0.0 < x < 1.0
    if not ok:
        raise DomainError(f"x = {x!r} outside {'[0, 1]' if closed else '(0, 1)'}")


@dataclass(frozen=True)
class _Core:
    x: float
    xb: float
    d: float  # x - mu
    alpha: float  # mu + (1 - mu) lam
    beta: float  # (1 - mu) + mu lam
    delta: float
    s: float  # sqrt(delta)
    ds: float  # sqrt(delta(x)) - sqrt(delta(mu))
    lam: float
    mu: float


def _core(x, mu, lam) -> _Core:
    mub = 1.0 - mu
    xb = 1.0 - x
    d = x - mu
    k = 4.0 * lam / (mu * mub * (1.0 - lam) ** 2)
    dlt = 1.0 + k * x * xb
    if dlt <= 0.0:
        raise DomainError("Delta <= 0; lambda too negative for this (x, mu)")
    s = math.sqrt(dlt)
    s_mu = (1.0 + lam) / (1.0 - lam)
    # x(1-x) - mu(1-mu) = (x - mu)(1 - x - mu)
    ds = k * d * (1.0 - x - mu) / (s + s_mu)
    alpha = mu + mub * lam
    beta = mub + mu * lam
    if alpha <= 0.0 or beta <= 0.0:
        raise DomainError("two-state kernel has a negative entry for this lambda")
    return _Core(x, xb, d, alpha, beta, dlt, s, ds, lam, mu)


def _log_uv(c: _Core):
    """``(log u, log v)`` with ``I = x log u + (1 - x) log v``."""
    onelam = 1.0 - c.lam
    au = (c.ds * (1.0 - c.mu) * onelam + 2.0 * c.d) / ((c.s + 1.0) * c.alpha)
    av = (c.ds * c.mu * onelam - 2.0 * c.d) / ((c.s + 1.0) * c.beta)
    lu = math.log1p(au) if au > -1.0 else -math.inf
    lv = math.log1p(av) if av > -1.0 else -math.inf
    return lu, lv


def delta(x, mu, lam0):
    """``Delta = 1 + 4 lam0 x (1-x) / (mu (1-mu) (1-lam0)^2)``."""
    _check_x(x, closed=True)
    _check_mu(mu)
    _check_lam(lam0)
    return 1.0 + 4.0 * lam0 * x * (1.0 - x) / (mu * (1.0 - mu) * (1.0 - lam0) ** 2)


def trace_G(t, mu, lam):
    """Trace of the tilted two-state matrix, ``beta + alpha e^t``."""
    return (1.0 - mu + lam * mu) + (mu + lam * (1.0 - mu)) * math.exp(t)


def log_theta(t, mu, lam, allow_negative=False):
    """Logarithm of the two-state Perron root ``theta(t)``.

    ``theta(t) = (Tr + sqrt(Tr^2 - 4 lam e^t)) / 2``.
    """
    _check_mu(mu)
    _check_lam(lam, allow_negative)
    alpha = mu + (1.0 - mu) * lam
    beta = (1.0 - mu) + mu * lam
    if t > 30.0:
        # theta ~ alpha e^t; factor e^t out
        e = math.exp(-t)
        tr = beta * e + alpha
        disc = tr * tr - 4.0 * lam * e
        return t + math.log(0.5 * (tr + math.sqrt(max(disc, 0.0))))
    w = math.expm1(t)
    disc = (1.0 + lam + alpha * w) ** 2 - 4.0 * lam * (1.0 + w)
    if disc < 0.0:
        raise DomainError("negative discriminant in theta(t)")
    # sqrt(disc) - (1 - lam), formed without cancellation
    r = w * (2.0 * (1.0 + lam) * alpha - 4.0 * lam + alpha * alpha * w) / (math.sqrt(disc) + (1.0 - lam))
    return math.log1p(0.5 * (alpha * w + r))


def theta_of_t(t, mu, lam, allow_negative=False):
    """Perron root of the tilted two-state matrix ``G_t``."""
    return math.exp(log_theta(t, mu, lam, allow_negative))


def legendre_objective(t, x, mu, lam):
    """``t x - log theta(t)``; its supremum over ``t`` is ``I_theta(x)``."""
    return t * x - log_theta(t, mu, lam)


def optimal_tilt(x, mu, lam0):
    """Maximizer ``t0`` of ``t x - log theta(t)``.

    ``exp(t0) = beta (sqrt(Delta) - (1 - 2x)) / (alpha (sqrt(Delta) + (1 - 2x)))``
    with ``alpha = mu + (1-mu) lam0`` and ``beta = (1-mu) + mu lam0``.
    The sign of ``t0`` is the sign of ``x - mu``.
    """
    _check_x(x)
    _check_mu(mu)
    _check_lam(lam0)
    c = _core(x, mu, lam0)
    num = c.ds * (1.0 - 2.0 * mu) * (1.0 - lam0) + 2.0 * c.d * (1.0 + lam0)
    den = c.alpha * (c.s + 1.0 - 2.0 * x)
    return math.log1p(num / den)


def rate_I_theta(x, mu, lam0):
    """Closed-form rate ``I_theta(x)`` in nats.

    ``I(x) = -x log[alpha / (1 - 2(1-x)/(sqrt(Delta)+1))]
    - (1-x) log[beta / (1 - 2x/(sqrt(Delta)+1))]``, with ``0 log 0 = 0``
    at the endpoints.
    """
    _check_x(x, closed=True)
    _check_mu(mu)
    _check_lam(lam0)
    return _rate(x, mu, lam0)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
# relative half-width of the quadrature zone around the mean
_NEAR_MEAN = 0.1


def _rate_near_mean(x, mu, lam):
    # I(x) = (d^2 / 4) sum w_i (1 - xi_i) I''(y_i), y_i = mu + d (1 + xi_i) / 2
    d = x - mu
    k = 4.0 * lam / (mu * (1.0 - mu) * (1.0 - lam) ** 2)
    y = mu + 0.5 * d * (1.0 + _GL_NODES)
    yy = y * (1.0 - y)
    d2 = 1.0 / (np.sqrt(1.0 + k * yy) * yy)
    return 0.25 * d * d * float(np.dot(_GL_WEIGHTS * (1.0 - _GL_NODES), d2))


def _rate(x, mu, lam):
    if lam >= 0.0 and abs(x - mu) <= _NEAR_MEAN * min(mu, 1.0 - mu):
        return _rate_near_mean(x, mu, lam)
    c = _core(x, mu, lam)
    lu, lv = _log_uv(c)
    left = 0.0 if x == 0.0 else x * lu
    right = 0.0 if c.xb == 0.0 else c.xb * lv
    return left + right


def rate_derivative(x, mu, lam0):
    """``I'_theta(x) = log u - log v``."""
    _check_x(x)
    _check_mu(mu)
    _check_lam(lam0)
    lu, lv = _log_uv(_core(x, mu, lam0))
    return lu - lv


def rate_second_derivative(x, mu, lam0):
    """``I''_theta(x) = 1 / (sqrt(Delta) x (1-x))``."""
    return 1.0 / (math.sqrt(delta(x, mu, lam0)) * x * (1.0 - x))


def rate_third_derivative(x, mu, lam0):
    dlt = delta(x, mu, lam0)
    xb = 1.0 - x
    return (x - xb) * (3.0 * dlt - 1.0) / (2.0 * dlt**1.5 * (x * xb) ** 2)


@dataclass(frozen=True)
class RateEvaluation:
    """Everything computed at one point ``x`` of the rate function."""

    x: float
    x_bar: float
    delta: float
    t0: float
    theta: float
    rate: float
    d1: float
    d2: float


def rate_evaluation(x, mu, lam0) -> RateEvaluation:
    _check_x(x)
    _check_mu(mu)
    _check_lam(lam0)
    c = _core(x, mu, lam0)
    lu, lv = _log_uv(c)
    theta = c.beta * (c.s + 1.0) / (c.s + c.xb - x)
    return RateEvaluation(
        x=x,
        x_bar=c.xb,
        delta=c.delta,
        t0=optimal_tilt(x, mu, lam0),
        theta=theta,
        rate=_rate(x, mu, lam0),
        d1=lu - lv,
        d2=1.0 / (c.s * x * c.xb),
    )


def g_ratio(x, mu, lam0):
    """``I_theta(x) / (x - mu)^2``; undefined at ``x = mu``."""
    if x == mu:
        raise DomainError("g is undefined at x = mu")
    return rate_I_theta(x, mu, lam0) / (x - mu) ** 2


def h_function(x, mu, lam0):
    """``(x - mu) I'_theta(x) - 2 I_theta(x)``, numerator of ``g'``."""
    return (x - mu) * rate_derivative(x, mu, lam0) - 2.0 * rate_I_theta(x, mu, lam0)


# --------------------------------------------------------------------------
# Bounds
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundInput:
    """Validated ``(mu, eps, n, lam0)`` with ``mu + eps < 1``."""

    mu: float
    eps: float
    n: int
    lam0: float

    def __post_init__(self):
        _check_mu(self.mu)
        if not self.eps > 0.0:
            raise DomainError(f"eps must be positive, got {self.eps!r}")
        if not self.mu + self.eps < 1.0:
            raise DomainError(f"mu + eps = {self.mu + self.eps!r} must be < 1")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}")
        _check_lam(self.lam0)


def _check_bound_args(mu, eps, n, lam0, allow_negative=False):
    if allow_negative:
        _check_lam(lam0, allow_negative=True)
        BoundInput(mu, eps, n, 0.0)
    else:
        BoundInput(mu, eps, n, lam0)


def log_product_bound(mu, eps, n, lam0, allow_negative=False):
    """Log of ``exp(-n I_theta(mu + eps))``.

    ``allow_negative`` evaluates the formula with an unclipped negative
    eigenvalue; the result is then not a valid bound in general.
    """
    _check_bound_args(mu, eps, n, lam0, allow_negative)
    return -n * _rate(mu + eps, mu, lam0)


def log_gaussian_bound(mu, eps, n, lam0, allow_negative=False):
    """Log of ``exp(-2 n eps^2 (1 - lam0) / (1 + lam0))``."""
    _check_bound_args(mu, eps, n, lam0, allow_negative)
    return -2.0 * n * eps * eps * (1.0 - lam0) / (1.0 + lam0)


def log_hoeffding_bound(mu, eps, n):
    """Classical Hoeffding bound for independent ``[0, 1]`` variables.

    ``(mu/(mu+eps))^{n(mu+eps)} ((1-mu)/(1-mu-eps))^{n(1-mu-eps)}``.
    """
    BoundInput(mu, eps, n, 0.0)
    mub = 1.0 - mu
    x = mu + eps
    kl = x * math.log1p(eps / mu) + (mub - eps) * math.log1p(-eps / mub)
    return -n * kl


def lezaud_h(y):
    """``sqrt(1 - y) - (1 - y)`` on ``[0, 1]``."""
    if not 0.0 <= y <= 1.0:
        raise LezaudDomainError(f"h needs its argument in [0, 1], got {y!r}")
    return math.sqrt(1.0 - y) - (1.0 - y)


def lezaud_rate(mu, eps, lam):
    """Exponential rate ``L(mu, eps)`` of the perturbation-theory bound."""
    _check_mu(mu)
    _check_lam(lam, allow_negative=True)
    if not eps > 0.0:
        raise DomainError("eps must be positive")
    y = 5.0 * eps / mu
    if y > 1.0:
        raise LezaudDomainError(f"outside Lezaud domain: 5 eps / mu = {y!r} > 1")
    return (1.0 - lam) * eps * eps / (4.0 * mu * (1.0 + lezaud_h(y)))


def log_lezaud_bound(mu, eps, n, lam):
    """Log of ``e^{(1-lam)/5} exp(-n L(mu, eps))``."""
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    return (1.0 - lam) / 5.0 - n * lezaud_rate(mu, eps, lam)


def rate_ratio_asymptote(mu, lam):
    """Small-``eps`` limit of ``I_theta(mu + eps) / L(mu, eps)``."""
    _check_mu(mu)
    _check_lam(lam)
    return 2.0 / ((1.0 - mu) * (1.0 + lam))


@dataclass(frozen=True)
class BoundReport:
    mu: float
    eps: float
    n: int
    lam: float
    lam0: float
    log_product: float
    log_gaussian: float
    log_hoeffding: float
    log_lezaud: Optional[float]
    ratio_asymptote: float
    mu_raw: float
    eps_raw: float


def bound_report(mu, eps, n, lam, mu_raw=None, eps_raw=None) -> BoundReport:
    """All bounds at one ``(mu, eps, n)``.

    ``lam`` is the raw second eigenvalue; the product and Gaussian bounds
    use its clip ``lam0``, the Lezaud bound uses ``lam`` itself and is
    ``None`` outside ``5 eps <= mu``.
    """
    lam0 = max(0.0, lam)
    try:
        lez = log_lezaud_bound(mu, eps, n, lam)
    except LezaudDomainError:
        lez = None
    return BoundReport(
        mu=mu,
        eps=eps,
        n=n,
        lam=lam,
        lam0=lam0,
        log_product=log_product_bound(mu, eps, n, lam0),
        log_gaussian=log_gaussian_bound(mu, eps, n, lam0),
        log_hoeffding=log_hoeffding_bound(mu, eps, n),
        log_lezaud=lez,
        ratio_asymptote=rate_ratio_asymptote(mu, lam0),
        mu_raw=mu if mu_raw is None else mu_raw,
        eps_raw=eps if eps_raw is None else eps_raw,
    )


def plan_sample_size(mu, eps, delta, lam0, kind="product"):
    """Smallest ``n`` with ``bound(n) <= delta``.

    Both bounds have the form ``exp(-n rate)``, so the answer is
    ``ceil(log(1/delta) / rate)``; the result is then nudged so that the
    floating-point bound itself satisfies ``bound(n) <= delta < bound(n-1)``.

    Parameters
    ----------
    kind : {"product", "gaussian"}
    """
    if not 0.0 < delta <= 1.0:
        raise DomainError(f"delta must lie in (0, 1], got {delta!r}")
    BoundInput(mu, eps, 1, lam0)
    if kind == "product":
        rate = _rate(mu + eps, mu, lam0)
    elif kind == "gaussian":
        rate = 2.0 * eps * eps * (1.0 - lam0) / (1.0 + lam0)
    else:
        raise ValueError(f"unknown bound kind {kind!r}")
    if not rate > 0.0:
        raise DomainError("zero rate: no sample size reaches delta")
    log_delta = math.log(delta)
    n = max(1, math.ceil(-log_delta / rate))
    while n > 1 and -(n - 1) * rate <= log_delta:
        n -= 1
    while -n * rate > log_delta:
        n += 1
    return n


# --------------------------------------------------------------------------
# Quadratic behind the optimal tilt
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadraticDiagnostics:
    """Coefficients and roots of the quadratic in ``e^t`` whose admissible
    root is ``exp(t0)``.

    ``roots_raw`` come from ``(-b +/- sqrt(b^2 - 4ac)) / 2a`` written out
    explicitly; ``roots_conjugate`` are the same roots after rationalizing.
    ``residuals`` are the stationarity-equation residuals of the two
    conjugate-form candidates; ``chosen`` indexes the admissible one.
    """

    x: float
    mu: float
    lam: float
    a: float
    b: float
    c: float
    discriminant: float
    discriminant_factored: float
    conjugate_lhs: float
    conjugate_rhs: float
    roots_raw: tuple
    roots_conjugate: tuple
    residuals: tuple
    chosen: int
    sign_test: bool

    @property
    def chosen_root(self) -> float:
        return self.roots_conjugate[self.chosen]

    @property
    def t0(self) -> float:
        return math.log(self.chosen_root)


def _exact_quadratic(x, mu, lam):
    x, mu, lam = Fraction(x), Fraction(mu), Fraction(lam)
    mub = 1 - mu
    q = (2 * x - 1) ** 2
    # leading coefficient carries alpha squared: squaring the stationarity
    # equation gives alpha^2 (1 - q) r^2 + b r + beta^2 (1 - q) = 0
    a = (1 - q) * (mu + mub * lam) ** 2
    b = -2 * ((mu * mub * (1 - lam) ** 2 + lam) * (1 + q) - 2 * lam * q)
    c = (mub + mu * lam) ** 2 * (1 - q)
    return a, b, c, b * b - 4 * a * c


def tilt_quadratic_diagnostics(x, mu, lam) -> QuadraticDiagnostics:
    """Quadratic coefficients, discriminant, both roots and the arbitration.

    The discriminant is evaluated in exact rational arithmetic on the
    binary values of the inputs, since ``b^2 - 4ac`` cancels badly near
    ``x = 1/2``.
    """
    _check_x(x)
    _check_mu(mu)
    _check_lam(lam)
    mub = 1.0 - mu
    alpha = mu + mub * lam
    beta = mub + mu * lam
    q = (2.0 * x - 1.0) ** 2
    ea, eb, ec, edisc = _exact_quadratic(x, mu, lam)
    c0 = mu * mub * (1.0 - lam) ** 2
    dlt = delta(x, mu, lam)
    s = math.sqrt(dlt)
    disc_factored = 16.0 * q * c0 * c0 * dlt

    centre = (c0 * (1.0 + q) + lam * (1.0 - q)) / ((1.0 - q) * alpha * alpha)
    half_width = 2.0 * (2.0 * x - 1.0) * c0 * s / ((1.0 - q) * alpha * alpha)
    roots_raw = (centre + half_width, centre - half_width)

    y = 1.0 - 2.0 * x
    conj_lhs = (s + y) * (s - y)
    conj_rhs = alpha * beta * (1.0 - q) / c0
    roots_conj = (
        beta * (s - y) / (alpha * (s + y)),
        beta * (s + y) / (alpha * (s - y)),
    )

    residuals = []
    signs_ok = []
    for r in roots_conj:
        tr = beta + alpha * r
        left = (2.0 * x - 1.0) * math.sqrt(max(tr * tr - 4.0 * lam * r, 0.0))
        right = alpha * r - beta
        residuals.append(left - right)
        signs_ok.append(math.copysign(1.0, left) == math.copysign(1.0, right) or left == 0.0 or right == 0.0)
    chosen = 0 if abs(residuals[0]) <= abs(residuals[1]) else 1
    return QuadraticDiagnostics(
        x=x,
        mu=mu,
        lam=lam,
        a=float(ea),
        b=float(eb),
        c=float(ec),
        discriminant=float(edisc),
        discriminant_factored=disc_factored,
        conjugate_lhs=conj_lhs,
        conjugate_rhs=conj_rhs,
        roots_raw=roots_raw,
        roots_conjugate=roots_conj,
        residuals=tuple(residuals),
        chosen=chosen,
        sign_test=signs_ok[chosen],
    )


# name required by the public interface
appendix_a_diagnostics = tilt_quadratic_diagnostics
