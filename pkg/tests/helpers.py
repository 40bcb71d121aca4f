"""Chain generators and independent oracles shared by the test modules."""

import math

import mpmath as mp
import numpy as np

from markov_hoeffding.chain_model import chain_from_arrays


def two_state(lam, mu, f=(0.0, 1.0)):
    """Chain ``lam I + (1 - lam) A`` on two states with ``pi = (1-mu, mu)``."""
    pi = np.array([1.0 - mu, mu])
    P = lam * np.eye(2) + (1.0 - lam) * np.tile(pi, (2, 1))
    return chain_from_arrays(P, list(f))


def clipped_form(pi, lam):
    """``lam I + (1 - lam) A`` for an arbitrary ``pi``."""
    pi = np.asarray(pi, dtype=float)
    return lam * np.eye(len(pi)) + (1.0 - lam) * np.tile(pi, (len(pi), 1))


def random_weights(m, rng, zero_diagonal=False, density=1.0):
    """Symmetric positive weights on a connected graph (a path is always kept)."""
    W = rng.uniform(0.1, 1.0, (m, m))
    mask = rng.random((m, m)) < density
    W = np.where(mask, W, 0.0)
    W = np.triu(W) + np.triu(W, 1).T
    for i in range(m - 1):
        if W[i, i + 1] == 0.0:
            W[i, i + 1] = W[i + 1, i] = rng.uniform(0.1, 1.0)
    if zero_diagonal:
        np.fill_diagonal(W, 0.0)
    return W


def kernel_from_weights(W):
    """Random walk on weighted graph: ``P = W / rowsum``, reversible w.r.t. rowsum."""
    return W / W.sum(axis=1, keepdims=True)


def lattice_observable(m, L, rng):
    """Integer levels in ``{0..L}`` with both endpoints present, divided by ``L``."""
    levels = rng.integers(0, L + 1, m)
    idx = rng.permutation(m)[:2]
    levels[idx[0]], levels[idx[1]] = 0, L
    return levels / L


def random_lazy_chain(m, rng, L=None, lazy=0.5):
    """Lazy random walk; every eigenvalue is at least ``2 lazy - 1 >= 0``."""
    P = kernel_from_weights(random_weights(m, rng))
    P = lazy * np.eye(m) + (1.0 - lazy) * P
    f = lattice_observable(m, L, rng) if L else _spread(m, rng)
    return chain_from_arrays(P, f)


def random_negative_chain(m, rng, L=None):
    """Chain with every non-unit eigenvalue negative: ``(1 + c) A - c I``."""
    pi = rng.dirichlet(np.ones(m) * 2.0) * 0.8 + 0.2 / m
    pi = pi / pi.sum()
    c = rng.uniform(0.2, 1.0) * pi.min() / (1.0 - pi.min())
    P = (1.0 + c) * np.tile(pi, (m, 1)) - c * np.eye(m)
    f = lattice_observable(m, L, rng) if L else _spread(m, rng)
    return chain_from_arrays(P, f)


def random_loopless_chain(m, rng, L=None):
    """Random walk without self-loops; the spectrum may have either sign."""
    P = kernel_from_weights(random_weights(m, rng, zero_diagonal=True))
    f = lattice_observable(m, L, rng) if L else _spread(m, rng)
    return chain_from_arrays(P, f)


def _spread(m, rng):
    f = rng.uniform(-1.0, 2.0, m)
    f[rng.integers(m)] = -1.0
    return f


def metropolis(target, proposal):
    """Metropolis-Hastings kernel for ``target`` with a symmetric ``proposal``."""
    target = np.asarray(target, dtype=float)
    K = np.asarray(proposal, dtype=float)
    m = len(target)
    P = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            if i != j:
                P[i, j] = K[i, j] * min(1.0, target[j] / target[i])
        P[i, i] = 1.0 - P[i].sum()
    return P


# --------------------------------------------------------------------------
# high-precision two-state oracle
# --------------------------------------------------------------------------


def mp_log_theta(t, mu, lam):
    """``log theta(t)`` straight from the characteristic polynomial, in mpmath."""
    t, mu, lam = mp.mpf(t), mp.mpf(mu), mp.mpf(lam)
    et = mp.exp(t)
    tr = (1 - mu + lam * mu) + (mu + lam * (1 - mu)) * et
    return mp.log((tr + mp.sqrt(tr * tr - 4 * lam * et)) / 2)


def mp_golden_argmax(fun, lo, hi, tol=mp.mpf("1e-14")):
    """Golden-section maximizer of a unimodal ``fun`` on ``[lo, hi]``."""
    invphi = (mp.sqrt(5) - 1) / 2
    a, b = mp.mpf(lo), mp.mpf(hi)
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return (a + b) / 2


def mp_tilt_oracle(x, mu, lam, dps=40):
    """Maximizer and maximum of ``t x - log theta(t)`` by golden section."""
    with mp.workdps(dps):
        xm = mp.mpf(x)
        obj = lambda t: t * xm - mp_log_theta(t, mu, lam)
        # objective error is quadratic in the t error, so half the digits suffice
        t = mp_golden_argmax(obj, -60, 60, tol=mp.mpf(10) ** (-(dps // 2)))
        return float(t), float(obj(t))


def kl_bernoulli(x, mu):
    """Relative entropy of Bernoulli(x) from Bernoulli(mu), by mpmath."""
    with mp.workdps(40):
        x, mu = mp.mpf(x), mp.mpf(mu)
        return float(x * mp.log(x / mu) + (1 - x) * mp.log((1 - x) / (1 - mu)))


def central_diff(fun, x, h, order=1):
    """Five-point central difference for the first or second derivative."""
    f2, f1, f0, g1, g2 = (fun(x + k * h) for k in (2, 1, 0, -1, -2))
    if order == 1:
        return (-f2 + 8 * f1 - 8 * g1 + g2) / (12 * h)
    return (-f2 + 16 * f1 - 30 * f0 + 16 * g1 - g2) / (12 * h * h)


def rel_err(a, b):
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0.0 else abs(a - b) / scale


def logsub_ok(log_small, log_big, slack):
    """``exp(log_small) <= exp(log_big) + slack``."""
    return math.exp(log_small) <= math.exp(log_big) + slack
