"""Spectral decomposition of reversible kernels.

For a chain reversible with respect to ``pi`` the matrix
``S = D P D^-1`` with ``D = diag(sqrt(pi))`` is symmetric, so
``P = D^-1 Gamma diag(lam) Gamma' D`` with ``Gamma`` orthogonal.  Clipping
every eigenvalue below ``lam0 = max(0, lam_2)`` up to ``lam0`` yields the
kernel ``Q = lam0 I + (1 - lam0) A`` where ``A`` has every row equal to
``pi``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .chain_model import ReversibleChainSpec
from .errors import NoSpectralGapError, SpectralError

__all__ = [
    "ClippedKernel",
    "GapSummary",
    "SpectralDecomposition",
    "build_clipped_kernel",
    "clipped_symmetric",
    "decompose",
    "gap_summary",
]

# second eigenvalue at or above 1 - GAP_TOL counts as no gap
GAP_TOL = 1e-12
_CHECK_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """``P = D^-1 Gamma diag(eigenvalues) Gamma' D``.

    ``sqrt_pi`` is the diagonal of ``D``; ``symmetric`` is the
    symmetrized ``D P D^-1`` that was diagonalized.  Eigenvalues are in
    descending order and column ``k`` of ``gamma`` belongs to
    ``eigenvalues[k]``.
    """

    sqrt_pi: np.ndarray
    symmetric: np.ndarray
    gamma: np.ndarray
    eigenvalues: np.ndarray

    @property
    def gamma1(self) -> np.ndarray:
        return self.gamma[:, 0]

    @property
    def D(self) -> np.ndarray:
        return np.diag(self.sqrt_pi)

    @property
    def pi(self) -> np.ndarray:
        return self.sqrt_pi**2

    def reconstruct(self) -> np.ndarray:
        """Transition matrix rebuilt from the decomposition."""
        core = (self.gamma * self.eigenvalues) @ self.gamma.T
        return core * (self.sqrt_pi[None, :] / self.sqrt_pi[:, None])


@dataclass(frozen=True)
class GapSummary:
    lam: float
    lam0: float

    @property
    def gap(self) -> float:
        return 1.0 - self.lam0


@dataclass(frozen=True, eq=False)
class ClippedKernel:
    Q: np.ndarray
    A: np.ndarray
    lam0: float


def _fix_signs(vecs: np.ndarray, sqrt_pi: np.ndarray) -> np.ndarray:
    vecs = vecs.copy()
    if vecs[:, 0] @ sqrt_pi < 0:
        vecs[:, 0] *= -1.0
    for k in range(1, vecs.shape[1]):
        j = int(np.argmax(np.abs(vecs[:, k])))
        if vecs[j, k] < 0:
            vecs[:, k] *= -1.0
    return vecs


def decompose(spec: ReversibleChainSpec) -> SpectralDecomposition:
    """Diagonalize the symmetric conjugate of ``spec.P``.

    Raises
    ------
    SpectralError
        If the Perron root is not 1 or is not simple.
    """
    sqrt_pi = np.sqrt(spec.pi)
    S = spec.P * (sqrt_pi[:, None] / sqrt_pi[None, :])
    S = 0.5 * (S + S.T)
    w, v = np.linalg.eigh(S)
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = _fix_signs(v[:, order], sqrt_pi)
    if abs(w[0] - 1.0) > _CHECK_TOL:
        raise SpectralError(f"Perron root {w[0]!r} differs from 1")
    if w[1] >= 1.0 - GAP_TOL:
        raise SpectralError("eigenvalue 1 is not simple; chain is effectively reducible")
    w = np.clip(w, -1.0, 1.0)
    return SpectralDecomposition(sqrt_pi=sqrt_pi, symmetric=S, gamma=v, eigenvalues=w)


def gap_summary(dec: Union[SpectralDecomposition, Sequence[float]]) -> GapSummary:
    """Second largest eigenvalue and its clip at zero.

    Accepts a decomposition or a plain eigenvalue list (any order).
    """
    if isinstance(dec, SpectralDecomposition):
        w = dec.eigenvalues
    else:
        w = np.sort(np.asarray(dec, dtype=float))[::-1]
    if len(w) < 2:
        raise ValueError("need at least two eigenvalues")
    lam = float(w[1])
    if lam >= 1.0 - GAP_TOL:
        raise NoSpectralGapError(f"no spectral gap: second eigenvalue {lam!r}")
    return GapSummary(lam=lam, lam0=max(0.0, lam))


def clipped_symmetric(dec: SpectralDecomposition, lam0: float) -> np.ndarray:
    """``Gamma diag(max(lam0, lam_l)) Gamma'``, the symmetric form of ``Q``."""
    clipped = np.maximum(lam0, dec.eigenvalues)
    H = (dec.gamma * clipped) @ dec.gamma.T
    return 0.5 * (H + H.T)


def build_clipped_kernel(dec: SpectralDecomposition, gap: GapSummary) -> ClippedKernel:
    """Build ``Q = lam0 I + (1 - lam0) A`` and check its invariants.

    Raises
    ------
    SpectralError
        If ``Q`` fails stochasticity, reversibility or the semidefinite
        ordering ``D (Q - P) D^-1 >= 0``.
    """
    lam0 = gap.lam0
    if not 0.0 <= lam0 < 1.0:
        raise ValueError("lam0 must lie in [0, 1)")
    pi = dec.pi
    m = len(pi)
    A = np.tile(pi, (m, 1))
    Q = lam0 * np.eye(m) + (1.0 - lam0) * A
    if np.max(np.abs(Q.sum(axis=1) - 1.0)) > _CHECK_TOL or Q.min() < 0:
        raise SpectralError("clipped kernel is not stochastic")
    flux = pi[:, None] * Q
    if np.max(np.abs(flux - flux.T)) > _CHECK_TOL:
        raise SpectralError("clipped kernel is not reversible")
    sq = np.outer(dec.sqrt_pi, dec.sqrt_pi)
    SQ = lam0 * np.eye(m) + (1.0 - lam0) * sq
    if np.linalg.eigvalsh(SQ - dec.symmetric).min() < -_CHECK_TOL:
        raise SpectralError("D(Q - P)D^-1 is not positive semidefinite")
    return ClippedKernel(Q=Q, A=A, lam0=lam0)
