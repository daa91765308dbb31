'''
Virtual full-rank Gram system.

With ``G = S^T S`` the squared distance of a hypothesis ``d`` expands as

    |r - S d|^2 = |r|^2 + Re{y d} + d^H G d,        y = -2 r^H S

``G`` is singular whenever there are more users than chips. Replacing its
diagonal by a constant ``rho`` gives ``G~``, which is positive-definite once
``rho`` exceeds the bound of ``choose_rho``, and the removed energy is
returned per user through ``u = diag(G) - rho``:

    d^H G d = d^H G~ d + sum_k u_k |d_k|^2 = |T d|^2 + sum_k u_k |d_k|^2

with ``T`` lower-triangular, ``T^T T = G~``. Row ``k`` of ``T d`` only
involves ``d_1 .. d_k``, which is what makes the metric a tree.
'''

from dataclasses import dataclass
import logging

import numpy as np
import scipy.linalg

from .errors import DegenerateConstellation, DimensionMismatch, FactorizationFailure, InvalidParameter

LOGGER = logging.getLogger(__name__)

DEFAULT_MARGIN = 1.0


def choose_rho(constellation, k, margin=DEFAULT_MARGIN):
    '''
    Smallest admissible diagonal constant plus ``margin``:

        rho = (k - 1) max_ij -Re{D_i^* D_j} / |D_i|^2 + margin
    '''
    if k < 1:
        raise InvalidParameter("User count must be at least 1, got %r" % k)
    if not margin > 0:
        raise InvalidParameter("Margin must be positive, got %r" % margin)
    points = np.asarray(constellation.symbols, dtype=complex)
    energy = np.abs(points) ** 2
    if np.any(energy == 0):
        raise DegenerateConstellation("Constellation contains the zero symbol")
    ratio = -np.real(np.conj(points)[:, None] * points[None, :]) / energy[:, None]
    return (k - 1) * float(ratio.max()) + margin


@dataclass(frozen=True)
class GramTransform:
    '''
    Immutable result of ``build_transform``.

    Attributes
    ----------
    gram
        ``G = S^T S``.
    rho
        Diagonal constant.
    g_tilde
        ``G`` with its diagonal set to ``rho``.
    factor
        Lower-triangular ``T`` with ``T^T T = g_tilde``.
    u
        ``diag(G) - rho``.
    '''
    gram: np.ndarray
    rho: float
    g_tilde: np.ndarray
    factor: np.ndarray
    u: np.ndarray

    @property
    def k(self):
        return self.gram.shape[0]


def _reversed_cholesky(matrix):
    # Cholesky of the index-reversed matrix, reversed back: A = T^T T with T lower.
    rev = matrix[::-1, ::-1]
    lower = scipy.linalg.cholesky(rev, lower=True)
    return lower.T[::-1, ::-1]


def build_transform(s, rho):
    '''
    Build the transform for spreading matrix ``s``.

    Raises FactorizationFailure when ``G~`` is not numerically
    positive-definite, which means ``rho`` violates the bound.
    '''
    chips = s.chips if hasattr(s, "chips") else np.asarray(s, dtype=float)
    gram = chips.T @ chips
    g_tilde = gram.copy()
    np.fill_diagonal(g_tilde, rho)
    try:
        factor = _reversed_cholesky(g_tilde)
    except np.linalg.LinAlgError as ex:
        raise FactorizationFailure("Modified Gram matrix is not positive-definite for rho=%r: %s" % (rho, ex))
    if not np.all(np.isfinite(factor)) or np.any(np.diag(factor) == 0):
        raise FactorizationFailure("Triangular factor is singular for rho=%r" % rho)
    u = np.diag(gram) - rho
    if LOGGER.isEnabledFor(logging.DEBUG):
        LOGGER.debug("gram transform K=%d rho=%g min diag(T)=%g", len(u), rho, np.diag(factor).min())
    return GramTransform(gram=gram, rho=float(rho), g_tilde=g_tilde, factor=factor, u=u)


@dataclass(frozen=True)
class MatchedFilterStats:
    '''
    ``y = -2 r^H S``; one row per channel use when built from a stack of
    observations.
    '''
    y: np.ndarray


def matched_filter(r, s):
    '''
    Matched-filter statistics of observation ``r`` (an Observation, a
    length-L vector, or an ``N x L`` stack).
    '''
    r = np.asarray(getattr(r, "r", r))
    chips = s.chips if hasattr(s, "chips") else np.asarray(s, dtype=float)
    if r.shape[-1] != chips.shape[0]:
        raise DimensionMismatch("Observation length %d, spreading length %d" % (r.shape[-1], chips.shape[0]))
    return MatchedFilterStats(-2.0 * np.conj(r) @ chips)
