'''
Linear inner detectors for the iterative receiver: soft parallel
interference cancellation (PIC) and the conditional LMMSE filter. Both
cancel the prior means of the interferers, model what is left as Gaussian
and return symbol extrinsics, so they drop into the loop in place of the
list detector.

When the constellation is real and the observation has been reduced to its
real part, statistics use the noise variance per real dimension (sigma2);
otherwise the total complex variance N0 is used.
'''

from dataclasses import dataclass
import logging

import numpy as np
from scipy.special import logsumexp

from .errors import DimensionMismatch
from .marginal import DEFAULT_FLOOR, ProbabilityMatrix

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class SoftStatistics:
    '''
    Prior mean and variance of every user's symbol.
    '''
    means: np.ndarray
    variances: np.ndarray


def soft_statistics(priors, constellation):
    points = constellation.symbols
    means = points @ priors.probs
    second = (np.abs(points) ** 2) @ priors.probs
    return SoftStatistics(means=means, variances=np.maximum(second - np.abs(means) ** 2, 0.0))


def _inputs(r, s, priors, constellation):
    r = np.asarray(getattr(r, "r", r))
    chips = s.chips if hasattr(s, "chips") else np.asarray(s, dtype=float)
    if r.shape != (chips.shape[0],):
        raise DimensionMismatch("Observation shape %s, spreading length %d" % (r.shape, chips.shape[0]))
    if priors.probs.shape != (len(constellation.symbols), chips.shape[1]):
        raise DimensionMismatch("Priors shape %s do not match %d users" % (priors.probs.shape, chips.shape[1]))
    real = constellation.is_real and np.isrealobj(r)
    return r, chips, real


def gaussian_extrinsic(z, gain, variance, constellation, real, floor=DEFAULT_FLOOR):
    '''
    Symbol extrinsics for ``z_k = gain_k d_k + noise`` with the given noise
    variance (per real dimension when ``real``, total otherwise).
    '''
    points = constellation.symbols
    mean = gain[None, :] * points[:, None]
    if real:
        log_lik = -(np.real(z)[None, :] - np.real(mean)) ** 2 / (2.0 * variance[None, :])
    else:
        log_lik = -np.abs(z[None, :] - mean) ** 2 / variance[None, :]
    probs = np.exp(log_lik - logsumexp(log_lik, axis=0, keepdims=True))
    return ProbabilityMatrix.normalized(np.maximum(probs, floor))


def soft_pic_detect(r, s, priors, noise, constellation, floor=DEFAULT_FLOOR):
    '''
    Soft PIC: subtract every interferer's prior mean, matched-filter, and
    treat the residual interference plus noise as Gaussian.
    '''
    r, chips, real = _inputs(r, s, priors, constellation)
    stats = soft_statistics(priors, constellation)
    gram = chips.T @ chips
    energy = np.diag(gram).copy()
    cross = gram - np.diag(energy)
    z = chips.T @ r - cross @ stats.means
    noise_var = noise.sigma2 if real else noise.n0
    variance = noise_var * energy + (cross ** 2) @ stats.variances
    return gaussian_extrinsic(z, energy, variance, constellation, real, floor)


def lmmse_detect(r, s, priors, noise, constellation, floor=DEFAULT_FLOOR):
    '''
    Conditional LMMSE: for user ``k``

        w_k = (S V_k S^T + noise I)^-1 s_k P

    where ``V_k`` holds the prior variances with user ``k``'s set to ``P``,
    applied to ``r`` with the interferers' prior means removed.
    '''
    r, chips, real = _inputs(r, s, priors, constellation)
    stats = soft_statistics(priors, constellation)
    power = constellation.power
    l_dim, k_users = chips.shape
    noise_var = noise.sigma2 if real else noise.n0

    base = (chips * stats.variances) @ chips.T + noise_var * np.eye(l_dim)
    own = (power - stats.variances)[:, None, None] * np.einsum("lk,mk->klm", chips, chips)
    cov = base[None, :, :] + own
    w = np.linalg.solve(cov, (power * chips.T)[:, :, None])[:, :, 0]

    residual = r - chips @ stats.means
    cleaned = residual[None, :] + chips.T * stats.means[:, None]
    z = np.einsum("kl,kl->k", w, cleaned)
    gain = np.einsum("kl,lk->k", w, chips)
    variance = np.einsum("kl,klm,km->k", w, cov, w) - gain ** 2 * power
    variance = np.maximum(variance, np.finfo(float).tiny)
    if LOGGER.isEnabledFor(logging.DEBUG):
        LOGGER.debug("lmmse gains=%s", gain)
    return gaussian_extrinsic(z, gain, variance, constellation, real, floor)
