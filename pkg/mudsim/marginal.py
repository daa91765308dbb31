'''
Symbol probability matrices exchanged between the multiuser detector and
the per-user decoders, list marginalisation, and the conversions between
symbol and bit probabilities for constellations carrying more than one bit.
'''

from dataclasses import dataclass
import logging

import numpy as np
from scipy.special import logsumexp

from .errors import DimensionMismatch, InvalidParameter

LOGGER = logging.getLogger(__name__)

# Lower bound on probabilities fed back into the detector and on list cells
# that no surviving sequence covers.
DEFAULT_FLOOR = 1e-7


@dataclass
class ProbabilityMatrix:
    '''
    Column-stochastic ``Q x K`` matrix: column ``k`` is the distribution of
    user ``k``'s symbol over the constellation indices.
    '''
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 2:
            raise InvalidParameter("Probability matrix must be 2-D, got shape %s" % (probs.shape,))
        if np.any(probs < 0) or not np.allclose(probs.sum(axis=0), 1.0, rtol=0, atol=1e-9):
            raise InvalidParameter("Probability matrix columns must be distributions")
        self.probs = probs

    @classmethod
    def uniform(cls, q, k):
        return cls(np.full((q, k), 1.0 / q))

    @classmethod
    def normalized(cls, weights):
        weights = np.asarray(weights, dtype=float)
        return cls(weights / weights.sum(axis=0, keepdims=True))

    @property
    def q(self):
        return self.probs.shape[0]

    @property
    def k(self):
        return self.probs.shape[1]

    def floored(self, floor=DEFAULT_FLOOR):
        return ProbabilityMatrix.normalized(np.maximum(self.probs, floor))


def list_to_posteriors(detector_list, n0, q, floor=DEFAULT_FLOOR):
    '''
    Marginalise a detector list into per-user symbol posteriors.

    Every list entry contributes ``exp(-(weight - min_weight) / n0)`` to the
    cells of its symbols. Cells no entry covers get ``floor`` before the
    columns are normalized.
    '''
    seqs = np.asarray(detector_list.sequences)
    weights = np.asarray(detector_list.weights, dtype=float)
    if len(weights) == 0:
        raise InvalidParameter("Detector list is empty")
    log_w = -(weights - weights.min()) / n0

    cells = np.empty((q, seqs.shape[1]))
    covered = np.empty((q, seqs.shape[1]), dtype=bool)
    for symbol in range(q):
        hit = seqs == symbol
        covered[symbol] = hit.any(axis=0)
        with np.errstate(divide="ignore"):
            cells[symbol] = logsumexp(np.where(hit, log_w[:, None], -np.inf), axis=0)
    cells = np.exp(cells)
    missing = ~covered
    if missing.any():
        cells[missing] = floor
        if LOGGER.isEnabledFor(logging.DEBUG):
            LOGGER.debug("list of %d sequences leaves %d cells uncovered", len(weights), missing.sum())
    return ProbabilityMatrix.normalized(cells)


def extrinsic_from_posterior(posterior, prior, floor=DEFAULT_FLOOR):
    '''
    Divide the prior out of a posterior, floor, and renormalize.
    '''
    if posterior.probs.shape != prior.probs.shape:
        raise DimensionMismatch(
            "Posterior shape %s, prior shape %s" % (posterior.probs.shape, prior.probs.shape))
    ratio = posterior.probs / np.maximum(prior.probs, floor)
    ratio = ratio / ratio.sum(axis=0, keepdims=True)
    return ProbabilityMatrix.normalized(np.maximum(ratio, floor))


def _label_factors(bit_p1, labels):
    # factors[q, k, i] = prior probability that bit i of user k equals label i of symbol q
    bit_p1 = np.asarray(bit_p1, dtype=float)
    labels = np.asarray(labels)
    if bit_p1.ndim != 2 or bit_p1.shape[1] != labels.shape[1]:
        raise DimensionMismatch(
            "Bit priors shape %s do not match %d bits per symbol" % (bit_p1.shape, labels.shape[1]))
    return np.where(labels[:, None, :] == 1, bit_p1[None, :, :], 1.0 - bit_p1[None, :, :])


def symbol_priors_from_bits(bit_p1, constellation):
    '''
    Symbol priors of every user from independent bit priors.

    ``bit_p1[k, i]`` is the probability that bit ``i`` (most significant
    first) of user ``k``'s label is one.
    '''
    factors = _label_factors(bit_p1, constellation.labels)
    return ProbabilityMatrix.normalized(factors.prod(axis=2))


def bit_extrinsics_from_symbols(symbol_extrinsic, bit_p1, constellation, floor=DEFAULT_FLOOR):
    '''
    Bit extrinsics ``P(bit i = 1)`` of shape ``(K, bits_per_symbol)``.

    Bit ``i`` marginalises the symbol extrinsic against the priors of the
    other bits of the same symbol, so its own prior never re-enters.
    '''
    labels = np.asarray(constellation.labels)
    factors = _label_factors(bit_p1, labels)
    m = labels.shape[1]
    ext = symbol_extrinsic.probs
    p1 = np.empty((ext.shape[1], m))
    for i in range(m):
        others = np.prod(np.delete(factors, i, axis=2), axis=2)
        weighted = ext * others
        one = weighted[labels[:, i] == 1].sum(axis=0)
        zero = weighted[labels[:, i] == 0].sum(axis=0)
        p1[:, i] = one / (one + zero)
    return np.clip(p1, floor, 1.0 - floor)
