'''
Brute-force references. These enumerate every hypothesis and never touch
the Gram transform, so they anchor the tests of the tree search and of the
BCJR decoder.
'''

from dataclasses import dataclass
import itertools
import logging

import numpy as np
from scipy.special import logsumexp

from .errors import CapExceeded, DimensionMismatch, InvalidParameter, LengthMismatch
from .fec import BitProbabilityStream
from .marginal import ProbabilityMatrix

LOGGER = logging.getLogger(__name__)

CHUNK = 1 << 15


@dataclass(frozen=True)
class OracleCap:
    '''
    Ceiling on the number of enumerated sequences.
    '''
    max_enumeration: int = 1 << 20

    def __post_init__(self):
        if self.max_enumeration < 1:
            raise InvalidParameter("Enumeration cap must be at least 1, got %r" % self.max_enumeration)

    def check(self, count, what):
        if count > self.max_enumeration:
            raise CapExceeded("%s needs %d enumerations, cap is %d" % (what, count, self.max_enumeration))


def brute_force_symbol_app(r, s, priors, n0, constellation, cap=None):
    '''
    Exact symbol posteriors

        w(d_k = q) ~ sum_{d: d_k = q} exp(-|r - S d|^2 / N0) p(d)

    accumulated in the log domain, in a fixed enumeration order.
    '''
    cap = cap or OracleCap()
    r = np.asarray(getattr(r, "r", r))
    chips = s.chips if hasattr(s, "chips") else np.asarray(s, dtype=float)
    k_users = chips.shape[1]
    points = constellation.symbols
    q = len(points)
    if priors.probs.shape != (q, k_users):
        raise DimensionMismatch("Priors shape %s, expected %s" % (priors.probs.shape, (q, k_users)))
    if len(r) != chips.shape[0]:
        raise DimensionMismatch("Observation length %d, spreading length %d" % (len(r), chips.shape[0]))
    cap.check(q ** k_users, "Symbol APP")

    with np.errstate(divide="ignore"):
        log_prior = np.log(priors.probs)
    acc = np.full((q, k_users), -np.inf)
    users = np.arange(k_users)
    hypotheses = itertools.product(range(q), repeat=k_users)
    while True:
        block = np.array(list(itertools.islice(hypotheses, CHUNK)), dtype=np.int64)
        if block.size == 0:
            break
        resid = r[None, :] - points[block] @ chips.T
        log_w = -np.sum(np.abs(resid) ** 2, axis=1) / n0 + log_prior[block, users].sum(axis=1)
        for symbol in range(q):
            with np.errstate(divide="ignore"):
                part = logsumexp(np.where(block == symbol, log_w[:, None], -np.inf), axis=0)
            acc[symbol] = np.logaddexp(acc[symbol], part)
    acc -= logsumexp(acc, axis=0, keepdims=True)
    return ProbabilityMatrix.normalized(np.exp(acc))


def brute_force_map(coded_priors, code, cap=None, terminated=False):
    '''
    Exact information-bit marginals of one user's code, by encoding every
    information sequence from the zero state.
    '''
    cap = cap or OracleCap()
    n_out = code.n_outputs
    probs = coded_priors.probs
    tail = code.memory if terminated else 0
    if len(probs) % n_out:
        raise LengthMismatch("Coded length %d is not a multiple of %d" % (len(probs), n_out))
    info_len = len(probs) // n_out - tail
    if info_len < 1:
        raise LengthMismatch("Coded frame too short for a terminated code")
    cap.check(2 ** info_len, "Information-sequence marginal")

    words = np.arange(2 ** info_len)[:, None]
    info = (words >> np.arange(info_len - 1, -1, -1)[None, :]) & 1
    coded = code.encode(info, terminated=terminated)
    with np.errstate(divide="ignore"):
        log_p = np.log(probs)
    positions = np.arange(coded.shape[1])[None, :]
    log_w = log_p[positions, coded].sum(axis=1)

    out = np.empty((info_len, 2))
    for x in (0, 1):
        with np.errstate(divide="ignore"):
            out[:, x] = logsumexp(np.where(info == x, log_w[:, None], -np.inf), axis=0)
    out = np.exp(out - logsumexp(out, axis=1, keepdims=True))
    return BitProbabilityStream(out)
