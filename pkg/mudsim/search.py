'''
Breadth-first tree search over the additive metric of the Gram transform.

Depth ``k`` of the tree fixes user ``k``'s symbol. The branch leaving a
partial path ``d_1 .. d_{k-1}`` with symbol ``d_k`` costs

    Re{y_k d_k} + |sum_{j<=k} t_kj d_j|^2 - N0 log w_a(d_k) + u_k |d_k|^2

and a leaf's total weight equals ``|r - S d|^2 - |r|^2 - N0 log p(d)``.

``t_search`` keeps, at every depth, the children whose weight is within
``t_threshold * N0`` of the best child at that depth, padded up to ``p_min``
and capped at ``p_max`` by ascending weight. ``T=inf, p_min=p_max=M`` is the
M-algorithm; ``T=inf, p_max >= Q^K`` enumerates the whole tree.

Ties are broken by the symbol index of the newest branch and then by the
path read lexicographically from the first user, so results are
reproducible bit for bit.
'''

from dataclasses import dataclass
import logging

import numpy as np

from .errors import CapExceeded, InvalidParameter
from .marginal import DEFAULT_FLOOR
from .oracle import OracleCap

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class SearchParams:
    '''
    Pruning parameters. ``t_threshold`` is in multiples of N0; ``p_list``
    defaults to ``p_max``.
    '''
    t_threshold: float = 16.0
    p_max: int = 512
    p_min: int = 1
    p_list: int = None

    def __post_init__(self):
        if self.p_list is None:
            object.__setattr__(self, "p_list", self.p_max)
        if not self.t_threshold >= 0:
            raise InvalidParameter("Threshold must be nonnegative, got %r" % self.t_threshold)
        if not 1 <= self.p_min <= self.p_max:
            raise InvalidParameter("Need 1 <= p_min <= p_max, got p_min=%r p_max=%r" % (self.p_min, self.p_max))
        if not 1 <= self.p_list <= self.p_max:
            raise InvalidParameter("Need 1 <= p_list <= p_max, got p_list=%r" % self.p_list)

    @classmethod
    def m_algorithm(cls, m):
        return cls(t_threshold=np.inf, p_max=m, p_min=m)

    @classmethod
    def unpruned(cls, size):
        return cls(t_threshold=np.inf, p_max=size, p_min=1, p_list=size)


@dataclass(frozen=True)
class PathNode:
    depth: int
    symbols: tuple
    weight: float

    @classmethod
    def root(cls):
        return cls(0, (), 0.0)

    def child(self, symbol, increment):
        return PathNode(self.depth + 1, self.symbols + (int(symbol),), self.weight + increment)


@dataclass
class DetectorList:
    '''
    Surviving leaves sorted by ascending total weight.

    Attributes
    ----------
    sequences
        ``P x K`` symbol indices.
    weights
        Total path weights.
    expansions
        Child nodes evaluated during the search.
    survivors
        Paths kept at each depth.
    trace
        Survivor index arrays per depth, when requested.
    '''
    sequences: np.ndarray
    weights: np.ndarray
    expansions: int = 0
    survivors: tuple = ()
    trace: tuple = None

    def __post_init__(self):
        self.sequences = np.asarray(self.sequences, dtype=np.int64)
        self.weights = np.asarray(self.weights, dtype=float)
        if len(self.weights) < 1 or len(self.weights) != len(self.sequences):
            raise InvalidParameter("Detector list must hold at least one weighted sequence")
        if np.any(np.diff(self.weights) < 0):
            raise InvalidParameter("Detector list weights are not sorted")

    def __len__(self):
        return len(self.weights)

    @property
    def best(self):
        return PathNode(self.sequences.shape[1], tuple(int(q) for q in self.sequences[0]), float(self.weights[0]))


def _prior_cost(priors, n0, floor):
    return -n0 * np.log(np.maximum(priors.probs, floor))


def path_extension_weight(depth, partial, stats, transform, priors, n0, constellation, floor=DEFAULT_FLOOR):
    '''
    Weight added when the path reaches ``depth`` (1-based) with symbol
    indices ``partial[:depth]``.
    '''
    if not 1 <= depth <= transform.k:
        raise InvalidParameter("Depth must be in [1, %d], got %r" % (transform.k, depth))
    k = depth - 1
    idx = np.asarray(partial[:depth], dtype=np.int64)
    values = constellation.symbols[idx]
    y = np.asarray(stats.y).reshape(-1)
    d = values[k]
    interference = transform.factor[k, :depth] @ values
    return float(np.real(y[k] * d) + abs(interference) ** 2
                 + _prior_cost(priors, n0, floor)[idx[k], k]
                 + transform.u[k] * abs(d) ** 2)


def t_search(stats, transform, priors, params, n0, constellation, floor=DEFAULT_FLOOR, record=False):
    '''
    T-algorithm search of one channel use.

    Parameters
    ----------
    stats
        MatchedFilterStats of the channel use.
    transform
        GramTransform of the spreading matrix in force.
    priors
        ProbabilityMatrix of symbol priors, floored at ``floor`` inside the
        metric.
    params
        SearchParams.
    n0
        Noise level; converts the threshold to metric units.
    record
        Keep the survivor paths of every depth in ``DetectorList.trace``.
    '''
    y = np.asarray(stats.y).reshape(-1)
    k_users = transform.k
    points = constellation.symbols
    q = len(points)
    factor = transform.factor
    branch = np.real(y[:, None] * points[None, :]).T \
        + _prior_cost(priors, n0, floor) \
        + transform.u[None, :] * (np.abs(points) ** 2)[:, None]
    limit = params.t_threshold * n0

    # pending[:, j] holds factor[k + j, :k] @ symbols of each survivor
    pending = np.zeros((1, k_users), dtype=complex)
    index_type = np.min_scalar_type(q - 1)
    paths = np.zeros((1, 0), dtype=index_type)
    weights = np.zeros(1)
    expansions = 0
    counts = []
    trace = [] if record else None
    for k in range(k_users):
        parents = len(weights)
        child = weights[:, None] + branch[:, k][None, :] \
            + np.abs(pending[:, 0, None] + factor[k, k] * points[None, :]) ** 2
        expansions += parents * q

        parent = np.repeat(np.arange(parents), q)
        symbol = np.tile(np.arange(q, dtype=index_type), parents)
        cand = np.concatenate([paths[parent], symbol[:, None]], axis=1)
        child = child.reshape(-1)
        keys = tuple(cand[:, j] for j in range(k, -1, -1)) + (symbol, child)
        order = np.lexsort(keys)
        child = child[order]

        within = int(np.count_nonzero(child <= child[0] + limit))
        keep = min(max(within, min(params.p_min, len(child))), params.p_max)
        order = order[:keep]
        paths = cand[order]
        pending = pending[parent[order], 1:] + points[symbol[order]][:, None] * factor[k + 1:, k][None, :]
        weights = child[:keep]
        counts.append(keep)
        if record:
            trace.append(paths.copy())

    if LOGGER.isEnabledFor(logging.DEBUG):
        LOGGER.debug("t_search K=%d survivors=%s expansions=%d", k_users, counts, expansions)
    n = min(params.p_list, len(weights))
    return DetectorList(sequences=paths[:n], weights=weights[:n], expansions=expansions,
                        survivors=tuple(counts), trace=tuple(trace) if record else None)


def exhaustive_list(stats, transform, priors, n0, constellation, cap=None, floor=DEFAULT_FLOOR):
    '''
    Every leaf of the tree with its exact weight, sorted.
    '''
    cap = cap or OracleCap()
    size = len(constellation.symbols) ** transform.k
    if size > cap.max_enumeration:
        raise CapExceeded("Tree has %d leaves, cap is %d" % (size, cap.max_enumeration))
    return t_search(stats, transform, priors, SearchParams.unpruned(size), n0, constellation, floor)
