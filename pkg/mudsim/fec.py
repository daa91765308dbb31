'''
Per-user forward error correction: feed-forward convolutional codes, their
exact log-MAP (BCJR) soft-in/soft-out decoder, interleavers and the final
hard decision.

Generator convention
--------------------
Generators are given in octal with the most significant bit multiplying the
current input: ``0o5 = 1 + D^2`` and ``0o7 = 1 + D + D^2``. The trellis
state holds the previous ``constraint_length - 1`` inputs, most recent input
in the most significant bit.

Example
-------
```python
code = ConvCode((0o5, 0o7))
coded = code.encode([1, 0])          # -> [1, 1, 0, 1]
priors = BitProbabilityStream.from_p1(0.5 * np.ones(len(coded)))
extrinsic, info = bcjr_decode(priors, code)
```
'''

from dataclasses import dataclass, field
from functools import cached_property
import logging

import numpy as np
from scipy.special import logsumexp

from .errors import InvalidParameter, LengthMismatch
from .marginal import DEFAULT_FLOOR

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConvCode:
    '''
    Rate 1/n feed-forward convolutional code.

    Parameters
    ----------
    generators
        Feed-forward polynomials, octal integers (``0o5``) or octal strings
        (``"05"``).
    constraint_length
        Number of taps. Derived from the widest generator when omitted.
    '''
    generators: tuple = (0o5, 0o7)
    constraint_length: int = None

    def __post_init__(self):
        try:
            gens = tuple(int(g, 8) if isinstance(g, str) else int(g)
                         for g in self.generators)
        except (TypeError, ValueError):
            raise InvalidParameter("Generators must be octal values: %r" % (self.generators,))
        if not gens or any(g <= 0 for g in gens):
            raise InvalidParameter("Generators must be nonzero: %s" % (self.generators,))
        kappa = self.constraint_length
        if kappa is None:
            kappa = max(g.bit_length() for g in gens)
        if kappa < 1 or any(g.bit_length() > kappa for g in gens):
            raise InvalidParameter(
                "Generator degree exceeds constraint length %s: %s" % (kappa, [oct(g) for g in gens]))
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "constraint_length", int(kappa))

    @property
    def memory(self):
        return self.constraint_length - 1

    @property
    def n_states(self):
        return 1 << self.memory

    @property
    def n_outputs(self):
        return len(self.generators)

    @property
    def rate(self):
        return 1.0 / self.n_outputs

    @cached_property
    def next_state(self):
        '''
        ``next_state[s, u]``: state reached from ``s`` on input bit ``u``.
        '''
        s = np.arange(self.n_states)[:, None]
        u = np.arange(2)[None, :]
        return ((u << self.memory) | s) >> 1

    @cached_property
    def outputs(self):
        '''
        ``outputs[s, u, i]``: code bit of generator ``i`` on the branch
        leaving ``s`` with input ``u``.
        '''
        s = np.arange(self.n_states)[:, None, None]
        u = np.arange(2)[None, :, None]
        reg = (u << self.memory) | s
        gens = np.array(self.generators)[None, None, :]
        taps = reg & gens
        parity = np.zeros_like(taps)
        for bit in range(self.constraint_length):
            parity ^= (taps >> bit) & 1
        return parity

    @cached_property
    def predecessors(self):
        '''
        ``(states, inputs)``, each shaped ``(n_states, 2)``, listing the two
        branches entering every state.
        '''
        states = np.empty((self.n_states, 2), dtype=np.int64)
        inputs = np.empty((self.n_states, 2), dtype=np.int64)
        fill = np.zeros(self.n_states, dtype=np.int64)
        for s in range(self.n_states):
            for u in range(2):
                ns = self.next_state[s, u]
                states[ns, fill[ns]] = s
                inputs[ns, fill[ns]] = u
                fill[ns] += 1
        return states, inputs

    def coded_length(self, info_bits, terminated=False):
        steps = info_bits + (self.memory if terminated else 0)
        return steps * self.n_outputs

    def encode(self, bits, terminated=False):
        '''
        Encode along the last axis, starting from the all-zero state. Leading
        axes are independent frames (for example one row per user).
        '''
        bits = np.asarray(bits, dtype=np.int64)
        if np.any((bits != 0) & (bits != 1)):
            raise InvalidParameter("Information bits must be 0 or 1")
        if terminated:
            tail = np.zeros(bits.shape[:-1] + (self.memory,), dtype=np.int64)
            bits = np.concatenate([bits, tail], axis=-1)
        steps = bits.shape[-1]
        state = np.zeros(bits.shape[:-1], dtype=np.int64)
        coded = np.empty(bits.shape[:-1] + (steps, self.n_outputs), dtype=np.int8)
        for t in range(steps):
            u = bits[..., t]
            coded[..., t, :] = self.outputs[state, u]
            state = self.next_state[state, u]
        return coded.reshape(bits.shape[:-1] + (steps * self.n_outputs,))


@dataclass
class BitProbabilityStream:
    '''
    Binary distributions for a sequence of bits. ``probs[i] = (P(0), P(1))``.
    '''
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 2 or probs.shape[1] != 2:
            raise InvalidParameter("Bit probabilities must have shape (n, 2), got %s" % (probs.shape,))
        if np.any(probs < 0) or not np.allclose(probs.sum(axis=1), 1.0, rtol=0, atol=1e-9):
            raise InvalidParameter("Bit probabilities must be nonnegative pairs summing to 1")
        self.probs = probs

    @classmethod
    def from_p1(cls, p1):
        p1 = np.asarray(p1, dtype=float)
        return cls(np.stack([1.0 - p1, p1], axis=-1))

    @classmethod
    def uniform(cls, n):
        return cls(np.full((n, 2), 0.5))

    @property
    def p1(self):
        return self.probs[:, 1]

    def __len__(self):
        return len(self.probs)

    def floored(self, floor=DEFAULT_FLOOR):
        probs = np.maximum(self.probs, floor)
        return BitProbabilityStream(probs / probs.sum(axis=1, keepdims=True))


@dataclass(frozen=True)
class Interleaver:
    '''
    Bijective reordering. ``forward`` places element ``permutation[i]`` at
    position ``i``; ``inverse`` undoes it.
    '''
    permutation: np.ndarray
    inverse_permutation: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        perm = np.asarray(self.permutation, dtype=np.int64)
        if perm.ndim != 1 or not np.array_equal(np.sort(perm), np.arange(len(perm))):
            raise InvalidParameter("Interleaver is not a permutation")
        object.__setattr__(self, "permutation", perm)
        object.__setattr__(self, "inverse_permutation", np.argsort(perm))

    @classmethod
    def random(cls, n, rng):
        return cls(np.random.default_rng(rng).permutation(n))

    @classmethod
    def identity(cls, n):
        return cls(np.arange(n))

    def __len__(self):
        return len(self.permutation)

    def forward(self, values, axis=-1):
        values = np.asarray(values)
        if values.shape[axis] != len(self):
            raise LengthMismatch("Interleaver length %d, stream length %d" % (len(self), values.shape[axis]))
        return np.take(values, self.permutation, axis=axis)

    def inverse(self, values, axis=-1):
        values = np.asarray(values)
        if values.shape[axis] != len(self):
            raise LengthMismatch("Interleaver length %d, stream length %d" % (len(self), values.shape[axis]))
        return np.take(values, self.inverse_permutation, axis=axis)


def permute(stream, interleaver, direction="forward"):
    '''
    Reorder a bit probability stream through ``interleaver``.
    '''
    if direction == "forward":
        return BitProbabilityStream(interleaver.forward(stream.probs, axis=0))
    elif direction == "inverse":
        return BitProbabilityStream(interleaver.inverse(stream.probs, axis=0))
    raise InvalidParameter("Unknown permutation direction: " + str(direction))


def bcjr_decode(coded_priors, code, terminated=False, max_log=False, floor=DEFAULT_FLOOR):
    '''
    Forward-backward decoding of one user's code.

    Parameters
    ----------
    coded_priors
        BitProbabilityStream over the coded bits, in code order.
    code
        ConvCode used by the encoder.
    terminated
        The frame ends with ``code.memory`` zero tail bits and the encoder is
        back in the zero state. Otherwise the final state is unknown.
    max_log
        Replace log-sum-exp by max in the recursions.
    floor
        Lower bound applied to the returned extrinsic probabilities.

    Returns
    -------
    (extrinsic, info_posterior)
        Coded-bit extrinsics (own prior divided out) and information-bit
        posteriors.
    '''
    n_out = code.n_outputs
    probs = coded_priors.probs
    if len(probs) % n_out:
        raise LengthMismatch("Coded length %d is not a multiple of %d" % (len(probs), n_out))
    steps = len(probs) // n_out
    tail = code.memory if terminated else 0
    if steps <= tail:
        raise LengthMismatch("Frame of %d trellis steps is shorter than the tail" % steps)
    reduce = np.max if max_log else logsumexp

    out = code.outputs
    nxt = code.next_state
    pred_s, pred_u = code.predecessors
    logp = np.log(np.maximum(probs, np.finfo(float).tiny)).reshape(steps, n_out, 2)

    with np.errstate(divide="ignore"):
        gamma = logp[:, np.arange(n_out), out].sum(axis=-1)
        if tail:
            gamma[steps - tail:, :, 1] = -np.inf

        alpha = np.full((steps + 1, code.n_states), -np.inf)
        alpha[0, 0] = 0.0
        for t in range(steps):
            branch = alpha[t][:, None] + gamma[t]
            alpha[t + 1] = reduce(branch[pred_s, pred_u], axis=1)
            alpha[t + 1] -= alpha[t + 1].max()

        beta = np.full((steps + 1, code.n_states), -np.inf if terminated else 0.0)
        beta[steps, 0] = 0.0
        for t in range(steps - 1, -1, -1):
            beta[t] = reduce(gamma[t] + beta[t + 1][nxt], axis=1)
            beta[t] -= beta[t].max()

        joint = alpha[:-1, :, None] + gamma + beta[1:][:, nxt]

        info = reduce(joint, axis=1)[:steps - tail]
        info = np.exp(info - logsumexp(info, axis=1, keepdims=True))

        ext = np.empty((steps, n_out, 2))
        for i in range(n_out):
            labels = out[:, :, i]
            excluded = joint - logp[:, i, :][:, labels]
            for x in (0, 1):
                masked = np.where(labels == x, excluded, -np.inf)
                ext[:, i, x] = reduce(masked.reshape(steps, -1), axis=1)
        ext = np.exp(ext - logsumexp(ext, axis=2, keepdims=True))

    if LOGGER.isEnabledFor(logging.DEBUG):
        LOGGER.debug("bcjr steps=%d states=%d max_log=%s", steps, code.n_states, max_log)
    extrinsic = BitProbabilityStream(ext.reshape(steps * n_out, 2)).floored(floor)
    return extrinsic, BitProbabilityStream(info)


def hard_decide(info_posterior):
    '''
    Per-bit argmax of a posterior stream; ties decide 0.
    '''
    probs = info_posterior.probs
    return (probs[:, 1] > probs[:, 0]).astype(np.int8)
