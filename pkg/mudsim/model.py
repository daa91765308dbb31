'''
Transmit chain and channel of the synchronous multiple-access system

    r = S d + z

where ``S`` holds one spreading column of ``+-1/sqrt(L)`` chips per user,
``d`` holds one constellation symbol per user and ``z`` is white Gaussian
noise with variance ``sigma2`` per real dimension.

Random streams
--------------
Every random draw comes from ``rng_stream(master_seed, frame_index,
purpose)``, a PCG64 generator seeded with the integer triple, so a run is
reproducible on any machine and independent of the order in which frames
are processed. Interleavers are drawn once per run from frame index 0.
'''

from dataclasses import dataclass, field
from functools import cached_property
import logging
import math

import numpy as np

from .errors import DimensionMismatch, InvalidParameter, LengthMismatch

LOGGER = logging.getLogger(__name__)

PURPOSES = {"interleaver": 1, "data": 2, "spreading": 3, "noise": 4}


def rng_stream(master_seed, frame_index, purpose):
    '''
    Independent generator for ``(master_seed, frame_index, purpose)``.
    '''
    if purpose not in PURPOSES:
        raise InvalidParameter("Unknown random stream purpose: " + str(purpose))
    if int(master_seed) < 0 or int(frame_index) < 0:
        raise InvalidParameter("Seed and frame index must be non-negative, got %r, %r"
                               % (master_seed, frame_index))
    seq = np.random.SeedSequence([int(master_seed), int(frame_index), PURPOSES[purpose]])
    return np.random.Generator(np.random.PCG64(seq))


def _gray(n):
    return n ^ (n >> 1)


@dataclass(frozen=True)
class Constellation:
    '''
    Symbol alphabet with zero mean and average energy ``power``. Symbol
    index ``q`` carries the label ``q`` written in binary, most significant
    bit first.
    '''
    symbols: np.ndarray
    power: float = 1.0
    name: str = "custom"

    def __post_init__(self):
        symbols = np.asarray(self.symbols, dtype=complex)
        q = len(symbols)
        if q < 2 or q & (q - 1):
            raise InvalidParameter("Constellation size must be a power of two, got %d" % q)
        if len(np.unique(symbols)) != q:
            raise InvalidParameter("Constellation symbols must be distinct")
        if abs(symbols.mean()) > 1e-12:
            raise InvalidParameter("Constellation mean is %s, expected 0" % symbols.mean())
        energy = np.mean(np.abs(symbols) ** 2)
        if abs(energy - self.power) > 1e-12 * max(1.0, self.power):
            raise InvalidParameter("Constellation energy %r differs from power %r" % (energy, self.power))
        object.__setattr__(self, "symbols", symbols)

    @property
    def q(self):
        return len(self.symbols)

    @property
    def bits_per_symbol(self):
        return self.q.bit_length() - 1

    @property
    def is_real(self):
        return bool(np.all(self.symbols.imag == 0))

    @cached_property
    def labels(self):
        m = self.bits_per_symbol
        idx = np.arange(self.q)[:, None]
        return ((idx >> np.arange(m - 1, -1, -1)[None, :]) & 1).astype(np.int8)

    def map_bits(self, bits):
        '''
        Map bit streams (last axis, length divisible by bits_per_symbol) to
        symbol indices.
        '''
        bits = np.asarray(bits, dtype=np.int64)
        m = self.bits_per_symbol
        if bits.shape[-1] % m:
            raise LengthMismatch(
                "Bit count %d is not a multiple of %d bits per symbol" % (bits.shape[-1], m))
        groups = bits.reshape(bits.shape[:-1] + (bits.shape[-1] // m, m))
        return groups @ (1 << np.arange(m - 1, -1, -1))

    @classmethod
    def bpsk(cls, power=1.0):
        amp = math.sqrt(power)
        return cls(np.array([amp, -amp], dtype=complex), power, "bpsk")

    @classmethod
    def psk(cls, q, power=1.0, offset=0.0, name=None):
        symbols = np.empty(q, dtype=complex)
        for p in range(q):
            symbols[_gray(p)] = math.sqrt(power) * np.exp(1j * (2 * np.pi * p / q + offset))
        return cls(symbols, power, name or "%dpsk" % q)

    @classmethod
    def qpsk(cls, power=1.0):
        return cls.psk(4, power, offset=np.pi / 4, name="qpsk")

    @classmethod
    def qam16(cls, power=1.0):
        levels = np.array([-3.0, -1.0, 1.0, 3.0])
        scale = math.sqrt(power / 10.0)
        symbols = np.empty(16, dtype=complex)
        for pi in range(4):
            for pq in range(4):
                symbols[(_gray(pi) << 2) | _gray(pq)] = scale * complex(levels[pi], levels[pq])
        return cls(symbols, power, "16qam")

    @classmethod
    def by_name(cls, name, power=1.0):
        makers = {"bpsk": cls.bpsk, "qpsk": cls.qpsk, "16qam": cls.qam16,
                  "8psk": lambda p: cls.psk(8, p)}
        if name not in makers:
            raise InvalidParameter("Unknown constellation: " + str(name))
        return makers[name](power)


@dataclass(frozen=True)
class NoiseSpec:
    '''
    Noise variance ``sigma2`` per real dimension; ``n0 = 2 sigma2``.
    '''
    sigma2: float

    def __post_init__(self):
        if not np.isfinite(self.sigma2) or self.sigma2 <= 0:
            raise InvalidParameter("Noise variance must be positive, got %r" % self.sigma2)

    @property
    def n0(self):
        return 2.0 * self.sigma2


@dataclass(frozen=True)
class SpreadingMatrix:
    '''
    ``L x K`` matrix of chips ``+-1/sqrt(L)``, one column per user.
    '''
    chips: np.ndarray

    def __post_init__(self):
        chips = np.asarray(self.chips, dtype=float)
        if chips.ndim != 2:
            raise DimensionMismatch("Spreading matrix must be 2-D, got shape %s" % (chips.shape,))
        amp = 1.0 / math.sqrt(chips.shape[0])
        if not np.all(np.abs(np.abs(chips) - amp) < 1e-12):
            raise InvalidParameter("Spreading chips must be +-1/sqrt(L)")
        object.__setattr__(self, "chips", chips)

    @property
    def l(self):
        return self.chips.shape[0]

    @property
    def k(self):
        return self.chips.shape[1]


@dataclass
class SymbolFrame:
    '''
    One frame of transmitted data: ``symbols[n, k]`` is the constellation
    index user ``k`` sends in channel use ``n``.
    '''
    symbols: np.ndarray
    coded_bits: np.ndarray
    constellation: Constellation
    info_bits: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.symbols = np.asarray(self.symbols, dtype=np.int64)
        if np.any((self.symbols < 0) | (self.symbols >= self.constellation.q)):
            raise InvalidParameter("Symbol indices outside [0, %d)" % self.constellation.q)

    @property
    def channel_uses(self):
        return self.symbols.shape[0]

    @property
    def values(self):
        return self.constellation.symbols[self.symbols]


@dataclass
class Observation:
    r: np.ndarray

    def __post_init__(self):
        self.r = np.asarray(self.r)
        if not np.all(np.isfinite(self.r)):
            raise InvalidParameter("Observation has non-finite entries")


def ebn0_to_noise(ebn0_db, rate, q, p):
    '''
    Noise level for ``Eb/N0 = P / (2 sigma2 R log2 Q)``.
    '''
    if not np.isfinite(ebn0_db):
        raise InvalidParameter("Eb/N0 must be finite, got %r" % ebn0_db)
    if not 0 < rate <= 1:
        raise InvalidParameter("Code rate must be in (0, 1], got %r" % rate)
    if q < 2:
        raise InvalidParameter("Alphabet size must be at least 2, got %r" % q)
    if p <= 0:
        raise InvalidParameter("Symbol power must be positive, got %r" % p)
    sigma2 = p / (2.0 * 10.0 ** (ebn0_db / 10.0) * rate * math.log2(q))
    return NoiseSpec(sigma2)


def draw_spreading(k, l, rng):
    '''
    Draw an ``l x k`` spreading matrix with independent equiprobable chips.
    '''
    if k < 1 or l < 1:
        raise InvalidParameter("Need k >= 1 and l >= 1, got k=%r l=%r" % (k, l))
    rng = np.random.default_rng(rng)
    signs = 2 * rng.integers(0, 2, size=(l, k)) - 1
    return SpreadingMatrix(signs / math.sqrt(l))


def encode_and_modulate(info_bits, code, interleavers, constellation, terminated=False):
    '''
    Encode, interleave and map every user's information bits.

    Parameters
    ----------
    info_bits
        ``K x I`` array, one row per user.
    code
        ConvCode shared by all users.
    interleavers
        One Interleaver per user, of the coded length.
    constellation
        Constellation used for the memoryless mapping.
    '''
    info_bits = np.atleast_2d(np.asarray(info_bits, dtype=np.int64))
    if len(interleavers) != info_bits.shape[0]:
        raise LengthMismatch("%d interleavers for %d users" % (len(interleavers), info_bits.shape[0]))
    coded = code.encode(info_bits, terminated=terminated)
    for k, pi in enumerate(interleavers):
        if len(pi) != coded.shape[1]:
            raise LengthMismatch(
                "Interleaver %d has length %d, coded frame has %d bits" % (k, len(pi), coded.shape[1]))
    mixed = np.stack([pi.forward(row) for pi, row in zip(interleavers, coded)])
    symbols = constellation.map_bits(mixed).T
    return SymbolFrame(symbols=symbols, coded_bits=coded, constellation=constellation, info_bits=info_bits)


def simulate_channel(s, frame, noise, rng):
    '''
    Pass a frame through the channel.

    ``s`` is either one SpreadingMatrix for the whole frame or a sequence
    with one matrix per channel use. Returns one Observation per channel
    use.
    '''
    rng = np.random.default_rng(rng)
    symbols = np.asarray(frame.symbols)
    if isinstance(s, SpreadingMatrix):
        chips = s.chips[None, :, :]
    else:
        if len(s) != len(symbols):
            raise LengthMismatch("%d spreading matrices for %d channel uses" % (len(s), len(symbols)))
        chips = np.stack([m.chips for m in s])
    if chips.shape[2] != symbols.shape[1]:
        raise DimensionMismatch(
            "Spreading matrix has %d users, frame has %d" % (chips.shape[2], symbols.shape[1]))
    chips = np.broadcast_to(chips, (len(symbols),) + chips.shape[1:])
    clean = np.einsum("nlk,nk->nl", chips, frame.values)
    scale = math.sqrt(noise.sigma2)
    z = scale * (rng.standard_normal(clean.shape) + 1j * rng.standard_normal(clean.shape))
    return [Observation(r) for r in clean + z]
