'''
The canonical iterative receiver and its Monte-Carlo driver.

Every iteration runs the multiuser detector over all channel uses of a
frame, de-interleaves its extrinsics, runs one BCJR decoder per user and
re-interleaves the decoder extrinsics as the next detector priors. Bit
errors are counted on the information bits after every iteration.

Example
-------
```python
config = preset_config("paper-fig2", users=12)
config.frames = 4
report = run_simulation(config, workers=2)
emit_report(report, "csv", "out.csv")
```
'''

from dataclasses import asdict, dataclass, field, fields, replace
import csv
import json
import logging
import numbers
import queue
import sys
import threading

import numpy as np
from tqdm import tqdm

from . import __version__
from .baselines import lmmse_detect, soft_pic_detect
from .errors import ConfigInvalid, MudsimError
from .fec import BitProbabilityStream, ConvCode, Interleaver, bcjr_decode, hard_decide
from .gram import build_transform, choose_rho, matched_filter, MatchedFilterStats
from .marginal import (DEFAULT_FLOOR, bit_extrinsics_from_symbols, extrinsic_from_posterior,
                       list_to_posteriors, symbol_priors_from_bits)
from .model import (Constellation, draw_spreading, ebn0_to_noise, encode_and_modulate,
                    rng_stream, simulate_channel)
from .oracle import OracleCap, brute_force_symbol_app
from .search import SearchParams, t_search

LOGGER = logging.getLogger(__name__)

DETECTORS = ("talg", "malg", "pic", "lmmse", "exhaustive")
FORMATS = ("csv", "json")
CSV_COLUMNS = ("detector", "K", "L", "ebn0_db", "iteration", "frames", "bits",
               "bit_errors", "ber", "avg_node_expansions")


def _is_int(value):
    return isinstance(value, numbers.Integral) and not isinstance(value, bool)


def scheduled_pmin(k):
    '''
    Lower survivor bound of the benchmark schedule for ``k`` users.
    '''
    if k <= 16:
        return 32
    if k <= 18:
        return 64
    return 128


@dataclass
class SimConfig:
    '''
    Every parameter of a simulation run. ``pmin_schedule`` replaces
    ``p_min`` by the benchmark schedule for the configured user count.
    '''
    users: int = 16
    gain: int = 8
    ebn0_db: float = 5.0
    iterations: int = 5
    detector: str = "talg"
    t_threshold: float = 16.0
    p_max: int = 512
    p_min: int = 32
    p_list: int = None
    pmin_schedule: bool = False
    frames: int = 10
    info_bits: int = 500
    seed: int = 0
    floor: float = DEFAULT_FLOOR
    spreading: str = "frame"
    constellation: str = "bpsk"
    power: float = 1.0
    generators: tuple = ("05", "07")
    terminated: bool = False
    max_log: bool = False
    rho_margin: float = 1.0
    oracle_cap: int = 1 << 20
    output: str = None
    format: str = "csv"

    def validate(self):
        positive = ["users", "gain", "iterations", "frames", "info_bits", "p_max", "p_min", "oracle_cap"]
        if self.p_list is not None:
            positive.append("p_list")
        for name in positive:
            value = getattr(self, name)
            if not _is_int(value) or value < 1:
                raise ConfigInvalid("%s must be a positive integer, got %r" % (name, value))
        if not _is_int(self.seed) or self.seed < 0:
            raise ConfigInvalid("seed must be a non-negative integer, got %r" % (self.seed,))
        for name in ("ebn0_db", "t_threshold", "floor", "rho_margin", "power"):
            value = getattr(self, name)
            if not isinstance(value, numbers.Real) or isinstance(value, bool):
                raise ConfigInvalid("%s must be a number, got %r" % (name, value))
        for name in ("detector", "spreading", "format", "constellation"):
            if not isinstance(getattr(self, name), str):
                raise ConfigInvalid("%s must be a string, got %r" % (name, getattr(self, name)))
        for name in ("pmin_schedule", "terminated", "max_log"):
            if not isinstance(getattr(self, name), bool):
                raise ConfigInvalid("%s must be true or false, got %r" % (name, getattr(self, name)))
        if self.output is not None and not isinstance(self.output, str):
            raise ConfigInvalid("output must be a path, got %r" % (self.output,))
        if self.detector not in DETECTORS:
            raise ConfigInvalid("Unknown detector: " + str(self.detector))
        if self.spreading not in ("frame", "symbol"):
            raise ConfigInvalid("Unknown spreading cadence: " + str(self.spreading))
        if self.format not in FORMATS:
            raise ConfigInvalid("Unknown report format: " + str(self.format))
        if not 0 < self.floor < 0.5:
            raise ConfigInvalid("Floor must be in (0, 0.5), got %r" % self.floor)
        if not self.rho_margin > 0:
            raise ConfigInvalid("rho margin must be positive, got %r" % self.rho_margin)
        if not np.isfinite(self.ebn0_db):
            raise ConfigInvalid("Eb/N0 must be finite, got %r" % self.ebn0_db)
        try:
            self.search_params()
            constellation = self.make_constellation()
            code = self.make_code()
            OracleCap(self.oracle_cap)
        except MudsimError as ex:
            raise ConfigInvalid(str(ex))
        coded = code.coded_length(self.info_bits, self.terminated)
        if coded % constellation.bits_per_symbol:
            raise ConfigInvalid("Coded frame of %d bits does not fill %s symbols"
                                % (coded, constellation.name))
        if self.detector == "exhaustive" and constellation.q ** self.users > self.oracle_cap:
            raise ConfigInvalid("Exhaustive detection of %d users exceeds the enumeration cap %d"
                                % (self.users, self.oracle_cap))
        return self

    def effective_pmin(self):
        return scheduled_pmin(self.users) if self.pmin_schedule else self.p_min

    def search_params(self):
        if self.detector == "malg":
            return SearchParams.m_algorithm(self.p_max)
        return SearchParams(t_threshold=float(self.t_threshold), p_max=self.p_max,
                            p_min=self.effective_pmin(), p_list=self.p_list)

    def make_constellation(self):
        return Constellation.by_name(self.constellation, self.power)

    def make_code(self):
        return ConvCode(tuple(self.generators))

    def noise(self):
        constellation = self.make_constellation()
        return ebn0_to_noise(self.ebn0_db, self.make_code().rate, constellation.q, constellation.power)

    def to_dict(self):
        out = asdict(self)
        out["generators"] = list(self.generators)
        return out

    @classmethod
    def from_dict(cls, data, base=None):
        '''
        Build a config from ``data`` layered over ``base`` (defaults when
        omitted). Unknown keys are rejected.
        '''
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigInvalid("Unknown configuration keys: " + ", ".join(unknown))
        values = dict(data)
        if "generators" in values:
            gens = values["generators"]
            if not isinstance(gens, (list, tuple)):
                raise ConfigInvalid("generators must be a list of octal values, got %r" % (gens,))
            values["generators"] = tuple(gens)
        return replace(base or cls(), **values)


PRESETS = {
    "paper-fig2": dict(gain=8, constellation="bpsk", generators=("05", "07"), info_bits=500,
                       ebn0_db=5.0, iterations=20, t_threshold=16.0, p_max=512,
                       pmin_schedule=True),
}

EXTENDED = {"paper-fig2": dict(users=19, iterations=20, pmin_schedule=False, p_min=128)}


def preset_config(name, extended=False, **overrides):
    if name not in PRESETS:
        raise ConfigInvalid("Unknown preset: " + str(name))
    values = dict(PRESETS[name])
    if extended:
        values.update(EXTENDED[name])
    values.update(overrides)
    return SimConfig.from_dict(values)


def single_user_config(config):
    '''
    The same run with one user: the single-user bound every multiuser
    receiver is measured against.
    '''
    return replace(config, users=1, pmin_schedule=False,
                   p_min=min(config.effective_pmin(), config.p_max))


@dataclass
class FrameStreams:
    data: np.random.Generator
    spreading: np.random.Generator
    noise: np.random.Generator

    @classmethod
    def for_frame(cls, seed, index):
        return cls(*(rng_stream(seed, index, p) for p in ("data", "spreading", "noise")))


def make_interleavers(config):
    '''
    One random interleaver per user, drawn once per run.
    '''
    n = config.make_code().coded_length(config.info_bits, config.terminated)
    rng = rng_stream(config.seed, 0, "interleaver")
    return [Interleaver.random(n, rng) for _ in range(config.users)]


@dataclass
class FrameResult:
    bit_errors: list
    node_expansions: list
    bits: int
    channel_uses: int


class Receiver:
    '''
    Iterative receiver of one frame. Holds the per-frame detector state
    (transforms and matched-filter statistics) so iterations only redo the
    prior-dependent work.
    '''
    def __init__(self, config, observations, spreading, interleavers):
        self.config = config
        self.constellation = config.make_constellation()
        self.code = config.make_code()
        self.noise = config.noise()
        self.interleavers = interleavers
        self.params = config.search_params()
        self.cap = OracleCap(config.oracle_cap)
        self.real = self.constellation.is_real
        r = np.stack([o.r for o in observations])
        self.r = r.real if self.real else r
        self.spreading = spreading if isinstance(spreading, list) else [spreading] * len(self.r)
        self.transforms = None
        self.stats = None
        if config.detector in ("talg", "malg"):
            rho = choose_rho(self.constellation, config.users, config.rho_margin)
            if isinstance(spreading, list):
                self.transforms = [build_transform(s, rho) for s in spreading]
                self.stats = [matched_filter(r, s) for r, s in zip(self.r, spreading)]
            else:
                # one factorization per frame
                self.transforms = [build_transform(spreading, rho)] * len(self.r)
                self.stats = [MatchedFilterStats(y) for y in matched_filter(self.r, spreading).y]

    def _detect_one(self, n, priors):
        config = self.config
        if config.detector in ("talg", "malg"):
            found = t_search(self.stats[n], self.transforms[n], priors, self.params,
                             self.noise.n0, self.constellation, config.floor)
            posterior = list_to_posteriors(found, self.noise.n0, self.constellation.q, config.floor)
            return extrinsic_from_posterior(posterior, priors, config.floor), found.expansions
        if config.detector == "exhaustive":
            posterior = brute_force_symbol_app(self.r[n], self.spreading[n], priors, self.noise.n0,
                                               self.constellation, self.cap)
            return extrinsic_from_posterior(posterior, priors, config.floor), 0
        if config.detector == "pic":
            return soft_pic_detect(self.r[n], self.spreading[n], priors, self.noise,
                                   self.constellation, config.floor), 0
        return lmmse_detect(self.r[n], self.spreading[n], priors, self.noise,
                            self.constellation, config.floor), 0

    def detect(self, prior_p1):
        '''
        Detector pass over every channel use. ``prior_p1`` is ``K x n``
        in channel (interleaved) order; returns extrinsics in the same
        order and the node expansions of the pass.
        '''
        m = self.constellation.bits_per_symbol
        ext_p1 = np.empty_like(prior_p1)
        expansions = 0
        for n in range(len(self.r)):
            bits = prior_p1[:, n * m:(n + 1) * m]
            priors = symbol_priors_from_bits(bits, self.constellation)
            extrinsic, count = self._detect_one(n, priors)
            ext_p1[:, n * m:(n + 1) * m] = bit_extrinsics_from_symbols(
                extrinsic, bits, self.constellation, self.config.floor)
            expansions += count
        return ext_p1, expansions

    def decode(self, ext_p1):
        '''
        Per-user BCJR. Returns the next detector priors in channel order and
        the information-bit posteriors.
        '''
        next_p1 = np.empty_like(ext_p1)
        posteriors = []
        for k, pi in enumerate(self.interleavers):
            coded = BitProbabilityStream.from_p1(pi.inverse(ext_p1[k]))
            extrinsic, info = bcjr_decode(coded, self.code, self.config.terminated,
                                          self.config.max_log, self.config.floor)
            next_p1[k] = pi.forward(extrinsic.p1)
            posteriors.append(info)
        return next_p1, posteriors


def run_frame(config, streams, interleavers=None):
    '''
    Transmit one frame and run the iterative receiver on it.
    '''
    if interleavers is None:
        interleavers = make_interleavers(config)
    constellation = config.make_constellation()
    code = config.make_code()
    info = streams.data.integers(0, 2, size=(config.users, config.info_bits))
    frame = encode_and_modulate(info, code, interleavers, constellation, config.terminated)
    if config.spreading == "frame":
        spreading = draw_spreading(config.users, config.gain, streams.spreading)
    else:
        spreading = [draw_spreading(config.users, config.gain, streams.spreading)
                     for _ in range(frame.channel_uses)]
    observations = simulate_channel(spreading, frame, config.noise(), streams.noise)

    receiver = Receiver(config, observations, spreading, interleavers)
    priors = np.full(frame.coded_bits.shape, 0.5)
    errors = []
    expansions = []
    for iteration in range(config.iterations):
        extrinsic, count = receiver.detect(priors)
        priors, posteriors = receiver.decode(extrinsic)
        decided = np.stack([hard_decide(p) for p in posteriors])
        errors.append(int(np.count_nonzero(decided != info)))
        expansions.append(int(count))
    return FrameResult(bit_errors=errors, node_expansions=expansions,
                       bits=int(info.size), channel_uses=frame.channel_uses)


@dataclass
class BerReport:
    '''
    Aggregated result of a run. ``bits`` is counted per iteration; every
    iteration decides the same information bits.
    '''
    detector: str
    users: int
    gain: int
    ebn0_db: float
    frames: int
    bits: int
    bit_errors: list
    node_expansions: list
    channel_uses: int
    config: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def ber(self):
        return [e / self.bits for e in self.bit_errors]

    @property
    def avg_node_expansions(self):
        return [x / self.channel_uses for x in self.node_expansions]

    def rows(self):
        return [dict(zip(CSV_COLUMNS, (self.detector, self.users, self.gain, self.ebn0_db, i + 1,
                                       self.frames, self.bits, e, b, x)))
                for i, (e, b, x) in enumerate(zip(self.bit_errors, self.ber, self.avg_node_expansions))]

    def to_dict(self):
        out = asdict(self)
        out["rows"] = self.rows()
        return out

    @classmethod
    def from_dict(cls, data):
        data = {k: v for k, v in data.items() if k != "rows"}
        return cls(**data)


class Simulation:
    '''
    Monte-Carlo driver. Frames are handed to ``workers`` threads through a
    queue and their results reduced in frame order, so the report does not
    depend on the worker count.
    '''
    def __init__(self, config, workers=1, verbose=False, progress=False):
        self.config = config.validate()
        if workers < 1:
            raise ConfigInvalid("Worker count must be at least 1, got %r" % workers)
        self.workers = workers
        self.verbose = verbose
        self.progress = progress
        self.lock = threading.Lock()

    def log_message(self, format, *args):
        LOGGER.log(logging.INFO if self.verbose else logging.DEBUG, format, *args)

    def log_error(self, format, *args):
        LOGGER.error(format, *args)

    def _work(self, tasks, results, failures, bar, interleavers):
        while True:
            try:
                index = tasks.get_nowait()
            except queue.Empty:
                return
            try:
                streams = FrameStreams.for_frame(self.config.seed, index)
                results[index] = run_frame(self.config, streams, interleavers)
            except Exception as ex:
                self.log_error("Frame %d failed: %s", index, ex)
                with self.lock:
                    failures.append((index, ex))
            finally:
                with self.lock:
                    bar.update(1)
                tasks.task_done()

    def run(self):
        config = self.config
        self.log_message("Simulating %s K=%d L=%d Eb/N0=%g dB over %d frames",
                         config.detector, config.users, config.gain, config.ebn0_db, config.frames)
        interleavers = make_interleavers(config)
        tasks = queue.Queue()
        for index in range(config.frames):
            tasks.put(index)
        results = [None] * config.frames
        failures = []
        with tqdm(total=config.frames, disable=not self.progress, unit="frame") as bar:
            threads = [threading.Thread(target=self._work, daemon=True,
                                        args=(tasks, results, failures, bar, interleavers))
                       for _ in range(min(self.workers, config.frames))]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        if failures:
            index, ex = min(failures, key=lambda f: f[0])
            raise ex

        iterations = config.iterations
        errors = [sum(r.bit_errors[i] for r in results) for i in range(iterations)]
        expansions = [sum(r.node_expansions[i] for r in results) for i in range(iterations)]
        uses = sum(r.channel_uses for r in results)
        report = BerReport(detector=config.detector, users=config.users, gain=config.gain,
                           ebn0_db=config.ebn0_db, frames=config.frames,
                           bits=sum(r.bits for r in results), bit_errors=errors,
                           node_expansions=expansions, channel_uses=uses,
                           config=config.to_dict(),
                           metadata={"seed": config.seed, "version": __version__})
        bound = uses * config.users * config.p_max * config.make_constellation().q
        if any(x > bound for x in expansions):
            self.log_error("Node expansions %s exceed the bound %d", expansions, bound)
        self.log_message("BER per iteration: %s", report.ber)
        return report


def run_simulation(config, workers=1, progress=False, verbose=False):
    return Simulation(config, workers, verbose=verbose, progress=progress).run()


def sweep(config, users=None, ebn0_db=None, workers=1, progress=False):
    '''
    Run ``config`` over a grid of user counts and Eb/N0 values, users
    varying slowest.
    '''
    reports = []
    for k in users or [config.users]:
        for snr in ebn0_db or [config.ebn0_db]:
            point = replace(config, users=k, ebn0_db=snr)
            reports.append(run_simulation(point, workers, progress))
    return reports


def _open(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def emit_report(report, format="csv", path=None):
    '''
    Write one report or a list of reports. CSV concatenates the rows of
    every report under one header; JSON writes an object or a list.
    '''
    if format not in FORMATS:
        raise ConfigInvalid("Unknown report format: " + str(format))
    reports = report if isinstance(report, list) else [report]
    stream, owned = _open(path)
    try:
        if format == "csv":
            writer = csv.DictWriter(stream, fieldnames=CSV_COLUMNS, lineterminator="\n")
            writer.writeheader()
            for r in reports:
                writer.writerows(r.rows())
        else:
            data = [r.to_dict() for r in reports] if isinstance(report, list) else report.to_dict()
            json.dump(data, stream, indent=2)
            stream.write("\n")
    finally:
        if owned:
            stream.close()


def load_report(path):
    '''
    Read a JSON report written by ``emit_report``.
    '''
    with open(path) as fp:
        data = json.load(fp)
    if isinstance(data, list):
        return [BerReport.from_dict(d) for d in data]
    return BerReport.from_dict(data)
