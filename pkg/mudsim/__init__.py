'''
mudsim is a library and Monte-Carlo simulator for iterative multiuser
detection on overloaded synchronous CDMA channels, where there are more
users than chips per symbol.

The detector restores a full-rank Gram matrix by replacing its diagonal,
factors it into a triangular matrix and searches the resulting tree with
the T-algorithm. The surviving list is marginalised into symbol extrinsics
that are exchanged with per-user BCJR decoders through interleavers. Soft
PIC and LMMSE detectors and brute-force oracles are included for
comparison and testing.

Example
-------
```
import numpy as np
import mudsim

bpsk = mudsim.Constellation.bpsk()
s = mudsim.draw_spreading(12, 8, np.random.default_rng(1))
transform = mudsim.build_transform(s, mudsim.choose_rho(bpsk, 12))

config = mudsim.preset_config("paper-fig2", users=16, iterations=5, frames=2)
report = mudsim.run_simulation(config, workers=2)
print(report.ber)
```
'''

__version__ = "0.1.0"

from .errors import (MudsimError, InvalidParameter, LengthMismatch, DimensionMismatch,
                     DegenerateConstellation, ConfigInvalid, CapExceeded, FactorizationFailure)
from .model import (Constellation, NoiseSpec, SpreadingMatrix, SymbolFrame, Observation,
                    rng_stream, ebn0_to_noise, draw_spreading, encode_and_modulate,
                    simulate_channel)
from .gram import GramTransform, MatchedFilterStats, choose_rho, build_transform, matched_filter
from .marginal import (ProbabilityMatrix, list_to_posteriors, extrinsic_from_posterior,
                       symbol_priors_from_bits, bit_extrinsics_from_symbols)
from .fec import ConvCode, BitProbabilityStream, Interleaver, permute, bcjr_decode, hard_decide
from .search import SearchParams, PathNode, DetectorList, path_extension_weight, t_search, exhaustive_list
from .oracle import OracleCap, brute_force_symbol_app, brute_force_map
from .baselines import SoftStatistics, soft_statistics, soft_pic_detect, lmmse_detect
from .harness import (SimConfig, BerReport, FrameResult, FrameStreams, Simulation, preset_config,
                      single_user_config, run_frame, run_simulation, sweep, emit_report, load_report)
