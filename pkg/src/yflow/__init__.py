"""SIMD convolution dataflow exploration toolkit.

Generate schedule IR for basic and extended (anchored + auxiliary
stationarity) convolution dataflows, verify it on an abstract vector
machine against a scalar oracle, validate reuse heuristics by
instruction counting, emit C kernels, and optimize layer layout and
blocking choices end to end.
"""

from .model import (ConfigError, DataflowSpec, LayerConfig, PackedTensor,
                    VectorMachineConfig, output_dims)
from .reuse import AuxGain, aux_gain, input_reuse_count, rank_anchors, recommend
from .schedule import (Instr, ScheduleIR, alloc_rotation, assoc_idx, gen,
                       gen_basic, gen_extended_is, gen_extended_os,
                       gen_extended_ws, secondary_unroll_factor)
from .simvm import (BACKEND, CostReport, diff_reports, execute, count_report,
                    scalar_oracle)

__version__ = "0.1.0"
