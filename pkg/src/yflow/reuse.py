"""Analytic reuse counts and the auxiliary-gain heuristics.

The gains table gives, per (channel block, kernel) tile and per additional
stash variable, the vector reads and scalar writes saved.  H, R carry the
lane factor x; E does not.  Simulated instruction deltas therefore match
these formulas exactly at x=1 for the H/R rows and at any x for the E row
(see tests).  All gains are per tile; whole-layer totals are the tile value
times ceil(ic/x)*oc.

Stride>1 input-anchored rows are reproduced verbatim from the table as
piecewise formulas keyed on which variable index is being added; asking for
a variable index outside a row's printed range is an error, not an
extrapolation.  Fractions are returned exactly.
"""

from dataclasses import dataclass
from fractions import Fraction

from .model import (ALLOWED_AUX, ConfigError, DataflowSpec, output_dims)


@dataclass(frozen=True)
class AuxGain:
    delta_reads: object   # int or Fraction, vector reads saved per added var
    delta_writes: object  # scalar writes saved per added var

    def __post_init__(self):
        if self.delta_reads < 0 or self.delta_writes < 0:
            raise ConfigError("gains must be non-negative")


def input_reuse_count(layer):
    """Inputs shared between two successive outputs in a row: (fw - s) * fh."""
    if layer.s > layer.fw:
        raise ConfigError("stride exceeds filter width; no input reuse defined")
    return (layer.fw - layer.s) * layer.fh


def _hre(layer, vmc):
    x = vmc.x
    oh, ow = output_dims(layer)
    return layer.ih * layer.iw * x, layer.fh * layer.fw * x, oh * ow


def aux_gain(anchor, aux_type, n_vars_allocated, layer, vmc):
    """Table row value for adding stash variable number n_vars_allocated.

    n_vars_allocated is 1-based: 1 means the delta from 0 to 1 stash vars.
    """
    if aux_type not in ALLOWED_AUX.get(anchor, ()):
        raise ConfigError("%s anchor does not permit %s auxiliaries" % (anchor, aux_type))
    n = n_vars_allocated
    if n < 1:
        raise ConfigError("n_vars_allocated must be >= 1")
    H, R, E = _hre(layer, vmc)
    s, fw, fh, ih = layer.s, layer.fw, layer.fh, layer.ih

    if anchor == "OS":
        # single "Both" row, stride range [1, fw-1]
        if not 1 <= s <= fw - 1:
            raise ConfigError("OS row covers strides 1..fw-1")
        if not 1 <= n <= R:
            raise ConfigError("OS row covers variables [1, R]")
        return AuxGain(E, 0)

    if anchor == "WS":
        if aux_type == "input":
            if not 1 <= n <= H:
                raise ConfigError("WS/input row covers variables [1, H]")
            return AuxGain(R, 0)
        if not 1 <= n <= E:
            raise ConfigError("WS/output row covers variables [1, E]")
        return AuxGain(R, R)

    # IS anchor
    if aux_type == "weight":
        if s == 1:
            if not 1 <= n <= R:
                raise ConfigError("IS/weight s=1 row covers variables [1, R]")
            return AuxGain(H, 0)
        if 2 <= s <= fw - 1:
            if 1 <= n <= fw:
                return AuxGain(Fraction(H, s), 0)
            if fw + 1 <= n <= 2 * fw:
                return AuxGain(Fraction(H, (fw - s) * s), 0)
            raise ConfigError("IS/weight stride>1 rows cover variables [1, 2*fw]")
        raise ConfigError("IS/weight rows cover strides 1..fw-1")
    # output auxiliary
    if s == 1:
        if not 1 <= n <= R:
            raise ConfigError("IS/output s=1 row covers variables [1, R]")
        return AuxGain(H, H)
    if 2 <= s <= fw - 1:
        if n == 1:
            v = H + Fraction(H, fw)
            return AuxGain(v, v)
        if n == 2:
            v = Fraction(ih, fw - s) * (H + Fraction(H, fw)) + Fraction(ih, s) * (fw - s - 1)
            return AuxGain(v, v)
        if 3 <= n <= 3 + (fw - s):
            v = Fraction((fh - s) * (fw - s) * H, R)
            return AuxGain(v, v)
        raise ConfigError("IS/output stride>1 rows cover variables [1, 3+fw-s]")
    raise ConfigError("IS/output rows cover strides 1..fw-1")


def rank_anchors(layer, vmc):
    """Expected latency ordering of the basic dataflows (advisory only)."""
    if layer.s == 1:
        return ["OS", "IS", "WS"]
    return ["OS", "WS", "IS"]


def recommend(vmc, layer):
    """Output-anchored spec with the spare budget split weight-first.

    Budget = num_var_available - 3.  Weights take min(budget, fh*fw)
    (one var per filter position); the remainder goes to inputs, capped
    at one input-row band of the layer (fh*iw vector positions).
    """
    budget = vmc.num_var_available - 3
    wgt = min(budget, layer.fh * layer.fw)
    inp = min(budget - wgt, layer.fh * layer.iw)
    spec = DataflowSpec("OS", aux_input_vars=inp, aux_weight_vars=wgt,
                        priority=("weight", "input"))
    spec.validate(vmc)
    return spec
