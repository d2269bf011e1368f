"""Domain types and layout index math for blocked convolution tensors.

Notation used throughout the package:
  ih, iw   input height/width        fh, fw   filter height/width
  ic, oc   input/output channels     oh, ow   output height/width
  s, pad   stride, symmetric zero padding
  x        lanes per vector variable (channel block width)
  H = ih*iw*x   R = fh*fw*x   E = oh*ow

Inputs are stored NCHW[xc]: channels grouped into blocks of x, each block
laid out as x*ih*iw contiguous elements with the x channels interleaved
per spatial position.  Weights are CKRS[xc] (input-channel blocks outer,
then kernel, filter row, filter col, x lanes inner).  Outputs are plain
scalars in KHW order so they can be written back sequentially.
"""

from dataclasses import dataclass, field


class ConfigError(ValueError):
    """Raised for invalid layer/machine/dataflow configurations."""


ANCHORS = ("IS", "WS", "OS")

# auxiliary types each anchor may stash (the anchor itself cannot be one)
ALLOWED_AUX = {
    "IS": ("weight", "output"),
    "WS": ("input", "output"),
    "OS": ("input", "weight"),
}


@dataclass(frozen=True)
class LayerConfig:
    ih: int
    iw: int
    ic: int
    oc: int
    fh: int
    fw: int
    s: int = 1
    pad: int = 0

    def __post_init__(self):
        for name in ("ih", "iw", "ic", "oc", "fh", "fw"):
            if getattr(self, name) < 1:
                raise ConfigError("%s must be >= 1" % name)
        if self.s < 1:
            raise ConfigError("stride must be >= 1")
        if self.pad < 0:
            raise ConfigError("padding must be >= 0")
        if self.fh > self.ih + 2 * self.pad or self.fw > self.iw + 2 * self.pad:
            raise ConfigError("filter larger than padded input")


@dataclass(frozen=True)
class VectorMachineConfig:
    vec_reg_bits: int
    vec_var_bits: int
    num_vec_regs: int
    elem_bits: int

    def __post_init__(self):
        if self.vec_reg_bits < 1 or self.num_vec_regs < 1 or self.elem_bits < 1:
            raise ConfigError("machine sizes must be positive")
        if self.vec_var_bits % self.vec_reg_bits != 0 or self.vec_var_bits < self.vec_reg_bits:
            raise ConfigError("vec_var_bits must be a positive multiple of vec_reg_bits")
        if self.vec_var_bits % self.elem_bits != 0:
            raise ConfigError("vec_var_bits must be a multiple of elem_bits")
        if self.num_var_available < 3:
            raise ConfigError("need at least 3 vector variables (got %d)" % self.num_var_available)

    @property
    def x(self):
        # lanes per vector variable
        return self.vec_var_bits // self.elem_bits

    @property
    def regs_per_var(self):
        return self.vec_var_bits // self.vec_reg_bits

    @property
    def num_var_available(self):
        return self.num_vec_regs // self.regs_per_var


@dataclass(frozen=True)
class DataflowSpec:
    anchor: str
    aux_input_vars: int = 0
    aux_weight_vars: int = 0
    aux_output_vars: int = 0
    priority: tuple = ("weight", "input", "output")

    def __post_init__(self):
        if self.anchor not in ANCHORS:
            raise ConfigError("unknown anchor %r" % (self.anchor,))
        for n in (self.aux_input_vars, self.aux_weight_vars, self.aux_output_vars):
            if n < 0:
                raise ConfigError("stash counts must be >= 0")
        counts = {
            "input": self.aux_input_vars,
            "weight": self.aux_weight_vars,
            "output": self.aux_output_vars,
        }
        for aux, n in counts.items():
            if n > 0 and aux not in ALLOWED_AUX[self.anchor]:
                raise ConfigError(
                    "%s anchor does not permit %s auxiliaries" % (self.anchor, aux))

    @property
    def total_aux(self):
        return self.aux_input_vars + self.aux_weight_vars + self.aux_output_vars

    def validate(self, vmc):
        """Check the register budget: 3 anchoring vars + stashes must fit."""
        need = 3 + self.total_aux
        if need > vmc.num_var_available:
            raise ConfigError(
                "register budget exceeded: spec needs %d vector variables, "
                "machine provides %d" % (need, vmc.num_var_available))


def output_dims(layer):
    """(oh, ow) for a layer; rejects degenerate shapes."""
    oh = (layer.ih + 2 * layer.pad - layer.fh) // layer.s + 1
    ow = (layer.iw + 2 * layer.pad - layer.fw) // layer.s + 1
    if oh < 1 or ow < 1:
        raise ConfigError("layer produces empty output (oh=%d, ow=%d)" % (oh, ow))
    return oh, ow


def channel_blocks(channels, x):
    return -(-channels // x)  # ceil


def nchw_xc_index(layer, vmc, c, h, w):
    """Flat element offset of input element (c, h, w) in NCHW[xc]."""
    if not (0 <= c < layer.ic and 0 <= h < layer.ih and 0 <= w < layer.iw):
        raise ConfigError("nchw_xc_index coordinate out of range")
    x = vmc.x
    return ((c // x * layer.ih + h) * layer.iw + w) * x + c % x


def ckrs_xc_index(layer, vmc, c, k, r, sc):
    """Flat element offset of weight element (c, k, r, sc) in CKRS[xc]."""
    if not (0 <= c < layer.ic and 0 <= k < layer.oc
            and 0 <= r < layer.fh and 0 <= sc < layer.fw):
        raise ConfigError("ckrs_xc_index coordinate out of range")
    x = vmc.x
    return (((c // x * layer.oc + k) * layer.fh + r) * layer.fw + sc) * x + c % x


def khw_index(layer, k, h, w):
    """Flat offset of output element (k, h, w) in KHW scalar order."""
    oh, ow = output_dims(layer)
    if not (0 <= k < layer.oc and 0 <= h < oh and 0 <= w < ow):
        raise ConfigError("khw_index coordinate out of range")
    return (k * oh + h) * ow + w


@dataclass
class PackedTensor:
    kind: str      # input | weight | output
    layout: str    # NCHW | CKRS | NCHW_xc | CKRS_xc | KHW_scalar
    dims: tuple
    data: list
    x: int = 1

    def __post_init__(self):
        n = 1
        for d in self.dims:
            n *= d
        if self.layout in ("NCHW_xc", "CKRS_xc"):
            n *= self.x
        if len(self.data) != n:
            raise ConfigError(
                "data length %d does not match dims %r (layout %s)"
                % (len(self.data), self.dims, self.layout))


def pack(tensor, layer, vmc):
    """NCHW (ic, ih, iw) -> NCHW[xc] (cb, ih, iw) with x lanes, zero tail."""
    if tensor.layout != "NCHW" or tensor.dims != (layer.ic, layer.ih, layer.iw):
        raise ConfigError("pack expects an NCHW tensor matching the layer")
    x = vmc.x
    cb = channel_blocks(layer.ic, x)
    out = [0] * (cb * layer.ih * layer.iw * x)
    for c in range(layer.ic):
        for h in range(layer.ih):
            for w in range(layer.iw):
                src = (c * layer.ih + h) * layer.iw + w
                out[nchw_xc_index(layer, vmc, c, h, w)] = tensor.data[src]
    return PackedTensor("input", "NCHW_xc", (cb, layer.ih, layer.iw), out, x)


def unpack(tensor, layer, vmc):
    """Inverse of pack; drops the zero tail lanes."""
    x = vmc.x
    cb = channel_blocks(layer.ic, x)
    if tensor.layout != "NCHW_xc" or tensor.dims != (cb, layer.ih, layer.iw) or tensor.x != x:
        raise ConfigError("unpack expects an NCHW_xc tensor matching layer and machine")
    out = [0] * (layer.ic * layer.ih * layer.iw)
    for c in range(layer.ic):
        for h in range(layer.ih):
            for w in range(layer.iw):
                dst = (c * layer.ih + h) * layer.iw + w
                out[dst] = tensor.data[nchw_xc_index(layer, vmc, c, h, w)]
    return PackedTensor("input", "NCHW", (layer.ic, layer.ih, layer.iw), out)


def pack_weights(tensor, layer, vmc):
    """CKRS (ic, oc, fh, fw) -> CKRS[xc] (cb, oc, fh, fw) with x lanes."""
    if tensor.layout != "CKRS" or tensor.dims != (layer.ic, layer.oc, layer.fh, layer.fw):
        raise ConfigError("pack_weights expects a CKRS tensor matching the layer")
    x = vmc.x
    cb = channel_blocks(layer.ic, x)
    out = [0] * (cb * layer.oc * layer.fh * layer.fw * x)
    for c in range(layer.ic):
        for k in range(layer.oc):
            for r in range(layer.fh):
                for sc in range(layer.fw):
                    src = ((c * layer.oc + k) * layer.fh + r) * layer.fw + sc
                    out[ckrs_xc_index(layer, vmc, c, k, r, sc)] = tensor.data[src]
    return PackedTensor("weight", "CKRS_xc", (cb, layer.oc, layer.fh, layer.fw), out, x)
