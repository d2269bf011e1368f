"""Abstract vector machine: run ScheduleIR on packed tensors and count.

The VM accumulates in plain integers (int64 in the compiled backend;
value magnitudes here are bounded by ic*fh*fw*2^14, nowhere near
overflow).  Real SIMD width limits are an emitter concern.

Instruction counts are reported per tile with a steady/priming split:
`vector_loads` excludes stash-fill loads (`prime_loads`), and
`scalar_reads`/`scalar_writes` exclude the one-time write-back of
stashed outputs (`drain_sacc`).  `sacc` and the arithmetic categories
are physical totals.  Whole-layer counts are tile counts times
ceil(ic/x)*oc exactly.
"""

from dataclasses import dataclass, fields

import numpy as np

from .model import (ConfigError, PackedTensor, channel_blocks, output_dims)
from .schedule import ScheduleError, validate_ir

# compiled kernel if the extension was built, else the pure-Python twin
try:
    from . import _vmcore as _core
except ImportError:  # pragma: no cover - depends on build environment
    from . import _vmcore_py as _core

BACKEND = "compiled" if _core.COMPILED else "python"

_OPNUM = {"VLOAD": 0, "VZERO": 1, "VMUL": 2, "VADD": 3, "VXOR": 4,
          "VPOPCNT": 5, "VREDSUM": 6, "VMOV": 7, "SACC": 8}

_COUNT_FIELDS = ("vector_loads", "prime_loads", "elided_loads",
                 "scalar_reads", "scalar_writes", "vzero", "vmul", "vadd",
                 "vxor", "vpopcnt", "vredsum", "vmov", "sacc", "drain_sacc")


class ExecError(ConfigError):
    def __init__(self, msg, position=-1):
        super().__init__(msg)
        self.position = position


@dataclass
class CostReport:
    vector_loads: int = 0
    prime_loads: int = 0
    elided_loads: int = 0
    scalar_reads: int = 0
    scalar_writes: int = 0
    vzero: int = 0
    vmul: int = 0
    vadd: int = 0
    vxor: int = 0
    vpopcnt: int = 0
    vredsum: int = 0
    vmov: int = 0
    sacc: int = 0
    drain_sacc: int = 0
    peak_live_vars: int = 0
    tiles: int = 1

    @property
    def total_loads(self):
        return self.vector_loads + self.prime_loads

    def whole_layer(self):
        """Scale every count by the tile repetition (peak is unchanged)."""
        r = CostReport(peak_live_vars=self.peak_live_vars, tiles=1)
        for f in _COUNT_FIELDS:
            setattr(r, f, getattr(self, f) * self.tiles)
        return r

    def to_csv(self):
        lines = ["category,count"]
        for f in _COUNT_FIELDS + ("peak_live_vars", "tiles"):
            lines.append("%s,%d" % (f, getattr(self, f)))
        return "\n".join(lines) + "\n"


def count_report(ir):
    """Per-tile instruction counts, computed statically from the IR."""
    rep = CostReport(elided_loads=ir.elided_loads,
                     tiles=ir.cb_count * ir.oc)
    for ins in ir.instrs:
        op = ins.op
        if op == "VLOAD":
            if ins.tag == "prime":
                rep.prime_loads += 1
            else:
                rep.vector_loads += 1
        elif op == "SACC":
            rep.sacc += 1
            if ins.tag == "drain":
                rep.drain_sacc += 1
            else:
                rep.scalar_reads += 1
                rep.scalar_writes += 1
        else:
            attr = op.lower()
            setattr(rep, attr, getattr(rep, attr) + 1)
    rep.peak_live_vars = validate_ir(ir)
    return rep


def diff_reports(a, b):
    """Per-category count deltas a - b (same layer/machine assumed)."""
    return {f: getattr(a, f) - getattr(b, f)
            for f in _COUNT_FIELDS + ("peak_live_vars",)}


def _encode(ir):
    code = np.zeros((len(ir.instrs), 6), dtype=np.int64)
    for i, ins in enumerate(ir.instrs):
        code[i] = (_OPNUM[ins.op], ins.dst, ins.src1, ins.src2,
                   0 if ins.kind == "input" else 1, ins.index)
    return code


def _static_bounds_check(ir):
    layer = ir.layer
    oh, ow = output_dims(layer)
    for pos, ins in enumerate(ir.instrs):
        if ins.op == "VLOAD":
            lim = layer.ih * layer.iw if ins.kind == "input" else layer.fh * layer.fw
            if not 0 <= ins.index < lim:
                raise ExecError("instruction %d: %s index %d out of bounds"
                                % (pos, ins.kind, ins.index), pos)
        elif ins.op == "SACC":
            if not 0 <= ins.index < oh * ow:
                raise ExecError("instruction %d: output offset %d out of bounds"
                                % (pos, ins.index), pos)


def execute(ir, input_t, weights_t, mode=None, backend=None):
    """Run the IR over all tiles; returns (KHW output tensor, CostReport)."""
    layer, vmc = ir.layer, ir.vmc
    mode = mode or ir.mode
    x = vmc.x
    cb = channel_blocks(layer.ic, x)
    oh, ow = output_dims(layer)
    if input_t.layout != "NCHW_xc" or input_t.dims != (cb, layer.ih, layer.iw) \
            or input_t.x != x:
        raise ExecError("input tensor does not match IR layer/machine")
    if weights_t.layout != "CKRS_xc" \
            or weights_t.dims != (cb, layer.oc, layer.fh, layer.fw) \
            or weights_t.x != x:
        raise ExecError("weight tensor does not match IR layer/machine")
    if mode == "binary":
        if vmc.elem_bits != 1:
            raise ExecError("binary mode requires elem_bits=1")
        if layer.ic % x:
            # zero tail lanes would decode as +1 in the XNOR convention
            raise ExecError("binary mode requires ic divisible by x")
    try:
        rep = count_report(ir)      # also validates def-before-use and ids
    except ScheduleError as e:
        raise ExecError(str(e))
    _static_bounds_check(ir)
    core = _core
    if backend == "python":
        from . import _vmcore_py as core
    elif backend == "compiled" and not _core.COMPILED:
        raise ExecError("compiled backend not available")
    code = _encode(ir)
    out = np.zeros(layer.oc * oh * ow, dtype=np.int64)
    status, tcb, tk, pos = core.execute_encoded(
        code,
        np.asarray(input_t.data, dtype=np.int64),
        np.asarray(weights_t.data, dtype=np.int64),
        out, vmc.num_var_available,
        x, cb, layer.oc, layer.ih * layer.iw, layer.fh * layer.fw, oh * ow,
        1 if mode == "binary" else 0)
    if status:
        reason = "unwritten variable read" if status == 1 else "memory index out of bounds"
        raise ExecError("execution aborted at tile (cb=%d, k=%d) instruction %d: %s"
                        % (tcb, tk, pos, reason), pos)
    out_t = PackedTensor("output", "KHW_scalar", (layer.oc, oh, ow),
                         [int(v) for v in out])
    return out_t, rep


def scalar_oracle(layer, input_t, weights_t, mode="int8"):
    """Brute-force 6-loop convolution over unblocked tensors.

    input: NCHW (ic, ih, iw); weights: CKRS (ic, oc, fh, fw).
    Binary mode: elements are bits, bit 0 encodes +1.
    """
    if input_t.layout != "NCHW" or input_t.dims != (layer.ic, layer.ih, layer.iw):
        raise ConfigError("oracle expects an NCHW input matching the layer")
    if weights_t.layout != "CKRS" \
            or weights_t.dims != (layer.ic, layer.oc, layer.fh, layer.fw):
        raise ConfigError("oracle expects a CKRS weight tensor matching the layer")
    oh, ow = output_dims(layer)
    out = [0] * (layer.oc * oh * ow)
    for k in range(layer.oc):
        for hp in range(oh):
            for wp in range(ow):
                acc = 0
                for c in range(layer.ic):
                    for r in range(layer.fh):
                        for sc in range(layer.fw):
                            hh = hp * layer.s + r - layer.pad
                            ww = wp * layer.s + sc - layer.pad
                            if not (0 <= hh < layer.ih and 0 <= ww < layer.iw):
                                continue
                            a = input_t.data[(c * layer.ih + hh) * layer.iw + ww]
                            b = weights_t.data[((c * layer.oc + k) * layer.fh + r)
                                               * layer.fw + sc]
                            if mode == "binary":
                                acc += 1 if a == b else -1
                            else:
                                acc += a * b
                out[(k * oh + hp) * ow + wp] = acc
    return PackedTensor("output", "KHW_scalar", (layer.oc, oh, ow), out)
