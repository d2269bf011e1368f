"""Schedule IR generation for basic and extended convolution dataflows.

An IR materializes the instruction stream for ONE (input channel block,
kernel) tile; the cb/k outer loops are kept as a repetition descriptor
(cb_count, oc) since every tile is identical.  All memory indices are
vector-granular and tile-relative: input index h*iw+w, weight index
r*fw+sc, SACC offset h'*ow+w' (the VM adds k*oh*ow).

Vector variable convention:
  v0  accumulator (OS) / multiply temp (IS, WS)
  v1  input transient
  v2  weight transient (OS, IS) / anchored weight (WS)
  v3+ stash variables (inputs first, then weights, then outputs)

Instruction tags: "prime" marks loads that fill a stash slot, "drain"
marks the final write-back of a stashed output.  Count-delta analyses
work on the steady-state (untagged) instructions; physical totals
include everything.
"""

import json
import math
import re
from collections import deque
from dataclasses import dataclass, field, replace

from .model import (ConfigError, LayerConfig, VectorMachineConfig,
                    output_dims)

OPCODES = ("VLOAD", "VZERO", "VMUL", "VADD", "VXOR", "VPOPCNT",
           "VREDSUM", "VMOV", "SACC")

# if the secondary-unroll lcm exceeds this, fall back to VMOV shifting
UNROLL_CAP = 64


class ScheduleError(ConfigError):
    pass


@dataclass
class Instr:
    op: str
    dst: int = -1
    src1: int = -1
    src2: int = -1
    kind: str = ""    # VLOAD: "input" or "weight"
    index: int = -1   # VLOAD: vector index; SACC: scalar output offset
    tag: str = ""     # "", "prime", "drain"

    def render(self):
        if self.op == "VLOAD":
            s = "VLOAD v%d, %s[%d]" % (self.dst, self.kind, self.index)
        elif self.op == "VZERO":
            s = "VZERO v%d" % self.dst
        elif self.op in ("VMUL", "VADD", "VXOR"):
            s = "%s v%d, v%d, v%d" % (self.op, self.dst, self.src1, self.src2)
        elif self.op == "VPOPCNT":
            s = "VPOPCNT v%d, v%d" % (self.dst, self.src1)
        elif self.op == "VREDSUM":
            s = "VREDSUM v%d" % self.src1
        elif self.op == "VMOV":
            s = "VMOV v%d, v%d" % (self.dst, self.src1)
        elif self.op == "SACC":
            s = "SACC out[%d]" % self.index
        else:
            raise ScheduleError("unknown opcode %r" % self.op)
        if self.tag:
            s += " ; #%s" % self.tag
        return s


@dataclass
class ScheduleIR:
    instrs: list
    layer: LayerConfig
    vmc: VectorMachineConfig
    anchor: str
    num_in_stash: int = 0
    num_wgt_stash: int = 0
    num_out_stash: int = 0
    mode: str = "int8"
    unroll: int = 1
    vmov_fallback: bool = False
    elided_loads: int = 0   # padded-coordinate loads skipped, per tile

    @property
    def cb_count(self):
        return -(-self.layer.ic // self.vmc.x)

    @property
    def oc(self):
        return self.layer.oc

    def dump(self):
        meta = {
            "layer": vars(self.layer).copy() if hasattr(self.layer, "__dict__")
                     else {f: getattr(self.layer, f) for f in
                           ("ih", "iw", "ic", "oc", "fh", "fw", "s", "pad")},
            "vmc": {f: getattr(self.vmc, f) for f in
                    ("vec_reg_bits", "vec_var_bits", "num_vec_regs", "elem_bits")},
            "anchor": self.anchor,
            "num_in_stash": self.num_in_stash,
            "num_wgt_stash": self.num_wgt_stash,
            "num_out_stash": self.num_out_stash,
            "mode": self.mode,
            "unroll": self.unroll,
            "vmov_fallback": self.vmov_fallback,
            "elided_loads": self.elided_loads,
        }
        lines = ["# yflow-ir v1", "# meta " + json.dumps(meta, sort_keys=True)]
        lines.extend(i.render() for i in self.instrs)
        return "\n".join(lines) + "\n"


_LOAD_RE = re.compile(r"VLOAD v(\d+), (input|weight)\[(\d+)\]")
_SACC_RE = re.compile(r"SACC out\[(\d+)\]")
_TRI_RE = re.compile(r"(VMUL|VADD|VXOR) v(\d+), v(\d+), v(\d+)")
_POP_RE = re.compile(r"VPOPCNT v(\d+), v(\d+)")
_MOV_RE = re.compile(r"VMOV v(\d+), v(\d+)")
_UNI_RE = re.compile(r"(VZERO|VREDSUM) v(\d+)")


def parse_ir(text):
    """Inverse of ScheduleIR.dump (used by the CLI to re-run saved IR)."""
    meta = None
    instrs = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("# meta "):
            meta = json.loads(line[len("# meta "):])
            continue
        if line.startswith("#"):
            continue
        tag = ""
        if " ; #" in line:
            line, tag = line.split(" ; #", 1)
            line = line.rstrip()
        m = _LOAD_RE.fullmatch(line)
        if m:
            instrs.append(Instr("VLOAD", dst=int(m.group(1)), kind=m.group(2),
                                index=int(m.group(3)), tag=tag))
            continue
        m = _SACC_RE.fullmatch(line)
        if m:
            instrs.append(Instr("SACC", index=int(m.group(1)), tag=tag))
            continue
        m = _TRI_RE.fullmatch(line)
        if m:
            instrs.append(Instr(m.group(1), dst=int(m.group(2)),
                                src1=int(m.group(3)), src2=int(m.group(4)), tag=tag))
            continue
        m = _POP_RE.fullmatch(line)
        if m:
            instrs.append(Instr("VPOPCNT", dst=int(m.group(1)), src1=int(m.group(2)), tag=tag))
            continue
        m = _MOV_RE.fullmatch(line)
        if m:
            instrs.append(Instr("VMOV", dst=int(m.group(1)), src1=int(m.group(2)), tag=tag))
            continue
        m = _UNI_RE.fullmatch(line)
        if m:
            op, v = m.group(1), int(m.group(2))
            instrs.append(Instr(op, dst=v, tag=tag) if op == "VZERO"
                          else Instr(op, src1=v, tag=tag))
            continue
        raise ScheduleError("unparsable IR line: %r" % raw)
    if meta is None:
        raise ScheduleError("IR text has no meta line")
    layer = LayerConfig(**meta["layer"])
    vmc = VectorMachineConfig(**meta["vmc"])
    return ScheduleIR(instrs, layer, vmc, meta["anchor"],
                      meta["num_in_stash"], meta["num_wgt_stash"],
                      meta["num_out_stash"], meta["mode"], meta["unroll"],
                      meta["vmov_fallback"], meta["elided_loads"])


def validate_ir(ir):
    """Check variable-id bounds and def-before-use; return peak live vars."""
    navail = ir.vmc.num_var_available
    written = set()
    for pos, ins in enumerate(ir.instrs):
        for v in (ins.dst, ins.src1, ins.src2):
            if v >= navail:
                raise ScheduleError(
                    "instruction %d uses v%d beyond the %d available variables"
                    % (pos, v, navail))
        if ins.op in ("VMUL", "VADD", "VXOR"):
            if ins.src1 not in written or ins.src2 not in written:
                raise ScheduleError("instruction %d reads unwritten variable" % pos)
            written.add(ins.dst)
        elif ins.op in ("VPOPCNT", "VMOV"):
            if ins.src1 not in written:
                raise ScheduleError("instruction %d reads unwritten variable" % pos)
            written.add(ins.dst)
        elif ins.op == "VREDSUM":
            if ins.src1 not in written:
                raise ScheduleError("instruction %d reads unwritten variable" % pos)
        elif ins.op in ("VLOAD", "VZERO"):
            written.add(ins.dst)
    return len(written)


def _budget(vmc, total_stash):
    if 3 + total_stash > vmc.num_var_available:
        raise ScheduleError(
            "register budget exceeded: need %d vector variables, have %d"
            % (3 + total_stash, vmc.num_var_available))


def _mac(instrs, mode, dst, a, b):
    """dst = a (*) b; binary mode folds the popcount contribution into dst."""
    if mode == "binary":
        instrs.append(Instr("VXOR", dst=dst, src1=a, src2=b))
        instrs.append(Instr("VPOPCNT", dst=dst, src1=dst))
    else:
        instrs.append(Instr("VMUL", dst=dst, src1=a, src2=b))


def secondary_unroll_factor(layer, num_in_stash, stride):
    """lcm of per-row input-stash widths exceeding the stride (1 if none)."""
    if num_in_stash <= 0:
        return 1
    rows = _stash_rows(layer, num_in_stash)
    over = [c for c in rows if c > stride]
    return math.lcm(*over) if over else 1


def _stash_rows(layer, num_in_stash):
    """Row-major prefix footprint of the input stash over the filter window."""
    rows = []
    left = min(num_in_stash, layer.fh * layer.fw)
    for _ in range(layer.fh):
        c = min(layer.fw, left)
        rows.append(c)
        left -= c
    return rows


def alloc_rotation(vars_per_row, stride):
    """Per-iteration stash allocation orders.

    Rows wider than the stride rotate left by `stride` each output
    iteration; narrower rows are fixed.  Returns lcm-many flat tuples
    (concatenation of per-row local slot orders); iteration 0 is
    row-major.
    """
    if not vars_per_row:
        raise ScheduleError("vars_per_row must be nonempty")
    over = [c for c in vars_per_row if c > stride]
    period = math.lcm(*over) if over else 1
    seqs = []
    for it in range(period):
        order = []
        for cnt in vars_per_row:
            if cnt > stride:
                order.extend((j + it * stride) % cnt for j in range(cnt))
            else:
                order.extend(range(cnt))
        seqs.append(tuple(order))
    return seqs


# ---------------------------------------------------------------- basic

def gen_basic(anchor, layer, vmc, mode="int8"):
    """Three-variable dataflows: every MAC loads its operands from memory."""
    if anchor == "OS":
        return gen_extended_os(layer, vmc, 0, 0, mode=mode)
    oh, ow = output_dims(layer)
    ins = []
    elided = 0
    if anchor == "IS":
        # anchor on inputs; for each input visit all filter positions
        # (weight loads unconditional) and accumulate into the matching
        # outputs; ascending (r, sc) walks the associated outputs in
        # reverse order.
        for h in range(layer.ih):
            for w in range(layer.iw):
                ins.append(Instr("VLOAD", dst=1, kind="input", index=h * layer.iw + w))
                for r in range(layer.fh):
                    for sc in range(layer.fw):
                        ins.append(Instr("VLOAD", dst=2, kind="weight",
                                         index=r * layer.fw + sc))
                        e = _out_of(layer, oh, ow, h, w, r, sc)
                        if e is None:
                            continue
                        _mac(ins, mode, 0, 1, 2)
                        ins.append(Instr("VREDSUM", src1=0))
                        ins.append(Instr("SACC", index=e))
    elif anchor == "WS":
        # anchor on weights; one pass over all outputs per filter position
        for r in range(layer.fh):
            for sc in range(layer.fw):
                ins.append(Instr("VLOAD", dst=2, kind="weight", index=r * layer.fw + sc))
                for hp in range(oh):
                    for wp in range(ow):
                        hh = hp * layer.s + r - layer.pad
                        ww = wp * layer.s + sc - layer.pad
                        if not (0 <= hh < layer.ih and 0 <= ww < layer.iw):
                            elided += 1
                            continue
                        ins.append(Instr("VLOAD", dst=1, kind="input",
                                         index=hh * layer.iw + ww))
                        _mac(ins, mode, 0, 1, 2)
                        ins.append(Instr("VREDSUM", src1=0))
                        ins.append(Instr("SACC", index=hp * ow + wp))
    else:
        raise ScheduleError("unknown anchor %r" % anchor)
    return ScheduleIR(ins, layer, vmc, anchor, mode=mode, elided_loads=elided)


def _out_of(layer, oh, ow, h, w, r, sc):
    """Output offset paired with input (h,w) at filter position (r,sc)."""
    hn = h + layer.pad - r
    wn = w + layer.pad - sc
    if hn % layer.s or wn % layer.s:
        return None
    hp, wp = hn // layer.s, wn // layer.s
    if 0 <= hp < oh and 0 <= wp < ow:
        return hp * ow + wp
    return None


def assoc_idx(h, w, layer):
    """All ((h', w'), (r, sc)) pairs for input (h, w), outputs descending."""
    if not (0 <= h < layer.ih and 0 <= w < layer.iw):
        raise ScheduleError("input coordinate out of range")
    oh, ow = output_dims(layer)
    pairs = []
    for r in range(layer.fh):
        for sc in range(layer.fw):
            e = _out_of(layer, oh, ow, h, w, r, sc)
            if e is not None:
                pairs.append(((e // ow, e % ow), (r, sc)))
    return pairs  # ascending (r, sc) == descending output order


# ------------------------------------------------------------- extended

def gen_extended_os(layer, vmc, num_in_stash, num_wgt_stash, mode="int8",
                    rotate=True):
    """Output-anchored dataflow with input/weight auxiliary stashes.

    The input stash covers a row-major prefix of the filter window.
    With rotation (secondary unrolling) stash data is never moved
    between variables; `rotate=False` is a test-only mode that pins
    slots to window positions and shifts data with VMOVs instead.
    """
    _budget(vmc, num_in_stash + num_wgt_stash)
    oh, ow = output_dims(layer)
    s, pad, fh, fw = layer.s, layer.pad, layer.fh, layer.fw
    rows = _stash_rows(layer, num_in_stash)
    unroll = secondary_unroll_factor(layer, num_in_stash, s)
    fallback = unroll > UNROLL_CAP
    if fallback:
        rotate = False
    in_base = []
    acc = 3
    for c in rows:
        in_base.append(acc)
        acc += c
    wbase = acc
    n_w = min(num_wgt_stash, fh * fw)

    ins = []
    elided = 0
    # stash all covered weights once per tile
    for flat in range(n_w):
        ins.append(Instr("VLOAD", dst=wbase + flat, kind="weight", index=flat,
                         tag="prime"))
    for hp in range(oh):
        for wp in range(ow):
            ins.append(Instr("VZERO", dst=0))
            for r in range(fh):
                for sc in range(fw):
                    hh = hp * s + r - pad
                    ww = wp * s + sc - pad
                    valid = 0 <= hh < layer.ih and 0 <= ww < layer.iw
                    cnt = rows[r]
                    if sc < cnt:
                        if rotate and cnt > s:
                            slot = (sc + wp * s) % cnt
                        else:
                            slot = sc
                        invar = in_base[r] + slot
                        # positions that could not be carried over from the
                        # previous output get refilled (stash priming)
                        if wp == 0 or sc >= cnt - s:
                            if valid:
                                ins.append(Instr("VLOAD", dst=invar, kind="input",
                                                 index=hh * layer.iw + ww,
                                                 tag="prime"))
                            else:
                                elided += 1
                    else:
                        if valid:
                            ins.append(Instr("VLOAD", dst=1, kind="input",
                                             index=hh * layer.iw + ww))
                        else:
                            elided += 1
                        invar = 1
                    if not valid:
                        continue
                    flat = r * fw + sc
                    if flat < n_w:
                        wvar = wbase + flat
                    else:
                        ins.append(Instr("VLOAD", dst=2, kind="weight", index=flat))
                        wvar = 2
                    _mac(ins, mode, 1, invar, wvar)
                    ins.append(Instr("VADD", dst=0, src1=0, src2=1))
            ins.append(Instr("VREDSUM", src1=0))
            ins.append(Instr("SACC", index=hp * ow + wp))
            # test-only slot pinning: shift carried data down by stride
            if not rotate and wp < ow - 1:
                for r in range(fh):
                    cnt = rows[r]
                    if cnt <= s:
                        continue
                    for sc in range(cnt - s):
                        hh = hp * s + r - pad
                        ww = wp * s + sc + s - pad
                        if 0 <= hh < layer.ih and 0 <= ww < layer.iw:
                            ins.append(Instr("VMOV", dst=in_base[r] + sc,
                                             src1=in_base[r] + sc + s))
    return ScheduleIR(ins, layer, vmc, "OS", num_in_stash=num_in_stash,
                      num_wgt_stash=num_wgt_stash, mode=mode, unroll=unroll,
                      vmov_fallback=fallback, elided_loads=elided)


def gen_extended_is(layer, vmc, num_wgt_stash, num_out_stash, mode="int8"):
    """Input-anchored dataflow with weight/output auxiliary stashes.

    Stashed outputs are the earliest-to-complete (largest (r, sc)) valid
    associations at each input; each accumulates across inputs and is
    written back once at its last use in the current input row.
    """
    _budget(vmc, num_wgt_stash + num_out_stash)
    oh, ow = output_dims(layer)
    s, pad, fh, fw = layer.s, layer.pad, layer.fh, layer.fw
    n_w = min(num_wgt_stash, fh * fw)
    n_out = min(num_out_stash, fh * fw)
    wbase, obase = 3, 3 + n_w

    ins = []
    for flat in range(n_w):
        ins.append(Instr("VLOAD", dst=wbase + flat, kind="weight", index=flat,
                         tag="prime"))
    owner = {}          # output offset -> stash slot
    free = deque(range(n_out))
    for h in range(layer.ih):
        for w in range(layer.iw):
            ins.append(Instr("VLOAD", dst=1, kind="input", index=h * layer.iw + w))
            valid = {}
            for (hp, wp), (r, sc) in assoc_idx(h, w, layer):
                valid[(r, sc)] = (hp, wp)
            # coverage: the n_out oldest (largest (r, sc)) valid pairs
            covered = set()
            if n_out:
                oldest = sorted(valid.keys())[-n_out:]
                covered = {valid[p][0] * ow + valid[p][1] for p in oldest}
            for r in range(fh):
                for sc in range(fw):
                    flat = r * fw + sc
                    if flat < n_w:
                        wvar = wbase + flat
                    else:
                        ins.append(Instr("VLOAD", dst=2, kind="weight", index=flat))
                        wvar = 2
                    if (r, sc) not in valid:
                        continue
                    hp, wp = valid[(r, sc)]
                    e = hp * ow + wp
                    # last input column of this row at which e has a use
                    last_w = min(layer.iw - 1, wp * s + fw - 1 - pad)
                    if e in owner:
                        ovar = obase + owner[e]
                        _mac(ins, mode, 0, 1, wvar)
                        ins.append(Instr("VADD", dst=ovar, src1=ovar, src2=0))
                        if w == last_w:
                            ins.append(Instr("VREDSUM", src1=ovar))
                            ins.append(Instr("SACC", index=e, tag="drain"))
                            free.append(owner.pop(e))
                    elif e in covered and free:
                        slot = free.popleft()
                        ovar = obase + slot
                        _mac(ins, mode, ovar, 1, wvar)
                        if w == last_w:
                            ins.append(Instr("VREDSUM", src1=ovar))
                            ins.append(Instr("SACC", index=e, tag="drain"))
                            free.append(slot)
                        else:
                            owner[e] = slot
                    else:
                        _mac(ins, mode, 0, 1, wvar)
                        ins.append(Instr("VREDSUM", src1=0))
                        ins.append(Instr("SACC", index=e))
        # stints never span input rows: every stash drains at its
        # last in-row use, so the map must be empty here
        if owner:
            raise ScheduleError("internal: undrained output stash at row end")
    return ScheduleIR(ins, layer, vmc, "IS", num_wgt_stash=num_wgt_stash,
                      num_out_stash=num_out_stash, mode=mode)


def gen_extended_ws(layer, vmc, num_in_stash, num_out_stash, mode="int8"):
    """Weight-anchored dataflow with input/output auxiliary stashes.

    Stashed inputs serve the first num_in_stash outputs of every weight
    pass (slots carry across passes when the same vector is needed
    again).  Stashed outputs accumulate across all fh*fw passes and are
    written back in the split final pass only.
    """
    _budget(vmc, num_in_stash + num_out_stash)
    oh, ow = output_dims(layer)
    s, pad, fh, fw = layer.s, layer.pad, layer.fh, layer.fw
    E = oh * ow
    n_in = min(num_in_stash, E)
    n_out = min(num_out_stash, E)
    ibase, obase = 3, 3 + n_in

    ins = []
    elided = 0
    for j in range(n_out):
        ins.append(Instr("VZERO", dst=obase + j))
    coord_slot = {}   # input vector index -> stash slot holding it
    passes = [(r, sc) for r in range(fh) for sc in range(fw)]
    for fi, (r, sc) in enumerate(passes):
        ins.append(Instr("VLOAD", dst=2, kind="weight", index=r * fw + sc))
        last_pass = fi == len(passes) - 1
        # coords needed by the stash-served outputs this pass
        needed = {}
        for e in range(n_in):
            hh = e // ow * s + r - pad
            ww = e % ow * s + sc - pad
            if 0 <= hh < layer.ih and 0 <= ww < layer.iw:
                needed[e] = hh * layer.iw + ww
        keep = {c: sl for c, sl in coord_slot.items() if c in needed.values()}
        free = deque(sorted(set(range(n_in)) - set(keep.values())))
        slot_of = {}
        for e in sorted(needed):
            c = needed[e]
            if c in keep:
                slot_of[e] = keep[c]
            else:
                sl = free.popleft()
                keep[c] = sl
                slot_of[e] = sl
                ins.append(Instr("VLOAD", dst=ibase + sl, kind="input", index=c,
                                 tag="prime"))
        coord_slot = keep
        for e in range(E):
            hh = e // ow * s + r - pad
            ww = e % ow * s + sc - pad
            if not (0 <= hh < layer.ih and 0 <= ww < layer.iw):
                elided += 1
                continue
            if e < n_in:
                ivar = ibase + slot_of[e]
            else:
                ins.append(Instr("VLOAD", dst=1, kind="input",
                                 index=hh * layer.iw + ww))
                ivar = 1
            if e < n_out:
                ovar = obase + e
                _mac(ins, mode, 0, ivar, 2)
                ins.append(Instr("VADD", dst=ovar, src1=ovar, src2=0))
            else:
                _mac(ins, mode, 0, ivar, 2)
                ins.append(Instr("VREDSUM", src1=0))
                ins.append(Instr("SACC", index=e))
        if last_pass:
            for e in range(n_out):
                ins.append(Instr("VREDSUM", src1=obase + e))
                ins.append(Instr("SACC", index=e, tag="drain"))
    return ScheduleIR(ins, layer, vmc, "WS", num_in_stash=num_in_stash,
                      num_out_stash=num_out_stash, mode=mode,
                      elided_loads=elided)


def gen(layer, vmc, spec, mode="int8"):
    """Dispatch a DataflowSpec to the matching generator."""
    spec.validate(vmc)
    if spec.anchor == "OS":
        return gen_extended_os(layer, vmc, spec.aux_input_vars,
                               spec.aux_weight_vars, mode=mode)
    if spec.anchor == "IS":
        return gen_extended_is(layer, vmc, spec.aux_weight_vars,
                               spec.aux_output_vars, mode=mode)
    return gen_extended_ws(layer, vmc, spec.aux_input_vars,
                           spec.aux_output_vars, mode=mode)
