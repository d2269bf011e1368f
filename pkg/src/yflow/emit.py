"""C source emission from ScheduleIR.

Two flavors: `neon_c` emits the tile through vector helper calls that
compile to NEON intrinsics under __ARM_NEON (128-bit granularity, one
int32x4 chunk per 4 lanes) and to portable scalar loops elsewhere;
`scalar_c` emits only the portable helpers.  Both produce one function
`void name(const int8_t *input, const int8_t *weights, int32_t *output)`
over NCHW[xc] / CKRS[xc] / KHW arrays, so emit() and emit_oracle()
output is drop-in comparable.

Width note: the VM accumulates in unbounded integers; emitted kernels
widen int8 operands on load and use int16 products / int32 accumulators.
Test tensors keep magnitudes inside those widths.
"""

from dataclasses import dataclass

from .model import ConfigError, channel_blocks, output_dims

_SUPPORTED = {"VLOAD", "VZERO", "VMUL", "VADD", "VXOR", "VPOPCNT",
              "VREDSUM", "VMOV", "SACC"}


@dataclass(frozen=True)
class EmitConfig:
    flavor: str = "neon_c"
    func_name: str = "conv_kernel"
    guard: str = ""
    mode: str = "int8"

    def __post_init__(self):
        if self.flavor not in ("neon_c", "scalar_c"):
            raise ConfigError("unknown emit flavor %r" % (self.flavor,))
        if self.mode not in ("int8", "binary"):
            raise ConfigError("unknown emit mode %r" % (self.mode,))


_PORTABLE_HELPERS = """\
typedef struct { int32_t l[YF_X]; } yf_vec;

static inline yf_vec yf_vload(const int8_t *p) {
    yf_vec v;
    for (int i = 0; i < YF_X; ++i) v.l[i] = p[i];
    return v;
}
static inline yf_vec yf_vzero(void) {
    yf_vec v;
    for (int i = 0; i < YF_X; ++i) v.l[i] = 0;
    return v;
}
static inline yf_vec yf_vmul(yf_vec a, yf_vec b) {
    yf_vec v;
    for (int i = 0; i < YF_X; ++i) v.l[i] = (int16_t)(a.l[i] * b.l[i]);
    return v;
}
static inline yf_vec yf_vadd(yf_vec a, yf_vec b) {
    yf_vec v;
    for (int i = 0; i < YF_X; ++i) v.l[i] = a.l[i] + b.l[i];
    return v;
}
static inline yf_vec yf_vxor(yf_vec a, yf_vec b) {
    yf_vec v;
    for (int i = 0; i < YF_X; ++i) v.l[i] = a.l[i] ^ b.l[i];
    return v;
}
static inline yf_vec yf_vpopcnt(yf_vec a) {
    int32_t ones = 0;
    yf_vec v;
    for (int i = 0; i < YF_X; ++i) ones += a.l[i] & 1;
    for (int i = 0; i < YF_X; ++i) v.l[i] = 0;
    v.l[0] = YF_X - 2 * ones;
    return v;
}
static inline int32_t yf_vredsum(yf_vec a) {
    int32_t s = 0;
    for (int i = 0; i < YF_X; ++i) s += a.l[i];
    return s;
}
"""

# NEON helpers keep lanes widened to int32 (int32x4 per 128-bit chunk)
# so accumulation never narrows; loads gather bytes per chunk.
_NEON_HELPERS = """\
#include <arm_neon.h>

typedef struct { int32x4_t q[YF_NQ]; } yf_vec;

static inline yf_vec yf_vload(const int8_t *p) {
    yf_vec v;
    for (int i = 0; i < YF_NQ; ++i) {
        int32_t tmp[4] = { p[4*i], p[4*i + 1], p[4*i + 2], p[4*i + 3] };
        v.q[i] = vld1q_s32(tmp);
    }
    return v;
}
static inline yf_vec yf_vzero(void) {
    yf_vec v;
    for (int i = 0; i < YF_NQ; ++i) v.q[i] = vdupq_n_s32(0);
    return v;
}
static inline yf_vec yf_vmul(yf_vec a, yf_vec b) {
    yf_vec v;
    for (int i = 0; i < YF_NQ; ++i) v.q[i] = vmulq_s32(a.q[i], b.q[i]);
    return v;
}
static inline yf_vec yf_vadd(yf_vec a, yf_vec b) {
    yf_vec v;
    for (int i = 0; i < YF_NQ; ++i) v.q[i] = vaddq_s32(a.q[i], b.q[i]);
    return v;
}
static inline yf_vec yf_vxor(yf_vec a, yf_vec b) {
    yf_vec v;
    for (int i = 0; i < YF_NQ; ++i) v.q[i] = veorq_s32(a.q[i], b.q[i]);
    return v;
}
static inline yf_vec yf_vpopcnt(yf_vec a) {
    int32_t ones = 0;
    yf_vec v = yf_vzero();
    for (int i = 0; i < YF_NQ; ++i)
        ones += vaddvq_s32(vandq_s32(a.q[i], vdupq_n_s32(1)));
    v.q[0] = vsetq_lane_s32(YF_X - 2 * ones, v.q[0], 0);
    return v;
}
static inline int32_t yf_vredsum(yf_vec a) {
    int32_t s = 0;
    for (int i = 0; i < YF_NQ; ++i) s += vaddvq_s32(a.q[i]);
    return s;
}
"""


def _header(layer, vmc, cfg, comment, helpers=True):
    x = vmc.x
    cb = channel_blocks(layer.ic, x)
    oh, ow = output_dims(layer)
    out = []
    out.append("/* %s */" % comment)
    if cfg.guard:
        out.append("#ifndef %s" % cfg.guard)
        out.append("#define %s" % cfg.guard)
    out.append("#include <stdint.h>")
    out.append("")
    out.append("#define YF_X %d" % x)
    out.append("#define YF_NQ %d" % max(1, x // 4))
    for name, val in (("CB", cb), ("OC", layer.oc), ("IH", layer.ih),
                      ("IW", layer.iw), ("FH", layer.fh), ("FW", layer.fw),
                      ("OH", oh), ("OW", ow)):
        out.append("#define YF_%s %d" % (name, val))
    out.append("")
    if helpers:
        if cfg.flavor == "neon_c":
            out.append("#if defined(__ARM_NEON) && (YF_X % 4 == 0)")
            out.append(_NEON_HELPERS)
            out.append("#else")
            out.append(_PORTABLE_HELPERS)
            out.append("#endif")
        else:
            out.append(_PORTABLE_HELPERS)
        out.append("")
    return out


def emit(ir, cfg):
    """Render one IR tile (plus the cb/k outer loops) as C source."""
    layer, vmc = ir.layer, ir.vmc
    if cfg.mode != ir.mode:
        raise ConfigError("EmitConfig mode %s does not match IR mode %s"
                          % (cfg.mode, ir.mode))
    used = sorted({v for i in ir.instrs for v in (i.dst, i.src1, i.src2) if v >= 0})
    out = _header(layer, vmc, cfg,
                  "generated %s-anchored kernel, mode=%s, stashes in=%d wgt=%d out=%d"
                  % (ir.anchor, ir.mode, ir.num_in_stash, ir.num_wgt_stash,
                     ir.num_out_stash))
    out.append("void %s(const int8_t *input, const int8_t *weights, int32_t *output)"
               % cfg.func_name)
    out.append("{")
    out.append("    yf_vec %s;" % ", ".join("v%d" % v for v in used))
    out.append("    int32_t rs = 0;")
    out.append("    for (int cb = 0; cb < YF_CB; ++cb) {")
    out.append("        for (int k = 0; k < YF_OC; ++k) {")
    out.append("            const int8_t *in_p = input + cb * YF_IH * YF_IW * YF_X;")
    out.append("            const int8_t *w_p = weights + (cb * YF_OC + k) "
               "* YF_FH * YF_FW * YF_X;")
    out.append("            int32_t *out_p = output + k * YF_OH * YF_OW;")
    pad = "            "
    for ins in ir.instrs:
        if ins.op not in _SUPPORTED:
            raise ConfigError("opcode %s unsupported by flavor %s"
                              % (ins.op, cfg.flavor))
        note = " /* %s */" % ins.tag if ins.tag else ""
        if ins.op == "VLOAD":
            base = "in_p" if ins.kind == "input" else "w_p"
            out.append(pad + "v%d = yf_vload(%s + %d * YF_X);%s"
                       % (ins.dst, base, ins.index, note))
        elif ins.op == "VZERO":
            out.append(pad + "v%d = yf_vzero();" % ins.dst)
        elif ins.op in ("VMUL", "VADD", "VXOR"):
            out.append(pad + "v%d = yf_%s(v%d, v%d);%s"
                       % (ins.dst, ins.op.lower(), ins.src1, ins.src2, note))
        elif ins.op == "VPOPCNT":
            out.append(pad + "v%d = yf_vpopcnt(v%d);" % (ins.dst, ins.src1))
        elif ins.op == "VREDSUM":
            out.append(pad + "rs = yf_vredsum(v%d);" % ins.src1)
        elif ins.op == "VMOV":
            out.append(pad + "v%d = v%d;" % (ins.dst, ins.src1))
        else:  # SACC
            out.append(pad + "out_p[%d] += rs;%s" % (ins.index, note))
    out.append("        }")
    out.append("    }")
    out.append("    (void)rs;")
    out.append("}")
    if cfg.guard:
        out.append("#endif /* %s */" % cfg.guard)
    return "\n".join(out) + "\n"


def emit_oracle(layer, vmc, cfg):
    """Scalar reference convolution over the same packed array layouts."""
    # plain scalar code: no vector helpers needed, so kernel and oracle
    # sources can be compiled into one program as separate units
    out = _header(layer, vmc, cfg,
                  "scalar reference convolution (oracle), mode=%s" % cfg.mode,
                  helpers=False)
    if cfg.mode == "binary":
        macc = "acc += 1 - 2 * ((a ^ b) & 1);"
    else:
        macc = "acc += (int16_t)(a * b);"
    out.append("void %s(const int8_t *input, const int8_t *weights, int32_t *output)"
               % cfg.func_name)
    out.append("{")
    out.append("""\
    for (int k = 0; k < YF_OC; ++k) {
        for (int hp = 0; hp < YF_OH; ++hp) {
            for (int wp = 0; wp < YF_OW; ++wp) {
                int32_t acc = 0;
                for (int cb = 0; cb < YF_CB; ++cb) {
                    for (int r = 0; r < YF_FH; ++r) {
                        for (int sc = 0; sc < YF_FW; ++sc) {
                            int hh = hp * YF_S + r - YF_PAD;
                            int ww = wp * YF_S + sc - YF_PAD;
                            if (hh < 0 || hh >= YF_IH || ww < 0 || ww >= YF_IW)
                                continue;
                            for (int l = 0; l < YF_X; ++l) {
                                int32_t a = input[((cb * YF_IH + hh) * YF_IW + ww) * YF_X + l];
                                int32_t b = weights[(((cb * YF_OC + k) * YF_FH + r) * YF_FW + sc) * YF_X + l];
                                %s
                            }
                        }
                    }
                }
                output[(k * YF_OH + hp) * YF_OW + wp] = acc;
            }
        }
    }""" % macc)
    out.append("}")
    if cfg.guard:
        out.append("#endif /* %s */" % cfg.guard)
    # oracle needs the stride/padding macros too
    src = "\n".join(out) + "\n"
    src = src.replace("#define YF_OH",
                      "#define YF_S %d\n#define YF_PAD %d\n#define YF_OH"
                      % (layer.s, layer.pad))
    return src
