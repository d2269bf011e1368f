"""Command-line driver.

Config files are JSON:

    {
      "machine": {"vec_reg_bits": 128, "vec_var_bits": 128,
                  "num_vec_regs": 32, "elem_bits": 8},
      "layers": [{"ih": 8, "iw": 8, "ic": 8, "oc": 4,
                  "fh": 3, "fw": 3, "s": 1, "pad": 0}, ...]
    }

Subcommands: gen, sim, sweep, layout, recommend.  Exit codes: 0 success,
1 verification failure, 2 configuration error.  All artifacts go under
--out; reruns with the same config and seed are byte-identical.

Set YFLOW_COMPILE_TEST=1 to enable the gated emit-compile-run test in
the test suite (requires a C compiler).
"""

import argparse
import dataclasses
import json
import random
import sys
from pathlib import Path

from . import emit as emit_mod
from . import model, pipeline, reuse, schedule, simvm


def _load_config(path):
    with open(path) as f:
        raw = json.load(f)
    vmc = model.VectorMachineConfig(**raw["machine"])
    layers = [model.LayerConfig(**ld) for ld in raw["layers"]]
    if not layers:
        raise model.ConfigError("config has no layers")
    return vmc, layers


def _pick_layer(layers, k):
    if not 0 <= k < len(layers):
        raise model.ConfigError("layer index %d out of range (%d layers)"
                                % (k, len(layers)))
    return layers[k]


def _spec_from_args(args, vmc, layer):
    if getattr(args, "recommend", False):
        return reuse.recommend(vmc, layer)
    anchor = args.anchor.upper()
    return model.DataflowSpec(anchor, aux_input_vars=args.aux_input,
                              aux_weight_vars=args.aux_weight,
                              aux_output_vars=args.aux_output)


def _parse_weights(text):
    if not text:
        return None
    out = {}
    for part in text.split(","):
        k, _, v = part.partition("=")
        if k not in pipeline.DEFAULT_WEIGHTS:
            raise model.ConfigError("unknown cost weight %r" % k)
        out[k] = int(v)
    return out


def _rand_tensors(layer, vmc, mode, seed):
    rng = random.Random(seed)
    if mode == "binary":
        lo, hi = 0, 1
    else:
        lo, hi = -8, 8
    inp = model.PackedTensor(
        "input", "NCHW", (layer.ic, layer.ih, layer.iw),
        [rng.randint(lo, hi) for _ in range(layer.ic * layer.ih * layer.iw)])
    wgt = model.PackedTensor(
        "weight", "CKRS", (layer.ic, layer.oc, layer.fh, layer.fw),
        [rng.randint(lo, hi)
         for _ in range(layer.ic * layer.oc * layer.fh * layer.fw)])
    return inp, wgt


def cmd_gen(args):
    vmc, layers = _load_config(args.config)
    layer = _pick_layer(layers, args.layer)
    spec = _spec_from_args(args, vmc, layer)
    spec.validate(vmc)
    ir = schedule.gen(layer, vmc, spec, mode=args.mode)
    cfg = emit_mod.EmitConfig(flavor="neon_c", func_name="conv_kernel",
                              mode=args.mode)
    src = emit_mod.emit(ir, cfg)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    stem = "layer%d_%s" % (args.layer, spec.anchor.lower())
    (outdir / (stem + ".ir")).write_text(ir.dump())
    (outdir / (stem + ".c")).write_text(src)
    print("wrote %s.ir and %s.c" % (stem, stem))
    return 0


def cmd_sim(args):
    vmc, layers = _load_config(args.config)
    layer = _pick_layer(layers, args.layer)
    if args.ir:
        ir = schedule.parse_ir(Path(args.ir).read_text())
        layer, vmc = ir.layer, ir.vmc
    else:
        spec = _spec_from_args(args, vmc, layer)
        spec.validate(vmc)
        ir = schedule.gen(layer, vmc, spec, mode=args.mode)
    mode = ir.mode
    inp, wgt = _rand_tensors(layer, vmc, mode, args.seed)
    packed_in = model.pack(inp, layer, vmc)
    packed_w = model.pack_weights(wgt, layer, vmc)
    got, rep = simvm.execute(ir, packed_in, packed_w, mode=mode)
    want = simvm.scalar_oracle(layer, inp, wgt, mode=mode)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / ("layer%d_counts.csv" % args.layer)).write_text(rep.to_csv())
    if got.data != want.data:
        oh, ow = model.output_dims(layer)
        for i, (a, b) in enumerate(zip(got.data, want.data)):
            if a != b:
                k, rem = divmod(i, oh * ow)
                hp, wp = divmod(rem, ow)
                print("FAIL first mismatch at output (k=%d, h=%d, w=%d): "
                      "vm=%d oracle=%d" % (k, hp, wp, a, b))
                return 1
        print("FAIL output shapes differ")
        return 1
    print("PASS")
    return 0


def cmd_sweep(args):
    vmc, layers = _load_config(args.config)
    layer = _pick_layer(layers, args.layer)
    weights = _parse_weights(args.weights)
    cands = pipeline.default_candidates(layer, vmc)
    best, cost, rows = pipeline.blocking_sweep(layer, vmc, cands,
                                               weights, args.mode)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    lines = ["cost,config"]
    lines.extend("%d,%s" % (c, label) for c, label, _ in rows)
    (outdir / ("sweep_layer%d.csv" % args.layer)).write_text("\n".join(lines) + "\n")
    print("best: %s cost=%d" % (best.label, cost))
    return 0


def cmd_layout(args):
    vmc, layers = _load_config(args.config)
    weights = _parse_weights(args.weights)
    cands = [pipeline.default_candidates(l, vmc) for l in layers]
    net = pipeline.NetworkSpec(layers, cands)
    table = pipeline.collect_costs(net, vmc, weights, args.mode)
    assignment, total = pipeline.layout_dp(table)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "costs.csv").write_text(table.to_csv())
    lines = ["total_cost %d" % total]
    for li, ci in enumerate(assignment):
        lines.append("layer %d: %s" % (li, net.candidates[li][ci].label))
    report = "\n".join(lines) + "\n"
    (outdir / "layout.txt").write_text(report)
    print(report, end="")
    return 0


def cmd_recommend(args):
    vmc, layers = _load_config(args.config)
    layer = _pick_layer(layers, args.layer)
    spec = reuse.recommend(vmc, layer)
    print(json.dumps(dataclasses.asdict(spec), sort_keys=True))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="yflow",
                                description="SIMD convolution dataflow explorer")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, layer=True, spec=True):
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", default="out")
        sp.add_argument("--mode", choices=["int8", "binary"], default="int8")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--weights", default="",
                        help="cost weights, e.g. loads=1,scalar=2")
        if layer:
            sp.add_argument("--layer", type=int, default=0)
        if spec:
            sp.add_argument("--anchor", choices=["is", "ws", "os"], default="os")
            sp.add_argument("--aux-input", type=int, default=0)
            sp.add_argument("--aux-weight", type=int, default=0)
            sp.add_argument("--aux-output", type=int, default=0)
            sp.add_argument("--recommend", action="store_true",
                            help="ignore anchor/aux flags, use the heuristic spec")

    sp = sub.add_parser("gen", help="write IR dump and emitted C")
    common(sp)
    sp.set_defaults(func=cmd_gen)
    sp = sub.add_parser("sim", help="verify against the scalar oracle")
    common(sp)
    sp.add_argument("--ir", default="", help="run a saved IR dump instead")
    sp.set_defaults(func=cmd_sim)
    sp = sub.add_parser("sweep", help="blocking sweep on one layer")
    common(sp, spec=False)
    sp.set_defaults(func=cmd_sweep)
    sp = sub.add_parser("layout", help="layout DP over the whole network")
    common(sp, layer=False, spec=False)
    sp.set_defaults(func=cmd_layout)
    sp = sub.add_parser("recommend", help="print the heuristic DataflowSpec")
    common(sp, spec=False)
    sp.set_defaults(func=cmd_recommend)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except model.ConfigError as e:
        print("error: %s" % e, file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as e:
        print("error: %s" % e, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
