"""Compare the compiled VM backend against the pure-Python fallback.

Runs the same generated schedules through both interpreters and reports
wall time per execution.  Usage:

    python benchmarks/bench_backends.py [--repeat 5]
"""

import argparse
import random
import statistics
import time

from yflow.model import (LayerConfig, PackedTensor, VectorMachineConfig,
                         pack, pack_weights)
from yflow.reuse import recommend
from yflow.schedule import gen
from yflow.simvm import BACKEND, execute

CASES = [
    ("conv3x3", LayerConfig(14, 14, 32, 32, 3, 3), 16),
    ("conv3x3-s2", LayerConfig(14, 14, 32, 32, 3, 3, s=2, pad=1), 16),
    ("conv1x1", LayerConfig(12, 12, 64, 64, 1, 1), 16),
    ("conv5x5", LayerConfig(12, 12, 16, 16, 5, 5), 16),
]


def bench(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print("default backend: %s" % BACKEND)
    if BACKEND != "compiled":
        print("compiled extension not built; python timings only")
    rng = random.Random(args.seed)
    header = "%-12s %10s %12s %12s %8s" % ("case", "instrs", "python(s)",
                                           "compiled(s)", "speedup")
    print(header)
    print("-" * len(header))
    for name, layer, x in CASES:
        vmc = VectorMachineConfig(8 * x, 8 * x, 32, 8)
        ir = gen(layer, vmc, recommend(vmc, layer))
        inp = PackedTensor(
            "input", "NCHW", (layer.ic, layer.ih, layer.iw),
            [rng.randint(-8, 8) for _ in range(layer.ic * layer.ih * layer.iw)])
        wgt = PackedTensor(
            "weight", "CKRS", (layer.ic, layer.oc, layer.fh, layer.fw),
            [rng.randint(-8, 8)
             for _ in range(layer.ic * layer.oc * layer.fh * layer.fw)])
        pi, pw = pack(inp, layer, vmc), pack_weights(wgt, layer, vmc)

        py_min, _ = bench(lambda: execute(ir, pi, pw, backend="python"),
                          args.repeat)
        if BACKEND == "compiled":
            c_min, _ = bench(lambda: execute(ir, pi, pw, backend="compiled"),
                             args.repeat)
            out_c, _ = execute(ir, pi, pw, backend="compiled")
            out_p, _ = execute(ir, pi, pw, backend="python")
            assert out_c.data == out_p.data, "backend outputs diverge"
            print("%-12s %10d %12.4f %12.4f %7.1fx"
                  % (name, len(ir.instrs), py_min, c_min, py_min / c_min))
        else:
            print("%-12s %10d %12.4f %12s %8s"
                  % (name, len(ir.instrs), py_min, "-", "-"))


if __name__ == "__main__":
    main()
