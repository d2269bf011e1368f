import random
from pathlib import Path

import pytest

from yflow.model import (LayerConfig, PackedTensor, VectorMachineConfig,
                         ConfigError, output_dims, pack, pack_weights)
from yflow.simvm import execute, scalar_oracle

FIXTURES = Path(__file__).parent / "fixtures"


def rand_tensors(layer, rng, mode="int8"):
    """Random NCHW input and CKRS weights with small magnitudes."""
    lo, hi = (0, 1) if mode == "binary" else (-8, 8)
    inp = PackedTensor(
        "input", "NCHW", (layer.ic, layer.ih, layer.iw),
        [rng.randint(lo, hi) for _ in range(layer.ic * layer.ih * layer.iw)])
    wgt = PackedTensor(
        "weight", "CKRS", (layer.ic, layer.oc, layer.fh, layer.fw),
        [rng.randint(lo, hi)
         for _ in range(layer.ic * layer.oc * layer.fh * layer.fw)])
    return inp, wgt


def oracle_check(ir, rng, mode=None):
    """Execute ir on random tensors; return True iff it matches the oracle."""
    layer, vmc = ir.layer, ir.vmc
    mode = mode or ir.mode
    inp, wgt = rand_tensors(layer, rng, mode)
    got, _ = execute(ir, pack(inp, layer, vmc), pack_weights(wgt, layer, vmc),
                     mode=mode)
    want = scalar_oracle(layer, inp, wgt, mode)
    return got.data == want.data


def rand_layer(rng, s=None, pad=None, max_hw=12):
    """A random valid small layer (retries until the shape works out)."""
    while True:
        s_ = s if s is not None else rng.choice([1, 1, 2])
        pad_ = pad if pad is not None else rng.choice([0, 0, 1])
        fh = rng.randint(1, 5)
        fw = rng.randint(1, 5)
        ih = rng.randint(fh, max_hw)
        iw = rng.randint(fw, max_hw)
        try:
            layer = LayerConfig(ih, iw, rng.randint(1, 9), rng.randint(1, 3),
                                fh, fw, s_, pad_)
            output_dims(layer)
            return layer
        except ConfigError:
            continue


@pytest.fixture
def rng():
    return random.Random(0)
