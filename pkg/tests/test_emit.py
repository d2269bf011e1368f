import pytest

from yflow.emit import EmitConfig, emit, emit_oracle
from yflow.model import ConfigError, LayerConfig, VectorMachineConfig
from yflow.schedule import gen_basic, gen_extended_os

from conftest import FIXTURES

LAYER_1X1 = LayerConfig(4, 4, 16, 16, 1, 1)
VMC_128 = VectorMachineConfig(128, 128, 32, 8)


def test_golden_kernel():
    ir = gen_basic("OS", LAYER_1X1, VMC_128)
    src = emit(ir, EmitConfig(func_name="conv_kernel"))
    assert src == (FIXTURES / "golden_basic_os_1x1.c").read_text()


def test_golden_oracle():
    cfg = EmitConfig(flavor="scalar_c", func_name="conv_oracle")
    src = emit_oracle(LAYER_1X1, VMC_128, cfg)
    assert src == (FIXTURES / "golden_oracle_1x1.c").read_text()


def test_emit_deterministic():
    layer = LayerConfig(6, 6, 8, 4, 3, 3, s=2, pad=1)
    ir = gen_extended_os(layer, VMC_128, 3, 2)
    cfg = EmitConfig()
    assert emit(ir, cfg) == emit(ir, cfg)


def test_emit_declares_exact_variable_count():
    layer = LayerConfig(6, 6, 8, 4, 3, 3)
    for n_in, n_w in [(0, 0), (3, 0), (0, 4), (2, 2)]:
        ir = gen_extended_os(layer, VMC_128, n_in, n_w)
        src = emit(ir, EmitConfig())
        decl = next(l for l in src.splitlines()
                    if l.strip().startswith("yf_vec v0"))
        assert decl.count(",") + 1 == 3 + n_in + n_w


def test_emit_well_formed():
    layer = LayerConfig(5, 5, 4, 2, 2, 2)
    for flavor in ("neon_c", "scalar_c"):
        src = emit(gen_basic("WS", layer, VMC_128), EmitConfig(flavor=flavor))
        assert src.count("{") == src.count("}")
        assert src.count("(") == src.count(")")
        assert "conv_kernel" in src
    assert "__ARM_NEON" not in emit(gen_basic("WS", layer, VMC_128),
                                    EmitConfig(flavor="scalar_c"))


def test_emit_guard():
    src = emit(gen_basic("OS", LAYER_1X1, VMC_128), EmitConfig(guard="YF_K_H"))
    assert src.startswith("/*")
    assert "#ifndef YF_K_H" in src and src.rstrip().endswith("#endif /* YF_K_H */")


def test_emit_mode_mismatch_rejected():
    ir = gen_basic("OS", LAYER_1X1, VMC_128)
    with pytest.raises(ConfigError):
        emit(ir, EmitConfig(mode="binary"))


def test_emit_rejects_bad_flavor():
    with pytest.raises(ConfigError):
        EmitConfig(flavor="avx")


def test_oracle_has_stride_and_pad_macros():
    layer = LayerConfig(8, 8, 4, 2, 3, 3, s=2, pad=1)
    src = emit_oracle(layer, VMC_128, EmitConfig(flavor="scalar_c"))
    assert "#define YF_S 2" in src and "#define YF_PAD 1" in src
    assert "yf_vload" not in src   # no helpers, linkable next to a kernel
