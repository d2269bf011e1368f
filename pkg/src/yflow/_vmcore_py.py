"""Pure-Python twin of the compiled VM kernel (_vmcore.pyx).

Same encoded-instruction semantics; used when the extension is not built.
Opcode encoding: 0 VLOAD, 1 VZERO, 2 VMUL, 3 VADD, 4 VXOR, 5 VPOPCNT,
6 VREDSUM, 7 VMOV, 8 SACC.  Instruction row: [op, dst, src1, src2, kind,
index] with kind 0=input, 1=weight.
"""

COMPILED = False


def execute_encoded(code, in_data, wgt_data, out, num_vars, x, cb_count, oc,
                    in_block, wgt_block, oh_ow, binary):
    """Run one tile program over all (cb, k) tiles.

    Returns (status, cb, k, pos): status 0 ok, 1 unwritten-variable read,
    2 memory index out of bounds.
    """
    prog = [tuple(int(v) for v in row) for row in code]
    inp = list(in_data)
    wgt = list(wgt_data)
    res = list(out)
    n_in = len(inp)
    n_wgt = len(wgt)
    n_out = len(res)
    regs = [[0] * x for _ in range(num_vars)]
    for cb in range(cb_count):
        for k in range(oc):
            written = [False] * num_vars
            sreg = 0
            for pos, (op, dst, src1, src2, kind, index) in enumerate(prog):
                if op == 0:  # VLOAD
                    if kind == 0:
                        base = (cb * in_block + index) * x
                        if index < 0 or base + x > n_in:
                            return (2, cb, k, pos)
                        regs[dst] = inp[base:base + x]
                    else:
                        base = ((cb * oc + k) * wgt_block + index) * x
                        if index < 0 or base + x > n_wgt:
                            return (2, cb, k, pos)
                        regs[dst] = wgt[base:base + x]
                    written[dst] = True
                elif op == 1:  # VZERO
                    regs[dst] = [0] * x
                    written[dst] = True
                elif op == 2:  # VMUL
                    if not (written[src1] and written[src2]):
                        return (1, cb, k, pos)
                    a, b = regs[src1], regs[src2]
                    regs[dst] = [a[i] * b[i] for i in range(x)]
                    written[dst] = True
                elif op == 3:  # VADD
                    if not (written[src1] and written[src2]):
                        return (1, cb, k, pos)
                    a, b = regs[src1], regs[src2]
                    regs[dst] = [a[i] + b[i] for i in range(x)]
                    written[dst] = True
                elif op == 4:  # VXOR
                    if not (written[src1] and written[src2]):
                        return (1, cb, k, pos)
                    a, b = regs[src1], regs[src2]
                    regs[dst] = [a[i] ^ b[i] for i in range(x)]
                    written[dst] = True
                elif op == 5:  # VPOPCNT: fold x - 2*popcount into lane 0
                    if not written[src1]:
                        return (1, cb, k, pos)
                    ones = sum(regs[src1])
                    v = [0] * x
                    v[0] = x - 2 * ones
                    regs[dst] = v
                    written[dst] = True
                elif op == 6:  # VREDSUM
                    if not written[src1]:
                        return (1, cb, k, pos)
                    sreg = sum(regs[src1])
                elif op == 7:  # VMOV
                    if not written[src1]:
                        return (1, cb, k, pos)
                    regs[dst] = list(regs[src1])
                    written[dst] = True
                else:  # SACC
                    off = k * oh_ow + index
                    if index < 0 or off >= n_out:
                        return (2, cb, k, pos)
                    res[off] += sreg
    out[:] = res
    return (0, -1, -1, -1)
