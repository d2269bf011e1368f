# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled VM kernel: executes one encoded tile program over all
(channel block, kernel) tiles.  Semantics must match _vmcore_py exactly;
accumulation uses int64 (value ranges in this toolkit are far below
overflow, see simvm docstring).
"""

import numpy as np

COMPILED = True


def execute_encoded(long long[:, ::1] code, long long[::1] in_data,
                    long long[::1] wgt_data, long long[::1] out,
                    int num_vars, int x, int cb_count, int oc,
                    int in_block, int wgt_block, int oh_ow, int binary):
    cdef long long[:, ::1] regs = np.zeros((num_vars, x), dtype=np.int64)
    cdef unsigned char[::1] written = np.zeros(num_vars, dtype=np.uint8)
    cdef int cb, k, pos, i
    cdef int n = code.shape[0]
    cdef long long op, dst, src1, src2, kind, index
    cdef long long sreg, base, ones, off
    cdef long long n_in = in_data.shape[0]
    cdef long long n_wgt = wgt_data.shape[0]
    cdef long long n_out = out.shape[0]

    for cb in range(cb_count):
        for k in range(oc):
            written[:] = 0
            sreg = 0
            for pos in range(n):
                op = code[pos, 0]
                dst = code[pos, 1]
                src1 = code[pos, 2]
                src2 = code[pos, 3]
                kind = code[pos, 4]
                index = code[pos, 5]
                if op == 0:  # VLOAD
                    if kind == 0:
                        base = (cb * <long long>in_block + index) * x
                        if index < 0 or base + x > n_in:
                            return (2, cb, k, pos)
                        for i in range(x):
                            regs[dst, i] = in_data[base + i]
                    else:
                        base = ((cb * <long long>oc + k) * wgt_block + index) * x
                        if index < 0 or base + x > n_wgt:
                            return (2, cb, k, pos)
                        for i in range(x):
                            regs[dst, i] = wgt_data[base + i]
                    written[dst] = 1
                elif op == 1:  # VZERO
                    for i in range(x):
                        regs[dst, i] = 0
                    written[dst] = 1
                elif op == 2:  # VMUL
                    if not (written[src1] and written[src2]):
                        return (1, cb, k, pos)
                    for i in range(x):
                        regs[dst, i] = regs[src1, i] * regs[src2, i]
                    written[dst] = 1
                elif op == 3:  # VADD
                    if not (written[src1] and written[src2]):
                        return (1, cb, k, pos)
                    for i in range(x):
                        regs[dst, i] = regs[src1, i] + regs[src2, i]
                    written[dst] = 1
                elif op == 4:  # VXOR
                    if not (written[src1] and written[src2]):
                        return (1, cb, k, pos)
                    for i in range(x):
                        regs[dst, i] = regs[src1, i] ^ regs[src2, i]
                    written[dst] = 1
                elif op == 5:  # VPOPCNT: fold x - 2*popcount into lane 0
                    if not written[src1]:
                        return (1, cb, k, pos)
                    ones = 0
                    for i in range(x):
                        ones += regs[src1, i]
                    for i in range(x):
                        regs[dst, i] = 0
                    regs[dst, 0] = x - 2 * ones
                    written[dst] = 1
                elif op == 6:  # VREDSUM
                    if not written[src1]:
                        return (1, cb, k, pos)
                    sreg = 0
                    for i in range(x):
                        sreg += regs[src1, i]
                elif op == 7:  # VMOV
                    if not written[src1]:
                        return (1, cb, k, pos)
                    for i in range(x):
                        regs[dst, i] = regs[src1, i]
                    written[dst] = 1
                else:  # SACC
                    off = k * <long long>oh_ow + index
                    if index < 0 or off >= n_out:
                        return (2, cb, k, pos)
                    out[off] += sreg
    return (0, -1, -1, -1)
