# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled twin of _simcore_py.exec_segment.

Same signature, same return tuple, same fault conventions.  Any change
here must land in _simcore_py as well; test_kernel_equiv drives both
on randomized programs to hold them together.
"""

from libc.stdint cimport int64_t, uint32_t


def exec_segment(const int[:] kinds, const int[:] rds, const int[:] rs1s,
                 const int[:] rs2s, const int[:] imms,
                 unsigned int[:] regs, unsigned char[:] mem,
                 long long pc, long long cycles, long long max_cycles,
                 long long fetch_cost, long long base_exec,
                 long long load_extra, long long store_extra):
    cdef Py_ssize_t n = kinds.shape[0]
    cdef int64_t memlen = mem.shape[0]
    cdef int64_t loads = 0, stores = 0, instret = 0
    cdef int64_t cyc = cycles
    cdef int64_t alu_cost = fetch_cost + base_exec
    cdef int64_t lw_cost = alu_cost + load_extra
    cdef int64_t sw_cost = alu_cost + store_extra
    cdef int64_t cost
    cdef int64_t ip = pc
    cdef int k, rd
    cdef uint32_t addr, v

    while True:
        if ip == n:
            return 0, ip, cyc, loads, stores, instret, 0
        if ip < 0 or ip > n:
            return 6, ip, cyc, loads, stores, instret, 0
        k = kinds[ip]
        if k == 16:
            return 1, ip, cyc, loads, stores, instret, 0
        if k == 0:
            cost = lw_cost
        elif k == 1:
            cost = sw_cost
        else:
            cost = alu_cost
        if cyc + cost > max_cycles:
            return 2, ip, cyc, loads, stores, instret, 0
        cyc += cost

        if k == 6:  # and
            rd = rds[ip]
            if rd:
                regs[rd] = regs[rs1s[ip]] & regs[rs2s[ip]]
        elif k == 2:  # add
            rd = rds[ip]
            if rd:
                regs[rd] = regs[rs1s[ip]] + regs[rs2s[ip]]
        elif k == 3:  # sub
            rd = rds[ip]
            if rd:
                regs[rd] = regs[rs1s[ip]] - regs[rs2s[ip]]
        elif k == 4:  # sll
            rd = rds[ip]
            if rd:
                regs[rd] = regs[rs1s[ip]] << (regs[rs2s[ip]] & 31)
        elif k == 5:  # srl
            rd = rds[ip]
            if rd:
                regs[rd] = regs[rs1s[ip]] >> (regs[rs2s[ip]] & 31)
        elif k == 0:  # lw
            addr = regs[rs1s[ip]] + <uint32_t>imms[ip]
            if addr & 3:
                return (4, ip, cyc - cost, loads, stores, instret, addr)
            if <int64_t>addr + 4 > memlen:
                return (3, ip, cyc - cost, loads, stores, instret, addr)
            rd = rds[ip]
            if rd:
                regs[rd] = (mem[addr] | (<uint32_t>mem[addr + 1] << 8)
                            | (<uint32_t>mem[addr + 2] << 16)
                            | (<uint32_t>mem[addr + 3] << 24))
            loads += 1
        elif k == 10:  # addi
            rd = rds[ip]
            if rd:
                regs[rd] = regs[rs1s[ip]] + <uint32_t>imms[ip]
        elif k == 1:  # sw
            addr = regs[rs1s[ip]] + <uint32_t>imms[ip]
            if addr & 3:
                return (4, ip, cyc - cost, loads, stores, instret, addr)
            if <int64_t>addr + 4 > memlen:
                return (3, ip, cyc - cost, loads, stores, instret, addr)
            v = regs[rs2s[ip]]
            mem[addr] = v & 0xFF
            mem[addr + 1] = (v >> 8) & 0xFF
            mem[addr + 2] = (v >> 16) & 0xFF
            mem[addr + 3] = (v >> 24) & 0xFF
            stores += 1
        elif k == 8:  # xor
            rd = rds[ip]
            if rd:
                regs[rd] = regs[rs1s[ip]] ^ regs[rs2s[ip]]
        elif k == 7:  # or
            rd = rds[ip]
            if rd:
                regs[rd] = regs[rs1s[ip]] | regs[rs2s[ip]]
        elif k == 9:  # slt
            rd = rds[ip]
            if rd:
                # xor with the sign bit maps signed order onto unsigned
                if ((regs[rs1s[ip]] ^ 0x80000000u)
                        < (regs[rs2s[ip]] ^ 0x80000000u)):
                    regs[rd] = 1
                else:
                    regs[rd] = 0
        elif k == 11:  # beq
            if regs[rs1s[ip]] == regs[rs2s[ip]]:
                ip += imms[ip]
            else:
                ip += 1
            instret += 1
            continue
        elif k == 12:  # bne
            if regs[rs1s[ip]] != regs[rs2s[ip]]:
                ip += imms[ip]
            else:
                ip += 1
            instret += 1
            continue
        elif k == 13:  # blt
            if ((regs[rs1s[ip]] ^ 0x80000000u)
                    < (regs[rs2s[ip]] ^ 0x80000000u)):
                ip += imms[ip]
            else:
                ip += 1
            instret += 1
            continue
        elif k == 14:  # jal
            rd = rds[ip]
            if rd:
                regs[rd] = <uint32_t>((ip + 1) << 2)
            ip += imms[ip]
            instret += 1
            continue
        elif k == 15:  # lui
            rd = rds[ip]
            if rd:
                regs[rd] = <uint32_t>imms[ip] << 12
        else:
            return (5, ip, cyc - cost, loads, stores, instret, 0)
        ip += 1
        instret += 1
