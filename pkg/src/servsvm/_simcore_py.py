"""Pure-Python kernel that executes decoded base-ISA segments.

The simulator re-enters this loop between custom-op stalls.  Semantics
and the return contract are mirrored exactly by the compiled kernel in
_simcore.pyx; keep the two in lock step.

exec_segment returns (status, pc, cycles, loads, stores, instret,
fault_addr).  pc counts in instruction indices, not bytes.  On a fault
the reported cycles and instret exclude the faulting instruction and
pc points at it.
"""

import struct

S_HALT = 0
S_CUSTOM = 1
S_MAX_CYCLES = 2
S_MEM_FAULT = 3
S_MISALIGNED = 4
S_BAD_KIND = 5
S_PC_RANGE = 6

_M32 = 0xFFFFFFFF
_SIGN = 0x80000000


def exec_segment(kinds, rds, rs1s, rs2s, imms, regs, mem, pc, cycles,
                 max_cycles, fetch_cost, base_exec, load_extra,
                 store_extra):
    n = len(kinds)
    memlen = len(mem)
    loads = 0
    stores = 0
    instret = 0
    alu_cost = fetch_cost + base_exec
    lw_cost = alu_cost + load_extra
    sw_cost = alu_cost + store_extra
    unpack = struct.unpack_from
    pack = struct.pack_into

    while True:
        if pc == n:
            return S_HALT, pc, cycles, loads, stores, instret, 0
        if pc < 0 or pc > n:
            return S_PC_RANGE, pc, cycles, loads, stores, instret, 0
        k = kinds[pc]
        if k == 16:
            return S_CUSTOM, pc, cycles, loads, stores, instret, 0
        if k == 0:
            cost = lw_cost
        elif k == 1:
            cost = sw_cost
        else:
            cost = alu_cost
        if cycles + cost > max_cycles:
            return S_MAX_CYCLES, pc, cycles, loads, stores, instret, 0
        cycles += cost

        # dispatch ordered by dynamic frequency in generated programs
        if k == 6:  # and
            rd = rds[pc]
            if rd:
                regs[rd] = regs[rs1s[pc]] & regs[rs2s[pc]]
        elif k == 2:  # add
            rd = rds[pc]
            if rd:
                regs[rd] = (regs[rs1s[pc]] + regs[rs2s[pc]]) & _M32
        elif k == 3:  # sub
            rd = rds[pc]
            if rd:
                regs[rd] = (regs[rs1s[pc]] - regs[rs2s[pc]]) & _M32
        elif k == 4:  # sll
            rd = rds[pc]
            if rd:
                regs[rd] = (regs[rs1s[pc]] << (regs[rs2s[pc]] & 31)) & _M32
        elif k == 5:  # srl
            rd = rds[pc]
            if rd:
                regs[rd] = regs[rs1s[pc]] >> (regs[rs2s[pc]] & 31)
        elif k == 0:  # lw
            addr = (regs[rs1s[pc]] + imms[pc]) & _M32
            if addr & 3:
                return (S_MISALIGNED, pc, cycles - cost, loads, stores,
                        instret, addr)
            if addr + 4 > memlen:
                return (S_MEM_FAULT, pc, cycles - cost, loads, stores,
                        instret, addr)
            rd = rds[pc]
            if rd:
                regs[rd] = unpack("<I", mem, addr)[0]
            loads += 1
        elif k == 10:  # addi
            rd = rds[pc]
            if rd:
                regs[rd] = (regs[rs1s[pc]] + imms[pc]) & _M32
        elif k == 1:  # sw
            addr = (regs[rs1s[pc]] + imms[pc]) & _M32
            if addr & 3:
                return (S_MISALIGNED, pc, cycles - cost, loads, stores,
                        instret, addr)
            if addr + 4 > memlen:
                return (S_MEM_FAULT, pc, cycles - cost, loads, stores,
                        instret, addr)
            pack("<I", mem, addr, regs[rs2s[pc]])
            stores += 1
        elif k == 8:  # xor
            rd = rds[pc]
            if rd:
                regs[rd] = regs[rs1s[pc]] ^ regs[rs2s[pc]]
        elif k == 7:  # or
            rd = rds[pc]
            if rd:
                regs[rd] = regs[rs1s[pc]] | regs[rs2s[pc]]
        elif k == 9:  # slt
            rd = rds[pc]
            if rd:
                # xor with the sign bit maps signed order onto unsigned
                regs[rd] = (1 if (regs[rs1s[pc]] ^ _SIGN)
                            < (regs[rs2s[pc]] ^ _SIGN) else 0)
        elif k == 11:  # beq
            pc += imms[pc] if regs[rs1s[pc]] == regs[rs2s[pc]] else 1
            instret += 1
            continue
        elif k == 12:  # bne
            pc += imms[pc] if regs[rs1s[pc]] != regs[rs2s[pc]] else 1
            instret += 1
            continue
        elif k == 13:  # blt
            pc += (imms[pc] if (regs[rs1s[pc]] ^ _SIGN)
                   < (regs[rs2s[pc]] ^ _SIGN) else 1)
            instret += 1
            continue
        elif k == 14:  # jal
            rd = rds[pc]
            if rd:
                regs[rd] = ((pc + 1) << 2) & _M32
            pc += imms[pc]
            instret += 1
            continue
        elif k == 15:  # lui
            rd = rds[pc]
            if rd:
                regs[rd] = (imms[pc] << 12) & _M32
        else:
            return (S_BAD_KIND, pc, cycles - cost, loads, stores,
                    instret, 0)
        pc += 1
        instret += 1
