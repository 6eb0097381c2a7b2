"""Reference interpreter written independently of the package kernel.

Deliberately different construction: the pc walks in bytes, registers
hold signed Python ints, and cycles are summed per instruction from
first principles.  test_coresim drives it against the simulator on
randomized programs.
"""

from servsvm.isa import Kind


def _u32(x):
    return x & 0xFFFFFFFF


def _s32(x):
    x &= 0xFFFFFFFF
    return x - (1 << 32) if x >= (1 << 31) else x


class RefCore:
    def __init__(self, mem_size, fetch, read=46, write=47, overhead=64,
                 base=32):
        self.regs = [0] * 32
        self.mem = bytearray(mem_size)
        self.cycles = 0
        self.fetch = fetch
        self.base = base
        self.load_cost = read + overhead
        self.store_cost = write + overhead
        self.loads = 0
        self.stores = 0
        self.instret = 0

    def _set(self, rd, value):
        if rd != 0:
            self.regs[rd] = _s32(value)

    def run(self, instructions, max_steps=10 ** 6):
        pc = 0
        end = 4 * len(instructions)
        for _ in range(max_steps):
            if pc == end:
                return
            assert 0 <= pc < end and pc % 4 == 0, f"pc left program: {pc}"
            ins = instructions[pc // 4]
            k = ins.kind
            s1 = self.regs[ins.rs1]
            s2 = self.regs[ins.rs2]
            self.cycles += self.fetch + self.base
            self.instret += 1
            if k is Kind.ADD:
                self._set(ins.rd, s1 + s2)
            elif k is Kind.SUB:
                self._set(ins.rd, s1 - s2)
            elif k is Kind.AND:
                self._set(ins.rd, _u32(s1) & _u32(s2))
            elif k is Kind.OR:
                self._set(ins.rd, _u32(s1) | _u32(s2))
            elif k is Kind.XOR:
                self._set(ins.rd, _u32(s1) ^ _u32(s2))
            elif k is Kind.SLL:
                self._set(ins.rd, _u32(s1) << (_u32(s2) & 31))
            elif k is Kind.SRL:
                self._set(ins.rd, _u32(s1) >> (_u32(s2) & 31))
            elif k is Kind.SLT:
                self._set(ins.rd, 1 if s1 < s2 else 0)
            elif k is Kind.ADDI:
                self._set(ins.rd, s1 + ins.imm)
            elif k is Kind.LUI:
                self._set(ins.rd, ins.imm << 12)
            elif k is Kind.LW:
                addr = _u32(s1 + ins.imm)
                word = int.from_bytes(self.mem[addr:addr + 4], "little")
                self._set(ins.rd, word)
                self.cycles += self.load_cost
                self.loads += 1
            elif k is Kind.SW:
                addr = _u32(s1 + ins.imm)
                self.mem[addr:addr + 4] = _u32(s2).to_bytes(4, "little")
                self.cycles += self.store_cost
                self.stores += 1
            elif k is Kind.BEQ:
                pc += ins.imm if s1 == s2 else 4
                continue
            elif k is Kind.BNE:
                pc += ins.imm if s1 != s2 else 4
                continue
            elif k is Kind.BLT:
                pc += ins.imm if s1 < s2 else 4
                continue
            elif k is Kind.JAL:
                self._set(ins.rd, pc + 4)
                pc += ins.imm
                continue
            else:
                raise AssertionError(f"reference core cannot run {k}")
            pc += 4
        raise AssertionError("reference run did not terminate")
