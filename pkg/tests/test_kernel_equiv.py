"""Both execution kernels must agree bit for bit on random programs."""

import array
import importlib.util
import random

import pytest
from progen import random_program

from servsvm import _simcore_py
from servsvm.coresim import InstructionBlock
from servsvm.isa import Instruction, Kind

HAVE_CYTHON = importlib.util.find_spec("servsvm._simcore") is not None

pytestmark = pytest.mark.skipif(
    not HAVE_CYTHON, reason="compiled kernel not built")


def drive(exec_segment, instructions, fetch=110, max_cycles=10 ** 9):
    kinds, rds, rs1s, rs2s, imms = InstructionBlock(instructions).arrays()
    regs = array.array("I", bytes(128))
    mem = bytearray(8192)
    out = exec_segment(kinds, rds, rs1s, rs2s, imms, regs, mem, 0, 0,
                       max_cycles, fetch, 32, 110, 111)
    return tuple(out), list(regs), bytes(mem)


def both():
    from servsvm import _simcore
    return _simcore_py.exec_segment, _simcore.exec_segment


def test_random_programs_identical():
    py, cy = both()
    rng = random.Random(20260816)
    for _ in range(60):
        instructions = random_program(rng, n=100)
        assert drive(py, instructions) == drive(cy, instructions)


def test_custom_stop_identical():
    py, cy = both()
    rng = random.Random(31)
    for _ in range(20):
        instructions = random_program(rng, n=20, with_branches=False)
        cut = rng.randint(0, len(instructions))
        instructions.insert(cut, Instruction(
            Kind.CUSTOM, rd=7, rs1=1, rs2=2, accel_funct3=rng.randint(0, 6)))
        assert drive(py, instructions) == drive(cy, instructions)


def test_fault_reports_identical():
    py, cy = both()
    cases = [
        [Instruction(Kind.LW, rd=1, rs1=0, imm=2)],
        [Instruction(Kind.LUI, rd=9, imm=2),
         Instruction(Kind.LW, rd=1, rs1=9, imm=0)],
        [Instruction(Kind.LUI, rd=9, imm=2),
         Instruction(Kind.SW, rs1=9, rs2=0, imm=4)],
        [Instruction(Kind.JAL, rd=0, imm=8)],
        [Instruction(Kind.BEQ, rs1=0, rs2=0, imm=-8)],
    ]
    for instructions in cases:
        assert drive(py, instructions) == drive(cy, instructions)


def test_budget_stop_identical():
    py, cy = both()
    loop = [Instruction(Kind.JAL, rd=0, imm=0)]
    assert (drive(py, loop, max_cycles=7000)
            == drive(cy, loop, max_cycles=7000))
