"""Instruction encoding, decoding, and disassembly.

Covers exactly the RV32I instructions the program generators emit plus
the custom accelerator instructions. Custom instructions reuse the
standard R-type opcode (0b0110011) with funct7 = 1; funct3 carries the
accelerator operation ID. On that opcode, funct7 values other than
0x00, 0x20, and 0x01 are reserved for future accelerators and decode
to an error.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass


class IsaError(ValueError):
    pass


class EncodingError(IsaError):
    pass


class DecodingError(IsaError):
    pass


class Kind(enum.IntEnum):
    """Instruction kinds; numeric values double as kernel dispatch codes."""

    LW = 0
    SW = 1
    ADD = 2
    SUB = 3
    SLL = 4
    SRL = 5
    AND = 6
    OR = 7
    XOR = 8
    SLT = 9
    ADDI = 10
    BEQ = 11
    BNE = 12
    BLT = 13
    JAL = 14
    LUI = 15
    CUSTOM = 16


class AccelOpId(enum.IntEnum):
    """Accelerator operation IDs carried in funct3. Value 7 is reserved."""

    CREATE_ENV = 0
    CALC4 = 1
    CALC8 = 2
    CALC16 = 3
    RES4 = 4
    RES8 = 5
    RES16 = 6


OPC_LOAD = 0b0000011
OPC_OP_IMM = 0b0010011
OPC_STORE = 0b0100011
OPC_OP = 0b0110011
OPC_LUI = 0b0110111
OPC_BRANCH = 0b1100011
OPC_JAL = 0b1101111

ACCEL_FUNCT7 = 0b0000001

# R-type funct3/funct7 pairs for the base subset.
_R_FUNCTS = {
    Kind.ADD: (0b000, 0x00),
    Kind.SUB: (0b000, 0x20),
    Kind.SLL: (0b001, 0x00),
    Kind.SLT: (0b010, 0x00),
    Kind.XOR: (0b100, 0x00),
    Kind.SRL: (0b101, 0x00),
    Kind.OR: (0b110, 0x00),
    Kind.AND: (0b111, 0x00),
}
_R_FUNCTS_INV = {v: k for k, v in _R_FUNCTS.items()}

_BRANCH_FUNCT3 = {Kind.BEQ: 0b000, Kind.BNE: 0b001, Kind.BLT: 0b100}
_BRANCH_FUNCT3_INV = {v: k for k, v in _BRANCH_FUNCT3.items()}

MNEMONICS = {
    Kind.LW: "lw",
    Kind.SW: "sw",
    Kind.ADD: "add",
    Kind.SUB: "sub",
    Kind.SLL: "sll",
    Kind.SRL: "srl",
    Kind.AND: "and",
    Kind.OR: "or",
    Kind.XOR: "xor",
    Kind.SLT: "slt",
    Kind.ADDI: "addi",
    Kind.BEQ: "beq",
    Kind.BNE: "bne",
    Kind.BLT: "blt",
    Kind.JAL: "jal",
    Kind.LUI: "lui",
}

ACCEL_MNEMONICS = {
    AccelOpId.CREATE_ENV: "sv_create_env",
    AccelOpId.CALC4: "sv_calc4",
    AccelOpId.CALC8: "sv_calc8",
    AccelOpId.CALC16: "sv_calc16",
    AccelOpId.RES4: "sv_res4",
    AccelOpId.RES8: "sv_res8",
    AccelOpId.RES16: "sv_res16",
}
_ACCEL_MNEMONICS_INV = {v: k for k, v in ACCEL_MNEMONICS.items()}
_MNEMONICS_INV = {v: k for k, v in MNEMONICS.items()}


@dataclass(frozen=True)
class Instruction:
    """One decoded instruction.

    imm is the sign-extended immediate where the format has one (byte
    offsets for branches and jumps, the raw 20-bit field for lui).
    accel_funct3 is present exactly for CUSTOM instructions.
    """

    kind: Kind
    rd: int = 0
    rs1: int = 0
    rs2: int = 0
    imm: int = 0
    accel_funct3: AccelOpId | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        for name in ("rd", "rs1", "rs2"):
            v = getattr(self, name)
            if not 0 <= v < 32:
                raise EncodingError(f"register index out of range: {name}={v}")
        if self.kind is Kind.CUSTOM:
            if self.accel_funct3 is None:
                raise EncodingError("custom instruction needs accel_funct3")
            object.__setattr__(
                self, "accel_funct3", AccelOpId(self.accel_funct3)
            )
        elif self.accel_funct3 is not None:
            raise EncodingError("accel_funct3 only valid on custom kind")


def _check_range(imm, lo, hi, what):
    if not lo <= imm <= hi:
        raise EncodingError(f"{what} immediate out of range: {imm}")


def _imm_i(imm):
    _check_range(imm, -2048, 2047, "I-type")
    return (imm & 0xFFF) << 20


def _imm_s(imm):
    _check_range(imm, -2048, 2047, "S-type")
    v = imm & 0xFFF
    return ((v >> 5) << 25) | ((v & 0x1F) << 7)


def _imm_b(imm):
    _check_range(imm, -4096, 4094, "B-type")
    if imm & 1:
        raise EncodingError(f"branch offset must be even: {imm}")
    v = imm & 0x1FFF
    return (
        ((v >> 12) << 31)
        | (((v >> 5) & 0x3F) << 25)
        | (((v >> 1) & 0xF) << 8)
        | (((v >> 11) & 0x1) << 7)
    )


def _imm_j(imm):
    _check_range(imm, -1048576, 1048574, "J-type")
    if imm & 1:
        raise EncodingError(f"jump offset must be even: {imm}")
    v = imm & 0x1FFFFF
    return (
        ((v >> 20) << 31)
        | (((v >> 1) & 0x3FF) << 21)
        | (((v >> 11) & 0x1) << 20)
        | (((v >> 12) & 0xFF) << 12)
    )


def _sext(value, bits):
    sign = 1 << (bits - 1)
    return (value & (sign - 1)) - (value & sign)


def encode(instr: Instruction) -> int:
    """Encode one instruction to its 32-bit word."""
    k = instr.kind
    rd, rs1, rs2 = instr.rd, instr.rs1, instr.rs2
    if k is Kind.CUSTOM:
        return (
            (ACCEL_FUNCT7 << 25)
            | (rs2 << 20)
            | (rs1 << 15)
            | (int(instr.accel_funct3) << 12)
            | (rd << 7)
            | OPC_OP
        )
    if k in _R_FUNCTS:
        f3, f7 = _R_FUNCTS[k]
        return (f7 << 25) | (rs2 << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | OPC_OP
    if k is Kind.ADDI:
        return _imm_i(instr.imm) | (rs1 << 15) | (0b000 << 12) | (rd << 7) | OPC_OP_IMM
    if k is Kind.LW:
        return _imm_i(instr.imm) | (rs1 << 15) | (0b010 << 12) | (rd << 7) | OPC_LOAD
    if k is Kind.SW:
        return _imm_s(instr.imm) | (rs2 << 20) | (rs1 << 15) | (0b010 << 12) | OPC_STORE
    if k in _BRANCH_FUNCT3:
        f3 = _BRANCH_FUNCT3[k]
        return _imm_b(instr.imm) | (rs2 << 20) | (rs1 << 15) | (f3 << 12) | OPC_BRANCH
    if k is Kind.JAL:
        return _imm_j(instr.imm) | (rd << 7) | OPC_JAL
    if k is Kind.LUI:
        _check_range(instr.imm, 0, 0xFFFFF, "U-type")
        return (instr.imm << 12) | (rd << 7) | OPC_LUI
    raise EncodingError(f"cannot encode kind {k!r}")


def decode(word: int) -> Instruction:
    """Decode one 32-bit word to an Instruction."""
    if not 0 <= word < (1 << 32):
        raise DecodingError(f"word out of 32-bit range: {word:#x}")
    opcode = word & 0x7F
    rd = (word >> 7) & 0x1F
    funct3 = (word >> 12) & 0x7
    rs1 = (word >> 15) & 0x1F
    rs2 = (word >> 20) & 0x1F
    funct7 = (word >> 25) & 0x7F

    if opcode == OPC_OP:
        if funct7 == ACCEL_FUNCT7:
            if funct3 == 7:
                raise DecodingError(
                    "reserved accelerator operation (funct3=7)"
                )
            return Instruction(
                Kind.CUSTOM, rd=rd, rs1=rs1, rs2=rs2,
                accel_funct3=AccelOpId(funct3),
            )
        if funct7 not in (0x00, 0x20):
            raise DecodingError(
                f"reserved accelerator ID (funct7={funct7:#04x})"
            )
        kind = _R_FUNCTS_INV.get((funct3, funct7))
        if kind is None:
            raise DecodingError(
                f"unsupported R-type operation (funct3={funct3}, funct7={funct7:#04x})"
            )
        return Instruction(kind, rd=rd, rs1=rs1, rs2=rs2)
    if opcode == OPC_OP_IMM:
        if funct3 != 0b000:
            raise DecodingError(f"unsupported OP-IMM funct3={funct3}")
        return Instruction(Kind.ADDI, rd=rd, rs1=rs1, imm=_sext(word >> 20, 12))
    if opcode == OPC_LOAD:
        if funct3 != 0b010:
            raise DecodingError(f"unsupported load width funct3={funct3}")
        return Instruction(Kind.LW, rd=rd, rs1=rs1, imm=_sext(word >> 20, 12))
    if opcode == OPC_STORE:
        if funct3 != 0b010:
            raise DecodingError(f"unsupported store width funct3={funct3}")
        imm = _sext(((word >> 25) << 5) | rd, 12)
        return Instruction(Kind.SW, rs1=rs1, rs2=rs2, imm=imm)
    if opcode == OPC_BRANCH:
        kind = _BRANCH_FUNCT3_INV.get(funct3)
        if kind is None:
            raise DecodingError(f"unsupported branch funct3={funct3}")
        imm = _sext(
            (((word >> 31) & 0x1) << 12)
            | (((word >> 7) & 0x1) << 11)
            | (((word >> 25) & 0x3F) << 5)
            | (((word >> 8) & 0xF) << 1),
            13,
        )
        return Instruction(kind, rs1=rs1, rs2=rs2, imm=imm)
    if opcode == OPC_JAL:
        imm = _sext(
            (((word >> 31) & 0x1) << 20)
            | (((word >> 12) & 0xFF) << 12)
            | (((word >> 20) & 0x1) << 11)
            | (((word >> 21) & 0x3FF) << 1),
            21,
        )
        return Instruction(Kind.JAL, rd=rd, imm=imm)
    if opcode == OPC_LUI:
        return Instruction(Kind.LUI, rd=rd, imm=word >> 12)
    raise DecodingError(f"unsupported opcode {opcode:#04x}")


def encode_program(instrs) -> list[int]:
    return [encode(i) for i in instrs]


def decode_program(words) -> list[Instruction]:
    return [decode(w) for w in words]


def disassemble(instr: Instruction) -> str:
    """One-line textual form; parse_line inverts it."""
    k = instr.kind
    if k is Kind.CUSTOM:
        m = ACCEL_MNEMONICS[instr.accel_funct3]
        return f"{m} x{instr.rd}, x{instr.rs1}, x{instr.rs2}"
    m = MNEMONICS[k]
    if k is Kind.LW:
        return f"lw x{instr.rd}, {instr.imm}(x{instr.rs1})"
    if k is Kind.SW:
        return f"sw x{instr.rs2}, {instr.imm}(x{instr.rs1})"
    if k is Kind.ADDI:
        return f"addi x{instr.rd}, x{instr.rs1}, {instr.imm}"
    if k in _BRANCH_FUNCT3:
        return f"{m} x{instr.rs1}, x{instr.rs2}, {instr.imm}"
    if k is Kind.JAL:
        return f"jal x{instr.rd}, {instr.imm}"
    if k is Kind.LUI:
        return f"lui x{instr.rd}, {instr.imm}"
    return f"{m} x{instr.rd}, x{instr.rs1}, x{instr.rs2}"


def disassemble_program(instrs) -> str:
    return "\n".join(disassemble(i) for i in instrs) + "\n"


_MEM_OPERAND = re.compile(r"^(-?\d+)\(x(\d+)\)$")


def _reg(tok):
    if not tok.startswith("x"):
        raise IsaError(f"expected register, got {tok!r}")
    v = int(tok[1:])
    if not 0 <= v < 32:
        raise IsaError(f"register out of range: {tok}")
    return v


def parse_line(line: str) -> Instruction:
    """Parse one disassembly line back to an Instruction."""
    parts = line.replace(",", " ").split()
    if not parts:
        raise IsaError("empty line")
    m = parts[0].lower()
    ops = parts[1:]
    if m in _ACCEL_MNEMONICS_INV:
        if len(ops) != 3:
            raise IsaError(f"{m} expects 3 operands")
        return Instruction(
            Kind.CUSTOM, rd=_reg(ops[0]), rs1=_reg(ops[1]), rs2=_reg(ops[2]),
            accel_funct3=_ACCEL_MNEMONICS_INV[m],
        )
    kind = _MNEMONICS_INV.get(m)
    if kind is None:
        raise IsaError(f"unknown mnemonic {m!r}")
    if kind in (Kind.LW, Kind.SW):
        if len(ops) != 2:
            raise IsaError(f"{m} expects 2 operands")
        mo = _MEM_OPERAND.match(ops[1])
        if not mo:
            raise IsaError(f"bad memory operand {ops[1]!r}")
        imm, base = int(mo.group(1)), int(mo.group(2))
        if kind is Kind.LW:
            return Instruction(Kind.LW, rd=_reg(ops[0]), rs1=base, imm=imm)
        return Instruction(Kind.SW, rs2=_reg(ops[0]), rs1=base, imm=imm)
    if kind is Kind.ADDI:
        return Instruction(
            Kind.ADDI, rd=_reg(ops[0]), rs1=_reg(ops[1]), imm=int(ops[2], 0)
        )
    if kind in _BRANCH_FUNCT3:
        return Instruction(
            kind, rs1=_reg(ops[0]), rs2=_reg(ops[1]), imm=int(ops[2], 0)
        )
    if kind is Kind.JAL:
        return Instruction(Kind.JAL, rd=_reg(ops[0]), imm=int(ops[1], 0))
    if kind is Kind.LUI:
        return Instruction(Kind.LUI, rd=_reg(ops[0]), imm=int(ops[1], 0))
    if len(ops) != 3:
        raise IsaError(f"{m} expects 3 operands")
    return Instruction(kind, rd=_reg(ops[0]), rs1=_reg(ops[1]), rs2=_reg(ops[2]))


def parse_program(text: str) -> list[Instruction]:
    """Parse a disassembly listing; '#' starts a comment."""
    out = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(parse_line(line))
    return out
