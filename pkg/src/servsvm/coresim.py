"""Cycle-accurate core simulator for the bit-serial target.

Base instructions execute serially, one bit per cycle over 32-bit
operands, so every base instruction pays 32 execute cycles on top of
fetch.  Loads and stores pay the external memory delay (46 read, 47
write) plus a fixed 64-cycle transaction overhead.  Instruction fetch
is itself a memory read by default; FetchPolicy.FETCH_FREE models an
ideal instruction store for isolating data-path costs.

A custom accelerator instruction stalls the core through a
valid/ready handshake: 2 cycles of register-file read setup, 32 cycles
of serial operand transfer, one cycle to assert valid, the unit's
latency, one cycle of writeback setup, then 32 cycles of serial
writeback.  Every stall is recorded as a HandshakeTrace and
trace_check validates the event geometry.

The hot interpreter loop lives in _simcore (compiled) with a pure
fallback in _simcore_py; this module owns everything around it.
"""

import array
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from . import _kernel, isa
from ._simcore_py import (
    S_CUSTOM,
    S_HALT,
    S_MAX_CYCLES,
    S_MEM_FAULT,
    S_MISALIGNED,
    S_PC_RANGE,
)
from .isa import AccelOpId, Kind

_M32 = 0xFFFFFFFF


class SimulationError(Exception):
    pass


class TraceCheckError(Exception):
    pass


class FetchPolicy(Enum):
    FETCH_IS_MEM_READ = "fetch_is_mem_read"
    FETCH_FREE = "fetch_free"


@dataclass(frozen=True)
class MemModel:
    """External memory timing, in core cycles."""

    read_cycles: int = 46
    write_cycles: int = 47
    overhead_cycles: int = 64
    fetch_policy: FetchPolicy = FetchPolicy.FETCH_IS_MEM_READ

    @property
    def load_extra(self) -> int:
        return self.read_cycles + self.overhead_cycles

    @property
    def store_extra(self) -> int:
        return self.write_cycles + self.overhead_cycles

    @property
    def fetch_cost(self) -> int:
        if self.fetch_policy is FetchPolicy.FETCH_IS_MEM_READ:
            return self.load_extra
        return 0


@dataclass(frozen=True)
class CoreCostModel:
    """Core-side cycle counts; custom-op phases sum to 68 + latency."""

    base_exec_cycles: int = 32
    pre_transfer: int = 2
    operand_transfer: int = 32
    valid_assert: int = 1
    writeback_setup: int = 1
    writeback: int = 32
    instr_overhead: int = 0

    def custom_total(self, latency: int) -> int:
        return (self.pre_transfer + self.operand_transfer
                + self.valid_assert + latency
                + self.writeback_setup + self.writeback)


@dataclass(frozen=True)
class HandshakeTrace:
    """Cycle stamps for one accelerator stall, absolute from run start."""

    op: AccelOpId
    pc: int
    latency: int
    init: int
    rf_ready_read: int
    cnt_en_start: int
    cnt_done: int
    accel_valid: int
    accel_ready: int
    rf_wreq: int
    writeback_done: int

    _FIELDS = ("init", "rf_ready_read", "cnt_en_start", "cnt_done",
               "accel_valid", "accel_ready", "rf_wreq", "writeback_done")


def make_trace(op, pc, latency, t0, cost_model=None):
    cm = cost_model or CoreCostModel()
    valid = t0 + cm.pre_transfer + cm.operand_transfer
    ready = valid + latency
    wreq = ready + cm.writeback_setup
    return HandshakeTrace(
        op=AccelOpId(op), pc=pc, latency=latency, init=t0,
        rf_ready_read=t0 + cm.pre_transfer - 1,
        cnt_en_start=t0 + cm.pre_transfer,
        cnt_done=valid - 1,
        accel_valid=valid,
        accel_ready=ready,
        rf_wreq=wreq,
        writeback_done=wreq + cm.writeback,
    )


def trace_check(trace: HandshakeTrace, cost_model=None) -> None:
    """Validate one stall's event geometry; raises TraceCheckError."""
    if trace.latency < 1:
        raise TraceCheckError(
            f"latency must be at least 1, got {trace.latency} (pc={trace.pc})")
    want = make_trace(trace.op, trace.pc, trace.latency, trace.init,
                      cost_model)
    for name in HandshakeTrace._FIELDS:
        got = getattr(trace, name)
        expect = getattr(want, name)
        if got != expect:
            raise TraceCheckError(
                f"{name}: expected cycle {expect}, got {got} "
                f"(op={trace.op.name}, pc={trace.pc})")


class InstructionBlock:
    """Instructions decoded once into flat arrays for the kernel.

    Branch and jump offsets are converted from byte deltas to
    instruction-index deltas; a custom op's funct3 rides in its imm
    slot.
    """

    def __init__(self, instructions):
        self.instructions = list(instructions)
        n = len(self.instructions)
        kinds = array.array("i", [0] * n)
        rds = array.array("i", [0] * n)
        rs1s = array.array("i", [0] * n)
        rs2s = array.array("i", [0] * n)
        imms = array.array("i", [0] * n)
        for i, ins in enumerate(self.instructions):
            kinds[i] = int(ins.kind)
            rds[i] = ins.rd
            rs1s[i] = ins.rs1
            rs2s[i] = ins.rs2
            if ins.kind in (Kind.BEQ, Kind.BNE, Kind.BLT, Kind.JAL):
                if ins.imm % 4:
                    raise SimulationError(
                        f"control offset at index {i} is not a word "
                        f"multiple: {ins.imm}")
                imms[i] = ins.imm // 4
            elif ins.kind is Kind.CUSTOM:
                imms[i] = int(ins.accel_funct3)
            else:
                imms[i] = ins.imm
        self._arrays = (kinds, rds, rs1s, rs2s, imms)

    def arrays(self):
        return self._arrays

    def __len__(self):
        return len(self.instructions)


@dataclass
class Program:
    """Instructions plus the data image the run starts from."""

    instructions: list
    data_image: bytes = b""
    data_base: int = 2048
    result_protocol: object = None
    meta: dict = field(default_factory=dict)
    _block: InstructionBlock = field(default=None, repr=False, compare=False)

    @classmethod
    def from_block(cls, block, **kwargs):
        prog = cls(instructions=block.instructions, **kwargs)
        prog._block = block
        return prog

    @property
    def block(self) -> InstructionBlock:
        if self._block is None:
            self._block = InstructionBlock(self.instructions)
        return self._block


@dataclass
class SimReport:
    total_cycles: int
    instret: int
    data_mem_accesses: int
    fetch_accesses: int
    backend: str
    predicted_class: int | None
    registers: list
    traces: list
    accel_saturations: int = 0

    _SCALARS = ("total_cycles", "instret", "data_mem_accesses",
                "fetch_accesses", "accel_saturations")

    def to_text(self) -> str:
        lines = [f"{name}: {getattr(self, name)}" for name in self._SCALARS]
        lines.append(f"backend: {self.backend}")
        pc = "none" if self.predicted_class is None else self.predicted_class
        lines.append(f"predicted_class: {pc}")
        lines.append("registers: " + " ".join(str(r) for r in self.registers))
        for t in self.traces:
            parts = [f"op={int(t.op)}", f"pc={t.pc}", f"latency={t.latency}"]
            parts += [f"{n}={getattr(t, n)}" for n in HandshakeTrace._FIELDS]
            lines.append("trace: " + " ".join(parts))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SimReport":
        scalars = {}
        backend = ""
        predicted = None
        registers = []
        traces = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            key, _, rest = line.partition(":")
            rest = rest.strip()
            if key in cls._SCALARS:
                scalars[key] = int(rest)
            elif key == "backend":
                backend = rest
            elif key == "predicted_class":
                predicted = None if rest == "none" else int(rest)
            elif key == "registers":
                registers = [int(tok) for tok in rest.split()]
            elif key == "trace":
                kv = dict(tok.split("=") for tok in rest.split())
                traces.append(HandshakeTrace(
                    op=AccelOpId(int(kv.pop("op"))),
                    **{k: int(v) for k, v in kv.items()}))
            else:
                raise ValueError(f"unrecognized report line: {line!r}")
        return cls(backend=backend, predicted_class=predicted,
                   registers=registers, traces=traces, **scalars)


class EchoPlug:
    """Test accelerator: xors operands with funct3, records every call."""

    def __init__(self, latency: int = 1):
        self.latency = latency
        self.calls = []

    def execute(self, funct3, rs1, rs2):
        self.calls.append((funct3, rs1, rs2))
        return (rs1 ^ rs2 ^ funct3) & _M32, self.latency


class Simulator:
    def __init__(self, mem_model=None, cost_model=None, plug=None,
                 mem_size: int = 8192, max_cycles: int = 10 ** 12,
                 kernel: str | None = None):
        self.mem_model = mem_model or MemModel()
        self.cost_model = cost_model or CoreCostModel()
        self.plug = plug
        self.mem_size = mem_size
        self.max_cycles = max_cycles
        if kernel is None:
            self._exec = _kernel.exec_segment
            self._backend = _kernel.kernel_backend()
        elif kernel == "py":
            from . import _simcore_py
            self._exec = _simcore_py.exec_segment
            self._backend = "py"
        elif kernel == "cython":
            from . import _simcore
            self._exec = _simcore.exec_segment
            self._backend = "cython"
        else:
            raise ValueError(f"unknown kernel {kernel!r}")

    @property
    def backend(self) -> str:
        return self._backend

    def attach(self, plug):
        self.plug = plug

    def run(self, program: Program) -> SimReport:
        mem = bytearray(self.mem_size)
        image = program.data_image
        if image:
            end = program.data_base + len(image)
            if end > self.mem_size:
                raise SimulationError(
                    f"data image ends at byte {end}, memory holds "
                    f"{self.mem_size}")
            mem[program.data_base:end] = image
        regs = array.array("I", bytes(128))
        kinds, rds, rs1s, rs2s, imms = program.block.arrays()
        mm = self.mem_model
        cm = self.cost_model
        fetch_eff = mm.fetch_cost + cm.instr_overhead
        plug = self.plug
        sat_before = getattr(plug, "saturation_events", 0) if plug else 0
        pc = 0
        cycles = 0
        instret = 0
        loads = 0
        stores = 0
        traces = []

        while True:
            status, pc, cycles, dl, ds, ret, fault = self._exec(
                kinds, rds, rs1s, rs2s, imms, regs, mem, pc, cycles,
                self.max_cycles, fetch_eff, cm.base_exec_cycles,
                mm.load_extra, mm.store_extra)
            loads += dl
            stores += ds
            instret += ret
            if status == S_HALT:
                break
            if status == S_CUSTOM:
                if plug is None:
                    raise SimulationError(
                        f"accelerator instruction at pc={pc} but no "
                        f"accelerator attached")
                t0 = cycles + fetch_eff
                funct3 = imms[pc]
                result, latency = plug.execute(
                    funct3, regs[rs1s[pc]], regs[rs2s[pc]])
                traces.append(make_trace(funct3, pc, latency, t0, cm))
                cycles = t0 + cm.custom_total(latency)
                if cycles > self.max_cycles:
                    raise SimulationError(
                        f"cycle budget exhausted at pc={pc} "
                        f"({cycles} > {self.max_cycles})")
                rd = rds[pc]
                if rd:
                    regs[rd] = result & _M32
                pc += 1
                instret += 1
                continue
            if status == S_MAX_CYCLES:
                raise SimulationError(
                    f"cycle budget exhausted at pc={pc} "
                    f"(limit {self.max_cycles})")
            if status == S_MEM_FAULT:
                raise SimulationError(
                    f"data access out of bounds at pc={pc}: "
                    f"address {fault:#x}")
            if status == S_MISALIGNED:
                raise SimulationError(
                    f"misaligned data access at pc={pc}: address {fault:#x}")
            if status == S_PC_RANGE:
                raise SimulationError(
                    f"control transfer left the program: pc={pc}")
            raise SimulationError(
                f"undecodable instruction kind at pc={pc}")

        fetches = (instret
                   if mm.fetch_policy is FetchPolicy.FETCH_IS_MEM_READ
                   else 0)
        predicted = None
        if program.result_protocol is not None:
            predicted = program.result_protocol.extract(list(regs), mem)
        sat_after = getattr(plug, "saturation_events", 0) if plug else 0
        return SimReport(
            total_cycles=cycles, instret=instret,
            data_mem_accesses=loads + stores, fetch_accesses=fetches,
            backend=self._backend, predicted_class=predicted,
            registers=list(regs), traces=traces,
            accel_saturations=sat_after - sat_before)


def run(program, mem_model=None, cost_model=None, plug=None,
        **kwargs) -> SimReport:
    sim = Simulator(mem_model=mem_model, cost_model=cost_model, plug=plug,
                    **kwargs)
    return sim.run(program)


def save_program(program: Program, asm_path, image_path=None) -> None:
    """Write assembly text; a non-empty data image goes to a sidecar
    file (the assembly path plus '.img') unless image_path says
    otherwise."""
    asm_path = Path(asm_path)
    asm_path.write_text(isa.disassemble_program(program.instructions))
    if image_path is None and program.data_image:
        image_path = asm_path.with_name(asm_path.name + ".img")
    if image_path is not None:
        Path(image_path).write_bytes(program.data_image)


def load_program(asm_path, image_path=None, data_base: int = 2048) -> Program:
    asm_path = Path(asm_path)
    instructions = isa.parse_program(asm_path.read_text())
    if image_path is None:
        sidecar = asm_path.with_name(asm_path.name + ".img")
        image_path = sidecar if sidecar.exists() else None
    image = Path(image_path).read_bytes() if image_path else b""
    return Program(instructions=instructions, data_image=image,
                   data_base=data_base)
