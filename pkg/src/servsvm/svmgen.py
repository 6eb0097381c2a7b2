"""Generates inference programs for the two execution paths.

Both paths share one data window: x3 holds 4096 and every data word i
sits at byte 2048 + 4i, reached with immediate 4i - 2048, so the whole
image must fit in 1024 words.  Feature words come first and are the
only part patched per sample; classifier weights follow; one-vs-one
programs append a score slot per classifier.

The accelerator path streams (feature word, weight word) pairs through
calc ops and reads each classifier back with res.  The software path
multiplies with a four-step shift-add loop driven by the 4-bit feature
as the multiplier, accumulates in x8, and resolves one-vs-rest with a
branchy running argmax in x12/x13.
"""

from dataclasses import dataclass

from . import mlkit
from .coresim import InstructionBlock, Program
from .isa import AccelOpId, Instruction, Kind
from .mlkit import FEATURE_LEVELS, PackedModel, QuantizedModel, Scheme

DATA_BASE = 2048

CALC_FOR_BITS = {4: AccelOpId.CALC4, 8: AccelOpId.CALC8,
                 16: AccelOpId.CALC16}
RES_FOR_BITS = {4: AccelOpId.RES4, 8: AccelOpId.RES8, 16: AccelOpId.RES16}

_M32 = 0xFFFFFFFF


def _off(word_index: int) -> int:
    imm = 4 * word_index - 2048
    if not -2048 <= imm <= 2047:
        raise ValueError(
            f"data word {word_index} falls outside the addressable window")
    return imm


def _check_features(qx, d):
    qx = [int(v) for v in qx]
    if len(qx) != d:
        raise ValueError(f"expected {d} features, got {len(qx)}")
    for v in qx:
        if not 0 <= v <= FEATURE_LEVELS:
            raise ValueError(f"feature value {v} outside 0..15")
    return qx


def vote(words, n_classes, pairs):
    """Resolve one-vs-one from the sign bits of the score words."""
    if len(words) != len(pairs):
        raise ValueError(
            f"expected {len(pairs)} score words, got {len(words)}")
    counts = [0] * n_classes
    for word, (a, b) in zip(words, pairs):
        counts[b if (word >> 31) & 1 else a] += 1
    return counts.index(max(counts))


def interpret(result_words, scheme, n_classes, pairs=None):
    """Predicted class from raw per-classifier result words."""
    scheme = Scheme(scheme)
    if scheme is Scheme.OVR:
        if len(result_words) != n_classes:
            raise ValueError(
                f"expected {n_classes} result words, got "
                f"{len(result_words)}")
        return result_words[-1] & 0xFF
    if pairs is None:
        raise ValueError("one-vs-one interpretation needs the pair list")
    return vote(result_words, n_classes, pairs)


@dataclass(frozen=True)
class RegisterResult:
    """Prediction lands in one register."""

    reg: int = 10

    def extract(self, regs, mem):
        return int(regs[self.reg])


@dataclass(frozen=True)
class MemVoteResult:
    """Per-classifier score words in memory, resolved by sign votes."""

    base: int
    n_classes: int
    pairs: tuple

    def extract(self, regs, mem):
        words = [int.from_bytes(mem[self.base + 4 * k:self.base + 4 * k + 4],
                                "little")
                 for k in range(len(self.pairs))]
        return vote(words, self.n_classes, self.pairs)


class AccelProgramFactory:
    """One instruction block per model; images patched per sample."""

    def __init__(self, packed: PackedModel):
        if packed.n_features == 0:
            raise ValueError("model has no features")
        self.packed = packed
        n_clf = packed.n_classifiers
        wpc = packed.wpc
        calc_op = CALC_FOR_BITS[packed.bits]
        res_op = RES_FOR_BITS[packed.bits]
        ovo = packed.scheme is Scheme.OVO
        weights_base = wpc
        slots_base = wpc * (1 + n_clf)

        ins = [Instruction(Kind.LUI, rd=3, imm=1),
               Instruction(Kind.CUSTOM, accel_funct3=AccelOpId.CREATE_ENV)]
        for c in range(n_clf):
            for j in range(wpc):
                ins.append(Instruction(Kind.LW, rd=5, rs1=3, imm=_off(j)))
                ins.append(Instruction(
                    Kind.LW, rd=6, rs1=3,
                    imm=_off(weights_base + c * wpc + j)))
                ins.append(Instruction(Kind.CUSTOM, rs1=5, rs2=6,
                                       accel_funct3=calc_op))
            ins.append(Instruction(Kind.CUSTOM, rd=7, accel_funct3=res_op))
            if ovo:
                ins.append(Instruction(Kind.SW, rs1=3, rs2=7,
                                       imm=_off(slots_base + c)))
        if ovo:
            proto = MemVoteResult(base=DATA_BASE + 4 * slots_base,
                                  n_classes=packed.n_classes,
                                  pairs=tuple(packed.pairs))
            n_words = slots_base + n_clf
        else:
            # mask the class id out of the final packed result word
            ins.append(Instruction(Kind.ADDI, rd=6, rs1=0, imm=255))
            ins.append(Instruction(Kind.AND, rd=10, rs1=7, rs2=6))
            proto = RegisterResult(reg=10)
            n_words = slots_base

        image = bytearray(4 * n_words)
        for c, words in enumerate(packed.weight_words):
            for j, word in enumerate(words):
                idx = 4 * (weights_base + c * wpc + j)
                image[idx:idx + 4] = int(word).to_bytes(4, "little")
        self._image = image
        self._block = InstructionBlock(ins)
        self._protocol = proto
        self.custom_ops = 1 + n_clf * (wpc + 1)

    def program(self, sample_features) -> Program:
        qx = _check_features(sample_features, self.packed.n_features)
        img = bytearray(self._image)
        for j, word in enumerate(self.packed.feature_words(qx)):
            img[4 * j:4 * j + 4] = word.to_bytes(4, "little")
        return Program.from_block(
            self._block, data_image=bytes(img), data_base=DATA_BASE,
            result_protocol=self._protocol,
            meta={"path": "accel", "custom_ops": self.custom_ops})


# one shift-add step per multiplier bit: isolate the bit, turn it into
# an all-ones mask, conditionally add the shifted weight, advance both
_MUL_STEP = [
    (Kind.AND, 9, 6, 5),
    (Kind.SUB, 11, 0, 9),
    (Kind.AND, 9, 7, 11),
    (Kind.ADD, 8, 8, 9),
    (Kind.SLL, 7, 7, 5),
    (Kind.SRL, 6, 6, 5),
]


class BaselineProgramFactory:
    """Pure-software path using only the base instruction set."""

    def __init__(self, qmodel: QuantizedModel):
        d = qmodel.n_features
        if d == 0:
            raise ValueError("model has no features")
        self.qmodel = qmodel
        n_clf = qmodel.n_classifiers
        ovo = qmodel.scheme is Scheme.OVO
        weights_base = d
        slots_base = d + n_clf * (d + 1)

        ins = [Instruction(Kind.LUI, rd=3, imm=1),
               Instruction(Kind.ADDI, rd=4, rs1=0, imm=4),
               Instruction(Kind.ADDI, rd=5, rs1=0, imm=1)]
        for c in range(n_clf):
            ins.append(Instruction(Kind.ADD, rd=8, rs1=0, rs2=0))
            for i in range(d):
                ins.append(Instruction(Kind.LW, rd=6, rs1=3, imm=_off(i)))
                ins.append(Instruction(
                    Kind.LW, rd=7, rs1=3,
                    imm=_off(weights_base + c * (d + 1) + i)))
                for _ in range(4):
                    for kind, rd, rs1, rs2 in _MUL_STEP:
                        ins.append(Instruction(kind, rd=rd, rs1=rs1,
                                               rs2=rs2))
            # bias contributes B*15 = (B<<4) - B
            ins.append(Instruction(
                Kind.LW, rd=7, rs1=3,
                imm=_off(weights_base + c * (d + 1) + d)))
            ins.append(Instruction(Kind.SLL, rd=9, rs1=7, rs2=4))
            ins.append(Instruction(Kind.SUB, rd=9, rs1=9, rs2=7))
            ins.append(Instruction(Kind.ADD, rd=8, rs1=8, rs2=9))
            if ovo:
                ins.append(Instruction(Kind.SW, rs1=3, rs2=8,
                                       imm=_off(slots_base + c)))
            elif c == 0:
                ins.append(Instruction(Kind.ADD, rd=12, rs1=8, rs2=0))
                ins.append(Instruction(Kind.ADDI, rd=13, rs1=0, imm=0))
            else:
                # keep the earlier best unless strictly beaten
                ins.append(Instruction(Kind.BLT, rs1=12, rs2=8, imm=8))
                ins.append(Instruction(Kind.JAL, rd=0, imm=12))
                ins.append(Instruction(Kind.ADD, rd=12, rs1=8, rs2=0))
                ins.append(Instruction(Kind.ADDI, rd=13, rs1=0, imm=c))
        if ovo:
            proto = MemVoteResult(base=DATA_BASE + 4 * slots_base,
                                  n_classes=qmodel.n_classes,
                                  pairs=tuple(qmodel.pairs))
            n_words = slots_base + n_clf
        else:
            ins.append(Instruction(Kind.ADD, rd=10, rs1=13, rs2=0))
            proto = RegisterResult(reg=10)
            n_words = slots_base

        image = bytearray(4 * n_words)
        for c in range(n_clf):
            for i in range(d):
                idx = 4 * (weights_base + c * (d + 1) + i)
                word = int(qmodel.W[c][i]) & _M32
                image[idx:idx + 4] = word.to_bytes(4, "little")
            idx = 4 * (weights_base + c * (d + 1) + d)
            word = int(qmodel.B[c]) & _M32
            image[idx:idx + 4] = word.to_bytes(4, "little")
        self._image = image
        self._block = InstructionBlock(ins)
        self._protocol = proto
        self.custom_ops = 0

    def program(self, sample_features) -> Program:
        qx = _check_features(sample_features, self.qmodel.n_features)
        img = bytearray(self._image)
        for i, v in enumerate(qx):
            img[4 * i:4 * i + 4] = v.to_bytes(4, "little")
        return Program.from_block(
            self._block, data_image=bytes(img), data_base=DATA_BASE,
            result_protocol=self._protocol,
            meta={"path": "baseline", "custom_ops": 0})


def gen_accel(qmodel: QuantizedModel, sample_features) -> Program:
    """One-shot accelerator program for a single sample."""
    return AccelProgramFactory(mlkit.pack(qmodel)).program(sample_features)


def gen_baseline(qmodel: QuantizedModel, sample_features) -> Program:
    """One-shot software program for a single sample."""
    return BaselineProgramFactory(qmodel).program(sample_features)


def shift_add_mul(w: int, x: int) -> int:
    """Reference shift-add multiply with an explicit sign fixup.

    Accumulates |w| shifted by each set bit of |x|, then corrects the
    sign, e.g. shift_add_mul(-5, 3) == -15.  The emitted loop gets the
    same result without the fixup by letting two's complement wrap;
    tests hold the two together.
    """
    neg = (w < 0) != (x < 0)
    mw, mx = abs(w), abs(x)
    acc = 0
    shift = 0
    while mx:
        if mx & 1:
            acc += mw << shift
        mx >>= 1
        shift += 1
    return -acc if neg else acc
