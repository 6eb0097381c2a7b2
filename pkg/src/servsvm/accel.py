"""Bit-exact functional model of the SVM co-processor.

The processing element holds eight parallel 4x4 unsigned multipliers.
A packed operand pair feeds them one of three ways: eight 4-bit
weights (one multiplier each), four 8-bit weights (two multipliers
each, output shifts 0/4), or two 16-bit weights (four multipliers
each, shifts 0/4/8/12). Weights arrive in two's complement, are
converted to sign and magnitude per whole weight, and the magnitude is
split into nibbles for the multipliers. Accumulation and the running
argmax live in four registers: cur_sum, cur_id, max_sum, max_id.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, replace

from .isa import AccelOpId


class SaturationWarning(UserWarning):
    """Most negative two's-complement weight clamped to the positive max."""


class AccelOverflowError(RuntimeError):
    pass


class TooManyClassifiersError(RuntimeError):
    pass


class WeightMode(enum.Enum):
    W4 = 4
    W8 = 8
    W16 = 16

    @property
    def bits(self):
        return self.value

    @property
    def lanes(self):
        """Weights per 32-bit word."""
        return 32 // self.value

    @property
    def nibbles_per_weight(self):
        return self.value // 4


# All eight multipliers are used in every mode.
for _m in WeightMode:
    assert _m.lanes * _m.nibbles_per_weight == 8

MODE_FOR_CALC = {
    AccelOpId.CALC4: WeightMode.W4,
    AccelOpId.CALC8: WeightMode.W8,
    AccelOpId.CALC16: WeightMode.W16,
}

# Multiplier output shifts, indexed by multiplier position.
PE_SHIFTS = {
    WeightMode.W4: (0, 0, 0, 0, 0, 0, 0, 0),
    WeightMode.W8: (0, 4, 0, 4, 0, 4, 0, 4),
    WeightMode.W16: (0, 4, 8, 12, 0, 4, 8, 12),
}

_SUM_MIN = -(1 << 31)
_SUM_MAX = (1 << 31) - 1


@dataclass(frozen=True)
class AccelState:
    """The accelerator's architectural registers."""

    cur_sum: int = 0
    cur_id: int = 0
    max_sum: int = 0
    max_id: int = 0
    has_result: bool = False


@dataclass(frozen=True)
class PackedResult:
    """Finalization result word: sign in bit 31, class ID in bits 7..0."""

    word: int

    def __post_init__(self):
        if self.word & 0x7FFFFF00:
            raise ValueError(f"reserved result bits set: {self.word:#010x}")

    @property
    def sign_bit(self):
        return self.word >> 31

    @property
    def class_id(self):
        return self.word & 0xFF


def _sign_mag(field, bits):
    """(sign, magnitude, saturated) for a two's-complement field."""
    sign_bit = 1 << (bits - 1)
    if field & sign_bit:
        value = field - (1 << bits)
        if value == -sign_bit:
            return 1, sign_bit - 1, True
        return 1, -value, False
    return 0, field, False


def to_sign_magnitude(weight_field: int, mode: WeightMode):
    """Split a weight into (sign, magnitude nibbles, low nibble first).

    Accepts the field either as a signed value or as its raw
    two's-complement bit pattern. The most negative value has no
    magnitude counterpart and saturates with a SaturationWarning.
    """
    bits = mode.bits
    lo, hi = -(1 << (bits - 1)), (1 << bits) - 1
    if not lo <= weight_field <= hi:
        raise ValueError(f"weight field out of {bits}-bit range: {weight_field}")
    sign, mag, saturated = _sign_mag(weight_field & ((1 << bits) - 1), bits)
    if saturated:
        warnings.warn(
            f"most negative {bits}-bit weight saturated to {mag}",
            SaturationWarning,
            stacklevel=2,
        )
    nibbles = [(mag >> (4 * j)) & 0xF for j in range(mode.nibbles_per_weight)]
    return sign, nibbles


def unpack_operands(rs1: int, rs2: int, mode: WeightMode):
    """Expand packed words to per-multiplier inputs.

    Feature k sits in rs1 nibble k; weight k occupies rs2 lane k. Each
    weight's nibbles fan out to adjacent multipliers, every one fed
    that weight's feature. Returns (features, nibbles, signs,
    saturated) with the first three of length 8.
    """
    lanes = mode.lanes
    npw = mode.nibbles_per_weight
    bits = mode.bits
    mask = (1 << bits) - 1
    features = [0] * 8
    nibbles = [0] * 8
    signs = [0] * 8
    saturated = False
    for k in range(lanes):
        f = (rs1 >> (4 * k)) & 0xF
        field = (rs2 >> (bits * k)) & mask
        sign, mag, sat = _sign_mag(field, bits)
        saturated = saturated or sat
        for j in range(npw):
            i = npw * k + j
            features[i] = f
            nibbles[i] = (mag >> (4 * j)) & 0xF
            signs[i] = sign
    return features, nibbles, signs, saturated


def pe_execute(features, weight_nibbles, signs, mode: WeightMode) -> int:
    """Signed contribution of all eight multipliers for one word pair."""
    if not (len(features) == len(weight_nibbles) == len(signs) == 8):
        raise ValueError("processing element expects eight of each input")
    shifts = PE_SHIFTS[mode]
    total = 0
    for i in range(8):
        term = (features[i] * weight_nibbles[i]) << shifts[i]
        total += -term if signs[i] else term
    return total


def _calc_raw(state: AccelState, rs1: int, rs2: int, mode: WeightMode):
    features, nibbles, signs, saturated = unpack_operands(rs1, rs2, mode)
    new_sum = state.cur_sum + pe_execute(features, nibbles, signs, mode)
    if not _SUM_MIN <= new_sum <= _SUM_MAX:
        raise AccelOverflowError(f"accumulator overflow: {new_sum}")
    return replace(state, cur_sum=new_sum), saturated


def calc(state: AccelState, rs1: int, rs2: int, mode: WeightMode) -> AccelState:
    """Accumulate one packed word pair into cur_sum."""
    new_state, saturated = _calc_raw(state, rs1, rs2, mode)
    if saturated:
        warnings.warn(
            f"most negative {mode.bits}-bit weight saturated",
            SaturationWarning,
            stacklevel=2,
        )
    return new_state


def res(state: AccelState, mode: WeightMode | None = None):
    """Finalize the current classifier.

    Updates the running maximum on strictly-greater, so ties keep the
    earlier classifier; the first finalization captures
    unconditionally. Returns (PackedResult, new state). The mode
    argument only mirrors the three instruction aliases.
    """
    new_id = state.cur_id + 1
    if new_id > 255:
        raise TooManyClassifiersError("too many classifiers: cur_id past 255")
    sign = 1 if state.cur_sum < 0 else 0
    if not state.has_result or state.cur_sum > state.max_sum:
        max_sum, max_id = state.cur_sum, state.cur_id
    else:
        max_sum, max_id = state.max_sum, state.max_id
    word = (sign << 31) | (max_id & 0xFF)
    new_state = AccelState(
        cur_sum=0, cur_id=new_id, max_sum=max_sum, max_id=max_id, has_result=True
    )
    return PackedResult(word), new_state


def create_env(state: AccelState | None = None) -> AccelState:
    """Zero every register; idempotent."""
    return AccelState()


DEFAULT_LATENCY = 1


def compute_latency(op: AccelOpId, overrides=None) -> int:
    """Cycles between valid and ready for one operation; default 1."""
    if overrides:
        return int(overrides.get(op, DEFAULT_LATENCY))
    return DEFAULT_LATENCY


_RES_OPS = (AccelOpId.RES4, AccelOpId.RES8, AccelOpId.RES16)


class SvmAccelerator:
    """Accelerator plug: dispatches funct3 to the functional model.

    execute() returns (result word, latency). CREATE_ENV and CALC
    write 0; RES writes the packed result word.
    """

    def __init__(self, latencies=None):
        if isinstance(latencies, int):
            latencies = {op: latencies for op in AccelOpId}
        self._latencies = latencies
        self.state = AccelState()
        self.saturation_events = 0

    def reset(self):
        self.state = AccelState()
        self.saturation_events = 0

    def execute(self, funct3: int, rs1: int, rs2: int):
        op = AccelOpId(funct3)
        latency = compute_latency(op, self._latencies)
        if op is AccelOpId.CREATE_ENV:
            self.state = create_env(self.state)
            return 0, latency
        if op in MODE_FOR_CALC:
            self.state, saturated = _calc_raw(
                self.state, rs1 & 0xFFFFFFFF, rs2 & 0xFFFFFFFF, MODE_FOR_CALC[op]
            )
            if saturated:
                self.saturation_events += 1
                warnings.warn(
                    f"most negative {MODE_FOR_CALC[op].bits}-bit weight saturated",
                    SaturationWarning,
                    stacklevel=2,
                )
            return 0, latency
        if op in _RES_OPS:
            packed, self.state = res(self.state)
            return packed.word, latency
        raise ValueError(f"reserved accelerator operation {funct3}")
