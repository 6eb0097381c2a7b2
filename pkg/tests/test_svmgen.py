"""Program generation: both inference paths must compute the same answer."""

import numpy as np
import pytest

from servsvm import coresim, mlkit, svmgen
from servsvm.accel import SvmAccelerator
from servsvm.coresim import MemModel, Simulator
from servsvm.isa import Kind
from servsvm.mlkit import QuantizedModel, Scheme


def quantized(W, B, scheme=Scheme.OVR, bits=4, pairs=None, n_classes=None):
    W = np.asarray(W, int)
    if n_classes is None:
        n_classes = len(W) if scheme is Scheme.OVR else max(
            max(p) for p in pairs) + 1
    return QuantizedModel(scheme=scheme, n_classes=n_classes, bits=bits,
                          W=W, B=np.asarray(B, int), scale=1.0, pairs=pairs)


def run_both(qmodel, qx):
    accel = Simulator(plug=SvmAccelerator())
    base = Simulator()
    rep_a = accel.run(svmgen.gen_accel(qmodel, qx))
    rep_b = base.run(svmgen.gen_baseline(qmodel, qx))
    return rep_a, rep_b


OVR_MODEL = quantized([[1, -2, 3], [0, 4, -1]], [2, -3])


class TestCustomOpCounts:
    @pytest.mark.parametrize("bits,expected", [(4, 7), (8, 10), (16, 13)])
    def test_three_classes_four_features(self, bits, expected):
        top = (1 << (bits - 1)) - 1
        q = quantized([[top, -1, 0, 2]] * 3, [1, 0, -top], bits=bits)
        factory = svmgen.AccelProgramFactory(mlkit.pack(q))
        assert factory.custom_ops == expected
        prog = factory.program([0, 0, 0, 0])
        customs = [i for i in prog.instructions if i.kind is Kind.CUSTOM]
        assert len(customs) == expected

    def test_environment_setup_comes_first(self):
        prog = svmgen.gen_accel(OVR_MODEL, [0, 0, 0])
        customs = [i for i in prog.instructions if i.kind is Kind.CUSTOM]
        assert customs[0].accel_funct3 == 0
        assert prog.meta["custom_ops"] == len(customs)


class TestCrossPathAgreement:
    @pytest.mark.parametrize("qx,expected", [
        ([5, 7, 3], 0),
        ([0, 15, 0], 1),
        ([0, 0, 0], 0),
        ([15, 15, 15], 0),
    ])
    def test_one_vs_rest(self, qx, expected):
        rep_a, rep_b = run_both(OVR_MODEL, qx)
        host = int(OVR_MODEL.predict_int(np.array([qx]))[0])
        assert host == expected
        assert rep_a.predicted_class == expected
        assert rep_b.predicted_class == expected

    @pytest.mark.parametrize("qx", [[0, 0], [15, 0], [0, 15], [7, 8]])
    def test_pairwise(self, qx):
        q = quantized([[2, -1]], [-1], scheme=Scheme.OVO, pairs=[(0, 1)])
        rep_a, rep_b = run_both(q, qx)
        host = int(q.predict_int(np.array([qx]))[0])
        assert rep_a.predicted_class == host
        assert rep_b.predicted_class == host

    def test_pairwise_vote_tie_takes_smallest(self):
        # scores 0, -15, 0 vote classes 0, 2, 1: one vote each
        q = quantized([[1, 0], [-1, 0], [1, 0]], [0, -1, 0],
                      scheme=Scheme.OVO, pairs=[(0, 1), (0, 2), (1, 2)])
        rep_a, rep_b = run_both(q, [0, 0])
        assert rep_a.predicted_class == 0
        assert rep_b.predicted_class == 0

    @pytest.mark.parametrize("bits", [4, 8, 16])
    @pytest.mark.parametrize("scheme", [Scheme.OVR, Scheme.OVO])
    def test_random_models_agree_with_host(self, bits, scheme):
        rng = np.random.default_rng(bits * 100 + len(scheme.value))
        top = (1 << (bits - 1)) - 1
        lim = min(top, 300)
        for _ in range(4):
            d = int(rng.integers(1, 11))
            k = 3
            pairs = ([(a, b) for a in range(k) for b in range(a + 1, k)]
                     if scheme is Scheme.OVO else None)
            rows = len(pairs) if pairs else k
            q = quantized(rng.integers(-lim, lim + 1, size=(rows, d)),
                          rng.integers(-lim, lim + 1, size=rows),
                          scheme=scheme, bits=bits, pairs=pairs,
                          n_classes=k)
            qx = list(rng.integers(0, 16, size=d))
            rep_a, rep_b = run_both(q, qx)
            host = int(q.predict_int(np.array([qx]))[0])
            assert rep_a.predicted_class == host
            assert rep_b.predicted_class == host


class TestCycles:
    def test_software_path_is_slower(self):
        rep_a, rep_b = run_both(OVR_MODEL, [5, 7, 3])
        assert rep_b.total_cycles > rep_a.total_cycles

    def test_one_trace_per_custom_op(self):
        rep_a, _ = run_both(OVR_MODEL, [5, 7, 3])
        assert len(rep_a.traces) == 1 + 2 * (1 + 1)

    def test_free_fetch_still_agrees(self):
        mm = MemModel(fetch_policy=coresim.FetchPolicy.FETCH_FREE)
        sim_a = Simulator(mem_model=mm, plug=SvmAccelerator())
        sim_b = Simulator(mem_model=mm)
        rep_a = sim_a.run(svmgen.gen_accel(OVR_MODEL, [5, 7, 3]))
        rep_b = sim_b.run(svmgen.gen_baseline(OVR_MODEL, [5, 7, 3]))
        assert rep_a.predicted_class == rep_b.predicted_class == 0


class TestMultiplyHelper:
    @pytest.mark.parametrize("bits", [4, 8, 16])
    def test_matches_product(self, bits):
        rng = np.random.default_rng(bits)
        top = (1 << (bits - 1)) - 1
        for _ in range(200):
            w = int(rng.integers(-top, top + 1))
            x = int(rng.integers(0, 16))
            assert svmgen.shift_add_mul(w, x) == w * x

    def test_documented_example(self):
        assert svmgen.shift_add_mul(-5, 3) == -15


class TestResultDecoding:
    def test_vote_counts(self):
        pairs = [(0, 1), (0, 2), (1, 2)]
        # sign bit -> second of pair, otherwise the first
        words = [0x80000005, 0x80000001, 0x00000009]
        assert svmgen.vote(words, 3, pairs) == 1

    def test_vote_tie_smallest(self):
        pairs = [(0, 1), (0, 2), (1, 2)]
        words = [0x00000000, 0x80000000, 0x00000000]
        assert svmgen.vote(words, 3, pairs) == 0

    def test_interpret_argmax_word(self):
        assert svmgen.interpret([0, 0, 0x80000002], Scheme.OVR, 3) == 2

    def test_interpret_length_checked(self):
        with pytest.raises(ValueError):
            svmgen.interpret([0, 0], Scheme.OVR, 3)
        with pytest.raises(ValueError):
            svmgen.interpret([0], Scheme.OVO, 3, pairs=[(0, 1), (0, 2)])

    def test_register_protocol(self):
        regs = [0] * 32
        regs[10] = 2
        assert svmgen.RegisterResult().extract(regs, b"") == 2

    def test_memory_vote_protocol(self):
        mem = bytearray(64)
        mem[0:4] = (0x80000000).to_bytes(4, "little")
        mem[4:8] = (0x80000005).to_bytes(4, "little")
        proto = svmgen.MemVoteResult(base=0, n_classes=2, pairs=[(0, 1),
                                                                 (0, 1)])
        assert proto.extract([0] * 32, mem) == 1


class TestValidation:
    def test_feature_vector_length(self):
        with pytest.raises(ValueError):
            svmgen.gen_accel(OVR_MODEL, [1, 2])
        with pytest.raises(ValueError):
            svmgen.gen_baseline(OVR_MODEL, [1, 2, 3, 4])

    @pytest.mark.parametrize("bad", [-1, 16, 99])
    def test_feature_range(self, bad):
        with pytest.raises(ValueError):
            svmgen.gen_accel(OVR_MODEL, [0, bad, 0])

    def test_data_window_bounds(self):
        assert svmgen._off(0) == -2048
        assert svmgen._off(1023) == 2044
        with pytest.raises(ValueError):
            svmgen._off(1024)


class TestProgramIO:
    def test_accel_program_round_trip(self, tmp_path):
        prog = svmgen.gen_accel(OVR_MODEL, [5, 7, 3])
        path = tmp_path / "prog.s"
        coresim.save_program(prog, path)
        back = coresim.load_program(path)
        assert back.instructions == prog.instructions
        assert back.data_image == prog.data_image
        assert back.data_base == prog.data_base

    def test_baseline_program_round_trip(self, tmp_path):
        prog = svmgen.gen_baseline(OVR_MODEL, [0, 15, 0])
        path = tmp_path / "prog.s"
        coresim.save_program(prog, path)
        back = coresim.load_program(path)
        assert back.instructions == prog.instructions
        assert back.data_image == prog.data_image
