"""Time the instruction-execution kernels against each other.

Runs one software-path inference program (no accelerator stalls, so the
whole run stays inside the kernel's hot loop) under the pure-Python
kernel and, when built, the compiled one.

    python benchmarks/bench_simcore.py --repeats 5
"""

import argparse
import time

import numpy as np

from servsvm import svmgen
from servsvm.coresim import Simulator
from servsvm.mlkit import QuantizedModel, Scheme


def build_program(features, classes, bits, seed):
    rng = np.random.default_rng(seed)
    top = (1 << (bits - 1)) - 1
    pairs = [(a, b) for a in range(classes) for b in range(a + 1, classes)]
    q = QuantizedModel(
        scheme=Scheme.OVO, n_classes=classes, bits=bits,
        W=rng.integers(-top, top + 1, size=(len(pairs), features)),
        B=rng.integers(-top, top + 1, size=len(pairs)),
        scale=1.0, pairs=pairs)
    qx = rng.integers(0, 16, size=features).tolist()
    return svmgen.gen_baseline(q, qx)


def time_kernel(kernel, program, repeats):
    sim = Simulator(kernel=kernel)
    rep = sim.run(program)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        sim.run(program)
        best = min(best, time.perf_counter() - t0)
    return rep, best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--features", type=int, default=34)
    ap.add_argument("--classes", type=int, default=6)
    ap.add_argument("--bits", type=int, default=8, choices=(4, 8, 16))
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    program = build_program(args.features, args.classes, args.bits,
                            args.seed)
    print(f"program: {len(program.instructions)} instructions, "
          f"{args.classes}-class pairwise model, {args.features} features, "
          f"{args.bits}-bit weights")

    results = {}
    for kernel in ("py", "cython"):
        try:
            rep, secs = time_kernel(kernel, program, args.repeats)
        except ImportError:
            print(f"{kernel:>8}: not built, skipped")
            continue
        rate = rep.instret / secs
        results[kernel] = rate
        print(f"{kernel:>8}: {rep.instret} instructions retired in "
              f"{1e3 * secs:7.2f} ms  ({rate / 1e6:6.2f} M instr/s)")

    if len(results) == 2:
        print(f"speedup: compiled kernel {results['cython'] / results['py']:.1f}x "
              f"over pure Python")


if __name__ == "__main__":
    main()
