"""Bit-serial RISC-V core model with an SVM co-processor.

The package bundles an instruction encoder/decoder for the generated
program subset, a bit-exact functional model of the SVM accelerator, a
cycle-accurate core simulator with a pluggable accelerator contract, a
quantized-SVM training pipeline, two program generators (accelerated
and software-multiply baseline), and a benchmark harness that rebuilds
the bundled reference table.
"""

from . import accel, bench, coresim, datasets, isa, mlkit, svmgen
from ._kernel import kernel_backend

__version__ = "0.1.0"

__all__ = [
    "accel",
    "bench",
    "coresim",
    "datasets",
    "isa",
    "mlkit",
    "svmgen",
    "kernel_backend",
    "__version__",
]
