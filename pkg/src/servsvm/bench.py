"""Benchmark harness: both inference paths over the bundled datasets.

run_matrix simulates every test sample twice per configuration, once
through the software-only path and once through the accelerator path,
checks the two predictions against each other and against the
host-side integer oracle, validates every handshake trace, and
aggregates cycles and energy.  compare holds a matrix run against the
bundled reference measurements; calibrate sweeps the cost-model knobs
to show which setting best reproduces the reference cycle counts.
"""

import csv
import importlib.resources
import io
import math
import warnings
from dataclasses import dataclass, field, fields

from . import datasets as datasets_mod
from . import mlkit, svmgen
from .accel import SaturationWarning, SvmAccelerator
from .coresim import (
    CoreCostModel,
    FetchPolicy,
    MemModel,
    Simulator,
    trace_check,
)
from .mlkit import Scheme


@dataclass(frozen=True)
class EnergyModel:
    """Combined core + external memory power at the target clock."""

    core_power_mw: float = 0.224
    mem_power_mw: float = 0.94
    clock_hz: float = 52000.0

    def energy_mj(self, cycles) -> float:
        return cycles / self.clock_hz * (self.core_power_mw
                                         + self.mem_power_mw)


@dataclass(frozen=True)
class ReferenceRow:
    dataset: str
    scheme: str
    bits: int
    accuracy_pct: float
    base_mcycles: float
    base_mj: float
    accel_mcycles: float
    accel_mj: float
    speedup: float
    energy_reduction_pct: float


def load_reference_table():
    """Rows of the bundled reference measurements."""
    ref = importlib.resources.files("servsvm") / "data" / "reference_table.csv"
    lines = [ln for ln in ref.read_text().splitlines()
             if ln.strip() and not ln.startswith("#")]
    rows = []
    reader = csv.DictReader(lines)
    for rec in reader:
        rows.append(ReferenceRow(
            dataset=rec["dataset"], scheme=rec["scheme"],
            bits=int(rec["bits"]),
            accuracy_pct=float(rec["accuracy_pct"]),
            base_mcycles=float(rec["base_mcycles"]),
            base_mj=float(rec["base_mj"]),
            accel_mcycles=float(rec["accel_mcycles"]),
            accel_mj=float(rec["accel_mj"]),
            speedup=float(rec["speedup"]),
            energy_reduction_pct=float(rec["energy_reduction_pct"])))
    return rows


@dataclass(frozen=True)
class MatrixConfig:
    datasets: tuple = None
    schemes: tuple = (Scheme.OVR, Scheme.OVO)
    bits: tuple = (4, 8, 16)
    seed: int = 7
    fetch_policy: FetchPolicy = FetchPolicy.FETCH_IS_MEM_READ
    instr_overhead: int = 0
    collect_details: bool = False
    kernel: str = None


@dataclass
class MatrixRow:
    dataset: str
    scheme: str
    bits: int
    n_test: int
    float_accuracy_pct: float
    sim_accuracy_pct: float
    base_total_cycles: int
    accel_total_cycles: int
    base_mean_cycles: float
    accel_mean_cycles: float
    base_total_mj: float
    accel_total_mj: float
    speedup: float
    energy_reduction_pct: float
    path_mismatches: int
    host_mismatches: int
    saturations: int
    details: dict = field(default=None, repr=False, compare=False)


_CSV_FIELDS = [f.name for f in fields(MatrixRow) if f.name != "details"]


@dataclass
class MatrixReport:
    rows: list
    errors: list
    backend: str

    def row(self, dataset, scheme, bits) -> MatrixRow:
        scheme = Scheme(scheme).value
        for r in self.rows:
            if (r.dataset, r.scheme, r.bits) == (dataset, scheme, bits):
                return r
        raise KeyError(f"no matrix row for {dataset}/{scheme}/{bits}")

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(_CSV_FIELDS)
        for r in self.rows:
            writer.writerow([getattr(r, name) for name in _CSV_FIELDS])
        for err in self.errors:
            buf.write(f"# error: {err}\n")
        buf.write(f"# backend: {self.backend}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "MatrixReport":
        errors = []
        backend = ""
        data_lines = []
        for ln in text.splitlines():
            if ln.startswith("# error: "):
                errors.append(ln[len("# error: "):])
            elif ln.startswith("# backend: "):
                backend = ln[len("# backend: "):]
            elif ln.strip():
                data_lines.append(ln)
        types = {f.name: f.type for f in fields(MatrixRow)}
        rows = []
        for rec in csv.DictReader(data_lines):
            kwargs = {}
            for name in _CSV_FIELDS:
                t = types[name]
                caster = int if t in (int, "int") else (
                    float if t in (float, "float") else str)
                kwargs[name] = caster(rec[name])
            rows.append(MatrixRow(**kwargs))
        return cls(rows=rows, errors=errors, backend=backend)

    def format_table(self) -> str:
        head = (f"{'dataset':<14}{'scheme':<7}{'bits':>4}{'n':>5}"
                f"{'float%':>8}{'sim%':>7}{'base Mcyc':>11}"
                f"{'accel Mcyc':>12}{'speedup':>9}{'energy -%':>11}"
                f"{'mism':>6}")
        lines = [head, "-" * len(head)]
        for r in self.rows:
            lines.append(
                f"{r.dataset:<14}{r.scheme:<7}{r.bits:>4}{r.n_test:>5}"
                f"{r.float_accuracy_pct:>8.1f}{r.sim_accuracy_pct:>7.1f}"
                f"{r.base_total_cycles / 1e6:>11.2f}"
                f"{r.accel_total_cycles / 1e6:>12.3f}"
                f"{r.speedup:>9.1f}{r.energy_reduction_pct:>11.1f}"
                f"{r.path_mismatches + r.host_mismatches:>6}")
        for err in self.errors:
            lines.append(f"error: {err}")
        lines.append(f"kernel backend: {self.backend}")
        return "\n".join(lines)


def _run_cell(ds, fmodel, float_acc, bits, mm, cm, energy, cfg):
    qmodel = mlkit.quantize(fmodel, bits)
    packed = mlkit.pack(qmodel)
    accel_factory = svmgen.AccelProgramFactory(packed)
    base_factory = svmgen.BaselineProgramFactory(qmodel)
    plug = SvmAccelerator()
    sim_accel = Simulator(mem_model=mm, cost_model=cm, plug=plug,
                          kernel=cfg.kernel)
    sim_base = Simulator(mem_model=mm, cost_model=cm, kernel=cfg.kernel)
    Q = mlkit.quantize_features(ds.X_test)
    host_pred = qmodel.predict_int(Q)
    y_true = ds.y_test

    base_cycles = []
    accel_cycles = []
    base_pred = []
    accel_pred = []
    saturations = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SaturationWarning)
        for qx in Q:
            rep_a = sim_accel.run(accel_factory.program(qx))
            for t in rep_a.traces:
                trace_check(t, cm)
            rep_b = sim_base.run(base_factory.program(qx))
            accel_cycles.append(rep_a.total_cycles)
            base_cycles.append(rep_b.total_cycles)
            accel_pred.append(rep_a.predicted_class)
            base_pred.append(rep_b.predicted_class)
            saturations += rep_a.accel_saturations

    n = len(Q)
    base_total = sum(base_cycles)
    accel_total = sum(accel_cycles)
    base_mj = energy.energy_mj(base_total)
    accel_mj = energy.energy_mj(accel_total)
    row = MatrixRow(
        dataset=ds.name, scheme=fmodel.scheme.value, bits=bits, n_test=n,
        float_accuracy_pct=100 * float_acc,
        sim_accuracy_pct=100 * mlkit.accuracy(y_true, accel_pred),
        base_total_cycles=base_total, accel_total_cycles=accel_total,
        base_mean_cycles=base_total / n, accel_mean_cycles=accel_total / n,
        base_total_mj=base_mj, accel_total_mj=accel_mj,
        speedup=base_total / accel_total,
        energy_reduction_pct=100 * (1 - accel_mj / base_mj),
        path_mismatches=int(sum(a != b for a, b in zip(accel_pred,
                                                       base_pred))),
        host_mismatches=int(sum(a != h for a, h in zip(accel_pred,
                                                       host_pred))),
        saturations=saturations)
    if cfg.collect_details:
        row.details = {
            "base_cycles": base_cycles, "accel_cycles": accel_cycles,
            "base_pred": base_pred, "accel_pred": accel_pred,
            "host_pred": [int(v) for v in host_pred],
            "y_true": [int(v) for v in y_true],
            "custom_ops": accel_factory.custom_ops,
            "backend": sim_accel.backend}
    return row


def run_matrix(config: MatrixConfig = None) -> MatrixReport:
    cfg = config or MatrixConfig()
    names = list(cfg.datasets) if cfg.datasets else datasets_mod.available()
    mm = MemModel(fetch_policy=cfg.fetch_policy)
    cm = CoreCostModel(instr_overhead=cfg.instr_overhead)
    energy = EnergyModel()
    rows = []
    errors = []
    backend = Simulator(kernel=cfg.kernel).backend
    for name in names:
        try:
            ds = datasets_mod.normalized(
                datasets_mod.load(name, seed=cfg.seed))
            for scheme in cfg.schemes:
                fmodel = mlkit.train(
                    ds, scheme, mlkit.TrainConfig(seed=cfg.seed))
                float_acc = mlkit.accuracy(
                    ds.y_test, fmodel.predict(ds.X_test))
                for bits in cfg.bits:
                    rows.append(_run_cell(ds, fmodel, float_acc, bits,
                                          mm, cm, energy, cfg))
        except Exception as exc:
            errors.append(f"{name}: {type(exc).__name__}: {exc}")
    return MatrixReport(rows=rows, errors=errors, backend=backend)


@dataclass
class CompareRow:
    dataset: str
    scheme: str
    bits: int
    sim_accuracy_pct: float
    ref_accuracy_pct: float
    accuracy_delta: float
    accuracy_gated: bool
    accuracy_ok: bool
    sim_speedup: float
    ref_speedup: float
    mismatches: int


@dataclass
class CompareResult:
    rows: list
    hard_failures: list

    @property
    def ok(self) -> bool:
        return not self.hard_failures

    def format_table(self) -> str:
        head = (f"{'dataset':<14}{'scheme':<7}{'bits':>4}{'sim%':>7}"
                f"{'ref%':>7}{'delta':>7}{'gate':>6}{'sim x':>8}"
                f"{'ref x':>7}")
        lines = [head, "-" * len(head)]
        for r in self.rows:
            gate = "-"
            if r.accuracy_gated:
                gate = "ok" if r.accuracy_ok else "FAIL"
            lines.append(
                f"{r.dataset:<14}{r.scheme:<7}{r.bits:>4}"
                f"{r.sim_accuracy_pct:>7.1f}{r.ref_accuracy_pct:>7.1f}"
                f"{r.accuracy_delta:>+7.1f}{gate:>6}{r.sim_speedup:>8.1f}"
                f"{r.ref_speedup:>7.1f}")
        for failure in self.hard_failures:
            lines.append(f"FAIL: {failure}")
        if not self.hard_failures:
            lines.append("all gated checks passed")
        return "\n".join(lines)


def compare(report: MatrixReport, accuracy_tol_points: float = 5.0,
            reference=None) -> CompareResult:
    """Hold a matrix run against the reference measurements.

    Scoped to the datasets the run covers, so a restricted matrix can
    still be checked; within a covered dataset every reference cell
    must be present.  One-vs-rest accuracy is gated at the tolerance;
    one-vs-one accuracy is reported only.  Any run error, path
    disagreement, missing cell, or speedup at or below 1 is a hard
    failure.
    """
    ref_rows = reference if reference is not None else load_reference_table()
    covered = {r.dataset for r in report.rows}
    ref = {(r.dataset, r.scheme, r.bits): r for r in ref_rows
           if r.dataset in covered}
    rows = []
    failures = [f"run error: {e}" for e in report.errors]
    if not report.rows:
        failures.append("run produced no rows")
    for key, ref_row in sorted(ref.items()):
        dataset, scheme, bits = key
        try:
            got = report.row(dataset, scheme, bits)
        except KeyError:
            failures.append(f"{dataset}/{scheme}/{bits}: missing from run")
            continue
        delta = got.sim_accuracy_pct - ref_row.accuracy_pct
        gated = scheme == Scheme.OVR.value
        acc_ok = (not gated) or abs(delta) <= accuracy_tol_points
        if gated and not acc_ok:
            failures.append(
                f"{dataset}/{scheme}/{bits}: accuracy {got.sim_accuracy_pct:.1f}% "
                f"vs reference {ref_row.accuracy_pct:.1f}% "
                f"(|delta| > {accuracy_tol_points})")
        if got.speedup <= 1.0:
            failures.append(
                f"{dataset}/{scheme}/{bits}: speedup {got.speedup:.2f} "
                f"not above 1")
        if got.path_mismatches or got.host_mismatches:
            failures.append(
                f"{dataset}/{scheme}/{bits}: "
                f"{got.path_mismatches} path and {got.host_mismatches} "
                f"host prediction mismatches")
        rows.append(CompareRow(
            dataset=dataset, scheme=scheme, bits=bits,
            sim_accuracy_pct=got.sim_accuracy_pct,
            ref_accuracy_pct=ref_row.accuracy_pct,
            accuracy_delta=delta, accuracy_gated=gated, accuracy_ok=acc_ok,
            sim_speedup=got.speedup, ref_speedup=ref_row.speedup,
            mismatches=got.path_mismatches + got.host_mismatches))
    return CompareResult(rows=rows, hard_failures=failures)


@dataclass
class CalibrationPoint:
    fetch_policy: str
    instr_overhead: int
    base_cycles: int
    accel_cycles: int
    loss: float


@dataclass
class CalibrationResult:
    anchor: tuple
    points: list
    best: CalibrationPoint

    def format_table(self) -> str:
        head = (f"{'fetch policy':<18}{'overhead':>9}{'base Mcyc':>11}"
                f"{'accel Mcyc':>12}{'loss':>8}")
        lines = [f"anchor: {self.anchor[0]} {self.anchor[1]} "
                 f"{self.anchor[2]}-bit", head, "-" * len(head)]
        for p in self.points:
            mark = "  <-- best" if p is self.best else ""
            lines.append(
                f"{p.fetch_policy:<18}{p.instr_overhead:>9}"
                f"{p.base_cycles / 1e6:>11.2f}{p.accel_cycles / 1e6:>12.3f}"
                f"{p.loss:>8.3f}{mark}")
        return "\n".join(lines)


def calibrate(dataset="balance_scale", scheme=Scheme.OVR, bits=4,
              overheads=(0, 8, 16, 32, 64, 110),
              policies=(FetchPolicy.FETCH_IS_MEM_READ,
                        FetchPolicy.FETCH_FREE),
              seed=7) -> CalibrationResult:
    """Sweep cost-model knobs against the reference anchor row."""
    scheme = Scheme(scheme)
    ref = {(r.dataset, r.scheme, r.bits): r for r in load_reference_table()}
    target = ref[(dataset, scheme.value, bits)]
    points = []
    for policy in policies:
        for overhead in overheads:
            cfg = MatrixConfig(datasets=(dataset,), schemes=(scheme,),
                               bits=(bits,), seed=seed,
                               fetch_policy=policy,
                               instr_overhead=overhead)
            report = run_matrix(cfg)
            if report.errors:
                raise RuntimeError(
                    f"calibration run failed: {report.errors}")
            row = report.rows[0]
            loss = (abs(math.log(row.base_total_cycles
                                 / (target.base_mcycles * 1e6)))
                    + abs(math.log(row.accel_total_cycles
                                   / (target.accel_mcycles * 1e6))))
            points.append(CalibrationPoint(
                fetch_policy=policy.value, instr_overhead=overhead,
                base_cycles=row.base_total_cycles,
                accel_cycles=row.accel_total_cycles, loss=loss))
    best = min(points, key=lambda p: p.loss)
    return CalibrationResult(anchor=(dataset, scheme.value, bits),
                             points=points, best=best)
