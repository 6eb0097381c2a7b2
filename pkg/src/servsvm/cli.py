"""Command-line front end for training, quantization, and simulation."""

import sys

import click

from . import bench, coresim, datasets, mlkit, svmgen
from .accel import SvmAccelerator
from .coresim import CoreCostModel, FetchPolicy, MemModel, Simulator
from .mlkit import QuantizedModel, Scheme

_POLICIES = {
    "mem": FetchPolicy.FETCH_IS_MEM_READ,
    "free": FetchPolicy.FETCH_FREE,
}


def _policy_option(fn):
    return click.option(
        "--fetch-policy", type=click.Choice(sorted(_POLICIES)),
        default="mem", show_default=True,
        help="'mem' charges each fetch as an external read, "
             "'free' assumes zero-cost fetch")(fn)


@click.group()
def main():
    """Toolchain for a bit-serial core with an SVM co-processor."""


@main.command()
@click.argument("dataset", type=click.Choice(datasets.available()))
@click.option("--scheme", type=click.Choice([s.value for s in Scheme]),
              default="ovr", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="where to write the model JSON")
@click.option("--epochs", default=2000, show_default=True)
@click.option("--seed", default=7, show_default=True)
def train(dataset, scheme, out, epochs, seed):
    """Train a float margin classifier on a bundled dataset."""
    ds = datasets.normalized(datasets.load(dataset, seed=seed))
    model = mlkit.train(ds, scheme,
                        mlkit.TrainConfig(epochs=epochs, seed=seed))
    mlkit.save_model(model, out)
    acc = mlkit.accuracy(ds.y_test, model.predict(ds.X_test))
    click.echo(f"trained {scheme} model on {dataset}: "
               f"C={model.c:g}, test accuracy {100 * acc:.1f}%")
    click.echo(f"wrote {out}")


@main.command()
@click.argument("model", type=click.Path(exists=True, dir_okay=False))
@click.option("--bits", type=click.Choice(["4", "8", "16"]), default="4",
              show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def quantize(model, bits, out):
    """Quantize a trained float model to a signed integer grid."""
    fmodel = mlkit.load_model(model)
    if isinstance(fmodel, QuantizedModel):
        raise click.ClickException("model is already quantized")
    qmodel = mlkit.quantize(fmodel, int(bits))
    mlkit.save_model(qmodel, out)
    click.echo(f"quantized to {bits}-bit weights, scale {qmodel.scale:g}")
    click.echo(f"wrote {out}")


@main.command()
@click.argument("model", type=click.Path(exists=True, dir_okay=False))
@click.option("--dataset", type=click.Choice(datasets.available()),
              required=True, help="dataset the model was trained on")
@click.option("--index", default=0, show_default=True,
              help="test-set sample to classify")
@click.option("--path", "exec_path",
              type=click.Choice(["accel", "baseline"]), default="accel",
              show_default=True)
@_policy_option
@click.option("--asm", type=click.Path(dir_okay=False), default=None,
              help="also write the generated program as assembly + image")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="write the run report here instead of stdout")
def simulate(model, dataset, index, exec_path, fetch_policy, asm, out):
    """Run one test sample through the cycle-accurate core model."""
    qmodel = mlkit.load_model(model)
    if not isinstance(qmodel, QuantizedModel):
        raise click.ClickException("simulate needs a quantized model; "
                                   "run quantize first")
    ds = datasets.normalized(datasets.load(dataset))
    if not 0 <= index < len(ds.test_idx):
        raise click.ClickException(
            f"index {index} outside test set of {len(ds.test_idx)}")
    qx = mlkit.quantize_features(ds.X_test[index])
    if exec_path == "accel":
        prog = svmgen.gen_accel(qmodel, qx)
        plug = SvmAccelerator()
    else:
        prog = svmgen.gen_baseline(qmodel, qx)
        plug = None
    sim = Simulator(mem_model=MemModel(fetch_policy=_POLICIES[fetch_policy]),
                    plug=plug)
    rep = sim.run(prog)
    text = rep.to_text()
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
        click.echo(f"wrote {out}")
    else:
        click.echo(text)
    if asm:
        coresim.save_program(prog, asm)
        click.echo(f"wrote {asm}")
    click.echo(f"predicted class {rep.predicted_class}, "
               f"true class {ds.y_test[index]} "
               f"({ds.class_names[ds.y_test[index]]})")


@main.command()
@click.option("--datasets", "names", multiple=True,
              type=click.Choice(datasets.available()),
              help="restrict to these datasets (default: all)")
@click.option("--schemes", multiple=True,
              type=click.Choice([s.value for s in Scheme]))
@click.option("--bits", multiple=True, type=click.Choice(["4", "8", "16"]))
@_policy_option
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="write the matrix as CSV")
def matrix(names, schemes, bits, fetch_policy, out):
    """Simulate both paths over every dataset, scheme, and width."""
    cfg = bench.MatrixConfig(
        datasets=names or None,
        schemes=tuple(Scheme(s) for s in schemes) or (Scheme.OVR,
                                                      Scheme.OVO),
        bits=tuple(int(b) for b in bits) or (4, 8, 16),
        fetch_policy=_POLICIES[fetch_policy])
    report = bench.run_matrix(cfg)
    click.echo(report.format_table())
    if out:
        with open(out, "w") as fh:
            fh.write(report.to_csv())
        click.echo(f"wrote {out}")
    if report.errors:
        sys.exit(1)


@main.command()
@click.option("--matrix-csv", type=click.Path(exists=True, dir_okay=False),
              default=None,
              help="reuse a saved matrix CSV instead of re-running")
@click.option("--tolerance", default=5.0, show_default=True,
              help="accuracy gate in percentage points")
def compare(matrix_csv, tolerance):
    """Check a matrix run against the bundled reference measurements."""
    if matrix_csv:
        with open(matrix_csv) as fh:
            report = bench.MatrixReport.from_csv(fh.read())
    else:
        click.echo("running full matrix...", err=True)
        report = bench.run_matrix(bench.MatrixConfig())
    result = bench.compare(report, accuracy_tol_points=tolerance)
    click.echo(result.format_table())
    if not result.ok:
        sys.exit(1)


@main.command()
@click.option("--dataset", type=click.Choice(datasets.available()),
              default="balance_scale", show_default=True)
@click.option("--scheme", type=click.Choice([s.value for s in Scheme]),
              default="ovr", show_default=True)
@click.option("--bits", type=click.Choice(["4", "8", "16"]), default="4",
              show_default=True)
def calibrate(dataset, scheme, bits):
    """Sweep cost-model knobs against the reference cycle counts."""
    result = bench.calibrate(dataset=dataset, scheme=scheme, bits=int(bits))
    click.echo(result.format_table())
    click.echo(f"best: fetch policy {result.best.fetch_policy}, "
               f"instruction overhead {result.best.instr_overhead}")


if __name__ == "__main__":
    main()
