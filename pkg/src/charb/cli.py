"""Command-line interface.

Exit codes: 0 on success, 2 for configuration/usage problems, 3 for
numerical or physicality failures raised while computing.
"""

from __future__ import annotations

import csv
import json
import os
import sys

import click
import numpy as np

from . import __version__
from .engine import DecayCurve, ExperimentSpec, PhysicalityError, run_experiment
from .fitting import (
    aggregate,
    fidelity_from_quality,
    fit_offset_exponential,
    fit_single_exponential,
    dihedral_infidelity,
    hoeffding_sample_size,
    hoeffding_sample_size_variant,
    interleaved_bounds,
)
from .groups import BUILTIN_NAMES, builtin_group
from .irreps import analytic_decomposition, mixing_matrix, numeric_decomposition
from .noise import NoiseModel, SpamModel
from .presets import (
    PRESET_NAMES,
    analyze_preset,
    execute_preset,
    get_preset,
    preset_to_dict,
    run_preset,
)
from .superop import ptm_of_unitary, unitary


@click.group(name="charb")
@click.version_option(version=__version__, prog_name="charb")
@click.option("--seed", type=int, default=None, help="Override experiment seed.")
@click.option(
    "--out",
    type=click.Path(file_okay=False),
    default=".",
    help="Directory for output files.",
)
@click.option("--threads", type=int, default=1, help="Worker threads per run.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable stdout.")
@click.pass_context
def cli(ctx, seed, out, threads, as_json):
    """Character benchmarking simulator."""
    ctx.obj = {"seed": seed, "out": out, "threads": threads, "json": as_json}


def _outdir(ctx) -> str:
    path = ctx.obj["out"]
    os.makedirs(path, exist_ok=True)
    return path


def _emit(ctx, payload: dict, human: str) -> None:
    if ctx.obj["json"]:
        click.echo(json.dumps(payload, indent=2, default=_jsonable))
    else:
        click.echo(human)


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _parse_lengths(text: str) -> tuple[int, ...]:
    """"1:15" (inclusive range), "1:20:2" (strided), or "1,2,4,8"."""
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) == 2:
            return tuple(range(parts[0], parts[1] + 1))
        if len(parts) == 3:
            return tuple(range(parts[0], parts[1] + 1, parts[2]))
        raise click.UsageError(f"bad lengths spec {text!r}")
    return tuple(int(p) for p in text.split(","))


def _parse_noise(text: str, q: int) -> NoiseModel:
    """NOISE is "identity", "depolarizing:P", "random_unitary:INF[:SEED]",
    or "gate_dependent:INF[:SEED]" (per-element random unitaries)."""
    parts = text.split(":")
    kind = parts[0]
    if kind == "identity":
        return NoiseModel.identity(q)
    if kind == "depolarizing":
        return NoiseModel.depolarizing(q, float(parts[1]))
    if kind == "random_unitary":
        seed = int(parts[2]) if len(parts) > 2 else 0
        return NoiseModel.random_unitary(q, float(parts[1]), seed)
    if kind == "gate_dependent":
        raise click.UsageError(
            "gate_dependent noise needs a group; use simulate --group ... "
            "which wires it up internally"
        )
    raise click.UsageError(f"unknown noise spec {text!r}")


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


@cli.command()
@click.option("--preset", "preset_name", type=click.Choice(PRESET_NAMES), default=None)
@click.option(
    "--set",
    "overrides",
    multiple=True,
    help="Preset override KEY=VALUE (e.g. num_sequences=50).",
)
@click.option("--group", "group_name", type=click.Choice(BUILTIN_NAMES), default=None)
@click.option("--q", "q", type=int, default=None, help="Qubit count for pauli/cnot_dihedral.")
@click.option("--lengths", default="1:10", help='Sequence lengths, "1:10" or "1,2,4".')
@click.option("--num-sequences", type=int, default=40)
@click.option("--mode", type=click.Choice(("exact", "shots", "average")), default="exact")
@click.option("--shots", type=int, default=0)
@click.option("--noise", "noise_spec", default="depolarizing:0.95", help=_parse_noise.__doc__)
@click.option("--gate-dependent-infidelity", type=float, default=None,
              help="Per-element random-unitary noise at this infidelity instead of --noise.")
@click.option("--sigma", default=None, help="Character label; enables character weighting.")
@click.option("--interleaved", "interleaved_name", default=None,
              help="Named unitary to interleave (e.g. CPHASE).")
@click.option("--interleaved-noise", "int_noise_spec", default=None,
              help="Noise spec attached to the interleaved gate.")
@click.option("--prep-fidelity", type=float, default=1.0)
@click.option("--meas-fidelity", type=float, default=1.0)
@click.pass_context
def simulate(ctx, preset_name, overrides, group_name, q, lengths, num_sequences,
             mode, shots, noise_spec, gate_dependent_infidelity, sigma,
             interleaved_name, int_noise_spec, prep_fidelity, meas_fidelity):
    """Run a benchmarking experiment and write raw.csv, curve.csv, fit.json."""
    out = _outdir(ctx)
    threads = ctx.obj["threads"]
    if preset_name is not None:
        config = {}
        for item in overrides:
            if "=" not in item:
                raise click.UsageError(f"--set needs KEY=VALUE, got {item!r}")
            key, val = item.split("=", 1)
            config[key] = json.loads(val) if val and val[0] in "[{0123456789-" else val
        if ctx.obj["seed"] is not None:
            config["seed"] = ctx.obj["seed"]
        preset, curves, report = execute_preset(
            preset_name, config, threads=threads, keep_records=True
        )
        single = len(preset.runs) == 1
        for run in preset.runs:
            stem = "" if single else f"{run.name}-"
            curves[run.name].write_raw_csv(os.path.join(out, f"{stem}raw.csv"))
            curves[run.name].write_curve_csv(os.path.join(out, f"{stem}curve.csv"))
        payload = report.to_dict()
        payload["files"] = sorted(os.listdir(out))
        with open(os.path.join(out, "fit.json"), "w") as fh:
            json.dump(payload, fh, indent=2, default=_jsonable)
        lines = []
        for name, fit in report.fits.items():
            lines.append(
                f"{name}: f = {fit.rate:.6f} +/- {fit.stderr_rate:.2g}"
            )
        for key, val in report.fidelities.items():
            lines.append(f"{key} = {float(val):.6f}")
        _emit(ctx, payload, "\n".join(lines))
        return

    if group_name is None:
        raise click.UsageError("need --preset or --group")
    group = builtin_group(group_name, q)
    if gate_dependent_infidelity is not None:
        noise = NoiseModel.gate_dependent_random_unitary(
            group, gate_dependent_infidelity, ctx.obj["seed"] or 0
        )
    else:
        noise = _parse_noise(noise_spec, group.q)
    interleaved = None
    if interleaved_name is not None:
        interleaved = ptm_of_unitary(unitary(interleaved_name))
    int_noise = None
    if int_noise_spec is not None:
        int_noise = _parse_noise(int_noise_spec, group.q)
    spec = ExperimentSpec(
        group=group,
        lengths=_parse_lengths(lengths),
        num_sequences=num_sequences,
        noise=noise,
        mode=mode,
        seed=ctx.obj["seed"] or 0,
        char_group=builtin_group("pauli", group.q) if sigma else None,
        sigma_hat=sigma or None,
        interleaved=interleaved,
        interleaved_noise=int_noise,
        spam=SpamModel(prep_fidelity=prep_fidelity, meas_fidelity=meas_fidelity),
        shots=shots or (128 if mode == "shots" else 0),
        keep_records=mode != "average",
    )
    curve = run_experiment(spec, threads=threads)
    if curve.records is not None:
        curve.write_raw_csv(os.path.join(out, "raw.csv"))
    curve.write_curve_csv(os.path.join(out, "curve.csv"))
    errs = curve.std_errors if np.any(curve.std_errors > 0) else None
    fit_fn = fit_single_exponential if sigma else fit_offset_exponential
    fit = fit_fn(curve.lengths, curve.values, errs)
    payload = fit.to_dict()
    with open(os.path.join(out, "fit.json"), "w") as fh:
        json.dump(payload, fh, indent=2, default=_jsonable)
    _emit(ctx, payload, f"f = {fit.rate:.6f} +/- {fit.stderr_rate:.2g}")


# ---------------------------------------------------------------------------
# reproduce-figure
# ---------------------------------------------------------------------------


@cli.command("reproduce-figure")
@click.option("--plot/--no-plot", default=False, help="Also write figure.png.")
@click.pass_context
def reproduce_figure(ctx, plot):
    """Re-run both figure presets and check every summary number's window."""
    out = _outdir(ctx)
    threads = ctx.obj["threads"]
    summary = {"presets": {}, "all_pass": True}
    all_curves = {}
    for name in ("supp-fig-2-char", "supp-fig-2-standard"):
        config = {}
        if ctx.obj["seed"] is not None:
            config["seed"] = ctx.obj["seed"]
        preset, curves, report = execute_preset(name, config, threads=threads)
        all_curves[name] = curves
        for run in preset.runs:
            curves[run.name].write_curve_csv(
                os.path.join(out, f"{name}-{run.name}.csv")
            )
        summary["presets"][name] = report.to_dict()
        summary["all_pass"] = summary["all_pass"] and report.all_windows_pass
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, default=_jsonable)
    if plot:
        _write_figure(os.path.join(out, "figure.png"), all_curves)
    lines = []
    for name, rep in summary["presets"].items():
        for key, win in rep["windows"].items():
            status = "pass" if win["pass"] else "FAIL"
            lines.append(
                f"{name} {key}: {win['value']:.4f} in "
                f"[{win['low']}, {win['high']}] {status}"
            )
    lines.append("ALL WINDOWS PASS" if summary["all_pass"] else "SOME WINDOWS FAIL")
    _emit(ctx, summary, "\n".join(lines))


def _write_figure(path: str, all_curves) -> None:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        click.echo("matplotlib not installed; skipping figure.png", err=True)
        return
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5), sharey=False)
    for ax, (name, curves) in zip(axes, all_curves.items()):
        for run_name, curve in curves.items():
            ax.errorbar(
                curve.lengths, np.abs(curve.values), yerr=curve.std_errors,
                marker="o", ms=3, lw=1, label=run_name,
            )
        ax.set_yscale("log")
        ax.set_xlabel("sequence length m")
        ax.set_title(name, fontsize=9)
        ax.legend(fontsize=6)
    axes[0].set_ylabel("|k_m|")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


# ---------------------------------------------------------------------------
# groups / irreps / mixing
# ---------------------------------------------------------------------------


@cli.group(invoke_without_command=True)
@click.pass_context
def groups(ctx):
    """List builtin gate groups (or `groups info NAME` for details)."""
    if ctx.invoked_subcommand is not None:
        return
    rows = []
    for name in BUILTIN_NAMES:
        qs = (1, 2) if name in ("pauli", "cnot_dihedral") else (None,)
        for q in qs:
            g = builtin_group(name, q)
            rows.append({"name": g.name, "q": g.q, "order": len(g)})
    if ctx.obj["json"]:
        click.echo(json.dumps(rows, indent=2))
    else:
        for r in rows:
            click.echo(f"{r['name']:24s} q={r['q']}  order={r['order']}")


@groups.command("info")
@click.argument("name", type=click.Choice(BUILTIN_NAMES))
@click.option("--q", type=int, default=None)
@click.pass_context
def groups_info(ctx, name, q):
    """Order, generators, and irrep block structure of one group."""
    g = builtin_group(name, q)
    dec = analytic_decomposition(g)
    payload = {
        "name": g.name,
        "q": g.q,
        "order": len(g),
        "generators": [g.label_of(i) for i in g.generator_indices],
        "blocks": {lab: int(d) for lab, d in zip(dec.labels, dec.dims)},
    }
    human = (
        f"{g.name}: q={g.q} order={len(g)}\n"
        f"generators: {', '.join(payload['generators'])}\n"
        + "blocks: "
        + ", ".join(f"{k} (dim {v})" for k, v in payload["blocks"].items())
    )
    _emit(ctx, payload, human)


@cli.command()
@click.argument("name", type=click.Choice(BUILTIN_NAMES))
@click.option("--q", type=int, default=None)
@click.option("--numeric", is_flag=True, help="Rebuild blocks numerically and compare.")
@click.pass_context
def irreps(ctx, name, q, numeric):
    """Invariant-subspace decomposition of a builtin group."""
    g = builtin_group(name, q)
    dec = analytic_decomposition(g)
    payload = {
        "group": g.name,
        "labels": list(dec.labels),
        "dims": [int(d) for d in dec.dims],
    }
    if numeric:
        num = numeric_decomposition(g)
        pairs = sorted(zip([int(d) for d in num.dims], range(len(num.dims))))
        payload["numeric_dims"] = sorted(int(d) for d in num.dims)
        payload["dims_match"] = sorted(payload["dims"]) == payload["numeric_dims"]
    human = "\n".join(
        f"{lab:10s} dim {d}" for lab, d in zip(payload["labels"], payload["dims"])
    )
    if numeric:
        human += f"\nnumeric check: {'match' if payload['dims_match'] else 'MISMATCH'}"
    _emit(ctx, payload, human)


@cli.command()
@click.option("--group", "group_name", default="clifford1_tensor2",
              type=click.Choice(BUILTIN_NAMES))
@click.option("--q", type=int, default=None)
@click.option("--interleaved", "interleaved_name", default="CPHASE")
@click.option("--noise", "noise_spec", default=None,
              help="Optional noise folded into the matrix.")
@click.pass_context
def mixing(ctx, group_name, q, interleaved_name, noise_spec):
    """Mixing matrix of an interleaved gate across the group's blocks."""
    g = builtin_group(group_name, q)
    dec = analytic_decomposition(g)
    c = ptm_of_unitary(unitary(interleaved_name))
    err = _parse_noise(noise_spec, g.q).ptm if noise_spec else None
    res = mixing_matrix(dec, c, err)
    payload = {
        "group": g.name,
        "interleaved": interleaved_name,
        "labels": list(res.labels),
        "matrix": res.matrix.tolist(),
        "eigenvalues": [complex(v).real if abs(complex(v).imag) < 1e-12 else str(v)
                        for v in res.eigenvalues],
        "irreducible": bool(res.irreducible),
        "positive_power": res.positive_power,
    }
    with np.printoptions(precision=6, suppress=True):
        human = (
            f"blocks: {', '.join(res.labels)}\n{np.array_str(res.matrix)}\n"
            f"eigenvalues: {np.array_str(np.asarray(res.eigenvalues))}\n"
            f"irreducible: {res.irreducible} (positive power {res.positive_power})"
        )
    _emit(ctx, payload, human)


# ---------------------------------------------------------------------------
# fit / fidelity / bounds / plan
# ---------------------------------------------------------------------------


def _read_csv_curve(path: str):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise click.UsageError(f"{path} is empty")
    header = rows[0]
    if header[:2] == ["m", "k_mean"]:
        data = [(int(r[0]), float(r[1]), float(r[2]), int(r[3])) for r in rows[1:]]
        lengths = np.array([d[0] for d in data])
        values = np.array([d[1] for d in data])
        errs = np.array([d[2] for d in data])
        return lengths, values, (errs if np.any(errs > 0) else None)
    if header[:2] == ["m", "seq_index"]:
        curve = aggregate([(int(r[0]), 0, "", 0, 1.0, float(r[-1])) for r in rows[1:]])
        errs = curve.std_errors if np.any(curve.std_errors > 0) else None
        return curve.lengths, curve.values, errs
    raise click.UsageError(f"{path}: unrecognized CSV header {header}")


@cli.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--model", type=click.Choice(("single", "offset")), default="single")
@click.pass_context
def fit(ctx, csv_path, model):
    """Fit a decay model to a curve.csv or raw.csv file."""
    lengths, values, errs = _read_csv_curve(csv_path)
    fn = fit_single_exponential if model == "single" else fit_offset_exponential
    res = fn(lengths, values, errs)
    _emit(
        ctx,
        res.to_dict(),
        f"f = {res.rate:.6f} +/- {res.stderr_rate:.2g}"
        + (f"\noffset = {res.offset:.6f}" if model == "offset" else "")
        + (f"\namplitude = {res.amplitude:.6f}"),
    )


@cli.command()
@click.option("--group", "group_name", type=click.Choice(BUILTIN_NAMES), required=True)
@click.option("--q", type=int, default=None)
@click.option("--rate", "rates", multiple=True, help="BLOCK=F_DECAY, repeatable.")
@click.pass_context
def fidelity(ctx, group_name, q, rates):
    """Average fidelity from per-block decay rates (missing blocks count as 1)."""
    g = builtin_group(group_name, q)
    dec = analytic_decomposition(g)
    dims = {lab: int(d) for lab, d in zip(dec.labels, dec.dims)}
    params = {}
    for item in rates:
        if "=" not in item:
            raise click.UsageError(f"--rate needs BLOCK=VALUE, got {item!r}")
        key, val = item.split("=", 1)
        if key not in dims:
            raise click.UsageError(
                f"unknown block {key!r}; known: {sorted(dims)}"
            )
        params[key] = float(val)
    est = fidelity_from_quality(params, dims, g.q)
    payload = {"group": g.name, "F_avg": est.f_avg, "infidelity": 1.0 - est.f_avg}
    if group_name == "cnot_dihedral":
        f2 = params.get("pauli_z", 1.0)
        f3 = params.get("pauli_xy", 1.0)
        payload["dihedral_expression"] = dihedral_infidelity(f2, f3, g.q)
    _emit(ctx, payload, f"F_avg = {est.f_avg:.6f} (infidelity {1 - est.f_avg:.3e})")


@cli.command()
@click.argument("f_ref", type=float)
@click.argument("f_int", type=float)
@click.option("--q", type=int, default=2)
@click.option(
    "--mapping",
    type=click.Choice(("auto", "polarization", "paper")),
    default="auto",
)
@click.pass_context
def bounds(ctx, f_ref, f_int, q, mapping):
    """Interleaved-gate fidelity bounds from reference and interleaved F."""
    res = interleaved_bounds(f_ref, f_int, q, mapping=mapping)
    payload = {
        "lower": res.lower,
        "upper": res.upper,
        "estimate": res.estimate,
        "mapping": res.mapping,
    }
    _emit(
        ctx,
        payload,
        f"F_C in [{res.lower:.6f}, {res.upper:.6f}] "
        f"(point estimate {res.estimate:.6f}, {res.mapping} mapping)",
    )


@cli.command()
@click.option("--epsilon", type=float, default=0.02)
@click.option("--confidence", type=float, default=0.99)
@click.option("--value-range", nargs=2, type=float, default=(-1.0, 1.0),
              help="Range of a single weighted shot.")
@click.option("--variant", is_flag=True,
              help="Use the alternative displayed counting rule.")
@click.pass_context
def plan(ctx, epsilon, confidence, value_range, variant):
    """Shots needed for an epsilon-accurate mean at the given confidence."""
    a, b = value_range
    if variant:
        n = hoeffding_sample_size_variant(epsilon, confidence, a, b)
    else:
        n = hoeffding_sample_size(epsilon, confidence, a, b)
    _emit(
        ctx,
        {"shots": n, "epsilon": epsilon, "confidence": confidence,
         "range": [a, b], "variant": variant},
        f"N = {n}",
    )


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    """Console entry; maps package exceptions onto documented exit codes."""
    try:
        cli(args=argv, standalone_mode=False, prog_name="charb")
        return 0
    except click.exceptions.Exit as exc:  # --help / --version
        return exc.exit_code
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 2
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except (ValueError, FileNotFoundError) as exc:
        click.echo(f"configuration error: {exc}", err=True)
        return 2
    except (RuntimeError, ArithmeticError, PhysicalityError) as exc:
        click.echo(f"numerical error: {exc}", err=True)
        return 3
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
