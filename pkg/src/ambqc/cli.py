"""Command line front end.

Exit codes: 0 success, 2 validation problems (including usage errors),
3 model violations at run time, 4 I/O failures. Results go to stdout,
human-readable by default or as JSON/CSV with --format; diagnostics go
to stderr.
"""
from __future__ import annotations

import io
import json
import sys

import click
import numpy as np

from . import bounds as bounds_mod
from . import control, engine, experiments, randstates
from ._version import __version__
from .errors import ModelError, ValidationError


def _flatten(payload: dict, prefix: str = "") -> dict:
    flat = {}
    for key, value in payload.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, name + "."))
        else:
            flat[name] = value
    return flat


def _text_lines(payload: dict, indent: int = 0) -> list[str]:
    pad = "  " * indent
    lines = []
    for key, value in payload.items():
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            lines.extend(_text_lines(value, indent + 1))
        elif isinstance(value, list) and value and all(isinstance(x, dict) for x in value):
            lines.append(f"{pad}{key}:")
            for item in value:
                lines.append("  " * (indent + 1) + json.dumps(item, sort_keys=True))
        else:
            lines.append(f"{pad}{key} = {json.dumps(value, sort_keys=True)}")
    return lines


def _csv_cell(value):
    if value is None or isinstance(value, (str, int, float, bool)):
        return value
    return json.dumps(value, sort_keys=True)


def _csv_text(payload: dict) -> str:
    import csv

    # A payload that is mostly one table gets that table as rows; anything
    # else flattens to a single header/value pair of lines.
    tables = [
        (k, v)
        for k, v in payload.items()
        if isinstance(v, list) and v and all(isinstance(x, dict) for x in v)
    ]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if len(tables) == 1:
        key, rows = tables[0]
        fields = sorted({name for row in rows for name in row})
        writer.writerow(fields)
        for row in rows:
            writer.writerow([_csv_cell(row.get(f)) for f in fields])
    else:
        flat = _flatten(payload)
        writer.writerow(list(flat))
        writer.writerow([_csv_cell(v) for v in flat.values()])
    return buf.getvalue()


def _emit(payload: dict, fmt: str = "text") -> None:
    if fmt == "json":
        click.echo(json.dumps(payload, indent=2, sort_keys=True))
    elif fmt == "csv":
        click.echo(_csv_text(payload), nl=False)
    else:
        click.echo("\n".join(_text_lines(payload)))


_format_option = click.option(
    "--format",
    "fmt",
    type=click.Choice(["text", "json", "csv"]),
    default="text",
    show_default=True,
    help="Output rendering.",
)


def _read_text(path: str) -> str:
    with open(path) as fh:
        return fh.read()


def _load_instance(path: str) -> control.AmbqcInstance:
    return control.parse_instance(_read_text(path))


def _load_source(state: str | None, mixed: bool):
    if mixed == (state is not None):
        raise ValidationError("pick exactly one of --mixed or --state")
    if mixed:
        return engine.MIXED
    return randstates.load_state_dump(state)


@click.group()
@click.version_option(version=__version__, prog_name="ambqc")
def cli():
    """Simulate adaptively measured resource states and check tail bounds."""


@cli.group()
def instance():
    """Inspect and validate instance files."""


@instance.command("validate")
@click.argument("path", type=click.Path())
@_format_option
def instance_validate(path, fmt):
    """Structural validation plus a completeness sweep when enumerable."""
    inst = _load_instance(path)
    payload = {
        "valid": True,
        "q": inst.num_qubits,
        "n": inst.circuit.num_inputs,
        "w": inst.circuit.width,
        "v": inst.circuit.gate_budget,
        "povms": len(inst.povm_table),
        "task": inst.task.kind,
    }
    try:
        report = control.verify_completeness(inst)
    except ValidationError as exc:
        payload["complete"] = None
        payload["completeness"] = f"skipped: {exc}"
        _emit(payload, fmt)
        return
    payload["complete"] = report.complete
    payload["histories_checked"] = report.histories_checked
    if not report.complete:
        payload["witness"] = [list(step) for step in report.witness]
        _emit(payload, fmt)
        raise ModelError(report.message)
    _emit(payload, fmt)


@instance.command("enumerate")
@click.argument("path", type=click.Path())
@click.option("--state", default=None, type=click.Path(), help="State dump to run against.")
@click.option("--mixed", is_flag=True, help="Use the maximally mixed surrogate.")
@_format_option
def instance_enumerate(path, state, mixed, fmt):
    """List every history with its exact probability."""
    inst = _load_instance(path)
    source = _load_source(state, mixed)
    enum = engine.enumerate_histories(inst, source)
    payload = {
        "histories": [
            {"steps": [list(s) for s in h.steps], "output": h.output, "probability": h.probability}
            for h in enum.histories
        ],
        "total_probability": enum.total_probability,
    }
    if enum.acceptance is not None:
        payload["acceptance"] = enum.acceptance
    _emit(payload, fmt)


@instance.command("operator")
@click.argument("path", type=click.Path())
@click.option("--out", default=None, type=click.Path(), help="Write P as a .npy file.")
@_format_option
def instance_operator(path, out, fmt):
    """Build the dense accepting operator P (decision tasks, q <= 10)."""
    inst = _load_instance(path)
    p_op, q_op = engine.build_accepting_operator(inst)
    payload = {
        "dim": p_op.shape[0],
        "trace": float(np.trace(p_op).real),
        "accept_trace_fraction": engine.mixed_acceptance_from_operator(p_op),
        "reject_trace_fraction": engine.mixed_acceptance_from_operator(q_op),
    }
    if out:
        np.save(out, p_op)
        payload["out"] = out
    _emit(payload, fmt)


@cli.group()
def state():
    """Sample and dump resource states."""


@state.command("haar")
@click.option("--q", "num_qubits", required=True, type=int)
@click.option("--seed", required=True, type=int)
@click.option("--out", required=True, type=click.Path())
@_format_option
def state_haar(num_qubits, seed, out, fmt):
    """Haar-random state to a binary amplitude dump."""
    rng = experiments.trial_rng(seed, 0)
    psi = randstates.sample_haar_state(num_qubits, rng)
    randstates.save_state_binary(psi, out)
    _emit({"q": num_qubits, "seed": seed, "out": out, "format": "binary"}, fmt)


@state.command("schmidt")
@click.option("--q", "num_qubits", required=True, type=int)
@click.option("--K", "rank", required=True, type=int, help="Schmidt rank K.")
@click.option("--seed", required=True, type=int)
@click.option("--out", required=True, type=click.Path())
@click.option("--expand", default=None, type=click.Path(), help="Also dump dense amplitudes here.")
@_format_option
def state_schmidt(num_qubits, rank, seed, out, expand, fmt):
    """Random rank-K state to a JSON dump of local vectors and coefficients."""
    rng = experiments.trial_rng(seed, 0)
    sample = randstates.draw_schmidt_state(num_qubits, rank, rng)
    randstates.save_schmidt_json(sample, out, seed=seed)
    payload = {"q": num_qubits, "K": rank, "seed": seed, "out": out, "format": "json"}
    if expand:
        randstates.save_state_binary(sample.to_state(), expand)
        payload["expand"] = expand
    _emit(payload, fmt)


@cli.command("run")
@click.option("--instance", "-i", "instance_path", required=True, type=click.Path())
@click.option("--state", default=None, type=click.Path())
@click.option("--mixed", is_flag=True)
@click.option("-N", "--trials", "trials", default=None, type=int, help="Monte Carlo trajectories.")
@click.option("--exact", is_flag=True, help="Exhaustive enumeration instead of sampling.")
@click.option("--seed", default=0, type=int)
@_format_option
def run_cmd(instance_path, state, mixed, trials, exact, seed, fmt):
    """Run an instance against a state or the mixed surrogate."""
    inst = _load_instance(instance_path)
    source = _load_source(state, mixed)
    if exact == (trials is not None):
        raise ValidationError("pick exactly one of --exact or -N")
    if inst.task.kind == "decision":
        if exact:
            enum = engine.enumerate_histories(inst, source)
            payload = {"task": "decision", "method": "exact", "acceptance": enum.acceptance}
        else:
            rng = experiments.trial_rng(seed, 0)
            est = engine.estimate_acceptance(inst, source, trials, rng)
            payload = {
                "task": "decision",
                "method": "monte-carlo",
                "acceptance": est.estimate,
                "stderr": est.stderr,
                "accepted": est.accepted,
                "trials": est.trials,
                "seed": seed,
            }
    else:
        if exact:
            dist = engine.output_distribution(inst, source)
            method = "exact"
        else:
            rng = experiments.trial_rng(seed, 0)
            dist = engine.output_distribution(inst, source, trials=trials, rng=rng)
            method = "monte-carlo"
        payload = {
            "task": "sampling",
            "method": method,
            "t": inst.task.t,
            "distribution": [float(p) for p in dist],
        }
    _emit(payload, fmt)


@cli.command("eg")
@click.option("--state", "state_path", required=True, type=click.Path())
@click.option("--restarts", default=8, type=int, show_default=True)
@click.option("--iters", default=400, type=int, show_default=True, help="Max sweeps per start.")
@click.option("--seed", default=0, type=int)
@_format_option
def eg_cmd(state_path, restarts, iters, seed, fmt):
    """Certified upper estimate of geometric entanglement, in bits."""
    psi = randstates.load_state_dump(state_path)
    rng = experiments.trial_rng(seed, 0)
    est = randstates.estimate_geometric_entanglement(
        psi, restarts=restarts, max_iters=iters, rng=rng
    )
    _emit(
        {
            "bits": est.bits,
            "overlap_sq": est.overlap_sq,
            "iterations": est.iterations,
            "converged": est.converged,
            "restarts": restarts,
            "seed": seed,
            "witness": [[[c.real, c.imag] for c in row] for row in est.witness],
        },
        fmt,
    )


@cli.group()
def bounds():
    """Evaluate the closed-form tail bounds."""


def _emit_bound(name: str, value: bounds_mod.BoundValue, fmt: str, **params) -> None:
    payload = {"bound": name, **params, **value.as_dict()}
    _emit(payload, fmt)


@bounds.command("thm1")
@click.option("--eps", required=True, type=float)
@click.option("--q", required=True, type=int)
@click.option("--w", required=True, type=int)
@click.option("--v", required=True, type=int)
@_format_option
def bounds_thm1(eps, q, w, v, fmt):
    """Decision tail for Haar states over all width-w, v-gate controllers."""
    _emit_bound("thm1", bounds_mod.haar_log_bound(eps, q, w, v), fmt, eps=eps, q=q, w=w, v=v)


@bounds.command("thm2")
@click.option("--eps", required=True, type=float)
@click.option("--q", required=True, type=int)
@click.option("--w", required=True, type=int)
@click.option("--v", required=True, type=int)
@click.option("--K", "rank", required=True, type=int)
@_format_option
def bounds_thm2(eps, q, w, v, rank, fmt):
    """Decision tail for random Schmidt-rank-K states."""
    _emit_bound(
        "thm2", bounds_mod.schmidt_log_bound(eps, q, w, v, rank), fmt, eps=eps, q=q, w=w, v=v, K=rank
    )


@bounds.command("sampling")
@click.option("--eps", required=True, type=float)
@click.option("--q", required=True, type=int)
@click.option("--w", required=True, type=int)
@click.option("--v", required=True, type=int)
@click.option("--t", required=True, type=int)
@_format_option
def bounds_sampling(eps, q, w, v, t, fmt):
    """Tail for t-bit sampling outputs staying near the surrogate."""
    _emit_bound(
        "sampling", bounds_mod.sampling_log_bound(eps, q, w, v, t), fmt, eps=eps, q=q, w=w, v=v, t=t
    )


@bounds.command("lemma-r")
@click.option("--q", required=True, type=int)
@click.option("--K", "rank", required=True, type=int)
@click.option("--k", "reduced", default=None, type=int, help="Reduction size (default: chosen from K).")
@_format_option
def bounds_lemma_r(q, rank, reduced, fmt):
    """Tail for the ensemble operator norm exceeding 2K/2^k."""
    if reduced is None:
        reduced = bounds_mod.reduction_choice(rank)
    value = bounds_mod.operator_norm_log_tail(q, rank, reduced)
    _emit_bound(
        "lemma-r",
        value,
        fmt,
        q=q,
        K=rank,
        k=reduced,
        threshold=bounds_mod.operator_norm_threshold(rank, reduced),
    )


@bounds.command("hoeffding")
@click.option("--eps", required=True, type=float)
@click.option("--K", "rank", required=True, type=int)
@_format_option
def bounds_hoeffding(eps, rank, fmt):
    """Two-sided tail for a mean of K bounded product expectations."""
    _emit_bound("hoeffding", bounds_mod.hoeffding_log_bound(eps, rank), fmt, eps=eps, K=rank)


@bounds.command("levy")
@click.option("--eps", required=True, type=float)
@click.option("--d", "dim", required=True, type=int, help="Real ambient dimension (2*2^q).")
@click.option("--lam", required=True, type=float, help="Lipschitz constant.")
@_format_option
def bounds_levy(eps, dim, lam, fmt):
    """Concentration tail for a Lipschitz function on the unit sphere."""
    _emit_bound("levy", bounds_mod.levy_log_tail(eps, dim, lam), fmt, eps=eps, d=dim, lam=lam)


@cli.group()
def experiment():
    """Run seeded tail experiments."""


@experiment.command("run")
@click.option("--config", "-c", "config_path", required=True, type=click.Path())
@click.option("--threads", default=None, type=int, help="Worker processes (default AMBQC_THREADS).")
@click.option("--out", default=None, type=click.Path(), help="Report path (default <config>.report.json).")
@_format_option
def experiment_run(config_path, threads, out, fmt):
    """Execute the experiment described by a JSON config file."""
    try:
        data = json.loads(_read_text(config_path))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {config_path} is not valid JSON: {exc}") from exc
    config = experiments.ExperimentConfig.from_dict(data)
    report = experiments.run_experiment(config, workers=threads)
    if out is None:
        base = str(config_path)
        if base.endswith(".json"):
            base = base[: -len(".json")]
        out = base + ".report.json"
    csv_path = experiments.save_report(report, out)
    _emit({"report": str(out), "csv": csv_path, "summary": report.summary}, fmt)


@cli.group()
def report():
    """Inspect saved reports."""


@report.command("summarize")
@click.argument("path", type=click.Path())
@_format_option
def report_summarize(path, fmt):
    """Print the summary and the bound comparison for a report file."""
    rpt = experiments.load_report(path)
    payload = {
        "kind": rpt.config.get("kind"),
        "trials": len(rpt.stats),
        "summary": rpt.summary,
        "env": rpt.env,
    }
    if rpt.rows:
        comparison = experiments.compare_with_bounds(rpt)
        payload["comparison"] = comparison
        payload["violations"] = int(sum(1 for row in comparison if row["violation"]))
    _emit(payload, fmt)


def main():
    try:
        cli.main(standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.Abort:
        sys.exit(130)
    except click.ClickException as exc:
        exc.show()
        sys.exit(2)
    except ValidationError as exc:
        click.echo(f"validation error: {exc}", err=True)
        sys.exit(2)
    except ModelError as exc:
        click.echo(f"model error: {exc}", err=True)
        sys.exit(3)
    except OSError as exc:
        click.echo(f"i/o error: {exc}", err=True)
        sys.exit(4)


if __name__ == "__main__":
    main()
