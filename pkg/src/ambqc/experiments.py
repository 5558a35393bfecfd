"""Seeded tail experiments with JSON/CSV report emission.

Every trial i draws from its own counter-based stream, so results are
bit-identical across runs and across worker counts; workers only change how
the index range is chunked. Reports carry the raw per-trial statistics, the
per-threshold exceedance rows with 95% Clopper-Pearson intervals and the
matching analytic bound, plus enough environment metadata to reproduce the
run. Set SOURCE_DATE_EPOCH to pin the embedded timestamp.
"""
from __future__ import annotations

import csv
import dataclasses
import datetime
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ._version import __version__
from . import bounds as bounds_mod
from . import control, engine, families, povm as povm_mod, randstates, statevector
from ._backend import backend_name
from .errors import ValidationError

REPORT_SCHEMA = "ambqc-report/1"
KINDS = (
    "haar-concentration",
    "schmidt-concentration",
    "lemma-r-tail",
    "hoeffding-tail",
    "surrogate-check",
    "sampling-l1",
    "purity-mean",
)
# Stream index reserved for shared Monte Carlo baselines (never a trial index).
_BASELINE_STREAM = (1 << 63) - 1


def trial_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent stream for one trial: Philox keyed by (seed, index)."""
    key = np.array([master_seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def clopper_pearson(count: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Exact two-sided binomial interval for count successes in trials."""
    from scipy.stats import beta

    if not 0 <= count <= trials or trials < 1:
        raise ValidationError(f"count {count} outside 0..{trials}")
    alpha = 1.0 - confidence
    low = 0.0 if count == 0 else float(beta.ppf(alpha / 2.0, count, trials - count + 1))
    high = 1.0 if count == trials else float(beta.ppf(1.0 - alpha / 2.0, count + 1, trials - count))
    return low, high


@dataclasses.dataclass
class ExperimentConfig:
    kind: str
    trials: int
    seed: int
    eps: tuple[float, ...] = ()
    q: int | None = None
    rank: int | None = None
    reduced: int | None = None
    instance_path: str | None = None
    family: dict | None = None
    state_source: str = "haar"
    projector: str = "parity"
    mc_shots: int = 20000

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ValidationError("experiment config must be a JSON object")
        kind = data.get("kind")
        if kind not in KINDS:
            raise ValidationError(f"unknown experiment kind {kind!r}; expected one of {KINDS}")
        cfg = cls(
            kind=kind,
            trials=int(data.get("trials", 0)),
            seed=int(data.get("seed", 0)),
            eps=tuple(float(e) for e in data.get("eps", ())),
            q=None if data.get("q") is None else int(data["q"]),
            rank=None if data.get("K") is None else int(data["K"]),
            reduced=None if data.get("k") is None else int(data["k"]),
            instance_path=data.get("instance"),
            family=data.get("family"),
            state_source=data.get("state_source", "haar"),
            projector=data.get("projector", "parity"),
            mc_shots=int(data.get("mc_shots", 20000)),
        )
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind, "trials": self.trials, "seed": self.seed}
        if self.eps:
            out["eps"] = list(self.eps)
        if self.q is not None:
            out["q"] = self.q
        if self.rank is not None:
            out["K"] = self.rank
        if self.reduced is not None:
            out["k"] = self.reduced
        if self.instance_path is not None:
            out["instance"] = self.instance_path
        if self.family is not None:
            out["family"] = self.family
        if self.state_source != "haar":
            out["state_source"] = self.state_source
        if self.projector != "parity":
            out["projector"] = self.projector
        if self.mc_shots != 20000:
            out["mc_shots"] = self.mc_shots
        return out

    def validate(self) -> None:
        if self.trials < 1:
            raise ValidationError("trials must be at least 1")
        if self.seed < 0:
            raise ValidationError("seed must be nonnegative")
        if self.trials >= _BASELINE_STREAM:
            raise ValidationError("trial count collides with the reserved baseline stream")
        for e in self.eps:
            if not e > 0.0:
                raise ValidationError(f"eps values must be positive, got {e}")
        needs_instance = self.kind in (
            "haar-concentration",
            "schmidt-concentration",
            "surrogate-check",
            "sampling-l1",
        )
        if needs_instance and not (self.instance_path or self.family):
            # haar-concentration can target the bare parity projector instead
            # of an instance; the statistic then has a closed form at any q.
            projector_mode = (
                self.kind == "haar-concentration"
                and self.projector == "parity"
                and self.q is not None
            )
            if not projector_mode:
                raise ValidationError(f"{self.kind} needs an 'instance' path or a 'family' spec")
        if self.kind in ("schmidt-concentration", "lemma-r-tail", "hoeffding-tail", "purity-mean"):
            if self.rank is None:
                raise ValidationError(f"{self.kind} needs K")
        if self.kind in ("lemma-r-tail", "hoeffding-tail", "purity-mean"):
            if self.q is None:
                raise ValidationError(f"{self.kind} needs q")
        if self.kind in ("haar-concentration", "schmidt-concentration", "hoeffding-tail", "sampling-l1"):
            if not self.eps:
                raise ValidationError(f"{self.kind} needs a nonempty eps grid")
        if self.kind == "sampling-l1" and self.state_source == "schmidt" and self.rank is None:
            raise ValidationError("sampling-l1 from Schmidt states needs K")
        if self.kind == "hoeffding-tail" and self.projector != "parity":
            raise ValidationError("hoeffding-tail supports the 'parity' projector only")
        if self.state_source not in ("haar", "schmidt"):
            raise ValidationError(f"unknown state source {self.state_source!r}")


def build_family_instance(spec: dict) -> control.AmbqcInstance:
    """Instantiate one of the named generator families from a config dict."""
    if not isinstance(spec, dict) or "name" not in spec:
        raise ValidationError("family spec needs a 'name'")
    name = spec["name"]
    table = povm_mod.PovmTable([povm_mod.builtin(spec.get("povm", "z"))])
    accept = spec.get("accept", "parity")
    t = int(spec.get("t", 0))
    task = control.Task("sampling", t) if t else control.Task("decision")
    if name == "sweep":
        return families.sweep_instance(int(spec["q"]), table, accept, task)
    if name == "ordered-sweep":
        return families.ordered_sweep_instance(spec["order"], table, accept, task)
    if name == "random":
        rng = np.random.default_rng(int(spec.get("seed", 0)))
        return families.random_instance(
            int(spec["q"]),
            int(spec.get("chaff", 8)),
            rng,
            table,
            int(spec.get("n", 0)),
            task,
        )
    raise ValidationError(f"unknown family {name!r}")


def _load_instance(config: ExperimentConfig) -> control.AmbqcInstance:
    if config.instance_path:
        try:
            with open(config.instance_path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ValidationError(f"cannot read instance {config.instance_path}: {exc}") from exc
        return control.parse_instance(text)
    return build_family_instance(config.family)


class _Context:
    """Per-process experiment state shared by all trials of one config."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.instance = None
        self.p_op = None
        self.mixed_value = None
        self.prepared = None
        self.expected_probs = None
        self.history_index = None
        self.surrogate_dist = None
        self.threshold = None
        self.reduced = None
        self.projector_only = False
        kind = config.kind
        if kind == "haar-concentration" and not (config.instance_path or config.family):
            self.projector_only = True
            self.mixed_value = 0.5
            return
        if kind in ("haar-concentration", "schmidt-concentration", "surrogate-check", "sampling-l1"):
            self.instance = _load_instance(config)
            control.require_complete(self.instance)
        if kind in ("haar-concentration", "schmidt-concentration"):
            if self.instance.task.kind != "decision":
                raise ValidationError(f"{kind} needs a decision instance")
            q = self.instance.num_qubits
            if (
                q <= engine.OPERATOR_QUBIT_LIMIT
                and self.instance.povm_table.max_arity**q <= control.MAX_HISTORIES
            ):
                self.p_op, _ = engine.build_accepting_operator(self.instance)
                self.mixed_value = engine.mixed_acceptance_from_operator(self.p_op)
            else:
                rng = trial_rng(config.seed, _BASELINE_STREAM)
                self.mixed_value = engine.estimate_acceptance(
                    self.instance, engine.MIXED, config.mc_shots, rng
                ).estimate
        elif kind == "surrogate-check":
            enum = engine.enumerate_histories(self.instance, engine.MIXED)
            self.history_index = {}
            probs = []
            for idx, history in enumerate(enum.histories):
                key = tuple(step[2] for step in history.steps)
                self.history_index[key] = idx
                probs.append(history.probability)
            self.expected_probs = np.array(probs)
            self.prepared = engine._Prepared(self.instance)
        elif kind == "sampling-l1":
            if self.instance.task.kind != "sampling":
                raise ValidationError("sampling-l1 needs a sampling instance")
            self.surrogate_dist = engine.output_distribution(self.instance, engine.MIXED)
        elif kind == "lemma-r-tail":
            reduced = config.reduced
            if reduced is None:
                reduced = bounds_mod.reduction_choice(config.rank)
            self.reduced = reduced
            self.threshold = bounds_mod.operator_norm_threshold(config.rank, reduced)

    @property
    def num_qubits(self) -> int:
        if self.instance is not None:
            return self.instance.num_qubits
        return self.config.q


def _stat_concentration(ctx: _Context, rng) -> float:
    config = ctx.config
    q = ctx.num_qubits
    if config.kind == "haar-concentration":
        state = randstates.sample_haar_state(q, rng)
    else:
        state = randstates.draw_schmidt_state(q, config.rank, rng).to_state()
    if ctx.projector_only:
        value = statevector.even_parity_expectation(state)
    elif ctx.p_op is not None:
        value = engine.acceptance_from_operator(ctx.p_op, state)
    else:
        value = engine.estimate_acceptance(ctx.instance, state, config.mc_shots, rng).estimate
    return abs(value - ctx.mixed_value)


def _stat_lemma_r(ctx: _Context, rng) -> float:
    vectors = randstates.sample_local_vectors(ctx.config.q, ctx.config.rank, rng)
    return randstates.gram_operator_norm(vectors)


def _stat_hoeffding(ctx: _Context, rng) -> float:
    vectors = randstates.sample_local_vectors(ctx.config.q, ctx.config.rank, rng)
    z = np.abs(vectors[:, :, 0]) ** 2 - np.abs(vectors[:, :, 1]) ** 2
    terms = 0.5 * (1.0 + np.prod(z, axis=1))
    return abs(float(terms.mean()) - 0.5)


def _stat_surrogate(ctx: _Context, rng) -> float:
    history = engine._surrogate_trajectory(ctx.prepared, rng)
    key = tuple(step[2] for step in history.steps)
    return float(ctx.history_index[key])


def _stat_sampling(ctx: _Context, rng) -> float:
    config = ctx.config
    q = ctx.num_qubits
    if config.state_source == "schmidt":
        state = randstates.draw_schmidt_state(q, config.rank, rng).to_state()
    else:
        state = randstates.sample_haar_state(q, rng)
    dist = engine.output_distribution(ctx.instance, state)
    return engine.l1_distance(dist, ctx.surrogate_dist)


def _stat_purity(ctx: _Context, rng) -> float:
    vectors = randstates.sample_local_vectors(ctx.config.q, ctx.config.rank, rng)
    gram = randstates.gram_matrix(vectors)
    return float(np.sum(np.abs(gram) ** 2))


_STATS = {
    "haar-concentration": _stat_concentration,
    "schmidt-concentration": _stat_concentration,
    "lemma-r-tail": _stat_lemma_r,
    "hoeffding-tail": _stat_hoeffding,
    "surrogate-check": _stat_surrogate,
    "sampling-l1": _stat_sampling,
    "purity-mean": _stat_purity,
}

_CTX_CACHE: dict[str, _Context] = {}


def _context_for(config_json: str) -> _Context:
    ctx = _CTX_CACHE.get(config_json)
    if ctx is None:
        ctx = _Context(ExperimentConfig.from_dict(json.loads(config_json)))
        _CTX_CACHE[config_json] = ctx
    return ctx


def _chunk_worker(args: tuple[str, int, int]) -> list[float]:
    config_json, start, length = args
    ctx = _context_for(config_json)
    stat = _STATS[ctx.config.kind]
    return [stat(ctx, trial_rng(ctx.config.seed, i)) for i in range(start, start + length)]


def _bound_for(ctx: _Context, eps: float):
    config = ctx.config
    kind = config.kind
    try:
        if kind == "haar-concentration":
            if ctx.projector_only:
                # One fixed observable, no union over circuits: the plain
                # sphere-concentration tail at unit Lipschitz constant.
                return bounds_mod.levy_log_tail(eps, 2 << ctx.num_qubits, 1.0)
            circuit = ctx.instance.circuit
            return bounds_mod.haar_log_bound(eps, ctx.num_qubits, circuit.width, circuit.gate_budget)
        if kind == "schmidt-concentration":
            circuit = ctx.instance.circuit
            return bounds_mod.schmidt_log_bound(
                eps, ctx.num_qubits, circuit.width, circuit.gate_budget, config.rank
            )
        if kind == "sampling-l1":
            circuit = ctx.instance.circuit
            return bounds_mod.sampling_log_bound(
                eps, ctx.num_qubits, circuit.width, circuit.gate_budget, ctx.instance.task.t
            )
        if kind == "hoeffding-tail":
            return bounds_mod.hoeffding_log_bound(eps, config.rank)
        if kind == "lemma-r-tail":
            return bounds_mod.operator_norm_log_tail(config.q, config.rank, ctx.reduced)
    except ValidationError:
        return None
    return None


def _threshold_row(ctx: _Context, label: str, value: float, stats: list[float]) -> dict:
    count = int(sum(1 for s in stats if s > value))
    trials = len(stats)
    low, high = clopper_pearson(count, trials)
    bound = _bound_for(ctx, value)
    row = {
        label: value,
        "count": count,
        "frequency": count / trials,
        "cp_low": low,
        "cp_high": high,
    }
    if bound is None:
        row["log_bound"] = None
        row["bound_probability"] = None
        row["vacuous"] = None
    else:
        row["log_bound"] = bound.log_nats
        row["bound_probability"] = bound.probability
        row["vacuous"] = bound.vacuous
    return row


def _build_rows(ctx: _Context, stats: list[float]) -> list[dict]:
    kind = ctx.config.kind
    if kind in ("haar-concentration", "schmidt-concentration", "hoeffding-tail", "sampling-l1"):
        return [_threshold_row(ctx, "eps", e, stats) for e in ctx.config.eps]
    if kind == "lemma-r-tail":
        return [_threshold_row(ctx, "threshold", ctx.threshold, stats)]
    return []


def _build_summary(ctx: _Context, stats: list[float], rows: list[dict]) -> dict:
    arr = np.asarray(stats)
    config = ctx.config
    summary: dict = {
        "kind": config.kind,
        "trials": len(stats),
        "stat_mean": float(arr.mean()),
        "stat_max": float(arr.max()),
    }
    if config.kind in ("haar-concentration", "schmidt-concentration"):
        summary["mixed_acceptance"] = ctx.mixed_value
        summary["exact_operator"] = ctx.p_op is not None or ctx.projector_only
        if ctx.projector_only:
            summary["projector"] = config.projector
    elif config.kind == "lemma-r-tail":
        summary["threshold"] = ctx.threshold
        summary["k"] = ctx.reduced
    elif config.kind == "surrogate-check":
        from scipy.stats import chisquare

        counts = np.zeros(ctx.expected_probs.shape[0])
        for s in stats:
            counts[int(s)] += 1
        expected = ctx.expected_probs * len(stats)
        chi2, pvalue = chisquare(counts, expected)
        summary["chi2"] = float(chi2)
        summary["dof"] = int(counts.shape[0] - 1)
        summary["p_value"] = float(pvalue)
    elif config.kind == "purity-mean":
        reference = randstates.purity_mean_reference(config.q, config.rank)
        stderr = float(arr.std(ddof=1) / math.sqrt(len(stats))) if len(stats) > 1 else 0.0
        summary["reference_mean"] = reference
        summary["stderr"] = stderr
        summary["z_score"] = float((arr.mean() - reference) / stderr) if stderr else 0.0
    return summary


@dataclasses.dataclass
class TailReport:
    schema: str
    config: dict
    stats: list[float]
    rows: list[dict]
    summary: dict
    env: dict

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "config": self.config,
            "stats": self.stats,
            "rows": self.rows,
            "summary": self.summary,
            "env": self.env,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TailReport":
        if not isinstance(data, dict) or data.get("schema") != REPORT_SCHEMA:
            raise ValidationError(
                f"expected a {REPORT_SCHEMA} document, got schema {data.get('schema')!r}"
            )
        return cls(
            schema=data["schema"],
            config=data["config"],
            stats=[float(s) for s in data["stats"]],
            rows=list(data["rows"]),
            summary=dict(data["summary"]),
            env=dict(data.get("env", {})),
        )


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        moment = datetime.datetime.fromtimestamp(int(epoch), tz=datetime.timezone.utc)
    else:
        moment = datetime.datetime.now(tz=datetime.timezone.utc)
    return moment.replace(microsecond=0).isoformat()


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> TailReport:
    """Execute all trials (chunked over `workers` processes) and assemble the report."""
    if workers is None:
        workers = int(os.environ.get("AMBQC_THREADS", "1"))
    workers = max(1, workers)
    config_json = json.dumps(config.to_dict(), sort_keys=True)
    ctx = _context_for(config_json)
    trials = config.trials
    if workers == 1 or trials < 2 * workers:
        stats = _chunk_worker((config_json, 0, trials))
    else:
        chunk = max(1, math.ceil(trials / (workers * 4)))
        tasks = [
            (config_json, start, min(chunk, trials - start))
            for start in range(0, trials, chunk)
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_worker, tasks))
        stats = [s for part in parts for s in part]
    rows = _build_rows(ctx, stats)
    summary = _build_summary(ctx, stats, rows)
    env = {
        "package_version": __version__,
        "backend": backend_name(),
        "timestamp": _timestamp(),
    }
    return TailReport(REPORT_SCHEMA, config.to_dict(), [float(s) for s in stats], rows, summary, env)


def compare_with_bounds(report: TailReport) -> list[dict]:
    """Square empirical exceedance rows against their analytic bounds.

    A row violates its bound when the lower 95% confidence limit of the
    exceedance frequency is strictly above a non-vacuous bound probability.
    Kinds without tail rows have nothing to compare and raise.
    """
    if not report.rows:
        raise ValidationError(
            f"experiment kind {report.config.get('kind')!r} has no tail bound to compare"
        )
    out = []
    for row in report.rows:
        entry = dict(row)
        bound_prob = row.get("bound_probability")
        vacuous = row.get("vacuous")
        if bound_prob is None:
            entry["violation"] = False
            entry["reason"] = "no bound (precondition unmet)"
        elif vacuous:
            entry["violation"] = False
            entry["reason"] = "bound vacuous"
        else:
            entry["violation"] = bool(row["cp_low"] > bound_prob)
            entry["reason"] = "checked"
        out.append(entry)
    return out


_CSV_FIELDS = (
    "row_type",
    "index",
    "value",
    "count",
    "frequency",
    "cp_low",
    "cp_high",
    "log_bound",
    "vacuous",
)


def _csv_path(path: str) -> str:
    base, ext = os.path.splitext(str(path))
    return base + ".csv" if ext.lower() == ".json" else str(path) + ".csv"


def save_report(report: TailReport, path) -> str:
    """Write the JSON report plus a CSV sibling; returns the CSV path."""
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    csv_file = _csv_path(path)
    with open(csv_file, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_FIELDS)
        for i, stat in enumerate(report.stats):
            writer.writerow(["trial", i, repr(float(stat)), "", "", "", "", "", ""])
        for j, row in enumerate(report.rows):
            value = row.get("eps", row.get("threshold"))
            log_bound = row.get("log_bound")
            writer.writerow(
                [
                    "threshold",
                    j,
                    repr(float(value)),
                    row["count"],
                    repr(float(row["frequency"])),
                    repr(float(row["cp_low"])),
                    repr(float(row["cp_high"])),
                    "" if log_bound is None else repr(float(log_bound)),
                    "" if row.get("vacuous") is None else str(bool(row["vacuous"])).lower(),
                ]
            )
    return csv_file


def load_report(path) -> TailReport:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read report {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"report {path} is not valid JSON: {exc}") from exc
    return TailReport.from_dict(data)
