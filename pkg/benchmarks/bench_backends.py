"""Timing comparison between the compiled kernels and the numpy fallback.

Run from the repository root:

    python3 benchmarks/bench_backends.py --q 10 --repeat 200

The kernel-level section times both implementations in process. The
trajectory section spawns a subprocess with AMBQC_PURE_PYTHON=1 so the
whole engine runs on the fallback path.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from ambqc import _kernels_py

try:
    from ambqc import _kernels as compiled
except ImportError:
    compiled = None


def time_call(fn, repeat):
    start = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - start) / repeat


def bench_kernels(q, repeat, rng):
    dim = 1 << q
    amps = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    amps = np.ascontiguousarray(amps / np.linalg.norm(amps), dtype=np.complex128)
    op = np.ascontiguousarray(
        rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)), dtype=np.complex128
    )
    target = max(1, q // 2)

    gates = 40
    width = 24
    bits = rng.integers(0, 2, size=width).astype(np.uint8)
    wires = np.zeros((gates, 3), dtype=np.int32)
    arities = np.zeros(gates, dtype=np.int32)
    tables = np.zeros((gates, 8), dtype=np.uint8)
    for g in range(gates):
        arity = int(rng.integers(1, 4))
        arities[g] = arity
        wires[g, :arity] = rng.choice(width, size=arity, replace=False)
        tables[g, : 1 << arity] = rng.integers(0, 1 << arity, size=1 << arity)

    backends = [("pure-python", _kernels_py)]
    if compiled is not None:
        backends.insert(0, ("compiled", compiled))

    rows = []
    for label, mod in backends:
        work = bits.copy()
        t_gate = time_call(lambda: mod.run_gate_program(work, wires, arities, tables), repeat)
        t_apply = time_call(lambda: mod.apply_one_qubit(amps, q, target, op), repeat)
        t_expect = time_call(lambda: mod.expect_one_qubit(amps, q, target, op), repeat)
        rows.append((label, t_gate, t_apply, t_expect))

    print(f"kernel timings at q={q}, {repeat} repeats (seconds per call)")
    print(f"{'backend':<14} {'gate_program':>14} {'apply_1q':>14} {'expect_1q':>14}")
    for label, t_gate, t_apply, t_expect in rows:
        print(f"{label:<14} {t_gate:>14.3e} {t_apply:>14.3e} {t_expect:>14.3e}")
    if len(rows) == 2:
        print(
            "speedups (compiled over pure): "
            f"gate {rows[1][1] / rows[0][1]:.1f}x, "
            f"apply {rows[1][2] / rows[0][2]:.1f}x, "
            f"expect {rows[1][3] / rows[0][3]:.1f}x"
        )


_TRAJ_SCRIPT = """
import time
from ambqc import engine, experiments, families, randstates, _backend
instance = families.sweep_instance({q})
state = randstates.sample_haar_state({q}, experiments.trial_rng(1, 0))
rng = experiments.trial_rng(2, 0)
start = time.perf_counter()
for _ in range({trials}):
    engine.run_trajectory(instance, state, rng)
elapsed = time.perf_counter() - start
print(f"{{_backend.backend_name()}}: {trials} trajectories in {{elapsed:.2f}} s "
      f"({{1e6 * elapsed / {trials}:.0f}} us each)")
"""


def bench_trajectories(q, trials):
    print(f"\nend-to-end trajectories at q={q}")
    for extra in ({}, {"AMBQC_PURE_PYTHON": "1"}):
        out = subprocess.run(
            [sys.executable, "-c", _TRAJ_SCRIPT.format(q=q, trials=trials)],
            env=dict(os.environ, **extra),
            capture_output=True,
            text=True,
        )
        sys.stdout.write(out.stdout)
        if out.returncode != 0:
            sys.stderr.write(out.stderr)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--q", type=int, default=10, help="qubit count for kernel timings")
    parser.add_argument("--repeat", type=int, default=200)
    parser.add_argument("--trials", type=int, default=2000, help="trajectory count")
    parser.add_argument("--skip-trajectories", action="store_true")
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    if compiled is None:
        print("compiled extension not available; timing the fallback only")
    bench_kernels(args.q, args.repeat, rng)
    if not args.skip_trajectories:
        bench_trajectories(min(args.q, 8), args.trials)


if __name__ == "__main__":
    main()
