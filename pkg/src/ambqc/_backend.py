"""Kernel selection: compiled extension if importable, numpy otherwise.

Set AMBQC_PURE_PYTHON=1 to force the numpy implementation regardless of
whether the extension was built. Both expose run_gate_program,
apply_one_qubit and expect_one_qubit with identical semantics.
"""
from __future__ import annotations

import os

if os.environ.get("AMBQC_PURE_PYTHON"):
    from . import _kernels_py as kernels

    USING_EXTENSION = False
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]

        USING_EXTENSION = True
    except ImportError:
        from . import _kernels_py as kernels  # type: ignore[no-redef]

        USING_EXTENSION = False

run_gate_program = kernels.run_gate_program
apply_one_qubit = kernels.apply_one_qubit
expect_one_qubit = kernels.expect_one_qubit


def backend_name() -> str:
    return "compiled" if USING_EXTENSION else "pure-python"
