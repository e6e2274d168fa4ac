"""Import-time selection between the compiled and pure-Python kernels.

The hot loops (fixed-step RK4 over ~1e6 steps and the piecewise
matrix-exponential reference) live in ``cavpass._kernels`` (Cython) with a
behaviour-identical numpy fallback in ``cavpass._kernels_py``.  The
compiled module is preferred when it imported cleanly; set
``CAVPASS_BACKEND=python`` or ``=cython`` to force a choice, e.g. for the
benchmark in benchmarks/kernel_bench.py.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from types import ModuleType

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on the build environment
    _compiled = None


@dataclass(frozen=True)
class Backend:
    """Uniform facade over one kernel module."""

    name: str
    module: ModuleType

    def prepare(self, term_matrices, series_ids):
        """Compile Hamiltonian terms M_k into generator form A_k = -i M_k."""
        gens = [np.ascontiguousarray(-1j * np.asarray(m, dtype=complex)) for m in term_matrices]
        return self.module.prepare(gens, list(series_ids))

    def rk4_evolve(self, handle, ctab, psi, h, snap_every, norm_out, snap_out):
        return self.module.rk4_evolve(handle, ctab, psi, h, snap_every, norm_out, snap_out)

    def magnus4_evolve(self, handle, ctab2, psi, h):
        return self.module.magnus4_evolve(handle, ctab2, psi, h)

    def shaped_positions(self, x0, v_max, entry, span, stop, h, n_nodes):
        out = np.empty(n_nodes, dtype=float)
        self.module.shaped_positions(x0, v_max, entry, span, stop, h, out)
        return out


_BACKENDS: dict[str, Backend] = {"python": Backend("python", _kernels_py)}
if _compiled is not None:
    _BACKENDS["cython"] = Backend("cython", _compiled)


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def get_backend(name: str | None = None) -> Backend:
    """Resolve a backend by name, argument first, then environment, then auto."""
    choice = name or os.environ.get("CAVPASS_BACKEND", "auto")
    if choice == "auto":
        choice = "cython" if "cython" in _BACKENDS else "python"
    try:
        return _BACKENDS[choice]
    except KeyError:
        raise ValueError(
            f"unknown backend {choice!r}; available: {available_backends()}"
        ) from None
