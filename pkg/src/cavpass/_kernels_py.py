"""Pure numpy stepping kernels.

Fallback twin of the compiled module `cavpass._kernels`; both expose the
same functions with identical semantics so the backend can be swapped at
import time (see cavpass.kernels).  The Hamiltonian is a linear
combination H(t) = sum_k c_k(t) M_k; callers pass the generator terms
A_k = -i M_k as a dense stack plus one coefficient-series index per term.
Coefficient tables are sampled on a half-step grid (RK4 needs t, t+h/2
and t+h).
"""

from __future__ import annotations

import math

import numpy as np


def prepare(mats: np.ndarray, sers: np.ndarray):
    """Package generator terms for rk4/magnus: dense stack plus series ids."""
    stack = np.ascontiguousarray(np.asarray(mats, dtype=complex))
    sers = np.asarray(sers, dtype=np.int32)
    return (stack, sers)


def _assemble(handle, ctab: np.ndarray, s: int) -> np.ndarray:
    stack, sers = handle
    return np.tensordot(ctab[sers, s], stack, axes=1)


def rk4_evolve(handle, ctab, psi, h, snap_every, norm_out, snap_out) -> int:
    """Advance psi by n_steps = norm_out.size classic RK4 steps in place.

    ctab has shape (K, 2*n_steps + 1): coefficient samples on the
    half-step grid.  norm_out receives |psi|^2 after every step; if
    snap_every > 0 a copy of psi is stored in snap_out after every
    snap_every-th step.  Returns the number of snapshots written.
    """
    n_steps = norm_out.shape[0]
    nsnap = 0
    for i in range(n_steps):
        s = 2 * i
        a0 = _assemble(handle, ctab, s)
        a1 = _assemble(handle, ctab, s + 1)
        a2 = _assemble(handle, ctab, s + 2)
        k1 = a0 @ psi
        k2 = a1 @ (psi + (0.5 * h) * k1)
        k3 = a1 @ (psi + (0.5 * h) * k2)
        k4 = a2 @ (psi + h * k3)
        psi += (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        norm_out[i] = np.vdot(psi, psi).real
        if snap_every > 0 and (i + 1) % snap_every == 0:
            snap_out[nsnap, :] = psi
            nsnap += 1
    return nsnap


_SQRT3_12 = math.sqrt(3.0) / 12.0


def magnus4_evolve(handle, ctab2, psi, h) -> None:
    """Piecewise matrix-exponential propagation, 4th-order Magnus.

    Each piece samples the generator at the two Gauss-Legendre nodes
    (ctab2 shape (K, 2*n_pieces)) and applies exp(Omega) to psi via a
    Taylor series, with Omega = (h/2)(A1 + A2) + (sqrt(3) h^2 / 12) [A2, A1].
    For a constant generator this is the exact exponential midpoint chain.
    """
    n_pieces = ctab2.shape[1] // 2
    c2 = _SQRT3_12 * h * h
    for i in range(n_pieces):
        a1 = _assemble(handle, ctab2, 2 * i)
        a2 = _assemble(handle, ctab2, 2 * i + 1)
        omega = (0.5 * h) * (a1 + a2) + c2 * (a2 @ a1 - a1 @ a2)
        w = psi.copy()
        for j in range(1, 30):
            w = omega @ w / j
            psi += w
            if np.max(np.abs(w.real) + np.abs(w.imag)) < 1e-17:
                break


def shaped_positions(x0, v_max, entry, span, stop, h, out) -> None:
    """Integrate dx/dt = v_max sin^2(pi (x - entry)/span) with RK4.

    Fills out[j] with x(t0 + j h); x is clamped at `stop` (the upper
    fixed point of the profile).  The velocity is evaluated with its
    argument clamped into [entry, stop] so stage points cannot leave the
    profile's domain.
    """
    n = out.shape[0] - 1
    k = math.pi / span

    def vel(x):
        if x < entry:
            x = entry
        elif x > stop:
            x = stop
        s = math.sin(k * (x - entry))
        return v_max * s * s

    x = x0
    out[0] = x
    for j in range(n):
        k1 = vel(x)
        k2 = vel(x + 0.5 * h * k1)
        k3 = vel(x + 0.5 * h * k2)
        k4 = vel(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        if x > stop:
            x = stop
        out[j + 1] = x
