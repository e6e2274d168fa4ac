"""Fast analytic-vs-numeric self checks, exposed as `cavpass validate`.

Each check compares an independent route against the implementation:
exact dark-state stationarity, the closed-form bright eigenvalues
against a dense eigensolver, the adiabatic-elimination success rate
against an integrated run, and the fourth-order convergence of the
stepper against the matrix-exponential reference.  All inputs are fixed
deterministic grids; there is no randomness anywhere in the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import analysis, model
from .dynamics import IntegratorSettings, integrate_fixed_step, reference_evolve
from .experiments import run_two_atom_direct
from .model import ShapedVelocityTrajectory
from .qcore import build_basis


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _parameter_grid():
    values = []
    for g1 in (0.17, 0.6, 1.0):
        for g2 in (0.05, 0.44, 0.93):
            for kappa in (0.0, 0.21, 0.9):
                values.append((g1, g2, kappa))
    return values


def check_dark_state_stationarity() -> CheckResult:
    basis = build_basis(2, 2, 1)
    worst = 0.0
    for g1, g2, kappa in _parameter_grid():
        h = model.build_h_cond_two_level([g1, g2], kappa, basis)
        residual = (h @ analysis.dark_state(g1, g2)).norm()
        worst = max(worst, residual)
    return CheckResult(
        "dark-state-stationarity", worst <= 1e-14, f"max ||H dark|| = {worst:.2e}"
    )


def check_bright_eigenvalues(eigenvalue_offset: float = 0.0) -> CheckResult:
    basis = build_basis(2, 2, 1)
    idx = [basis.index(lab) for lab in ("12;0", "21;0", "11;1")]
    worst = 0.0
    for g1, g2, kappa in _parameter_grid():
        eig = analysis.bright_eigensystem(g1, g2, kappa)
        block = model.build_h_cond_two_level([g1, g2], kappa, basis).matrix[np.ix_(idx, idx)]
        numeric = np.linalg.eigvals(block)
        numeric = numeric[np.argsort(-np.abs(numeric))][:2]  # drop the zero mode
        for lam in (eig.lambda2 + eigenvalue_offset, eig.lambda3 + eigenvalue_offset):
            worst = max(worst, float(np.min(np.abs(numeric - lam))))
    return CheckResult(
        "bright-eigenvalues", worst <= 1e-10, f"max |closed-form - eigvals| = {worst:.2e}"
    )


def check_analytic_success_rate(dt: float = 0.005) -> CheckResult:
    v_max, kappa = 0.5, 0.1
    settings = IntegratorSettings(dt=dt, tolerance=1e-7, snapshot_stride=1000)
    run = run_two_atom_direct(v_max, kappa, settings)
    predicted = analysis.analytic_no_photon_probability(
        ShapedVelocityTrajectory(v_max), model.CouplingProfile(), kappa, run.duration
    )
    diff = abs(run.p0 - predicted)
    return CheckResult(
        "analytic-success-rate",
        diff <= 0.01,
        f"|P0 - exp(-kappa integral)| = {diff:.2e} (P0 = {run.p0:.5f})",
    )


def check_step_convergence(dt: float = 0.08) -> CheckResult:
    basis = build_basis(2, 2, 1)
    h = model.build_h_cond_two_level([1.0, 1.0], 0.2, basis)
    psi0 = basis.unit_state("11;1")
    t_final = 2.0
    reference = reference_evolve(lambda t: h, psi0, (0.0, t_final), piece_dt=1e-3)
    errors = []
    steps = [dt, dt / 2, dt / 4]
    for step in steps:
        res = integrate_fixed_step(lambda t: h, psi0, (0.0, t_final), step)
        errors.append(
            float(np.max(np.abs(res.final_state.amplitudes - reference.amplitudes)))
        )
    order = float(np.polyfit(np.log(steps), np.log(errors), 1)[0])
    return CheckResult(
        "step-convergence-order", abs(order - 4.0) <= 0.5, f"fitted order = {order:.3f}"
    )


def run_validation(dt: float | None = None, eigenvalue_offset: float = 0.0) -> list[CheckResult]:
    base_dt = dt if dt is not None else 0.005
    return [
        check_dark_state_stationarity(),
        check_bright_eigenvalues(eigenvalue_offset),
        check_analytic_success_rate(base_dt),
        check_step_convergence(),
    ]
