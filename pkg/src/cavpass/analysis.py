"""Closed-form results: dark/bright eigensystems, adiabatic elimination,
analytic no-photon probability, decoherence-free subspaces and the
measurement-projector property of the conditional propagator.

Conventions for the two-atom single-excitation sector (basis order
|12;0>, |21;0>, |11;1>):

    dark state   (g1 |12;0> - g2 |21;0>) / R,        R = sqrt(g1^2 + g2^2)
    rotation     S = (dg1 g2 - dg2 g1) / (sqrt(2) R^2)

The dark state is an exact zero eigenvector of the conditional
Hamiltonian for every cavity decay rate; only the bright pair acquires
the -i kappa/4 imaginary shift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import model
from .dynamics import IntegratorSettings
from .qcore import Basis, Operator, StateVector, build_basis, null_space, _expm_taylor


class AnalysisError(ValueError):
    """Invalid input to an analytic routine."""


class QuadratureError(RuntimeError):
    """The trajectory quadrature failed to converge."""


def _two_atom_basis() -> Basis:
    return build_basis(2, 2, 1)


def dark_state(g1: float, g2: float) -> StateVector:
    """(g1 |12;0> - g2 |21;0>) / R, the zero eigenvector for any kappa."""
    r = np.hypot(g1, g2)
    if r == 0:
        raise AnalysisError("dark state undefined for g1 = g2 = 0")
    basis = _two_atom_basis()
    amps = np.zeros(basis.dimension, dtype=complex)
    amps[basis.index("12;0")] = g1 / r
    amps[basis.index("21;0")] = -g2 / r
    return StateVector(basis, amps)


@dataclass(frozen=True)
class BrightEigensystem:
    lambda2: complex
    lambda3: complex
    vectors: tuple[StateVector, StateVector] | None  # kappa = 0 only


def bright_eigensystem(g1: float, g2: float, kappa: float) -> BrightEigensystem:
    """Non-dark eigenvalues -i kappa/4 -+ sqrt(R^2 - kappa^2/16).

    The principal square root keeps the pair continuous in kappa; past
    the branch point R < kappa/4 both eigenvalues are purely imaginary
    (overdamped regime).  For kappa = 0 the orthonormal eigenvectors
    (g2 |12;0> + g1 |21;0> +- i R |11;1>) / (sqrt(2) R) are returned too.
    """
    r = np.hypot(g1, g2)
    if r == 0:
        raise AnalysisError("bright eigensystem undefined for g1 = g2 = 0")
    root = np.sqrt(complex(r * r - kappa * kappa / 16.0))
    lam2 = -0.25j * kappa - root
    lam3 = -0.25j * kappa + root
    vectors = None
    if kappa == 0:
        basis = _two_atom_basis()
        vecs = []
        for sign in (+1.0, -1.0):
            amps = np.zeros(basis.dimension, dtype=complex)
            amps[basis.index("12;0")] = g2 / (np.sqrt(2) * r)
            amps[basis.index("21;0")] = g1 / (np.sqrt(2) * r)
            amps[basis.index("11;1")] = sign * 1j / np.sqrt(2)
            vecs.append(StateVector(basis, amps))
        vectors = (vecs[0], vecs[1])
    return BrightEigensystem(complex(lam2), complex(lam3), vectors)


def adiabatic_rates(g1, g2, dg1, dg2):
    """(R, S): coupling magnitude and dark-state rotation rate over sqrt(2)."""
    g1, g2, dg1, dg2 = (np.asarray(a, dtype=float) for a in (g1, g2, dg1, dg2))
    r2 = g1 * g1 + g2 * g2
    if np.any(r2 == 0):
        raise AnalysisError("R must be positive")
    s = (dg1 * g2 - dg2 * g1) / (np.sqrt(2.0) * r2)
    return np.sqrt(r2), s


def eliminated_amplitudes(c1: complex, r: float, s: float, kappa: float,
                          frame: str = "eta"):
    """Fast amplitudes slaved to the dark amplitude c1.

    frame="eta" (any kappa):   c2 = -kappa S c1 / (sqrt(2) R^2),
                               c3 = -sqrt(2) S c1 / R
    frame="eigen" (kappa = 0): c2 = -c3 = -i S c1 / R

    Phase conventions follow the eta-basis definition; only the moduli
    are physical once the frames rotate.
    """
    if r <= 0:
        raise AnalysisError("R must be positive")
    if frame == "eigen":
        if kappa != 0:
            raise AnalysisError("the eigenbasis elimination applies only at kappa = 0")
        c2 = -1j * s * c1 / r
        return c2, -c2
    if frame != "eta":
        raise AnalysisError(f"unknown frame {frame!r}")
    c2 = -kappa * s * c1 / (np.sqrt(2.0) * r * r)
    c3 = -np.sqrt(2.0) * s * c1 / r
    return c2, c3


# ---------------------------------------------------------------------------
# trajectory quadrature


def _rotation_integrand(trajectory, profile: model.CouplingProfile):
    def integrand(times: np.ndarray) -> np.ndarray:
        x = trajectory.positions(times)
        v = trajectory.speeds(times)
        g1, g2 = profile.at(x[0]), profile.at(x[1])
        dg1 = profile.derivative(x[0]) * v
        dg2 = profile.derivative(x[1]) * v
        num = dg1 * g2 - dg2 * g1
        r2 = g1 * g1 + g2 * g2
        return num * num / (2.0 * r2**3)

    return integrand


def _simpson(f, t1: float, n: int) -> float:
    times = np.linspace(0.0, t1, n + 1)
    y = f(times)
    h = t1 / n
    return float(h / 3.0 * (y[0] + y[-1] + 4.0 * np.sum(y[1:-1:2]) + 2.0 * np.sum(y[2:-2:2])))


def rotation_loss_integral(trajectory, profile: model.CouplingProfile, t_final: float,
                           base_step: float | None = None) -> float:
    """integral_0^T S^2/R^2 dt by composite Simpson with step-halving control.

    The starting step is the integrator's dense-output stride (dt *
    snapshot_stride of the default settings) and is refined until two
    consecutive levels agree; non-convergence raises QuadratureError.
    """
    if t_final <= 0:
        raise AnalysisError("T must be positive")
    defaults = IntegratorSettings()
    step = base_step if base_step is not None else defaults.dt * defaults.snapshot_stride
    n = max(8, 2 * int(np.ceil(t_final / (2.0 * step))))
    f = _rotation_integrand(trajectory, profile)
    value = _simpson(f, t_final, n)
    for _ in range(14):
        n *= 2
        refined = _simpson(f, t_final, n)
        if abs(refined - value) <= max(1e-12, 1e-9 * abs(refined)):
            return refined
        value = refined
    raise QuadratureError(
        f"Simpson quadrature did not converge (last change {abs(refined - value):.3e})"
    )


def dark_amplitude_decay(trajectory, profile: model.CouplingProfile, kappa: float,
                         t_final: float) -> float:
    """c1(T) = exp(-kappa int S^2/R^2 dt) for the dark amplitude."""
    if kappa == 0:
        return 1.0
    return float(np.exp(-kappa * rotation_loss_integral(trajectory, profile, t_final)))


def analytic_no_photon_probability(trajectory, profile: model.CouplingProfile,
                                   kappa: float, t_final: float,
                                   form: str = "exponential") -> float:
    """No-photon probability from the adiabatic elimination.

    form="exponential": exp(-kappa int (dg1 g2 - dg2 g1)^2 / R^6 dt)
    form="linearized":  1 - kappa int (...) dt  (first order in kappa/R)
    """
    if kappa == 0:
        return 1.0
    integral = 2.0 * rotation_loss_integral(trajectory, profile, t_final)
    if form == "exponential":
        return float(np.exp(-kappa * integral))
    if form == "linearized":
        return float(1.0 - kappa * integral)
    raise AnalysisError(f"unknown form {form!r}")


# ---------------------------------------------------------------------------
# decoherence-free subspaces


@dataclass(frozen=True)
class DFBasis:
    """Orthonormal states that cannot feed the monitored decay channels."""

    vectors: tuple[StateVector, ...]

    @property
    def dimension(self) -> int:
        return len(self.vectors)


def df_subspace(config: model.SystemConfig, gs, omegas=None, tol: float = 1e-10) -> DFBasis:
    """Numeric DF basis: kernel of the excitation transfer out of the
    photonless (and, for the lambda scheme, level-3-free) sector.

    For the lambda scheme the transfer is the Raman coupling with the
    eliminated weights g~_i = Omega_i g_i / (2 Delta); the exact kernel
    of the full lambda coupling would instead contain photon-admixed
    stationary states, which are not decoherence free.
    """
    gs = np.atleast_1d(np.asarray(gs, dtype=float))
    basis = build_basis(config.num_atoms, config.levels_per_atom,
                        max(1, config.photon_cutoff))
    if config.scheme == "lambda":
        if omegas is None:
            raise AnalysisError("lambda scheme needs the laser amplitudes")
        weights = model.effective_params(
            gs, omegas, config.delta, config.gamma, config.kappa
        ).g_tilde
        coupling = np.zeros((basis.dimension,) * 2, dtype=complex)
        for i, w in enumerate(weights):
            coupling += w * model._photon_transition(basis, i, 1, 2, 1j)
        keep = [
            j
            for j, (lv, n) in enumerate(basis.labels)
            if n == 0 and all(l != 3 for l in lv)
        ]
    else:
        coupling = model.build_h_int(gs, basis).matrix
        keep = [j for j, (lv, n) in enumerate(basis.labels) if n == 0]
    sub = coupling[:, keep]
    kernel = null_space(sub, tol)
    vectors = []
    for k in range(kernel.shape[1]):
        amps = np.zeros(basis.dimension, dtype=complex)
        amps[keep] = kernel[:, k]
        vectors.append(StateVector(basis, amps))
    return DFBasis(tuple(vectors))


@dataclass(frozen=True)
class ThreeAtomDF:
    """Pairwise dark states of three atoms and the transfer superposition."""

    eta12: StateVector
    eta13: StateVector
    eta23: StateVector
    superposition: StateVector  # (eta13 + eta23) / sqrt(2), unnormalized
    coeff_initial: float        # weight of |112;0> for g1 = g2
    coeff_entangled: float      # weight of |s1;0> for g1 = g2


def three_atom_df_decomposition(g1: float, g2: float, g3: float) -> ThreeAtomDF:
    """The states eta_ij = (g_i |..j..> - g_j |..i..>)/||.|| and the
    decomposition (eta13 + eta23)/sqrt(2), which for g1 = g2 equals

        [(g1 + g2) |112;0> - sqrt(2) g3 |s1;0>] / sqrt(g1^2 + g2^2 + 2 g3^2).

    A pairwise eta with both couplings zero is returned as a zero vector.
    """
    if g1 == 0 and g2 == 0 and g3 == 0:
        raise AnalysisError("all couplings zero")
    basis = build_basis(3, 2, 1)

    def pair_state(ga, gb, label_a, label_b):
        amps = np.zeros(basis.dimension, dtype=complex)
        norm = np.hypot(ga, gb)
        if norm > 0:
            amps[basis.index(label_a)] = ga / norm
            amps[basis.index(label_b)] = -gb / norm
        return StateVector(basis, amps)

    eta12 = pair_state(g1, g2, "121;0", "211;0")
    eta13 = pair_state(g1, g3, "112;0", "211;0")
    eta23 = pair_state(g2, g3, "112;0", "121;0")
    sup = StateVector(
        basis, (eta13.amplitudes + eta23.amplitudes) / np.sqrt(2.0), check_norm=False
    )
    norm = np.sqrt(g1 * g1 + g2 * g2 + 2.0 * g3 * g3)
    return ThreeAtomDF(
        eta12,
        eta13,
        eta23,
        sup,
        coeff_initial=(g1 + g2) / norm,
        coeff_entangled=-np.sqrt(2.0) * g3 / norm,
    )


# ---------------------------------------------------------------------------
# stop error and Zeno projector


def stop_fidelity(g1: float, g2: float) -> float:
    """Overlap of (g1 |12> - g2 |21>)/R with the maximally entangled state:
    F = 1/2 + g1 g2 / (g1^2 + g2^2)."""
    r2 = g1 * g1 + g2 * g2
    if r2 == 0:
        raise AnalysisError("undefined for g1 = g2 = 0")
    return 0.5 + g1 * g2 / r2


_SINGLE_EXCITATION_LABELS = ("12;0", "21;0", "11;1")


def zeno_projector_distance(g1: float, g2: float, kappa: float, dt: float) -> float:
    """Operator-norm distance between the single-excitation conditional
    propagator over dt (constant couplings, unnormalized) and the dark
    projector |lambda1><lambda1|."""
    r = np.hypot(g1, g2)
    if r == 0 or kappa <= 0:
        raise AnalysisError("requires R > 0 and kappa > 0")
    basis = _two_atom_basis()
    idx = [basis.index(lab) for lab in _SINGLE_EXCITATION_LABELS]
    block = model.build_h_cond_two_level([g1, g2], kappa, basis).matrix[np.ix_(idx, idx)]
    u = _expm_taylor(-1j * dt * block)
    dark = np.array([g1 / r, -g2 / r, 0.0], dtype=complex)
    proj = np.outer(dark, dark.conj())
    return float(np.linalg.norm(u - proj, 2))
