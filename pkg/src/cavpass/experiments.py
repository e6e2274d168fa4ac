"""Scenario runners and parameter sweeps.

Three scenarios are provided:

  two-atom-direct   two-level atoms ride the shaped velocity profile
                    into the cavity and stop where both see the same
                    coupling; prepares the antisymmetric Bell state.
  two-atom-lambda   lambda atoms cross at constant speed, the coupling
                    laser turning off when the pair midpoint passes the
                    cavity centre; same target, stable against decay.
  three-atom        two co-moving ground-state atoms plus a trailing
                    excited one, constant speed, no turn-off; prepares
                    the symmetric Bell state of the leading pair.

All runs are deterministic (fixed-step integration, no randomness);
re-running a spec reproduces results bit for bit.  Sweep rows are
independent and may execute on a thread pool; the compiled kernels
release the GIL so rows genuinely run in parallel.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import model
from .dynamics import (
    EvolutionResult,
    IntegratorSettings,
    TimeDependentHamiltonian,
    fidelity,
    integrate_piecewise,
    no_photon_probability,
)
from .model import (
    ConstantVelocityTrajectory,
    CouplingProfile,
    LaserProfile,
    LaserSchedule,
    ShapedVelocityTrajectory,
)
from .qcore import Basis, StateVector, build_basis

EXIT_POSITION = 4.0  # couplings beyond are < e^-16 of the peak


class ExperimentError(ValueError):
    pass


@dataclass
class RunResult:
    """Outcome of one scenario run, conditioned on no photon emission."""

    fidelity: float
    p0: float
    duration: float
    dt_used: float
    halvings: int
    converged: bool
    times: np.ndarray
    positions: np.ndarray  # (num_atoms, len(times))
    states: np.ndarray  # unnormalized snapshots, (len(times), dim)
    norm_sq: np.ndarray
    pop_target: np.ndarray
    pop_initial: np.ndarray
    pop_photon: np.ndarray
    final_state: StateVector
    target: StateVector
    basis: Basis


def bell_state(basis: Basis, labels: tuple[str, str], sign: float) -> StateVector:
    """(|a> + sign |b>)/sqrt(2) for two basis labels."""
    amps = np.zeros(basis.dimension, dtype=complex)
    amps[basis.index(labels[0])] = 1.0 / np.sqrt(2.0)
    amps[basis.index(labels[1])] = sign / np.sqrt(2.0)
    return StateVector(basis, amps)


def _coupling_series(trajectory, profile, atom: int):
    def series(times: np.ndarray) -> np.ndarray:
        return profile.at(trajectory.positions(times)[atom])

    return series


def _finish(res: EvolutionResult, trajectory, psi0: StateVector, target: StateVector,
            duration: float) -> RunResult:
    states = res.states
    norms = np.maximum(res.norm_sq, 1e-300)
    pop_target = np.abs(states @ target.amplitudes.conj()) ** 2 / norms
    pop_initial = np.abs(states @ psi0.amplitudes.conj()) ** 2 / norms
    photon_idx = [j for j, (_, n) in enumerate(res.basis.labels) if n >= 1]
    pop_photon = np.sum(np.abs(states[:, photon_idx]) ** 2, axis=1) / norms
    return RunResult(
        fidelity=fidelity(res.final_state, target),
        p0=no_photon_probability(res),
        duration=duration,
        dt_used=res.dt_used,
        halvings=res.halvings,
        converged=res.converged,
        times=res.times,
        positions=trajectory.positions(res.times),
        states=states,
        norm_sq=res.norm_sq,
        pop_target=pop_target,
        pop_initial=pop_initial,
        pop_photon=pop_photon,
        final_state=res.final_state,
        target=target,
        basis=res.basis,
    )


def _grid_time(t: float, dt: float) -> float:
    return dt * int(np.ceil(t / dt - 1e-9))


DIRECT_SETTINGS = IntegratorSettings(dt=0.005, tolerance=1e-8, snapshot_stride=100)
LAMBDA_SETTINGS = IntegratorSettings(dt=0.005, tolerance=1e-6, snapshot_stride=200)


def run_two_atom_direct(v_max: float, kappa: float,
                        settings: IntegratorSettings | None = None) -> RunResult:
    """Shaped-velocity passage of |12;0> into the antisymmetric Bell state.

    Atom 1 starts four waists before the cavity centre with atom 2 two
    waists behind; both stop where they see equal couplings (x1 = +w0,
    x2 = -w0).  The run ends when x1 is within the start offset of the
    stop position, the approach being asymptotic.
    """
    if v_max <= 0 or kappa < 0:
        raise ExperimentError("need v_max > 0 and kappa >= 0")
    settings = settings or DIRECT_SETTINGS
    basis = build_basis(2, 2, 1)
    trajectory = ShapedVelocityTrajectory(v_max)
    duration = _grid_time(trajectory.stop_crossing_time, settings.dt)

    profile = CouplingProfile()
    terms = [
        (model.cavity_coupling_term(basis, i), _coupling_series(trajectory, profile, i))
        for i in range(2)
    ]
    static = -0.5j * kappa * model.photon_number_op(basis).matrix
    ham = TimeDependentHamiltonian(basis, terms, static)

    psi0 = basis.unit_state("12;0")
    target = bell_state(basis, ("12;0", "21;0"), -1.0)
    res = integrate_piecewise([(ham, 0.0, duration)], psi0, settings)
    return _finish(res, trajectory, psi0, target, duration)


def _lambda_static(basis: Basis, delta: float, gamma: float, kappa: float) -> np.ndarray:
    m = -0.5j * kappa * model.photon_number_op(basis).matrix
    for i in range(basis.num_atoms):
        m = m + (delta - 0.5j * gamma) * model.level_projector(basis, i, 3).matrix
    return m


def _check_lambda_rates(v: float, delta: float, kappa: float, gamma: float):
    if v <= 0:
        raise ExperimentError("need v > 0")
    if kappa < 0 or gamma < 0:
        raise ExperimentError("kappa and gamma must be >= 0")
    if abs(delta) < 10.0:
        warnings.warn(
            f"detuning {delta} below 10 g: the two-level reduction degrades",
            stacklevel=3,
        )


def run_two_atom_lambda(v: float, delta: float, kappa: float, gamma: float,
                        settings: IntegratorSettings | None = None,
                        x1_start: float = -4.0, separation: float = 1.0,
                        schedule: LaserSchedule | None = None,
                        swap_roles: bool = False) -> RunResult:
    """Constant-speed lambda passage with laser turn-off at the symmetric point.

    The leading atom enters in its ground state, the trailing atom one
    waist behind carries the excitation (initial |12;0>).  When the pair
    midpoint crosses the cavity centre the laser switches off and the
    atomic state freezes; the run ends once both atoms passed +4 w0.
    With swap_roles=True the atom labels (state and trajectory) are
    exchanged, which must not change F or P0.
    """
    _check_lambda_rates(v, delta, kappa, gamma)
    settings = settings or LAMBDA_SETTINGS
    basis = build_basis(2, 3, 1)
    starts = (x1_start, x1_start - separation)
    initial_label = "12;0"
    if swap_roles:
        starts = (starts[1], starts[0])
        initial_label = "21;0"
    trajectory = ConstantVelocityTrajectory(starts, v)
    duration = _grid_time((EXIT_POSITION - min(starts)) / v, settings.dt)

    schedule = schedule or LaserSchedule("at-symmetric-point")
    t_off = schedule.turn_off_time(trajectory, duration, settings.dt)

    coupling = CouplingProfile()
    laser = LaserProfile()
    cavity_terms = [
        (model.lambda_cavity_term(basis, i), _coupling_series(trajectory, coupling, i))
        for i in range(2)
    ]
    laser_terms = [
        (model.lambda_laser_term(basis, i), _coupling_series(trajectory, laser, i))
        for i in range(2)
    ]
    static = _lambda_static(basis, delta, gamma, kappa)
    ham_on = TimeDependentHamiltonian(basis, cavity_terms + laser_terms, static)
    ham_off = TimeDependentHamiltonian(basis, cavity_terms, static)

    psi0 = basis.unit_state(initial_label)
    target = bell_state(basis, ("12;0", "21;0"), -1.0)
    if t_off is None or t_off >= duration:
        segments = [(ham_on, 0.0, duration)]
    else:
        segments = [(ham_on, 0.0, t_off), (ham_off, t_off, duration)]
    res = integrate_piecewise(segments, psi0, settings)
    return _finish(res, trajectory, psi0, target, duration)


def run_effective_two_atom(v: float, delta: float, kappa: float, gamma: float,
                           settings: IntegratorSettings | None = None,
                           x1_start: float = -4.0, separation: float = 1.0,
                           schedule: LaserSchedule | None = None) -> RunResult:
    """The two-atom lambda scenario in the eliminated two-level model.

    Couplings become g~_i(t) = Omega(x_i) g(x_i) / (2 Delta) and level 2
    decays at Gamma~_i(t) = (Omega(x_i)/2 Delta)^2 Gamma; cavity leakage
    is unchanged.  Used to validate the reduction against the full model.
    """
    _check_lambda_rates(v, delta, kappa, gamma)
    settings = settings or LAMBDA_SETTINGS
    basis = build_basis(2, 2, 1)
    trajectory = ConstantVelocityTrajectory((x1_start, x1_start - separation), v)
    duration = _grid_time((EXIT_POSITION - x1_start + separation) / v, settings.dt)

    schedule = schedule or LaserSchedule("at-symmetric-point")
    t_off = schedule.turn_off_time(trajectory, duration, settings.dt)

    coupling = CouplingProfile()
    laser = LaserProfile()

    def g_tilde(atom):
        def series(times):
            x = trajectory.positions(times)[atom]
            return laser.at(x) * coupling.at(x) / (2.0 * delta)

        return series

    def gamma_tilde(atom):
        def series(times):
            x = trajectory.positions(times)[atom]
            return (laser.at(x) / (2.0 * delta)) ** 2 * gamma

        return series

    terms = []
    for i in range(2):
        terms.append((model.cavity_coupling_term(basis, i), g_tilde(i)))
        terms.append((-0.5j * model.level_projector(basis, i, 2).matrix, gamma_tilde(i)))
    static = -0.5j * kappa * model.photon_number_op(basis).matrix
    ham_on = TimeDependentHamiltonian(basis, terms, static)
    ham_off = TimeDependentHamiltonian(basis, [], static)

    psi0 = basis.unit_state("12;0")
    target = bell_state(basis, ("12;0", "21;0"), -1.0)
    if t_off is None or t_off >= duration:
        segments = [(ham_on, 0.0, duration)]
    else:
        segments = [(ham_on, 0.0, t_off), (ham_off, t_off, duration)]
    res = integrate_piecewise(segments, psi0, settings)
    return _finish(res, trajectory, psi0, target, duration)


def run_three_atom(v: float, delta: float, kappa: float, gamma: float,
                   settings: IntegratorSettings | None = None,
                   pair_start: float = -4.0, third_offset: float = -1.0) -> RunResult:
    """Three lambda atoms at constant speed, no laser switching.

    Atoms 1 and 2 move together (identical couplings) in the ground
    state; atom 3 trails by one waist and carries the excitation
    (initial |112;0>).  The decoherence-free superposition rotates the
    excitation into the symmetric Bell state of the leading pair as the
    coupling weight moves from the pair to atom 3, so the target is
    |s1;0> = (|121;0> + |211;0>)/sqrt(2).
    """
    _check_lambda_rates(v, delta, kappa, gamma)
    settings = settings or LAMBDA_SETTINGS
    basis = build_basis(3, 3, 1)
    trajectory = ConstantVelocityTrajectory(
        (pair_start, pair_start, pair_start + third_offset), v
    )
    duration = _grid_time((EXIT_POSITION - pair_start - third_offset) / v, settings.dt)

    coupling = CouplingProfile()
    laser = LaserProfile()
    terms = []
    for i in range(3):
        terms.append((model.lambda_cavity_term(basis, i),
                      _coupling_series(trajectory, coupling, i)))
        terms.append((model.lambda_laser_term(basis, i),
                      _coupling_series(trajectory, laser, i)))
    static = _lambda_static(basis, delta, gamma, kappa)
    ham = TimeDependentHamiltonian(basis, terms, static)

    psi0 = basis.unit_state("112;0")
    target = bell_state(basis, ("121;0", "211;0"), +1.0)
    res = integrate_piecewise([(ham, 0.0, duration)], psi0, settings)
    return _finish(res, trajectory, psi0, target, duration)


# ---------------------------------------------------------------------------
# scenario dispatch and sweeps


SCENARIOS = {
    "two-atom-direct": run_two_atom_direct,
    "two-atom-lambda": run_two_atom_lambda,
    "three-atom": run_three_atom,
}


@dataclass
class ScenarioSpec:
    """A named scenario plus its physical parameters and integrator settings."""

    scenario: str
    params: dict = field(default_factory=dict)
    settings: IntegratorSettings | None = None
    scheme: str | None = None  # "effective-two-level" swaps in the reduced model

    def runner(self):
        if self.scenario not in SCENARIOS:
            raise ExperimentError(f"unknown scenario {self.scenario!r}")
        if self.scheme == "effective-two-level":
            if self.scenario != "two-atom-lambda":
                raise ExperimentError(
                    "the effective-two-level scheme applies to two-atom-lambda only"
                )
            return run_effective_two_atom
        return SCENARIOS[self.scenario]


def run_scenario(spec: ScenarioSpec) -> RunResult:
    return spec.runner()(settings=spec.settings, **spec.params)


@dataclass
class SweepSpec:
    """One swept parameter over a value grid on top of a scenario template."""

    template: ScenarioSpec
    param_name: str
    values: tuple[float, ...]
    threads: int = 1

    def __post_init__(self):
        if len(self.values) == 0:
            raise ExperimentError("sweep grid must be non-empty")
        if self.param_name not in ("v", "v_max", "kappa", "gamma"):
            raise ExperimentError(f"unsupported sweep parameter {self.param_name!r}")
        if any(v < 0 for v in self.values):
            raise ExperimentError("sweep values must be >= 0")


@dataclass
class SweepRow:
    param_name: str
    value: float
    fidelity: float
    p0: float
    duration: float
    dt_used: float
    converged: bool
    error: str | None = None


def _sweep_one(spec: SweepSpec, value: float) -> SweepRow:
    params = dict(spec.template.params)
    params[spec.param_name] = value
    try:
        run = run_scenario(replace(spec.template, params=params))
        return SweepRow(spec.param_name, value, run.fidelity, run.p0, run.duration,
                        run.dt_used, run.converged)
    except Exception as exc:
        return SweepRow(spec.param_name, value, float("nan"), float("nan"),
                        float("nan"), float("nan"), False, error=str(exc))


def sweep(spec: SweepSpec) -> list[SweepRow]:
    """One run per grid value; rows are independent, output order is the grid
    order, and failures are recorded in-row rather than aborting the sweep."""
    if spec.threads > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            return list(pool.map(lambda v: _sweep_one(spec, v), spec.values))
    return [_sweep_one(spec, v) for v in spec.values]


# ---------------------------------------------------------------------------
# figure presets (caption parameters are hard-coded so reproductions
# cannot drift from the source settings)


FIG3_VMAX = 5.0
FIG3_KAPPAS = (0.0, 0.2)
FIG4_VMAX_GRID = (0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0)
FIG4_KAPPAS = (0.0, 0.01, 0.05, 0.1)
FIG5_KAPPA_GRID = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
FIG5_VMAXES = (0.5, 1.0, 1.5, 2.0)
FIG6_GAMMA_GRID = (0.0, 0.0125, 0.025, 0.05, 0.075, 0.1)
FIG6_CONFIGS = {
    "a": {"v": 0.002, "delta": 20.0, "kappa": 0.025},
    "b": {"v": 0.002, "delta": 20.0, "kappa": 0.05},
    "c": {"v": 0.005, "delta": 10.0, "kappa": 0.05},
    "d": {"v": 0.005, "delta": 10.0, "kappa": 0.1},
}
FIG7_PARAMS = {"v": 0.002, "delta": 20.0, "kappa": 0.02, "gamma": 0.05}

FIGURE_NAMES = ("fig3", "fig4", "fig5", "fig6", "fig7")

SWEEP_HEADER = ("param_name", "param_value", "fidelity", "p0", "duration_T",
                "dt_used", "converged")


def _num(value: float) -> str:
    return f"{value:g}".replace(".", "p").replace("-", "m")


def _sweep_rows(rows: list[SweepRow]):
    return [
        (r.param_name, r.value, r.fidelity, r.p0, r.duration, r.dt_used, r.converged)
        for r in rows
    ]


def figure_tables(name: str, threads: int = 1,
                  settings: IntegratorSettings | None = None):
    """Curve tables for one figure: list of (file_stem, header, rows)."""
    if name == "fig3":
        return _fig3_tables(settings)
    if name == "fig4":
        template = ScenarioSpec("two-atom-direct", {"v_max": 1.0}, settings)
        tables = []
        for kappa in FIG4_KAPPAS:
            t = replace(template, params={"v_max": 1.0, "kappa": kappa})
            rows = sweep(SweepSpec(t, "v_max", FIG4_VMAX_GRID, threads))
            tables.append((f"fig4_kappa{_num(kappa)}", SWEEP_HEADER, _sweep_rows(rows)))
        return tables
    if name == "fig5":
        tables = []
        for v_max in FIG5_VMAXES:
            t = ScenarioSpec("two-atom-direct", {"v_max": v_max, "kappa": 0.0}, settings)
            rows = sweep(SweepSpec(t, "kappa", FIG5_KAPPA_GRID, threads))
            tables.append((f"fig5_vmax{_num(v_max)}", SWEEP_HEADER, _sweep_rows(rows)))
        return tables
    if name == "fig6":
        tables = []
        for key, cfg in FIG6_CONFIGS.items():
            t = ScenarioSpec("two-atom-lambda", dict(cfg, gamma=0.0), settings)
            rows = sweep(SweepSpec(t, "gamma", FIG6_GAMMA_GRID, threads))
            tables.append((f"fig6_{key}", SWEEP_HEADER, _sweep_rows(rows)))
        return tables
    if name == "fig7":
        return _fig7_tables(settings)
    raise ExperimentError(f"unknown figure {name!r}; known: {FIGURE_NAMES}")


FIG3_HEADER = ("t", "x1", "x2", "pop_bright", "pop_photon", "pop_dark", "norm_sq")
FIG7_HEADER = ("t", "x12", "x3", "g12", "g3", "pop_s1", "pop_112", "norm_sq")


def direct_frame_populations(run: RunResult):
    """Populations in the instantaneous bright comb (g2|12;0> + g1|21;0>)/R,
    the photon state |11;1> and the dark state, along a direct-scheme run."""
    basis = run.basis
    profile = CouplingProfile()
    g1 = profile.at(run.positions[0])
    g2 = profile.at(run.positions[1])
    r = np.hypot(g1, g2)
    a12 = run.states[:, basis.index("12;0")]
    a21 = run.states[:, basis.index("21;0")]
    ae = run.states[:, basis.index("11;1")]
    norms = np.maximum(run.norm_sq, 1e-300)
    pop_bright = np.abs(g2 * a12 + g1 * a21) ** 2 / (r * r) / norms
    pop_dark = np.abs(g1 * a12 - g2 * a21) ** 2 / (r * r) / norms
    pop_photon = np.abs(ae) ** 2 / norms
    return pop_bright, pop_photon, pop_dark


def _fig3_tables(settings):
    tables = []
    for kappa in FIG3_KAPPAS:
        run = run_two_atom_direct(FIG3_VMAX, kappa, settings)
        pop_bright, pop_photon, pop_dark = direct_frame_populations(run)
        rows = list(
            zip(run.times, run.positions[0], run.positions[1],
                pop_bright, pop_photon, pop_dark, run.norm_sq)
        )
        tables.append((f"fig3_kappa{_num(kappa)}", FIG3_HEADER, rows))
    return tables


def _fig7_tables(settings):
    run = run_three_atom(settings=settings, **FIG7_PARAMS)
    profile = CouplingProfile()
    g12 = profile.at(run.positions[0])
    g3 = profile.at(run.positions[2])
    rows = list(
        zip(run.times, run.positions[0], run.positions[2], g12, g3,
            run.pop_target, run.pop_initial, run.norm_sq)
    )
    summary = [("three-atom", float("nan"), run.fidelity, run.p0, run.duration,
                run.dt_used, run.converged)]
    return [
        ("fig7_timeseries", FIG7_HEADER, rows),
        ("fig7_summary", SWEEP_HEADER, summary),
    ]
