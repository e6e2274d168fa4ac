"""Physical scenario description and Hamiltonian construction.

Geometry and units: positions are measured along the atoms' path in
units of the cavity waist w0, rates in units of the peak coupling g_max
(so g_max = 1 and w0 = 1 in every default), time in 1/g_max.  The
cavity mode has a Gaussian profile g(x) = g_max exp(-(x/w0)^2) and the
coupling laser a five-times-wider one.  Atoms either move at constant
speed or follow the shaped velocity law

    v(x1) = v_max sin^2(pi (x1 + 4 w0) / 5 w0),

which vanishes at the entry point x1 = -4 w0 and at the stop position
x1 = +w0.  The entry point is an exact fixed point of dx/dt = v(x), so
shaped trajectories start at x1 = -4 w0 + EPS_START; the transit time
depends logarithmically on this offset while fidelities do not (the
couplings there are ~e^-16).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .kernels import get_backend
from .qcore import Basis, Operator, QCoreError

EPS_START = 1e-3
SHAPED_ENTRY = -4.0
SHAPED_SPAN = 5.0
SHAPED_STOP = 1.0
_TRACK_STEP_DISTANCE = 0.005  # position-track node spacing, in w0 * (v_max/g) units


class ModelError(ValueError):
    """Invalid physical configuration."""


# ---------------------------------------------------------------------------
# spatial profiles


@dataclass(frozen=True)
class CouplingProfile:
    """Gaussian cavity mode: g(x) = g_max exp(-(x/waist)^2)."""

    g_max: float = 1.0
    waist: float = 1.0

    def __post_init__(self):
        if self.g_max <= 0 or self.waist <= 0:
            raise ModelError("g_max and waist must be positive")

    def at(self, x):
        return self.g_max * np.exp(-((np.asarray(x, dtype=float) / self.waist) ** 2))

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        return -2.0 * x / self.waist**2 * self.at(x)


@dataclass(frozen=True)
class LaserProfile:
    """Coupling laser focussed on the cavity region, waist 5 w0 by default."""

    omega_max: float = 1.0
    waist: float = 5.0

    def __post_init__(self):
        if self.omega_max < 0 or self.waist <= 0:
            raise ModelError("omega_max must be >= 0 and waist positive")

    def at(self, x):
        return self.omega_max * np.exp(-((np.asarray(x, dtype=float) / self.waist) ** 2))

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        return -2.0 * x / self.waist**2 * self.at(x)


def coupling_at(profile: CouplingProfile, x):
    if not np.all(np.isfinite(x)):
        raise ModelError("position must be finite")
    return profile.at(x)


def laser_at(profile: LaserProfile, x):
    if not np.all(np.isfinite(x)):
        raise ModelError("position must be finite")
    return profile.at(x)


def velocity_at(x1, v_max: float, entry: float = SHAPED_ENTRY, span: float = SHAPED_SPAN):
    """Shaped speed profile; defined for x1 in [entry, entry + span]."""
    x1 = np.asarray(x1, dtype=float)
    if np.any(x1 < entry - 1e-12) or np.any(x1 > entry + span + 1e-12):
        raise ModelError(f"x1 outside the profile domain [{entry}, {entry + span}]")
    return v_max * np.sin(np.pi * (x1 - entry) / span) ** 2


# ---------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True)
class ConstantVelocityTrajectory:
    """All atoms drift at the same constant speed; positions are exact."""

    x0: tuple[float, ...]
    v: float

    @property
    def num_atoms(self) -> int:
        return len(self.x0)

    def positions(self, t):
        t = np.asarray(t, dtype=float)
        return np.asarray(self.x0)[:, None] + self.v * t[None, :]

    def speeds(self, t):
        return np.full(np.asarray(t, dtype=float).shape, self.v)

    def time_to_reach(self, atom: int, x_target: float) -> float:
        if self.v <= 0:
            raise ModelError("time_to_reach requires v > 0")
        return (x_target - self.x0[atom]) / self.v


class ShapedVelocityTrajectory:
    """Atoms riding the sin^2 velocity law, all at the lead atom's speed.

    The lead-atom position obeys dx1/dt = velocity_at(x1), integrated
    with the same RK4 scheme as the dynamics on a fixed fine node grid
    that every consumer (stepping, reference propagator, quadrature)
    queries, so they all see one and the same trajectory.  Trailing
    atoms keep constant offsets.  x1 is clamped at the stop position.
    """

    def __init__(self, v_max: float, offsets: tuple[float, ...] = (0.0, -2.0),
                 entry: float = SHAPED_ENTRY, span: float = SHAPED_SPAN,
                 stop: float = SHAPED_STOP, eps_start: float = EPS_START):
        if v_max <= 0:
            raise ModelError("v_max must be positive")
        self.v_max = v_max
        self.offsets = tuple(offsets)
        self.entry = entry
        self.span = span
        self.stop = stop
        self.x1_0 = entry + eps_start
        self.eps_start = eps_start
        self._h = _TRACK_STEP_DISTANCE / v_max
        self._track = None
        self._t_cross = None

    @property
    def num_atoms(self) -> int:
        return len(self.offsets)

    def _ensure_track(self):
        if self._track is not None:
            return
        backend = get_backend()
        target = self.stop - self.eps_start
        # entry/exit tails are logarithmic in eps_start; 4x the analytic
        # two-tail estimate is a safe hard cap
        t_cap = 4.0 * 2.0 * self.span**2 / (math.pi**2 * self.v_max * self.eps_start)
        block = 1 << 16
        nodes = [np.array([self.x1_0])]
        x = self.x1_0
        total = 0
        t_cross = None
        while t_cross is None and total * self._h < t_cap:
            out = backend.shaped_positions(x, self.v_max, self.entry, self.span,
                                           self.stop, self._h, block + 1)
            hit = np.nonzero(out >= target)[0]
            if hit.size:
                k = int(hit[0])
                if k == 0:
                    t_cross = total * self._h
                else:
                    frac = (target - out[k - 1]) / (out[k] - out[k - 1])
                    t_cross = (total + k - 1 + frac) * self._h
            nodes.append(out[1:])
            x = out[-1]
            total += block
        if t_cross is None:
            raise ModelError("shaped trajectory did not reach the stop position")
        track = np.concatenate(nodes)
        # keep 5% spare so stage-time queries near the end stay on the track
        need = int(math.ceil(1.05 * t_cross / self._h)) + 2
        while track.shape[0] < need:
            out = backend.shaped_positions(track[-1], self.v_max, self.entry, self.span,
                                           self.stop, self._h, block + 1)
            track = np.concatenate([track, out[1:]])
        self._track = track
        self._t_cross = t_cross

    @property
    def stop_crossing_time(self) -> float:
        """Time at which x1 reaches stop - eps_start (linearly interpolated)."""
        self._ensure_track()
        return self._t_cross

    def lead_position(self, t):
        """x1 at arbitrary times: node lookup plus one RK4 sub-step."""
        self._ensure_track()
        t = np.asarray(t, dtype=float)
        track = self._track
        idx = np.floor(t / self._h).astype(np.int64)
        np.clip(idx, 0, track.shape[0] - 1, out=idx)
        delta = t - idx * self._h
        np.clip(delta, 0.0, self._h, out=delta)
        x = track[idx]
        k1 = self._vel(x)
        k2 = self._vel(x + 0.5 * delta * k1)
        k3 = self._vel(x + 0.5 * delta * k2)
        k4 = self._vel(x + delta * k3)
        out = x + (delta / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        return np.minimum(out, self.stop)

    def _vel(self, x):
        xc = np.clip(x, self.entry, self.stop)
        return self.v_max * np.sin(np.pi * (xc - self.entry) / self.span) ** 2

    def positions(self, t):
        x1 = self.lead_position(t)
        return x1[None, :] + np.asarray(self.offsets)[:, None]

    def speeds(self, t):
        t = np.asarray(t, dtype=float)
        return self._vel(self.lead_position(t))


Trajectory = ConstantVelocityTrajectory | ShapedVelocityTrajectory


def positions_at(trajectory: Trajectory, t):
    """Per-atom positions at time(s) t >= 0."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ModelError("t must be >= 0")
    return trajectory.positions(t)


# ---------------------------------------------------------------------------
# laser schedule


@dataclass(frozen=True)
class LaserSchedule:
    """When the coupling laser is switched off: never, at a fixed time,
    or when the atoms' midpoint crosses the cavity centre (both atoms
    then see the same coupling, the profiles being even)."""

    mode: str = "never"
    t_off: float | None = None

    def __post_init__(self):
        if self.mode not in ("never", "at-symmetric-point", "at-time"):
            raise ModelError(f"unknown laser schedule mode {self.mode!r}")
        if self.mode == "at-time":
            if self.t_off is None or self.t_off < 0:
                raise ModelError("at-time schedule requires t_off >= 0")

    def turn_off_time(self, trajectory: Trajectory, t_max: float, probe_dt: float) -> float | None:
        if self.mode == "never":
            return None
        if self.mode == "at-time":
            return self.t_off if self.t_off < t_max else None
        grid = np.arange(0.0, t_max + probe_dt, probe_dt)
        mid = np.mean(trajectory.positions(grid), axis=0)
        sign_change = np.nonzero((mid[:-1] <= 0.0) & (mid[1:] > 0.0))[0]
        if sign_change.size == 0:
            return None
        k = int(sign_change[0])
        if mid[k] == 0.0:
            return float(grid[k])
        frac = -mid[k] / (mid[k + 1] - mid[k])
        return float(grid[k] + frac * probe_dt)


# ---------------------------------------------------------------------------
# system configuration


SCHEMES = ("two-level-direct", "lambda", "effective-two-level")


@dataclass(frozen=True)
class SystemConfig:
    """Complete physical scenario in reference units (g_max = 1, w0 = 1)."""

    num_atoms: int
    scheme: str
    kappa: float
    gamma: float
    trajectory: Trajectory
    coupling: CouplingProfile = CouplingProfile()
    laser: LaserProfile = LaserProfile()
    schedule: LaserSchedule = LaserSchedule()
    delta: float | None = None
    photon_cutoff: int = 1

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ModelError(f"unknown scheme {self.scheme!r}")
        if self.kappa < 0 or self.gamma < 0:
            raise ModelError("kappa and gamma must be >= 0")
        if self.scheme == "lambda" and not self.delta:
            raise ModelError("lambda scheme requires a nonzero detuning delta")
        if self.photon_cutoff < 0:
            raise ModelError("photon_cutoff must be >= 0")
        if self.trajectory.num_atoms != self.num_atoms:
            raise ModelError("trajectory atom count does not match num_atoms")

    @property
    def levels_per_atom(self) -> int:
        return 3 if self.scheme == "lambda" else 2

    def basis(self) -> Basis:
        from .qcore import build_basis

        return build_basis(self.num_atoms, self.levels_per_atom, self.photon_cutoff)


@dataclass(frozen=True)
class EffectiveParams:
    """Two-level rates after eliminating the lambda system's level 3."""

    g_tilde: tuple[float, ...]
    gamma_tilde: tuple[float, ...]
    kappa_tilde: float


def effective_params(g, omega, delta: float, gamma: float, kappa: float) -> EffectiveParams:
    """First order in 1/Delta: g~ = Omega g / 2 Delta, Gamma~ = (Omega/2 Delta)^2 Gamma,
    while the cavity leakage rate is unaffected (kappa~ = kappa)."""
    if delta == 0:
        raise ModelError("detuning delta must be nonzero")
    g = np.atleast_1d(np.asarray(g, dtype=float))
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    g_t = omega * g / (2.0 * delta)
    gamma_t = (omega / (2.0 * delta)) ** 2 * gamma
    return EffectiveParams(tuple(g_t), tuple(gamma_t), kappa)


# ---------------------------------------------------------------------------
# operators


def _require(basis: Basis, levels: int):
    if basis.levels_per_atom != levels:
        raise ModelError(
            f"operator needs a {levels}-level basis, got {basis.levels_per_atom}-level"
        )


@lru_cache(maxsize=None)
def photon_number_op(basis: Basis) -> Operator:
    diag = np.array([n for _, n in basis.labels], dtype=complex)
    return Operator(basis, np.diag(diag))


@lru_cache(maxsize=None)
def level_projector(basis: Basis, atom: int, level: int) -> Operator:
    diag = np.array([1.0 if lv[atom] == level else 0.0 for lv, _ in basis.labels],
                    dtype=complex)
    return Operator(basis, np.diag(diag))


@lru_cache(maxsize=None)
def excitation_number_op(basis: Basis) -> Operator:
    """Total excitation: photons plus one per atom above its ground level 1."""
    diag = np.array(
        [n + sum(1 for l in lv if l > 1) for lv, n in basis.labels], dtype=complex
    )
    return Operator(basis, np.diag(diag))


def _photon_transition(basis: Basis, atom: int, lo: int, hi: int, amp: complex) -> np.ndarray:
    """amp * b |hi><lo| + h.c. for one atom (photon absorbed on the way up)."""
    d = basis.dimension
    m = np.zeros((d, d), dtype=complex)
    for j, (lv, n) in enumerate(basis.labels):
        if lv[atom] == lo and n >= 1:
            target = (lv[:atom] + (hi,) + lv[atom + 1:], n - 1)
            i = basis.index(target)
            m[i, j] += amp * math.sqrt(n)
    return m + m.conj().T


@lru_cache(maxsize=None)
def cavity_coupling_term(basis: Basis, atom: int) -> Operator:
    """i b |2><1| + h.c. for one two-level atom (unit coupling)."""
    _require(basis, 2)
    return Operator(basis, _photon_transition(basis, atom, 1, 2, 1j))


@lru_cache(maxsize=None)
def lambda_cavity_term(basis: Basis, atom: int) -> Operator:
    """i b |3><1| + h.c. for one lambda atom (unit coupling)."""
    _require(basis, 3)
    return Operator(basis, _photon_transition(basis, atom, 1, 3, 1j))


@lru_cache(maxsize=None)
def lambda_laser_term(basis: Basis, atom: int) -> Operator:
    """(1/2)(|2><3| + |3><2|) for one lambda atom (unit Rabi rate)."""
    _require(basis, 3)
    d = basis.dimension
    m = np.zeros((d, d), dtype=complex)
    for j, (lv, n) in enumerate(basis.labels):
        if lv[atom] == 3:
            target = (lv[:atom] + (2,) + lv[atom + 1:], n)
            m[basis.index(target), j] += 0.5
    return Operator(basis, m + m.conj().T)


def build_h_int(gs, basis: Basis) -> Operator:
    """Atom-cavity interaction i hbar sum_i g_i b |2>_ii<1| + h.c."""
    _require(basis, 2)
    gs = np.atleast_1d(np.asarray(gs, dtype=float))
    if gs.shape[0] != basis.num_atoms:
        raise ModelError("need one coupling per atom")
    m = np.zeros((basis.dimension,) * 2, dtype=complex)
    for i, g in enumerate(gs):
        m += g * cavity_coupling_term(basis, i).matrix
    return Operator(basis, m)


def build_h_cond_two_level(gs, kappa: float, basis: Basis) -> Operator:
    """Conditional Hamiltonian H_int - (i/2) kappa b^dag b."""
    if kappa < 0:
        raise ModelError("kappa must be >= 0")
    m = build_h_int(gs, basis).matrix - 0.5j * kappa * photon_number_op(basis).matrix
    return Operator(basis, m)


def build_h_cond_lambda(gs, omegas, delta: float, gamma: float, kappa: float,
                        basis: Basis) -> Operator:
    """Lambda-scheme conditional Hamiltonian for N atoms:

    sum_i [ (1/2) Omega_i |2>_ii<3| + i g_i b |3>_ii<1| + h.c. ]
    + (Delta - i Gamma/2) sum_i |3>_ii<3|  -  (i/2) kappa b^dag b
    """
    _require(basis, 3)
    if gamma < 0 or kappa < 0:
        raise ModelError("gamma and kappa must be >= 0")
    gs = np.atleast_1d(np.asarray(gs, dtype=float))
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    if gs.shape[0] != basis.num_atoms or omegas.shape[0] != basis.num_atoms:
        raise ModelError("need one g and one Omega per atom")
    m = np.zeros((basis.dimension,) * 2, dtype=complex)
    for i in range(basis.num_atoms):
        m += omegas[i] * lambda_laser_term(basis, i).matrix
        m += gs[i] * lambda_cavity_term(basis, i).matrix
        m += (delta - 0.5j * gamma) * level_projector(basis, i, 3).matrix
    m -= 0.5j * kappa * photon_number_op(basis).matrix
    return Operator(basis, m)


def build_h_eff(effective: EffectiveParams, basis: Basis) -> Operator:
    """Effective two-level conditional Hamiltonian after eliminating level 3."""
    _require(basis, 2)
    m = build_h_int(effective.g_tilde, basis).matrix
    for i, gam in enumerate(effective.gamma_tilde):
        m -= 0.5j * gam * level_projector(basis, i, 2).matrix
    m -= 0.5j * effective.kappa_tilde * photon_number_op(basis).matrix
    return Operator(basis, m)
