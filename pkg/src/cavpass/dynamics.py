"""Time integration of the conditional Schroedinger equation.

The no-photon evolution d psi/dt = -i H(t) psi is integrated with the
classic fourth-order Runge-Kutta scheme, evaluating H at the step
midpoints.  The base step is halved until the final-state amplitudes are
reproducible to the requested tolerance, which keeps figure runs
deterministic (no adaptive step controller, no randomness).

Since every Hamiltonian here is a linear combination of constant
matrices with smooth real coefficient functions, the integrator has a
fast path that samples the coefficients on the half-step grid and hands
the stepping to a kernel backend (compiled or numpy, see
cavpass.kernels).  Arbitrary ``H(t)`` callables are also accepted and
integrated in plain Python.

A piecewise matrix-exponential reference propagator (fourth-order
Magnus sampling at two Gauss nodes per piece) is provided as an
independent cross-check of the RK4 path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .kernels import Backend, get_backend
from .qcore import Basis, Operator, QCoreError, StateVector

_SQRT3_6 = np.sqrt(3.0) / 6.0


class DynamicsError(ValueError):
    """Invalid input to an integration or observable routine."""


class IntegrationError(RuntimeError):
    """Step-halving did not converge; carries the last residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass
class IntegratorSettings:
    """Fixed-step RK4 controls.

    tolerance applies to the maximum final-state amplitude difference
    between consecutive step halvings; max_halvings counts additional
    refinements tried after the first dt vs dt/2 comparison.
    """

    dt: float = 0.005
    tolerance: float = 1e-8
    snapshot_stride: int = 100
    max_halvings: int = 8

    def __post_init__(self):
        if self.dt <= 0 or self.tolerance <= 0 or self.snapshot_stride < 1:
            raise DynamicsError("dt, tolerance and snapshot_stride must be positive")


@dataclass
class EvolutionResult:
    """Unnormalized no-photon evolution record."""

    basis: Basis
    times: np.ndarray
    states: np.ndarray  # (n_snapshots, dim), unnormalized, includes t0
    norm_sq: np.ndarray
    final_state: StateVector
    dt_used: float
    halvings: int
    converged: bool
    residual: float

    def snapshot(self, i: int) -> StateVector:
        return StateVector(self.basis, self.states[i], check_norm=False)


class TimeDependentHamiltonian:
    """H(t) = static + sum_k coeff_k(t) * term_k on a fixed basis.

    Coefficient functions must accept a float array of times and return
    real values (couplings and Rabi rates are real in this package).
    Calling the object at a scalar time assembles the dense matrix, so
    it is also usable wherever a plain ``H(t)`` callable is expected.
    """

    def __init__(
        self,
        basis: Basis,
        terms: Sequence[tuple[Operator | np.ndarray, Callable[[np.ndarray], np.ndarray]]],
        static: Operator | np.ndarray | None = None,
    ):
        self.basis = basis
        d = basis.dimension
        self._mats = []
        self._coeff_fns = []
        if static is not None:
            self._mats.append(_as_matrix(static, d))
            self._coeff_fns.append(None)
        for op, fn in terms:
            self._mats.append(_as_matrix(op, d))
            self._coeff_fns.append(fn)
        if not self._mats:
            self._mats.append(np.zeros((d, d), dtype=complex))
            self._coeff_fns.append(None)
        # series 0 is the constant 1; every constant-coefficient term maps there
        self._series_ids = []
        self._varying = []
        for fn in self._coeff_fns:
            if fn is None:
                self._series_ids.append(0)
            else:
                self._varying.append(fn)
                self._series_ids.append(len(self._varying))
        self.n_series = len(self._varying) + 1

    def coeff_table(self, times: np.ndarray) -> np.ndarray:
        table = np.empty((self.n_series, times.shape[0]), dtype=float)
        table[0, :] = 1.0
        for k, fn in enumerate(self._varying, start=1):
            table[k, :] = fn(times)
        return table

    def matrix(self, t: float) -> np.ndarray:
        col = self.coeff_table(np.array([float(t)]))[:, 0]
        out = np.zeros((self.basis.dimension,) * 2, dtype=complex)
        for m, s in zip(self._mats, self._series_ids):
            out += col[s] * m
        return out

    def __call__(self, t: float) -> Operator:
        return Operator(self.basis, self.matrix(t))

    def compile(self, backend: Backend):
        return backend.prepare(self._mats, self._series_ids)


def _as_matrix(h, d: int) -> np.ndarray:
    m = h.matrix if isinstance(h, Operator) else np.asarray(h, dtype=complex)
    if m.shape != (d, d):
        raise DynamicsError(f"Hamiltonian shape {m.shape} does not match dimension {d}")
    return np.ascontiguousarray(m, dtype=complex)


Segment = tuple[object, float, float]  # (Hamiltonian, t_start, t_end)


def integrate_conditional(h_of_t, psi0: StateVector, t_span, settings: IntegratorSettings | None = None,
                          backend: Backend | None = None) -> EvolutionResult:
    """Integrate d psi/dt = -i H(t) psi over t_span = (t0, t1).

    ``h_of_t`` is either a TimeDependentHamiltonian (fast kernel path) or
    any callable returning an Operator / dense matrix at a scalar time.
    The result is converged in the sense that repeating the run at half
    the step changes no final amplitude by more than the tolerance;
    otherwise IntegrationError is raised with the last residual.
    """
    t0, t1 = t_span
    return integrate_piecewise([(h_of_t, float(t0), float(t1))], psi0, settings, backend)


def integrate_fixed_step(h_of_t, psi0: StateVector, t_span, dt: float,
                         snapshot_stride: int = 10**9,
                         backend: Backend | None = None) -> EvolutionResult:
    """Single RK4 pass at exactly the given step, no halving control.

    Used for convergence-order measurements and oracle comparisons; for
    production runs prefer integrate_conditional, which verifies the
    step is fine enough.
    """
    backend = backend or get_backend()
    t0, t1 = float(t_span[0]), float(t_span[1])
    n0 = max(1, int(np.ceil((t1 - t0) / dt - 1e-12)))
    settings = IntegratorSettings(dt=dt, tolerance=1.0, snapshot_stride=snapshot_stride)
    return _run_once([(h_of_t, t0, t1)], [n0], psi0, settings, backend, 0)


def integrate_piecewise(segments: Sequence[Segment], psi0: StateVector,
                        settings: IntegratorSettings | None = None,
                        backend: Backend | None = None) -> EvolutionResult:
    """Integrate across consecutive time segments (e.g. laser on / off).

    Segment boundaries are exact grid points at every refinement level,
    so a coefficient discontinuity at a boundary never lands inside an
    RK4 step.  Convergence is assessed on the final state of the last
    segment, refining all segments together.
    """
    settings = settings or IntegratorSettings()
    backend = backend or get_backend()
    if psi0.norm_sq() == 0.0:
        raise DynamicsError("initial state has zero norm")
    for _, a, b in segments:
        if not (np.isfinite(a) and np.isfinite(b)) or b <= a:
            raise DynamicsError(f"invalid segment span ({a}, {b})")

    base_steps = [max(1, int(np.ceil((b - a) / settings.dt - 1e-12))) for _, a, b in segments]

    previous = None
    residual = np.inf
    for level in range(settings.max_halvings + 2):
        result = _run_once(segments, base_steps, psi0, settings, backend, level)
        if previous is not None:
            residual = float(np.max(np.abs(result.final_state.amplitudes - previous.final_state.amplitudes)))
            if residual < settings.tolerance:
                result.halvings = level
                result.converged = True
                result.residual = residual
                return result
        previous = result
    raise IntegrationError(
        f"no convergence to {settings.tolerance} after {settings.max_halvings + 1} step "
        f"halvings (residual {residual:.3e}); decrease dt or raise the tolerance",
        residual=residual,
    )


def _run_once(segments, base_steps, psi0, settings, backend, level) -> EvolutionResult:
    basis = psi0.basis
    psi = psi0.amplitudes.copy()
    stride = settings.snapshot_stride
    times = [segments[0][1]]
    snaps = [psi.copy()]
    norms = [float(np.vdot(psi, psi).real)]
    dt_finest = np.inf

    for (ham, a, b), n0 in zip(segments, base_steps):
        n = n0 * 2**level
        h = (b - a) / n
        dt_finest = min(dt_finest, h)
        if isinstance(ham, TimeDependentHamiltonian):
            _evolve_kernel(ham, backend, psi, a, h, n, stride, times, snaps, norms)
        else:
            _evolve_generic(ham, basis, psi, a, h, n, stride, times, snaps, norms)

    final = StateVector(basis, psi, check_norm=False)
    return EvolutionResult(
        basis=basis,
        times=np.array(times),
        states=np.array(snaps),
        norm_sq=np.array(norms),
        final_state=final,
        dt_used=dt_finest,
        halvings=level,
        converged=False,
        residual=np.inf,
    )


_CHUNK_TARGET = 32768


def _evolve_kernel(ham, backend, psi, t0, h, n, stride, times, snaps, norms):
    handle = ham.compile(backend)
    chunk = stride * max(1, _CHUNK_TARGET // stride)
    done = 0
    while done < n:
        m = min(chunk, n - done)
        j = np.arange(2 * m + 1, dtype=float)
        t_half = t0 + (done * h) + (0.5 * h) * j
        ctab = ham.coeff_table(t_half)
        norm_out = np.empty(m, dtype=float)
        n_snap_max = m // stride + 1
        snap_out = np.empty((n_snap_max, psi.shape[0]), dtype=complex)
        wrote = backend.rk4_evolve(handle, ctab, psi, h, stride, norm_out, snap_out)
        # chunk sizes are multiples of stride, so in-chunk snapshot offsets
        # line up with the global stride grid
        for k in range(wrote):
            step = done + (k + 1) * stride
            times.append(t0 + step * h)
            snaps.append(snap_out[k].copy())
            norms.append(norm_out[(k + 1) * stride - 1])
        done += m
    # always record the segment end at full precision
    if not times or times[-1] != t0 + n * h:
        times.append(t0 + n * h)
        snaps.append(psi.copy())
        norms.append(float(np.vdot(psi, psi).real))


def _evolve_generic(h_of_t, basis, psi, t0, h, n, stride, times, snaps, norms):
    def gen(t):
        ht = h_of_t(t)
        return -1j * _as_matrix(ht, basis.dimension)

    for i in range(n):
        t = t0 + i * h
        a0 = gen(t)
        a1 = gen(t + 0.5 * h)
        a2 = gen(t + h)
        k1 = a0 @ psi
        k2 = a1 @ (psi + (0.5 * h) * k1)
        k3 = a1 @ (psi + (0.5 * h) * k2)
        k4 = a2 @ (psi + h * k3)
        psi += (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        if (i + 1) % stride == 0 and (i + 1) != n:
            times.append(t0 + (i + 1) * h)
            snaps.append(psi.copy())
            norms.append(float(np.vdot(psi, psi).real))
    times.append(t0 + n * h)
    snaps.append(psi.copy())
    norms.append(float(np.vdot(psi, psi).real))


def reference_evolve(h_of_t, psi0: StateVector, t_span, piece_dt: float = 1e-4,
                     backend: Backend | None = None) -> StateVector:
    """Independent reference propagation by piecewise matrix exponentials.

    Each piece of length ``piece_dt`` samples H at the two Gauss-Legendre
    nodes and exponentiates the fourth-order Magnus generator, so the
    scheme shares no code path with the RK4 stepping.  For constant H
    this reduces to the exact exponential chain.
    """
    backend = backend or get_backend()
    t0, t1 = float(t_span[0]), float(t_span[1])
    n = max(1, int(np.ceil((t1 - t0) / piece_dt - 1e-12)))
    h = (t1 - t0) / n
    psi = psi0.amplitudes.copy()

    if isinstance(h_of_t, TimeDependentHamiltonian):
        handle = h_of_t.compile(backend)
        chunk = _CHUNK_TARGET
        done = 0
        while done < n:
            m = min(chunk, n - done)
            i = np.arange(m, dtype=float)
            t_lo = t0 + (done + i + 0.5 - _SQRT3_6) * h
            t_hi = t0 + (done + i + 0.5 + _SQRT3_6) * h
            t_nodes = np.empty(2 * m, dtype=float)
            t_nodes[0::2] = t_lo
            t_nodes[1::2] = t_hi
            ctab2 = h_of_t.coeff_table(t_nodes)
            backend.magnus4_evolve(handle, ctab2, psi, h)
            done += m
        return StateVector(psi0.basis, psi, check_norm=False)

    d = psi0.basis.dimension
    c2 = np.sqrt(3.0) / 12.0 * h * h
    for i in range(n):
        t = t0 + i * h
        a1 = -1j * _as_matrix(h_of_t(t + (0.5 - _SQRT3_6) * h), d)
        a2 = -1j * _as_matrix(h_of_t(t + (0.5 + _SQRT3_6) * h), d)
        omega = (0.5 * h) * (a1 + a2) + c2 * (a2 @ a1 - a1 @ a2)
        w = psi.copy()
        for j in range(1, 30):
            w = omega @ w / j
            psi += w
            if np.max(np.abs(w.real) + np.abs(w.imag)) < 1e-17:
                break
    return StateVector(psi0.basis, psi, check_norm=False)


def no_photon_probability(result: EvolutionResult) -> float:
    """Squared norm of the final unnormalized state (success probability)."""
    return float(min(1.0, result.final_state.norm_sq()))


def fidelity(state: StateVector, target: StateVector) -> float:
    """|<target|state>|^2 / <state|state> for a normalized target."""
    if abs(target.norm_sq() - 1.0) > 1e-8:
        raise DynamicsError("target state must be normalized")
    ns = state.norm_sq()
    if ns == 0.0:
        raise DynamicsError("state has zero norm")
    return float(min(1.0, abs(target.overlap(state)) ** 2 / ns))


def population(state: StateVector, subspace) -> float:
    """Squared projection of the normalized state onto labels or a vector."""
    ns = state.norm_sq()
    if ns == 0.0:
        raise DynamicsError("state has zero norm")
    if isinstance(subspace, StateVector):
        v = subspace.normalized()
        return float(abs(v.overlap(state)) ** 2 / ns)
    idx = [state.basis.index(lab) for lab in subspace]
    return float(np.sum(np.abs(state.amplitudes[idx]) ** 2) / ns)
