"""Dense complex linear algebra for small atom-photon Hilbert spaces.

Everything in the package lives in spaces of at most a few dozen
dimensions (N atoms with 2 or 3 levels each, plus a photon mode with a
low cutoff), so all storage is dense and all operations are plain
numpy. States and operators carry a reference to their basis so label
lookups and sanity checks stay cheap and explicit.

Units: hbar = 1 throughout; rates are quoted in units of the peak
atom-cavity coupling and lengths in units of the cavity waist.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg

NORM_TOL = 1e-8

Label = tuple[tuple[int, ...], int]


class QCoreError(ValueError):
    """Invalid input to a linear-algebra operation."""


@lru_cache(maxsize=None)
def build_basis(num_atoms: int, levels_per_atom: int, photon_cutoff: int) -> "Basis":
    """Ordered product basis for `num_atoms` atoms and one photon mode.

    States are labelled ((l1, ..., lN), n) with l_i in 1..levels_per_atom
    and n in 0..photon_cutoff, ordered lexicographically in
    (l1, ..., lN, n).  The ordering is deterministic so serialized states
    are comparable across runs.
    """
    if num_atoms < 1:
        raise QCoreError(f"num_atoms must be >= 1, got {num_atoms}")
    if levels_per_atom not in (2, 3):
        raise QCoreError(f"levels_per_atom must be 2 or 3, got {levels_per_atom}")
    if photon_cutoff < 0:
        raise QCoreError(f"photon_cutoff must be >= 0, got {photon_cutoff}")
    labels = []
    levels = range(1, levels_per_atom + 1)
    atom_configs = [()]
    for _ in range(num_atoms):
        atom_configs = [cfg + (l,) for cfg in atom_configs for l in levels]
    for cfg in atom_configs:
        for n in range(photon_cutoff + 1):
            labels.append((cfg, n))
    return Basis(num_atoms, levels_per_atom, photon_cutoff, tuple(labels))


@dataclass(frozen=True)
class Basis:
    """Ordered atom ⊗ photon basis; construct via :func:`build_basis`."""

    num_atoms: int
    levels_per_atom: int
    photon_cutoff: int
    labels: tuple[Label, ...]
    _index: dict[Label, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(
            self, "_index", {lab: i for i, lab in enumerate(self.labels)}
        )

    @property
    def dimension(self) -> int:
        return len(self.labels)

    def index(self, label: Label | str) -> int:
        if isinstance(label, str):
            label = self.parse_label(label)
        try:
            return self._index[label]
        except KeyError:
            raise QCoreError(f"label {label!r} not in basis") from None

    def label(self, index: int) -> Label:
        return self.labels[index]

    def parse_label(self, text: str) -> Label:
        """Parse a compact label such as "12;0" into ((1, 2), 0)."""
        try:
            atoms, n = text.split(";")
            return (tuple(int(c) for c in atoms.strip()), int(n))
        except Exception:
            raise QCoreError(f"cannot parse state label {text!r}") from None

    def format_label(self, label: Label) -> str:
        atoms, n = label
        return "".join(str(l) for l in atoms) + f";{n}"

    def unit_state(self, label: Label | str) -> "StateVector":
        amps = np.zeros(self.dimension, dtype=complex)
        amps[self.index(label)] = 1.0
        return StateVector(self, amps)


class StateVector:
    """Complex amplitudes over a basis.

    Quantum states satisfy norm^2 <= 1 + NORM_TOL (the conditional
    evolution only ever shrinks the norm); raw operator images are
    exempt (`check_norm=False`), since ||H v|| can exceed 1.
    """

    def __init__(self, basis: Basis, amplitudes, check_norm: bool = True):
        self.basis = basis
        self.amplitudes = np.asarray(amplitudes, dtype=complex)
        if self.amplitudes.shape != (basis.dimension,):
            raise QCoreError(
                f"amplitude length {self.amplitudes.shape} does not match "
                f"basis dimension {basis.dimension}"
            )
        if not np.all(np.isfinite(self.amplitudes)):
            raise QCoreError("state amplitudes must be finite")
        if check_norm:
            n2 = self.norm_sq()
            if n2 > 1.0 + NORM_TOL:
                raise QCoreError(f"state norm^2 {n2} exceeds 1 + {NORM_TOL}")

    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def norm(self) -> float:
        return float(np.sqrt(self.norm_sq()))

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise QCoreError("cannot normalize a zero state")
        return StateVector(self.basis, self.amplitudes / n)

    def overlap(self, other: "StateVector") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def amplitude(self, label: Label | str) -> complex:
        return complex(self.amplitudes[self.basis.index(label)])

    def __repr__(self):
        return f"StateVector(dim={self.basis.dimension}, norm^2={self.norm_sq():.6g})"


@dataclass
class Operator:
    """Dense, generally non-Hermitian matrix acting on a basis."""

    basis: Basis
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        d = self.basis.dimension
        if self.matrix.shape != (d, d):
            raise QCoreError(
                f"matrix shape {self.matrix.shape} does not match basis dimension {d}"
            )

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            return StateVector(other.basis, self.matrix @ other.amplitudes, check_norm=False)
        if isinstance(other, Operator):
            return Operator(self.basis, self.matrix @ other.matrix)
        return NotImplemented

    def __add__(self, other: "Operator") -> "Operator":
        return Operator(self.basis, self.matrix + other.matrix)

    def dagger(self) -> "Operator":
        return Operator(self.basis, self.matrix.conj().T)


def matrix_exponential_propagator(h: Operator, dt: float) -> Operator:
    """exp(-i H dt) by scaling and squaring of the Taylor series.

    Valid for arbitrary (non-Hermitian) H; the series for the scaled
    matrix is summed until the next term falls below 1e-16 relative,
    which keeps the local error well under the 1e-12 target.
    """
    if not np.isfinite(dt):
        raise QCoreError("dt must be finite")
    m = np.asarray(h.matrix, dtype=complex)
    if not np.all(np.isfinite(m)):
        raise QCoreError("Hamiltonian entries must be finite")
    a = -1j * dt * m
    return Operator(h.basis, _expm_taylor(a))


def _expm_taylor(a: np.ndarray) -> np.ndarray:
    d = a.shape[0]
    norm = np.linalg.norm(a, np.inf)
    squarings = 0
    if norm > 0.5:
        squarings = int(np.ceil(np.log2(norm / 0.5)))
        a = a / (2.0**squarings)
        norm = norm / 2.0**squarings
    result = np.eye(d, dtype=complex)
    term = np.eye(d, dtype=complex)
    for k in range(1, 40):
        term = term @ a / k
        result = result + term
        if np.linalg.norm(term, np.inf) < 1e-16 * max(1.0, np.linalg.norm(result, np.inf)):
            break
    for _ in range(squarings):
        result = result @ result
    return result


def null_space(m: Operator | np.ndarray, tol: float = 1e-10) -> list[StateVector] | np.ndarray:
    """Orthonormal basis of {v : ||M v|| <= tol * ||M||}.

    Uses a complete orthogonal reduction: column-pivoted QR determines
    the numerical rank, the free columns are back-substituted into
    kernel vectors, and the result is re-orthonormalized.  `tol` is
    relative to the largest diagonal of the triangular factor.

    Accepts either an Operator (returns StateVectors) or a plain 2-d
    array (returns a (dim, k) array of kernel columns).
    """
    if tol <= 0:
        raise QCoreError("tol must be positive")
    basis = None
    if isinstance(m, Operator):
        basis = m.basis
        mat = m.matrix
    else:
        mat = np.asarray(m, dtype=complex)
    if mat.ndim != 2:
        raise QCoreError("null_space expects a matrix")
    if not np.all(np.isfinite(mat)):
        raise QCoreError("matrix entries must be finite")

    ncols = mat.shape[1]
    q, r, perm = scipy.linalg.qr(mat, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r)) if r.size else np.array([])
    scale = diag[0] if diag.size and diag[0] > 0 else 0.0
    rank = int(np.sum(diag > tol * scale)) if scale > 0 else 0

    if rank == ncols:
        kernel = np.zeros((ncols, 0), dtype=complex)
    elif rank == 0:
        kernel = np.eye(ncols, dtype=complex)
    else:
        # R[:rank, :rank] x + R[:rank, rank:] = 0 for the free columns.
        r11 = r[:rank, :rank]
        r12 = r[:rank, rank:]
        x = scipy.linalg.solve_triangular(r11, -r12)
        kernel_perm = np.vstack([x, np.eye(ncols - rank, dtype=complex)])
        kernel = np.zeros_like(kernel_perm)
        kernel[perm, :] = kernel_perm
        kernel, _ = np.linalg.qr(kernel)

    if basis is None:
        return kernel
    return [StateVector(basis, kernel[:, j]) for j in range(kernel.shape[1])]
