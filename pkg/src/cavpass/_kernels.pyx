# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stepping kernels; semantics match cavpass._kernels_py.

The Hamiltonian terms arrive as one flat COO list (row, col, value,
coefficient-series id) with values already multiplied by -i, so a step
only scatters val * c[ser, sample] * psi[col] into the stage vectors.
"""

import numpy as np

from libc.math cimport sin, fabs, M_PI, sqrt


def prepare(mats, sers):
    """Flatten generator terms A_k = -i M_k into COO arrays."""
    rows = []
    cols = []
    vals = []
    nser = []
    for m, s in zip(mats, sers):
        r, c = np.nonzero(m)
        rows.append(r)
        cols.append(c)
        vals.append(np.asarray(m, dtype=complex)[r, c])
        nser.append(np.full(r.shape[0], s, dtype=np.int32))
    if rows:
        row = np.ascontiguousarray(np.concatenate(rows), dtype=np.int32)
        col = np.ascontiguousarray(np.concatenate(cols), dtype=np.int32)
        val = np.ascontiguousarray(np.concatenate(vals), dtype=complex)
        ser = np.ascontiguousarray(np.concatenate(nser), dtype=np.int32)
    else:
        row = np.zeros(0, dtype=np.int32)
        col = np.zeros(0, dtype=np.int32)
        val = np.zeros(0, dtype=complex)
        ser = np.zeros(0, dtype=np.int32)
    d = mats[0].shape[0] if len(mats) else 0
    return (row, col, val, ser, d)


cdef inline void _apply(const int[::1] row, const int[::1] col,
                        const double complex[::1] val, const int[::1] ser,
                        const double[:, ::1] ctab, Py_ssize_t s,
                        const double complex[::1] x,
                        double complex[::1] y) noexcept nogil:
    cdef Py_ssize_t i, nnz = row.shape[0], d = y.shape[0]
    for i in range(d):
        y[i] = 0.0
    for i in range(nnz):
        y[row[i]] = y[row[i]] + val[i] * ctab[ser[i], s] * x[col[i]]


def rk4_evolve(handle, double[:, ::1] ctab, double complex[::1] psi, double h,
               Py_ssize_t snap_every, double[::1] norm_out,
               double complex[:, ::1] snap_out):
    """Advance psi in place by norm_out.size RK4 steps; see the numpy twin."""
    cdef int[::1] row = handle[0]
    cdef int[::1] col = handle[1]
    cdef double complex[::1] val = handle[2]
    cdef int[::1] ser = handle[3]
    cdef Py_ssize_t d = psi.shape[0]
    cdef Py_ssize_t n_steps = norm_out.shape[0]
    cdef double complex[:, ::1] w = np.zeros((5, d), dtype=complex)
    cdef Py_ssize_t i, j, s, nsnap = 0
    cdef double h2 = 0.5 * h, h6 = h / 6.0
    cdef double nrm
    cdef double complex amp

    with nogil:
        for i in range(n_steps):
            s = 2 * i
            # k1 = A(t) psi
            _apply(row, col, val, ser, ctab, s, psi, w[0])
            # k2 = A(t + h/2) (psi + h/2 k1)
            for j in range(d):
                w[4, j] = psi[j] + h2 * w[0, j]
            _apply(row, col, val, ser, ctab, s + 1, w[4], w[1])
            # k3 = A(t + h/2) (psi + h/2 k2)
            for j in range(d):
                w[4, j] = psi[j] + h2 * w[1, j]
            _apply(row, col, val, ser, ctab, s + 1, w[4], w[2])
            # k4 = A(t + h) (psi + h k3)
            for j in range(d):
                w[4, j] = psi[j] + h * w[2, j]
            _apply(row, col, val, ser, ctab, s + 2, w[4], w[3])
            nrm = 0.0
            for j in range(d):
                amp = psi[j] + h6 * (w[0, j] + 2.0 * (w[1, j] + w[2, j]) + w[3, j])
                psi[j] = amp
                nrm += amp.real * amp.real + amp.imag * amp.imag
            norm_out[i] = nrm
            if snap_every > 0 and (i + 1) % snap_every == 0:
                for j in range(d):
                    snap_out[nsnap, j] = psi[j]
                nsnap += 1
    return nsnap


def magnus4_evolve(handle, double[:, ::1] ctab2, double complex[::1] psi, double h):
    """Piecewise-exponential (4th-order Magnus, Gauss nodes) propagation."""
    cdef int[::1] row = handle[0]
    cdef int[::1] col = handle[1]
    cdef double complex[::1] val = handle[2]
    cdef int[::1] ser = handle[3]
    cdef Py_ssize_t d = psi.shape[0]
    cdef Py_ssize_t n_pieces = ctab2.shape[1] // 2
    # work rows: 0 = current Taylor term, 1 = A1 x, 2 = A2 x, 3 = A2(A1 x), 4 = A1(A2 x)
    cdef double complex[:, ::1] w = np.zeros((5, d), dtype=complex)
    cdef double c2 = sqrt(3.0) / 12.0 * h * h
    cdef double h2 = 0.5 * h
    cdef Py_ssize_t i, j, k
    cdef double wmax, m
    cdef double complex a

    with nogil:
        for i in range(n_pieces):
            for j in range(d):
                w[0, j] = psi[j]
            for k in range(1, 30):
                _apply(row, col, val, ser, ctab2, 2 * i, w[0], w[1])
                _apply(row, col, val, ser, ctab2, 2 * i + 1, w[0], w[2])
                _apply(row, col, val, ser, ctab2, 2 * i + 1, w[1], w[3])
                _apply(row, col, val, ser, ctab2, 2 * i, w[2], w[4])
                wmax = 0.0
                for j in range(d):
                    # next term: (Omega w)/k with Omega = h/2 (A1+A2) + c2 [A2, A1]
                    a = (h2 * (w[1, j] + w[2, j]) + c2 * (w[3, j] - w[4, j])) / k
                    w[0, j] = a
                    psi[j] = psi[j] + a
                    m = fabs(a.real) + fabs(a.imag)
                    if m > wmax:
                        wmax = m
                if wmax < 1e-17:
                    break
    return None


def shaped_positions(double x0, double v_max, double entry, double span,
                     double stop, double h, double[::1] out):
    """RK4 integration of the sin^2 velocity profile; matches the numpy twin."""
    cdef Py_ssize_t n = out.shape[0] - 1
    cdef double kk = M_PI / span
    cdef double x = x0, k1, k2, k3, k4
    cdef Py_ssize_t j

    out[0] = x
    with nogil:
        for j in range(n):
            k1 = _vel(x, v_max, entry, stop, kk)
            k2 = _vel(x + 0.5 * h * k1, v_max, entry, stop, kk)
            k3 = _vel(x + 0.5 * h * k2, v_max, entry, stop, kk)
            k4 = _vel(x + h * k3, v_max, entry, stop, kk)
            x = x + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
            if x > stop:
                x = stop
            out[j + 1] = x


cdef inline double _vel(double x, double v_max, double entry, double stop,
                        double kk) noexcept nogil:
    cdef double s
    if x < entry:
        x = entry
    elif x > stop:
        x = stop
    s = sin(kk * (x - entry))
    return v_max * s * s
