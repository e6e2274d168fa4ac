"""Throughput comparison of the compiled and pure-numpy stepping kernels.

Times the RK4 stepper and the piecewise matrix-exponential reference on
the two workloads that dominate real runs: the 8-dimensional two-level
pair and the 54-dimensional three-atom lambda system.

    python benchmarks/kernel_bench.py [--steps N]
"""

import argparse
import time

import numpy as np

from cavpass import build_basis, get_backend
from cavpass.kernels import available_backends
from cavpass import model


def lambda_workload():
    basis = build_basis(3, 3, 1)
    mats = []
    sers = []
    k = 1
    for i in range(3):
        mats.append(model.lambda_cavity_term(basis, i).matrix)
        sers.append(k)
        mats.append(model.lambda_laser_term(basis, i).matrix)
        sers.append(k + 1)
        k += 2
    static = np.zeros_like(mats[0])
    for i in range(3):
        static += (20.0 - 0.025j) * model.level_projector(basis, i, 3).matrix
    static -= 0.01j * model.photon_number_op(basis).matrix
    mats.insert(0, static)
    sers.insert(0, 0)
    return basis, mats, sers, 7


def direct_workload():
    basis = build_basis(2, 2, 1)
    mats = [(-0.1j) * model.photon_number_op(basis).matrix,
            model.cavity_coupling_term(basis, 0).matrix,
            model.cavity_coupling_term(basis, 1).matrix]
    return basis, mats, [0, 1, 2], 3


def coefficient_table(n_series, n_samples):
    t = np.linspace(0.0, 1.0, n_samples)
    table = np.empty((n_series, n_samples))
    table[0] = 1.0
    for k in range(1, n_series):
        table[k] = np.exp(-((t - 0.3 * k) ** 2))
    return table


def bench(name, workload, n_steps):
    basis, mats, sers, n_series = workload()
    psi0 = np.zeros(basis.dimension, dtype=complex)
    psi0[2] = 1.0
    h = 0.005
    rates = {}
    for backend_name in available_backends():
        backend = get_backend(backend_name)
        handle = backend.prepare(mats, sers)

        ctab = coefficient_table(n_series, 2 * n_steps + 1)
        psi = psi0.copy()
        norm_out = np.empty(n_steps)
        snap_out = np.empty((1, basis.dimension), dtype=complex)
        t0 = time.perf_counter()
        backend.rk4_evolve(handle, ctab, psi, h, 0, norm_out, snap_out)
        dt_rk4 = time.perf_counter() - t0

        n_pieces = max(1, n_steps // 4)
        ctab2 = coefficient_table(n_series, 2 * n_pieces)
        psi = psi0.copy()
        t0 = time.perf_counter()
        backend.magnus4_evolve(handle, ctab2, psi, h)
        dt_mag = time.perf_counter() - t0

        rates[backend_name] = (n_steps / dt_rk4, n_pieces / dt_mag)
        print(f"{name:10s} {backend_name:7s} rk4 {n_steps / dt_rk4:12.0f} steps/s"
              f"   magnus {n_pieces / dt_mag:12.0f} pieces/s")
    if len(rates) == 2:
        s_rk = rates["cython"][0] / rates["python"][0]
        s_mg = rates["cython"][1] / rates["python"][1]
        print(f"{name:10s} speedup rk4 {s_rk:5.1f}x   magnus {s_mg:5.1f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=200_000)
    args = parser.parse_args()
    print(f"backends available: {available_backends()}")
    bench("pair-8dim", direct_workload, args.steps)
    bench("lambda-54", lambda_workload, max(1, args.steps // 4))


if __name__ == "__main__":
    main()
