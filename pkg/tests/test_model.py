import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cavpass import model
from cavpass.model import (
    ConstantVelocityTrajectory,
    CouplingProfile,
    EffectiveParams,
    LaserProfile,
    LaserSchedule,
    ModelError,
    ShapedVelocityTrajectory,
    SystemConfig,
    build_h_cond_lambda,
    build_h_cond_two_level,
    build_h_eff,
    build_h_int,
    coupling_at,
    effective_params,
    laser_at,
    positions_at,
    velocity_at,
)
from cavpass.qcore import build_basis

B2 = build_basis(2, 2, 1)
B3 = build_basis(2, 3, 1)


# --- profiles ----------------------------------------------------------------


def test_coupling_profile_values():
    p = CouplingProfile()
    assert coupling_at(p, 0.0) == 1.0
    assert coupling_at(p, 1.0) == pytest.approx(0.36787944117144233, rel=1e-12)
    assert coupling_at(p, -4.0) == pytest.approx(1.1253517471925912e-07, rel=1e-12)


def test_laser_profile_values():
    p = LaserProfile(omega_max=1.0)
    assert laser_at(p, 0.0) == 1.0
    assert laser_at(p, 5.0) == pytest.approx(np.exp(-1.0), rel=1e-12)
    assert laser_at(p, -6.0) == pytest.approx(np.exp(-36.0 / 25.0), rel=1e-12)


@given(st.floats(-8.0, 8.0))
def test_profiles_are_even(x):
    assert coupling_at(CouplingProfile(), x) == coupling_at(CouplingProfile(), -x)
    assert laser_at(LaserProfile(), x) == laser_at(LaserProfile(), -x)


def test_velocity_profile():
    assert velocity_at(-4.0, 2.0) == 0.0
    assert velocity_at(-1.5, 2.0) == pytest.approx(2.0, rel=1e-12)
    assert velocity_at(1.0, 2.0) == pytest.approx(0.0, abs=1e-25)
    with pytest.raises(ModelError):
        velocity_at(1.5, 2.0)
    with pytest.raises(ModelError):
        velocity_at(-4.2, 2.0)


# --- trajectories ------------------------------------------------------------


def test_constant_velocity_positions():
    tr = ConstantVelocityTrajectory((-4.0,), 0.002)
    x = positions_at(tr, 1000.0)
    assert x[0, 0] == pytest.approx(-2.0, abs=1e-12)


def test_shaped_trajectory_initial_condition():
    tr = ShapedVelocityTrajectory(1.0)
    x = positions_at(tr, 0.0)
    assert x[0, 0] == pytest.approx(-4.0 + 1e-3, abs=1e-15)
    assert x[1, 0] == pytest.approx(-6.0 + 1e-3, abs=1e-15)


def test_shaped_trajectory_reaches_stop_fixed_point():
    tr = ShapedVelocityTrajectory(1.0)
    t_late = 1.04 * tr.stop_crossing_time
    x = positions_at(tr, t_late)
    assert x[0, 0] == pytest.approx(1.0, abs=2e-3)
    assert x[1, 0] == pytest.approx(-1.0, abs=2e-3)


def test_shaped_trajectory_matches_closed_form():
    # dx/dt = v sin^2(pi (x+4)/5) separates to cot(pi (x+4)/5) linear in t
    v_max = 2.0
    tr = ShapedVelocityTrajectory(v_max)
    ts = np.array([0.0, 50.0, 400.0, 1500.0])
    u0 = np.pi * 1e-3 / 5.0
    c = 1.0 / np.tan(u0) - np.pi * v_max * ts / 5.0
    exact = -4.0 + 5.0 * np.arctan2(1.0, c) / np.pi
    assert np.max(np.abs(tr.lead_position(ts) - exact)) < 1e-9


def test_laser_schedule_symmetric_point():
    tr = ConstantVelocityTrajectory((-4.0, -5.0), 0.01)
    t_off = LaserSchedule("at-symmetric-point").turn_off_time(tr, 900.0, 0.5)
    # midpoint starts at -4.5 and crosses zero at t = 450
    assert t_off == pytest.approx(450.0, abs=1e-9)
    assert LaserSchedule("never").turn_off_time(tr, 900.0, 0.5) is None
    assert LaserSchedule("at-time", 123.0).turn_off_time(tr, 900.0, 0.5) == 123.0


def test_laser_schedule_validation():
    with pytest.raises(ModelError):
        LaserSchedule("sometimes")
    with pytest.raises(ModelError):
        LaserSchedule("at-time")


# --- system config -----------------------------------------------------------


def test_system_config_validation():
    tr = ConstantVelocityTrajectory((-4.0, -5.0), 0.01)
    with pytest.raises(ModelError):
        SystemConfig(2, "lambda", kappa=0.1, gamma=0.0, trajectory=tr, delta=0.0)
    with pytest.raises(ModelError):
        SystemConfig(2, "two-level-direct", kappa=-0.1, gamma=0.0, trajectory=tr)
    cfg = SystemConfig(2, "lambda", kappa=0.1, gamma=0.05, trajectory=tr, delta=20.0)
    assert cfg.basis().dimension == 18


# --- effective parameters ----------------------------------------------------


def test_effective_params_reference_point():
    eff = effective_params(1.0, 1.0, 20.0, 0.05, 0.025)
    assert eff.g_tilde[0] == pytest.approx(0.025, rel=1e-14)
    assert eff.gamma_tilde[0] == pytest.approx(3.125e-5, rel=1e-14)
    assert eff.kappa_tilde == 0.025


def test_effective_params_zero_laser():
    eff = effective_params([0.7, 0.3], [0.0, 0.0], 15.0, 0.1, 0.2)
    assert eff.g_tilde == (0.0, 0.0)
    assert eff.gamma_tilde == (0.0, 0.0)


def test_effective_params_rejects_zero_detuning():
    with pytest.raises(ModelError):
        effective_params(1.0, 1.0, 0.0, 0.1, 0.1)


@given(st.floats(0.5, 2.0), st.floats(0.5, 2.0), st.floats(10.0, 50.0))
def test_effective_rate_ordering(kappa, gamma, delta):
    # with g ~ kappa ~ Gamma and Delta >= 10 g the eliminated rates order as
    # kappa~ > g~ > Gamma~
    eff = effective_params(1.0, 1.0, delta, gamma, kappa)
    assert eff.kappa_tilde > eff.g_tilde[0] > eff.gamma_tilde[0]


# --- hamiltonians ------------------------------------------------------------


def test_h_int_zero_couplings():
    assert np.all(build_h_int([0.0, 0.0], B2).matrix == 0)


def test_h_int_single_excitation_block():
    g1, g2 = 0.3, 0.9
    h = build_h_int([g1, g2], B2).matrix
    i12, i21, ie = (B2.index(l) for l in ("12;0", "21;0", "11;1"))
    assert h[i21, ie] == 1j * g1
    assert h[i12, ie] == 1j * g2
    assert h[ie, i21] == -1j * g1
    assert h[ie, i12] == -1j * g2
    assert np.max(np.abs(h - h.conj().T)) == 0.0


def test_h_int_annihilates_dark_state():
    from cavpass.analysis import dark_state

    h = build_h_int([0.6, 0.8], B2)
    d = dark_state(0.6, 0.8)
    assert np.vdot(d.amplitudes, h.matrix @ d.amplitudes) == 0.0


@given(st.floats(0.0, 2.0), st.floats(0.0, 2.0))
@settings(max_examples=25)
def test_h_int_conserves_excitation(g1, g2):
    h = build_h_int([g1, g2], B2).matrix
    n = model.excitation_number_op(B2).matrix
    assert np.max(np.abs(h @ n - n @ h)) < 1e-12


def test_h_cond_reduces_to_h_int_at_zero_kappa():
    assert np.array_equal(
        build_h_cond_two_level([0.4, 0.7], 0.0, B2).matrix,
        build_h_int([0.4, 0.7], B2).matrix,
    )


def test_h_cond_photon_decay_entry():
    h = build_h_cond_two_level([1.0, 1.0], 0.2, B2).matrix
    ie = B2.index("11;1")
    assert h[ie, ie] == -0.1j


def test_h_cond_eigenvalues_match_closed_form():
    from cavpass.analysis import bright_eigensystem

    g1, g2, kappa = 0.8, 0.35, 0.4
    idx = [B2.index(l) for l in ("12;0", "21;0", "11;1")]
    blk = build_h_cond_two_level([g1, g2], kappa, B2).matrix[np.ix_(idx, idx)]
    numeric = np.linalg.eigvals(blk)
    eig = bright_eigensystem(g1, g2, kappa)
    for lam in (eig.lambda2, eig.lambda3, 0.0):
        assert np.min(np.abs(numeric - lam)) < 1e-12


def test_h_cond_rejects_negative_kappa():
    with pytest.raises(ModelError):
        build_h_cond_two_level([1.0, 1.0], -0.1, B2)


def test_lambda_hamiltonian_diagonal_limit():
    h = build_h_cond_lambda([0, 0], [0, 0], 17.0, 0.3, 0.0, B3).matrix
    for j, (lv, n) in enumerate(B3.labels):
        n3 = sum(1 for l in lv if l == 3)
        assert h[j, j] == n3 * (17.0 - 0.15j)
    assert np.count_nonzero(h - np.diag(np.diag(h))) == 0


def test_lambda_hamiltonian_conserves_excitation():
    h = build_h_cond_lambda([0.3, 0.8], [0.5, 0.2], 12.0, 0.1, 0.2, B3).matrix
    herm = (h + h.conj().T) / 2
    n = model.excitation_number_op(B3).matrix
    assert np.max(np.abs(herm @ n - n @ herm)) < 1e-12


def test_lambda_hamiltonian_matches_hand_assembly():
    # element-by-element oracle straight from the operator definition
    g = [0.31, 0.77]
    om = [0.52, 0.18]
    delta, gamma, kappa = 14.0, 0.06, 0.23
    d = B3.dimension
    expected = np.zeros((d, d), dtype=complex)
    for j, (lv, n) in enumerate(B3.labels):
        expected[j, j] += sum(1 for l in lv if l == 3) * (delta - 0.5j * gamma)
        expected[j, j] += -0.5j * kappa * n
        for atom in range(2):
            if lv[atom] == 3:  # laser lowers 3 -> 2
                tgt = (lv[:atom] + (2,) + lv[atom + 1:], n)
                expected[B3.index(tgt), j] += 0.5 * om[atom]
            if lv[atom] == 2:  # h.c.: 2 -> 3
                tgt = (lv[:atom] + (3,) + lv[atom + 1:], n)
                expected[B3.index(tgt), j] += 0.5 * om[atom]
            if lv[atom] == 1 and n >= 1:  # cavity absorbs, 1 -> 3
                tgt = (lv[:atom] + (3,) + lv[atom + 1:], n - 1)
                expected[B3.index(tgt), j] += 1j * g[atom] * np.sqrt(n)
            if lv[atom] == 3 and n + 1 <= B3.photon_cutoff:  # h.c.: 3 -> 1 emits
                tgt = (lv[:atom] + (1,) + lv[atom + 1:], n + 1)
                expected[B3.index(tgt), j] += -1j * g[atom] * np.sqrt(n + 1)
    h = build_h_cond_lambda(g, om, delta, gamma, kappa, B3).matrix
    assert np.max(np.abs(h - expected)) == 0.0


def test_lambda_hamiltonian_rejects_two_level_basis():
    with pytest.raises(ModelError):
        build_h_cond_lambda([1, 1], [1, 1], 10.0, 0.1, 0.1, B2)


def test_h_eff_reduces_to_h_cond():
    eff = EffectiveParams((0.4, 0.9), (0.0, 0.0), 0.3)
    assert np.array_equal(
        build_h_eff(eff, B2).matrix, build_h_cond_two_level([0.4, 0.9], 0.3, B2).matrix
    )


def test_h_eff_pure_decay():
    eff = EffectiveParams((0.0, 0.0), (0.02, 0.05), 0.3)
    h = build_h_eff(eff, B2).matrix
    assert np.count_nonzero(h - np.diag(np.diag(h))) == 0
    i12 = B2.index("12;0")
    assert h[i12, i12] == -0.5j * 0.05  # atom 2 excited


@given(st.floats(0.0, 1.5), st.floats(0.0, 1.5), st.floats(0.0, 1.0), st.floats(0.0, 0.5))
@settings(max_examples=25, deadline=None)
def test_antihermitian_part_negative_semidefinite(g1, g2, kappa, gamma):
    h = build_h_cond_lambda([g1, g2], [0.5, 0.5], 12.0, gamma, kappa, B3).matrix
    anti = (h - h.conj().T) / 2j
    assert np.max(np.linalg.eigvalsh(anti)) < 1e-12
