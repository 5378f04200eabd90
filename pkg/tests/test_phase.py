import math
import warnings

import numpy as np
import pytest

from mixlyap import fokkerplanck as fp
from mixlyap.grids import tv_distance
from mixlyap.phase import (band_center_setup, band_edge_setup, birkhoff_sum,
                           birkhoff_like_sum, coefficients_of,
                           drift_diffusion_estimate, fourier_coefficients,
                           log_norm_expansion_check, orbit_histogram,
                           phase_increment_residual, phase_orbit,
                           projective_action, rotation_setup,
                           trig_polynomial)
from mixlyap.potential import iid_process, two_state_markov
from mixlyap.transfer import rotation_frame, transfer_affine


def test_projective_action_examples():
    assert projective_action(np.eye(2), 0.7) == pytest.approx(0.7, abs=1e-15)
    rk, _ = rotation_frame(0.4)
    assert projective_action(rk, 0.3) == pytest.approx(0.7, abs=1e-14)
    # diag(2, 1/2) at pi/4 -> arctan(1/4)
    got = projective_action(np.diag([2.0, 0.5]), math.pi / 4.0)
    assert got == pytest.approx(0.24497866312686414, abs=1e-14)


def test_projective_group_action():
    rng = np.random.default_rng(0)
    for _ in range(200):
        t1 = rng.standard_normal((2, 2))
        t2 = rng.standard_normal((2, 2))
        if abs(np.linalg.det(t1)) < 0.1 or abs(np.linalg.det(t2)) < 0.1:
            continue
        th = rng.uniform(0, math.pi)
        lhs = projective_action(t1 @ t2, th)
        rhs = projective_action(t1, projective_action(t2, th))
        assert abs(math.sin(lhs - rhs)) < 1e-12


def test_fourier_coefficients_band_center():
    u, v = 0.8, -1.3
    a, b, g = fourier_coefficients(np.array([[0.0, -u], [v, 0.0]]))
    assert a == pytest.approx(1j * (v + u) / 2.0)
    assert b == pytest.approx(1j * (u - v) / 2.0)
    assert g == pytest.approx((v * v - u * u) / 2.0)


def test_fourier_coefficients_band_edge():
    V = 1.7
    a, b, g = fourier_coefficients(np.array([[0.0, 0.0], [V, 0.0]]))
    assert a == pytest.approx(1j * V / 2.0)
    assert b == pytest.approx(-1j * V / 2.0)
    assert g == pytest.approx(V * V / 2.0)
    assert fourier_coefficients(np.zeros((2, 2))) == (0.0, 0.0, 0.0)


def test_polynomial_reconstruction():
    # p(theta) = Im(<v|P|e_theta> / <v|e_theta>) pointwise
    rng = np.random.default_rng(1)
    vvec = np.array([1.0, -1.0j]) / math.sqrt(2.0)
    for _ in range(20):
        x, y, z = rng.standard_normal(3)
        P = np.array([[x, y], [z, -x]])
        a, b, _ = fourier_coefficients(P)
        for th in rng.uniform(0, math.pi, 8):
            e = np.array([math.cos(th), math.sin(th)])
            direct = np.imag(np.conj(vvec) @ (P @ e) / (np.conj(vvec) @ e))
            assert abs(trig_polynomial(a, b, th) - direct) < 1e-12


def test_phase_orbit_free_rotation():
    setup = rotation_setup(iid_process(seed=2), E=2.0 * math.cos(0.9), lam=0.0)
    orb = phase_orbit(setup, 0.2, 500)
    expect = np.mod(0.2 + 0.9 * np.arange(500), math.pi)
    assert np.max(np.abs(np.sin(orb.thetas - expect))) < 1e-12


@pytest.mark.parametrize("make,lams,eta", [
    (band_edge_setup, (1e-3, 1e-4), 1.0 / 3.0),
    (band_center_setup, (0.05, 0.02), 1.0),
])
def test_increment_expansion_scaling(make, lams, eta):
    pr = iid_process(seed=3)
    res = [phase_increment_residual(make(pr, lam, 0.0), 0.7, n_samples=4096)
           for lam in lams]
    slope = (math.log(res[0]) - math.log(res[1])) / \
        (math.log(lams[0]) - math.log(lams[1]))
    assert abs(slope - 3.0 * eta) < 0.2 * 3.0 * eta + 0.2


@pytest.mark.parametrize("make,lams,eta", [
    (band_edge_setup, (1e-3, 1e-4), 1.0 / 3.0),
    (band_center_setup, (0.05, 0.02), 1.0),
])
def test_log_norm_expansion_scaling(make, lams, eta):
    pr = iid_process(seed=4)
    res = [log_norm_expansion_check(make(pr, lam, 0.0), 0.7, n_samples=4096)
           for lam in lams]
    slope = (math.log(res[0]) - math.log(res[1])) / \
        (math.log(lams[0]) - math.log(lams[1]))
    assert abs(slope - 3.0 * eta) < 0.2 * 3.0 * eta + 0.2


def test_log_norm_zero_generators():
    zero = iid_process(values=(0.0, 0.0), probs=(0.5, 0.5), seed=0)
    setup = rotation_setup(zero, E=1.0, lam=0.5)
    assert log_norm_expansion_check(setup, 0.3) < 1e-15


def test_exact_vs_exponential_family():
    pr = iid_process(seed=5)
    lam = 1e-3
    ex = band_edge_setup(pr, lam, 0.0, exact=True)
    sy = band_edge_setup(pr, lam, 0.0, exact=False)
    vals = ex.sample_values(100, stream=0)
    diff = np.max(np.abs(ex.step_matrices(vals) - sy.step_matrices(vals)))
    assert diff < 5.0 * lam


def test_orbit_transfer_consistency():
    # telescoping: sum log||T e_theta_n|| equals the vector-evolution total
    pr = iid_process(seed=6)
    E, lam, n = 1.0, 0.1, 100_000
    setup = rotation_setup(pr, E, lam)
    theta0 = pr.rng(0, purpose=1).random() * math.pi
    orb = phase_orbit(setup, theta0, n)
    k = math.acos(E / 2.0)
    rk, _ = rotation_frame(k)
    m1 = np.array([[-lam, 0.0], [lam * math.cos(k) / math.sin(k), 0.0]])
    from mixlyap.transfer import lyapunov_mc
    est = lyapunov_mc(pr, family=(rk, m1), steps=n, replicas=1)
    assert abs(orb.log_norm_sum - est.gamma * n) < 1e-9 * n


def test_birkhoff_constant():
    setup = rotation_setup(iid_process(seed=7), E=1.0, lam=0.01)
    orb = phase_orbit(setup, 0.1, 1000)
    assert birkhoff_sum(lambda th: np.ones_like(th), orb) == 1.0


def test_birkhoff_oscillatory_decay():
    # geometric-sum oracle: |(1/N) sum e^{2 i theta_n}| <= 2/(N |1 - e^{2ik}|)
    k = 0.9
    setup = rotation_setup(iid_process(seed=8), E=2.0 * math.cos(k), lam=0.0)
    for n in (200, 2000, 20000):
        orb = phase_orbit(setup, 0.37, n)
        val = abs(birkhoff_sum(lambda th: np.exp(2j * th), orb))
        assert val <= 2.0 / (n * abs(1.0 - np.exp(2j * k))) + 1e-12


def test_birkhoff_like_decay_in_lambda():
    # |I_hat(V e^{2 i theta})| decreases with lambda in the bulk
    pr = two_state_markov(0.3, seed=9)
    k = 0.9
    vals = []
    for lam in (0.1, 0.05, 0.025):
        setup = rotation_setup(pr, 2.0 * math.cos(k), lam)
        orb = phase_orbit(setup, 0.2, 1_000_000)
        v = abs(birkhoff_like_sum(lambda w: w[:, 0],
                                  lambda th: np.exp(2j * th), orb))
        vals.append(v)
    assert vals[0] > vals[1] > vals[2]
    assert vals[2] < 0.01


def test_birkhoff_like_misaligned():
    setup = rotation_setup(iid_process(seed=10), E=1.0, lam=0.01)
    orb = phase_orbit(setup, 0.1, 100)
    with pytest.raises(ValueError):
        birkhoff_like_sum(lambda w: w[:50, 0], lambda th: th, orb)


def test_drift_diffusion_band_edge_spots():
    pr = iid_process(seed=11)
    setup = band_edge_setup(pr, 1e-2, 0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        dd = drift_diffusion_estimate(setup, 1000, 2000,
                                      thetas=[0.0, math.pi / 2.0])
    assert dd.p_hat[0] == pytest.approx(1.0, rel=0.1)   # D_V(0) cos^4(0)
    assert abs(dd.p_hat[1]) < 1e-12                      # cos^4(pi/2) = 0
    assert dd.q_hat[1] == pytest.approx(-2.0, rel=0.05)  # q(pi/2) = -2


def test_drift_diffusion_band_center_grid():
    pr = iid_process(seed=12)
    setup = band_center_setup(pr, 1e-2, 0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        dd = drift_diffusion_estimate(setup, 1000, 3000)
    co = fp.BandCenter(0.0, 1.0, 1.0)
    assert np.max(np.abs(dd.p_hat - co.p_at(dd.theta)) / co.p_at(dd.theta)) < 0.10
    assert np.max(np.abs(dd.q_hat - co.q_at(dd.theta))) < 0.05


def test_drift_diffusion_validity_warning():
    setup = band_edge_setup(iid_process(seed=13), 0.1, 0.0)
    with pytest.warns(UserWarning):
        drift_diffusion_estimate(setup, 1000, 10)


def test_histogram_transient_invariance():
    pr = iid_process(seed=14)
    setup = band_edge_setup(pr, 1e-2, 0.0)
    _, m1 = orbit_histogram(setup, 2_000_000, n_orbits=8, discard=1000)
    _, m2 = orbit_histogram(setup, 2_000_000, n_orbits=8, discard=120_000)
    assert tv_distance(m1, m2) < 0.02


def test_band_center_pairing_consumes_two_values():
    pr = iid_process(seed=15)
    setup = band_center_setup(pr, 0.05, 0.0)
    assert setup.width == 2
    orb = phase_orbit(setup, 0.1, 50)
    assert orb.values.shape == (50, 2)
    # the paired one-step matrices are products of two transfer matrices
    from mixlyap.transfer import transfer_matrix
    v, u = orb.values[0]
    expect = transfer_matrix(0.0, 0.05, u) @ transfer_matrix(0.0, 0.05, v)
    got = setup.step_matrices(orb.values[:1])[0]
    assert np.max(np.abs(got - expect)) < 1e-14
