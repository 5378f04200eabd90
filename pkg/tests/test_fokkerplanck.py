import math

import numpy as np
import pytest

from mixlyap import fokkerplanck as fp
from mixlyap.errors import WrongConstructionError
from mixlyap.grids import periodic_integral, theta_grid


def test_band_center_coefficient_spots():
    co = fp.assemble_coefficients(fp.BandCenter(0.0, 1.0, 1.0))
    assert co.p_at(0.0) == pytest.approx(1.0)
    assert co.p_at(math.pi / 4.0) == pytest.approx(0.5)
    assert co.q_at(math.pi / 8.0) == pytest.approx(-0.5)


def test_band_edge_coefficient_spots():
    co = fp.assemble_coefficients(fp.BandEdge(0.0, 1.0))
    assert co.p_at(math.pi / 2.0) == pytest.approx(0.0, abs=1e-30)
    assert co.q_at(math.pi / 2.0) == pytest.approx(-2.0)
    # eps = 1 kills the cos(2 theta) coefficient
    th = theta_grid(64)
    q1 = fp.BandEdge(1.0, 2.0).q_at(th)
    expect = -2.0 - 2.0 * 2.0 * np.cos(th) ** 3 * np.sin(th)
    assert np.max(np.abs(q1 - expect)) < 1e-14


def test_degenerate_diffusion_rejected():
    with pytest.raises(ValueError):
        fp.BandCenter(0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        fp.BandEdge(0.0, 0.0)


def test_elliptic_uniform_density():
    co = fp.assemble_coefficients(fp.BandCenter(0.0, 2.0, 0.0))  # p=1, q=0
    rho = fp.density_elliptic(co)
    assert np.max(np.abs(rho.rho - 1.0 / math.pi)) < 1e-12


def test_elliptic_band_center_closed_form():
    # at eps=0, q = p'/2, so rho = c / sqrt(p) exactly
    co = fp.assemble_coefficients(fp.BandCenter(0.0, 1.0, 1.0))
    rho = fp.density_elliptic(co)
    closed = 1.0 / np.sqrt(co.p)
    closed /= periodic_integral(closed)
    assert np.max(np.abs(rho.rho - closed)) < 1e-10
    # p, q are pi/2-periodic, so uniqueness forces the symmetry
    assert np.max(np.abs(rho.rho - np.roll(rho.rho, 256))) < 1e-10
    assert fp.fp_residual(co, rho) < 1e-6


def test_elliptic_requires_positive_p():
    co = fp.assemble_coefficients(fp.BandEdge(0.0, 1.0))
    with pytest.raises(WrongConstructionError):
        fp.density_elliptic(co)


@pytest.mark.parametrize("d0,eps", [(1.0, 0.0), (0.5, -1.0), (2.0, 0.7)])
def test_band_edge_density_properties(d0, eps):
    rho = fp.density_band_edge(d0, eps)
    assert np.all(rho.rho >= 0.0)
    assert abs(periodic_integral(rho.rho) - 1.0) < 1e-8
    co = fp.assemble_coefficients(fp.BandEdge(eps, d0))
    assert fp.fp_residual(co, rho) < 1e-5
    # smooth continuation through pi/2 (de l'Hospital structure)
    i = 256
    left = 2.0 * rho.rho[i - 1] - rho.rho[i - 2]
    right = 2.0 * rho.rho[i + 1] - rho.rho[i + 2]
    assert abs(left - right) < 1e-4
    assert abs(rho.rho[i] - 0.5 * (left + right)) < 1e-4


@pytest.mark.parametrize("d0,eps", [(1.0, 0.0), (1.0, 1.0), (0.5, -1.0)])
def test_band_edge_vs_bvp_oracle(d0, eps):
    co = fp.assemble_coefficients(fp.BandEdge(eps, d0))
    rf = fp.density_band_edge(d0, eps)
    rb = fp.density_bvp_oracle(co)
    assert np.max(np.abs(rf.rho - rb.rho)) < 1e-4


def test_bvp_oracle_uniform_and_elliptic():
    co = fp.assemble_coefficients(fp.BandCenter(0.0, 2.0, 0.0))
    rho = fp.density_bvp_oracle(co)
    assert np.max(np.abs(rho.rho - 1.0 / math.pi)) < 1e-10
    co2 = fp.assemble_coefficients(fp.BandCenter(0.0, 1.0, 1.0))
    r_ell = fp.density_elliptic(co2)
    r_bvp = fp.density_bvp_oracle(co2)
    assert np.max(np.abs(r_ell.rho - r_bvp.rho)) < 1e-6


def test_first_integral_constancy():
    for co, rho in [
        (fp.assemble_coefficients(fp.BandCenter(1.5, 1.0, 0.7)), None),
        (fp.assemble_coefficients(fp.BandEdge(0.0, 1.0)), None),
    ]:
        if isinstance(co.setting, fp.BandCenter):
            rho = fp.density_elliptic(co)
        else:
            rho = fp.density_band_edge(co.setting.d0, co.setting.epsilon)
        assert fp.fp_residual(co, rho) < 1e-5


def test_gamma_thouless_spots():
    assert fp.gamma_thouless(0.1, math.pi / 2.0, 1.0) == pytest.approx(0.00125)
    assert fp.gamma_thouless(0.05, math.pi / 3.0, 1.0) == \
        pytest.approx(0.05 ** 2 / 6.0)
    assert fp.gamma_thouless(0.1, 1.0, 0.0) == 0.0
    with pytest.raises(ValueError):
        fp.gamma_thouless(0.1, 0.0, 1.0)


def test_gamma_band_center_uniform_sanity():
    # int (1/pi)(1 + cos 4 theta) dtheta = 1, so gamma = lam^2 D_pi / 8
    rho = fp.StationaryDensity(theta_grid(), np.full(512, 1.0 / math.pi),
                               1.0, fp.BandCenter(0.0, 1.0, 1.0))
    got = fp.gamma_band_center(0.1, 0.0, 1.0, rho)
    assert got == pytest.approx(0.1 ** 2 / 8.0, rel=1e-12)


def test_gamma_setting_mismatch():
    rho = fp.density_band_edge(1.0, 0.0)
    with pytest.raises(ValueError):
        fp.gamma_band_center(0.1, 0.0, 1.0, rho)
    with pytest.raises(ValueError):
        fp.gamma_band_edge(0.1, 1.0, 1.0, rho)  # eps mismatch


def test_gamma_band_edge_positive_and_scaling():
    rho = fp.density_band_edge(1.0, 0.0)
    vals = [fp.gamma_band_edge(lam, 0.0, 1.0, rho) for lam in (1e-2, 1e-4)]
    assert vals[0] > 0.0
    assert vals[0] / 1e-2 ** (2.0 / 3.0) == \
        pytest.approx(vals[1] / 1e-4 ** (2.0 / 3.0), rel=1e-12)


def test_gamma_near_edge_spots():
    assert fp.gamma_near_edge(1e-4, 1.0, 1.0, "hyperbolic") == \
        pytest.approx(1e-2)
    assert fp.gamma_near_edge(1e-2, 1.0, 1.0, "elliptic", d0=1.0) == \
        pytest.approx(1.25e-3)
    with pytest.warns(UserWarning):
        fp.gamma_near_edge(1e-2, 1.0, 1.5, "hyperbolic")
    with pytest.raises(ValueError):
        fp.gamma_near_edge(1e-2, -1.0, 1.0, "hyperbolic")


def test_band_center_thouless_trend():
    # large eps leaves the anomaly: the prediction approaches the naive
    # Thouless value monotonically
    ratios = []
    for eps in (0.0, 2.0, 5.0, 10.0):
        co = fp.assemble_coefficients(fp.BandCenter(eps, 1.0, 1.0))
        rho = fp.density_elliptic(co)
        ratios.append(fp.gamma_band_center(0.05, eps, 1.0, rho) /
                      (0.05 ** 2 / 8.0))
    diffs = [abs(r - 1.0) for r in ratios]
    assert diffs == sorted(diffs, reverse=True)
    assert diffs[-1] < 0.02


def test_density_at_interpolation():
    rho = fp.density_band_edge(1.0, 0.0)
    mids = theta_grid(128) + math.pi / 256.0
    vals = rho.at(mids)
    assert np.all(vals > 0.0)
    assert abs(np.mean(vals) * math.pi - 1.0) < 1e-3
