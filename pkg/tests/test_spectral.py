import math

import numpy as np
import pytest

from mixlyap.errors import ConfigurationError, DivergenceError
from mixlyap.potential import (MixingKind, MixingProfile, cocycle_process,
                               iid_process, markov_process,
                               moving_average_process, sample_stream,
                               two_state_markov)
from mixlyap.spectral import (cocycle_partner_window, correlation_form,
                              exact_density, exact_ma_density,
                              exact_markov_density, periodogram_density,
                              value_window)

KS = [0.0, math.pi / 3.0, math.pi / 2.0, math.pi]


def test_periodogram_iid_flat():
    pr = iid_process(seed=1)
    for k in KS:
        est = periodogram_density(pr, k, segment_len=4096, segments=32)
        assert abs(est.value - 1.0) <= 3.0 * est.stderr


def test_periodogram_cocycle_vanishes_at_zero():
    pr = cocycle_process(seed=2)
    est0 = periodogram_density(pr, 0.0, segment_len=8192, segments=32)
    # telescoping: (1/N)|sum V|^2 = (1/N)|sigma_N - sigma_0|^2 <= 4/N exactly
    assert est0.value <= 4.0 / 8192
    estpi = periodogram_density(pr, math.pi, segment_len=8192, segments=32)
    assert abs(estpi.value - 4.0) <= 4.0 * estpi.stderr


def test_exact_markov_closed_form():
    # geometric series: D(k) = (1-a^2)/(1 - 2 a cos k + a^2), a = 1 - 2p
    p = 0.3
    a = 1.0 - 2.0 * p
    pr = two_state_markov(p, seed=0)
    for k in np.linspace(0, math.pi, 13):
        closed = (1.0 - a * a) / (1.0 - 2.0 * a * math.cos(k) + a * a)
        assert abs(exact_markov_density(pr, k) - closed) < 1e-12
    assert abs(exact_markov_density(pr, math.pi) - 0.42857142857142855) < 1e-14


def test_exact_markov_iid_rows():
    # one-step-memory chain with identical rows is IID: D = Var for all k
    P = [[0.25, 0.75], [0.25, 0.75]]
    pr = markov_process(P, [1.0, -1.0])
    var = pr.params["values"] @ (pr.params["stationary"] * pr.params["values"])
    for k in KS:
        assert abs(exact_markov_density(pr, k) - var) < 1e-12


def test_exact_markov_requires_chain():
    with pytest.raises(ConfigurationError):
        exact_markov_density(iid_process(seed=0), 0.0)


def test_periodogram_vs_exact_oracles():
    # invariant: |periodogram - exact| <= max(5% relative, 3 stderr)
    for pr in (two_state_markov(0.3, seed=3),
               moving_average_process(0.5, seed=3)):
        for k in KS:
            est = periodogram_density(pr, k, segment_len=8192, segments=48)
            exact = exact_density(pr, k)
            tol = max(0.05 * exact, 3.0 * est.stderr)
            assert abs(est.value - exact) <= tol, (pr.kind, k)


def test_exact_ma_density_matches_autocov_sum():
    a = 0.5
    pr = moving_average_process(a, seed=0)
    var = 0.25 / (1.0 - a * a)
    for k in KS:
        direct = var * (1.0 + 2.0 * sum(a ** m * math.cos(k * m)
                                        for m in range(1, 200)))
        assert abs(exact_ma_density(pr, k) - direct) < 1e-12


def test_periodogram_symmetry():
    pr = two_state_markov(0.3, seed=5)
    k = 1.1
    e1 = periodogram_density(pr, k, segment_len=4096, segments=16)
    e2 = periodogram_density(pr, 2.0 * math.pi - k, segment_len=4096,
                             segments=16)
    assert abs(e1.value - e2.value) < 1e-10  # exact for real streams


def test_correlation_form_iid():
    res = correlation_form(value_window(), value_window(), iid_process(seed=6),
                           n=400_000)
    assert abs(res.value - 1.0) < 1e-2
    assert res.tail_bound == 0.0


def test_correlation_form_matches_density_at_zero():
    pr = two_state_markov(0.3, seed=7)
    res = correlation_form(value_window(), value_window(), pr, n=2_000_000)
    assert abs(res.value - exact_markov_density(pr, 0.0)) < 1e-2


def test_correlation_form_cocycle_partner():
    # brute-force truncated double sum as the oracle
    pr = two_state_markov(0.3, seed=8)
    res = correlation_form(value_window(), cocycle_partner_window(), pr,
                           n=2_000_000)
    v = sample_stream(pr, 2_000_000, stream=9)
    g2 = v[1:] - v[:-1]
    M = 60
    L = v.size - M - 2
    brute = np.mean(v[:L] * g2[:L])
    for m in range(1, M + 1):
        brute += 2.0 * np.mean(v[:L] * g2[m:m + L])
    # exact value for C(m) = a^m: -C(0) - C(1) = -(1 + a)
    assert abs(res.value - brute) < 2e-2
    assert abs(res.value - (-1.4)) < 2e-2


def test_correlation_form_divergence():
    prof = MixingProfile(MixingKind.POWER_LAW, 0.8, 1.0)
    with pytest.raises(DivergenceError):
        correlation_form(value_window(), value_window(), iid_process(seed=0),
                         mixing=prof, n=1000)


def test_periodogram_parameter_validation():
    with pytest.raises(ValueError):
        periodogram_density(iid_process(seed=0), 0.0, segment_len=100)
    with pytest.raises(ValueError):
        periodogram_density(iid_process(seed=0), 0.0, segments=2)
