"""Projective phase dynamics of SL(2,R) families and its observables.

A matrix T acts on the half-circle [0, pi) through e_theta -> +-T e_theta /
||T e_theta||. Families near an anomaly are described by AnomalySetup: a
zeroth-order rotation R_k (sign +-1) perturbed through generators
lam^eta P1(omega) + lam^(2 eta) P2(omega); the drift/diffusion data and the
log-norm expansion coefficients all derive from the Fourier coefficients
alpha = <v|P|v>, beta = <vbar|P|v>, gamma = <vbar|P^T P|v>, v = (1, -i)/sqrt2.

Orbits are evolved on unit vectors (only +,-,*,/,sqrt in the recurrence) so
compiled and fallback kernels produce bit-identical trajectories; angles are
materialized afterwards.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .grids import PERIOD, theta_midpoints, wrap_angles
from .potential import sample_stream, stream_chunks
from .transfer import band_edge_family_affine, rotation_frame


def projective_action(T, theta):
    """Angle of +-T e_theta reduced to [0, pi)."""
    theta = np.asarray(theta, dtype=float)
    w1 = T[..., 0, 0] * np.cos(theta) + T[..., 0, 1] * np.sin(theta)
    w2 = T[..., 1, 0] * np.cos(theta) + T[..., 1, 1] * np.sin(theta)
    return wrap_angles(np.arctan2(w2, w1))


def coefficients_of(P):
    """(alpha, beta, gamma) of a real 2x2 matrix stack (vectorized)."""
    P = np.asarray(P, dtype=float)
    p00, p01 = P[..., 0, 0], P[..., 0, 1]
    p10, p11 = P[..., 1, 0], P[..., 1, 1]
    alpha = 0.5 * (p00 + p11) + 0.5j * (p10 - p01)
    beta = 0.5 * (p00 - p11) - 0.5j * (p01 + p10)
    g11 = p00 * p00 + p10 * p10
    g22 = p01 * p01 + p11 * p11
    g12 = p00 * p01 + p10 * p11
    gamma = 0.5 * (g11 - g22) - 1j * g12
    return alpha, beta, gamma


def fourier_coefficients(P):
    """(alpha_j, beta_j, gamma_j) of one traceless real 2x2 matrix."""
    P = np.asarray(P, dtype=float)
    if abs(P[0, 0] + P[1, 1]) > 1e-12:
        raise ValueError("P must be traceless")
    a, b, g = coefficients_of(P)
    return complex(a), complex(b), complex(g)


def trig_polynomial(alpha, beta, theta):
    """p(theta) = Im(alpha - beta e^{2 i theta}) (vectorized in both args)."""
    return np.imag(alpha) - np.imag(beta * np.exp(2j * np.asarray(theta)))


def expm_traceless(X):
    """exp of a stack of traceless 2x2 matrices, via X^2 = (x^2 + yz) Id."""
    X = np.asarray(X, dtype=float)
    x = X[..., 0, 0]
    s2 = x * x + X[..., 0, 1] * X[..., 1, 0]
    s = np.sqrt(np.abs(s2))
    pos = s2 > 0
    c = np.where(pos, np.cosh(s), np.cos(s))
    small = np.abs(s2) < 1e-24
    with np.errstate(invalid="ignore", divide="ignore"):
        sl = np.where(pos, np.sinh(s) / s, np.sin(s) / s)
    sl = np.where(small, 1.0 + s2 / 6.0, sl)
    out = sl[..., None, None] * X
    out[..., 0, 0] += c
    out[..., 1, 1] += c
    return out


@dataclass
class AnomalySetup:
    """Random SL(2,R) family +-R_k exp(lam^eta P1 + lam^{2 eta} P2 + ...).

    width is the number of consecutive potential values consumed per step
    (2 at the band center, where sites are grouped in pairs). step_matrices
    builds the actual one-step matrices; p1/p2_matrices return the
    generators for the coefficient machinery.
    """
    eta: float
    k: float
    sign: int
    width: int
    lam: float
    process: object
    label: str
    step_matrices: callable = field(repr=False)
    p1_matrices: callable = field(repr=False)
    p2_matrices: callable = field(repr=False)

    def sample_values(self, n, stream=0):
        """(n, width) consecutive potential values."""
        flat = sample_stream(self.process, n * self.width, stream=stream)
        return flat.reshape(n, self.width)


def _exp_family(setup_sign, k, lam, eta, p1_fn, p2_fn):
    rk = np.array([[math.cos(k), -math.sin(k)], [math.sin(k), math.cos(k)]])

    def build(values):
        X = lam ** eta * p1_fn(values) + lam ** (2 * eta) * p2_fn(values)
        return setup_sign * np.einsum("ij,njk->nik", rk, expm_traceless(X))

    return build


def band_edge_setup(process, lam, epsilon, exact=True):
    """Band-edge anomaly family (E = -2 + eps lam^{4/3} frame), eta = 1/3.

    exact=True uses the exactly conjugated transfer matrices; exact=False
    uses the truncated exponential family (for expansion tests).
    """
    def p1_fn(values):
        v = values[:, 0]
        P = np.zeros((v.size, 2, 2))
        P[:, 1, 0] = v
        return P

    def p2_fn(values):
        n = values.shape[0]
        P = np.zeros((n, 2, 2))
        P[:, 0, 1] = 1.0
        P[:, 1, 0] = -epsilon
        return P

    if exact:
        m0, m1 = band_edge_family_affine(lam, epsilon)

        def build(values):
            return m0 + values[:, 0, None, None] * m1
    else:
        build = _exp_family(-1.0, 0.0, lam, 1.0 / 3.0, p1_fn, p2_fn)
    return AnomalySetup(1.0 / 3.0, 0.0, -1, 1, lam, process,
                        "band_edge", build, p1_fn, p2_fn)


def band_center_setup(process, lam, epsilon, exact=True):
    """Band-center anomaly: squared transfer matrices at E = eps lam^2,
    consuming site pairs (v, u) = (V(omega), V(S omega)); eta = 1.
    """
    def p1_fn(values):
        v, u = values[:, 0], values[:, 1]
        P = np.zeros((v.size, 2, 2))
        P[:, 0, 1] = -u
        P[:, 1, 0] = v
        return P

    def p2_fn(values):
        v, u = values[:, 0], values[:, 1]
        P = np.empty((v.size, 2, 2))
        P[:, 0, 0] = -0.5 * u * v
        P[:, 0, 1] = epsilon
        P[:, 1, 0] = -epsilon
        P[:, 1, 1] = 0.5 * u * v
        return P

    if exact:
        E = epsilon * lam * lam

        def build(values):
            v, u = values[:, 0], values[:, 1]
            av = E - lam * v
            au = E - lam * u
            out = np.empty((v.size, 2, 2))
            out[:, 0, 0] = au * av - 1.0
            out[:, 0, 1] = -au
            out[:, 1, 0] = av
            out[:, 1, 1] = -1.0
            return out
    else:
        build = _exp_family(-1.0, 0.0, lam, 1.0, p1_fn, p2_fn)
    return AnomalySetup(1.0, 0.0, -1, 2, lam, process,
                        "band_center", build, p1_fn, p2_fn)


def rotation_setup(process, E, lam):
    """Bulk family in the rotation frame: R_k (1 + (lam V / sin k) e21).

    This is exactly R_k exp(lam P1) with P1 = (V/sin k) e21 (nilpotent),
    so it is an anomaly family with eta = 1, P2 = 0.
    """
    k = math.acos(E / 2.0)
    rk, _ = rotation_frame(k)
    s = math.sin(k)
    m1 = np.array([[-lam, 0.0], [lam * math.cos(k) / s, 0.0]])

    def build(values):
        return rk + values[:, 0, None, None] * m1

    def p1_fn(values):
        v = values[:, 0]
        P = np.zeros((v.size, 2, 2))
        P[:, 1, 0] = v / s
        return P

    def p2_fn(values):
        return np.zeros((values.shape[0], 2, 2))

    return AnomalySetup(1.0, k, 1, 1, lam, process,
                        "rotation", build, p1_fn, p2_fn)


@dataclass
class PhaseOrbit:
    thetas: np.ndarray          # theta_0 .. theta_{n-1}
    values: np.ndarray          # (n, width) potential values, step-aligned
    log_norm_sum: float         # sum_n log ||T_n e_{theta_n}||
    setup: AnomalySetup


def phase_orbit(setup, theta0, n, stream=0):
    """Iterate theta_{j+1} = S_{T_j}(theta_j); deterministic in the seed."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    values = setup.sample_values(n, stream=stream)
    mats = setup.step_matrices(values)[None, ...]
    c = np.array([math.cos(theta0)])
    s = np.array([math.sin(theta0)])
    acc = np.zeros(1)
    out_c = np.empty((1, n))
    out_s = np.empty((1, n))
    kernels.orbit_chunk(np.ascontiguousarray(mats), c, s, acc, out_c, out_s)
    thetas = wrap_angles(np.arctan2(out_s[0], out_c[0]))
    return PhaseOrbit(thetas, values, float(acc[0]), setup)


def orbit_histogram(setup, total_steps, bins=128, n_orbits=16, discard=10_000,
                    stream_base=0, chunk=1 << 16):
    """Phase histogram over an ensemble of orbits (chunked, O(chunk) memory).

    Each orbit runs total_steps // n_orbits steps from its own stream and
    uniform-random initial angle; the first `discard` steps of each orbit
    are excluded from the counts.
    """
    B = int(n_orbits)
    per = int(total_steps) // B
    if per <= discard:
        raise ValueError("orbit length must exceed the discarded transient")
    c = np.empty(B)
    s = np.empty(B)
    for i in range(B):
        th0 = setup.process.rng(stream_base + i, purpose=2).random() * math.pi
        c[i] = math.cos(th0)
        s[i] = math.sin(th0)
    acc = np.zeros(B)
    iters = [stream_chunks(setup.process, per * setup.width,
                           stream=stream_base + i, chunk=chunk * setup.width)
             for i in range(B)]
    counts = np.zeros(bins, dtype=np.int64)
    done = 0
    while done < per:
        csize = min(chunk, per - done)
        mats = np.empty((B, csize, 2, 2))
        for i, it in enumerate(iters):
            vals = next(it).reshape(csize, setup.width)
            mats[i] = setup.step_matrices(vals)
        out_c = np.empty((B, csize))
        out_s = np.empty((B, csize))
        kernels.orbit_chunk(mats, c, s, acc, out_c, out_s)
        keep_from = max(discard - done, 0)
        if keep_from < csize:
            th = np.arctan2(out_s[:, keep_from:], out_c[:, keep_from:])
            idx = np.floor_divide(wrap_angles(th.ravel()), PERIOD / bins)
            counts += np.bincount(idx.astype(np.int64).clip(0, bins - 1),
                                  minlength=bins)
        done += csize
    return theta_midpoints(bins), counts / counts.sum()


def log_norm_expansion_check(setup, theta, n_samples=256, stream=0):
    """Mean |log||T e_theta|| - second-order prediction| over sampled steps.

    The prediction is Re(sum_j lam^{j eta} beta_j e^{2 i theta}
    + (lam^{2 eta}/2)(|beta_1|^2 + gamma_1 e^{2 i theta}
    - beta_1^2 e^{4 i theta})); the residual is O(lam^{3 eta}).
    """
    values = setup.sample_values(int(n_samples), stream=stream)
    mats = setup.step_matrices(values)
    e = np.array([math.cos(theta), math.sin(theta)])
    w = mats @ e
    actual = 0.5 * np.log(w[:, 0] ** 2 + w[:, 1] ** 2)
    le = setup.lam ** setup.eta
    a1, b1, g1 = coefficients_of(setup.p1_matrices(values))
    a2, b2, _ = coefficients_of(setup.p2_matrices(values))
    z2 = np.exp(2j * theta)
    pred = np.real(le * b1 * z2 + le * le * b2 * z2
                   + 0.5 * le * le * (np.abs(b1) ** 2 + g1 * z2
                                      - b1 ** 2 * z2 * z2))
    return float(np.mean(np.abs(actual - pred)))


def phase_increment_residual(setup, theta, n_samples=256, stream=0):
    """Mean |one-step increment - polynomial expansion|, O(lam^{3 eta}).

    Expansion: theta + k + sum_j lam^{j eta} p_j + (lam^{2 eta}/2) p1 p1'.
    """
    values = setup.sample_values(int(n_samples), stream=stream)
    mats = setup.step_matrices(values)
    actual = projective_action(mats, theta)
    le = setup.lam ** setup.eta
    a1, b1, _ = coefficients_of(setup.p1_matrices(values))
    a2, b2, _ = coefficients_of(setup.p2_matrices(values))
    p1 = trig_polynomial(a1, b1, theta)
    p2 = trig_polynomial(a2, b2, theta)
    dp1 = -2.0 * np.real(b1 * np.exp(2j * theta))
    pred = theta + setup.k + le * p1 + le * le * (p2 + 0.5 * p1 * dp1)
    diff = np.angle(np.exp(2j * (actual - pred))) / 2.0
    return float(np.mean(np.abs(diff)))


def birkhoff_sum(f, orbit):
    """I_N(f) = (1/N) sum_n f(theta_n)."""
    return np.mean(f(orbit.thetas))


def birkhoff_like_sum(g, f, orbit):
    """(1/N) sum_n g(omega window at n) f(theta_n), orbit-aligned.

    g maps the (n, width) value array to n scalars.
    """
    gv = np.asarray(g(orbit.values))
    if gv.shape[0] != orbit.thetas.shape[0]:
        raise ValueError("window function output is misaligned with the orbit")
    return np.mean(gv * f(orbit.thetas))


@dataclass
class DriftDiffusionEstimate:
    theta: np.ndarray
    p_hat: np.ndarray
    q_hat: np.ndarray
    p_err: np.ndarray      # MC standard errors
    q_err: np.ndarray
    n_block: int
    samples: int


def drift_diffusion_estimate(setup, n_block, samples, thetas=None, stream=0):
    """Empirical drift-diffusion coefficients from frozen coefficient sums.

    Per disorder block, p_hat^N(theta) = sum_n p1_n(theta) and
    q_hat^N(theta) = sum_n (p1_n + sum_{j<n} p1_j) p1'_n + 2 sum_n p2_n
    with all polynomials frozen at theta; then
    p(theta) = lim E[(p_hat^N)^2]/N and q(theta) = lim E[q_hat^N]/N.
    Blocks are consecutive windows of one long stream.
    """
    n_block = int(n_block)
    samples = int(samples)
    if thetas is None:
        thetas = theta_midpoints(8)
    thetas = np.asarray(thetas, dtype=float)
    if setup.lam ** (2 * setup.eta) * n_block > 0.1:
        warnings.warn("lam^(2 eta) * N_block > 0.1: expansion validity is "
                      "marginal", stacklevel=2)
    vals = sample_stream(setup.process, samples * n_block * setup.width,
                         stream=stream)
    vals = vals.reshape(samples * n_block, setup.width)
    a1, b1, _ = coefficients_of(setup.p1_matrices(vals))
    a2, b2, _ = coefficients_of(setup.p2_matrices(vals))

    # p1_n(theta) = a_n - b_n cos 2theta - c_n sin 2theta
    a = np.imag(a1).reshape(samples, n_block)
    b = np.imag(b1).reshape(samples, n_block)
    cc = np.real(b1).reshape(samples, n_block)
    a2i = np.imag(a2).reshape(samples, n_block)
    b2i = np.imag(b2).reshape(samples, n_block)
    c2r = np.real(b2).reshape(samples, n_block)

    def excl_cumsum(x):
        out = np.cumsum(x, axis=1)
        out[:, 1:] = out[:, :-1]
        out[:, 0] = 0.0
        return out

    at = a + excl_cumsum(a)
    bt = b + excl_cumsum(b)
    ct = cc + excl_cumsum(cc)

    # scalar sums entering the trig expansion of the frozen sums
    sa, sb, sc = a.sum(1), b.sum(1), cc.sum(1)
    s2a, s2b, s2c = a2i.sum(1), b2i.sum(1), c2r.sum(1)
    S1 = np.sum(at * b, 1)
    S2 = np.sum(at * cc, 1)
    S3 = np.sum(bt * b, 1)
    S4 = np.sum(bt * cc, 1)
    S5 = np.sum(ct * b, 1)
    S6 = np.sum(ct * cc, 1)

    p_hat = np.empty_like(thetas)
    q_hat = np.empty_like(thetas)
    p_err = np.empty_like(thetas)
    q_err = np.empty_like(thetas)
    for i, th in enumerate(thetas):
        co, si = math.cos(2 * th), math.sin(2 * th)
        phatN = sa - sb * co - sc * si
        # (p1_n + cumsum) * p1'_n with p1' = 2 b sin - 2 c cos
        qdyn = (2 * si * S1 - 2 * co * S2
                - 2 * si * co * S3 + 2 * co * co * S4
                - 2 * si * si * S5 + 2 * si * co * S6)
        q2 = 2.0 * (s2a - s2b * co - s2c * si)
        psamp = phatN ** 2 / n_block
        qsamp = (qdyn + q2) / n_block
        p_hat[i] = psamp.mean()
        q_hat[i] = qsamp.mean()
        p_err[i] = psamp.std(ddof=1) / math.sqrt(samples)
        q_err[i] = qsamp.std(ddof=1) / math.sqrt(samples)
    return DriftDiffusionEstimate(thetas, p_hat, q_hat, p_err, q_err,
                                  n_block, samples)


def orbit_histogram_tv(setup, density, total_steps, bins=128, **kw):
    """TV distance between the orbit histogram and a density's bin masses."""
    mids, mass = orbit_histogram(setup, total_steps, bins=bins, **kw)
    dens_mass = density.at(mids)
    dens_mass = dens_mass / dens_mass.sum()
    return 0.5 * float(np.abs(mass - dens_mass).sum())
