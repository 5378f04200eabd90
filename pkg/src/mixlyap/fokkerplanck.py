"""Drift-diffusion coefficients, stationary phase densities, and the
perturbative Lyapunov predictors.

Three independent routes to the stationary density rho (ker L* with
L* = d/dtheta(d/dtheta p - q)):

* density_elliptic   - quadrature construction for min p > 0,
* density_band_edge  - closed-form singular construction for the band edge,
* density_bvp_oracle - compact finite-difference kernel solve.

The band-edge closed form implemented here is
    rho(theta) = C sec^2(theta) e^{-G(theta)}
                 * int_{-pi/2}^{theta} sec^2(xi) e^{G(xi)} dxi,
    G(x) = (2/(3 D0)) (tan^3 x + 3 eps tan x),
which satisfies (p rho)' - q rho = const exactly for
p = D0 cos^4, q = -eps - 1 + (1-eps) cos 2theta - 2 D0 cos^3 sin.
In s = tan(theta) - tan(xi) >= 0 coordinates this reads
    rho = C (1+t^2) int_0^inf ds exp(-(2/(3 D0))(3t^2 s - 3t s^2 + s^3 + 3 eps s)),
t = tan(theta), which is absolutely convergent, manifestly positive and
extends smoothly through theta = pi/2 with value C*D0/2.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson, quad
from scipy.optimize import brentq

from .errors import DegenerateKernelError, WrongConstructionError
from .grids import (NGRID, PERIOD, periodic_integral, spectral_derivative,
                    theta_grid)

_NEG_CLIP = 1e-12  # roundoff negativity absorbed before normalization


@dataclass(frozen=True)
class BandCenter:
    epsilon: float
    d0: float      # D_V(0)
    dpi: float     # D_V(pi)

    def __post_init__(self):
        if self.d0 < 0 or self.dpi < 0:
            raise ValueError("spectral densities must be nonnegative")
        if self.d0 == 0 and self.dpi == 0:
            raise ValueError("degenerate diffusion: D_V(0) = D_V(pi) = 0")

    def p_at(self, theta):
        return 0.5 * self.d0 + 0.5 * self.dpi * np.cos(2 * theta) ** 2

    def q_at(self, theta):
        return -0.5 * self.dpi * np.sin(4 * theta) - self.epsilon


@dataclass(frozen=True)
class BandEdge:
    epsilon: float
    d0: float

    def __post_init__(self):
        if self.d0 <= 0:
            raise ValueError("band edge requires D_V(0) > 0")

    def p_at(self, theta):
        return self.d0 * np.cos(theta) ** 4

    def q_at(self, theta):
        th = np.asarray(theta, dtype=float)
        return (-self.epsilon - 1.0 + (1.0 - self.epsilon) * np.cos(2 * th)
                - 2.0 * self.d0 * np.cos(th) ** 3 * np.sin(th))


@dataclass(frozen=True)
class FPCoefficients:
    setting: object
    theta: np.ndarray = field(compare=False)
    p: np.ndarray = field(compare=False)
    q: np.ndarray = field(compare=False)

    def p_at(self, theta):
        return self.setting.p_at(theta)

    def q_at(self, theta):
        return self.setting.q_at(theta)


def assemble_coefficients(setting, n=NGRID):
    """Evaluate the printed drift-diffusion polynomials on the grid."""
    th = theta_grid(n)
    return FPCoefficients(setting, th, setting.p_at(th), setting.q_at(th))


@dataclass(frozen=True)
class StationaryDensity:
    theta: np.ndarray = field(compare=False)
    rho: np.ndarray = field(compare=False)
    normalization_constant: float = 1.0
    setting: object = None
    dense_theta: np.ndarray = field(default=None, compare=False, repr=False)
    dense_rho: np.ndarray = field(default=None, compare=False, repr=False)

    def at(self, theta):
        """Density at arbitrary angles (periodic interpolation of the
        densest available representation)."""
        src_t = self.dense_theta if self.dense_theta is not None else self.theta
        src_r = self.dense_rho if self.dense_rho is not None else self.rho
        tt = np.mod(np.asarray(theta, dtype=float), PERIOD)
        xs = np.concatenate([src_t, [PERIOD]])
        ys = np.concatenate([src_r, [src_r[0]]])
        return np.interp(tt, xs, ys)


def _finalize_density(theta, rho, setting, dense_theta=None, dense_rho=None):
    rho = np.asarray(rho, dtype=float)
    scale = np.max(np.abs(rho))
    if np.min(rho) < -_NEG_CLIP * scale:
        raise DegenerateKernelError(
            f"density came out negative (min {np.min(rho):.3e} vs scale {scale:.3e})")
    rho = np.clip(rho, 0.0, None)
    mass = periodic_integral(rho)
    if dense_rho is not None:
        dense_rho = np.clip(dense_rho, 0.0, None) / mass
    return StationaryDensity(theta, rho / mass, 1.0 / mass, setting,
                             dense_theta, dense_rho)


def density_elliptic(coeffs, n_out=NGRID, oversample=8):
    """Stationary density for min p > 0 by cumulative quadrature.

    w = int q/p, Wt = int e^{-w}; rho = C1 (e^w / p)(C2 Wt + 1) with C2
    fixed by pi-periodicity and C1 by normalization.
    """
    m = n_out * oversample
    th = np.linspace(0.0, PERIOD, m + 1)
    p = np.asarray(coeffs.p_at(th), dtype=float)
    q = np.asarray(coeffs.q_at(th), dtype=float)
    if np.min(p) <= 1e-12 * np.max(p):
        raise WrongConstructionError(
            "diffusion coefficient vanishes; use density_band_edge")
    w = cumulative_simpson(q / p, x=th, initial=0.0)
    ew = np.exp(w)
    wt = cumulative_simpson(1.0 / ew, x=th, initial=0.0)
    w_period = w[-1]
    wt_period = wt[-1]
    c2 = (math.exp(-w_period) - 1.0) / wt_period
    rho_dense = (ew / p) * (c2 * wt + 1.0)
    rho_out = rho_dense[:-1:oversample]
    return _finalize_density(theta_grid(n_out), rho_out, coeffs.setting,
                             th[:-1], rho_dense[:-1])


def _band_edge_unnormalized(t, d0, epsilon):
    """(1+t^2) * int_0^inf exp(-(2/(3 d0))((s-t)^3 + t^3 + 3 eps s)) ds."""
    if not math.isfinite(t) or abs(t) > 1e8:
        return 0.5 * d0
    c = 2.0 / (3.0 * d0)

    def g(s):
        ds = s - t
        return c * (ds * ds * ds + t * t * t + 3.0 * epsilon * s)

    # location of the interior stationary minimum of g on s >= 0 (eps < 0 only)
    s_star = max(t + math.sqrt(-epsilon), 0.0) if epsilon < 0 else 0.0
    g_min = min(g(s_star), 0.0)
    cut = 46.0  # exp(-46) ~ 1e-20 relative truncation
    if g(s_star) - g_min >= cut:
        # threshold is crossed before the interior dip (which stays above
        # the cutoff); mass beyond the crossing is below e^{-cut}
        s_up = brentq(lambda s: g(s) - g_min - cut, 0.0, s_star, xtol=1e-12)
    else:
        hi = s_star + max(1.0, abs(t)) * 0.5
        while g(hi) < g_min + cut:
            hi *= 2.0
        s_up = brentq(lambda s: g(s) - g_min - cut, s_star, hi, xtol=1e-12)
    val, _ = quad(lambda s: math.exp(-(g(s) - g_min)), 0.0, s_up,
                  epsabs=1e-13, epsrel=1e-12, limit=200,
                  points=[s_star] if 0.0 < s_star < s_up else None)
    return (1.0 + t * t) * math.exp(-g_min) * val


def density_band_edge(d0, epsilon, n_out=NGRID):
    """Closed-form band-edge density (singular construction of the FP kernel)."""
    setting = BandEdge(epsilon, d0)
    th = theta_grid(n_out)
    rho = np.array([_band_edge_unnormalized(math.tan(x), d0, epsilon)
                    for x in th])
    # pi/2 lands on the grid for even n_out; tan() there is huge, the
    # limit branch in _band_edge_unnormalized handles it.
    return _finalize_density(th, rho, setting)


def _bvp_solve(coeffs, n):
    """Compact conservative FD discretization of L* rho = 0, bordered solve."""
    from scipy import sparse
    from scipy.sparse.linalg import spsolve

    h = PERIOD / n
    th = np.arange(n) * h
    p = np.asarray(coeffs.p_at(th), dtype=float)
    qh = np.asarray(coeffs.q_at(th + 0.5 * h), dtype=float)  # q on half grid
    up = np.roll(p, -1) / h**2 - qh / (2 * h)                    # rho_{j+1}
    dn = np.roll(p, 1) / h**2 + np.roll(qh, 1) / (2 * h)         # rho_{j-1}
    dg = -2.0 * p / h**2 - (qh - np.roll(qh, 1)) / (2 * h)       # rho_j
    A = sparse.diags([dg, up[:-1], dn[1:]], [0, 1, -1], format="lil")
    A[0, n - 1] += dn[0]
    A[n - 1, 0] += up[-1]
    A = A.tocsr()
    B = A.copy().tolil()
    B[0, :] = h  # normalization row replaces one (redundant) equation
    rhs = np.zeros(n)
    rhs[0] = 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        try:
            rho = spsolve(B.tocsr(), rhs)
        except Exception as exc:
            raise DegenerateKernelError(
                f"bordered FP solve failed: {exc}") from exc
    if not np.all(np.isfinite(rho)):
        raise DegenerateKernelError("FP solve returned non-finite density")
    if rho.sum() < 0:
        rho = -rho
    resid = np.max(np.abs(A @ rho)) / max(np.max(np.abs(rho)), 1e-300)
    return th, rho, resid, A


def density_bvp_oracle(coeffs, n_out=NGRID, n_solve=4096):
    """Independent discretized-kernel solve of L* rho = 0 (periodic).

    Solves at n_solve and n_solve/2 and Richardson-extrapolates the O(h^2)
    finite-difference error on the output grid.
    """
    if n_solve < 256:
        raise ValueError("n_solve must be >= 256")
    _, rho_f, resid, A = _bvp_solve(coeffs, n_solve)
    _, rho_c, _, _ = _bvp_solve(coeffs, n_solve // 2)
    if resid > 1e-6 * max(np.max(np.abs(rho_f)), 1.0):
        s = np.linalg.svd(A[:512, :512].toarray(), compute_uv=False)
        raise DegenerateKernelError(
            "discretized FP kernel numerically multidimensional",
            conditioning=float(s[0] / max(s[-1], 1e-300)))
    stride_f = n_solve // n_out
    stride_c = (n_solve // 2) // n_out
    fine = rho_f[::stride_f]
    coarse = rho_c[::stride_c]
    # normalize both before extrapolating so the O(h^2) errors align
    fine = fine / periodic_integral(fine)
    coarse = coarse / periodic_integral(coarse)
    rho = (4.0 * fine - coarse) / 3.0
    return _finalize_density(theta_grid(n_out), rho, coeffs.setting)


def fp_residual(coeffs, density):
    """Relative non-constancy of the first integral (p rho)' - q rho.

    Spectral differentiation on the output grid; the scale is the larger of
    the mean flux and the magnitudes of the two terms being subtracted.
    """
    rho = density.rho
    th = density.theta
    p = np.asarray(coeffs.p_at(th), dtype=float)
    q = np.asarray(coeffs.q_at(th), dtype=float)
    dflux = spectral_derivative(p * rho)
    F = dflux - q * rho
    scale = max(abs(float(np.mean(F))),
                float(np.max(np.abs(dflux))),
                float(np.max(np.abs(q * rho))),
                1e-300)
    return float((F.max() - F.min()) / scale)


def gamma_thouless(lam, k, d_k):
    """Bulk perturbative Lyapunov exponent lam^2 D_V(k) / (8 sin^2 k)."""
    s = math.sin(k)
    if abs(s) < 1e-12:
        raise ValueError("Thouless formula is singular at k in {0, pi}")
    return lam * lam * d_k / (8.0 * s * s)


def _require_setting(rho, cls, **fields):
    if not isinstance(rho.setting, cls):
        raise ValueError(f"density was built for {type(rho.setting).__name__}, "
                         f"need {cls.__name__}")
    for name, val in fields.items():
        if abs(getattr(rho.setting, name) - val) > 1e-12:
            raise ValueError(f"density setting mismatch: {name}="
                             f"{getattr(rho.setting, name)} vs {val}")


def gamma_band_center(lam, epsilon, d_pi, rho):
    """Band-center anomaly value lam^2 (D_V(pi)/8) int rho (1 + cos 4theta)."""
    _require_setting(rho, BandCenter, epsilon=epsilon, dpi=d_pi)
    integrand = rho.rho * (1.0 + np.cos(4.0 * rho.theta))
    return lam * lam * (d_pi / 8.0) * periodic_integral(integrand)


def gamma_band_edge(lam, epsilon, d0, rho):
    """Band-edge anomaly value at E = 2 - eps*lam^(4/3).

    eps > 0 points into the band (equivalently E = -2 + eps*lam^(4/3) for
    sign-symmetric potentials); the eps -> -inf and +inf limits reproduce
    the hyperbolic sqrt(|eps| lam^(4/3)) and elliptic D0 lam^(2/3)/(8 eps)
    scalings.
    """
    _require_setting(rho, BandEdge, epsilon=epsilon, d0=d0)
    th = rho.theta
    first = 0.5 * (1.0 - epsilon) * periodic_integral(rho.rho * np.sin(2 * th))
    second = (d0 / 8.0) * periodic_integral(
        rho.rho * (1.0 + 2.0 * np.cos(2 * th) + np.cos(4 * th)))
    return lam ** (2.0 / 3.0) * (first + second)


def gamma_near_edge(lam, epsilon, eta, side, d0=None):
    """Leading near-edge scalings outside/inside the band.

    side='hyperbolic': E = 2 + eps lam^eta, gamma = sqrt(eps lam^eta).
    side='elliptic':   E = 2 - eps lam^eta, gamma = lam^(2-eta) D0/(8 eps).
    Valid leading orders require 4/5 < eta < 4/3 (warned otherwise).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not 0.8 < eta < 4.0 / 3.0:
        warnings.warn("eta outside (4/5, 4/3): error terms are not subleading",
                      stacklevel=2)
    if side == "hyperbolic":
        return math.sqrt(epsilon * lam ** eta)
    if side == "elliptic":
        if d0 is None:
            raise ValueError("elliptic side needs D_V(0)")
        return lam ** (2.0 - eta) * d0 / (8.0 * epsilon)
    raise ValueError("side must be 'hyperbolic' or 'elliptic'")
