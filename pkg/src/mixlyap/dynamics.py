"""Finite-volume Jacobi operators, time-averaged position moments, and the
logarithmic-growth verdict.

The evolved moment
    M_T^q = int_0^inf (dt/T) e^{-t/T} E <0| e^{iHt} |X|^q e^{-iHt} |0>
is computed from the spectral decomposition; the time integral has the
closed form Re int (dt/T) e^{-t/T} e^{-i(E_k-E_l)t} = 1/(1+(E_k-E_l)^2 T^2)
so no quadrature in t is needed and the full [0, inf) weight is kept. Box
validity is monitored through the same kernel: the time-averaged mass
within 10 sites of either wall must stay below a tolerance, otherwise the
finite box contaminates the moment (ballistic wavefront reached the wall).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import NumericalError
from .potential import sample_stream, sup_abs

WALL_MARGIN = 10        # sites next to each wall that should stay empty
WALL_TOLERANCE = 1e-3   # time-averaged wall mass above this flags the box


@dataclass(frozen=True)
class JacobiOperator:
    size: int
    diagonal: np.ndarray = field(compare=False)
    origin: int

    @property
    def offdiagonal(self):
        return np.ones(self.size - 1)


def build_operator(process, lam, L, stream=0):
    """Tridiagonal operator on L sites (L odd), diagonal lam*V, hard walls.

    Site n = 0 sits at the central index; the potential stream fills sites
    -(L-1)/2 .. (L-1)/2 in order.
    """
    L = int(L)
    if L < 3:
        raise ValueError("operator needs at least 3 sites")
    if L % 2 == 0:
        raise ValueError("L must be odd (origin-centered site set)")
    diag = lam * sample_stream(process, L, stream=stream)
    return JacobiOperator(L, diag, (L - 1) // 2)


def operator_spectrum(op):
    """Eigenvalues and eigenvectors (columns) of the Jacobi operator."""
    return eigh_tridiagonal(op.diagonal, op.offdiagonal)


@dataclass(frozen=True)
class MomentSeries:
    q: float
    times: np.ndarray = field(compare=False)
    values: np.ndarray = field(compare=False)
    stderr: np.ndarray = field(compare=False)
    wall_mass: np.ndarray = field(compare=False)
    disorder_replicas: int
    L: int

    @property
    def box_ceiling(self):
        return (self.L // 2) ** self.q

    def box_violations(self):
        """Times where the wall mass exceeds the tolerance."""
        return self.times[self.wall_mass > WALL_TOLERANCE]


def _replica_moment(process, lam, L, q, times, stream):
    op = build_operator(process, lam, L, stream=stream)
    energies, U = operator_spectrum(op)
    amp = U[op.origin, :]
    n_idx = np.arange(L) - op.origin
    w = np.abs(n_idx).astype(float) ** q
    G = U.T @ (w[:, None] * U)
    S = np.outer(amp, amp) * G
    wall = np.zeros(L, dtype=bool)
    wall[:WALL_MARGIN] = True
    wall[-WALL_MARGIN:] = True
    Bw = U[wall, :]
    Sw = np.outer(amp, amp) * (Bw.T @ Bw)
    D2 = (energies[:, None] - energies[None, :]) ** 2
    vals = np.empty(len(times))
    wmass = np.empty(len(times))
    for i, T in enumerate(times):
        kern = 1.0 / (1.0 + D2 * (T * T))
        vals[i] = float(np.sum(S * kern))
        wmass[i] = float(np.sum(Sw * kern))
    return vals, wmass


def moment_series(process, lam, L, q, times, replicas=8, stream_base=0,
                  strict_box=False, t_max_factor=8.0):
    """Disorder-averaged M_T^q on a T grid.

    strict_box=True raises when the time-averaged wall mass exceeds the
    tolerance at any T, with a suggested box size from the ballistic bound
    speed 2 + lam*||V||_inf up to t_max_factor*T.
    """
    times = np.asarray(times, dtype=float)
    if q <= 0:
        raise ValueError("moment exponent q must be positive")
    acc = np.zeros((replicas, len(times)))
    wm = np.zeros((replicas, len(times)))
    for r in range(replicas):
        acc[r], wm[r] = _replica_moment(process, lam, L, q, times,
                                        stream_base + r)
    vals = acc.mean(axis=0)
    stderr = acc.std(axis=0, ddof=1) / math.sqrt(replicas) if replicas > 1 \
        else np.full(len(times), math.nan)
    wall = wm.mean(axis=0)
    series = MomentSeries(float(q), times, vals, stderr, wall,
                          int(replicas), int(L))
    bad = series.box_violations()
    if strict_box and bad.size:
        speed = 2.0 + lam * sup_abs(process)
        need = 2 * int(math.ceil(speed * t_max_factor * bad.max())
                       + WALL_MARGIN) + 1
        raise NumericalError(
            f"wavefront reaches the wall for T >= {bad.min():g}; "
            f"suggested box size L >= {need}")
    return series


@dataclass(frozen=True)
class LogGrowthReport:
    beta: float
    c_hat: float          # fitted constant over the full range
    c_hat_half: float     # same over the first half of the log-range
    passes: bool
    margins: np.ndarray = field(compare=False)  # M_T - (log T)^{q beta}


def log_growth_check(series, beta):
    """Fit C in M_T^q <= (log T)^{q beta} + C and flag unbounded growth.

    The fitted constant is max_T (M_T - (log T)^{q beta}, clipped at 0). A
    series whose constant keeps growing when the T-range is extended (full
    range needing more than twice the first-half constant plus 1) violates
    the bound and is flagged FAIL.
    """
    if beta <= 2:
        raise ValueError("the bound requires beta > 2")
    t = series.times
    if t.max() / t.min() < 100.0:
        raise ValueError("series must span at least two decades in T")
    bound = np.log(t) ** (series.q * beta)
    margins = series.values - bound
    c_full = max(float(margins.max()), 0.0)
    logt = np.log(t)
    half = logt <= 0.5 * (logt.min() + logt.max())
    c_half = max(float(margins[half].max()), 0.0)
    passes = c_full <= 2.0 * c_half + 1.0
    return LogGrowthReport(float(beta), c_full, c_half, bool(passes), margins)
