"""Spectral density of the potential and the summed correlation form.

D_V(k) is estimated by the plain segment periodogram (non-overlapping
segments, no tapering: the estimator is literally the defining limit
(1/N) E|sum e^{ikn} V_n|^2, with O(1/N) bias) and, for Markov / moving
average / IID-derived processes, computed exactly.
"""

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigurationError, DivergenceError, NumericalError
from .potential import Kind, MixingKind, MixingProfile, sample_stream


class Method(str, enum.Enum):
    PERIODOGRAM = "periodogram"
    AUTOCOV_SUM = "autocov_sum"
    EXACT_MARKOV = "exact_markov"
    EXACT_MOVING_AVERAGE = "exact_moving_average"


@dataclass(frozen=True)
class SpectralDensityEstimate:
    k: float
    value: float
    stderr: float
    method: Method


def periodogram_density(process, k, segment_len=4096, segments=64, stream=0):
    """Mean over independent segments of (1/N)|sum_n e^{ikn} V_n|^2."""
    N = int(segment_len)
    R = int(segments)
    if N < 1000:
        raise ValueError("segment_len must be >= 1000")
    if R < 8:
        raise ValueError("segments must be >= 8")
    v = sample_stream(process, N * R, stream=stream).reshape(R, N)
    phases = np.exp(1j * k * np.arange(N))
    amp = v @ phases
    vals = (amp.real ** 2 + amp.imag ** 2) / N
    return SpectralDensityEstimate(
        k=float(k),
        value=float(vals.mean()),
        stderr=float(vals.std(ddof=1) / math.sqrt(R)),
        method=Method.PERIODOGRAM,
    )


def autocov_sum_density(process, k, lag_max, n, stream=0):
    """D estimate by summing empirical autocovariances (no stderr theory)."""
    from .potential import autocovariance

    c = autocovariance(process, lag_max, n, stream=stream)
    value = c[0] + 2.0 * np.sum(np.cos(k * np.arange(1, c.size)) * c[1:])
    return SpectralDensityEstimate(float(k), float(value), math.nan,
                                   Method.AUTOCOV_SUM)


def exact_markov_density(chain, k):
    """D_V(k) = sum_n e^{ikn} C(n) via the resolvent of the transition operator.

    The operator is deflated on constants: A = I - zP + z 1 pi^T is
    invertible for irreducible aperiodic chains, and on centered functions
    it acts as I - zP, so x = A^{-1}(zPf) = sum_{n>=1} (zP)^n f exactly.
    """
    if chain.kind is not Kind.MARKOV_CHAIN:
        raise ConfigurationError("exact_markov_density needs a Markov chain process")
    P = chain.params["transition"]
    f = chain.params["values"]
    pi = chain.params["stationary"]
    if abs(pi @ f) > 1e-10:
        raise ConfigurationError("observable must be centered under the stationary law")
    z = np.exp(1j * float(k))
    n = P.shape[0]
    A = np.eye(n) - z * P + z * np.outer(np.ones(n), pi)
    try:
        x = np.linalg.solve(A, z * (P @ f))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"resolvent solve failed (periodic chain?): {exc}") from exc
    c0 = float(pi @ (f * f))
    return c0 + 2.0 * float((pi @ (f * x)).real)


def exact_ma_density(process, k):
    """Closed form for the geometric moving average over fair bits."""
    if process.kind is not Kind.MOVING_AVERAGE_SHIFT:
        raise ConfigurationError("exact_ma_density needs a moving-average process")
    a = process.params["a"]
    return 0.25 / (1.0 - 2.0 * a * math.cos(k) + a * a)


def exact_density(process, k):
    """Exact D_V(k) where an oracle exists, else None."""
    if process.kind is Kind.MARKOV_CHAIN:
        return exact_markov_density(process, k)
    if process.kind is Kind.MOVING_AVERAGE_SHIFT:
        return exact_ma_density(process, k)
    if process.kind is Kind.IID:
        p = process.params
        if "uniform" in p:
            return p["uniform"] ** 2 / 3.0
        if "normal" in p:
            return p["normal"] ** 2
        return float(p["probs"] @ p["values"] ** 2)
    if process.kind is Kind.COCYCLE:
        p = process.params
        mean = float(p["probs"] @ p["values"])
        var = float(p["probs"] @ (p["values"] - mean) ** 2)
        return 2.0 * var * (1.0 - math.cos(k))
    return None


@dataclass(frozen=True)
class WindowFunction:
    """Function of the symbol stream seen through a finite window.

    fn maps stacked windows of shape (m, width) to m values; evaluating at
    shift j uses V[j:j+width].
    """
    width: int
    fn: Callable


def value_window(offset=0, width=None):
    """g = V o S^offset as a window function."""
    w = (offset + 1) if width is None else width
    return WindowFunction(w, lambda windows: windows[:, offset])


def cocycle_partner_window():
    """g = V o S - V."""
    return WindowFunction(2, lambda windows: windows[:, 1] - windows[:, 0])


def evaluate_window(g, stream):
    windows = sliding_window_view(stream, g.width)
    return np.asarray(g.fn(windows), dtype=float)


@dataclass(frozen=True)
class CorrelationFormResult:
    value: float
    tail_bound: float
    cutoff: int


def default_mixing(process):
    """Declared mixing profile for the shipped process kinds."""
    if process.kind in (Kind.IID, Kind.COCYCLE):
        return MixingProfile(MixingKind.EXPONENTIAL, math.inf, 0.0)
    if process.kind is Kind.MARKOV_CHAIN:
        eig = np.linalg.eigvals(process.params["transition"])
        sub = np.sort(np.abs(eig))[-2] if eig.size > 1 else 0.0
        rate = -math.log(max(sub, 1e-300))
        return MixingProfile(MixingKind.EXPONENTIAL, rate, 1.0)
    if process.kind is Kind.MOVING_AVERAGE_SHIFT:
        return MixingProfile(MixingKind.EXPONENTIAL,
                             -math.log(process.params["a"]), 1.0)
    if process.kind is Kind.INTERMITTENT_MAP:
        return MixingProfile(MixingKind.POWER_LAW,
                             1.0 / process.params["z"] - 1.0, 1.0)
    raise ConfigurationError(f"unknown process kind {process.kind}")


def correlation_form(g1, g2, process, cutoff=None, n=200_000, mixing=None,
                     stream=0):
    """<g1, g2>_corr = E(g1 g2) + 2 sum_{m>=1} E(g1 . g2 o S^m), truncated.

    Cutoff default: ceil(40/rate) for exponential mixing, 10^4 for power
    law. The reported tail bound uses the declared profile; a power law
    with alpha <= 1 makes the form undefined.
    """
    if mixing is None:
        mixing = default_mixing(process)
    if mixing.decay_kind is MixingKind.POWER_LAW and mixing.exponent <= 1.0:
        raise DivergenceError("correlation form diverges for power-law alpha <= 1")
    if cutoff is None:
        if mixing.decay_kind is MixingKind.EXPONENTIAL:
            cutoff = 2 if not math.isfinite(mixing.exponent) else \
                int(math.ceil(40.0 / mixing.exponent))
        else:
            cutoff = 10_000
    cutoff = int(cutoff)
    need = max(g1.width, g2.width + cutoff) + cutoff
    if n < 10 * need:
        n = 10 * need
    v = sample_stream(process, int(n), stream=stream)
    x1 = evaluate_window(g1, v)
    x2 = evaluate_window(g2, v)
    L = min(x1.size, x2.size) - cutoff
    value = float(np.mean(x1[:L] * x2[:L]))
    for m in range(1, cutoff + 1):
        value += 2.0 * float(np.mean(x1[:L] * x2[m:m + L]))
    if mixing.decay_kind is MixingKind.EXPONENTIAL:
        r = math.exp(-mixing.exponent) if math.isfinite(mixing.exponent) else 0.0
        tail = 2.0 * mixing.constant * r ** (cutoff + 1) / max(1.0 - r, 1e-300)
    else:
        a = mixing.exponent
        tail = 2.0 * mixing.constant * cutoff ** (1.0 - a) / (a - 1.0)
    return CorrelationFormResult(value, tail, cutoff)
