"""Stationary, centered potential processes with known mixing structure.

Every process is an immutable description (kind, params, seed, burn_in);
sampling derives an independent generator from (seed, stream), so repeated
or concurrent calls never share mutable state and identical inputs give
bit-identical output.

The shift dynamics behind the IID / moving-average / cocycle processes is
the symbolic left shift on the symbol stream itself: S^n just re-indexes
the drawn symbols. No floating-point iteration of expanding circle maps is
involved there (the doubling map collapses after ~53 steps in doubles).
The intermittent map is iterated in floating point, which is standard
practice for this family (non-uniformly expanding, no mantissa collapse).
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from . import kernels
from .errors import ConfigurationError

DEFAULT_BURN_IN = 10_000
_QUASILOCAL_TOL = 1e-14  # geometric tail cutoff for the moving average


class Kind(str, enum.Enum):
    IID = "iid"
    MARKOV_CHAIN = "markov"
    MOVING_AVERAGE_SHIFT = "moving_average"
    INTERMITTENT_MAP = "intermittent"
    COCYCLE = "cocycle"


@dataclass(frozen=True)
class PotentialProcess:
    kind: Kind
    params: dict = field(compare=False)
    seed: int = 0
    burn_in: int = 0

    def rng(self, stream=0, purpose=0):
        return np.random.default_rng([int(self.seed), int(stream), int(purpose)])


def _check_probs(values, probs):
    values = np.asarray(values, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if values.ndim != 1 or probs.shape != values.shape or values.size == 0:
        raise ConfigurationError("values and probs must be 1d arrays of equal length")
    if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
        raise ConfigurationError("probs must be nonnegative and sum to 1")
    return values, probs


def iid_process(values=(-1.0, 1.0), probs=(0.5, 0.5), seed=0, burn_in=0):
    """IID draws from a finite distribution; centered by shifting the values."""
    values, probs = _check_probs(values, probs)
    mean = float(values @ probs)
    return PotentialProcess(Kind.IID,
                            {"values": values - mean, "probs": probs},
                            seed, burn_in)


def iid_uniform(halfwidth=1.0, seed=0, burn_in=0):
    if halfwidth <= 0:
        raise ConfigurationError("halfwidth must be positive")
    return PotentialProcess(Kind.IID, {"uniform": float(halfwidth)}, seed, burn_in)


def iid_normal(sigma=1.0, seed=0, burn_in=0):
    if sigma <= 0:
        raise ConfigurationError("sigma must be positive")
    return PotentialProcess(Kind.IID, {"normal": float(sigma)}, seed, burn_in)


def markov_process(transition, values, seed=0, burn_in=DEFAULT_BURN_IN, center=True):
    """Finite-state stationary Markov chain with observable values[state]."""
    P = np.asarray(transition, dtype=float)
    values = np.asarray(values, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] != values.size:
        raise ConfigurationError("transition must be square and match values")
    if np.any(P < -1e-15) or np.any(np.abs(P.sum(axis=1) - 1.0) > 1e-9):
        raise ConfigurationError("transition rows must be probability vectors")
    ncomp, _ = connected_components(P > 0, directed=True, connection="strong")
    if ncomp != 1:
        raise ConfigurationError("transition matrix is not irreducible")
    pi = stationary_distribution(P)
    if center:
        values = values - float(pi @ values)
    return PotentialProcess(Kind.MARKOV_CHAIN,
                            {"transition": P, "values": values, "stationary": pi},
                            seed, burn_in)


def two_state_markov(flip, values=(1.0, -1.0), seed=0, burn_in=DEFAULT_BURN_IN):
    """Symmetric two-state chain: flip probability `flip`, observable +-1."""
    if not 0 < flip < 1:
        raise ConfigurationError("flip probability must be in (0, 1)")
    P = np.array([[1.0 - flip, flip], [flip, 1.0 - flip]])
    return markov_process(P, values, seed=seed, burn_in=burn_in)


def moving_average_process(a, seed=0, burn_in=0):
    """Quasi-local observable V = sum_k a^k (sigma_k - 1/2) over IID fair bits.

    The geometric tail is truncated where a^k drops below 1e-14.
    """
    if not 0 < a < 1:
        raise ConfigurationError("rate a must lie in (0, 1)")
    ncoef = int(math.ceil(math.log(_QUASILOCAL_TOL) / math.log(a)))
    return PotentialProcess(Kind.MOVING_AVERAGE_SHIFT,
                            {"a": float(a), "ncoef": ncoef}, seed, burn_in)


def intermittent_process(z, seed=0, burn_in=DEFAULT_BURN_IN):
    """Pomeau-Manneville style map x -> x(1 + x^z) mod 1, V = x - sample mean.

    The invariant density has no closed form, so centering is empirical:
    each sampled stream subtracts its own post-burn-in mean.
    """
    if z <= 0:
        raise ConfigurationError("map exponent z must be positive")
    return PotentialProcess(Kind.INTERMITTENT_MAP, {"z": float(z)}, seed, burn_in)


def cocycle_process(values=(-1.0, 1.0), probs=(0.5, 0.5), seed=0, burn_in=0):
    """V = v o S - v with v(omega) = sigma_0 on an IID symbol stream."""
    values, probs = _check_probs(values, probs)
    return PotentialProcess(Kind.COCYCLE, {"values": values, "probs": probs},
                            seed, burn_in)


def stationary_distribution(P):
    """Left Perron vector of a stochastic matrix, normalized to sum 1."""
    n = P.shape[0]
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    pi = np.linalg.solve(A, rhs)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _draw_discrete(rng, values, probs, n):
    u = rng.random(n)
    cum = np.cumsum(probs)
    cum[-1] = 1.0 + 1e-12  # float row sums may fall just short of 1
    idx = np.searchsorted(cum, u, side="right")
    return values[idx]


def sample_stream(process, n, stream=0):
    """V(S^0 omega), ..., V(S^{n-1} omega) after burn-in; deterministic in seed."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = process.rng(stream)
    burn = int(process.burn_in)
    p = process.params
    if process.kind is Kind.IID:
        if "uniform" in p:
            v = (rng.random(burn + n) - 0.5) * (2.0 * p["uniform"])
        elif "normal" in p:
            v = rng.standard_normal(burn + n) * p["normal"]
        else:
            v = _draw_discrete(rng, p["values"], p["probs"], burn + n)
        return v[burn:]
    if process.kind is Kind.MARKOV_CHAIN:
        pi = p["stationary"]
        s0 = int(np.searchsorted(np.cumsum(pi), rng.random(), side="right"))
        cum = np.cumsum(p["transition"], axis=1)
        cum[:, -1] = 1.0 + 1e-12  # guard against u == 1-eps rounding past the row
        states = kernels.markov_chain_states(rng.random(burn + n), cum, s0)
        return p["values"][states[burn:]]
    if process.kind is Kind.MOVING_AVERAGE_SHIFT:
        ncoef = p["ncoef"]
        bits = (rng.random(burn + n + ncoef) < 0.5).astype(float) - 0.5
        weights = p["a"] ** np.arange(ncoef)
        v = np.correlate(bits, weights, mode="valid")
        return v[burn:burn + n]
    if process.kind is Kind.INTERMITTENT_MAP:
        x0 = 0.1 + 0.8 * rng.random()
        x = kernels.pm_orbit(x0, p["z"], burn + n)[burn:]
        return x - x.mean()
    if process.kind is Kind.COCYCLE:
        s = _draw_discrete(rng, p["values"], p["probs"], burn + n + 1)
        return (s[1:] - s[:-1])[burn:]
    raise ConfigurationError(f"unknown process kind {process.kind}")


def stream_chunks(process, n, stream=0, chunk=1 << 20):
    """Yield sample_stream(process, n, stream) in consecutive chunks.

    Generator state (rng, chain state, lookahead buffers) persists across
    chunks, so the concatenation is bit-identical to the one-shot call.
    The intermittent map centers against the whole-call mean and therefore
    materializes the full stream up front.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    chunk = int(chunk)
    p = process.params
    if process.kind is Kind.INTERMITTENT_MAP:
        v = sample_stream(process, n, stream=stream)
        for i in range(0, n, chunk):
            yield v[i:i + chunk]
        return
    rng = process.rng(stream)
    burn = int(process.burn_in)
    if process.kind is Kind.IID:
        if burn:
            if "normal" in p:
                rng.standard_normal(burn)
            else:
                rng.random(burn)
        done = 0
        while done < n:
            c = min(chunk, n - done)
            if "uniform" in p:
                yield (rng.random(c) - 0.5) * (2.0 * p["uniform"])
            elif "normal" in p:
                yield rng.standard_normal(c) * p["normal"]
            else:
                yield _draw_discrete(rng, p["values"], p["probs"], c)
            done += c
        return
    if process.kind is Kind.MARKOV_CHAIN:
        pi = p["stationary"]
        s = int(np.searchsorted(np.cumsum(pi), rng.random(), side="right"))
        cum = np.cumsum(p["transition"], axis=1)
        cum[:, -1] = 1.0 + 1e-12
        left = burn
        while left > 0:  # burn separately so emitted chunks stay full-sized
            c = min(chunk, left)
            states = kernels.markov_chain_states(rng.random(c), cum, s)
            s = int(states[-1])
            left -= c
        done = 0
        while done < n:
            c = min(chunk, n - done)
            states = kernels.markov_chain_states(rng.random(c), cum, s)
            s = int(states[-1])
            done += c
            yield p["values"][states]
        return
    if process.kind is Kind.MOVING_AVERAGE_SHIFT:
        ncoef = p["ncoef"]
        weights = p["a"] ** np.arange(ncoef)
        pre = (rng.random(burn + ncoef - 1) < 0.5).astype(float) - 0.5
        carry = pre[burn:]  # last ncoef-1 symbols
        done = 0
        while done < n:
            c = min(chunk, n - done)
            fresh = (rng.random(c) < 0.5).astype(float) - 0.5
            bits = np.concatenate([carry, fresh])
            yield np.correlate(bits, weights, mode="valid")
            carry = bits[c:]
            done += c
        return
    if process.kind is Kind.COCYCLE:
        prev = _draw_discrete(rng, p["values"], p["probs"], burn + 1)[-1]
        done = 0
        while done < n:
            c = min(chunk, n - done)
            s = _draw_discrete(rng, p["values"], p["probs"], c)
            out = np.empty(c)
            out[0] = s[0] - prev
            out[1:] = s[1:] - s[:-1]
            prev = s[-1]
            done += c
            yield out
        return
    raise ConfigurationError(f"unknown process kind {process.kind}")


def sup_abs(process):
    """Essential sup of |V|, exact where available (used for overflow bounds)."""
    p = process.params
    if process.kind is Kind.IID:
        if "uniform" in p:
            return p["uniform"]
        if "normal" in p:
            return 6.0 * p["normal"]  # soft bound, only used for renorm sizing
        return float(np.max(np.abs(p["values"])))
    if process.kind is Kind.MARKOV_CHAIN:
        return float(np.max(np.abs(p["values"])))
    if process.kind is Kind.MOVING_AVERAGE_SHIFT:
        return 0.5 / (1.0 - p["a"])
    if process.kind is Kind.INTERMITTENT_MAP:
        return 1.0
    if process.kind is Kind.COCYCLE:
        vals = p["values"]
        return float(np.max(vals) - np.min(vals))
    raise ConfigurationError(f"unknown process kind {process.kind}")


def autocovariance(process, lag_max, n, stream=0):
    """Empirical C(m) = (1/(n-m)) sum_i V_i V_{i+m} for m = 0..lag_max."""
    lag_max = int(lag_max)
    n = int(n)
    if lag_max >= n:
        raise ValueError("lag_max must be smaller than n")
    v = sample_stream(process, n, stream=stream)
    out = np.empty(lag_max + 1)
    for m in range(lag_max + 1):
        if m == 0:
            out[0] = v @ v / n
        else:
            out[m] = v[:-m] @ v[m:] / (n - m)
    return out


class MixingKind(str, enum.Enum):
    EXPONENTIAL = "exponential"
    POWER_LAW = "power_law"
    WHITE = "white"


@dataclass(frozen=True)
class MixingProfile:
    decay_kind: MixingKind
    exponent: float  # decay rate (exponential) or alpha (power law); nan if white
    constant: float


def fit_mixing_exponent(covariances, noise_floor=0.0):
    """Classify the covariance decay by least squares on log scale.

    Lags m >= 1 with |C(m)| above noise_floor enter the fit; both an
    exponential and a power-law model are fitted and the smaller residual
    wins. With fewer than 3 usable lags the sequence is flagged white.
    """
    cov = np.asarray(covariances, dtype=float)
    m = np.arange(1, cov.size)
    absc = np.abs(cov[1:])
    use = absc > max(noise_floor, 0.0)
    if use.sum() < 3:
        return MixingProfile(MixingKind.WHITE, math.nan, float(abs(cov[0])))
    mu = m[use].astype(float)
    y = np.log(absc[use])
    exp_fit = np.polyfit(mu, y, 1)
    exp_res = np.sum((np.polyval(exp_fit, mu) - y) ** 2)
    pow_fit = np.polyfit(np.log(mu), y, 1)
    pow_res = np.sum((np.polyval(pow_fit, np.log(mu)) - y) ** 2)
    if exp_res <= pow_res:
        return MixingProfile(MixingKind.EXPONENTIAL, -exp_fit[0],
                             math.exp(exp_fit[1]))
    return MixingProfile(MixingKind.POWER_LAW, -pow_fit[0], math.exp(pow_fit[1]))
