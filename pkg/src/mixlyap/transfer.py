"""Transfer matrices, conjugation frames, and the Monte Carlo Lyapunov estimator.

The estimator evolves a unit vector and accumulates log-norms at
renormalization boundaries (same limit as the matrix-product norm, O(1)
memory, no overflow). The initial angle is uniform on [0, pi) per replica.

One-step matrices are handled in affine form M(v) = M0 + v*M1, which covers
the plain transfer matrix, any fixed conjugation of it, and the band-edge
anomaly family, and is what the compiled kernels consume.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import SingularFrameError
from .potential import stream_chunks, sample_stream, sup_abs

_LOG_RANGE_GUARD = 300.0  # keep block growth within exp(300) << double overflow


def transfer_matrix(E, lam, v):
    """One-step transfer matrix [[E - lam*v, -1], [1, 0]]."""
    return np.array([[E - lam * v, -1.0], [1.0, 0.0]])


def transfer_affine(E, lam):
    """(M0, M1) with M(v) = M0 + v*M1 equal to transfer_matrix(E, lam, v)."""
    m0 = np.array([[E, -1.0], [1.0, 0.0]])
    m1 = np.array([[-lam, 0.0], [0.0, 0.0]])
    return m0, m1


def sl2_det(m):
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def sl2_renormalize(m):
    """Rescale to unit determinant (absorbs floating-point det drift)."""
    return m / np.sqrt(np.abs(sl2_det(m)))


def rotation_frame(k):
    """(R_k, M) with M T^{2cos k} M^{-1} = R_k; valid for sin k > 0.

    The identity is exact including the disorder term:
    M T^{2cos k - lam*v} M^{-1} = R_k (1 + (lam*v/sin k) [[0,0],[1,0]]).
    """
    s = math.sin(k)
    if s <= 1e-12:
        raise SingularFrameError(
            "rotation frame is singular at k in {0, pi} (Krein collision); "
            "use band_edge_frame instead")
    c = math.cos(k)
    rk = np.array([[c, -s], [s, c]])
    m = np.array([[s, 0.0], [-c, 1.0]]) / math.sqrt(s)
    return rk, m


def band_edge_frame(lam):
    """Frames (N, N_lam) for the band-edge anomaly at E = -2 + eps*lam^(4/3).

    N T^{-2}_{0} N^{-1} = -[[1,1],[0,1]] (Jordan block), and conjugating
    further by N_lam = diag(lam^(2/3), 1) turns the transfer matrix into
    -exp(lam^(1/3) [[0,0],[V,0]] + lam^(2/3) [[0,1],[-eps,0]] + O(lam)).
    det(N_lam N) = lam^(2/3) is bookkept by the caller.
    """
    if lam <= 0:
        raise ValueError("band-edge scaling frame is degenerate at lam = 0")
    n = np.array([[1.0, 0.0], [1.0, 1.0]])
    n_lam = np.diag([lam ** (2.0 / 3.0), 1.0])
    return n, n_lam


def band_edge_family_affine(lam, epsilon):
    """Affine form of the exact conjugated band-edge one-step matrix.

    A(V) = N_lam N T^{-2+eps*lam^(4/3)}_{lam}(V) N^{-1} N_lam^{-1}
         = -[[1 + lam*V - eps*lam^(4/3), lam^(2/3)],
             [lam^(1/3)*V - eps*lam^(2/3), 1]],  det A = 1 exactly.
    """
    l13 = lam ** (1.0 / 3.0)
    l23 = l13 * l13
    l43 = lam * l13
    m0 = -np.array([[1.0 - epsilon * l43, l23], [-epsilon * l23, 1.0]])
    m1 = -np.array([[lam, 0.0], [l13, 0.0]])
    return m0, m1


@dataclass(frozen=True)
class LyapunovEstimate:
    gamma: float            # nats per transfer-matrix step
    stderr: float
    steps: int
    replicas: int
    renorm_every: int       # block length actually used
    renorm_flagged: bool    # True if the requested block length was reduced
    per_replica: tuple


def _safe_renorm_every(requested, m0, m1, vmax):
    bound = np.linalg.norm(m0) + vmax * np.linalg.norm(m1)
    growth = math.log(max(bound, 1.0 + 1e-9))
    safe = max(1, int(_LOG_RANGE_GUARD / growth))
    if requested > safe:
        return safe, True
    return int(requested), False


def _lyap_replicas(process, m0, m1, steps, renorm, streams, chunk=1 << 20):
    """Evolve all replicas in lockstep over shared chunk boundaries."""
    R = len(streams)
    a = np.empty(R)
    b = np.empty(R)
    for i, s in enumerate(streams):
        theta0 = process.rng(s, purpose=1).random() * math.pi
        a[i] = math.cos(theta0)
        b[i] = math.sin(theta0)
    acc = np.zeros(R)
    iters = [stream_chunks(process, steps, stream=s, chunk=chunk)
             for s in streams]
    buf = np.empty((R, chunk))
    blockpos = 0
    done = 0
    while done < steps:
        c = min(chunk, steps - done)
        for i, it in enumerate(iters):
            buf[i, :c] = next(it)
        block = buf if c == chunk else np.ascontiguousarray(buf[:, :c])
        blockpos = kernels.lyap_affine_chunk(m0, m1, block, a, b, acc,
                                             blockpos, renorm)
        done += c
    return kernels.lyap_flush(a, b, acc) / steps


def lyapunov_mc(process, E=None, lam=None, steps=100_000, replicas=8,
                renorm_every=64, stream_base=0, family=None, threads=1):
    """Monte Carlo Lyapunov exponent of the (affine) matrix family.

    family=(M0, M1) overrides the plain transfer matrices at (E, lam);
    replica r uses potential stream `stream_base + r`. The renormalization
    block is shortened automatically (and flagged) if the worst-case block
    growth could overflow doubles.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if family is None:
        if E is None or lam is None:
            raise ValueError("either (E, lam) or family=(M0, M1) is required")
        m0, m1 = transfer_affine(E, lam)
    else:
        m0, m1 = (np.asarray(m, dtype=float) for m in family)
    renorm, flagged = _safe_renorm_every(renorm_every, m0, m1, sup_abs(process))
    streams = [stream_base + r for r in range(replicas)]
    if threads > 1 and replicas > 1:
        groups = [streams[i::threads] for i in range(threads)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(
                lambda g: _lyap_replicas(process, m0, m1, steps, renorm, g),
                [g for g in groups if g]))
        by_stream = {}
        for g, part in zip([g for g in groups if g], parts):
            by_stream.update(zip(g, part))
        gammas = [by_stream[s] for s in streams]
    else:
        gammas = list(_lyap_replicas(process, m0, m1, steps, renorm, streams))
    gam = np.asarray(gammas)
    stderr = float(gam.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 \
        else math.nan
    return LyapunovEstimate(float(gam.mean()), stderr, int(steps),
                            int(replicas), renorm, flagged, tuple(gammas))


@dataclass(frozen=True)
class NormGrowthResult:
    fraction: float          # empirical P(max_n ||T(n,1)||^2 >= e^{c*sqrt(N)})
    bound: float             # the Lemma's lower bound 1 - e^{-c*sqrt(N)}
    n: int
    samples: int
    c_hat: float


def norm_growth_probability(process, E, lam, N, samples, c_hat, stream_base=0):
    """Fraction of disorder samples whose partial products reach e^{c sqrt(N)}.

    T(n,1) multiplies transfer matrices over shifts 1..n-1 (T(1,1) = 1);
    n = 0 is included through the empty product, so the event is certain
    at N = 0.
    """
    N = int(N)
    S = int(samples)
    m0, m1 = transfer_affine(E, lam)
    nfac = max(N - 1, 0)
    pot = np.empty((S, nfac))
    for r in range(S):
        if nfac:
            pot[r] = sample_stream(process, nfac + 1, stream=stream_base + r)[1:]
    best = kernels.norm_growth(m0, m1, pot)
    threshold = c_hat * math.sqrt(N)
    fraction = float(np.mean(2.0 * best >= threshold))
    return NormGrowthResult(fraction, 1.0 - math.exp(-threshold), N, S,
                            float(c_hat))
