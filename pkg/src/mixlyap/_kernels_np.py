"""Pure-numpy implementations of the hot kernels.

Semantics contract with the compiled backend (`_kernels_c.pyx`): identical
floating-point operations in identical order, so that trajectories are
bit-for-bit reproducible across backends. The recurrences use only
+,-,*,/,sqrt (IEEE-exact); transcendentals (log, pow) enter either the
accumulators only, or go through the same libm calls (math.pow).

All state arrays are updated in place. Batched axes: replicas/samples first.
"""

import math

import numpy as np

COMPILED = False


def lyap_affine_chunk(m0, m1, pot, a, b, acc, blockpos, renorm_every):
    """Evolve unit vectors under v -> (M0 + V_t*M1) v for a chunk of steps.

    pot: (R, C) potential values; a, b, acc: (R,) state; blockpos: int,
    steps already taken in the current renormalization block. Returns the
    new blockpos. Log-norms are added to acc at each renormalization; call
    lyap_flush at the very end of the stream.
    """
    m0 = np.asarray(m0, dtype=float)
    m1 = np.asarray(m1, dtype=float)
    R, C = pot.shape
    plain = (
        m1[0, 1] == 0.0 and m1[1, 0] == 0.0 and m1[1, 1] == 0.0
        and m0[0, 1] == -1.0 and m0[1, 0] == 1.0 and m0[1, 1] == 0.0
    )
    c = np.empty(R)
    na = np.empty(R)
    nb = np.empty(R)
    for t in range(C):
        v = pot[:, t]
        if plain:
            np.multiply(v, m1[0, 0], out=c)
            c += m0[0, 0]
            np.multiply(c, a, out=na)
            na -= b
            b[:] = a
            a[:] = na
        else:
            e00 = m0[0, 0] + v * m1[0, 0]
            e01 = m0[0, 1] + v * m1[0, 1]
            e10 = m0[1, 0] + v * m1[1, 0]
            e11 = m0[1, 1] + v * m1[1, 1]
            np.multiply(e00, a, out=na)
            na += e01 * b
            np.multiply(e10, a, out=nb)
            nb += e11 * b
            a[:] = na
            b[:] = nb
        blockpos += 1
        if blockpos == renorm_every:
            nrm2 = a * a + b * b
            acc += 0.5 * np.log(nrm2)
            inv = 1.0 / np.sqrt(nrm2)
            a *= inv
            b *= inv
            blockpos = 0
    return blockpos


def lyap_flush(a, b, acc):
    """Final partial-block log-norm contribution."""
    return acc + 0.5 * np.log(a * a + b * b)


def orbit_chunk(mats, c, s, acc, out_c, out_s):
    """Projective orbit on unit vectors e_theta = (c, s), sign-fixed to c >= 0.

    mats: (B, C, 2, 2) per-step matrices. out_c/out_s receive the PRE-step
    unit vectors (theta_n before applying mats[:, n]); acc accumulates
    log ||M_n e_{theta_n}|| per step.
    """
    B, C = mats.shape[0], mats.shape[1]
    for t in range(C):
        out_c[:, t] = c
        out_s[:, t] = s
        M = mats[:, t]
        w1 = M[:, 0, 0] * c + M[:, 0, 1] * s
        w2 = M[:, 1, 0] * c + M[:, 1, 1] * s
        nrm2 = w1 * w1 + w2 * w2
        acc += 0.5 * np.log(nrm2)
        inv = 1.0 / np.sqrt(nrm2)
        w1 *= inv
        w2 *= inv
        flip = (w1 < 0.0) | ((w1 == 0.0) & (w2 < 0.0))
        np.negative(w1, out=w1, where=flip)
        np.negative(w2, out=w2, where=flip)
        c[:] = w1
        s[:] = w2


def norm_growth(m0, m1, pot, renorm_every=32):
    """Track max_n log||T(n,1)||_2 over prefix products of affine SL2 steps.

    pot: (S, nfac) potential values (nfac factors); the empty product
    (identity, log-norm 0) is included in the max. Returns best (S,).
    """
    m0 = np.asarray(m0, dtype=float)
    m1 = np.asarray(m1, dtype=float)
    S, nfac = pot.shape
    q00 = np.ones(S)
    q01 = np.zeros(S)
    q10 = np.zeros(S)
    q11 = np.ones(S)
    acc = np.zeros(S)
    best = np.zeros(S)
    for t in range(nfac):
        v = pot[:, t]
        e00 = m0[0, 0] + v * m1[0, 0]
        e01 = m0[0, 1] + v * m1[0, 1]
        e10 = m0[1, 0] + v * m1[1, 0]
        e11 = m0[1, 1] + v * m1[1, 1]
        n00 = e00 * q00 + e01 * q10
        n01 = e00 * q01 + e01 * q11
        n10 = e10 * q00 + e11 * q10
        n11 = e10 * q01 + e11 * q11
        q00, q01, q10, q11 = n00, n01, n10, n11
        f2 = q00 * q00 + q01 * q01 + q10 * q10 + q11 * q11
        det = q00 * q11 - q01 * q10
        disc = f2 * f2 - 4.0 * det * det
        np.maximum(disc, 0.0, out=disc)
        s1sq = 0.5 * (f2 + np.sqrt(disc))
        cand = acc + 0.5 * np.log(s1sq)
        np.maximum(best, cand, out=best)
        if (t + 1) % renorm_every == 0:
            # norm renormalization only: the stored determinant becomes
            # e^{-2 acc} (true det is 1), which the sigma_1 formula uses
            scale = np.sqrt(f2)
            acc += np.log(scale)
            inv = 1.0 / scale
            q00 *= inv
            q01 *= inv
            q10 *= inv
            q11 *= inv
    return best


def markov_chain_states(uniforms, cum, s0):
    """Finite-state chain: next = first j with u < cum[state, j].

    Evaluated by pointer-jumping prefix composition of the per-step maps;
    produces the same states as the sequential compiled loop.
    """
    n = uniforms.shape[0]
    S = cum.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.int64)
    maps = np.empty((n, S), dtype=np.int16)
    for s in range(S):
        maps[:, s] = np.searchsorted(cum[s], uniforms, side="right")
    # Hillis-Steele scan of map composition: after all passes
    # maps[t] = m_t o m_{t-1} o ... o m_0 (evaluated right to left).
    d = 1
    while d < n:
        composed = np.take_along_axis(maps[d:], maps[:-d], axis=1)
        maps[d:] = composed
        d *= 2
    return maps[:, s0].astype(np.int64)


def pm_orbit(x0, z, n):
    """Intermittent interval map x -> x(1 + x^z) mod 1, scalar libm loop."""
    out = np.empty(n)
    x = float(x0)
    for t in range(n):
        x = x * (1.0 + math.pow(x, z))
        if x >= 1.0:
            x -= 1.0
        out[t] = x
    return out
