# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled implementations of the hot kernels.

Must stay operation-for-operation equivalent to `_kernels_np.py` (same
floating-point expressions in the same order) so trajectories agree
bitwise across backends.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport log, pow, sqrt

COMPILED = True


def lyap_affine_chunk(m0, m1, double[:, ::1] pot, double[::1] a, double[::1] b,
                      double[::1] acc, long blockpos, long renorm_every):
    cdef double m000 = m0[0, 0], m001 = m0[0, 1], m010 = m0[1, 0], m011 = m0[1, 1]
    cdef double m100 = m1[0, 0], m101 = m1[0, 1], m110 = m1[1, 0], m111 = m1[1, 1]
    cdef bint plain = (m101 == 0.0 and m110 == 0.0 and m111 == 0.0
                       and m001 == -1.0 and m010 == 1.0 and m011 == 0.0)
    cdef Py_ssize_t R = pot.shape[0], C = pot.shape[1], r, t
    cdef long bp = blockpos
    cdef double av, bv, accv, v, c, na, nb, nrm2, inv
    cdef double e00, e01, e10, e11
    for r in range(R):
        av = a[r]
        bv = b[r]
        accv = acc[r]
        bp = blockpos
        if plain:
            for t in range(C):
                c = pot[r, t] * m100 + m000
                na = c * av - bv
                bv = av
                av = na
                bp += 1
                if bp == renorm_every:
                    nrm2 = av * av + bv * bv
                    accv += 0.5 * log(nrm2)
                    inv = 1.0 / sqrt(nrm2)
                    av *= inv
                    bv *= inv
                    bp = 0
        else:
            for t in range(C):
                v = pot[r, t]
                e00 = m000 + v * m100
                e01 = m001 + v * m101
                e10 = m010 + v * m110
                e11 = m011 + v * m111
                na = e00 * av + e01 * bv
                nb = e10 * av + e11 * bv
                av = na
                bv = nb
                bp += 1
                if bp == renorm_every:
                    nrm2 = av * av + bv * bv
                    accv += 0.5 * log(nrm2)
                    inv = 1.0 / sqrt(nrm2)
                    av *= inv
                    bv *= inv
                    bp = 0
        a[r] = av
        b[r] = bv
        acc[r] = accv
    return bp


def lyap_flush(a, b, acc):
    return acc + 0.5 * np.log(np.asarray(a) ** 2 + np.asarray(b) ** 2)


def orbit_chunk(double[:, :, :, ::1] mats, double[::1] c, double[::1] s,
                double[::1] acc, double[:, ::1] out_c, double[:, ::1] out_s):
    cdef Py_ssize_t B = mats.shape[0], C = mats.shape[1], r, t
    cdef double cv, sv, accv, w1, w2, nrm2, inv
    for r in range(B):
        cv = c[r]
        sv = s[r]
        accv = acc[r]
        for t in range(C):
            out_c[r, t] = cv
            out_s[r, t] = sv
            w1 = mats[r, t, 0, 0] * cv + mats[r, t, 0, 1] * sv
            w2 = mats[r, t, 1, 0] * cv + mats[r, t, 1, 1] * sv
            nrm2 = w1 * w1 + w2 * w2
            accv += 0.5 * log(nrm2)
            inv = 1.0 / sqrt(nrm2)
            w1 *= inv
            w2 *= inv
            if w1 < 0.0 or (w1 == 0.0 and w2 < 0.0):
                w1 = -w1
                w2 = -w2
            cv = w1
            sv = w2
        c[r] = cv
        s[r] = sv
        acc[r] = accv


def norm_growth(m0, m1, double[:, ::1] pot, long renorm_every=32):
    cdef double m000 = m0[0, 0], m001 = m0[0, 1], m010 = m0[1, 0], m011 = m0[1, 1]
    cdef double m100 = m1[0, 0], m101 = m1[0, 1], m110 = m1[1, 0], m111 = m1[1, 1]
    cdef Py_ssize_t S = pot.shape[0], nfac = pot.shape[1], r, t
    cdef cnp.ndarray[double, ndim=1] best_arr = np.zeros(S)
    cdef double[::1] best = best_arr
    cdef double q00, q01, q10, q11, n00, n01, n10, n11
    cdef double e00, e01, e10, e11, v, f2, det, disc, s1sq, cand
    cdef double accv, scale, inv
    for r in range(S):
        q00 = 1.0
        q01 = 0.0
        q10 = 0.0
        q11 = 1.0
        accv = 0.0
        for t in range(nfac):
            v = pot[r, t]
            e00 = m000 + v * m100
            e01 = m001 + v * m101
            e10 = m010 + v * m110
            e11 = m011 + v * m111
            n00 = e00 * q00 + e01 * q10
            n01 = e00 * q01 + e01 * q11
            n10 = e10 * q00 + e11 * q10
            n11 = e10 * q01 + e11 * q11
            q00 = n00
            q01 = n01
            q10 = n10
            q11 = n11
            f2 = q00 * q00 + q01 * q01 + q10 * q10 + q11 * q11
            det = q00 * q11 - q01 * q10
            disc = f2 * f2 - 4.0 * det * det
            if disc < 0.0:
                disc = 0.0
            s1sq = 0.5 * (f2 + sqrt(disc))
            cand = accv + 0.5 * log(s1sq)
            if cand > best[r]:
                best[r] = cand
            if (t + 1) % renorm_every == 0:
                # norm renormalization only: the stored determinant becomes
                # e^{-2 acc} (true det is 1), used by the sigma_1 formula
                scale = sqrt(f2)
                accv += log(scale)
                inv = 1.0 / scale
                q00 *= inv
                q01 *= inv
                q10 *= inv
                q11 *= inv
    return best_arr


def markov_chain_states(double[::1] uniforms, double[:, ::1] cum, long s0):
    cdef Py_ssize_t n = uniforms.shape[0], t
    cdef long S = cum.shape[0], s = s0
    cdef long j
    cdef double u
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    for t in range(n):
        u = uniforms[t]
        j = 0
        while u >= cum[s, j]:
            j += 1
        s = j
        out[t] = s
    return out_arr


def pm_orbit(double x0, double z, long n):
    cdef cnp.ndarray[double, ndim=1] out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef double x = x0
    cdef Py_ssize_t t
    for t in range(n):
        x = x * (1.0 + pow(x, z))
        if x >= 1.0:
            x -= 1.0
        out[t] = x
    return out_arr
