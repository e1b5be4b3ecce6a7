# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-segment integrator for randomized Trotter trajectories.

See ``_kernels_py.trotter_segments`` for the reference semantics; both
implementations must agree to rounding. Complex arrays are walked as
interleaved (re, im) doubles.
"""
import numpy as np
cimport numpy as cnp

cdef extern from "math.h" nogil:
    void sincos(double x, double* s, double* c)

cnp.import_array()


cdef inline void _local(int letter, double th, double ph, double* u) noexcept nogil:
    # row-major 2x2, interleaved re/im
    cdef double c, s, c2, s2
    sincos(th, &s, &c)
    if letter == 1:      # X
        u[0] = c; u[1] = 0; u[2] = 0; u[3] = -s
        u[4] = 0; u[5] = -s; u[6] = c; u[7] = 0
    elif letter == 2:    # Y
        u[0] = c; u[1] = 0; u[2] = -s; u[3] = 0
        u[4] = s; u[5] = 0; u[6] = c; u[7] = 0
    elif letter == 3:    # Z
        u[0] = c; u[1] = -s; u[2] = 0; u[3] = 0
        u[4] = 0; u[5] = 0; u[6] = c; u[7] = s
    else:                # off support: exp(-i th X) exp(-i ph Y)
        sincos(ph, &s2, &c2)
        u[0] = c * c2; u[1] = -s * s2
        u[2] = -c * s2; u[3] = -s * c2
        u[4] = c * s2; u[5] = -s * c2
        u[6] = c * c2; u[7] = s * s2


cdef inline void _step(const double* u, const double* pv, double* st) noexcept nogil:
    # st = u @ pv^dag for 2x2 interleaved matrices
    cdef int r, c, k
    cdef double ar, ai, br, bi, sr, si
    for r in range(2):
        for c in range(2):
            sr = 0
            si = 0
            for k in range(2):
                ar = u[2 * (2 * r + k)]
                ai = u[2 * (2 * r + k) + 1]
                br = pv[2 * (2 * c + k)]
                bi = -pv[2 * (2 * c + k) + 1]
                sr += ar * br - ai * bi
                si += ar * bi + ai * br
            st[2 * (2 * r + c)] = sr
            st[2 * (2 * r + c) + 1] = si


cdef inline void _apply_1q(double* p, int D, int stride, const double* m) noexcept nogil:
    cdef int i, j
    cdef double ar, ai, br, bi
    for i in range(D):
        if i & stride:
            continue
        j = i | stride
        ar = p[2 * i]; ai = p[2 * i + 1]
        br = p[2 * j]; bi = p[2 * j + 1]
        p[2 * i] = m[0] * ar - m[1] * ai + m[2] * br - m[3] * bi
        p[2 * i + 1] = m[0] * ai + m[1] * ar + m[2] * bi + m[3] * br
        p[2 * j] = m[4] * ar - m[5] * ai + m[6] * br - m[7] * bi
        p[2 * j + 1] = m[4] * ai + m[5] * ar + m[6] * bi + m[7] * br


cdef inline double _hermitian_form(const double* V, const double* p, int D) noexcept nogil:
    # <p|V|p> for Hermitian V using the upper triangle only
    cdef int r, c
    cdef double f = 0, vr, vi, pr, pi, qr, qi, accr
    for r in range(D):
        pr = p[2 * r]; pi = p[2 * r + 1]
        f += V[2 * (r * D + r)] * (pr * pr + pi * pi)
        accr = 0
        for c in range(r + 1, D):
            vr = V[2 * (r * D + c)]; vi = V[2 * (r * D + c) + 1]
            qr = p[2 * c]; qi = p[2 * c + 1]
            # Re(conj(p_r) * V_rc * p_c)
            accr += (pr * vr + pi * vi) * qr - (pr * vi - pi * vr) * qi
        f += 2 * accr
    return f


def trotter_segments(double complex[:, ::1] psi, double complex[:, ::1] bos, int[::1] letters,
                     double[:, :, :, ::1] angles, double complex[:, :, :, ::1] prev,
                     double complex[:, ::1] E, double complex[:, :, ::1] Vp,
                     double complex[::1] phase, double complex[::1] kern,
                     long[::1] snap_at, double complex[:, :, ::1] snaps):
    """Advance B trajectories by ``angles.shape[1]`` segments in place.

    psi   (B, D)        spin state in the frame where exp(-iH tau) acts
    bos   (B, M)        coherent amplitudes
    prev  (B, Nq, 2, 2) single-qubit factors of the previous segment
    snaps (B, S, M)     filled with ``bos`` after segment snap_at[s]
    """
    cdef Py_ssize_t B = psi.shape[0], D = psi.shape[1], M = bos.shape[1]
    cdef Py_ssize_t n = angles.shape[1], nq = angles.shape[2], S = snap_at.shape[0]
    cdef Py_ssize_t bi, i, j, m, r, c, si
    cdef double u[8]
    cdef double st[8]
    cdef double accr, acci, f, er, ei, qr, qi, br, bim, phr, phi, kr, ki
    cdef double[::1] work = np.empty(2 * D, dtype=np.float64)
    cdef double* q = &work[0]
    cdef double* p
    cdef double* pv
    cdef double* bo
    cdef const double* row
    cdef const double* ang
    cdef const double* Ep = <double*>&E[0, 0]
    cdef const double* Vb = <double*>&Vp[0, 0, 0] if M > 0 else NULL
    cdef const double* php = <double*>&phase[0] if M > 0 else NULL
    cdef const double* kp = <double*>&kern[0] if M > 0 else NULL
    cdef int stride
    with nogil:
        for bi in range(B):
            p = <double*>&psi[bi, 0]
            pv = <double*>&prev[bi, 0, 0, 0]
            bo = <double*>&bos[bi, 0] if M > 0 else NULL
            si = 0
            while si < S and snap_at[si] == 0:
                for m in range(M):
                    snaps[bi, si, m] = bos[bi, m]
                si = si + 1
            for i in range(n):
                ang = &angles[bi, i, 0, 0]
                for j in range(nq):
                    _local(letters[j], ang[2 * j], ang[2 * j + 1], u)
                    _step(u, pv + 8 * j, st)
                    stride = 1 << (nq - 1 - j)
                    _apply_1q(p, <int>D, stride, st)
                    for c in range(8):
                        pv[8 * j + c] = u[c]
                for m in range(M):
                    f = _hermitian_form(Vb + 2 * m * D * D, p, <int>D)
                    br = bo[2 * m]; bim = bo[2 * m + 1]
                    phr = php[2 * m]; phi = php[2 * m + 1]
                    kr = kp[2 * m]; ki = kp[2 * m + 1]
                    bo[2 * m] = br * phr - bim * phi + f * kr
                    bo[2 * m + 1] = br * phi + bim * phr + f * ki
                for r in range(D):
                    row = Ep + 2 * r * D
                    accr = 0
                    acci = 0
                    for c in range(D):
                        er = row[2 * c]; ei = row[2 * c + 1]
                        qr = p[2 * c]; qi = p[2 * c + 1]
                        accr += er * qr - ei * qi
                        acci += er * qi + ei * qr
                    q[2 * r] = accr
                    q[2 * r + 1] = acci
                for r in range(2 * D):
                    p[r] = q[r]
                while si < S and snap_at[si] == i + 1:
                    for m in range(M):
                        snaps[bi, si, m] = bos[bi, m]
                    si = si + 1
