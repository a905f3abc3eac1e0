# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Euler-Maruyama chunk kernels.

Expression-for-expression mirror of ``_em_py`` (see its docstring for the
chunk contract).  Compiled with contraction disabled so that every
arithmetic expression rounds exactly like the pure-Python reference; the
two implementations must stay bit-identical.
"""

from libc.math cimport sqrt, isfinite

BACKEND_NAME = "cython"


def demographic_chunk(double[::1] y, double[::1] pvec, double dt,
                      double[:, ::1] noise, long long step0, long long stride,
                      double[:, ::1] out):
    cdef double s_M = pvec[0], s_T = pvec[1], mu_M = pvec[2], b_p = pvec[3]
    cdef double mu_T = pvec[4], beta = pvec[5], eta = pvec[6], gamma = pvec[7]
    cdef double delta = pvec[8], c_M = pvec[9], c_B = pvec[10], e_M = pvec[11]
    cdef double e_B = pvec[12], c = pvec[13], K = pvec[14]
    cdef double N1 = pvec[15], N2 = pvec[16], N3 = pvec[17]

    cdef double sdt = sqrt(dt)
    cdef double mu = y[0], mi = y[1], bb = y[2], tt = y[3]
    cdef Py_ssize_t m = noise.shape[0]
    cdef long long bzero_j = -1, absorbed_j = -1, step, row
    cdef double s1 = sqrt(s_M), s8 = sqrt(s_T)
    cdef Py_ssize_t j
    cdef int status = 0
    cdef Py_ssize_t done = m
    cdef double p2, p3, p4, p5, p6, p7, p9, p10, p11, g, denom
    cdef double f1, f2, f3, f4, s2, s3, s4, s5, s6, s7, s9, s10, s11
    cdef double w1, w2, w3, w4, mu_n, mi_n, bb_n, tt_n

    with nogil:
        for j in range(m):
            p2 = mu_M * mu
            p3 = beta * mu * bb
            p4 = b_p * mi
            denom = tt + c * mi
            p5 = gamma * mi * tt / denom if denom > 0.0 else 0.0
            g = delta * bb * (1.0 - bb / K)
            p6 = g if g > 0.0 else 0.0
            p7 = mu * bb * (eta + N3 * beta)
            p9 = c_M * mi * tt / (e_M * tt + 1.0)
            p10 = c_B * bb * tt / (e_B * tt + 1.0)
            p11 = mu_T * tt

            f1 = s_M - p2 - p3
            f2 = p3 - p4 - p5
            f3 = g + N1 * b_p * mi + N2 * p5 - p7
            f4 = s_T + p9 + p10 - p11

            s2 = sqrt(p2); s3 = sqrt(p3); s4 = sqrt(p4); s5 = sqrt(p5)
            s6 = sqrt(p6); s7 = sqrt(p7); s9 = sqrt(p9); s10 = sqrt(p10)
            s11 = sqrt(p11)

            w1 = (s1 * noise[j, 0] - s2 * noise[j, 1] - s3 * noise[j, 2]) * sdt
            w2 = (s3 * noise[j, 2] - s4 * noise[j, 3] - s5 * noise[j, 4]) * sdt
            w3 = (N1 * s4 * noise[j, 3] + N2 * s5 * noise[j, 4] + s6 * noise[j, 5] - s7 * noise[j, 6]) * sdt
            w4 = (s8 * noise[j, 7] + s9 * noise[j, 8] + s10 * noise[j, 9] - s11 * noise[j, 10]) * sdt

            mu_n = mu + f1 * dt + w1
            mi_n = mi + f2 * dt + w2
            bb_n = bb + f3 * dt + w3
            tt_n = tt + f4 * dt + w4
            if not (isfinite(mu_n) and isfinite(mi_n) and isfinite(bb_n) and isfinite(tt_n)):
                status = 1
                done = j
                break
            mu = mu_n if mu_n > 0.0 else 0.0
            mi = mi_n if mi_n > 0.0 else 0.0
            bb = bb_n if bb_n > 0.0 else 0.0
            tt = tt_n if tt_n > 0.0 else 0.0

            if bb == 0.0:
                if bzero_j < 0:
                    bzero_j = j
                if absorbed_j < 0 and mi == 0.0:
                    absorbed_j = j
            step = step0 + j + 1
            if step % stride == 0:
                row = step / stride - 1
                out[row, 0] = mu; out[row, 1] = mi; out[row, 2] = bb; out[row, 3] = tt

    y[0] = mu; y[1] = mi; y[2] = bb; y[3] = tt
    return status, done, bzero_j, absorbed_j


def environmental_chunk(double[::1] y, double[::1] live, double[::1] pvec,
                        double[::1] alpha, double[::1] sigma, double[::1] cs,
                        double dt, double[:, ::1] noise, long long step0,
                        long long stride, double[:, ::1] out, double[:, ::1] out_env):
    cdef double s_M = pvec[0], s_T = pvec[1], mu_M = pvec[2], mu_T = pvec[4]
    cdef double beta = pvec[5], c_M = pvec[9], c_B = pvec[10], e_M = pvec[11]
    cdef double e_B = pvec[12], c = pvec[13], K = pvec[14]
    cdef double N1 = pvec[15], N2 = pvec[16], N3 = pvec[17]
    cdef double a0 = alpha[0], a1 = alpha[1], a2 = alpha[2], a3 = alpha[3]
    cdef double g0 = sigma[0], g1 = sigma[1], g2 = sigma[2], g3 = sigma[3]
    cdef double cs0 = cs[0], cs1 = cs[1], cs2 = cs[2], cs3 = cs[3]
    cdef double fl0 = 1e-12 * cs0, fl1 = 1e-12 * cs1, fl2 = 1e-12 * cs2, fl3 = 1e-12 * cs3

    cdef double sdt = sqrt(dt)
    cdef double mu = y[0], mi = y[1], bb = y[2], tt = y[3]
    cdef double delta = live[0], b_p = live[1], gamma = live[2], eta = live[3]
    cdef Py_ssize_t m = noise.shape[0]
    cdef long long bzero_j = -1, absorbed_j = -1, step, row
    cdef double s1 = sqrt(s_M), s8 = sqrt(s_T)
    cdef Py_ssize_t j
    cdef int status = 0
    cdef Py_ssize_t done = m
    cdef double p2, p3, p4, p5, p6, p7, p9, p10, p11, g, denom
    cdef double f1, f2, f3, f4, s2, s3, s4, s5, s6, s7, s9, s10, s11
    cdef double w1, w2, w3, w4, mu_n, mi_n, bb_n, tt_n, d_n, b_n, gm_n, e_n

    with nogil:
        for j in range(m):
            p2 = mu_M * mu
            p3 = beta * mu * bb
            p4 = b_p * mi
            denom = tt + c * mi
            p5 = gamma * mi * tt / denom if denom > 0.0 else 0.0
            g = delta * bb * (1.0 - bb / K)
            p6 = g if g > 0.0 else 0.0
            p7 = mu * bb * (eta + N3 * beta)
            p9 = c_M * mi * tt / (e_M * tt + 1.0)
            p10 = c_B * bb * tt / (e_B * tt + 1.0)
            p11 = mu_T * tt

            f1 = s_M - p2 - p3
            f2 = p3 - p4 - p5
            f3 = g + N1 * b_p * mi + N2 * p5 - p7
            f4 = s_T + p9 + p10 - p11

            s2 = sqrt(p2); s3 = sqrt(p3); s4 = sqrt(p4); s5 = sqrt(p5)
            s6 = sqrt(p6); s7 = sqrt(p7); s9 = sqrt(p9); s10 = sqrt(p10)
            s11 = sqrt(p11)

            w1 = (s1 * noise[j, 0] - s2 * noise[j, 1] - s3 * noise[j, 2]) * sdt
            w2 = (s3 * noise[j, 2] - s4 * noise[j, 3] - s5 * noise[j, 4]) * sdt
            w3 = (N1 * s4 * noise[j, 3] + N2 * s5 * noise[j, 4] + s6 * noise[j, 5] - s7 * noise[j, 6]) * sdt
            w4 = (s8 * noise[j, 7] + s9 * noise[j, 8] + s10 * noise[j, 9] - s11 * noise[j, 10]) * sdt

            mu_n = mu + f1 * dt + w1
            mi_n = mi + f2 * dt + w2
            bb_n = bb + f3 * dt + w3
            tt_n = tt + f4 * dt + w4

            d_n = delta + a0 * (cs0 - delta) * dt + g0 * delta * noise[j, 11] * sdt
            b_n = b_p + a1 * (cs1 - b_p) * dt + g1 * b_p * noise[j, 12] * sdt
            gm_n = gamma + a2 * (cs2 - gamma) * dt + g2 * gamma * noise[j, 13] * sdt
            e_n = eta + a3 * (cs3 - eta) * dt + g3 * eta * noise[j, 14] * sdt

            if not (isfinite(mu_n) and isfinite(mi_n) and isfinite(bb_n) and isfinite(tt_n)
                    and isfinite(d_n) and isfinite(b_n) and isfinite(gm_n) and isfinite(e_n)):
                status = 1
                done = j
                break

            mu = mu_n if mu_n > 0.0 else 0.0
            mi = mi_n if mi_n > 0.0 else 0.0
            bb = bb_n if bb_n > 0.0 else 0.0
            tt = tt_n if tt_n > 0.0 else 0.0
            delta = d_n if d_n > fl0 else fl0
            b_p = b_n if b_n > fl1 else fl1
            gamma = gm_n if gm_n > fl2 else fl2
            eta = e_n if e_n > fl3 else fl3

            if bb == 0.0:
                if bzero_j < 0:
                    bzero_j = j
                if absorbed_j < 0 and mi == 0.0:
                    absorbed_j = j
            step = step0 + j + 1
            if step % stride == 0:
                row = step / stride - 1
                out[row, 0] = mu; out[row, 1] = mi; out[row, 2] = bb; out[row, 3] = tt
                out_env[row, 0] = delta; out_env[row, 1] = b_p
                out_env[row, 2] = gamma; out_env[row, 3] = eta

    y[0] = mu; y[1] = mi; y[2] = bb; y[3] = tt
    live[0] = delta; live[1] = b_p; live[2] = gamma; live[3] = eta
    return status, done, bzero_j, absorbed_j
