"""Pure-Python Euler-Maruyama chunk kernels (reference implementation).

The compiled kernels in ``_em_cy`` mirror these functions expression for
expression; both must produce bit-identical floating-point results, so any
change to an arithmetic expression here must be copied there verbatim
(IEEE-754 double semantics, no reassociation, no fused multiply-add).

Chunk contract (both kernels):
  - ``y`` (4,) is advanced in place by one Euler-Maruyama step per noise row.
  - global step numbers are ``step0 + j + 1`` for row j; whenever that is a
    multiple of ``stride``, the post-step state is written to
    ``out[step//stride - 1]`` (and the post-step live parameters to
    ``out_env`` for the environmental kernel).
  - return ``(status, steps_done, bzero_j, absorbed_j)``: status 1 means a
    non-finite component appeared at local step ``steps_done`` (that step is
    not committed); ``bzero_j``/``absorbed_j`` are the first local step
    indices (0-based) after which B == 0, respectively M_i == 0 and B == 0,
    or -1.
"""

from __future__ import annotations

from math import isfinite, sqrt

BACKEND_NAME = "python"


def demographic_chunk(y, pvec, dt, noise, step0, stride, out):
    s_M = pvec[0]; s_T = pvec[1]; mu_M = pvec[2]; b_p = pvec[3]
    mu_T = pvec[4]; beta = pvec[5]; eta = pvec[6]; gamma = pvec[7]
    delta = pvec[8]; c_M = pvec[9]; c_B = pvec[10]; e_M = pvec[11]
    e_B = pvec[12]; c = pvec[13]; K = pvec[14]
    N1 = pvec[15]; N2 = pvec[16]; N3 = pvec[17]

    sdt = sqrt(dt)
    mu, mi, bb, tt = float(y[0]), float(y[1]), float(y[2]), float(y[3])
    rows = noise.tolist()
    m = len(rows)
    bzero_j = -1
    absorbed_j = -1
    s1 = sqrt(s_M)
    s8 = sqrt(s_T)

    for j in range(m):
        n = rows[j]
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

        w1 = (s1 * n[0] - s2 * n[1] - s3 * n[2]) * sdt
        w2 = (s3 * n[2] - s4 * n[3] - s5 * n[4]) * sdt
        w3 = (N1 * s4 * n[3] + N2 * s5 * n[4] + s6 * n[5] - s7 * n[6]) * sdt
        w4 = (s8 * n[7] + s9 * n[8] + s10 * n[9] - s11 * n[10]) * sdt

        mu_n = mu + f1 * dt + w1
        mi_n = mi + f2 * dt + w2
        bb_n = bb + f3 * dt + w3
        tt_n = tt + f4 * dt + w4
        if not (isfinite(mu_n) and isfinite(mi_n) and isfinite(bb_n) and isfinite(tt_n)):
            y[0] = mu; y[1] = mi; y[2] = bb; y[3] = tt
            return 1, j, bzero_j, absorbed_j
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
            row = step // stride - 1
            out[row, 0] = mu; out[row, 1] = mi; out[row, 2] = bb; out[row, 3] = tt

    y[0] = mu; y[1] = mi; y[2] = bb; y[3] = tt
    return 0, m, bzero_j, absorbed_j


def environmental_chunk(y, live, pvec, alpha, sigma, cs, dt, noise, step0, stride,
                        out, out_env):
    s_M = pvec[0]; s_T = pvec[1]; mu_M = pvec[2]; mu_T = pvec[4]
    beta = pvec[5]; c_M = pvec[9]; c_B = pvec[10]; e_M = pvec[11]
    e_B = pvec[12]; c = pvec[13]; K = pvec[14]
    N1 = pvec[15]; N2 = pvec[16]; N3 = pvec[17]
    a0 = alpha[0]; a1 = alpha[1]; a2 = alpha[2]; a3 = alpha[3]
    g0 = sigma[0]; g1 = sigma[1]; g2 = sigma[2]; g3 = sigma[3]
    cs0 = cs[0]; cs1 = cs[1]; cs2 = cs[2]; cs3 = cs[3]
    fl0 = 1e-12 * cs0; fl1 = 1e-12 * cs1; fl2 = 1e-12 * cs2; fl3 = 1e-12 * cs3

    sdt = sqrt(dt)
    mu, mi, bb, tt = float(y[0]), float(y[1]), float(y[2]), float(y[3])
    delta, b_p, gamma, eta = float(live[0]), float(live[1]), float(live[2]), float(live[3])
    rows = noise.tolist()
    m = len(rows)
    bzero_j = -1
    absorbed_j = -1
    s1 = sqrt(s_M)
    s8 = sqrt(s_T)

    for j in range(m):
        n = rows[j]
        # cell-state step with the live (pre-step) parameter values
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

        w1 = (s1 * n[0] - s2 * n[1] - s3 * n[2]) * sdt
        w2 = (s3 * n[2] - s4 * n[3] - s5 * n[4]) * sdt
        w3 = (N1 * s4 * n[3] + N2 * s5 * n[4] + s6 * n[5] - s7 * n[6]) * sdt
        w4 = (s8 * n[7] + s9 * n[8] + s10 * n[9] - s11 * n[10]) * sdt

        mu_n = mu + f1 * dt + w1
        mi_n = mi + f2 * dt + w2
        bb_n = bb + f3 * dt + w3
        tt_n = tt + f4 * dt + w4

        # mean-reverting parameter updates (noises 11-14), after the state step
        d_n = delta + a0 * (cs0 - delta) * dt + g0 * delta * n[11] * sdt
        b_n = b_p + a1 * (cs1 - b_p) * dt + g1 * b_p * n[12] * sdt
        gm_n = gamma + a2 * (cs2 - gamma) * dt + g2 * gamma * n[13] * sdt
        e_n = eta + a3 * (cs3 - eta) * dt + g3 * eta * n[14] * sdt

        if not (isfinite(mu_n) and isfinite(mi_n) and isfinite(bb_n) and isfinite(tt_n)
                and isfinite(d_n) and isfinite(b_n) and isfinite(gm_n) and isfinite(e_n)):
            y[0] = mu; y[1] = mi; y[2] = bb; y[3] = tt
            live[0] = delta; live[1] = b_p; live[2] = gamma; live[3] = eta
            return 1, j, bzero_j, absorbed_j

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
            row = step // stride - 1
            out[row, 0] = mu; out[row, 1] = mi; out[row, 2] = bb; out[row, 3] = tt
            out_env[row, 0] = delta; out_env[row, 1] = b_p
            out_env[row, 2] = gamma; out_env[row, 3] = eta

    y[0] = mu; y[1] = mi; y[2] = bb; y[3] = tt
    live[0] = delta; live[1] = b_p; live[2] = gamma; live[3] = eta
    return 0, m, bzero_j, absorbed_j
