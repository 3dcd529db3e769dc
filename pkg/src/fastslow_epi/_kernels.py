"""Scalar numeric kernels: the fast-frame vector field and the orbit integrator.

The state is always carried as three scalars ``(s, x, w)`` where ``x`` is I in
the linear chart or ln I in the log chart. Two-dimensional models carry
``w = 0`` with kappa = nu = 0, which keeps W identically zero.

Parameter vector layout (float64[7]): beta, gamma, xi, kappa, nu, delta, eps.
"""
import math

import numpy as np

from ._accel import jit

BETA, GAMMA, XI, KAPPA, NU, DELTA, EPS = range(7)

EV_I_LEVEL = 0
EV_S_LEVEL = 1
EV_S_NULLCLINE = 2

STATUS_HORIZON = 0
STATUS_STIFF = 1
STATUS_MAX_STEPS = 2
STATUS_TERMINAL = 3

# Dormand-Prince 5(4)
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                           49.0 / 176.0, -5103.0 / 18656.0)
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                          -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)


@jit
def rhs(p, scale, logc, s, x, w):
    beta = p[0]
    gamma = p[1]
    xi = p[2]
    kappa = p[3]
    nu = p[4]
    delta = p[5]
    eps = p[6]
    if logc:
        i = math.exp(x)
    else:
        i = x
    ds = -beta * s * i + eps * (2.0 * kappa * w + xi * (1.0 - s) + delta * (1.0 - s - i))
    growth = beta * s - gamma - eps * xi
    if logc:
        dx = growth
    else:
        dx = i * growth
    dw = -nu * beta * i * w + eps * (2.0 * kappa * (1.0 - s - i - w) - 2.0 * kappa * w - xi * w)
    return ds * scale, dx * scale, dw * scale


@jit
def dp_step(p, scale, logc, s, x, w, k1s, k1x, k1w, h):
    k2s, k2x, k2w = rhs(p, scale, logc,
                        s + h * A21 * k1s, x + h * A21 * k1x, w + h * A21 * k1w)
    k3s, k3x, k3w = rhs(p, scale, logc,
                        s + h * (A31 * k1s + A32 * k2s),
                        x + h * (A31 * k1x + A32 * k2x),
                        w + h * (A31 * k1w + A32 * k2w))
    k4s, k4x, k4w = rhs(p, scale, logc,
                        s + h * (A41 * k1s + A42 * k2s + A43 * k3s),
                        x + h * (A41 * k1x + A42 * k2x + A43 * k3x),
                        w + h * (A41 * k1w + A42 * k2w + A43 * k3w))
    k5s, k5x, k5w = rhs(p, scale, logc,
                        s + h * (A51 * k1s + A52 * k2s + A53 * k3s + A54 * k4s),
                        x + h * (A51 * k1x + A52 * k2x + A53 * k3x + A54 * k4x),
                        w + h * (A51 * k1w + A52 * k2w + A53 * k3w + A54 * k4w))
    k6s, k6x, k6w = rhs(p, scale, logc,
                        s + h * (A61 * k1s + A62 * k2s + A63 * k3s + A64 * k4s + A65 * k5s),
                        x + h * (A61 * k1x + A62 * k2x + A63 * k3x + A64 * k4x + A65 * k5x),
                        w + h * (A61 * k1w + A62 * k2w + A63 * k3w + A64 * k4w + A65 * k5w))
    ns = s + h * (B1 * k1s + B3 * k3s + B4 * k4s + B5 * k5s + B6 * k6s)
    nx = x + h * (B1 * k1x + B3 * k3x + B4 * k4x + B5 * k5x + B6 * k6x)
    nw = w + h * (B1 * k1w + B3 * k3w + B4 * k4w + B5 * k5w + B6 * k6w)
    k7s, k7x, k7w = rhs(p, scale, logc, ns, nx, nw)
    es = h * (E1 * k1s + E3 * k3s + E4 * k4s + E5 * k5s + E6 * k6s + E7 * k7s)
    ex = h * (E1 * k1x + E3 * k3x + E4 * k4x + E5 * k5x + E6 * k6x + E7 * k7x)
    ew = h * (E1 * k1w + E3 * k3w + E4 * k4w + E5 * k5w + E6 * k6w + E7 * k7w)
    return ns, nx, nw, k7s, k7x, k7w, es, ex, ew


@jit
def event_g(etype, level, p, logc, s, x, w):
    if etype == EV_I_LEVEL:
        if logc:
            if level <= 0.0:
                return 1.0
            return x - math.log(level)
        return x - level
    elif etype == EV_S_LEVEL:
        return s - level
    ds, dx, dw = rhs(p, 1.0, logc, s, x, w)
    return ds


@jit
def _crosses(g0, g1, direction):
    if g0 == 0.0:
        return False
    if g0 < 0.0 and g1 >= 0.0:
        return direction >= 0
    if g0 > 0.0 and g1 <= 0.0:
        return direction <= 0
    return False


@jit
def _refine(etype, level, p, scale, logc, s, x, w, ks, kx, kw, h, g0, g1, tol):
    # Illinois regula falsi on the step fraction; states re-stepped from the step start.
    a = 0.0
    b = h
    ga = g0
    gb = g1
    side = 0
    for it in range(200):
        if b - a <= tol:
            break
        if it % 4 == 3 or gb == ga:
            m = 0.5 * (a + b)
        else:
            m = b - gb * (b - a) / (gb - ga)
            if not (a < m < b):
                m = 0.5 * (a + b)
        ms, mx, mw, _, _, _, _, _, _ = dp_step(p, scale, logc, s, x, w, ks, kx, kw, m)
        gm = event_g(etype, level, p, logc, ms, mx, mw)
        if gm == 0.0:
            a = m
            b = m
            break
        if (gm < 0.0) == (ga < 0.0):
            a = m
            ga = gm
            if side == -1:
                gb *= 0.5
            side = -1
        else:
            b = m
            gb = gm
            if side == 1:
                ga *= 0.5
            side = 1
    return b


@jit
def _rms_scaled(ndim, ys, yx, yw, ss, sx, sw):
    acc = (ys / ss) ** 2 + (yx / sx) ** 2
    if ndim > 2:
        acc += (yw / sw) ** 2
    return math.sqrt(acc / ndim)


@jit
def _initial_step(p, scale, logc, ndim, s, x, w, fs, fx, fw, rtol, atol):
    ss = atol + rtol * abs(s)
    sx = atol + rtol * abs(x)
    sw = atol + rtol * abs(w)
    d0 = _rms_scaled(ndim, s, x, w, ss, sx, sw)
    d1 = _rms_scaled(ndim, fs, fx, fw, ss, sx, sw)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    f1s, f1x, f1w = rhs(p, scale, logc, s + h0 * fs, x + h0 * fx, w + h0 * fw)
    d2 = _rms_scaled(ndim, f1s - fs, f1x - fx, f1w - fw, ss, sx, sw) / h0
    dm = max(d1, d2)
    if dm <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / dm) ** 0.2
    return min(100.0 * h0, h1)


@jit
def _store(T, Y, n, t, logc, s, x, w):
    if n >= T.shape[0]:
        T2 = np.empty(2 * T.shape[0])
        Y2 = np.empty((2 * T.shape[0], 4))
        T2[:n] = T[:n]
        Y2[:n] = Y[:n]
        T = T2
        Y = Y2
    T[n] = t
    Y[n, 0] = s
    Y[n, 2] = w
    if logc:
        Y[n, 1] = math.exp(x)
        Y[n, 3] = x
    else:
        Y[n, 1] = x
        Y[n, 3] = math.log(x) if x > 0.0 else -np.inf
    return T, Y


@jit
def _store_event(TE, YE, IE, n, t, j, logc, s, x, w):
    if n >= TE.shape[0]:
        TE2 = np.empty(2 * TE.shape[0])
        YE2 = np.empty((2 * TE.shape[0], 4))
        IE2 = np.empty(2 * TE.shape[0], np.int64)
        TE2[:n] = TE[:n]
        YE2[:n] = YE[:n]
        IE2[:n] = IE[:n]
        TE = TE2
        YE = YE2
        IE = IE2
    TE[n] = t
    IE[n] = j
    YE[n, 0] = s
    YE[n, 2] = w
    if logc:
        YE[n, 1] = math.exp(x)
        YE[n, 3] = x
    else:
        YE[n, 1] = x
        YE[n, 3] = math.log(x) if x > 0.0 else -np.inf
    return TE, YE, IE


@jit
def integrate_kernel(p, scale, ndim, s0, i0, w0, t0, t_end, rtol, atol, hmax, h_init,
                     log_thr, ev_type, ev_level, ev_dir, ev_term, max_steps, event_tol):
    """Integrate from (s0, i0, w0) over [t0, t_end].

    Returns (status, n_accepted, n_rejected, T, Y, TE, YE, IE, h_last) where Y
    and YE rows are (S, I, W, ln I).
    """
    T = np.empty(1024)
    Y = np.empty((1024, 4))
    TE = np.empty(16)
    YE = np.empty((16, 4))
    IE = np.empty(16, np.int64)
    n = 0
    ne = 0
    nev = ev_type.shape[0]

    s = s0
    x = i0
    w = w0
    logc = False
    up_thr = 2.0 * log_thr
    if log_thr > 0.0 and 0.0 < x < log_thr:
        x = math.log(x)
        logc = True

    t = t0
    T, Y = _store(T, Y, n, t, logc, s, x, w)
    n += 1
    fs, fx, fw = rhs(p, scale, logc, s, x, w)

    g_old = np.empty(nev)
    g_new = np.empty(nev)
    theta = np.empty(nev)
    hit = np.zeros(nev, np.bool_)
    for j in range(nev):
        g = event_g(ev_type[j], ev_level[j], p, logc, s, x, w)
        if ev_type[j] != EV_S_NULLCLINE and abs(g) <= 1e-13 * max(1.0, abs(ev_level[j])):
            g = 0.0
        g_old[j] = g

    if h_init > 0.0:
        h = h_init
    else:
        h = _initial_step(p, scale, logc, ndim, s, x, w, fs, fx, fw, rtol, atol)
    h = min(h, hmax)

    status = STATUS_HORIZON
    n_acc = 0
    n_rej = 0
    err_prev = 1e-4
    rejected = False
    machine = 2.220446049250313e-16

    while t < t_end:
        if n_acc + n_rej >= max_steps:
            status = STATUS_MAX_STEPS
            break
        if log_thr > 0.0:
            switched = False
            if (not logc) and 0.0 < x < log_thr:
                x = math.log(x)
                logc = True
                switched = True
            elif logc and x > math.log(up_thr):
                x = math.exp(x)
                logc = False
                switched = True
            if switched:
                fs, fx, fw = rhs(p, scale, logc, s, x, w)
                for j in range(nev):
                    if g_old[j] != 0.0:
                        g_old[j] = event_g(ev_type[j], ev_level[j], p, logc, s, x, w)

        remaining = t_end - t
        last = False
        if h >= remaining:
            h = remaining
            last = True
        if h <= 8.0 * machine * max(1.0, abs(t)):
            if last:
                break
            status = STATUS_STIFF
            break

        ns, nx, nw, ks, kx, kw, es, ex, ew = dp_step(p, scale, logc, s, x, w, fs, fx, fw, h)
        ss = atol + rtol * max(abs(s), abs(ns))
        sx = atol + rtol * max(abs(x), abs(nx))
        sw = atol + rtol * max(abs(w), abs(nw))
        err = _rms_scaled(ndim, es, ex, ew, ss, sx, sw)
        if not (math.isfinite(err) and math.isfinite(ns) and math.isfinite(nx) and math.isfinite(nw)):
            h *= 0.2
            n_rej += 1
            rejected = True
            continue
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            n_rej += 1
            rejected = True
            continue

        n_acc += 1
        t_new = t_end if last else t + h

        first_term = -1
        best = np.inf
        for j in range(nev):
            g_new[j] = event_g(ev_type[j], ev_level[j], p, logc, ns, nx, nw)
            hit[j] = _crosses(g_old[j], g_new[j], ev_dir[j])
            if hit[j]:
                tol = max(event_tol, 4.0 * machine * max(1.0, abs(t)))
                theta[j] = _refine(ev_type[j], ev_level[j], p, scale, logc, s, x, w,
                                   fs, fx, fw, h, g_old[j], g_new[j], tol)
                if ev_term[j] != 0 and theta[j] < best:
                    best = theta[j]
                    first_term = j

        # record events in time order, stopping at the first terminal one
        while True:
            jmin = -1
            tmin = np.inf
            for j in range(nev):
                if hit[j] and theta[j] < tmin:
                    tmin = theta[j]
                    jmin = j
            if jmin < 0:
                break
            if first_term >= 0 and tmin > best:
                break
            hit[jmin] = False
            es_, ex_, ew_, _, _, _, _, _, _ = dp_step(p, scale, logc, s, x, w, fs, fx, fw, tmin)
            TE, YE, IE = _store_event(TE, YE, IE, ne, t + tmin, jmin, logc, es_, ex_, ew_)
            ne += 1
            if jmin == first_term:
                break

        if first_term >= 0:
            ts, tx, tw, _, _, _, _, _, _ = dp_step(p, scale, logc, s, x, w, fs, fx, fw, best)
            t_ev = t + best
            if t_ev > T[n - 1]:
                T, Y = _store(T, Y, n, t_ev, logc, ts, tx, tw)
                n += 1
            else:
                T, Y = _store(T, Y, n - 1, t_ev, logc, ts, tx, tw)
            status = STATUS_TERMINAL
            break

        t = t_new
        s = ns
        x = nx
        w = nw
        fs = ks
        fx = kx
        fw = kw
        for j in range(nev):
            g_old[j] = g_new[j]
        T, Y = _store(T, Y, n, t, logc, s, x, w)
        n += 1

        if err == 0.0:
            fac = 5.0
        else:
            fac = 0.9 * err ** (-0.7 / 5.0) * err_prev ** (0.4 / 5.0)
            fac = min(5.0, max(0.2, fac))
        if rejected:
            fac = min(fac, 1.0)
        rejected = False
        err_prev = max(err, 1e-4)
        h = min(h * fac, hmax)

    return status, n_acc, n_rej, T[:n].copy(), Y[:n].copy(), TE[:ne].copy(), YE[:ne].copy(), IE[:ne].copy(), h
