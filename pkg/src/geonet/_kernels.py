"""Compiled numerical kernels.

A surface is passed to every kernel as the tuple
``sd = (kind, params, ops, vals, offsets, domain)``:

* ``kind`` selects the analytic family (see the ``KIND_*`` constants),
* ``params`` holds the family parameters,
* ``ops``/``vals``/``offsets`` hold the postfix programs of a user metric
  (g11, g12, g22), empty for built-in families,
* ``domain`` is ``[shape, a, b, c, d, v_period]`` with shape 0 an open
  rectangle ``a < u < b, c < v < d`` and shape 1 an open disk centred at
  ``(a, b)`` of radius ``c``.

Geodesic and Jacobi states are 6-vectors ``(u, v, u', v', j, j')`` in
arc length.
"""

import math

import numpy as np
from numba import njit

KIND_PLANE = 0
KIND_SPHERE = 1
KIND_SPHERE_STEREO = 2
KIND_HYPERBOLIC = 3
KIND_SPHEROID = 4
KIND_USER = 5

STATUS_OK = 0
STATUS_EXIT = 1
STATUS_UNDERFLOW = 2
STATUS_MAXSTEPS = 3

NEWTON_OK = 0
NEWTON_SHOOT_FAILED = 1
NEWTON_STALLED = 2
NEWTON_SINGULAR = 3
NEWTON_MAXITER = 4


# ---------------------------------------------------------------- user metrics

@njit(cache=True)
def _rpn(ops, vals, lo, hi, u, v):
    stack = np.empty(hi - lo + 1)
    sp = 0
    for i in range(lo, hi):
        op = ops[i]
        if op == 0:
            stack[sp] = vals[i]
            sp += 1
        elif op == 1:
            stack[sp] = u
            sp += 1
        elif op == 2:
            stack[sp] = v
            sp += 1
        elif op <= 7:
            b = stack[sp - 1]
            a = stack[sp - 2]
            sp -= 1
            if op == 3:
                r = a + b
            elif op == 4:
                r = a - b
            elif op == 5:
                r = a * b
            elif op == 6:
                r = a / b if b != 0.0 else np.nan
            else:
                if a < 0.0 and b != math.floor(b):
                    r = np.nan
                elif a == 0.0 and b < 0.0:
                    r = np.nan
                else:
                    r = a ** b
            stack[sp - 1] = r
        else:
            a = stack[sp - 1]
            if op == 8:
                r = -a
            elif op == 9:
                r = math.sin(a)
            elif op == 10:
                r = math.cos(a)
            elif op == 11:
                r = math.sinh(a)
            elif op == 12:
                r = math.cosh(a)
            elif op == 13:
                r = math.exp(a)
            else:
                r = math.sqrt(a) if a >= 0.0 else np.nan
            stack[sp - 1] = r
    return stack[0]


@njit(cache=True)
def _user_metric(sd, u, v):
    ops = sd[2]
    vals = sd[3]
    offs = sd[4]
    return (_rpn(ops, vals, offs[0], offs[1], u, v),
            _rpn(ops, vals, offs[1], offs[2], u, v),
            _rpn(ops, vals, offs[2], offs[3], u, v))


@njit(cache=True)
def _user_partials(sd, u, v):
    hu = 1e-5 * (1.0 + abs(u))
    hv = 1e-5 * (1.0 + abs(v))
    ep, fp, gp = _user_metric(sd, u + hu, v)
    em, fm, gm = _user_metric(sd, u - hu, v)
    Eu = (ep - em) / (2 * hu)
    Fu = (fp - fm) / (2 * hu)
    Gu = (gp - gm) / (2 * hu)
    ep, fp, gp = _user_metric(sd, u, v + hv)
    em, fm, gm = _user_metric(sd, u, v - hv)
    Ev = (ep - em) / (2 * hv)
    Fv = (fp - fm) / (2 * hv)
    Gv = (gp - gm) / (2 * hv)
    return Eu, Ev, Fu, Fv, Gu, Gv


@njit(cache=True)
def _christoffel_from_partials(E, F, G, Eu, Ev, Fu, Fv, Gu, Gv):
    D2 = 2.0 * (E * G - F * F)
    g111 = (G * Eu - 2 * F * Fu + F * Ev) / D2
    g112 = (G * Ev - F * Gu) / D2
    g122 = (2 * G * Fv - G * Gu - F * Gv) / D2
    g211 = (2 * E * Fu - E * Ev - F * Eu) / D2
    g212 = (E * Gu - F * Ev) / D2
    g222 = (E * Gv - 2 * F * Fv + F * Gu) / D2
    return g111, g112, g122, g211, g212, g222


@njit(cache=True)
def _user_curvature(sd, u, v):
    # Brioschi formula; second differences need a wider step than first ones
    E, F, G = _user_metric(sd, u, v)
    Eu, Ev, Fu, Fv, Gu, Gv = _user_partials(sd, u, v)
    hu = 1e-4 * (1.0 + abs(u))
    hv = 1e-4 * (1.0 + abs(v))
    Ep, _, _ = _user_metric(sd, u, v + hv)
    Em, _, _ = _user_metric(sd, u, v - hv)
    Evv = (Ep - 2 * E + Em) / (hv * hv)
    _, _, Gp = _user_metric(sd, u + hu, v)
    _, _, Gm = _user_metric(sd, u - hu, v)
    Guu = (Gp - 2 * G + Gm) / (hu * hu)
    _, f1, _ = _user_metric(sd, u + hu, v + hv)
    _, f2, _ = _user_metric(sd, u + hu, v - hv)
    _, f3, _ = _user_metric(sd, u - hu, v + hv)
    _, f4, _ = _user_metric(sd, u - hu, v - hv)
    Fuv = (f1 - f2 - f3 + f4) / (4 * hu * hv)
    a11 = -0.5 * Evv + Fuv - 0.5 * Guu
    a12 = 0.5 * Eu
    a13 = Fu - 0.5 * Ev
    a21 = Fv - 0.5 * Gu
    a31 = 0.5 * Gv
    det1 = (a11 * (E * G - F * F) - a12 * (a21 * G - F * a31) + a13 * (a21 * F - E * a31))
    b12 = 0.5 * Ev
    b13 = 0.5 * Gu
    det2 = (-b12 * (b12 * G - F * b13) + b13 * (b12 * F - E * b13))
    D = E * G - F * F
    return (det1 - det2) / (D * D)


# ------------------------------------------------------- pointwise geometry

@njit(cache=True)
def metric(sd, u, v):
    kind = sd[0]
    p = sd[1]
    if kind == KIND_PLANE:
        return 1.0, 0.0, 1.0
    if kind == KIND_SPHERE:
        R2 = p[0] * p[0]
        s = math.sin(u)
        return R2, 0.0, R2 * s * s
    if kind == KIND_SPHERE_STEREO:
        R2 = p[0] * p[0]
        lam = 2.0 * R2 / (R2 + u * u + v * v)
        return lam * lam, 0.0, lam * lam
    if kind == KIND_HYPERBOLIC:
        lam = 2.0 * p[0] / (1.0 - u * u - v * v)
        return lam * lam, 0.0, lam * lam
    if kind == KIND_SPHEROID:
        a = p[0]
        c = p[1]
        s = math.sin(u)
        co = math.cos(u)
        return a * a * co * co + c * c * s * s, 0.0, a * a * s * s
    return _user_metric(sd, u, v)


@njit(cache=True)
def christoffel(sd, u, v):
    """Return (G^1_11, G^1_12, G^1_22, G^2_11, G^2_12, G^2_22)."""
    kind = sd[0]
    p = sd[1]
    if kind == KIND_PLANE:
        return 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
    if kind == KIND_SPHERE:
        s = math.sin(u)
        co = math.cos(u)
        return 0.0, 0.0, -s * co, 0.0, co / s, 0.0
    if kind == KIND_SPHERE_STEREO or kind == KIND_HYPERBOLIC:
        # conformal metric exp(2f) (du^2 + dv^2)
        r2 = u * u + v * v
        if kind == KIND_SPHERE_STEREO:
            den = p[0] * p[0] + r2
            fu = -2.0 * u / den
            fv = -2.0 * v / den
        else:
            den = 1.0 - r2
            fu = 2.0 * u / den
            fv = 2.0 * v / den
        return fu, fv, -fu, -fv, fu, fv
    if kind == KIND_SPHEROID:
        a = p[0]
        c = p[1]
        s = math.sin(u)
        co = math.cos(u)
        E = a * a * co * co + c * c * s * s
        Eu = 2.0 * (c * c - a * a) * s * co
        Gu = 2.0 * a * a * s * co
        G = a * a * s * s
        return Eu / (2 * E), 0.0, -Gu / (2 * E), 0.0, Gu / (2 * G), 0.0
    E, F, G = _user_metric(sd, u, v)
    Eu, Ev, Fu, Fv, Gu, Gv = _user_partials(sd, u, v)
    return _christoffel_from_partials(E, F, G, Eu, Ev, Fu, Fv, Gu, Gv)


@njit(cache=True)
def curvature(sd, u, v):
    kind = sd[0]
    p = sd[1]
    if kind == KIND_PLANE:
        return 0.0
    if kind == KIND_SPHERE or kind == KIND_SPHERE_STEREO:
        return 1.0 / (p[0] * p[0])
    if kind == KIND_HYPERBOLIC:
        return -1.0 / (p[0] * p[0])
    if kind == KIND_SPHEROID:
        a = p[0]
        c = p[1]
        s = math.sin(u)
        co = math.cos(u)
        E = a * a * co * co + c * c * s * s
        return c * c / (E * E)
    return _user_curvature(sd, u, v)


@njit(cache=True)
def in_domain(sd, u, v):
    d = sd[5]
    if not (math.isfinite(u) and math.isfinite(v)):
        return False
    if d[0] == 0.0:
        return d[1] < u < d[2] and d[3] < v < d[4]
    du = u - d[1]
    dv = v - d[2]
    return du * du + dv * dv < d[3] * d[3]


@njit(cache=True)
def wrap_dv(sd, dv):
    period = sd[5][5]
    if period > 0.0:
        return dv - period * np.round(dv / period)
    return dv


@njit(cache=True)
def frame_direction(sd, u, v, alpha):
    """Unit vector at angle ``alpha`` in the Gram-Schmidt frame of (d_u, d_v)."""
    g11, g12, g22 = metric(sd, u, v)
    det = g11 * g22 - g12 * g12
    s1 = 1.0 / math.sqrt(g11)
    s2 = 1.0 / math.sqrt(g11 * det)
    ca = math.cos(alpha)
    sa = math.sin(alpha)
    return ca * s1 - sa * s2 * g12, sa * s2 * g11


@njit(cache=True)
def frame_angle(sd, u, v, xu, xv):
    """Inverse of frame_direction: angle and g-norm of the vector (xu, xv)."""
    g11, g12, g22 = metric(sd, u, v)
    det = g11 * g22 - g12 * g12
    c1 = (g11 * xu + g12 * xv) / math.sqrt(g11)
    c2 = xv * math.sqrt(det / g11)
    return math.atan2(c2, c1), math.hypot(c1, c2)


@njit(cache=True)
def rot90(sd, u, v, xu, xv):
    g11, g12, g22 = metric(sd, u, v)
    sq = math.sqrt(g11 * g22 - g12 * g12)
    return -(g12 * xu + g22 * xv) / sq, (g11 * xu + g12 * xv) / sq


@njit(cache=True)
def metric_many(sd, us, vs):
    out = np.empty((us.shape[0], 3))
    for i in range(us.shape[0]):
        out[i, 0], out[i, 1], out[i, 2] = metric(sd, us[i], vs[i])
    return out


@njit(cache=True)
def christoffel_many(sd, us, vs):
    out = np.empty((us.shape[0], 6))
    for i in range(us.shape[0]):
        g = christoffel(sd, us[i], vs[i])
        for k in range(6):
            out[i, k] = g[k]
    return out


@njit(cache=True)
def curvature_many(sd, us, vs):
    out = np.empty(us.shape[0])
    for i in range(us.shape[0]):
        out[i] = curvature(sd, us[i], vs[i])
    return out


@njit(cache=True)
def in_domain_many(sd, us, vs):
    out = np.empty(us.shape[0], dtype=np.bool_)
    for i in range(us.shape[0]):
        out[i] = in_domain(sd, us[i], vs[i])
    return out


# ------------------------------------------------------------ integration

@njit(cache=True)
def rhs(sd, y, jac, f):
    u = y[0]
    v = y[1]
    du = y[2]
    dv = y[3]
    g111, g112, g122, g211, g212, g222 = christoffel(sd, u, v)
    f[0] = du
    f[1] = dv
    f[2] = -(g111 * du * du + 2.0 * g112 * du * dv + g122 * dv * dv)
    f[3] = -(g211 * du * du + 2.0 * g212 * du * dv + g222 * dv * dv)
    if jac:
        f[4] = y[5]
        f[5] = -curvature(sd, u, v) * y[4]
    else:
        f[4] = 0.0
        f[5] = 0.0


_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


@njit(cache=True)
def integrate(sd, y0, t_end, rtol, atol, max_step, jac, mode, stops):
    """Dormand-Prince 5(4) from t=0 to ``t_end``.

    ``mode`` 0 records nothing, 1 records every accepted step, 2 records only
    the start and the times in ``stops`` (which are always landed on exactly).
    Returns (status, t, y, T, Y, F) with F the derivative at each record.
    """
    n_act = 6 if jac else 4
    y = y0.copy()
    K = np.empty((7, 6))
    ytmp = np.empty(6)
    ynew = np.empty(6)
    rhs(sd, y, jac, K[0])
    cap = 64 if mode != 0 else 1
    T = np.empty(cap)
    Y = np.empty((cap, 6))
    F = np.empty((cap, 6))
    n = 0
    if mode != 0:
        T[0] = 0.0
        Y[0] = y
        F[0] = K[0]
        n = 1
    t = 0.0
    if t_end <= 0.0:
        return STATUS_OK, t, y, T[:n], Y[:n], F[:n]
    h = min(max_step, t_end, 0.05)
    h_min = 1e-13 * max(1.0, t_end)
    si = 0
    steps = 0
    while t < t_end:
        steps += 1
        if steps > 200000:
            return STATUS_MAXSTEPS, t, y, T[:n], Y[:n], F[:n]
        while si < stops.shape[0] and stops[si] <= t:
            si += 1
        target = stops[si] if si < stops.shape[0] and stops[si] < t_end else t_end
        h = min(h, max_step)
        h_prop = h
        hit = False
        if t + h >= target - 1e-14 * max(1.0, abs(target)):
            h = target - t
            hit = True
        for s in range(1, 7):
            for i in range(6):
                acc = 0.0
                for r in range(s):
                    acc += _A[s, r] * K[r, i]
                ytmp[i] = y[i] + h * acc
            rhs(sd, ytmp, jac, K[s])
        # the 7th stage point is the 5th-order solution (FSAL)
        for i in range(6):
            ynew[i] = ytmp[i]
        err = 0.0
        finite = True
        for i in range(n_act):
            e = 0.0
            for r in range(7):
                e += _E[r] * K[r, i]
            e *= h
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            err += (e / sc) ** 2
            if not math.isfinite(ynew[i]) or not math.isfinite(K[6, i]):
                finite = False
        err = math.sqrt(err / n_act)
        if not finite or not math.isfinite(err) or not in_domain(sd, ynew[0], ynew[1]):
            h = 0.25 * h
            if h < h_min:
                return STATUS_EXIT, t, y, T[:n], Y[:n], F[:n]
            continue
        if err <= 1.0:
            t = target if hit else t + h
            for i in range(6):
                y[i] = ynew[i]
                K[0, i] = K[6, i]
            if mode == 1 or (mode == 2 and hit):
                if n == T.shape[0]:
                    T2 = np.empty(2 * n)
                    Y2 = np.empty((2 * n, 6))
                    F2 = np.empty((2 * n, 6))
                    T2[:n] = T
                    Y2[:n] = Y
                    F2[:n] = F
                    T = T2
                    Y = Y2
                    F = F2
                T[n] = t
                Y[n] = y
                F[n] = K[0]
                n += 1
            if hit:
                h = h_prop
            else:
                h = h * (5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2)))
        else:
            h = h * max(0.2, 0.9 * err ** -0.2)
            if h < h_min:
                return STATUS_UNDERFLOW, t, y, T[:n], Y[:n], F[:n]
    return STATUS_OK, t, y, T[:n], Y[:n], F[:n]


@njit(cache=True)
def shoot_state(sd, pu, pv, alpha, length, jac, rtol, atol, max_step):
    du, dv = frame_direction(sd, pu, pv, alpha)
    y0 = np.empty(6)
    y0[0] = pu
    y0[1] = pv
    y0[2] = du
    y0[3] = dv
    y0[4] = 0.0
    y0[5] = 1.0
    st, t, y, T, Y, F = integrate(sd, y0, length, rtol, atol, max_step, jac, 0, np.empty(0))
    return st, t, y


@njit(cache=True)
def _miss(sd, pu, pv, qu, qv, alpha, length, rtol, atol, max_step):
    st, t, y = shoot_state(sd, pu, pv, alpha, length, True, rtol, atol, max_step)
    if st != STATUS_OK:
        return False, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
    mu = y[0] - qu
    mv = wrap_dv(sd, y[1] - qv)
    ru, rv = rot90(sd, y[0], y[1], y[2], y[3])
    return True, mu, mv, y[4] * ru, y[2], y[4] * rv, y[3]


@njit(cache=True)
def log_map(sd, pu, pv, qu, qv, alpha, length, tol, max_len, max_iter, rtol, atol, max_step):
    """Newton shooting on (alpha, length) so that exp_p(length * dir(alpha)) = q.

    The Jacobian column for alpha is j(L) times the rotated end tangent, with j
    the scalar Jacobi field j(0)=0, j'(0)=1; the column for L is the end
    tangent itself. Returns (status, alpha, length, residual, iterations).
    """
    ok, mu, mv, a11, a12, a21, a22 = _miss(sd, pu, pv, qu, qv, alpha, length,
                                           rtol, atol, max_step)
    if not ok:
        return NEWTON_SHOOT_FAILED, alpha, length, np.inf, 0
    r = math.hypot(mu, mv)
    cap = 2.0 * max_len if max_len > 0.0 else np.inf
    for it in range(max_iter):
        if r <= tol:
            # one polishing step: quadratic convergence makes it nearly free accuracy
            det = a11 * a22 - a12 * a21
            if r > 1e-3 * tol and det != 0.0 and math.isfinite(det):
                a2 = alpha - (a22 * mu - a12 * mv) / det
                l2 = length - (-a21 * mu + a11 * mv) / det
                if 0.0 < l2 <= cap:
                    ok, m2u, m2v, b11, b12, b21, b22 = _miss(sd, pu, pv, qu, qv, a2, l2,
                                                             rtol, atol, max_step)
                    if ok and math.hypot(m2u, m2v) < r:
                        return NEWTON_OK, a2, l2, math.hypot(m2u, m2v), it + 1
            return NEWTON_OK, alpha, length, r, it
        det = a11 * a22 - a12 * a21
        if det == 0.0 or not math.isfinite(det):
            return NEWTON_SINGULAR, alpha, length, r, it
        da = -(a22 * mu - a12 * mv) / det
        dl = -(-a21 * mu + a11 * mv) / det
        if abs(da) > 1.0:
            scale = 1.0 / abs(da)
            da *= scale
            dl *= scale
        lam = 1.0
        accepted = False
        for _ in range(40):
            a2 = alpha + lam * da
            l2 = length + lam * dl
            if l2 <= 0.0 or l2 > cap:
                lam *= 0.5
                continue
            ok, m2u, m2v, b11, b12, b21, b22 = _miss(sd, pu, pv, qu, qv, a2, l2,
                                                     rtol, atol, max_step)
            if ok:
                r2 = math.hypot(m2u, m2v)
                if r2 < r:
                    alpha = a2
                    length = l2
                    mu = m2u
                    mv = m2v
                    a11 = b11
                    a12 = b12
                    a21 = b21
                    a22 = b22
                    r = r2
                    accepted = True
                    break
            lam *= 0.5
        if not accepted:
            return NEWTON_STALLED, alpha, length, r, it
    if r <= tol:
        return NEWTON_OK, alpha, length, r, max_iter
    return NEWTON_MAXITER, alpha, length, r, max_iter
