"""Pure numpy implementations of the hot loops.

Used when the compiled ``_ckernels`` extension is unavailable or when
``SCALEWAVE_BACKEND=python``. Signatures and semantics match the Cython
module exactly; see :mod:`scalewave._backend`.
"""

import numpy as np

# Dormand-Prince 5(4) tableau with Shampine's quartic dense output.
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = -71 / 57600, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40
P = np.array(
    [
        [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0, 0, 0, 0],
        [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

SAFETY, FAC_MIN, FAC_MAX = 0.9, 0.2, 5.0
STATUS_OK, STATUS_UNDERFLOW, STATUS_MAX_STEPS = 0, 1, 2


def _mode_rhs(t, v, vd, rho2, mu, nu_sq):
    a = 1.0 / (1.0 + t)
    return vd, -rho2 * v - (mu * a) * vd - (nu_sq * a * a) * v


def _error_factor(err):
    with np.errstate(divide="ignore"):
        fac = SAFETY * np.power(err, -0.2)
    return np.where(err == 0.0, FAC_MAX, np.minimum(FAC_MAX, np.maximum(FAC_MIN, fac)))


def integrate_modes(rho, v0, vd0, mu, nu_sq, s, t_out, rtol, atol, h0, max_steps):
    """Integrate ``v'' + mu/(1+t) v' + (rho^2 + nu_sq/(1+t)^2) v = 0`` per mode.

    Every mode carries its own time, step size and error control; modes only
    share the loop counter. Returns ``(V, VD, status, nsteps)`` with ``V`` and
    ``VD`` of shape ``(len(rho), len(t_out))``.
    """
    rho = np.ascontiguousarray(rho, dtype=float)
    m, k = rho.size, len(t_out)
    t_out = np.ascontiguousarray(t_out, dtype=float)
    rho2 = rho * rho
    V = np.full((m, k), np.nan + 0j)
    VD = np.full((m, k), np.nan + 0j)
    status = np.zeros(m, dtype=np.int64)
    nsteps = np.zeros(m, dtype=np.int64)
    if m == 0 or k == 0:
        return V, VD, status, nsteps

    t_end = float(t_out[-1])
    t = np.full(m, float(s))
    h = np.broadcast_to(np.asarray(h0, dtype=float), (m,)).copy()
    y = np.array(v0, dtype=complex).copy()
    yd = np.array(vd0, dtype=complex).copy()
    atol = np.broadcast_to(np.asarray(atol, dtype=float), (m,)).copy()

    idx = np.zeros(m, dtype=np.int64)
    at_start = t_out <= s
    n0 = int(at_start.sum())
    if n0:
        V[:, :n0] = y[:, None]
        VD[:, :n0] = yd[:, None]
        idx[:] = n0
    k1v, k1d = _mode_rhs(t, y, yd, rho2, mu, nu_sq)
    k1v, k1d = np.array(k1v), np.array(k1d)
    rejected = np.zeros(m, dtype=bool)
    running = t < t_end

    while running.any():
        ii = np.flatnonzero(running)
        tt, hh = t[ii], h[ii]
        last = tt + hh >= t_end
        hh = np.where(last, t_end - tt, hh)
        r2 = rho2[ii]
        y0, d0 = y[ii], yd[ii]
        a1v, a1d = k1v[ii], k1d[ii]

        a2v, a2d = _mode_rhs(tt + C2 * hh, y0 + hh * (A21 * a1v), d0 + hh * (A21 * a1d), r2, mu, nu_sq)
        a3v, a3d = _mode_rhs(
            tt + C3 * hh, y0 + hh * (A31 * a1v + A32 * a2v), d0 + hh * (A31 * a1d + A32 * a2d), r2, mu, nu_sq
        )
        a4v, a4d = _mode_rhs(
            tt + C4 * hh,
            y0 + hh * (A41 * a1v + A42 * a2v + A43 * a3v),
            d0 + hh * (A41 * a1d + A42 * a2d + A43 * a3d),
            r2, mu, nu_sq,
        )
        a5v, a5d = _mode_rhs(
            tt + C5 * hh,
            y0 + hh * (A51 * a1v + A52 * a2v + A53 * a3v + A54 * a4v),
            d0 + hh * (A51 * a1d + A52 * a2d + A53 * a3d + A54 * a4d),
            r2, mu, nu_sq,
        )
        a6v, a6d = _mode_rhs(
            tt + hh,
            y0 + hh * (A61 * a1v + A62 * a2v + A63 * a3v + A64 * a4v + A65 * a5v),
            d0 + hh * (A61 * a1d + A62 * a2d + A63 * a3d + A64 * a4d + A65 * a5d),
            r2, mu, nu_sq,
        )
        y1 = y0 + hh * (B1 * a1v + B3 * a3v + B4 * a4v + B5 * a5v + B6 * a6v)
        d1 = d0 + hh * (B1 * a1d + B3 * a3d + B4 * a4d + B5 * a5d + B6 * a6d)
        t_new = np.where(last, t_end, tt + hh)
        a7v, a7d = _mode_rhs(t_new, y1, d1, r2, mu, nu_sq)

        ev = hh * (E1 * a1v + E3 * a3v + E4 * a4v + E5 * a5v + E6 * a6v + E7 * a7v)
        ed = hh * (E1 * a1d + E3 * a3d + E4 * a4d + E5 * a5d + E6 * a6d + E7 * a7d)
        at = atol[ii]
        sv = at + rtol * np.maximum(np.abs(y0), np.abs(y1))
        sd = at + rtol * np.maximum(np.abs(d0), np.abs(d1))
        err = np.maximum(np.abs(ev) / sv, np.abs(ed) / sd)
        ok = err <= 1.0
        fac = _error_factor(err)
        fac = np.where(ok & rejected[ii], np.minimum(fac, 1.0), fac)
        fac = np.where(~ok, np.minimum(fac, 1.0), fac)

        acc = ii[ok]
        if acc.size:
            Ks = (
                (a1v[ok], a1d[ok]), (None, None), (a3v[ok], a3d[ok]), (a4v[ok], a4d[ok]),
                (a5v[ok], a5d[ok]), (a6v[ok], a6d[ok]), (a7v[ok], a7d[ok]),
            )
            qv = [sum(P[j, c] * Ks[j][0] for j in (0, 2, 3, 4, 5, 6)) for c in range(4)]
            qd = [sum(P[j, c] * Ks[j][1] for j in (0, 2, 3, 4, 5, 6)) for c in range(4)]
            _fill_dense(
                V, VD, idx, acc, t_out, tt[ok], hh[ok], t_new[ok], y0[ok], d0[ok], y1[ok], d1[ok], qv, qd
            )
            t[acc] = t_new[ok]
            y[acc] = y1[ok]
            yd[acc] = d1[ok]
            k1v[acc] = a7v[ok]
            k1d[acc] = a7d[ok]
            nsteps[acc] += 1
        rejected[ii] = ~ok
        h[ii] = hh * fac

        done = t[ii] >= t_end
        tiny = (h[ii] < 1e-14 * np.maximum(1.0, np.abs(t[ii]))) & ~done
        over = (nsteps[ii] >= max_steps) & ~done
        status[ii[tiny]] = STATUS_UNDERFLOW
        status[ii[over & ~tiny]] = STATUS_MAX_STEPS
        running[ii] = ~(done | tiny | over)
    return V, VD, status, nsteps


def _fill_dense(V, VD, idx, acc, t_out, t0, hh, t1, y0, d0, y1, d1, qv, qd):
    k = t_out.size
    sel = np.arange(acc.size)
    while sel.size:
        j = idx[acc[sel]]
        valid = j < k
        sel, j = sel[valid], j[valid]
        if not sel.size:
            break
        hit = t_out[j] <= t1[sel]
        sel, j = sel[hit], j[hit]
        if not sel.size:
            break
        rows = acc[sel]
        exact_end = t_out[j] == t1[sel]
        theta = (t_out[j] - t0[sel]) / hh[sel]
        poly_v = hh[sel] * (
            qv[0][sel] * theta + qv[1][sel] * theta**2 + qv[2][sel] * theta**3 + qv[3][sel] * theta**4
        )
        poly_d = hh[sel] * (
            qd[0][sel] * theta + qd[1][sel] * theta**2 + qd[2][sel] * theta**3 + qd[3][sel] * theta**4
        )
        V[rows, j] = np.where(exact_end, y1[sel], y0[sel] + poly_v)
        VD[rows, j] = np.where(exact_end, d1[sel], d0[sel] + poly_d)
        idx[rows] = j + 1


# ---------------------------------------------------------------------------
# radial finite differences


def laplacian_coefficients(N, h, n):
    """Stencil weights ``(cm, cc, cp)`` of the radial Laplacian on ``r_i = i h``.

    Interior nodes use ``w_rr + (n-1)/r w_r`` with central differences; the
    axis row encodes the even-extension limit ``n w_rr``; the outer row uses a
    zero ghost value.
    """
    r = np.arange(N) * h
    cm = np.empty(N)
    cp = np.empty(N)
    inv = 1.0 / (h * h)
    cm[1:] = inv - (n - 1) / (2.0 * h * r[1:])
    cp[1:] = inv + (n - 1) / (2.0 * h * r[1:])
    cm[0] = 0.0
    cp[0] = 2.0 * n * inv
    cc = np.full(N, -2.0 * inv)
    cc[0] = -2.0 * n * inv
    cp[-1] = 0.0
    return cm, cc, cp


def _lap(w, cm, cc, cp, out):
    out[1:-1] = cm[1:-1] * w[:-2] + cc[1:-1] * w[1:-1] + cp[1:-1] * w[2:]
    out[0] = cc[0] * w[0] + cp[0] * w[1]
    out[-1] = cm[-1] * w[-2] + cc[-1] * w[-1]
    return out


def _wave_rhs(t, w, wt, z, mu, nu_sq, p, nonlinear, cm, cc, cp, dw, dwt):
    a = 1.0 / (1.0 + t)
    dw[:] = wt
    _lap(w, cm, cc, cp, dwt)
    dwt -= (mu * a) * wt
    dwt -= (nu_sq * a * a) * w
    if nonlinear:
        dwt += np.abs(z) ** p
    return dw, dwt


def _system_rhs(t, y, k, par, stencil):
    mu1, nu1, mu2, nu2, p, q, nonlinear = par
    cm, cc, cp = stencil
    _wave_rhs(t, y[0], y[1], y[2], mu1, nu1, p, nonlinear, cm, cc, cp, k[0], k[1])
    _wave_rhs(t, y[2], y[3], y[0], mu2, nu2, q, nonlinear, cm, cc, cp, k[2], k[3])
    return k


def advance_fd(y, t0, step0, dt, nsteps, h, n, mu1, nu1_sq, mu2, nu2_sq, p, q, nonlinear, threshold):
    """Advance ``y = [u, u_t, v, v_t]`` in place by up to ``nsteps`` RK4 steps.

    Time of step ``k`` is ``t0 + (step0 + k) dt`` so long runs do not
    accumulate rounding in ``t``. Returns ``(steps_done, status)`` where
    status is 0 (ok), 1 (threshold crossed) or 2 (non-finite value).
    """
    N = y.shape[1]
    stencil = laplacian_coefficients(N, h, n)
    par = (mu1, nu1_sq, mu2, nu2_sq, p, q, bool(nonlinear))
    k1, k2, k3, k4 = (np.empty_like(y) for _ in range(4))
    tmp = np.empty_like(y)
    half = 0.5 * dt
    sixth = dt / 6.0
    for k in range(nsteps):
        t = t0 + (step0 + k) * dt
        _system_rhs(t, y, k1, par, stencil)
        np.multiply(k1, half, out=tmp)
        tmp += y
        _system_rhs(t + half, tmp, k2, par, stencil)
        np.multiply(k2, half, out=tmp)
        tmp += y
        _system_rhs(t + half, tmp, k3, par, stencil)
        np.multiply(k3, dt, out=tmp)
        tmp += y
        _system_rhs(t + dt, tmp, k4, par, stencil)
        k2 *= 2.0
        k3 *= 2.0
        k1 += k2
        k1 += k3
        k1 += k4
        k1 *= sixth
        y += k1
        if not np.isfinite(y).all():
            return k + 1, 2
        if np.abs(y).max() > threshold:
            return k + 1, 1
    return nsteps, 0
