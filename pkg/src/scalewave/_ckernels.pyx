# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: per-mode Dormand-Prince integration and radial RK4 stepping.

Mirrors :mod:`scalewave._pykernels`; the two are interchangeable behind
:mod:`scalewave._backend`.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, pow, isfinite, fmax, fmin, sqrt

cnp.import_array()

cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784, B6 = 11.0 / 84
cdef double E1 = -71.0 / 57600, E3 = 71.0 / 16695, E4 = -71.0 / 1920, E5 = 17253.0 / 339200
cdef double E6 = -22.0 / 525, E7 = 1.0 / 40
cdef double SAFETY = 0.9, FAC_MIN = 0.2, FAC_MAX = 5.0

cdef double[7][4] PD = [
    [1.0, -8048581381.0 / 2820520608, 8663915743.0 / 2820520608, -12715105075.0 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200.0 / 32700410799, -68118460800.0 / 10900136933, 87487479700.0 / 32700410799],
    [0.0, -1754552775.0 / 470086768, 14199869525.0 / 1410260304, -10690763975.0 / 1880347072],
    [0.0, 127303824393.0 / 49829197408, -318862633887.0 / 49829197408, 701980252875.0 / 199316789632],
    [0.0, -282668133.0 / 205662961, 2019193451.0 / 616988883, -1453857185.0 / 822651844],
    [0.0, 40617522.0 / 29380423, -110615467.0 / 29380423, 69997945.0 / 29380423],
]


cdef inline double cmod(double complex z) noexcept nogil:
    # plain modulus: error norms never approach overflow, and hypot is slow
    return sqrt(z.real * z.real + z.imag * z.imag)


cdef inline void mode_rhs(double t, double complex v, double complex vd, double rho2, double mu,
                          double nu_sq, double complex* dv, double complex* dvd) noexcept nogil:
    cdef double a = 1.0 / (1.0 + t)
    dv[0] = vd
    dvd[0] = -rho2 * v - (mu * a) * vd - (nu_sq * a * a) * v


def integrate_modes(double[::1] rho, double complex[::1] v0, double complex[::1] vd0, double mu,
                    double nu_sq, double s, double[::1] t_out, double rtol, double[::1] atol,
                    double[::1] h0, long max_steps):
    cdef Py_ssize_t m = rho.shape[0], k = t_out.shape[0]
    V_arr = np.full((m, k), np.nan + 0j)
    VD_arr = np.full((m, k), np.nan + 0j)
    status_arr = np.zeros(m, dtype=np.int64)
    nsteps_arr = np.zeros(m, dtype=np.int64)
    cdef double complex[:, ::1] V = V_arr
    cdef double complex[:, ::1] VD = VD_arr
    cdef long long[::1] status = status_arr
    cdef long long[::1] nsteps = nsteps_arr
    if m == 0 or k == 0:
        return V_arr, VD_arr, status_arr, nsteps_arr

    cdef double t_end = t_out[k - 1]
    cdef Py_ssize_t i, j, c
    cdef double t, h, hh, t_new, rho2, err, fac, ev_n, ed_n, sv, sd, theta, th
    cdef bint rejected, last, ok
    cdef long steps
    cdef double complex y0, d0, y1, d1
    cdef double complex k1v, k1d, k2v, k2d, k3v, k3d, k4v, k4d, k5v, k5d, k6v, k6d, k7v, k7d
    cdef double complex ev, ed
    cdef double complex qv[4]
    cdef double complex qd[4]

    with nogil:
        for i in range(m):
            rho2 = rho[i] * rho[i]
            t = s
            h = h0[i]
            y0 = v0[i]
            d0 = vd0[i]
            j = 0
            while j < k and t_out[j] <= s:
                V[i, j] = y0
                VD[i, j] = d0
                j += 1
            mode_rhs(t, y0, d0, rho2, mu, nu_sq, &k1v, &k1d)
            rejected = False
            steps = 0
            while t < t_end:
                hh = h
                last = t + hh >= t_end
                if last:
                    hh = t_end - t
                mode_rhs(t + C2 * hh, y0 + hh * (A21 * k1v), d0 + hh * (A21 * k1d), rho2, mu, nu_sq, &k2v, &k2d)
                mode_rhs(t + C3 * hh, y0 + hh * (A31 * k1v + A32 * k2v), d0 + hh * (A31 * k1d + A32 * k2d),
                         rho2, mu, nu_sq, &k3v, &k3d)
                mode_rhs(t + C4 * hh, y0 + hh * (A41 * k1v + A42 * k2v + A43 * k3v),
                         d0 + hh * (A41 * k1d + A42 * k2d + A43 * k3d), rho2, mu, nu_sq, &k4v, &k4d)
                mode_rhs(t + C5 * hh, y0 + hh * (A51 * k1v + A52 * k2v + A53 * k3v + A54 * k4v),
                         d0 + hh * (A51 * k1d + A52 * k2d + A53 * k3d + A54 * k4d), rho2, mu, nu_sq, &k5v, &k5d)
                mode_rhs(t + hh, y0 + hh * (A61 * k1v + A62 * k2v + A63 * k3v + A64 * k4v + A65 * k5v),
                         d0 + hh * (A61 * k1d + A62 * k2d + A63 * k3d + A64 * k4d + A65 * k5d),
                         rho2, mu, nu_sq, &k6v, &k6d)
                y1 = y0 + hh * (B1 * k1v + B3 * k3v + B4 * k4v + B5 * k5v + B6 * k6v)
                d1 = d0 + hh * (B1 * k1d + B3 * k3d + B4 * k4d + B5 * k5d + B6 * k6d)
                t_new = t_end if last else t + hh
                mode_rhs(t_new, y1, d1, rho2, mu, nu_sq, &k7v, &k7d)

                ev = hh * (E1 * k1v + E3 * k3v + E4 * k4v + E5 * k5v + E6 * k6v + E7 * k7v)
                ed = hh * (E1 * k1d + E3 * k3d + E4 * k4d + E5 * k5d + E6 * k6d + E7 * k7d)
                sv = atol[i] + rtol * fmax(cmod(y0), cmod(y1))
                sd = atol[i] + rtol * fmax(cmod(d0), cmod(d1))
                err = fmax(cmod(ev) / sv, cmod(ed) / sd)
                ok = err <= 1.0
                if err == 0.0:
                    fac = FAC_MAX
                else:
                    fac = fmin(FAC_MAX, fmax(FAC_MIN, SAFETY * pow(err, -0.2)))
                if (ok and rejected) or not ok:
                    fac = fmin(fac, 1.0)

                if ok:
                    for c in range(4):
                        qv[c] = (PD[0][c] * k1v + PD[2][c] * k3v + PD[3][c] * k4v + PD[4][c] * k5v
                                 + PD[5][c] * k6v + PD[6][c] * k7v)
                        qd[c] = (PD[0][c] * k1d + PD[2][c] * k3d + PD[3][c] * k4d + PD[4][c] * k5d
                                 + PD[5][c] * k6d + PD[6][c] * k7d)
                    while j < k and t_out[j] <= t_new:
                        if t_out[j] == t_new:
                            V[i, j] = y1
                            VD[i, j] = d1
                        else:
                            theta = (t_out[j] - t) / hh
                            th = theta
                            V[i, j] = y0 + hh * (qv[0] * th + qv[1] * th * th + qv[2] * th * th * th
                                                 + qv[3] * th * th * th * th)
                            VD[i, j] = d0 + hh * (qd[0] * th + qd[1] * th * th + qd[2] * th * th * th
                                                  + qd[3] * th * th * th * th)
                        j += 1
                    t = t_new
                    y0 = y1
                    d0 = d1
                    k1v = k7v
                    k1d = k7d
                    steps += 1
                rejected = not ok
                h = hh * fac
                if t < t_end:
                    if h < 1e-14 * fmax(1.0, fabs(t)):
                        status[i] = 1
                        break
                    if steps >= max_steps:
                        status[i] = 2
                        break
            nsteps[i] = steps
    return V_arr, VD_arr, status_arr, nsteps_arr


cdef inline void wave_rhs(double t, double[::1] w, double[::1] wt, double[::1] z, double mu, double nu_sq,
                          double p, bint nonlinear, double[::1] cm, double[::1] cc, double[::1] cp,
                          double[::1] dw, double[::1] dwt) noexcept nogil:
    cdef Py_ssize_t N = w.shape[0], i
    cdef double a = 1.0 / (1.0 + t)
    cdef double ma = mu * a, na = nu_sq * a * a, acc
    for i in range(N):
        dw[i] = wt[i]
        if i == 0:
            acc = cc[0] * w[0] + cp[0] * w[1]
        elif i == N - 1:
            acc = cm[i] * w[i - 1] + cc[i] * w[i]
        else:
            acc = cm[i] * w[i - 1] + cc[i] * w[i] + cp[i] * w[i + 1]
        acc = acc - ma * wt[i]
        acc = acc - na * w[i]
        if nonlinear:
            acc = acc + pow(fabs(z[i]), p)
        dwt[i] = acc


cdef inline void system_rhs(double t, double[:, ::1] y, double[:, ::1] k, double mu1, double nu1,
                            double mu2, double nu2, double p, double q, bint nonlinear,
                            double[::1] cm, double[::1] cc, double[::1] cp) noexcept nogil:
    wave_rhs(t, y[0], y[1], y[2], mu1, nu1, p, nonlinear, cm, cc, cp, k[0], k[1])
    wave_rhs(t, y[2], y[3], y[0], mu2, nu2, q, nonlinear, cm, cc, cp, k[2], k[3])


def advance_fd(double[:, ::1] y, double t0, long step0, double dt, long nsteps, double h, int n,
               double mu1, double nu1_sq, double mu2, double nu2_sq, double p, double q,
               bint nonlinear, double threshold):
    from scalewave._pykernels import laplacian_coefficients
    cdef Py_ssize_t N = y.shape[1], i, f
    cm_a, cc_a, cp_a = laplacian_coefficients(N, h, n)
    cdef double[::1] cm = np.ascontiguousarray(cm_a)
    cdef double[::1] cc = np.ascontiguousarray(cc_a)
    cdef double[::1] cp = np.ascontiguousarray(cp_a)
    cdef double[:, ::1] k1 = np.empty((4, N))
    cdef double[:, ::1] k2 = np.empty((4, N))
    cdef double[:, ::1] k3 = np.empty((4, N))
    cdef double[:, ::1] k4 = np.empty((4, N))
    cdef double[:, ::1] tmp = np.empty((4, N))
    cdef double half = 0.5 * dt, sixth = dt / 6.0, t, mx, val
    cdef long kk
    cdef int status = 0
    with nogil:
        for kk in range(nsteps):
            t = t0 + (step0 + kk) * dt
            system_rhs(t, y, k1, mu1, nu1_sq, mu2, nu2_sq, p, q, nonlinear, cm, cc, cp)
            for f in range(4):
                for i in range(N):
                    tmp[f, i] = k1[f, i] * half + y[f, i]
            system_rhs(t + half, tmp, k2, mu1, nu1_sq, mu2, nu2_sq, p, q, nonlinear, cm, cc, cp)
            for f in range(4):
                for i in range(N):
                    tmp[f, i] = k2[f, i] * half + y[f, i]
            system_rhs(t + half, tmp, k3, mu1, nu1_sq, mu2, nu2_sq, p, q, nonlinear, cm, cc, cp)
            for f in range(4):
                for i in range(N):
                    tmp[f, i] = k3[f, i] * dt + y[f, i]
            system_rhs(t + dt, tmp, k4, mu1, nu1_sq, mu2, nu2_sq, p, q, nonlinear, cm, cc, cp)
            mx = 0.0
            for f in range(4):
                for i in range(N):
                    val = k1[f, i] + k2[f, i] * 2.0
                    val = val + k3[f, i] * 2.0
                    val = val + k4[f, i]
                    val = y[f, i] + val * sixth
                    y[f, i] = val
                    if not isfinite(val):
                        status = 2
                    elif fabs(val) > mx:
                        mx = fabs(val)
            if status == 2:
                break
            if mx > threshold:
                status = 1
                break
    if status:
        return kk + 1, status
    return nsteps, 0
