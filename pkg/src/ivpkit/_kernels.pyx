# cython: language_level=3
"""Compiled kernels. Same signatures and conventions as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport NAN, isfinite, fabs

cnp.import_array()

DEF OK = 0
DEF INFEASIBLE = 1
DEF ITERATION_LIMIT = 2
DEF NONFINITE = 3
DEF COST_TOL = 1e-9
# pivots smaller than this amplify rounding in the tableau
DEF PIVOT_TOL = 1e-9


def posterior_means(prior, lik, values):
    cdef const double[:] p = np.ascontiguousarray(prior, dtype=np.float64)
    cdef const double[:, :] g = np.ascontiguousarray(lik, dtype=np.float64)
    cdef const double[:] w = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t L = g.shape[0], K = g.shape[1], l, k
    marg_a = np.zeros(K)
    means_a = np.empty(K)
    cdef double[:] marg = marg_a
    cdef double[:] means = means_a
    cdef double joint, num
    for k in range(K):
        num = 0.0
        for l in range(L):
            joint = p[l] * g[l, k]
            marg[k] += joint
            num += joint * w[l]
        means[k] = num / marg[k] if marg[k] > 0.0 else NAN
    return marg_a, means_a


def cross_posterior_mean(prior_i, prior_j, lik, values):
    cdef const double[:] pi = np.ascontiguousarray(prior_i, dtype=np.float64)
    cdef const double[:] pj = np.ascontiguousarray(prior_j, dtype=np.float64)
    cdef const double[:, :] g = np.ascontiguousarray(lik, dtype=np.float64)
    cdef const double[:] w = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t L = g.shape[0], K = g.shape[1], l, k
    cdef double mi, mj, num, total = 0.0
    for k in range(K):
        mi = 0.0
        mj = 0.0
        num = 0.0
        for l in range(L):
            mi += pi[l] * g[l, k]
            mj += pj[l] * g[l, k]
            num += pj[l] * g[l, k] * w[l]
        if mi > 0.0:
            if not mj > 0.0:
                return NAN, k
            total += mi * num / mj
    return total, -1


cdef inline double _mb(const double[:] g0, const double[:] g1, double t) noexcept nogil:
    cdef Py_ssize_t k
    cdef double p, total = 0.0
    for k in range(g0.shape[0]):
        p = g0[k] * g1[k]
        if p > 0.0:
            total += p / (t * g1[k] + (1.0 - t) * g0[k])
    return total


def marginal_benefit(g0, g1, t):
    cdef const double[:] a = np.ascontiguousarray(g0, dtype=np.float64)
    cdef const double[:] b = np.ascontiguousarray(g1, dtype=np.float64)
    cdef const double[:] tt = np.ascontiguousarray(np.atleast_1d(t), dtype=np.float64)
    out_a = np.empty(tt.shape[0])
    cdef double[:] out = out_a
    cdef Py_ssize_t i
    for i in range(tt.shape[0]):
        out[i] = _mb(a, b, tt[i])
    return out_a


cdef inline double _quad_rhs(const double[:] g0, const double[:] g1,
                             double r, double t) noexcept nogil:
    cdef double tc = t
    if tc < 0.0:
        tc = 0.0
    elif tc > 1.0:
        tc = 1.0
    return 2.0 * (r - t) / _mb(g0, g1, tc)


def lcse_quadratic(g0, g1, double h, double t_end, Py_ssize_t max_nodes):
    cdef const double[:] a = np.ascontiguousarray(g0, dtype=np.float64)
    cdef const double[:] b = np.ascontiguousarray(g1, dtype=np.float64)
    rho_a = np.empty(max_nodes)
    t_a = np.empty(max_nodes)
    d_a = np.empty(max_nodes)
    cdef double[:] rho = rho_a
    cdef double[:] tn = t_a
    cdef double[:] dn = d_a
    cdef double r = 0.0, t = 0.0, k1, k2, k3, k4, d
    cdef Py_ssize_t n = 1
    cdef int status = OK
    rho[0] = 0.0
    tn[0] = 0.0
    dn[0] = _quad_rhs(a, b, 0.0, 0.0)
    with nogil:
        while t < t_end:
            if n >= max_nodes:
                status = ITERATION_LIMIT
                break
            k1 = dn[n - 1]
            k2 = _quad_rhs(a, b, r + 0.5 * h, t + 0.5 * h * k1)
            k3 = _quad_rhs(a, b, r + 0.5 * h, t + 0.5 * h * k2)
            k4 = _quad_rhs(a, b, r + h, t + h * k3)
            t = t + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            r = r + h
            d = _quad_rhs(a, b, r, t)
            if not (isfinite(t) and isfinite(d)):
                status = NONFINITE
                break
            rho[n] = r
            tn[n] = t
            dn[n] = d
            n += 1
    return rho_a[:n].copy(), t_a[:n].copy(), d_a[:n].copy(), status


cdef inline void _hermite(double x0, double x1, double y0, double y1,
                          double d0, double d1, double x,
                          double* val, double* der) noexcept nogil:
    cdef double w = x1 - x0
    cdef double s = (x - x0) / w
    cdef double u = 1.0 - s
    val[0] = ((1 + 2 * s) * u * u * y0 + s * u * u * w * d0
              + s * s * (3 - 2 * s) * y1 + s * s * (s - 1) * w * d1)
    der[0] = ((6 * s * s - 6 * s) * (y0 - y1) / w
              + (3 * s * s - 4 * s + 1) * d0 + (3 * s * s - 2 * s) * d1)


def hermite_invert(x, y, dydx, targets):
    cdef const double[:] xs = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[:] ys = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[:] ds = np.ascontiguousarray(dydx, dtype=np.float64)
    cdef const double[:] tg = np.ascontiguousarray(targets, dtype=np.float64)
    idx_a = np.searchsorted(np.asarray(ys), np.asarray(tg), side="right").astype(np.intp) - 1
    cdef const Py_ssize_t[:] idx = idx_a
    out_a = np.empty(tg.shape[0])
    cdef double[:] out = out_a
    cdef Py_ssize_t n = xs.shape[0], k, i, it
    cdef double tau, lo, hi, xc, nxt, f, val, der, span, scale
    for k in range(tg.shape[0]):
        tau = tg[k]
        if tau < ys[0] or tau > ys[n - 1]:
            out[k] = NAN
            continue
        i = idx[k]
        if i < 0:
            i = 0
        if i > n - 2:
            i = n - 2
        lo = xs[i]
        hi = xs[i + 1]
        span = ys[i + 1] - ys[i]
        xc = lo + (hi - lo) * ((tau - ys[i]) / span if span > 0 else 0.5)
        for it in range(60):
            _hermite(xs[i], xs[i + 1], ys[i], ys[i + 1], ds[i], ds[i + 1], xc, &val, &der)
            f = val - tau
            if f > 0:
                hi = xc
            else:
                lo = xc
            scale = fabs(xc) if fabs(xc) > 1.0 else 1.0
            if f == 0.0 or hi - lo < 1e-16 * scale:
                break
            nxt = xc - f / der if der > 0 else NAN
            if not (lo < nxt < hi):
                nxt = 0.5 * (lo + hi)
            if fabs(nxt - xc) < 1e-17:
                xc = nxt
                break
            xc = nxt
        out[k] = xc
    return out_a


def simplex_phase1(A, b, Py_ssize_t max_iter):
    cdef double[:, :] Am = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[:] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t m = Am.shape[0], n = Am.shape[1]
    cdef Py_ssize_t ncol = n + m + 1
    tab_a = np.zeros((m + 1, ncol))
    cdef double[:, :] tab = tab_a
    basis_a = np.arange(n, n + m, dtype=np.intp)
    cdef Py_ssize_t[:] basis = basis_a
    cdef Py_ssize_t i, j, c, r, it = 0
    cdef int status = ITERATION_LIMIT
    cdef double piv, ratio, best, f
    for i in range(m):
        for j in range(n):
            tab[i, j] = Am[i, j]
            tab[m, j] -= Am[i, j]
        tab[i, n + i] = 1.0
        tab[i, ncol - 1] = bv[i]
        tab[m, ncol - 1] -= bv[i]
    with nogil:
        while it < max_iter:
            j = -1
            for c in range(ncol - 1):
                if tab[m, c] < -COST_TOL:
                    j = c
                    break
            if j < 0:
                status = OK
                break
            r = -1
            best = 0.0
            for i in range(m):
                if tab[i, j] > PIVOT_TOL:
                    ratio = tab[i, ncol - 1] / tab[i, j]
                    if r < 0 or ratio < best or (ratio == best and basis[i] < basis[r]):
                        r = i
                        best = ratio
            if r < 0:
                status = NONFINITE
                break
            piv = tab[r, j]
            for c in range(ncol):
                tab[r, c] /= piv
            for i in range(m + 1):
                if i != r:
                    f = tab[i, j]
                    if f != 0.0:
                        for c in range(ncol):
                            tab[i, c] -= f * tab[r, c]
            # keep rounding from turning a basic value (and so a ratio) negative
            for i in range(m):
                if tab[i, ncol - 1] < 0.0:
                    tab[i, ncol - 1] = 0.0
            basis[r] = j
            it += 1
    x_a = np.zeros(n)
    cdef double[:] x = x_a
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = tab[i, ncol - 1]
    objective = -tab[m, ncol - 1]
    if status == OK and objective > 1e-9:
        status = INFEASIBLE
    return status, x_a, float(objective), it
