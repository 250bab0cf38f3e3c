"""Pure-Python implementations of the numerical kernels.

Every function here has a compiled twin in ``_kernels.pyx`` with the same
signature and return convention. ``ivpkit.kernels`` picks one at import.
"""
import math

import numpy as np

# Status codes shared with the compiled kernels.
OK = 0
INFEASIBLE = 1
ITERATION_LIMIT = 2
NONFINITE = 3

_COST_TOL = 1e-9
# pivots smaller than this amplify rounding in the tableau
_PIVOT_TOL = 1e-9


def posterior_means(prior, lik, values):
    """Signal marginals and per-signal posterior means.

    Means are NaN for signals the prior cannot produce.
    """
    prior = np.asarray(prior, dtype=float)
    lik = np.asarray(lik, dtype=float)
    values = np.asarray(values, dtype=float)
    joint = prior[:, None] * lik
    marg = joint.sum(axis=0)
    num = (joint * values[:, None]).sum(axis=0)
    means = np.full(marg.shape, np.nan)
    reach = marg > 0.0
    means[reach] = num[reach] / marg[reach]
    return marg, means


def cross_posterior_mean(prior_i, prior_j, lik, values):
    """Return ``(sum_s P_i(s) m_j^s, bad)``.

    ``bad`` is -1 on success, otherwise the index of a signal that ``i`` can
    see but ``j`` assigns zero probability (the value is then NaN).
    """
    marg_i, _ = posterior_means(prior_i, lik, values)
    marg_j, means_j = posterior_means(prior_j, lik, values)
    seen = marg_i > 0.0
    bad = np.flatnonzero(seen & ~(marg_j > 0.0))
    if bad.size:
        return math.nan, int(bad[0])
    return float(np.dot(marg_i[seen], means_j[seen])), -1


def marginal_benefit(g0, g1, t):
    """``sum_s g0(s) g1(s) / (t g1(s) + (1 - t) g0(s))`` for each ``t``."""
    g0 = np.asarray(g0, dtype=float)
    g1 = np.asarray(g1, dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    prod = g0 * g1
    keep = prod > 0.0
    if not keep.any():
        return np.zeros_like(t)
    den = t[:, None] * g1[keep] + (1.0 - t[:, None]) * g0[keep]
    return (prod[keep] / den).sum(axis=1)


def _mb_scalar(g0, g1, t):
    total = 0.0
    for a, b in zip(g0, g1):
        p = a * b
        if p > 0.0:
            total += p / (t * b + (1.0 - t) * a)
    return total


def lcse_integrate(rhs, h, t_end, max_nodes):
    """Integrate ``dt/drho = rhs(rho, t)`` from ``(0, 0)`` until ``t >= t_end``.

    Classical fixed-step RK4. Returns ``(rho, t, dtdrho, status)`` where the
    arrays hold every node including the first one past ``t_end``.
    """
    rho_nodes = [0.0]
    t_nodes = [0.0]
    d_nodes = [rhs(0.0, 0.0)]
    r, t = 0.0, 0.0
    status = OK
    while t < t_end:
        if len(rho_nodes) >= max_nodes:
            status = ITERATION_LIMIT
            break
        k1 = d_nodes[-1]
        k2 = rhs(r + 0.5 * h, t + 0.5 * h * k1)
        k3 = rhs(r + 0.5 * h, t + 0.5 * h * k2)
        k4 = rhs(r + h, t + h * k3)
        t = t + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        r = r + h
        d = rhs(r, t)
        if not (math.isfinite(t) and math.isfinite(d)):
            status = NONFINITE
            break
        rho_nodes.append(r)
        t_nodes.append(t)
        d_nodes.append(d)
    return (np.array(rho_nodes), np.array(t_nodes), np.array(d_nodes), status)


def lcse_quadratic(g0, g1, h, t_end, max_nodes):
    """``lcse_integrate`` for the cost ``(r - t)**2``."""
    g0 = [float(x) for x in g0]
    g1 = [float(x) for x in g1]

    def rhs(r, t):
        tc = min(max(t, 0.0), 1.0)
        return 2.0 * (r - t) / _mb_scalar(g0, g1, tc)

    return lcse_integrate(rhs, h, t_end, max_nodes)


def _hermite(x0, x1, y0, y1, d0, d1, x):
    w = x1 - x0
    s = (x - x0) / w
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    val = h00 * y0 + h10 * w * d0 + h01 * y1 + h11 * w * d1
    dh00 = 6 * s * s - 6 * s
    dh10 = 3 * s * s - 4 * s + 1
    dh01 = -dh00
    dh11 = 3 * s * s - 2 * s
    der = (dh00 * y0 + dh01 * y1) / w + dh10 * d0 + dh11 * d1
    return val, der


def hermite_invert(x, y, dydx, targets):
    """Invert an increasing cubic Hermite interpolant ``y(x)`` at ``targets``.

    Targets outside ``[y[0], y[-1]]`` map to NaN.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dydx = np.asarray(dydx, dtype=float)
    out = np.empty(len(targets))
    n = len(x)
    for k, tau in enumerate(np.asarray(targets, dtype=float)):
        if tau < y[0] or tau > y[-1]:
            out[k] = math.nan
            continue
        i = int(np.searchsorted(y, tau, side="right")) - 1
        i = min(max(i, 0), n - 2)
        lo, hi = x[i], x[i + 1]
        args = (x[i], x[i + 1], y[i], y[i + 1], dydx[i], dydx[i + 1])
        # linear guess, then safeguarded Newton
        span = y[i + 1] - y[i]
        xc = lo + (hi - lo) * ((tau - y[i]) / span if span > 0 else 0.5)
        for _ in range(60):
            val, der = _hermite(*args, xc)
            f = val - tau
            if f > 0:
                hi = xc
            else:
                lo = xc
            if f == 0.0 or hi - lo < 1e-16 * max(1.0, abs(xc)):
                break
            nxt = xc - f / der if der > 0 else math.nan
            if not (lo < nxt < hi):
                nxt = 0.5 * (lo + hi)
            if abs(nxt - xc) < 1e-17:
                xc = nxt
                break
            xc = nxt
        out[k] = xc
    return out


def simplex_phase1(A, b, max_iter):
    """Phase-1 simplex on ``A x = b, x >= 0`` with ``b >= 0``.

    Dense tableau, one artificial per row, Bland's rule. Basic values are
    clamped at zero after each pivot so rounding cannot turn a ratio
    negative. Returns ``(status, x, objective, iterations)`` where
    ``objective`` is the optimal sum of artificials.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    m, n = A.shape
    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = A
    tab[:m, n:n + m] = np.eye(m)
    tab[:m, -1] = b
    tab[m, :n] = -A.sum(axis=0)
    tab[m, -1] = -b.sum()
    basis = list(range(n, n + m))
    status = ITERATION_LIMIT
    it = 0
    while it < max_iter:
        cand = np.flatnonzero(tab[m, :-1] < -_COST_TOL)
        if cand.size == 0:
            status = OK
            break
        j = int(cand[0])
        col = tab[:m, j]
        best = None
        for i in range(m):
            if col[i] > _PIVOT_TOL:
                key = (tab[i, -1] / col[i], basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            # cannot happen: phase 1 is bounded below by zero
            status = NONFINITE
            break
        r = best[1]
        tab[r] /= tab[r, j]
        for i in range(m + 1):
            if i != r and tab[i, j] != 0.0:
                tab[i] -= tab[i, j] * tab[r]
        np.maximum(tab[:m, -1], 0.0, out=tab[:m, -1])
        basis[r] = j
        it += 1
    x = np.zeros(n)
    for i, v in enumerate(basis):
        if v < n:
            x[v] = tab[i, -1]
    objective = -tab[m, -1]
    if status == OK and objective > 1e-9:
        status = INFEASIBLE
    return status, x, float(objective), it
