"""Voluntary testing with a privately informed agent.

An agent with type ``t`` (the expected quality) decides whether to pay
``c`` for a public test of quality. In a cutoff equilibrium types above
``t*`` test. The cutoff-type's gain from testing is::

    gain(t*) = E_{s|t*}[ mean of the market posterior from delta_+(t*) ]
               - ( mean of delta_-(t*) + c )

where ``delta_-``/``delta_+`` are the market's interim beliefs after
no-test/test. Interior equilibria are the zeros of ``gain``; corners are
decided by the inequalities at ``t_lo``/``t_hi``.

Types live on a uniform grid and densities are linear between grid points,
so all truncated integrals are computed exactly for that interpolant.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .beliefs import (
    Belief,
    Experiment,
    StateSpace,
    expected_cross_posterior_mean,
    is_lr_dominated,
    is_mlrp_experiment,
    posterior_mean,
)
from .blackwell import NotRankedError, find_garbling
from .ivp import InequalityCheck

ROOT_TOL = 1e-9
FLAT_TOL = 1e-12
CORNER_TOL = 1e-12


def _cell_integrals(t, f):
    """Per-cell integrals of ``f`` and ``t*f`` for piecewise-linear ``f`` (last axis)."""
    a, b = t[:-1], t[1:]
    fa, fb = f[..., :-1], f[..., 1:]
    w = b - a
    mass = 0.5 * w * (fa + fb)
    moment = w * (a * (2 * fa + fb) + b * (fa + 2 * fb)) / 6.0
    return mass, moment


@dataclass(frozen=True, eq=False)
class TestingModel:
    """Quality prior, type densities on a grid, test experiment and cost."""

    __test__ = False  # not a pytest class

    qualities: StateSpace
    prior: Belief
    t_grid: np.ndarray
    densities: np.ndarray
    test: Experiment
    cost: float
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        t = np.array(self.t_grid, dtype=float)
        f = np.array(self.densities, dtype=float)
        Q = len(self.qualities)
        if len(self.prior) != Q or not self.prior.full_support:
            raise ValueError("prior must be a full-support belief over the qualities")
        if t.ndim != 1 or t.size < 3:
            raise ValueError("type grid needs at least three points")
        step = np.diff(t)
        if np.any(step <= 0) or np.ptp(step) > 1e-9 * step.mean():
            raise ValueError("type grid must be uniformly spaced and increasing")
        if f.shape != (Q, t.size) or np.any(f < 0) or not np.all(np.isfinite(f)):
            raise ValueError(f"densities must be a nonnegative array of shape {(Q, t.size)}")
        mass, _ = _cell_integrals(t, f)
        total = mass.sum(axis=1)
        if np.any(np.abs(total - 1.0) > 1e-8):
            raise ValueError(f"densities integrate to {total.tolist()}, not 1")
        det = f[1:, 1:] * f[:-1, :-1] - f[:-1, 1:] * f[1:, :-1]
        if np.any(det <= 0):
            raise ValueError("type densities must satisfy strict MLRP across the grid")
        post = self.prior.probs[:, None] * f
        cond_mean = (self.qualities.values @ post) / post.sum(axis=0)
        if np.max(np.abs(cond_mean - t)) > 1e-6:
            raise ValueError("types must be normalized so that E[q|t] = t")
        if self.test.num_states != Q:
            raise ValueError("test experiment must be defined over the qualities")
        if not is_mlrp_experiment(self.test, self.qualities):
            raise ValueError("test experiment must satisfy MLRP")
        if self.cost < 0:
            raise ValueError("testing cost must be nonnegative")
        t.setflags(write=False)
        f.setflags(write=False)
        cum = np.concatenate([np.zeros((Q, 1)), np.cumsum(mass, axis=1)], axis=1)
        cum.setflags(write=False)
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "densities", f)
        object.__setattr__(self, "_cum", cum)

    @property
    def t_lo(self) -> float:
        return float(self.t_grid[0])

    @property
    def t_hi(self) -> float:
        return float(self.t_grid[-1])

    @property
    def prior_mean(self) -> float:
        return posterior_mean(self.prior, self.qualities)

    def with_test(self, test: Experiment, cost: Optional[float] = None) -> "TestingModel":
        return replace(self, test=test, cost=self.cost if cost is None else cost)

    def density_at(self, t: float) -> np.ndarray:
        return np.array([np.interp(t, self.t_grid, row) for row in self.densities])

    def mass_below(self, t: float) -> np.ndarray:
        """Per-quality ``P(type < t | q)``."""
        t = min(max(t, self.t_lo), self.t_hi)
        i = min(int(np.searchsorted(self.t_grid, t, side="right")) - 1, self.t_grid.size - 2)
        a = self.t_grid[i]
        fa = self.densities[:, i]
        ft = self.density_at(t)
        return self._cum[:, i] + 0.5 * (t - a) * (fa + ft)

    def private_belief(self, t: float) -> Belief:
        return Belief.normalized(self.prior.probs * self.density_at(t))

    def type_mass_above(self, t: float) -> float:
        return float(self.prior.probs @ (1.0 - self.mass_below(t)))

    def conditional_type_mean(self, t_star: float, side: str) -> float:
        """``E[t | t < t_star]`` (``side="below"``) or ``E[t | t > t_star]``."""
        grid = np.unique(np.concatenate([self.t_grid, [t_star]]))
        marg = self.prior.probs @ np.array([np.interp(grid, self.t_grid, r) for r in self.densities])
        keep = grid <= t_star if side == "below" else grid >= t_star
        mass, moment = _cell_integrals(grid[keep], marg[keep])
        return float(moment.sum() / mass.sum())


def canonical_model(test: Experiment, cost: float, n: int = 2001) -> TestingModel:
    """Binary quality, even prior, ``f(t|1) = 2t`` and ``f(t|0) = 2(1 - t)`` on ``[0, 1]``.

    The type marginal is uniform and ``E[q|t] = t`` exactly.
    """
    t = np.linspace(0.0, 1.0, n)
    return TestingModel(
        qualities=StateSpace([0.0, 1.0]),
        prior=Belief([0.5, 0.5]),
        t_grid=t,
        densities=np.vstack([2.0 * (1.0 - t), 2.0 * t]),
        test=test,
        cost=cost,
    )


def interim_beliefs(model: TestingModel, t_star: float, check: bool = False):
    """Market beliefs ``(delta_minus, delta_plus)`` after no-test / test.

    At ``t_lo`` the off-path no-test belief is the private belief of ``t_lo``;
    at ``t_hi`` the off-path test belief is the private belief of ``t_hi``.
    """
    if not model.t_lo <= t_star <= model.t_hi:
        raise ValueError(f"cutoff {t_star} outside the type range")
    below = model.prior.probs * model.mass_below(t_star)
    above = model.prior.probs * (1.0 - model.mass_below(t_star))
    if t_star <= model.t_lo or below.sum() <= 0:
        minus, plus = model.private_belief(model.t_lo), model.prior
    elif t_star >= model.t_hi or above.sum() <= 0:
        minus, plus = model.prior, model.private_belief(model.t_hi)
    else:
        minus, plus = Belief.normalized(below), Belief.normalized(above)
    if check:
        for t in model.t_grid:
            b = model.private_belief(float(t))
            for d in (minus, plus):
                if not (is_lr_dominated(d, b, model.qualities) or is_lr_dominated(b, d, model.qualities)):
                    raise AssertionError(f"interim belief not LR comparable with beta({t})")
    return minus, plus


@dataclass(frozen=True)
class GainTerms:
    expected_test_value: float   # E_{s|t}[delta^e(s; delta_+)]
    no_test_value: float         # delta^e_-
    tested_pool_value: float     # delta^e_+
    cost: float

    @property
    def gain(self) -> float:
        return self.expected_test_value - self.no_test_value - self.cost


def gain_terms(model: TestingModel, t_star: float) -> GainTerms:
    minus, plus = interim_beliefs(model, t_star)
    belief = model.private_belief(t_star)
    return GainTerms(
        expected_test_value=expected_cross_posterior_mean(belief, plus, model.test, model.qualities),
        no_test_value=posterior_mean(minus, model.qualities),
        tested_pool_value=posterior_mean(plus, model.qualities),
        cost=model.cost,
    )


def cutoff_gain(model: TestingModel, t_star: float) -> float:
    """``L(t*) - R(t*)``: expected value of testing at ``t*`` minus the no-test value plus cost."""
    return gain_terms(model, t_star).gain


def gain_on_grid(model: TestingModel, cost: Optional[float] = None) -> np.ndarray:
    """Vectorized :func:`cutoff_gain` at every grid point."""
    c = model.cost if cost is None else cost
    pi = model.prior.probs
    vals = model.qualities.values
    g = model.test.likelihood
    below = pi[:, None] * model._cum
    above = pi[:, None] * (1.0 - model._cum)
    beta = pi[:, None] * model.densities
    beta = (beta / beta.sum(axis=0)).T                         # N x Q
    lo_corner, hi_corner = beta[0], beta[-1]
    minus = (below / np.where(below.sum(axis=0) > 0, below.sum(axis=0), 1.0)).T
    plus = (above / np.where(above.sum(axis=0) > 0, above.sum(axis=0), 1.0)).T
    minus[0], plus[0] = lo_corner, pi
    minus[-1], plus[-1] = pi, hi_corner
    joint = plus[:, :, None] * g[None, :, :]                    # N x Q x K
    marg_plus = joint.sum(axis=1)
    mean_plus = np.einsum("q,nqk->nk", vals, joint) / np.where(marg_plus > 0, marg_plus, 1.0)
    p_sig = beta @ g                                            # N x K
    expected = np.where(p_sig > 0, p_sig * mean_plus, 0.0).sum(axis=1)
    return expected - minus @ vals - c


@dataclass(frozen=True)
class EquilibriumCutoff:
    t_star: float
    kind: str             # "interior", "all-test", "no-test" or "interval"
    residual: float
    delta_minus: Belief
    delta_plus: Belief
    upper: Optional[float] = None   # right end of an interval of equilibria

    @property
    def t_max(self) -> float:
        return self.t_star if self.upper is None else self.upper


def _bisect(model, a, b, ga):
    while b - a > ROOT_TOL:
        m = 0.5 * (a + b)
        gm = cutoff_gain(model, m)
        if gm == 0.0:
            return m
        if (gm > 0) == (ga > 0):
            a, ga = m, gm
        else:
            b = m
    return 0.5 * (a + b)


def solve_equilibrium_cutoffs(model: TestingModel, _base_gain: Optional[np.ndarray] = None
                              ) -> list:
    """Every equilibrium cutoff found on the type grid, sorted by ``t_star``.

    Interior roots are bracketed by sign changes on the grid and bisected to
    ``ROOT_TOL``. Stretches where the gain vanishes identically are reported
    as ``kind="interval"``.
    """
    t = model.t_grid
    gains = gain_on_grid(model) if _base_gain is None else _base_gain - model.cost
    out = []

    lo_terms = model.t_lo + model.cost
    lo_value = expected_cross_posterior_mean(model.private_belief(model.t_lo), model.prior,
                                             model.test, model.qualities)
    if lo_value - lo_terms >= -CORNER_TOL:
        minus, plus = interim_beliefs(model, model.t_lo)
        out.append(EquilibriumCutoff(model.t_lo, "all-test", lo_value - lo_terms, minus, plus))
    hi_slack = model.prior_mean + model.cost - model.t_hi
    if hi_slack >= -CORNER_TOL:
        minus, plus = interim_beliefs(model, model.t_hi)
        out.append(EquilibriumCutoff(model.t_hi, "no-test", hi_slack, minus, plus))

    flat = np.abs(gains) <= FLAT_TOL
    n = t.size
    i = 0
    while i < n:
        if flat[i]:
            j = i
            while j + 1 < n and flat[j + 1]:
                j += 1
            lo, hi = float(t[i]), float(t[j])
            if j > i:
                minus, plus = interim_beliefs(model, lo)
                out.append(EquilibriumCutoff(lo, "interval", float(gains[i]), minus, plus, upper=hi))
            elif 0 < i < n - 1:
                minus, plus = interim_beliefs(model, lo)
                out.append(EquilibriumCutoff(lo, "interior", float(gains[i]), minus, plus))
            i = j + 1
            continue
        if i + 1 < n and not flat[i + 1] and (gains[i] > 0) != (gains[i + 1] > 0):
            root = _bisect(model, float(t[i]), float(t[i + 1]), float(gains[i]))
            if model.t_lo < root < model.t_hi:
                minus, plus = interim_beliefs(model, root)
                out.append(EquilibriumCutoff(root, "interior", cutoff_gain(model, root), minus, plus))
        i += 1
    out.sort(key=lambda e: (e.t_star, e.kind))
    return out


def extremal_cutoffs(cutoffs: Sequence[EquilibriumCutoff]):
    """``(smallest, largest)`` cutoff over points, corners and interval ends."""
    return min(e.t_star for e in cutoffs), max(e.t_max for e in cutoffs)


@dataclass(frozen=True)
class StaticsRow:
    test_id: str
    informativeness_param: float
    smallest_cutoff: float
    largest_cutoff: float
    tested_mass: float
    agent_exante_cost: float
    cutoffs: tuple = field(repr=False, default=())


@dataclass(frozen=True)
class StaticsTable:
    rows: tuple
    smallest_monotone: bool
    largest_monotone: bool

    @property
    def monotone(self) -> bool:
        return self.smallest_monotone and self.largest_monotone


def comparative_statics(model: TestingModel, tests: Sequence[Experiment],
                        ids: Optional[Sequence[str]] = None,
                        params: Optional[Sequence[float]] = None,
                        slack: float = 1e-7) -> StaticsTable:
    """Extremal cutoffs for tests listed from least to most informative.

    ``tested_mass`` and ``agent_exante_cost`` refer to the largest cutoff,
    the equilibrium the agent prefers ex ante.
    """
    ids = list(ids) if ids is not None else [e.name or f"test{i}" for i, e in enumerate(tests)]
    params = list(params) if params is not None else [float("nan")] * len(tests)
    for i in range(len(tests) - 1):
        if find_garbling(tests[i + 1], tests[i]) is None:
            raise NotRankedError(f"{ids[i + 1]!r} is not more informative than {ids[i]!r}")
    rows = []
    for test, tid, p in zip(tests, ids, params):
        cut = solve_equilibrium_cutoffs(model.with_test(test))
        lo, hi = extremal_cutoffs(cut)
        mass = model.type_mass_above(hi)
        rows.append(StaticsRow(tid, float(p), lo, hi, mass, model.cost * mass, tuple(cut)))
    small = [r.smallest_cutoff for r in rows]
    large = [r.largest_cutoff for r in rows]
    return StaticsTable(
        rows=tuple(rows),
        smallest_monotone=bool(np.all(np.diff(small) >= -slack)),
        largest_monotone=bool(np.all(np.diff(large) >= -slack)),
    )


@dataclass(frozen=True)
class CertifierOptimum:
    test_index: int
    test_id: str
    price: float
    cutoff: float
    profit: float


def default_price_grid(model: TestingModel, n: int = 201) -> np.ndarray:
    grid = np.linspace(0.0, model.t_hi - model.t_lo, n)
    return np.unique(np.concatenate([grid, [model.prior_mean - model.t_lo]]))


def monopolist_certifier(model: TestingModel, tests: Sequence[Experiment],
                         prices: Optional[Sequence[float]] = None,
                         ids: Optional[Sequence[str]] = None) -> CertifierOptimum:
    """Profit-maximizing (test, price) for a certifier selling one test.

    For each candidate the profit-maximizing equilibrium (smallest cutoff) is
    used and profit is ``price * P(type > cutoff)``. Ties keep the earlier
    test and the lower price.
    """
    if not len(tests):
        raise ValueError("no candidate tests")
    prices = default_price_grid(model) if prices is None else np.asarray(prices, dtype=float)
    if prices.size == 0:
        raise ValueError("no candidate prices")
    ids = list(ids) if ids is not None else [e.name or f"test{i}" for i, e in enumerate(tests)]
    best = None
    for k, test in enumerate(tests):
        base = model.with_test(test, cost=0.0)
        base_gain = gain_on_grid(base)
        for price in np.sort(prices):
            priced = base.with_test(test, cost=float(price))
            cutoff, _ = extremal_cutoffs(solve_equilibrium_cutoffs(priced, _base_gain=base_gain))
            profit = float(price) * model.type_mass_above(cutoff)
            if best is None or profit > best.profit + 1e-12:
                best = CertifierOptimum(k, ids[k], float(price), cutoff, profit)
    return best


def ivp_sandwich(model: TestingModel, cutoff: EquilibriumCutoff) -> tuple:
    """``delta^e_- < t* <= E_{s|t*}[delta^e(s; delta_+)] <= delta^e_+`` at an interior cutoff.

    Returns three :class:`InequalityCheck` records; the first must hold
    strictly, the other two weakly.
    """
    terms = gain_terms(model, cutoff.t_star)
    return (
        InequalityCheck("no_test_below_cutoff", terms.no_test_value, cutoff.t_star),
        InequalityCheck("cutoff_below_expected_test", cutoff.t_star, terms.expected_test_value),
        InequalityCheck("expected_test_below_pool", terms.expected_test_value, terms.tested_pool_value),
    )


def sandwich_holds(checks: Sequence[InequalityCheck]) -> bool:
    return checks[0].residual > 0 and all(c.passed for c in checks[1:])
