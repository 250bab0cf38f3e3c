"""Costly signaling with exogenous receiver information, binary state.

A sender of type ``t`` (the probability assigned to state 1) sends a report
``r`` at cost ``c(r, t)``; the receiver also sees a signal ``s`` drawn from
``g(s|w)``. In the least-cost separating equilibrium the report strategy
``rho`` solves::

    dc/dr(rho(t), t) * rho'(t) = MB(t),   rho(0) = 0

with the marginal benefit ``MB(t) = d/dpi E_{s|t}[beta(s; pi)]`` at
``pi = t``. The right-hand side of the ODE in ``t`` is singular at the
origin, so the solver integrates the inverse ``t(rho)`` instead::

    dt/drho = dc/dr(rho, t) / MB(t),   t(0) = 0

which is smooth there. The output grid in ``t`` is recovered by inverting a
cubic Hermite interpolant through the RK4 nodes.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import _pykernels, kernels
from .beliefs import Belief, Experiment, StateSpace, expected_cross_posterior_mean, is_mlrp_experiment
from .blackwell import (
    NotRankedError,
    apply_garbling,
    find_garbling,
    order_signals_binary,
    random_garbling,
    uninformative,
)
from .ivp import NON_MLRP_EXPERIMENT

RESIDUAL_TOL = 1e-7


class IntegrationError(RuntimeError):
    """The LCSE integrator failed even after step halving."""


# -- cost functions -----------------------------------------------------------

@dataclass(frozen=True)
class CostFunction:
    """Signaling cost ``c(r, t)`` and the derivatives the solver needs."""

    name: str
    c: Callable
    dc_dr: Callable
    d2c_dr2: Callable
    d2c_drdt: Callable

    def validate(self, t_grid: Optional[np.ndarray] = None, r_grid: Optional[np.ndarray] = None):
        """Check zero marginal cost at truth, convexity in ``r`` and ``d2c/drdt < 0``."""
        t = np.linspace(0.0, 1.0, 101) if t_grid is None else np.asarray(t_grid, dtype=float)
        r = np.linspace(0.0, 2.0, 101) if r_grid is None else np.asarray(r_grid, dtype=float)
        if np.max(np.abs(self.dc_dr(t, t))) > 1e-10:
            raise ValueError(f"{self.name}: marginal cost at truthful reports must vanish")
        R, T = np.meshgrid(r, t)
        if not np.all(self.d2c_dr2(R, T) > 0):
            raise ValueError(f"{self.name}: cost must be strictly convex in the report")
        if not np.all(self.d2c_drdt(R, T) < 0):
            raise ValueError(f"{self.name}: cross derivative must be negative")


def quadratic_cost() -> CostFunction:
    """``c(r, t) = (r - t)**2``."""
    return CostFunction(
        name="quadratic",
        c=lambda r, t: (np.asarray(r) - t) ** 2,
        dc_dr=lambda r, t: 2.0 * (np.asarray(r) - t),
        d2c_dr2=lambda r, t: np.full(np.broadcast(r, t).shape, 2.0),
        d2c_drdt=lambda r, t: np.full(np.broadcast(r, t).shape, -2.0),
    )


@dataclass(frozen=True)
class SingleCrossingReport:
    """Grid points ``(t, r)`` with ``t < r`` where the cost-ratio bound fails."""

    checked: int
    violations: np.ndarray   # rows (t, r, ratio, bound)

    @property
    def holds(self) -> bool:
        return self.violations.shape[0] == 0

    @property
    def min_violating_report(self) -> Optional[float]:
        return None if self.holds else float(self.violations[:, 1].min())


def check_single_crossing(cost: CostFunction, t_grid, r_grid) -> SingleCrossingReport:
    """Check ``d2c/drdt / dc/dr <= -1/(1 - t)`` for ``t < 1`` and ``t < r``."""
    T, R = np.meshgrid(np.asarray(t_grid, dtype=float), np.asarray(r_grid, dtype=float),
                       indexing="ij")
    keep = (T < 1.0) & (R > T)
    t, r = T[keep], R[keep]
    ratio = np.asarray(cost.d2c_drdt(r, t), dtype=float) / np.asarray(cost.dc_dr(r, t), dtype=float)
    bound = -1.0 / (1.0 - t)
    bad = ratio > bound + 1e-12 * np.maximum(1.0, np.abs(bound))
    out = np.column_stack([t[bad], r[bad], ratio[bad], bound[bad]])
    return SingleCrossingReport(int(keep.sum()), out)


# -- posterior and marginal benefit ---------------------------------------------

def _rows(experiment: Experiment):
    if experiment.num_states != 2:
        raise ValueError("signaling experiments have a binary state")
    return experiment.likelihood[0], experiment.likelihood[1]


def posterior_beta(experiment: Experiment, signal: int, pi):
    """Receiver's posterior that the state is 1 after ``signal`` from interim belief ``pi``."""
    g0, g1 = _rows(experiment)
    pi = np.asarray(pi, dtype=float)
    if np.any((pi < 0) | (pi > 1)):
        raise ValueError("interim belief must lie in [0, 1]")
    den = pi * g1[signal] + (1.0 - pi) * g0[signal]
    if np.any(den <= 0):
        raise ValueError(f"signal {signal} has zero probability at this belief")
    out = pi * g1[signal] / den
    return float(out) if out.ndim == 0 else out


def expected_posterior(experiment: Experiment, t, pi):
    """``E_{s|t}[beta(s; pi)]``."""
    g0, g1 = _rows(experiment)
    t = np.asarray(t, dtype=float)[..., None]
    pi = np.asarray(pi, dtype=float)[..., None]
    p_sig = t * g1 + (1.0 - t) * g0
    den = pi * g1 + (1.0 - pi) * g0
    beta = np.divide(pi * g1, den, out=np.zeros(np.broadcast(p_sig, den).shape), where=den > 0)
    return (p_sig * beta).sum(axis=-1)


def marginal_benefit(t, experiment: Experiment):
    """``d/dpi E_{s|t}[beta(s; pi)]`` at ``pi = t``.

    Equals ``E_{s|t}[beta(1 - beta)] / (t(1 - t))``, which simplifies to
    ``sum_s g0(s) g1(s) / P(s|t)``; the simplified form also gives the
    one-sided limits at ``t = 0`` and ``t = 1``.
    """
    g0, g1 = _rows(experiment)
    scalar = np.ndim(t) == 0
    out = kernels.marginal_benefit(g0, g1, np.atleast_1d(np.asarray(t, dtype=float)))
    return float(out[0]) if scalar else out


def is_fully_informative(experiment: Experiment) -> bool:
    g0, g1 = _rows(experiment)
    return bool(np.all(g0 * g1 == 0))


# -- model and solver -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SignalingModel:
    experiment: Experiment
    cost: CostFunction = field(default_factory=quadratic_cost)
    eps: float = 1e-4
    step: float = 1.0 / 4000
    n_grid: int = 4001
    boundary_informative: bool = False
    max_halvings: int = 8

    def __post_init__(self):
        g0, g1 = _rows(self.experiment)
        if not is_mlrp_experiment(self.experiment):
            raise ValueError("experiment signals must be ordered so that MLRP holds")
        if np.any((g0 == 0) & (g1 == 0)):
            raise ValueError("a signal has zero probability in both states")
        if not self.boundary_informative and np.any(self.experiment.likelihood <= 0):
            raise ValueError("likelihoods must be positive unless flagged boundary_informative")
        if not 0 < self.eps < 0.5 or self.step <= 0 or self.n_grid < 3:
            raise ValueError("invalid numerical settings")
        self.cost.validate()

    def with_experiment(self, experiment: Experiment) -> "SignalingModel":
        boundary = bool(np.any(experiment.likelihood <= 0))
        return replace(self, experiment=experiment,
                       boundary_informative=self.boundary_informative or boundary)


@dataclass(frozen=True)
class LCSESolution:
    t: np.ndarray
    rho: np.ndarray
    cost: np.ndarray
    marginal_benefit: np.ndarray
    monotone: bool
    ode_residual: float
    step: float
    nodes: int
    single_crossing: SingleCrossingReport = field(repr=False)

    @property
    def inflates(self) -> bool:
        """``rho(t) > t`` on every grid point past the first."""
        return bool(np.all(self.rho[1:] > self.t[1:]))


def _ode_residual(cost, g0, g1, rho, t, h, t_end):
    """Max ``|MB(t) dt/drho - dc/dr(rho, t)|`` with a 5-point derivative stencil."""
    if rho.size < 5:
        return np.inf
    n_in = int(np.searchsorted(t, t_end, side="right"))
    idx = np.arange(2, min(n_in, rho.size - 2))
    if idx.size == 0:
        return np.inf
    deriv = (-t[idx + 2] + 8 * t[idx + 1] - 8 * t[idx - 1] + t[idx - 2]) / (12 * h)
    mb = kernels.marginal_benefit(g0, g1, np.clip(t[idx], 0.0, 1.0))
    return float(np.max(np.abs(mb * deriv - cost.dc_dr(rho[idx], t[idx]))))


def _integrate(model: SignalingModel, g0, g1, h, t_end):
    max_nodes = int(4.0 / h) + 16
    if model.cost.name == "quadratic":
        return kernels.lcse_quadratic(g0, g1, h, t_end, max_nodes)
    cost = model.cost
    g0l, g1l = list(map(float, g0)), list(map(float, g1))

    def rhs(r, t):
        tc = min(max(t, 0.0), 1.0)
        return float(cost.dc_dr(r, t)) / _pykernels._mb_scalar(g0l, g1l, tc)

    return _pykernels.lcse_integrate(rhs, h, t_end, max_nodes)


def solve_lcse(model: SignalingModel) -> LCSESolution:
    """Least-cost separating strategy on ``n_grid`` types spanning ``[0, 1 - eps]``."""
    g0, g1 = _rows(model.experiment)
    t_end = 1.0 - model.eps
    t_out = np.linspace(0.0, t_end, model.n_grid)
    sc = check_single_crossing(model.cost, np.linspace(0.0, t_end, 41), np.linspace(0.0, 2.0, 81))
    if is_fully_informative(model.experiment):
        # zero marginal benefit everywhere: truthful reporting is the least-cost selection
        return LCSESolution(t_out, t_out.copy(), model.cost.c(t_out, t_out),
                            np.zeros_like(t_out), True, 0.0, 0.0, 0, sc)
    h = model.step
    last = None
    for _ in range(model.max_halvings + 1):
        rho_n, t_n, d_n, status = _integrate(model, g0, g1, h, t_end)
        if status == kernels.OK:
            residual = _ode_residual(model.cost, g0, g1, rho_n, t_n, h, t_end)
            if residual <= RESIDUAL_TOL:
                break
            last = f"ODE residual {residual:.3g} at step {h:.3g}"
        else:
            last = f"integrator status {status} at step {h:.3g}"
        h /= 2
    else:
        raise IntegrationError(f"LCSE integration failed: {last}")
    rho = kernels.hermite_invert(rho_n, t_n, d_n, t_out)
    rho[0] = 0.0
    return LCSESolution(
        t=t_out,
        rho=rho,
        cost=np.asarray(model.cost.c(rho, t_out), dtype=float),
        marginal_benefit=kernels.marginal_benefit(g0, g1, t_out),
        monotone=bool(np.all(np.diff(rho) > 0)),
        ode_residual=residual,
        step=h,
        nodes=int(rho_n.size),
        single_crossing=sc,
    )


def uninformative_quadratic_defect(solution: LCSESolution) -> float:
    """Max ``|t - (rho - 1/2 + exp(-2 rho)/2)|``: the closed form for cost ``(r-t)^2``, MB = 1."""
    rho = solution.rho
    return float(np.max(np.abs(solution.t - (rho - 0.5 + 0.5 * np.exp(-2.0 * rho)))))


# -- comparative statics --------------------------------------------------------

@dataclass(frozen=True)
class InformativenessComparison:
    t: np.ndarray
    mb_more: np.ndarray
    mb_less: np.ndarray
    rho_more: np.ndarray
    rho_less: np.ndarray
    cost_more: np.ndarray
    cost_less: np.ndarray
    slack: float

    @property
    def mb_gap(self) -> float:
        """Min of ``MB_less - MB_more``; nonnegative when ordered."""
        return float(np.min(self.mb_less - self.mb_more))

    @property
    def rho_gap(self) -> float:
        return float(np.min(self.rho_less - self.rho_more))

    @property
    def cost_gap(self) -> float:
        return float(np.min(self.cost_less - self.cost_more))

    @property
    def mb_ordered(self) -> bool:
        return self.mb_gap >= -self.slack

    @property
    def rho_ordered(self) -> bool:
        return self.rho_gap >= -self.slack

    @property
    def cost_ordered(self) -> bool:
        return self.cost_gap >= -self.slack


def compare_informativeness(model: SignalingModel, more: Experiment, less: Experiment,
                            slack: float = 1e-7, check_ranked: bool = True
                            ) -> InformativenessComparison:
    """Marginal benefit, strategy and cost under ``more`` versus its garbling ``less``.

    ``model`` supplies the cost and numerical settings; its experiment is
    replaced. Signals of both experiments are sorted by likelihood ratio.
    """
    if check_ranked and find_garbling(more, less) is None:
        raise NotRankedError("first experiment is not more informative than the second")
    sol_more = solve_lcse(model.with_experiment(order_signals_binary(more)))
    sol_less = solve_lcse(model.with_experiment(order_signals_binary(less)))
    return InformativenessComparison(
        t=sol_more.t,
        mb_more=sol_more.marginal_benefit,
        mb_less=sol_less.marginal_benefit,
        rho_more=sol_more.rho,
        rho_less=sol_less.rho,
        cost_more=sol_more.cost,
        cost_less=sol_less.cost,
        slack=slack,
    )


def random_ranked_pair(rng, max_signals: int = 6):
    """Positive binary-state experiment and a random garbling of it, signals sorted."""
    K = int(rng.integers(2, max_signals + 1))
    K2 = int(rng.integers(1, max_signals + 1))
    g = rng.dirichlet(np.ones(K), size=2)
    more = order_signals_binary(Experiment(g / g.sum(axis=1, keepdims=True)))
    less = order_signals_binary(apply_garbling(more, random_garbling(rng, K, K2)))
    return more, less


def ranked_pair_campaign(model: SignalingModel, pairs: int = 1000, seed: int = 0,
                         max_signals: int = 6, slack: float = 1e-7) -> dict:
    """Orderings of marginal benefit, strategy and cost over random ranked pairs."""
    worst = {"mb_gap": np.inf, "rho_gap": np.inf, "cost_gap": np.inf}
    failures = []
    for trial in range(pairs):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(trial,)))
        more, less = random_ranked_pair(rng, max_signals)
        cmp = compare_informativeness(model, more, less, slack=slack, check_ranked=False)
        gaps = {"mb_gap": cmp.mb_gap, "rho_gap": cmp.rho_gap, "cost_gap": cmp.cost_gap}
        for k, v in gaps.items():
            worst[k] = min(worst[k], v)
        if not (cmp.mb_ordered and cmp.rho_ordered and cmp.cost_ordered):
            failures.append({"trial": trial, "more": more.likelihood.tolist(),
                             "less": less.likelihood.tolist(), **gaps})
    return {"pairs": pairs, "ordered": pairs - len(failures),
            **{k: float(v) for k, v in worst.items()}, "failures": failures}


# -- reversals without linearity or MLRP ----------------------------------------

@dataclass(frozen=True)
class ConvexPayoffReport:
    t: np.ndarray
    value: np.ndarray      # d/dpi E_{s|t}[beta/(1-beta)] at pi = t
    baseline: np.ndarray   # the same for an uninformative experiment: 1/(1-t)^2
    status: str            # "equality", "reversal", "reversal extreme" or "fail"

    @property
    def holds(self) -> bool:
        return self.status != "fail"


def convex_payoff_marginal_benefit(experiment: Experiment, t):
    """``(1/(t(1-t))) E_{s|t}[beta(s;t)/(1-beta(s;t))]``; infinite if some signal proves state 1."""
    g0, g1 = _rows(experiment)
    t = np.asarray(t, dtype=float)[..., None]
    p_sig = t * g1 + (1.0 - t) * g0
    with np.errstate(divide="ignore", invalid="ignore"):
        beta = np.where(p_sig > 0, t * g1 / p_sig, 0.0)
        odds = np.where(p_sig > 0, beta / (1.0 - beta), 0.0)
        total = (p_sig * odds).sum(axis=-1)
    return total / (t[..., 0] * (1.0 - t[..., 0]))


def appendix_b1_nonlinear_check(experiment: Experiment, t_grid=None,
                                tol: float = 1e-12) -> ConvexPayoffReport:
    """Marginal benefit under the convex payoff ``beta/(1-beta)`` versus no information."""
    t = np.linspace(0.01, 0.99, 99) if t_grid is None else np.asarray(t_grid, dtype=float)
    if np.any((t <= 0) | (t >= 1)):
        raise ValueError("types must be interior")
    value = convex_payoff_marginal_benefit(experiment, t)
    baseline = 1.0 / (1.0 - t) ** 2
    if not np.all(np.isfinite(value)):
        status = "reversal extreme"
    else:
        gap = (value - baseline) / baseline
        if np.any(gap < -tol):
            status = "fail"
        elif np.all(np.abs(gap) <= tol):
            status = "equality"
        else:
            status = "reversal"
    return ConvexPayoffReport(t, value, baseline, status)


def _three_state_belief(z, t):
    return Belief(np.array([z, 1.0 - z * (1.0 + t), z * t]))


@dataclass(frozen=True)
class ThreeStateRow:
    t: float
    uninformative: float           # closed form z
    informative: float             # closed form 2z/(1+t)
    uninformative_numeric: float
    informative_numeric: float


@dataclass(frozen=True)
class ThreeStateTable:
    z: float
    rows: tuple

    @property
    def max_defect(self) -> float:
        return max(max(abs(r.uninformative - r.uninformative_numeric),
                       abs(r.informative - r.informative_numeric)) for r in self.rows)

    @property
    def reversal_holds(self) -> bool:
        return all(r.informative >= r.uninformative for r in self.rows)


def appendix_b2_three_state_check(z: float, t_grid: Sequence[float] = None,
                                  h: float = 1e-5) -> ThreeStateTable:
    """Marginal benefit in a three-state model, uninformative vs a non-MLRP experiment.

    The sender of type ``t`` holds belief ``(z, 1 - z(1+t), z t)`` over states
    ``(0, 1, 2)``; the receiver who believes type ``t_hat`` holds the same
    formula at ``t_hat``. Closed forms are checked against finite differences
    of the expected receiver mean, computed by Bayes updating.
    """
    if not 0 < z < 0.5:
        raise ValueError("z must lie in (0, 1/2)")
    ts = np.linspace(0.0, 1.0, 11) if t_grid is None else np.asarray(t_grid, dtype=float)
    if np.any((ts < 0) | (ts > 1)):
        raise ValueError("types must lie in [0, 1]")
    states = StateSpace([0.0, 1.0, 2.0])
    informative = NON_MLRP_EXPERIMENT
    blind = uninformative(3)

    def derivative(exp, t):
        sender = _three_state_belief(z, t)

        def f(t_hat):
            return expected_cross_posterior_mean(sender, _three_state_belief(z, t_hat), exp, states)

        if t - h >= 0:
            return (f(t + h) - f(t - h)) / (2 * h)
        return (-3 * f(t) + 4 * f(t + h) - f(t + 2 * h)) / (2 * h)

    rows = tuple(
        ThreeStateRow(float(t), z, 2 * z / (1 + t), derivative(blind, t), derivative(informative, t))
        for t in ts
    )
    return ThreeStateTable(z, rows)


convex_payoff_reversal_check = appendix_b1_nonlinear_check
three_state_reversal_check = appendix_b2_three_state_check
