"""Expected cross-posterior-mean inequalities and their counterexamples.

For likelihood-ratio ordered priors ``beta_a <=_LR beta_b`` and MLRP
experiments ``E`` (more informative) and ``E~`` (a garbling of ``E``)::

    m_A <= E_A^E[m_B] <= E_A^E~[m_B] <= m_B
    m_A <= E_B^E~[m_A] <= E_B^E[m_A] <= m_B

This module evaluates those chains, the expected-disagreement ordering that
accompanies them, the direction/undershooting split, the two constructions
showing the ordering hypotheses cannot be dropped, and a seeded randomized
campaign over all of the above.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .beliefs import (
    Belief,
    Experiment,
    StateSpace,
    UnreachableSignalError,
    expected_cross_posterior_mean,
    is_fosd_dominated,
    is_lr_dominated,
    is_mlrp_experiment,
    posterior_mean,
)
from .blackwell import (
    GarblingKernel,
    apply_garbling,
    find_garbling,
    pool_adjacent_signals,
    pool_pair_reveal,
    random_garbling,
    random_mlrp_experiment,
    threshold_reveal,
)

RESIDUAL_TOL = 1e-10


class HypothesisError(ValueError):
    """Inputs do not satisfy the ordering hypotheses an operation requires."""


class NotGarblingError(ValueError):
    """The less informative experiment is not a garbling of the more informative one."""


class NoViolatingIndexError(ValueError):
    """A counterexample construction found no index to build on."""


@dataclass(frozen=True)
class InequalityCheck:
    """``lhs <= rhs`` with ``residual = rhs - lhs``."""

    name: str
    lhs: float
    rhs: float

    @property
    def residual(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.residual >= -RESIDUAL_TOL

    @property
    def status(self) -> str:
        r = self.residual
        if r > RESIDUAL_TOL:
            return "strict"
        return "weak-tie" if r >= -RESIDUAL_TOL else "fail"

    def as_record(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs,
                "residual": self.residual, "pass": self.passed, "status": self.status}


@dataclass(frozen=True)
class IvpReport:
    m_a: float
    m_b: float
    a_expects_b_more: float   # E_A^E[m_B]
    a_expects_b_less: float   # E_A^E~[m_B]
    b_expects_a_more: float   # E_B^E[m_A]
    b_expects_a_less: float   # E_B^E~[m_A]
    warnings: tuple = ()

    @property
    def checks(self) -> tuple:
        return (
            InequalityCheck("a_undershoot_more", self.m_a, self.a_expects_b_more),
            InequalityCheck("a_intensity", self.a_expects_b_more, self.a_expects_b_less),
            InequalityCheck("a_direction_less", self.a_expects_b_less, self.m_b),
            InequalityCheck("b_direction_less", self.m_a, self.b_expects_a_less),
            InequalityCheck("b_intensity", self.b_expects_a_less, self.b_expects_a_more),
            InequalityCheck("b_undershoot_more", self.b_expects_a_more, self.m_b),
        )

    def check(self, name: str) -> InequalityCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def all_hold(self) -> bool:
        return all(c.passed for c in self.checks)


@dataclass(frozen=True)
class DisagreementReport:
    """``E_i[|m_i^s - m_j^s|]`` under the more and less informative experiment."""

    a_more: float
    a_less: float
    b_more: float
    b_less: float

    @property
    def checks(self) -> tuple:
        return (
            InequalityCheck("a_disagreement", self.a_more, self.a_less),
            InequalityCheck("b_disagreement", self.b_more, self.b_less),
        )

    @property
    def all_hold(self) -> bool:
        return all(c.passed for c in self.checks)


@dataclass(frozen=True)
class DecomposedReport:
    """Direction and undershooting verdicts for one experiment.

    A side is None when that individual can see a signal the other one
    rules out, so the expectation is undefined.
    """

    m_a: float
    m_b: float
    a_expects_b: Optional[float]
    b_expects_a: Optional[float]

    @property
    def direction_a(self) -> Optional[InequalityCheck]:
        if self.a_expects_b is None:
            return None
        return InequalityCheck("a_direction", self.a_expects_b, self.m_b)

    @property
    def undershoot_a(self) -> Optional[InequalityCheck]:
        if self.a_expects_b is None:
            return None
        return InequalityCheck("a_undershoot", self.m_a, self.a_expects_b)

    @property
    def direction_b(self) -> Optional[InequalityCheck]:
        if self.b_expects_a is None:
            return None
        return InequalityCheck("b_direction", self.m_a, self.b_expects_a)

    @property
    def undershoot_b(self) -> Optional[InequalityCheck]:
        if self.b_expects_a is None:
            return None
        return InequalityCheck("b_undershoot", self.b_expects_a, self.m_b)

    @property
    def checks(self) -> tuple:
        return tuple(c for c in (self.direction_a, self.undershoot_a,
                                 self.direction_b, self.undershoot_b) if c is not None)


def _as_space(states) -> StateSpace:
    return states if isinstance(states, StateSpace) else StateSpace(states)


def _resolve_kernel(more, less, kernel):
    if kernel is None:
        kernel = find_garbling(more, less)
        if kernel is None:
            raise NotGarblingError("no garbling maps the first experiment to the second")
        return kernel
    produced = apply_garbling(more, kernel).likelihood
    if np.max(np.abs(produced - less.likelihood)) > 1e-9:
        raise NotGarblingError("supplied kernel does not map the first experiment to the second")
    return kernel


def _require_lr(states, beta_a, beta_b):
    if not is_lr_dominated(beta_a, beta_b, states):
        raise HypothesisError("priors are not likelihood-ratio ordered (need beta_a <=_LR beta_b)")


def _mlrp_warnings(states, more, less):
    notes = []
    for label, exp in (("more informative", more), ("less informative", less)):
        if not is_mlrp_experiment(exp, states):
            notes.append(f"{label} experiment is not MLRP; only the sub-inequalities "
                         "with weaker hypotheses are guaranteed")
    return tuple(notes)


def check_ivp_chain(states, beta_a: Belief, beta_b: Belief, more: Experiment,
                    less: Experiment, kernel: Optional[GarblingKernel] = None,
                    h=None) -> IvpReport:
    """Evaluate both three-link chains for ``more`` and its garbling ``less``."""
    states = _as_space(states)
    _require_lr(states, beta_a, beta_b)
    _resolve_kernel(more, less, kernel)
    notes = _mlrp_warnings(states, more, less)
    for note in notes:
        warnings.warn(note, stacklevel=2)
    return _chain(states, beta_a, beta_b, more, less, h, notes)


def _chain(states, beta_a, beta_b, more, less, h=None, notes=()):
    x = expected_cross_posterior_mean
    return IvpReport(
        m_a=posterior_mean(beta_a, states, h),
        m_b=posterior_mean(beta_b, states, h),
        a_expects_b_more=x(beta_a, beta_b, more, states, h),
        a_expects_b_less=x(beta_a, beta_b, less, states, h),
        b_expects_a_more=x(beta_b, beta_a, more, states, h),
        b_expects_a_less=x(beta_b, beta_a, less, states, h),
        warnings=notes,
    )


def expected_disagreement(prior_i: Belief, prior_j: Belief, exp: Experiment, states) -> float:
    """``E_i[|m_i^s - m_j^s|]`` over the signals ``i`` can see."""
    values = _as_space(states).values
    marg_i, means_i = kernels.posterior_means(prior_i.probs, exp.likelihood, values)
    marg_j, means_j = kernels.posterior_means(prior_j.probs, exp.likelihood, values)
    seen = marg_i > 0
    if np.any(seen & ~(marg_j > 0)):
        raise UnreachableSignalError("prior j rules out a signal prior i can see")
    return float(np.dot(marg_i[seen], np.abs(means_i[seen] - means_j[seen])))


def check_disagreement(states, beta_a: Belief, beta_b: Belief, more: Experiment,
                       less: Experiment, kernel: Optional[GarblingKernel] = None
                       ) -> DisagreementReport:
    states = _as_space(states)
    _require_lr(states, beta_a, beta_b)
    _resolve_kernel(more, less, kernel)
    return _disagreement(states, beta_a, beta_b, more, less)


def _disagreement(states, beta_a, beta_b, more, less):
    d = expected_disagreement
    return DisagreementReport(
        a_more=d(beta_a, beta_b, more, states),
        a_less=d(beta_a, beta_b, less, states),
        b_more=d(beta_b, beta_a, more, states),
        b_less=d(beta_b, beta_a, less, states),
    )


def check_decomposed(states, beta_a: Belief, beta_b: Belief, exp: Experiment) -> DecomposedReport:
    """Direction/undershooting verdicts with no hypotheses imposed."""
    states = _as_space(states)

    def safe(i, j):
        try:
            return expected_cross_posterior_mean(i, j, exp, states)
        except UnreachableSignalError:
            return None

    return DecomposedReport(
        m_a=posterior_mean(beta_a, states),
        m_b=posterior_mean(beta_b, states),
        a_expects_b=safe(beta_a, beta_b),
        b_expects_a=safe(beta_b, beta_a),
    )


def counterexample_direction(states, beta_a: Belief, beta_b: Belief):
    """Threshold experiment on which A expects B's mean to move past ``m_B``.

    Needs ``m_A <= m_B`` with ``beta_a`` not FOSD-below ``beta_b`` and
    ``w_1 < w_L``. Returns ``(experiment, DecomposedReport)`` with a strictly
    negative ``direction_a`` residual.
    """
    states = _as_space(states)
    L = len(states)
    m_a, m_b = posterior_mean(beta_a, states), posterior_mean(beta_b, states)
    if not states.values[0] < states.values[-1]:
        raise NoViolatingIndexError("all states carry the same value")
    if m_a > m_b + RESIDUAL_TOL:
        raise HypothesisError("construction needs m_A <= m_B")
    if is_fosd_dominated(beta_a, beta_b):
        raise NoViolatingIndexError("priors are FOSD ordered; the direction result holds")
    upper_a = np.cumsum(beta_a.probs[::-1])[::-1]
    upper_b = np.cumsum(beta_b.probs[::-1])[::-1]
    for k in range(2, L + 1):
        if upper_b[k - 1] < upper_a[k - 1]:
            exp = threshold_reveal(L, k)
            report = check_decomposed(states, beta_a, beta_b, exp)
            if report.direction_a is not None and report.direction_a.residual < -RESIDUAL_TOL:
                return exp, report
    raise NoViolatingIndexError("no threshold index yields a strict direction violation")


def lr_reversal_indices(beta_a: Belief, beta_b: Belief) -> list:
    """1-based ``l`` with ``beta_b(l+1)/beta_b(l) < beta_a(l+1)/beta_a(l)`` (cross-multiplied)."""
    a, b = beta_a.probs, beta_b.probs
    return [l + 1 for l in range(a.size - 1)
            if b[l + 1] * a[l] < a[l + 1] * b[l] - 1e-15]


def counterexample_undershoot(states, beta_a: Belief, beta_b: Belief):
    """Pooled-pair experiment on which A expects B's mean to fall below ``m_A``.

    Needs strictly increasing states, at least three of them, and an adjacent
    likelihood-ratio reversal. Returns ``(experiment, DecomposedReport)``.
    """
    states = _as_space(states)
    L = len(states)
    if L < 3:
        raise NoViolatingIndexError("a binary state leaves no pair to pool against a revealed state")
    if not states.strictly_increasing:
        raise HypothesisError("construction needs strictly increasing states")
    if is_lr_dominated(beta_a, beta_b, states):
        raise NoViolatingIndexError("priors are LR ordered; undershooting holds")
    for l in lr_reversal_indices(beta_a, beta_b):
        exp = pool_pair_reveal(L, l)
        report = check_decomposed(states, beta_a, beta_b, exp)
        if report.undershoot_a is not None and report.undershoot_a.residual < -RESIDUAL_TOL:
            return exp, report
    raise NoViolatingIndexError("no adjacent reversal yields a strict undershooting violation")


# Three states; the signal reveals whether the state is the middle one.
NON_MLRP_EXPERIMENT = Experiment([[0.0, 1.0], [1.0, 0.0], [0.0, 1.0]], name="middle_reveal")


def non_mlrp_instance(x: float):
    """States ``(0, 1, 2)``, ``beta_a = (1, 0, 0)``, ``beta_b = (0, x, 1 - x)``.

    A is sure of the lowest state and so expects the signal that pools the
    extremes, after which B learns the top state. A therefore expects B's
    mean to rise to 2, past ``m_B = 2 - x``, although the priors are LR
    ordered.
    Returns ``(states, beta_a, beta_b, experiment, DecomposedReport)``.
    """
    if not 0 < x < 1:
        raise ValueError("x must lie in (0, 1)")
    states = StateSpace([0.0, 1.0, 2.0])
    a = Belief([1.0, 0.0, 0.0])
    b = Belief([0.0, x, 1.0 - x])
    return states, a, b, NON_MLRP_EXPERIMENT, check_decomposed(states, a, b, NON_MLRP_EXPERIMENT)


# -- randomized campaign ------------------------------------------------------

def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent PCG64 stream for ``(seed, trial)``."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(trial,)))


def sample_states(rng, num_states: int, allow_ties: bool = True) -> StateSpace:
    if allow_ties and rng.random() < 0.2:
        return StateSpace(np.sort(rng.integers(0, 4, num_states)).astype(float))
    return StateSpace(np.sort(rng.uniform(-5.0, 5.0, num_states)))


def sample_lr_ordered_priors(rng, num_states: int):
    """``beta_a`` Dirichlet, ``beta_b`` proportional to ``beta_a * exp(tau)``, ``tau`` increasing."""
    beta_a = Belief.normalized(rng.dirichlet(np.ones(num_states)))
    steps = rng.exponential(rng.uniform(0.0, 2.0), num_states - 1)
    tau = np.concatenate([[0.0], np.cumsum(steps)])
    beta_b = Belief.normalized(beta_a.probs * np.exp(tau - tau.max()))
    return beta_a, beta_b


@dataclass
class TrialResult:
    trial: int
    mode: str
    num_states: int
    num_signals: int
    asserted: tuple
    failures: tuple
    disagreement_failures: tuple
    chain_asserted: bool
    equivalence_ok: bool
    min_residual: float
    instance: Optional[dict] = None

    @property
    def violated(self) -> bool:
        return bool(self.failures or self.disagreement_failures or not self.equivalence_ok)


GARBLING_ASSERTED = ("a_undershoot_more", "a_intensity", "b_intensity", "b_undershoot_more")
CHAIN_ASSERTED = tuple(c.name for c in IvpReport(0, 0, 0, 0, 0, 0).checks)


def run_trial(seed: int, trial: int, max_states: int, max_signals: int) -> TrialResult:
    """One campaign instance; even trials pool intervals, odd trials garble at random."""
    rng = trial_rng(seed, trial)
    L = int(rng.integers(2, max_states + 1))
    K = int(rng.integers(1, max_signals + 1))
    states = sample_states(rng, L)
    beta_a, beta_b = sample_lr_ordered_priors(rng, L)
    more = random_mlrp_experiment(rng, L, K)
    if trial % 2 == 0:
        mode = "pooling"
        cuts = sorted(int(c) for c in np.flatnonzero(rng.random(K - 1) < 0.5) + 1)
        less = pool_adjacent_signals(more, cuts)
        kernel_repr = {"cut_points": cuts}
    else:
        mode = "garbling"
        K2 = int(rng.integers(1, max_signals + 1))
        q = random_garbling(rng, K, K2, sparsity=0.3 if rng.random() < 0.5 else 0.0)
        less = apply_garbling(more, q)
        kernel_repr = {"kernel": q.matrix.tolist()}
    # a binary state satisfies every ordering hypothesis once signals are sorted
    full = mode == "pooling" or L == 2
    asserted = CHAIN_ASSERTED if full else GARBLING_ASSERTED

    report = _chain(states, beta_a, beta_b, more, less)
    failures = tuple(c.name for c in report.checks if c.name in asserted and not c.passed)
    residuals = [c.residual for c in report.checks if c.name in asserted]
    disagreement_failures = ()
    equivalence_ok = True
    if full:
        dis = _disagreement(states, beta_a, beta_b, more, less)
        disagreement_failures = tuple(c.name for c in dis.checks if not c.passed)
        residuals += [c.residual for c in dis.checks]
        equivalence_ok = (dis.checks[0].passed == report.check("a_intensity").passed
                          and dis.checks[1].passed == report.check("b_intensity").passed)
    result = TrialResult(
        trial=trial, mode=mode, num_states=L, num_signals=K, asserted=asserted,
        failures=failures, disagreement_failures=disagreement_failures,
        chain_asserted=full, equivalence_ok=equivalence_ok,
        min_residual=float(min(residuals)),
    )
    if result.violated:
        result.instance = {
            "seed": seed, "trial": trial, "states": states.values.tolist(),
            "beta_a": beta_a.probs.tolist(), "beta_b": beta_b.probs.tolist(),
            "more": more.likelihood.tolist(), "less": less.likelihood.tolist(),
            **kernel_repr,
            "checks": [c.as_record() for c in report.checks],
        }
    return result


@dataclass
class CampaignSummary:
    trials: int
    seed: int
    max_states: int
    max_signals: int
    mode_counts: dict
    chain_instances: int
    chain_violations: int
    subchain_violations: int
    disagreement_violations: int
    equivalence_mismatches: int
    min_residual: float
    failures: list = field(default_factory=list)

    @property
    def violations(self) -> int:
        return (self.chain_violations + self.subchain_violations
                + self.disagreement_violations + self.equivalence_mismatches)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["violations"] = self.violations
        return d


def _run_chunk(args):
    seed, trials, max_states, max_signals = args
    return [run_trial(seed, t, max_states, max_signals) for t in trials]


def run_property_campaign(trials: int = 10_000, max_states: int = 6, max_signals: int = 8,
                          seed: int = 0, workers: int = 1) -> CampaignSummary:
    """Seeded randomized check of the chains and the disagreement ordering.

    Violations are collected, not raised; each failing instance is kept in
    full for replay with :func:`run_trial`.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if max_states < 2 or max_signals < 1:
        raise ValueError("need max_states >= 2 and max_signals >= 1")
    indices = list(range(trials))
    if workers > 1:
        chunks = [indices[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_run_chunk, [(seed, c, max_states, max_signals) for c in chunks])
            results = [r for part in parts for r in part]
    else:
        results = _run_chunk((seed, indices, max_states, max_signals))
    results.sort(key=lambda r: r.trial)

    modes = {"garbling": 0, "pooling": 0}
    for r in results:
        modes[r.mode] += 1
    return CampaignSummary(
        trials=trials, seed=seed, max_states=max_states, max_signals=max_signals,
        mode_counts=modes,
        chain_instances=sum(r.chain_asserted for r in results),
        chain_violations=sum(bool(r.failures) for r in results if r.chain_asserted),
        subchain_violations=sum(bool(r.failures) for r in results if not r.chain_asserted),
        disagreement_violations=sum(bool(r.disagreement_failures) for r in results),
        equivalence_mismatches=sum(not r.equivalence_ok for r in results),
        min_residual=min(r.min_residual for r in results),
        failures=[r.instance for r in results if r.violated],
    )


def sample_direction_hypotheses(rng, max_states: int = 6):
    """States and priors with ``m_A <= m_B`` but no FOSD order (rejection sampling)."""
    while True:
        L = int(rng.integers(3, max_states + 1))
        states = sample_states(rng, L, allow_ties=False)
        a = Belief.normalized(rng.dirichlet(np.ones(L)))
        b = Belief.normalized(rng.dirichlet(np.ones(L)))
        if posterior_mean(a, states) > posterior_mean(b, states):
            a, b = b, a
        if not is_fosd_dominated(a, b):
            return states, a, b


def sample_undershoot_hypotheses(rng, max_states: int = 6):
    """Strictly increasing states and priors with ``beta_a`` not LR-below ``beta_b``.

    Also requires ``m_A <= m_B`` so the violation is not just a reversed
    ordering of the means.
    """
    while True:
        L = int(rng.integers(3, max_states + 1))
        states = sample_states(rng, L, allow_ties=False)
        a = Belief.normalized(rng.dirichlet(np.ones(L)))
        b = Belief.normalized(rng.dirichlet(np.ones(L)))
        if posterior_mean(a, states) > posterior_mean(b, states):
            a, b = b, a
        if not is_lr_dominated(a, b, states):
            return states, a, b


def run_counterexample_campaign(trials: int = 1000, seed: int = 0, max_states: int = 6) -> dict:
    """Both constructions over ``trials`` sampled prior pairs each."""
    out = {}
    for label, sampler, build, check in (
        ("direction", sample_direction_hypotheses, counterexample_direction, "direction_a"),
        ("undershoot", sample_undershoot_hypotheses, counterexample_undershoot, "undershoot_a"),
    ):
        fails = []
        worst = -np.inf
        for t in range(trials):
            rng = trial_rng(seed, t)
            states, a, b = sampler(rng, max_states)
            try:
                _, report = build(states, a, b)
                residual = getattr(report, check).residual
            except (NoViolatingIndexError, HypothesisError) as err:
                residual = None
                fails.append({"trial": t, "states": states.values.tolist(),
                              "beta_a": a.probs.tolist(), "beta_b": b.probs.tolist(),
                              "error": str(err)})
            if residual is not None:
                worst = max(worst, residual)
                if not residual < -RESIDUAL_TOL:
                    fails.append({"trial": t, "residual": residual})
        out[label] = {"trials": trials, "strict_violations": trials - len(fails),
                      "max_residual": float(worst), "failures": fails}
    return out
