"""Finite state spaces, beliefs, experiments and Bayes updating.

Also holds the stochastic-order predicates (likelihood-ratio dominance,
first-order stochastic dominance, MLRP of an experiment). All of them are
evaluated with cross-products, never ratios, so zero probabilities are
handled without special cases.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels

STOCHASTIC_TOL = 1e-12
ORDER_TOL = 1e-12


class UnreachableSignalError(ValueError):
    """A signal has zero marginal probability under the belief being updated."""


def _frozen_array(x, ndim):
    a = np.array(x, dtype=float)
    if a.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("entries must be finite")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Ordered real states ``w_1 <= ... <= w_L``; ties are allowed."""

    values: np.ndarray

    def __post_init__(self):
        v = _frozen_array(self.values, 1)
        if v.size < 2:
            raise ValueError("a state space needs at least two states")
        if np.any(np.diff(v) < 0):
            raise ValueError("state values must be sorted ascending")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    @property
    def strictly_increasing(self) -> bool:
        return bool(np.all(np.diff(self.values) > 0))

    def relabel(self, h: Callable) -> "StateSpace":
        """State space with every value replaced by ``h(value)``."""
        return StateSpace(_apply_monotone(h, self.values))


@dataclass(frozen=True, eq=False)
class Belief:
    """A probability vector over the states of some :class:`StateSpace`."""

    probs: np.ndarray

    def __post_init__(self):
        p = _frozen_array(self.probs, 1)
        if np.any(p < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(p.sum() - 1.0) > STOCHASTIC_TOL:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        object.__setattr__(self, "probs", p)

    def __len__(self):
        return self.probs.size

    @property
    def full_support(self) -> bool:
        return bool(np.all(self.probs > 0))

    @classmethod
    def normalized(cls, weights) -> "Belief":
        """Belief proportional to nonnegative ``weights``."""
        w = np.asarray(weights, dtype=float)
        total = w.sum()
        if not total > 0:
            raise ValueError("weights must have positive mass")
        return cls(w / total)


@dataclass(frozen=True, eq=False)
class Experiment:
    """State-conditional signal distributions.

    ``likelihood[l, k]`` is the probability of signal ``k`` in state ``l``.
    Signals are ordered by column index.
    """

    likelihood: np.ndarray
    name: str = field(default="", compare=False)

    def __post_init__(self):
        g = _frozen_array(self.likelihood, 2)
        if g.shape[1] < 1:
            raise ValueError("an experiment needs at least one signal")
        if np.any(g < 0):
            raise ValueError("likelihoods must be nonnegative")
        bad = np.abs(g.sum(axis=1) - 1.0) > STOCHASTIC_TOL
        if np.any(bad):
            raise ValueError(f"rows {np.flatnonzero(bad).tolist()} do not sum to 1")
        object.__setattr__(self, "likelihood", g)

    @property
    def num_states(self) -> int:
        return self.likelihood.shape[0]

    @property
    def num_signals(self) -> int:
        return self.likelihood.shape[1]


@dataclass(frozen=True)
class PosteriorReport:
    """Posteriors for the signals a prior can produce.

    Zero-probability signals are dropped; ``signals`` lists the surviving
    column indices.
    """

    signals: tuple
    marginals: np.ndarray
    posteriors: tuple
    means: np.ndarray


def _check_dims(prior: Belief, exp: Experiment):
    if len(prior) != exp.num_states:
        raise ValueError(f"belief has {len(prior)} states, experiment has {exp.num_states}")


def _apply_monotone(h, values):
    mapped = np.array([float(h(v)) for v in values])
    if np.any(np.diff(mapped) < 0):
        raise ValueError("relabeling map must be weakly increasing on the states")
    return mapped


def _state_values(states, h=None):
    values = states.values if isinstance(states, StateSpace) else np.asarray(states, dtype=float)
    return values if h is None else _apply_monotone(h, values)


def marginal(prior: Belief, exp: Experiment) -> np.ndarray:
    """Signal distribution ``P(s_k) = sum_l prior_l p(s_k|w_l)``."""
    _check_dims(prior, exp)
    return prior.probs @ exp.likelihood


def update(prior: Belief, exp: Experiment, signal: int) -> Belief:
    """Bayes posterior after observing signal index ``signal``."""
    _check_dims(prior, exp)
    joint = prior.probs * exp.likelihood[:, signal]
    total = joint.sum()
    if not total > 0:
        raise UnreachableSignalError(f"signal {signal} has zero probability under the prior")
    post = joint / total
    # renormalize away the last ulp so the Belief invariant holds exactly
    return Belief(post / post.sum())


def posterior_mean(b: Belief, states, h: Optional[Callable] = None) -> float:
    """``sum_l h(w_l) b_l``; the identity map when ``h`` is omitted."""
    values = _state_values(states, h)
    if values.size != len(b):
        raise ValueError("belief and state space differ in length")
    return float(np.dot(values, b.probs))


def posterior_report(prior: Belief, exp: Experiment, states, h=None) -> PosteriorReport:
    _check_dims(prior, exp)
    values = _state_values(states, h)
    marg = marginal(prior, exp)
    keep = np.flatnonzero(marg > 0)
    posts = tuple(update(prior, exp, int(k)) for k in keep)
    means = np.array([float(np.dot(values, p.probs)) for p in posts])
    return PosteriorReport(tuple(int(k) for k in keep), marg[keep], posts, means)


def expected_cross_posterior_mean(prior_i: Belief, prior_j: Belief, exp: Experiment,
                                  states, h: Optional[Callable] = None) -> float:
    """``i``'s ex-ante expectation of ``j``'s posterior mean under ``exp``."""
    _check_dims(prior_i, exp)
    _check_dims(prior_j, exp)
    values = _state_values(states, h)
    value, bad = kernels.cross_posterior_mean(prior_i.probs, prior_j.probs,
                                              exp.likelihood, values)
    if bad >= 0:
        raise UnreachableSignalError(
            f"signal {bad} is possible under prior i but has zero probability under prior j")
    return float(value)


def _strict_pairs(n, values=None):
    """Index pairs ``(lo, hi)``, ``lo < hi``, with strictly ordered values."""
    lo, hi = np.triu_indices(n, k=1)
    if values is not None:
        keep = values[hi] > values[lo]
        lo, hi = lo[keep], hi[keep]
    return lo, hi


def is_lr_dominated(lo: Belief, hi: Belief, states=None) -> bool:
    """True iff ``lo <=_LR hi``: ``hi(w')lo(w) >= lo(w')hi(w)`` for all ``w' > w``.

    Every pair is checked, not just adjacent ones, since zeros break the
    transitivity that adjacent checks rely on. With ``states`` given, pairs of
    tied states are exempt.
    """
    a, b = lo.probs, hi.probs
    if a.size != b.size:
        raise ValueError("beliefs differ in length")
    values = None if states is None else _state_values(states)
    i, j = _strict_pairs(a.size, values)
    return bool(np.all(b[j] * a[i] - a[j] * b[i] >= -ORDER_TOL))


def is_fosd_dominated(lo: Belief, hi: Belief) -> bool:
    """True iff every upper cumulative sum of ``hi`` is at least that of ``lo``."""
    a, b = lo.probs, hi.probs
    if a.size != b.size:
        raise ValueError("beliefs differ in length")
    upper_lo = np.cumsum(a[::-1])[::-1]
    upper_hi = np.cumsum(b[::-1])[::-1]
    return bool(np.all(upper_hi - upper_lo >= -ORDER_TOL))


def mlrp_minors(exp: Experiment, states=None) -> np.ndarray:
    """All ``p(s'|w')p(s|w) - p(s'|w)p(s|w')`` for ``s' > s`` and ``w' > w``."""
    g = exp.likelihood
    values = None if states is None else _state_values(states)
    wl, wh = _strict_pairs(g.shape[0], values)
    sl, sh = np.triu_indices(g.shape[1], k=1)
    if wl.size == 0 or sl.size == 0:
        return np.zeros(0)
    hi_hi = g[np.ix_(wh, sh)]
    lo_lo = g[np.ix_(wl, sl)]
    lo_hi = g[np.ix_(wl, sh)]
    hi_lo = g[np.ix_(wh, sl)]
    return (hi_hi * lo_lo - lo_hi * hi_lo).ravel()


def is_mlrp_experiment(exp: Experiment, states=None) -> bool:
    """Monotone likelihood ratio under the column order of ``exp``."""
    return bool(np.all(mlrp_minors(exp, states) >= -ORDER_TOL))
