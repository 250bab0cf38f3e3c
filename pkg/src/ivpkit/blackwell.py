"""Blackwell order on experiments over a common finite state space.

Dominance is decided by linear-program feasibility: ``E`` dominates ``E~``
when a row-stochastic kernel ``Q`` with ``E.likelihood @ Q == E~.likelihood``
exists. The LP is solved by the phase-1 simplex in :mod:`ivpkit.kernels`.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .beliefs import STOCHASTIC_TOL, Experiment

FEASIBILITY_TOL = 1e-9


class LPNonConvergenceError(RuntimeError):
    """The simplex solver stopped without a verdict."""


class NotRankedError(ValueError):
    """Experiments expected to be Blackwell ranked are not."""


@dataclass(frozen=True, eq=False)
class GarblingKernel:
    """Markov kernel ``matrix[s, s~] = Q(s~|s)``."""

    matrix: np.ndarray

    def __post_init__(self):
        q = np.array(self.matrix, dtype=float)
        if q.ndim != 2 or not np.all(np.isfinite(q)):
            raise ValueError("kernel must be a finite 2-d array")
        if np.any(q < 0):
            raise ValueError("kernel entries must be nonnegative")
        if np.any(np.abs(q.sum(axis=1) - 1.0) > STOCHASTIC_TOL):
            raise ValueError("kernel rows must sum to 1")
        q.setflags(write=False)
        object.__setattr__(self, "matrix", q)

    @property
    def shape(self):
        return self.matrix.shape


def apply_garbling(exp: Experiment, q: GarblingKernel) -> Experiment:
    """Experiment whose signal is ``exp``'s signal pushed through ``q``."""
    if q.shape[0] != exp.num_signals:
        raise ValueError(
            f"kernel has {q.shape[0]} source signals, experiment has {exp.num_signals}")
    g = exp.likelihood @ q.matrix
    return Experiment(g / g.sum(axis=1, keepdims=True))


def _garbling_lp(more: np.ndarray, less: np.ndarray):
    L, K = more.shape
    K2 = less.shape[1]
    n = K * K2
    rows = []
    rhs = []
    # sum_s p(s|w) Q(s~|s) = p~(s~|w)
    for w in range(L):
        for t in range(K2):
            row = np.zeros(n)
            row[t::K2] = more[w]
            rows.append(row)
            rhs.append(less[w, t])
    # sum_s~ Q(s~|s) = 1
    for s in range(K):
        row = np.zeros(n)
        row[s * K2:(s + 1) * K2] = 1.0
        rows.append(row)
        rhs.append(1.0)
    return np.array(rows), np.array(rhs)


def find_garbling(more: Experiment, less: Experiment,
                  max_iter: int = 10_000) -> Optional[GarblingKernel]:
    """A kernel turning ``more`` into ``less``, or None if none exists.

    Raises :class:`LPNonConvergenceError` if the simplex hits ``max_iter``.
    """
    if more.num_states != less.num_states:
        raise ValueError("experiments are defined on different state spaces")
    A, b = _garbling_lp(more.likelihood, less.likelihood)
    status, x, objective, _ = kernels.simplex_phase1(A, b, max_iter)
    if status == kernels.INFEASIBLE:
        return None
    if status != kernels.OK:
        raise LPNonConvergenceError(f"phase-1 simplex stopped with status {status}")
    x = np.clip(x, 0.0, None)
    support = np.flatnonzero(x > 0)
    if np.max(np.abs(A @ x - b)) > FEASIBILITY_TOL and support.size:
        # polish the basic solution against the original system
        sol, *_ = np.linalg.lstsq(A[:, support], b, rcond=None)
        x = np.zeros_like(x)
        x[support] = np.clip(sol, 0.0, None)
    Q = x.reshape(more.num_signals, less.num_signals)
    sums = Q.sum(axis=1, keepdims=True)
    if np.any(sums <= 0):
        return None
    Q = Q / sums
    if np.max(np.abs(more.likelihood @ Q - less.likelihood)) > FEASIBILITY_TOL:
        return None
    return GarblingKernel(Q)


def is_more_informative(more: Experiment, less: Experiment) -> bool:
    return find_garbling(more, less) is not None


def interval_kernel(num_signals: int, cut_points: Sequence[int]) -> GarblingKernel:
    """Kernel merging consecutive signals into blocks.

    ``cut_points`` are the 0-based indices where a new block starts, strictly
    increasing within ``1 .. num_signals - 1``; ``[]`` is one block.
    """
    cuts = [int(c) for c in cut_points]
    if any(b <= a for a, b in zip(cuts, cuts[1:])):
        raise ValueError("cut points must be strictly increasing")
    if cuts and (cuts[0] < 1 or cuts[-1] > num_signals - 1):
        raise ValueError(f"cut points must lie in 1..{num_signals - 1}")
    starts = [0] + cuts + [num_signals]
    Q = np.zeros((num_signals, len(starts) - 1))
    for block, (a, b) in enumerate(zip(starts, starts[1:])):
        Q[a:b, block] = 1.0
    return GarblingKernel(Q)


def pool_adjacent_signals(exp: Experiment, cut_points: Sequence[int]) -> Experiment:
    """Merge consecutive signals into interval blocks (see :func:`interval_kernel`)."""
    pooled = apply_garbling(exp, interval_kernel(exp.num_signals, cut_points))
    return Experiment(pooled.likelihood, name=f"pooled({exp.name})" if exp.name else "")


# -- constructors -------------------------------------------------------------

def binary_symmetric(q: float) -> Experiment:
    """Binary state, binary signal, each signal matching the state w.p. ``q``."""
    if not 0.5 <= q <= 1.0:
        raise ValueError("accuracy must lie in [0.5, 1]")
    return Experiment([[q, 1.0 - q], [1.0 - q, q]], name=f"binary_symmetric({q:g})")


def fully_informative(num_states: int) -> Experiment:
    if num_states < 2:
        raise ValueError("need at least two states")
    return Experiment(np.eye(num_states), name="fully_informative")


def uninformative(num_states: int = 2) -> Experiment:
    if num_states < 2:
        raise ValueError("need at least two states")
    return Experiment(np.ones((num_states, 1)), name="uninformative")


def threshold_reveal(num_states: int, k: int) -> Experiment:
    """Reveal only whether the state index is below ``k`` (1-based) or not."""
    if num_states < 2 or not 1 <= k <= num_states:
        raise ValueError(f"threshold index must lie in 1..{num_states}")
    g = np.zeros((num_states, 2))
    g[:k - 1, 0] = 1.0
    g[k - 1:, 1] = 1.0
    return Experiment(g, name=f"threshold_reveal({num_states},{k})")


def pool_pair_reveal(num_states: int, l: int) -> Experiment:
    """Reveal every state except states ``l`` and ``l + 1`` (1-based), which share a signal."""
    if num_states < 2 or not 1 <= l <= num_states - 1:
        raise ValueError(f"pooled index must lie in 1..{num_states - 1}")
    g = np.zeros((num_states, num_states - 1))
    for w in range(num_states):
        g[w, w if w < l else w - 1] = 1.0
    return Experiment(g, name=f"pool_pair_reveal({num_states},{l})")


# -- generators ---------------------------------------------------------------

def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_mlrp_experiment(seed, num_states: int, num_signals: int) -> Experiment:
    """Random MLRP experiment via exponential tilting.

    ``p(s|w)`` is proportional to ``exp(a_s b_w + c_s)`` with ``a`` and ``b``
    strictly increasing, so every 2x2 minor is nonnegative by construction.
    """
    if num_states < 2 or num_signals < 1:
        raise ValueError("need at least two states and one signal")
    rng = _rng(seed)
    a = np.cumsum(rng.uniform(0.05, 1.0, num_signals))
    b = np.cumsum(rng.uniform(0.05, 1.0, num_states))
    a -= a.mean()
    b -= b.mean()
    c = rng.normal(0.0, 1.0, num_signals)
    logits = np.outer(b, a) + c
    logits -= logits.max(axis=1, keepdims=True)
    g = np.exp(logits)
    return Experiment(g / g.sum(axis=1, keepdims=True), name="random_mlrp")


def random_garbling(seed, num_signals: int, num_targets: int,
                    sparsity: float = 0.0) -> GarblingKernel:
    """Random Markov kernel with Dirichlet rows; ``sparsity`` zeroes entries at random."""
    rng = _rng(seed)
    Q = rng.dirichlet(np.ones(num_targets), size=num_signals)
    if sparsity > 0 and num_targets > 1:
        mask = rng.random(Q.shape) < sparsity
        mask[np.arange(num_signals), rng.integers(0, num_targets, num_signals)] = False
        Q = np.where(mask, 0.0, Q)
        Q /= Q.sum(axis=1, keepdims=True)
    return GarblingKernel(Q)


def _lr_compare(g1, g0):
    def cmp(i, j):
        d = g1[i] * g0[j] - g1[j] * g0[i]
        return -1 if d < 0 else (1 if d > 0 else 0)
    return cmp


def order_signals_binary(exp: Experiment) -> Experiment:
    """Reorder a binary-state experiment's signals by likelihood ratio.

    Any binary-state experiment is MLRP under this order. All-zero columns
    are dropped.
    """
    if exp.num_states != 2:
        raise ValueError("signal reordering by likelihood ratio needs a binary state")
    g = exp.likelihood
    cols = [k for k in range(g.shape[1]) if g[:, k].sum() > 0]
    cols.sort(key=functools.cmp_to_key(_lr_compare(g[1], g[0])))
    return Experiment(g[:, cols], name=exp.name)


def garbling_round_trips(trials: int = 1000, seed: int = 0, max_states: int = 6,
                         max_signals: int = 8) -> dict:
    """Garble random MLRP experiments and check the LP recovers a kernel each time."""
    failures = []
    worst = 0.0
    for trial in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(trial,)))
        L = int(rng.integers(2, max_states + 1))
        K = int(rng.integers(1, max_signals + 1))
        K2 = int(rng.integers(1, max_signals + 1))
        more = random_mlrp_experiment(rng, L, K)
        less = apply_garbling(more, random_garbling(rng, K, K2, sparsity=0.3))
        q = find_garbling(more, less)
        if q is None:
            failures.append({"trial": trial, "more": more.likelihood.tolist(),
                             "less": less.likelihood.tolist()})
            continue
        worst = max(worst, float(np.max(np.abs(more.likelihood @ q.matrix - less.likelihood))))
    return {"trials": trials, "passed": trials - len(failures),
            "max_reconstruction_error": worst, "failures": failures}
