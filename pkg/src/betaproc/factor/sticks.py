"""Monte-Carlo stick integrals and the sequential round-indicator prior.

Column k of Z is Bernoulli(pi_k) with pi_k = V_r prod_{j<r} (1 - V_j) and
V_j ~ Beta(1 - alpha, theta + j*alpha), r being the column's round.  The
sticks are integrated out by averaging over S sampled stick sequences.
"""
from __future__ import annotations

import logging
import math

import numpy as np
from scipy import special, stats

from ..process import BPParams, log_beta_pair
from ..rng import RandomStream

log = logging.getLogger(__name__)


def stick_log_pi(params: BPParams, n_samples: int, max_round: int, gen: np.random.Generator,
                 lead_shape=()):
    """Sampled (log pi, log(1 - pi)) for rounds 1..max_round.

    Rows share one stick sequence across rounds, so candidate rounds are
    compared with common random numbers.  Output shape is
    ``lead_shape + (n_samples, max_round)``.
    """
    shape = tuple(lead_shape) + (n_samples, max_round)
    b = params.theta + params.alpha * np.arange(1, max_round + 1)
    log_v, log_1mv = log_beta_pair(gen, 1.0 - params.alpha, np.broadcast_to(b, shape), shape)
    rest = _exclusive_cumsum(log_1mv)
    log_pi = log_v + rest
    log_1mpi = _log1m_exp(log_pi)
    # round 1: 1 - pi is exactly 1 - V_1, which log1p would lose near V_1 = 1
    log_1mpi[..., 0] = log_1mv[..., 0]
    return log_pi, log_1mpi


def _log1m_exp(a):
    # pi == 1 exactly gives -inf, which the weighted sums handle
    with np.errstate(divide="ignore"):
        return np.log1p(-np.exp(a))


def _exclusive_cumsum(a):
    out = np.zeros_like(a)
    np.cumsum(a[..., :-1], axis=-1, out=out[..., 1:])
    return out


def _weighted(m, logp):
    return np.where(m == 0, 0.0, m * logp)


def log_mc_average(m1, m0, log_pi, log_1mpi):
    """log of (1/S) sum_s pi_s**m1 (1 - pi_s)**m0 along the sample axis (-1)."""
    terms = _weighted(m1, log_pi) + _weighted(m0, log_1mpi)
    s = terms.shape[-1]
    return special.logsumexp(terms, axis=-1) - math.log(s)


def stick_mc_prob(m1: int, m0: int, round_: int, params: BPParams, n_samples: int,
                  stream: RandomStream) -> float:
    """Monte-Carlo estimate of p(column | round) with the sticks integrated out."""
    if n_samples < 1:
        raise ValueError("need at least one stick sample")
    if m1 == 0 and m0 == 0:
        return 1.0
    log_pi, log_1mpi = stick_log_pi(params, n_samples, round_, stream.gen)
    return float(np.exp(log_mc_average(m1, m0, log_pi[:, round_ - 1], log_1mpi[:, round_ - 1])))


def stay_log_prob(prev_count: int, gamma: float) -> float:
    """log P(next atom shares the current round | it already holds prev_count atoms).

    Equals log P(C > c) - log P(C >= c) for C ~ Poisson(gamma); -inf when
    the Poisson tail underflows.
    """
    if prev_count < 1:
        return -math.inf
    num = stats.poisson.logsf(prev_count, gamma)
    den = stats.poisson.logsf(prev_count - 1, gamma)
    if not np.isfinite(den):
        log.warning("round prior underflow at count %d (gamma=%g); using tail cases only",
                    prev_count, gamma)
        return -math.inf
    return float(min(num - den, 0.0))


def round_log_prior(prev_round: int, prev_count: int, gamma: float, candidates) -> np.ndarray:
    """Log prior of each candidate round for the next atom.

    ``prev_round`` is the previous atom's round (0 before the first atom)
    and ``prev_count`` the number of earlier atoms sharing it.  Staying in
    the round follows the Poisson survival ratio; jumping ahead h rounds
    needs h - 1 empty rounds and a nonempty one.
    """
    cand = np.asarray(candidates, dtype=np.int64)
    out = np.full(cand.shape, -np.inf)
    log_stay = stay_log_prob(prev_count, gamma) if prev_round > 0 else -math.inf
    log_leave = math.log1p(-math.exp(log_stay)) if log_stay > -math.inf else 0.0
    log_nonempty = math.log(-math.expm1(-gamma))
    h = cand - prev_round
    out[h == 0] = log_stay if prev_round > 0 else -np.inf
    ahead = h >= 1
    out[ahead] = log_leave + log_nonempty - gamma * (h[ahead] - 1)
    return out


class StickSequence:
    """Stick samples grown level by level, one sequence per sample row.

    Extending keeps earlier levels fixed, so successive candidate rounds
    are evaluated on the same sticks.
    """

    def __init__(self, params: BPParams, n_samples: int, gen: np.random.Generator):
        self.params = params
        self.n_samples = n_samples
        self.gen = gen
        self.log_pi = np.empty((n_samples, 0))
        self.log_1mpi = np.empty((n_samples, 0))
        self._rest = np.zeros(n_samples)

    @property
    def levels(self) -> int:
        return self.log_pi.shape[1]

    def extend(self, max_round: int) -> None:
        if max_round <= self.levels:
            return
        lev = np.arange(self.levels + 1, max_round + 1)
        shape = (self.n_samples, lev.size)
        b = np.broadcast_to(self.params.theta + self.params.alpha * lev, shape)
        log_v, log_1mv = log_beta_pair(self.gen, 1.0 - self.params.alpha, b, shape)
        rest = self._rest[:, None] + _exclusive_cumsum(log_1mv)
        log_pi = log_v + rest
        log_1mpi = _log1m_exp(log_pi)
        if self.levels == 0:
            log_1mpi[:, 0] = log_1mv[:, 0]
        self._rest = rest[:, -1] + log_1mv[:, -1]
        self.log_pi = np.hstack([self.log_pi, log_pi])
        self.log_1mpi = np.hstack([self.log_1mpi, log_1mpi])

    def log_prob(self, m1: int, m0: int, rounds) -> np.ndarray:
        """log p(column counts | round) for each round in ``rounds``."""
        rounds = np.asarray(rounds, dtype=np.int64)
        self.extend(int(rounds.max()))
        idx = rounds - 1
        return log_mc_average(m1, m0, self.log_pi[:, idx].T, self.log_1mpi[:, idx].T)
