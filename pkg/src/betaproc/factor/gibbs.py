"""Gibbs conditionals for the factor model.

Each sampler updates a :class:`FactorState` in place and returns it.
"""
from __future__ import annotations

import logging
import math

import numpy as np
from scipy import linalg, special

from ..errors import DomainError, NumericalError
from .model import FactorHyper, FactorState, collapsed_row_loglik
from .sticks import StickSequence, log_mc_average, round_log_prior, stick_log_pi

log = logging.getLogger(__name__)

_BLOCK = 8


def sample_round_indicators(state: FactorState, config, gen: np.random.Generator) -> FactorState:
    """Resample each column's round in order, given the rounds before it.

    Candidate rounds start at the previous column's round and are scanned
    upward until the prior alone falls below ``round_tail_threshold`` times
    the largest unnormalised posterior mass seen so far.
    """
    params = state.params
    n = state.N
    m1 = state.m1
    log_thr = math.log(config.round_tail_threshold)
    new_r = state.r.copy()
    prev, count = 0, 0
    for k in range(state.K):
        sticks = StickSequence(params, config.n_sticks, gen)
        lo = max(prev, 1)
        masses, cands = [], []
        best = -math.inf
        start = lo
        while True:
            block = np.arange(start, start + _BLOCK)
            lp = round_log_prior(prev, count, params.gamma, block)
            ll = sticks.log_prob(int(m1[k]), int(n - m1[k]), block)
            mass = lp + ll
            masses.append(mass)
            cands.append(block)
            best = max(best, float(mass.max()))
            # likelihood <= 1, so the prior bounds every later candidate
            if lp[-1] < best + log_thr and (prev == 0 or block[-1] > prev):
                break
            start += _BLOCK
            if start - lo > config.max_round_span:
                log.warning("round scan for column %d stopped at span %d", k, config.max_round_span)
                break
        mass = np.concatenate(masses)
        cand = np.concatenate(cands)
        if not np.isfinite(best):
            raise NumericalError(f"no candidate round has positive mass for column {k}")
        w = np.exp(mass - best)
        r_k = int(cand[gen.choice(cand.size, p=w / w.sum())])
        new_r[k] = r_k
        if r_k == prev:
            count += 1
        else:
            prev, count = r_k, 1
    state.r = new_r
    return state


def column_sticks(state: FactorState, n_samples: int, gen: np.random.Generator):
    """S sampled (log pi, log(1 - pi)) pairs per column, at each column's round."""
    if state.K == 0:
        return np.empty((0, n_samples)), np.empty((0, n_samples))
    r = state.r
    log_pi, log_1mpi = stick_log_pi(state.params, n_samples, int(r.max()), gen, lead_shape=(state.K,))
    idx = np.arange(state.K)
    return log_pi[idx, :, r - 1], log_1mpi[idx, :, r - 1]


def _prior_log_odds(lp, l1p, m1, m0):
    """log p(z=1 | other entries) - log p(z=0 | other entries) under the sampled sticks."""
    base = np.where(m1 == 0, 0.0, m1 * lp) + np.where(m0 == 0, 0.0, m0 * l1p)
    return float(special.logsumexp(base + lp) - special.logsumexp(base + l1p))


def sample_Z(state: FactorState, X, hyper: FactorHyper, config, gen: np.random.Generator,
             sticks=None, drop_empty: bool = True, sample_weights: bool = True) -> FactorState:
    """One sweep over Z with the weights and sticks integrated out.

    ``sticks`` optionally fixes the per-column stick samples as a pair of
    K x S arrays (log pi, log(1 - pi)); otherwise S fresh samples per column
    are drawn for the sweep.  After each row its active weights are redrawn
    from their conditional, which keeps the sweep a blocked (Z_n, W_n) draw.
    """
    X = np.asarray(X, dtype=float)
    n, k_tot = state.Z.shape
    if k_tot == 0:
        return state
    if sticks is None:
        sticks = column_sticks(state, config.n_sticks, gen)
    lp_all, l1p_all = sticks
    eta, zeta = hyper.eta, hyper.zeta
    Z, Phi = state.Z, state.Phi
    m1 = state.m1
    cache = [dict() for _ in range(k_tot)]
    for i in range(n):
        x = X[i]
        active = Z[i].astype(bool)
        ll_cur = collapsed_row_loglik(x, Phi[active], eta, zeta)
        for k in range(k_tot):
            z = int(Z[i, k])
            active[k] = not z
            ll_alt = collapsed_row_loglik(x, Phi[active], eta, zeta)
            active[k] = bool(z)
            ll_on, ll_off = (ll_cur, ll_alt) if z else (ll_alt, ll_cur)
            m1k = int(m1[k]) - z
            odds = cache[k].get(m1k)
            if odds is None:
                odds = _prior_log_odds(lp_all[k], l1p_all[k], m1k, n - 1 - m1k)
                cache[k][m1k] = odds
            p_on = special.expit(ll_on - ll_off + odds)
            new = int(gen.random() < p_on)
            if new != z:
                Z[i, k] = new
                m1[k] += new - z
                active[k] = bool(new)
                ll_cur = ll_alt
        if sample_weights:
            _sample_W_row(state, X, i, hyper, gen)
    if drop_empty:
        keep = np.flatnonzero(m1 > 0)
        if keep.size < k_tot:
            state.drop_columns(keep)
    return state


def sample_gamma_mass(state: FactorState, gen: np.random.Generator) -> FactorState:
    """Draw the mass from Gamma(shape = number of atoms, rate = last round)."""
    if state.K == 0:
        raise DomainError("mass update needs at least one round indicator")
    r_last = int(state.r[-1])
    if r_last < 1:
        raise DomainError("last round indicator must be >= 1")
    counts = np.bincount(state.r, minlength=r_last + 1)[1:]
    shape = float(counts.sum())
    state.params = state.params.replace(gamma=float(gen.gamma(shape, 1.0 / r_last)))
    return state


def columns_loglik(params, m1, m0, r, n_samples: int, gen: np.random.Generator) -> float:
    """sum_k log p(column k | r_k, theta, alpha), sticks integrated by Monte Carlo.

    All columns are scored against one shared set of stick sequences.
    """
    if len(r) == 0:
        return 0.0
    r = np.asarray(r)
    log_pi, log_1mpi = stick_log_pi(params, n_samples, int(r.max()), gen)
    lp = log_pi[:, r - 1].T
    l1p = log_1mpi[:, r - 1].T
    m1 = np.asarray(m1)[:, None]
    m0 = np.asarray(m0)[:, None]
    return float(np.sum(log_mc_average(m1, m0, lp, l1p)))


def theta_grid(theta_prev: float, config) -> np.ndarray:
    step = max(config.theta_step_rel * theta_prev, config.theta_step_min)
    half = config.theta_grid_points // 2
    grid = theta_prev + step * np.arange(-half, half + 1)
    return grid[(grid > 0) & (grid <= config.theta_max)]


def alpha_grid(config) -> np.ndarray:
    cells = int(round(1.0 / config.alpha_step))
    return config.alpha_step / 2 + config.alpha_step * np.arange(cells)


def _grid_draw(state, grid, make_params, config, gen, name):
    m1, m0, r = state.m1, state.m0, state.r
    ll = np.array([columns_loglik(make_params(v), m1, m0, r, config.n_sticks, gen) for v in grid])
    if not np.any(np.isfinite(ll)):
        log.warning("%s grid likelihood underflowed everywhere; keeping previous value", name)
        return None
    w = np.exp(ll - ll.max())
    return float(grid[gen.choice(grid.size, p=w / w.sum())])


def sample_theta(state: FactorState, config, gen: np.random.Generator) -> FactorState:
    """Concentration update on a grid around its current value (flat prior)."""
    p = state.params
    grid = theta_grid(p.theta, config)
    grid = grid[grid > -p.alpha]
    v = _grid_draw(state, grid, lambda t: p.replace(theta=t), config, gen, "theta")
    if v is not None:
        state.params = p.replace(theta=v)
    return state


def sample_alpha(state: FactorState, config, gen: np.random.Generator) -> FactorState:
    """Discount update on the midpoint lattice of [0, 1) (flat prior)."""
    p = state.params
    grid = alpha_grid(config)
    grid = grid[p.theta > -grid]
    v = _grid_draw(state, grid, lambda a: p.replace(alpha=a), config, gen, "alpha")
    if v is not None:
        state.params = p.replace(alpha=v)
    return state


def _gaussian_from_precision(prec, rhs, gen):
    """Draw from N(prec^-1 rhs, prec^-1)."""
    try:
        chol = np.linalg.cholesky(prec)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("posterior precision is not positive definite") from exc
    mean = linalg.cho_solve((chol, True), rhs, check_finite=False)
    z = gen.standard_normal(rhs.shape)
    return mean + linalg.solve_triangular(chol.T, z, lower=False, check_finite=False)


def phi_posterior(state: FactorState, X, hyper: FactorHyper):
    """Per-column posterior mean (K x P) and covariance list for Phi."""
    A = state.loadings()
    k = state.K
    gram = A.T @ A / hyper.eta
    rho = hyper.rho_for(X.shape[1])
    means = np.empty((k, X.shape[1]))
    covs = []
    for p in range(X.shape[1]):
        prec = gram + np.eye(k) / rho[p]
        cov = np.linalg.inv(prec)
        means[:, p] = cov @ (A.T @ X[:, p]) / hyper.eta
        covs.append(cov)
    return means, covs


def sample_Phi(state: FactorState, X, hyper: FactorHyper, gen: np.random.Generator) -> FactorState:
    """Draw each column of Phi from its Gaussian conditional."""
    X = np.asarray(X, dtype=float)
    k = state.K
    if k == 0:
        return state
    A = state.loadings()
    gram = A.T @ A / hyper.eta
    rhs = A.T @ X / hyper.eta
    rho = hyper.rho_for(X.shape[1])
    new = np.empty_like(state.Phi)
    for p in range(X.shape[1]):
        new[:, p] = _gaussian_from_precision(gram + np.eye(k) / rho[p], rhs[:, p], gen)
    state.Phi = new
    return state


def w_row_posterior(phi_active, x, hyper: FactorHyper):
    """Mean and covariance of the active weights of one row."""
    m = phi_active.shape[0]
    prec = phi_active @ phi_active.T / hyper.eta + np.eye(m) / hyper.zeta
    cov = np.linalg.inv(prec)
    return cov @ (phi_active @ x) / hyper.eta, cov


def _sample_W_row(state, X, i, hyper, gen):
    active = np.flatnonzero(state.Z[i])
    if active.size == 0:
        return
    if hyper.zeta == 0:
        state.W[i, active] = 0.0
        return
    phi = state.Phi[active]
    prec = phi @ phi.T / hyper.eta + np.eye(active.size) / hyper.zeta
    state.W[i, active] = _gaussian_from_precision(prec, phi @ X[i] / hyper.eta, gen)


def sample_W(state: FactorState, X, hyper: FactorHyper, gen: np.random.Generator) -> FactorState:
    """Draw the active weights of every row; inactive entries are left alone."""
    X = np.asarray(X, dtype=float)
    for i in range(state.N):
        _sample_W_row(state, X, i, hyper, gen)
    return state
