"""Sampler driver, configuration, trace and autocorrelation."""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DomainError, NumericalError
from ..process import BPParams
from ..rng import RandomStream
from . import gibbs
from .model import FactorHyper, FactorState, log_joint, reconstruction_rmse

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MCMCConfig:
    iterations: int = 2000
    burn_in: int = 500
    n_sticks: int = 256
    theta_step_rel: float = 0.05
    theta_step_min: float = 0.01
    theta_grid_points: int = 41
    theta_max: float = 100.0
    alpha_step: float = 0.01
    round_tail_threshold: float = 1e-8
    max_round_span: int = 10_000
    seed: int = 0
    stream_id: int = 0
    stride: int = 1
    k_init: int = 20
    z_init_prob: float = 0.1
    gamma_init: float = 1.0
    theta_init: float = 1.0
    alpha_init: float = 0.1

    def __post_init__(self):
        if self.iterations < 0 or self.burn_in < 0:
            raise DomainError("iterations and burn_in must be nonnegative")
        if self.burn_in > self.iterations:
            raise DomainError("burn_in cannot exceed iterations")
        if self.n_sticks < 1 or self.stride < 1 or self.k_init < 1:
            raise DomainError("n_sticks, stride and k_init must be >= 1")
        cells = 1.0 / self.alpha_step
        if not (0 < self.alpha_step < 1 and abs(cells - round(cells)) < 1e-9 and round(cells) >= 2):
            raise DomainError("alpha_step must divide 1 into at least 2 cells")
        if not (0 < self.round_tail_threshold < 1):
            raise DomainError("round_tail_threshold must lie in (0, 1)")
        if not (self.theta_max > 0 and self.theta_step_rel > 0 and self.theta_step_min > 0):
            raise DomainError("theta grid settings must be positive")
        if self.theta_grid_points < 1:
            raise DomainError("theta_grid_points must be >= 1")
        if not (0 < self.z_init_prob <= 1):
            raise DomainError("z_init_prob must lie in (0, 1]")
        BPParams(self.gamma_init, self.theta_init, self.alpha_init)

    @property
    def stream(self) -> RandomStream:
        return RandomStream(self.seed, self.stream_id)

    def replace(self, **kw) -> "MCMCConfig":
        return dataclasses.replace(self, **kw)

    @classmethod
    def from_mapping(cls, values: dict) -> "MCMCConfig":
        defaults = cls()
        kw = {}
        for key, raw in values.items():
            if not hasattr(defaults, key) or key == "stream":
                raise DomainError(f"unknown config key {key!r}")
            conv = int if isinstance(getattr(defaults, key), int) else float
            try:
                kw[key] = conv(raw)
            except ValueError as exc:
                raise DomainError(f"bad value for {key}: {raw!r}") from exc
        return cls(**kw)

    @classmethod
    def read(cls, path) -> "MCMCConfig":
        """Read a flat ``key = value`` file; ``#`` starts a comment."""
        values = {}
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            values[key] = val
        return cls.from_mapping(values)

    def write(self, path) -> None:
        lines = [f"{f.name} = {getattr(self, f.name)!r}" for f in dataclasses.fields(self)]
        Path(path).write_text("\n".join(lines) + "\n")


TRACE_COLUMNS = ("iteration", "K", "theta", "alpha", "gamma", "rmse", "log_joint")


@dataclass
class Trace:
    """Recorded state summaries; row 0 is the initial state."""

    rows: list = field(default_factory=list)
    stride: int = 1
    final_state: FactorState | None = None

    def append(self, iteration, state, X, hyper):
        p = state.params
        self.rows.append((iteration, state.K, p.theta, p.alpha, p.gamma,
                          reconstruction_rmse(X, state), log_joint(X, state, hyper)))

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[TRACE_COLUMNS.index(name)] for r in self.rows])

    def after(self, burn_in: int) -> "Trace":
        return Trace([r for r in self.rows if r[0] > burn_in], self.stride, self.final_state)

    def summary(self, burn_in: int) -> dict:
        post = self.after(burn_in)
        if len(post) == 0:
            raise DomainError("no samples after burn-in")
        k = post.column("K").astype(int)
        vals, counts = np.unique(k, return_counts=True)
        return {
            "samples": len(post),
            "K_mode": int(vals[np.argmax(counts)]),
            "K_mean": float(k.mean()),
            "theta_mean": float(post.column("theta").mean()),
            "alpha_mean": float(post.column("alpha").mean()),
            "gamma_mean": float(post.column("gamma").mean()),
            "rmse_mean": float(post.column("rmse").mean()),
        }

    def to_csv(self, path, comment: str | None = None) -> None:
        with open(path, "w", newline="") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            fh.write(",".join(TRACE_COLUMNS) + "\n")
            for r in self.rows:
                fh.write(f"{r[0]},{r[1]},{r[2]!r},{r[3]!r},{r[4]!r},{r[5]!r},{r[6]!r}\n")


def init_state(X, config: MCMCConfig, hyper: FactorHyper, gen: np.random.Generator) -> FactorState:
    """Random start: Bernoulli Z, rounds filled round-major, W and Phi from their priors."""
    n, p = np.shape(X)
    params = BPParams(config.gamma_init, config.theta_init, config.alpha_init)
    k = config.k_init
    Z = (gen.random((n, k)) < config.z_init_prob).astype(np.uint8)
    for j in np.flatnonzero(Z.sum(axis=0) == 0):
        Z[gen.integers(n), j] = 1
    per_round = max(1, round(params.gamma))
    r = 1 + np.arange(k) // per_round
    W = gen.normal(0.0, math.sqrt(hyper.zeta), (n, k))
    Phi = gen.normal(0.0, 1.0, (k, p)) * np.sqrt(hyper.rho_for(p))
    return FactorState(Z, W, Phi, r, params)


def sweep(state: FactorState, X, config: MCMCConfig, hyper: FactorHyper, gen) -> FactorState:
    """One pass: rounds, Z (with W rows), gamma, theta, alpha, Phi, W."""
    gibbs.sample_round_indicators(state, config, gen)
    gibbs.sample_Z(state, X, hyper, config, gen)
    if state.K > 0:
        gibbs.sample_gamma_mass(state, gen)
    gibbs.sample_theta(state, config, gen)
    gibbs.sample_alpha(state, config, gen)
    gibbs.sample_Phi(state, X, hyper, gen)
    gibbs.sample_W(state, X, hyper, gen)
    return state


def run_mcmc(X, config: MCMCConfig, hyper: FactorHyper, init: FactorState | None = None,
             progress=None) -> Trace:
    """Run the chain and record every ``stride``-th iteration plus the start."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or not np.all(np.isfinite(X)):
        raise DomainError("X must be a finite 2-d array")
    gen = config.stream.gen
    state = init.copy() if init is not None else init_state(X, config, hyper, gen)
    state.check()
    trace = Trace(stride=config.stride)
    trace.append(0, state, X, hyper)
    for it in range(1, config.iterations + 1):
        try:
            sweep(state, X, config, hyper, gen)
        except (NumericalError, DomainError) as exc:
            log.error("iteration %d failed: %s", it, exc)
            raise
        if it % config.stride == 0:
            trace.append(it, state, X, hyper)
        if progress is not None:
            progress(it, state)
    trace.final_state = state
    return trace


def autocorrelation(series, max_lag: int) -> np.ndarray:
    """Sample autocorrelation at lags 0..max_lag (lag 0 is exactly 1).

    A constant series has no defined autocorrelation; it returns 1 then
    zeros and logs a warning.
    """
    x = np.asarray(series, dtype=float)
    if max_lag < 0 or x.size <= max_lag:
        raise DomainError("series must be longer than max_lag")
    d = x - x.mean()
    denom = float(d @ d)
    out = np.zeros(max_lag + 1)
    out[0] = 1.0
    if denom == 0.0:
        log.warning("autocorrelation of a constant series; returning 1 then zeros")
        return out
    for lag in range(1, max_lag + 1):
        out[lag] = float(d[:-lag] @ d[lag:]) / denom
    return out
