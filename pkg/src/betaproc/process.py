"""Three-parameter beta process: rate measure and stick-breaking sampler."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from .errors import DomainError, ParameterError
from .rng import DistSpec, RandomStream


@dataclass(frozen=True)
class BPParams:
    """Mass ``gamma``, concentration ``theta`` and discount ``alpha``."""

    gamma: float
    theta: float
    alpha: float = 0.0

    def __post_init__(self):
        validate(self)

    def log_norm(self) -> float:
        """log of Gamma(1+theta) / (Gamma(1-alpha) Gamma(theta+alpha))."""
        a, t = self.alpha, self.theta
        return float(special.gammaln(1 + t) - special.gammaln(1 - a) - special.gammaln(t + a))

    def replace(self, **kw) -> "BPParams":
        d = {"gamma": self.gamma, "theta": self.theta, "alpha": self.alpha}
        d.update(kw)
        return BPParams(**d)


def validate(params) -> None:
    g, t, a = params.gamma, params.theta, params.alpha
    if not (isinstance(g, (int, float)) and math.isfinite(g) and g > 0):
        raise ParameterError(f"mass gamma must be positive and finite, got {g}")
    if not (math.isfinite(a) and 0.0 <= a < 1.0):
        raise ParameterError(f"discount alpha must lie in [0, 1), got {a}")
    if not (math.isfinite(t) and t > -a):
        raise ParameterError(f"concentration theta must exceed -alpha={-a}, got {t}")


def stick_spec(params: BPParams, level: int) -> DistSpec:
    """Law of the stick proportion broken at ``level`` (1-based)."""
    return DistSpec.beta(1.0 - params.alpha, params.theta + level * params.alpha)


def levy_density(u, params: BPParams):
    """Density of the rate measure in ``u``, per unit of base measure.

    Multiply by ``gamma`` to integrate over the whole space.
    """
    u_arr = np.asarray(u, dtype=float)
    if np.any((u_arr <= 0) | (u_arr >= 1)) or not np.all(np.isfinite(u_arr)):
        raise DomainError("levy_density requires 0 < u < 1")
    a, t = params.alpha, params.theta
    out = np.exp(params.log_norm() - (1 + a) * np.log(u_arr) + (t + a - 1) * np.log1p(-u_arr))
    return float(out) if np.ndim(u) == 0 else out


@dataclass(frozen=True)
class StickTrace:
    """Per-atom stick proportions kept as logarithms.

    ``log_proportions[k][l-1]`` is log V at level l for atom k.
    """

    log_proportions: tuple

    @property
    def proportions(self) -> tuple:
        return tuple(np.exp(v) for v in self.log_proportions)

    def reconstruct(self) -> np.ndarray:
        """Weights rebuilt from the proportions as V_i prod_{l<i} (1 - V_l)."""
        w = np.empty(len(self.log_proportions))
        for k, v in enumerate(self.proportions):
            w[k] = v[-1] * np.prod(1.0 - v[:-1])
        return w


@dataclass(frozen=True)
class BetaProcessDraw:
    """A finite truncation of a beta-process draw, atoms in generation order.

    Weights are stored as logarithms; atoms from very late rounds can have
    weights below the smallest double, which ``weights`` reports as 0.0.
    """

    log_weights: np.ndarray
    rounds: np.ndarray
    atom_labels: np.ndarray
    truncation_rounds: int

    def __post_init__(self):
        n = len(self.log_weights)
        if not (len(self.rounds) == n == len(self.atom_labels)):
            raise DomainError("weights, rounds and labels must have equal length")
        lw = np.asarray(self.log_weights)
        if n and (np.any(~np.isfinite(lw)) or np.any(lw >= 0)):
            raise DomainError("every weight must lie strictly inside (0, 1)")
        if n and np.any(np.diff(self.rounds) < 0):
            raise DomainError("rounds must be nondecreasing")

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    def __len__(self):
        return len(self.log_weights)

    @classmethod
    def merge(cls, draws: Sequence["BetaProcessDraw"]) -> "BetaProcessDraw":
        """Superpose independent draws, matching rounds across them.

        The superposition of draws with masses g_1..g_m is a draw with mass
        sum(g_i) and the same concentration and discount.
        """
        lw = np.concatenate([d.log_weights for d in draws])
        rounds = np.concatenate([d.rounds for d in draws])
        labels = np.concatenate([d.atom_labels for d in draws])
        order = np.argsort(rounds, kind="stable")
        return cls(lw[order], rounds[order], labels[order], max(d.truncation_rounds for d in draws))

    def to_csv(self, path, header_comment=None) -> None:
        with open(path, "w", newline="") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["round", "weight", "atom_label"])
            for r, wt, lab in zip(self.rounds, self.weights, self.atom_labels):
                w.writerow([int(r), repr(float(wt)), repr(float(lab))])

    @classmethod
    def from_csv(cls, path, truncation_rounds=None) -> "BetaProcessDraw":
        rows = []
        with open(path, newline="") as fh:
            reader = csv.reader(line for line in fh if not line.startswith("#"))
            header = next(reader)
            if header != ["round", "weight", "atom_label"]:
                raise DomainError(f"unexpected header {header}")
            rows = [(int(r), float(w), float(a)) for r, w, a in reader]
        rounds = np.array([r[0] for r in rows], dtype=np.int64)
        with np.errstate(divide="ignore"):
            lw = np.log(np.array([r[1] for r in rows], dtype=float))
        labels = np.array([r[2] for r in rows], dtype=float)
        R = truncation_rounds if truncation_rounds is not None else int(rounds.max(initial=0))
        return cls(lw, rounds, labels, R)


_TINY = np.nextafter(0.0, 1.0)


def log_beta_pair(gen: np.random.Generator, a, b, size):
    """Return (log V, log(1 - V)) for V ~ Beta(a, b) built from two gammas.

    With X ~ Gamma(a), Y ~ Gamma(b): log V = -log(1 + Y/X) and
    log(1 - V) = -log(1 + X/Y), both evaluated as softplus of the log ratio
    so neither rounds to 0 when the other gamma is tiny.
    """
    lx = np.log(np.maximum(gen.standard_gamma(a, size), _TINY))
    ly = np.log(np.maximum(gen.standard_gamma(b, size), _TINY))
    d = ly - lx
    return -np.logaddexp(0.0, d), -np.logaddexp(0.0, -d)


_CHUNK_PAIRS = 1 << 21


def stick_break(params: BPParams, rounds: int, stream: RandomStream, trace: bool = False):
    """Draw a beta process truncated after ``rounds`` rounds.

    Round i contributes Poisson(gamma) atoms; each atom of round i breaks
    its own stick i times, the level-l proportion being
    Beta(1 - alpha, theta + l*alpha), and keeps the last piece.

    Returns the draw, or ``(draw, StickTrace)`` when ``trace`` is set.
    """
    if rounds < 1:
        raise DomainError(f"need at least one round, got {rounds}")
    g = stream.gen
    counts = g.poisson(params.gamma, rounds)
    atom_rounds = np.repeat(np.arange(1, rounds + 1, dtype=np.int64), counts)
    n = atom_rounds.size
    log_w = np.empty(n)
    props = [] if trace else None
    a = 1.0 - params.alpha
    # one stick level per (atom, level) pair, processed in chunks of whole atoms
    ends = np.cumsum(atom_rounds)
    lo = 0
    while lo < n:
        base = ends[lo - 1] if lo else 0
        hi = max(int(np.searchsorted(ends, base + _CHUNK_PAIRS, side="right")), lo + 1)
        r = atom_rounds[lo:hi]
        seg_start = np.concatenate([[0], np.cumsum(r)[:-1]])
        total = int(r.sum())
        level = np.arange(total) - np.repeat(seg_start, r) + 1
        lx = np.log(np.maximum(g.standard_gamma(a, total), _TINY))
        ly = np.log(np.maximum(g.standard_gamma(params.theta + params.alpha * level), _TINY))
        last = seg_start + r - 1
        log_1mv = ly - np.logaddexp(lx, ly)
        log_1mv[last] = 0.0
        log_v_last = -np.logaddexp(0.0, ly[last] - lx[last])
        log_w[lo:hi] = np.add.reduceat(log_1mv, seg_start) + log_v_last
        if trace:
            log_v = -np.logaddexp(0.0, ly - lx)
            props.extend(np.split(log_v, seg_start[1:]))
        lo = hi
    labels = g.random(n)
    draw_ = BetaProcessDraw(log_w, atom_rounds, labels, rounds)
    if trace:
        return draw_, StickTrace(tuple(props))
    return draw_


def size_biased_pick(draws, stream: RandomStream, size=None):
    """Pick atom weights with probability proportional to weight.

    ``draws`` may be one draw or a sequence of independent draws, which are
    pooled into their superposition first.  Pooling many draws makes the
    pick follow ``u * nu(du) / E[total mass]``; a pick within one draw is
    additionally tilted by that draw's random total mass.
    """
    if not isinstance(draws, BetaProcessDraw):
        draws = BetaProcessDraw.merge(list(draws))
    if len(draws) == 0:
        raise DomainError("cannot pick from an empty draw")
    lw = draws.log_weights
    p = np.exp(lw - lw.max())
    p /= p.sum()
    idx = stream.gen.choice(len(p), size=size, p=p)
    return np.exp(lw[idx]) if size is not None else float(np.exp(lw[idx]))


def residual_mass_estimate(params: BPParams, rounds: int, replicates: int, stream: RandomStream) -> float:
    """Monte-Carlo estimate of gamma minus the mean truncated total mass."""
    if replicates < 1:
        raise DomainError("replicates must be >= 1")
    masses = [stick_break(params, rounds, stream).total_mass for _ in range(replicates)]
    return params.gamma - float(np.mean(masses))


def expected_truncated_mass(params: BPParams, rounds: int) -> float:
    """Exact mean total mass of a draw truncated after ``rounds`` rounds."""
    lev = np.arange(1, rounds + 1)
    b = params.theta + lev * params.alpha
    a = 1.0 - params.alpha
    log_keep = np.sum(np.log(b) - np.log(a + b))
    return params.gamma * (1.0 - math.exp(log_keep))
