"""Seeded random streams, log-gamma and scalar sampling families.

Every stochastic routine in the package takes a :class:`RandomStream`.
A stream is identified by ``(seed, stream_id)``; two streams built from the
same pair produce identical draws, and :func:`split` derives child streams
as a pure function of the parent identity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DomainError

_MASK64 = (1 << 64) - 1


@dataclass
class RandomStream:
    seed: int
    stream_id: int = 0
    gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.seed = int(self.seed) & _MASK64
        self.stream_id = int(self.stream_id) & _MASK64
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self.gen = np.random.Generator(np.random.PCG64(seq))

    def uniform(self, size=None):
        return self.gen.random(size)


def split(stream: RandomStream, n: int) -> list[RandomStream]:
    """Derive ``n`` independent child streams from ``stream``'s identity.

    The children depend only on ``(seed, stream_id)``, not on how many
    draws the parent has already made.
    """
    if n < 1:
        raise DomainError(f"split needs n >= 1, got {n}")
    seq = np.random.SeedSequence(entropy=[stream.seed, stream.stream_id, 0x5EED])
    ids = seq.generate_state(n, dtype=np.uint64)
    return [RandomStream(stream.seed, int(i)) for i in ids]


def log_gamma(x: float) -> float:
    """ln Gamma(x) for positive finite ``x``."""
    x = float(x)
    if not math.isfinite(x) or x <= 0:
        raise DomainError(f"log_gamma requires finite x > 0, got {x}")
    return float(special.gammaln(x))


@dataclass(frozen=True)
class DistSpec:
    """A scalar distribution family with validated parameters.

    Gamma uses the (shape, rate) parameterisation and Normal takes a
    variance, matching the notation of the factor model.
    """

    kind: str
    params: tuple

    _ARITY = {"beta": 2, "gamma": 2, "poisson": 1, "bernoulli": 1, "normal": 2}

    def __post_init__(self):
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if kind not in self._ARITY:
            raise DomainError(f"unknown distribution family {self.kind!r}")
        if len(self.params) != self._ARITY[kind]:
            raise DomainError(f"{kind} takes {self._ARITY[kind]} parameters")
        p = self.params
        if not all(math.isfinite(v) for v in p):
            raise DomainError(f"{kind} parameters must be finite: {p}")
        ok = {
            "beta": p[0] > 0 and p[-1] > 0,
            "gamma": p[0] > 0 and p[-1] > 0,
            "poisson": p[0] >= 0,
            "bernoulli": 0.0 <= p[0] <= 1.0,
            "normal": p[-1] >= 0,
        }[kind]
        if not ok:
            raise DomainError(f"invalid {kind} parameters {p}")

    @classmethod
    def beta(cls, a, b):
        return cls("beta", (a, b))

    @classmethod
    def gamma(cls, shape, rate):
        return cls("gamma", (shape, rate))

    @classmethod
    def poisson(cls, lam):
        return cls("poisson", (lam,))

    @classmethod
    def bernoulli(cls, p):
        return cls("bernoulli", (p,))

    @classmethod
    def normal(cls, mean, var):
        return cls("normal", (mean, var))

    def mean(self) -> float:
        p = self.params
        return {
            "beta": lambda: p[0] / (p[0] + p[1]),
            "gamma": lambda: p[0] / p[1],
            "poisson": lambda: p[0],
            "bernoulli": lambda: p[0],
            "normal": lambda: p[0],
        }[self.kind]()

    def variance(self) -> float:
        p = self.params
        return {
            "beta": lambda: p[0] * p[1] / ((p[0] + p[1]) ** 2 * (p[0] + p[1] + 1)),
            "gamma": lambda: p[0] / p[1] ** 2,
            "poisson": lambda: p[0],
            "bernoulli": lambda: p[0] * (1 - p[0]),
            "normal": lambda: p[1],
        }[self.kind]()


def draw(spec: DistSpec, stream: RandomStream, size=None):
    """Sample from ``spec``; a scalar when ``size`` is None."""
    g = stream.gen
    p = spec.params
    if spec.kind == "beta":
        out = g.beta(p[0], p[1], size)
    elif spec.kind == "gamma":
        out = g.gamma(p[0], 1.0 / p[1], size)
    elif spec.kind == "poisson":
        out = np.asarray(g.poisson(p[0], size), dtype=float)
    elif spec.kind == "bernoulli":
        out = np.asarray(g.random(size) < p[0], dtype=float)
    else:
        out = g.normal(p[0], math.sqrt(p[1]), size)
    return float(out) if size is None else out
