"""Model definition: X = (W o Z) Phi + E with Gaussian W, Phi and E."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ..bernoulli import FeatureMatrix, bp_bep
from ..errors import DomainError, NumericalError
from ..process import BPParams, stick_break
from ..rng import RandomStream

_LOG_2PI = math.log(2 * math.pi)


@dataclass(frozen=True)
class FactorHyper:
    """Noise variance ``eta``, weight variance ``zeta``, factor-row variances ``rho``."""

    eta: float
    zeta: float
    rho: tuple

    def __post_init__(self):
        rho = tuple(float(r) for r in np.atleast_1d(self.rho))
        object.__setattr__(self, "rho", rho)
        if not (self.eta > 0 and self.zeta >= 0 and all(r > 0 for r in rho)):
            raise DomainError("eta and rho must be positive, zeta nonnegative")

    def rho_for(self, p: int) -> np.ndarray:
        if len(self.rho) == 1:
            return np.full(p, self.rho[0])
        if len(self.rho) != p:
            raise DomainError(f"rho has {len(self.rho)} entries for {p} columns")
        return np.asarray(self.rho)


@dataclass
class FactorState:
    """Mutable sampler state; columns of Z are ordered by round."""

    Z: np.ndarray
    W: np.ndarray
    Phi: np.ndarray
    r: np.ndarray
    params: BPParams

    def __post_init__(self):
        self.Z = np.asarray(self.Z, dtype=np.uint8)
        self.W = np.asarray(self.W, dtype=float)
        self.Phi = np.asarray(self.Phi, dtype=float)
        self.r = np.asarray(self.r, dtype=np.int64)

    @property
    def K(self) -> int:
        return self.Z.shape[1]

    @property
    def N(self) -> int:
        return self.Z.shape[0]

    @property
    def m1(self) -> np.ndarray:
        return self.Z.sum(axis=0).astype(np.int64)

    @property
    def m0(self) -> np.ndarray:
        return self.N - self.m1

    def loadings(self) -> np.ndarray:
        return self.W * self.Z

    def fitted(self) -> np.ndarray:
        return self.loadings() @ self.Phi

    def feature_matrix(self) -> FeatureMatrix:
        return FeatureMatrix(self.Z, rounds=self.r)

    def drop_columns(self, keep) -> None:
        keep = np.asarray(keep)
        self.Z = self.Z[:, keep]
        self.W = self.W[:, keep]
        self.Phi = self.Phi[keep, :]
        self.r = self.r[keep]

    def check(self) -> None:
        k = self.K
        if not (self.W.shape == self.Z.shape and self.Phi.shape[0] == k and self.r.shape == (k,)):
            raise DomainError("inconsistent state shapes")
        if k and np.any(np.diff(self.r) < 0):
            raise DomainError("round indicators must be nondecreasing")
        if k and np.any(self.r < 1):
            raise DomainError("round indicators start at 1")
        if np.any(self.m1 + self.m0 != self.N):
            raise DomainError("column counts do not add up")

    def copy(self) -> "FactorState":
        return FactorState(self.Z.copy(), self.W.copy(), self.Phi.copy(), self.r.copy(), self.params)


def collapsed_row_loglik(x, phi_active, eta: float, zeta: float) -> float:
    """log N(x | 0, eta I_P + zeta Phi_I^T Phi_I) with the weights integrated out.

    ``phi_active`` holds the |I| active factor rows (|I| x P).  The P x P
    covariance is never formed: its inverse and determinant go through the
    |I| x |I| system Phi_I Phi_I^T + (eta/zeta) I.
    """
    x = np.asarray(x, dtype=float)
    p = x.size
    xx = float(x @ x)
    a = np.asarray(phi_active, dtype=float).reshape(-1, p)
    m = a.shape[0]
    if m == 0 or zeta == 0:
        return -0.5 * (p * (_LOG_2PI + math.log(eta)) + xx / eta)
    inner = a @ a.T
    inner[np.diag_indices(m)] += eta / zeta
    try:
        chol = np.linalg.cholesky(inner)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("inner system is not positive definite") from exc
    c = linalg.solve_triangular(chol, a @ x, lower=True, check_finite=False)
    quad = (xx - float(c @ c)) / eta
    logdet = p * math.log(eta) + 2.0 * float(np.sum(np.log(np.diag(chol)))) + m * math.log(zeta / eta)
    return -0.5 * (p * _LOG_2PI + logdet + quad)


def reconstruction_rmse(X, state: FactorState) -> float:
    return float(np.sqrt(np.mean((np.asarray(X) - state.fitted()) ** 2)))


def log_joint(X, state: FactorState, hyper: FactorHyper) -> float:
    """log p(X | W, Z, Phi) + log p(W_active) + log p(Phi); Z prior omitted."""
    X = np.asarray(X)
    n, p = X.shape
    resid = X - state.fitted()
    out = -0.5 * (n * p * (_LOG_2PI + math.log(hyper.eta)) + float(np.sum(resid ** 2)) / hyper.eta)
    if hyper.zeta > 0:
        w = state.W[state.Z.astype(bool)]
        out += -0.5 * (w.size * (_LOG_2PI + math.log(hyper.zeta)) + float(w @ w) / hyper.zeta)
    rho = hyper.rho_for(p)
    out += -0.5 * float(np.sum(_LOG_2PI + np.log(rho) + state.Phi ** 2 / rho))
    return out


def _top_atoms(params, n, n_features, rounds, stream, max_tries=1000):
    """Z over the ``n_features`` heaviest atoms of one draw, every column used."""
    draw = stick_break(params, rounds, stream)
    if len(draw) < n_features:
        raise DomainError(f"draw has {len(draw)} atoms, fewer than {n_features}")
    top = np.sort(np.argsort(draw.log_weights)[::-1][:n_features])
    w = draw.weights[top]
    z = (stream.gen.random((n, n_features)) < w).astype(np.uint8)
    for k in range(n_features):
        tries = 0
        while not z[:, k].any():
            tries += 1
            if tries > max_tries:
                raise DomainError(f"atom {k} never expressed in {max_tries} redraws")
            z[:, k] = stream.gen.random(n) < w[k]
    return z, draw.rounds[top]


def generate_synthetic(params: BPParams, hyper: FactorHyper, n: int, p: int, rounds: int,
                       stream: RandomStream, n_features: int | None = None):
    """Sample data X and the latent state that generated it.

    With ``n_features`` set, Z is restricted to that many of the heaviest
    atoms of the draw, each conditioned to appear at least once.
    """
    if min(n, p, rounds) < 1:
        raise DomainError("n, p and rounds must be >= 1")
    g = stream.gen
    if n_features is None:
        fm = bp_bep(params, n, rounds, stream)
        z, r = fm.entries, fm.rounds
    else:
        z, r = _top_atoms(params, n, n_features, rounds, stream)
    k = z.shape[1]
    W = g.normal(0.0, math.sqrt(hyper.zeta), (n, k))
    Phi = g.normal(0.0, 1.0, (k, p)) * np.sqrt(hyper.rho_for(p))
    E = g.normal(0.0, math.sqrt(hyper.eta), (n, p))
    truth = FactorState(z, W, Phi, r, params)
    X = truth.fitted() + E
    return X, truth
