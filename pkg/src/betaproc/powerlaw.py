"""Mean feature-count curves, their power-law asymptotics and slope fits.

Mean curves integrate against the full rate measure
``gamma * levy_density(u) du``.  With ``c = Gamma(1+theta) /
(Gamma(1-alpha) Gamma(theta+alpha))`` every integrand has the form
``g(x) * x**(-alpha) * (1-x)**(theta+alpha-1)`` with ``g`` bounded near
zero, so both endpoint singularities are handled by an algebraic-weight
quadrature rule.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate, special

from .errors import DomainError, NumericalError
from .process import BPParams

KINDS = ("PhiN", "PhiT", "PhiNj", "PhiTj")
QUAD_RTOL = 1e-8


@dataclass(frozen=True)
class AsymptoticLaw:
    """``value ~ c * x**a`` with c > 0 and 0 < a < 1."""

    c: float
    a: float

    def __post_init__(self):
        if not (self.c > 0 and 0 < self.a < 1):
            raise DomainError(f"need c > 0 and 0 < a < 1, got c={self.c}, a={self.a}")

    def __call__(self, x):
        return self.c * np.asarray(x, dtype=float) ** self.a


@dataclass(frozen=True)
class MeanCurve:
    abscissae: np.ndarray
    values: np.ndarray
    kind: str
    j: int | None = None

    def __post_init__(self):
        if np.any(np.asarray(self.values) < 0):
            raise DomainError("mean curve values must be nonnegative")


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares line through (ln x, ln y)."""

    c: float
    a: float
    rms: float
    n_points: int
    lower: float
    upper: float


def _integrand(kind, x0: float, j: int | None):
    """Return ``g(x)`` for the requested mean at abscissa ``x0`` (N or t)."""
    g = _integrand_open(kind, x0, j)
    if kind in ("PhiN", "PhiT"):
        at_zero = x0
    else:
        at_zero = x0 if j == 1 else 0.0
    return lambda x: g(x) if x > 0 else at_zero


def _log1m(x):
    return math.log1p(-x) if x < 1 else -math.inf


def _integrand_open(kind, x0, j):
    if kind == "PhiN":
        n = x0
        return lambda x: -math.expm1(n * _log1m(x)) / x
    if kind == "PhiT":
        t = x0
        return lambda x: -math.expm1(-t * x) / x
    if kind == "PhiNj":
        n = x0
        log_binom = special.gammaln(n + 1) - special.gammaln(j + 1) - special.gammaln(n - j + 1)
        tail = n - j
        return lambda x: math.exp(log_binom + (j - 1) * math.log(x) + (tail * _log1m(x) if tail else 0.0))
    t = x0
    log_pre = j * math.log(t) - special.gammaln(j + 1)
    return lambda x: math.exp(log_pre + (j - 1) * math.log(x) - t * x)


def _breakpoints(x0: float, j: int | None, kind_is_n: bool = True) -> list:
    """Geometric grid resolving the 1/x0 and j/x0 scales near both ends."""
    lo = min(0.5, 1.0 / x0)
    pts = {0.5}
    b = lo
    while b < 0.5:
        pts.add(b)
        pts.add(1.0 - b)
        b *= 4.0
    if j is not None and j / x0 < 1:
        peak = j / x0
        sd = math.sqrt(peak * (1.0 - peak) / x0) if kind_is_n else math.sqrt(j) / x0
        cands = [f * peak for f in (0.5, 1.0, 2.0)] + [peak + k * sd for k in (-8, -3, -1, 1, 3, 8)]
        pts.update(c for c in cands if 0 < c < 1)
    return sorted(pts)


def _quad_piece(f, lo, hi, kw, epsabs=0.0):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        return integrate.quad(f, lo, hi, epsabs=epsabs, epsrel=1e-11, limit=400, **kw)


def _quad_one(kind, params: BPParams, x0: float, j: int | None) -> float:
    a, t = params.alpha, params.theta
    g = _integrand(kind, x0, j)
    left_exp, right_exp = -a, t + a - 1
    pts = _breakpoints(x0, j, kind.startswith("PhiN"))
    pieces = [(lambda x: g(x) * (1 - x) ** right_exp, 0.0, pts[0], dict(weight="alg", wvar=(left_exp, 0.0)))]
    pieces += [(lambda x: g(x) * x ** left_exp * (1 - x) ** right_exp, lo, hi, {})
               for lo, hi in zip(pts[:-1], pts[1:])]
    pieces.append((lambda x: g(x) * x ** left_exp, pts[-1], 1.0, dict(weight="alg", wvar=(0.0, right_exp))))
    total, err, deferred = 0.0, 0.0, []
    for piece in pieces:
        try:
            v, e = _quad_piece(*piece)
        except integrate.IntegrationWarning:
            deferred.append(piece)
            continue
        total += v
        err += e
    # pieces far from the mass can underflow toward denormals, where a purely
    # relative tolerance never converges; bound them against the rest
    for piece in deferred:
        if total == 0.0:
            raise NumericalError(f"quadrature failed for {kind} at {x0}")
        try:
            v, e = _quad_piece(*piece, epsabs=1e-13 * abs(total))
        except integrate.IntegrationWarning as exc:
            raise NumericalError(f"quadrature failed for {kind} at {x0}: {exc}") from exc
        total += v
        err += e
    scale = params.gamma * math.exp(params.log_norm())
    value = scale * total
    achieved = err / abs(total) if total else err
    if achieved > QUAD_RTOL:
        raise NumericalError(f"{kind} at {x0}: relative error {achieved:.2e}", achieved=achieved)
    return value


def phi_exact(params: BPParams, kind: str, points, j: int | None = None) -> MeanCurve:
    """Mean feature counts by quadrature of the rate measure.

    ``PhiN``: E K_N; ``PhiT``: its Poissonised analogue at time t;
    ``PhiNj``/``PhiTj``: mean number of features seen exactly ``j`` times.
    """
    if kind not in KINDS:
        raise DomainError(f"kind must be one of {KINDS}, got {kind!r}")
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise DomainError("no evaluation points given")
    if np.any(pts <= 0) or not np.all(np.isfinite(pts)):
        raise DomainError("evaluation points must be positive and finite")
    if kind in ("PhiNj", "PhiTj"):
        if j is None or j < 1:
            raise DomainError("PhiNj/PhiTj need j >= 1")
        j = int(j)
    else:
        j = None
    vals = []
    for x0 in pts:
        if kind == "PhiNj" and j > x0:
            vals.append(0.0)
            continue
        vals.append(_quad_one(kind, params, float(x0), j))
    return MeanCurve(pts, np.array(vals), kind, j)


def _need_discount(params: BPParams, what: str):
    if params.alpha <= 0:
        raise DomainError(f"{what} is undefined for alpha = 0; use two_param_phi")


def asymptotic_constant_C(params: BPParams) -> float:
    _need_discount(params, "the power-law constant")
    return params.gamma / params.alpha * math.exp(params.log_norm())


def asymptotic_KN(params: BPParams, n) -> float:
    """Leading-order E K_N ~ Gamma(1-alpha) C N**alpha."""
    c = asymptotic_constant_C(params)
    return math.gamma(1 - params.alpha) * c * float(n) ** params.alpha


def asymptotic_KNj(params: BPParams, n, j: int) -> float:
    """Leading-order E K_{N,j} ~ alpha Gamma(j-alpha) / j! * C N**alpha."""
    if j < 1:
        raise DomainError("j must be >= 1")
    c = asymptotic_constant_C(params)
    a = params.alpha
    log_ratio = special.gammaln(j - a) - special.gammaln(j + 1)
    return a * math.exp(log_ratio + math.log(c) + a * math.log(float(n)))


def asymptotic_law(params: BPParams, j: int | None = None) -> AsymptoticLaw:
    if j is None:
        return AsymptoticLaw(asymptotic_KN(params, 1.0), params.alpha)
    return AsymptoticLaw(asymptotic_KNj(params, 1.0, j), params.alpha)


class TwoParamPhi(NamedTuple):
    """Closed-form alpha = 0 means.

    ``phi_n1`` is the singleton count under the unit-mass measure
    theta x^-1 (1-x)^(theta-1) dx; ``phi_n1_scaled`` multiplies it by gamma
    and equals ``phi_exact(..., "PhiNj", j=1)``.
    """

    phi_n: float
    phi_n1: float
    phi_n1_scaled: float


def two_param_phi(params: BPParams, n) -> TwoParamPhi:
    """Closed-form E K_N and E K_{N,1} when alpha = 0.

    E K_N = sum_{m=0}^{N-1} gamma theta / (m + theta), the termwise value of
    the mean integral.  ``n = inf`` returns the limits (inf, theta, gamma theta).
    """
    if params.alpha != 0:
        raise DomainError("two_param_phi requires alpha = 0")
    g, t = params.gamma, params.theta
    if math.isinf(n):
        return TwoParamPhi(math.inf, t, g * t)
    n = int(n)
    if n < 1:
        raise DomainError("n must be >= 1")
    if n <= 1_000_000:
        s = math.fsum(1.0 / (m + t) for m in range(n))
    else:
        s = float(special.digamma(n + t) - special.digamma(t))
    single = t * n / (n - 1 + t)
    return TwoParamPhi(g * t * s, single, g * single)


def ranked_weight_law(params: BPParams, x) -> float:
    """Asymptotic number of atoms with weight at least ``x``."""
    if not (0 < x <= 1):
        raise DomainError("x must lie in (0, 1]")
    return asymptotic_constant_C(params) * x ** (-params.alpha)


def chernoff_tail(q: float, m: float) -> float:
    """Upper bound on P(sum of independent Bernoullis >= m) given mean q < m."""
    if not (q > 0 and m > q):
        raise DomainError(f"need m > q > 0, got q={q}, m={m}")
    return math.exp(m - q + m * math.log(q) - m * math.log(m))


def fit_power_law(xs, ys, lower=None, upper=None, upper_half=True) -> PowerLawFit:
    """Least-squares fit of ln y = ln c + a ln x.

    Without an explicit ``lower`` bound the fit keeps the upper half of the
    abscissa range on a log scale, ``x >= sqrt(min(x) * max(x))``.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape:
        raise DomainError("xs and ys must have the same length")
    if np.any(x <= 0) or np.any(y <= 0) or not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DomainError("power-law fit needs positive finite data")
    if lower is None and upper_half and x.size:
        lower = math.sqrt(x.min() * x.max())
    lo = -math.inf if lower is None else lower
    hi = math.inf if upper is None else upper
    keep = (x >= lo) & (x <= hi)
    if keep.sum() < 3:
        raise DomainError(f"need at least 3 points in the fit range, got {int(keep.sum())}")
    lx, ly = np.log(x[keep]), np.log(y[keep])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (intercept + slope * lx)
    return PowerLawFit(
        c=float(math.exp(intercept)),
        a=float(slope),
        rms=float(np.sqrt(np.mean(resid ** 2))),
        n_points=int(keep.sum()),
        lower=float(x[keep].min()),
        upper=float(x[keep].max()),
    )
