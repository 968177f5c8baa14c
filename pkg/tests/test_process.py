import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from betaproc.errors import DomainError, ParameterError
from betaproc.process import (
    BetaProcessDraw,
    BPParams,
    expected_truncated_mass,
    levy_density,
    residual_mass_estimate,
    size_biased_pick,
    stick_break,
    stick_spec,
    validate,
)
from betaproc.rng import RandomStream, split

params_st = st.builds(
    lambda g, a, dt: BPParams(g, -a + dt, a),
    st.floats(0.1, 5.0), st.floats(0.0, 0.9), st.floats(0.05, 10.0),
)


@pytest.mark.parametrize("g, t, a", [(3, 1, 0), (1, -0.2, 0.5), (3, 1, 0.6), (0.5, 0, 0.5)])
def test_valid_params(g, t, a):
    validate(BPParams(g, t, a))


@pytest.mark.parametrize("g, t, a, word", [
    (3, 1, 1.0, "alpha"), (3, 1, -0.1, "alpha"), (0, 1, 0, "gamma"),
    (math.inf, 1, 0, "gamma"), (1, -0.5, 0.5, "theta"), (1, 0, 0, "theta"),
])
def test_invalid_params_name_the_constraint(g, t, a, word):
    with pytest.raises(ParameterError, match=word):
        BPParams(g, t, a)


def test_levy_density_examples():
    assert levy_density(0.5, BPParams(1, 1, 0)) == pytest.approx(2.0, rel=1e-14)
    assert levy_density(0.25, BPParams(1, 0.5, 0.5)) == pytest.approx(4.0, rel=1e-14)


@pytest.mark.parametrize("u", [0.0, 1.0, -0.1, 1.5])
def test_levy_density_domain(u):
    with pytest.raises(DomainError):
        levy_density(u, BPParams(1, 1, 0.3))


@pytest.mark.parametrize("t, a", [(1, 0), (1, 0.3), (0.5, 0.6), (5, 0.3), (-0.2, 0.5)])
def test_first_moment_of_levy_density_is_one(t, a):
    from scipy import integrate

    p = BPParams(1, t, a)
    # u * density = c u^-a (1-u)^(t+a-1); strip the endpoint powers into quadrature weights
    c = levy_density(0.5, p) * 0.5 ** (1 + a) * 0.5 ** (1 - t - a)
    left, _ = integrate.quad(lambda u: (1 - u) ** (t + a - 1), 0, 0.5, weight="alg", wvar=(-a, 0))
    right, _ = integrate.quad(lambda u: u ** (-a), 0.5, 1, weight="alg", wvar=(0, t + a - 1))
    assert c * (left + right) == pytest.approx(1.0, abs=1e-10)
    mpmath.mp.dps = 30
    c_ref = mpmath.exp(mpmath.loggamma(1 + t) - mpmath.loggamma(1 - a) - mpmath.loggamma(t + a))
    for u in (1e-6, 0.1, 0.5, 0.9, 1 - 1e-6):
        exact = c_ref * mpmath.mpf(u) ** (-1 - a) * (1 - mpmath.mpf(u)) ** (t + a - 1)
        assert levy_density(u, p) == pytest.approx(float(exact), rel=1e-12)


def test_alpha_zero_sticks_are_beta_one_theta():
    p = BPParams(3, 2.5, 0)
    for level in (1, 2, 10, 100):
        spec = stick_spec(p, level)
        assert spec.kind == "beta" and spec.params == (1.0, 2.5)


def test_stick_levels_use_level_index():
    p = BPParams(3, 1, 0.3)
    assert stick_spec(p, 4).params == pytest.approx((0.7, 1 + 4 * 0.3))


@given(params=params_st, rounds=st.integers(1, 40), seed=st.integers(0, 2**32))
def test_draw_invariants(params, rounds, seed):
    d, tr = stick_break(params, rounds, RandomStream(seed, 0), trace=True)
    assert len(d.weights) == len(d.rounds) == len(d.atom_labels)
    assert np.all(np.diff(d.rounds) >= 0)
    assert np.all(d.log_weights < 0) and np.all(np.isfinite(d.log_weights))
    assert np.all((d.atom_labels >= 0) & (d.atom_labels <= 1))
    assert d.rounds.max(initial=1) <= rounds
    assert all(len(v) == r for v, r in zip(tr.log_proportions, d.rounds))
    assert all(np.all(np.isfinite(v) & (v < 0)) for v in tr.log_proportions)


def test_stick_trace_reconstructs_weights():
    d, tr = stick_break(BPParams(3, 1, 0.3), 60, RandomStream(1, 0), trace=True)
    w = d.weights
    ok = w > 1e-300
    np.testing.assert_allclose(tr.reconstruct()[ok], w[ok], rtol=1e-12)


def test_same_stream_same_draw():
    p = BPParams(3, 1, 0.6)
    a, b = stick_break(p, 100, RandomStream(9, 2)), stick_break(p, 100, RandomStream(9, 2))
    assert np.array_equal(a.log_weights, b.log_weights) and np.array_equal(a.rounds, b.rounds)


def test_expected_atom_count():
    d = stick_break(BPParams(3, 1, 0), 2000, RandomStream(4, 0))
    assert abs(len(d) - 6000) <= 3 * math.sqrt(6000)


def test_mean_total_mass_alpha_zero():
    st_ = RandomStream(77, 0)
    masses = [stick_break(BPParams(3, 1, 0), 200, st_).total_mass for _ in range(2000)]
    assert abs(np.mean(masses) - 3.0) < 0.1


@pytest.mark.parametrize("a", [0.0, 0.3, 0.6])
@pytest.mark.parametrize("t", [0.5, 1.0, 5.0])
def test_mean_truncated_mass_matches_product_formula(t, a):
    p = BPParams(3, t, a)
    rounds = 100
    st_ = RandomStream(int(100 * t + 10 * a), 1)
    masses = np.array([stick_break(p, rounds, st_).total_mass for _ in range(1000)])
    exact = expected_truncated_mass(p, rounds)
    assert abs(masses.mean() - exact) < 5 * masses.std() / math.sqrt(masses.size)


@pytest.mark.parametrize("a", [0.0, 0.3, 0.6])
@pytest.mark.parametrize("t", [0.5, 1.0, 5.0])
def test_truncated_mass_converges_to_gamma(t, a):
    p = BPParams(3, t, a)
    assert expected_truncated_mass(p, 10**7) == pytest.approx(3.0, rel=1e-3)
    assert expected_truncated_mass(p, 10) < expected_truncated_mass(p, 100) <= 3.0


def test_truncated_mass_one_round_is_gamma_times_stick_mean():
    p = BPParams(3, 1, 0.3)
    assert expected_truncated_mass(p, 1) == pytest.approx(3 * 0.7 / 2.0, rel=1e-14)


def test_residual_mass_one_round():
    est = residual_mass_estimate(BPParams(3, 1, 0), 1, 20_000, RandomStream(5, 0))
    assert abs(est - 1.5) < 0.05


def test_residual_mass_many_rounds():
    # 3 * 2**-60 truncation loss; the band is ~3.6 Monte-Carlo standard errors
    est = residual_mass_estimate(BPParams(3, 1, 0), 60, 8000, RandomStream(6, 0))
    assert abs(est) < 0.05


def test_residual_mass_needs_replicates():
    with pytest.raises(DomainError):
        residual_mass_estimate(BPParams(3, 1, 0), 10, 0, RandomStream(0, 0))


def _fixed_draw(weights):
    w = np.asarray(weights, dtype=float)
    return BetaProcessDraw(np.log(w), np.ones(w.size, dtype=np.int64), np.linspace(0, 1, w.size), 1)


def test_size_biased_single_atom():
    assert size_biased_pick(_fixed_draw([0.37]), RandomStream(0, 0)) == pytest.approx(0.37)


def test_size_biased_two_atoms_frequency():
    picks = size_biased_pick(_fixed_draw([0.6, 0.2]), RandomStream(1, 0), size=100_000)
    assert abs(np.mean(np.isclose(picks, 0.6)) - 0.75) < 0.005


def test_size_biased_empty_draw():
    empty = BetaProcessDraw(np.empty(0), np.empty(0, dtype=np.int64), np.empty(0), 1)
    with pytest.raises(DomainError):
        size_biased_pick(empty, RandomStream(0, 0))


def test_pooled_picks_follow_beta_law_alpha_03():
    from scipy import stats

    p = BPParams(3, 1, 0.3)
    streams = split(RandomStream(2718, 0), 2)
    # the pool must hold many more effective atoms than picks for the KS test to be calibrated
    draws = [stick_break(p, 300, streams[0]) for _ in range(1000)]
    picks = size_biased_pick(draws, streams[1], size=1000)
    assert stats.kstest(picks, stats.beta(0.7, 1.3).cdf).pvalue > 0.01


def test_merge_keeps_round_order():
    p = BPParams(2, 1, 0.3)
    a, b = stick_break(p, 20, RandomStream(1, 0)), stick_break(p, 20, RandomStream(2, 0))
    m = BetaProcessDraw.merge([a, b])
    assert len(m) == len(a) + len(b)
    assert np.all(np.diff(m.rounds) >= 0)
    assert m.total_mass == pytest.approx(a.total_mass + b.total_mass)


def test_csv_roundtrip(tmp_path):
    d = stick_break(BPParams(3, 1, 0.3), 30, RandomStream(8, 0))
    path = tmp_path / "draw.csv"
    d.to_csv(path, header_comment="test")
    assert path.read_text().splitlines()[1] == "round,weight,atom_label"
    back = BetaProcessDraw.from_csv(path, truncation_rounds=30)
    np.testing.assert_array_equal(back.rounds, d.rounds)
    np.testing.assert_array_equal(back.weights, d.weights)
    np.testing.assert_array_equal(back.atom_labels, d.atom_labels)


def test_rejects_weight_outside_unit_interval():
    with pytest.raises(DomainError):
        BetaProcessDraw(np.array([0.0]), np.array([1]), np.array([0.5]), 1)


def test_zero_rounds_rejected():
    with pytest.raises(DomainError):
        stick_break(BPParams(3, 1, 0), 0, RandomStream(0, 0))
