"""Probability identities: exact small-n quadrature, Monte Carlo, and bounds."""

import math

import numpy as np
import pytest

from kfwer import (
    ConfigurationError,
    CriticalVector,
    ProbEstimate,
    ScaleError,
    bonferroni_eq23,
    bound_eq22,
    equicorrelated_normal,
    gen_simes_critvals,
    independent,
    lemma21_rhs_mc,
    union_prob_exact_smalln,
    union_prob_mc,
)


def simes_vector(n, k, alpha=0.05):
    cs = gen_simes_critvals(n, k, alpha, independent())
    return CriticalVector(c=cs.values, k=k, n=n)


def test_critical_vector_validation():
    CriticalVector(c=(0.01, 0.02), k=2, n=3)
    with pytest.raises(ConfigurationError):
        CriticalVector(c=(0.01,), k=2, n=3)  # needs n - k + 1 entries
    with pytest.raises(ConfigurationError):
        CriticalVector(c=(0.02, 0.01), k=1, n=2)
    with pytest.raises(ConfigurationError):
        CriticalVector(c=(0.01, float("nan")), k=1, n=2)


def test_prob_estimate_invariant():
    ProbEstimate(0.5, 0.001, 1000, "monte_carlo")
    ProbEstimate(0.5, 0.0, 0, "exact_quadrature")
    with pytest.raises(ConfigurationError):
        ProbEstimate(0.5, 0.0, 1000, "monte_carlo")
    with pytest.raises(ConfigurationError):
        ProbEstimate(0.5, 0.001, 0, "exact_quadrature")
    with pytest.raises(ConfigurationError):
        ProbEstimate(0.5, 0.001, 1000, "guesswork")


# ---------------------------------------------------------------------------
# exact quadrature


def test_exact_two_uniforms_hand_value():
    # Pr{P_(1) <= 0.025 or P_(2) <= 0.05} = 2*0.025*0.95 + 0.05^2 + 2*0.025*0.05
    cv = CriticalVector(c=(0.025, 0.05), k=1, n=2)
    est = union_prob_exact_smalln(cv)
    assert est.method == "exact_quadrature"
    assert est.std_error == 0.0
    assert est.value == pytest.approx(0.05, abs=1e-12)


def test_exact_max_of_two_uniforms():
    cv = CriticalVector(c=(0.3,), k=2, n=2)
    assert union_prob_exact_smalln(cv).value == pytest.approx(0.09, abs=1e-12)


def test_exact_reproduces_alpha_for_simes_constants():
    for n, k in [(1, 1), (2, 1), (3, 2), (4, 2), (4, 3), (4, 4)]:
        est = union_prob_exact_smalln(simes_vector(n, k))
        assert abs(est.value - 0.05) <= 1e-8, (n, k)


def test_exact_classic_simes_identity():
    # i*alpha/n constants give exactly alpha for independent uniforms
    cv = CriticalVector(c=tuple(i * 0.05 / 4 for i in range(1, 5)), k=1, n=4)
    assert union_prob_exact_smalln(cv).value == pytest.approx(0.05, abs=1e-10)


def test_exact_scale_limit():
    with pytest.raises(ScaleError):
        union_prob_exact_smalln(simes_vector(5, 2))


# ---------------------------------------------------------------------------
# Monte Carlo


def test_union_mc_validates_reps():
    with pytest.raises(ConfigurationError):
        union_prob_mc(independent(), simes_vector(3, 2), reps=5000, seed=1)


def test_union_mc_agrees_with_exact():
    cv = simes_vector(3, 2)
    exact = union_prob_exact_smalln(cv).value
    est = union_prob_mc(independent(), cv, reps=200_000, seed=42)
    assert est.method == "monte_carlo"
    assert abs(est.value - exact) < 4 * est.std_error


def test_union_mc_certain_event_keeps_positive_se():
    cv = CriticalVector(c=(0.5, 1.0), k=1, n=2)
    est = union_prob_mc(independent(), cv, reps=10_000, seed=9)
    assert est.value == pytest.approx(1.0)
    assert est.std_error > 0.0  # floored, MC never reports exact certainty


def test_union_mc_accepts_callable_sampler():
    def sampler(reps, seed):
        return np.random.default_rng(seed).uniform(size=(reps, 2))

    cv = CriticalVector(c=(0.025, 0.05), k=1, n=2)
    est = union_prob_mc(sampler, cv, reps=100_000, seed=12)
    assert abs(est.value - 0.05) < 4 * est.std_error

    def bad(reps, seed):
        return np.zeros((reps, 3))

    with pytest.raises(ConfigurationError):
        union_prob_mc(bad, cv, reps=100_000, seed=12)


def test_lemma21_identity_small_uniform():
    cv = simes_vector(4, 2)
    lhs = union_prob_mc(independent(), cv, reps=200_000, seed=100)
    rhs = lemma21_rhs_mc(independent(), cv, reps=200_000, seed=101)
    tol = 4 * math.hypot(lhs.std_error, rhs.std_error)
    assert abs(lhs.value - rhs.value) < tol


def test_lemma21_identity_dependent():
    model = equicorrelated_normal(0.5)
    cs = gen_simes_critvals(4, 2, 0.05, model)
    cv = CriticalVector(c=cs.values, k=2, n=4)
    lhs = union_prob_mc(model, cv, reps=200_000, seed=300)
    rhs = lemma21_rhs_mc(model, cv, reps=200_000, seed=301)
    tol = 4 * math.hypot(lhs.std_error, rhs.std_error)
    assert abs(lhs.value - rhs.value) < tol


def test_lemma21_degenerate_n_equals_k():
    # single subset, no telescoping terms: Pr{max of both <= c}
    cv = CriticalVector(c=(0.4,), k=2, n=2)
    est = lemma21_rhs_mc(independent(), cv, reps=100_000, seed=7)
    assert abs(est.value - 0.16) < 4 * est.std_error


def test_lemma21_guards():
    with pytest.raises(ScaleError):
        lemma21_rhs_mc(independent(), simes_vector(9, 2), reps=100_000, seed=1)
    with pytest.raises(ConfigurationError):
        lemma21_rhs_mc(independent(), simes_vector(4, 2), reps=50_000, seed=1)


# ---------------------------------------------------------------------------
# closed-form bounds


def test_bound_eq22_flat_constants_collapse():
    # with a flat vector the telescoping sum leaves C(n,k) * F_k(c)
    fk = lambda u: u**2
    cv = CriticalVector(c=(0.1, 0.1, 0.1), k=2, n=4)
    got = bound_eq22(fk, cv)
    assert got == pytest.approx(math.comb(4, 2) * 0.01, rel=1e-12)


def test_bound_eq22_is_displayed_value_not_clamped():
    fk = lambda u: u
    cv = CriticalVector(c=(0.9, 0.9, 0.9), k=1, n=3)
    assert bound_eq22(fk, cv) == pytest.approx(3 * 0.9, rel=1e-12)


def test_bound_eq22_dominates_truth_on_simes_constants():
    cv = simes_vector(4, 2)
    truth = union_prob_exact_smalln(cv).value
    bound = bound_eq22(lambda u: u**2, cv)
    assert bound >= truth - 1e-12


def test_bound_eq22_rejects_decreasing_fk_values():
    fk = lambda u: 1.0 - u  # not a CDF on this range
    cv = CriticalVector(c=(0.2, 0.4), k=1, n=2)
    with pytest.raises(ConfigurationError):
        bound_eq22(fk, cv)


def test_bonferroni_eq23():
    assert bonferroni_eq23(0.001, 4, 2) == pytest.approx(0.006, rel=1e-12)
    assert bonferroni_eq23(0.4, 4, 2) == 1.0
    with pytest.raises(ConfigurationError):
        bonferroni_eq23(1.5, 4, 2)
