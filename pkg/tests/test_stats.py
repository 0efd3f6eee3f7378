import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ancer.errors import DomainError
from ancer.stats import (RngStream, clopper_pearson_lower, std_normal_cdf, std_normal_icdf,
                         stream_id)
from oracles import binom_upper_tail, clopper_pearson_oracle, icdf_bisect, phi_oracle


def test_cdf_at_zero():
    assert std_normal_cdf(0.0) == 0.5


def test_cdf_matches_series_oracle():
    assert abs(std_normal_cdf(1.959964) - 0.975) < 1e-6
    for x in np.linspace(-8, 8, 161):
        assert abs(std_normal_cdf(x) - phi_oracle(x)) < 1e-12


@given(st.floats(-30, 30))
def test_cdf_symmetry(x):
    assert abs(std_normal_cdf(x) + std_normal_cdf(-x) - 1.0) < 1e-15


def test_icdf_known_values():
    assert std_normal_icdf(0.5) == 0.0
    assert abs(std_normal_icdf(0.75) - 0.6744898) < 1e-6
    assert abs(std_normal_icdf(0.75) - icdf_bisect(0.75)) < 1e-12
    v = std_normal_icdf(0.93325)
    assert abs(std_normal_cdf(v) - 0.93325) < 1e-9


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, float("nan")])
def test_icdf_domain(p):
    with pytest.raises(DomainError):
        std_normal_icdf(p)


def test_icdf_cdf_roundtrip_over_range():
    for p in np.concatenate([np.geomspace(1e-9, 0.5, 400), 1 - np.geomspace(1e-9, 0.5, 400)]):
        assert abs(std_normal_cdf(std_normal_icdf(p)) - p) < 1e-9


@given(st.floats(1e-9, 1 - 1e-9))
def test_icdf_inverts_cdf(p):
    assert abs(std_normal_cdf(std_normal_icdf(p)) - p) < 1e-9


def test_cp_zero_successes():
    assert clopper_pearson_lower(0, 50, 0.01) == 0.0


def test_cp_all_successes_closed_form():
    assert abs(clopper_pearson_lower(100, 100, 0.001) - 0.001 ** 0.01) < 1e-9
    assert abs(0.001 ** 0.01 - 0.93325) < 1e-5
    assert abs(clopper_pearson_lower(100_000, 100_000, 0.001) - 0.001 ** 1e-5) < 1e-9


def test_cp_matches_binomial_oracle():
    assert abs(clopper_pearson_lower(90, 100, 0.001) - clopper_pearson_oracle(90, 100, 0.001)) < 1e-6


def test_cp_tail_condition_small_n():
    for n in range(1, 31):
        for k in range(1, n + 1):
            p = clopper_pearson_lower(k, n, 0.05)
            assert binom_upper_tail(k, n, p) <= 0.05 + 1e-9
            assert binom_upper_tail(k, n, min(p + 1e-8, 1.0)) > 0.05 - 1e-7


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 400), st.data())
def test_cp_monotone_in_k_and_alpha(n, data):
    k = data.draw(st.integers(0, n - 1))
    assert clopper_pearson_lower(k, n, 0.01) <= clopper_pearson_lower(k + 1, n, 0.01)
    assert clopper_pearson_lower(k + 1, n, 0.05) >= clopper_pearson_lower(k + 1, n, 0.001)


@pytest.mark.parametrize("k,n,alpha", [(-1, 10, 0.1), (11, 10, 0.1), (1, 0, 0.1),
                                       (1, 10, 0.0), (1, 10, 1.0)])
def test_cp_domain(k, n, alpha):
    with pytest.raises(DomainError):
        clopper_pearson_lower(k, n, alpha)


def test_rng_reproducible_and_distinct():
    a = RngStream(7, stream_id(3, 1)).normal((5, 2))
    b = RngStream(7, stream_id(3, 1)).normal((5, 2))
    c = RngStream(7, stream_id(4, 1)).normal((5, 2))
    d = RngStream(7, stream_id(3, 2)).normal((5, 2))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_rng_normal_moments():
    x = RngStream(1, 1).normal(200_000)
    assert abs(x.mean()) < 0.01
    assert abs(x.std() - 1.0) < 0.01
    # odd count exercises the half-pair path
    assert RngStream(1, 1).normal(3).shape == (3,)


def test_rng_uniform_range():
    u = RngStream(2, 0).uniform(100_000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.01


def test_rng_choice_frequencies():
    w = [0.2, 0.5, 0.3]
    k = RngStream(3).choice(w, 100_000)
    freq = np.bincount(k, minlength=3) / k.size
    assert np.allclose(freq, w, atol=0.01)


def test_rng_permutation():
    p = RngStream(4).permutation(50)
    assert sorted(p.tolist()) == list(range(50))


def test_stream_ids_do_not_collide():
    ids = {stream_id(i, ph) for i in range(1000) for ph in (1, 2, 3, 11, 12)}
    assert len(ids) == 5000
    assert math.isfinite(float(stream_id(10**6, 12)))
