import math

import numpy as np
import pytest

from ancer.certify import (CertifyConfig, certificate_from_bound, certify, certify_cross_polytope,
                           certify_dataset, certify_ellipsoid, certify_gmm, cross_polytope_gap,
                           ellipsoid_gap, gmm_gap, isotropic_radius_formula, predict_counts,
                           smoothed_scores)
from ancer.errors import DataError, DomainError, SpecKindError
from ancer.nn_core import Dataset
from ancer.regions import iso_radius, max_enclosed_ball, proxy_radius
from ancer.report import ABSTAIN
from ancer.smoothing import SmoothingSpec
from ancer.stats import RngStream, clopper_pearson_lower
from conftest import constant_model
from oracles import icdf_bisect


def test_counts_constant_classifier():
    c = predict_counts(constant_model(), np.zeros(2), SmoothingSpec.gaussian([1, 1]), 500, RngStream(0))
    assert c.tolist() == [0, 0, 500]


def test_counts_reject_zero_draws():
    with pytest.raises(DomainError):
        predict_counts(constant_model(), np.zeros(2), SmoothingSpec.gaussian([1, 1]), 0, RngStream(0))


def test_counts_reproducible(toy_model):
    spec = SmoothingSpec.gaussian([0.3, 0.3])
    a = predict_counts(toy_model, np.array([0.05, 0.0]), spec, 1000, RngStream(5, 9))
    b = predict_counts(toy_model, np.array([0.05, 0.0]), spec, 1000, RngStream(5, 9))
    assert np.array_equal(a, b) and a.sum() == 1000


def test_counts_chunked_total(toy_model):
    spec = SmoothingSpec.gaussian([0.8, 0.8])
    c = predict_counts(toy_model, np.array([0.9, 0.1]), spec, 2500, RngStream(1), batch=1000)
    assert c.sum() == 2500 and np.all(c > 0)


def test_abstain_at_half():
    for spec in (SmoothingSpec.gaussian([1, 1]), SmoothingSpec.uniform([1, 1]),
                 SmoothingSpec.gmm([(1.0, [1, 1])])):
        c = certificate_from_bound(spec, 0, 0.5)
        assert c.abstain and c.predicted_class == ABSTAIN and c.gap == 0.0 and c.region.is_empty


def test_ellipsoid_all_successes():
    p = clopper_pearson_lower(100_000, 100_000, 0.001)
    assert abs(p - 0.001 ** 1e-5) < 1e-9
    assert abs(ellipsoid_gap(p) - icdf_bisect(p)) < 1e-9


def test_ellipsoid_gap_is_half_difference():
    for p in (0.6, 0.9, 0.999):
        half = 0.5 * (icdf_bisect(p) - icdf_bisect(1 - p))
        assert abs(ellipsoid_gap(p) - half) < 1e-9


def test_isotropic_reductions():
    sigma, p = 0.37, 0.93
    c = certificate_from_bound(SmoothingSpec.isotropic("gaussian", sigma, 4), 1, p)
    assert abs(iso_radius(c.region) - isotropic_radius_formula("gaussian", sigma, p)) < 1e-15
    c = certificate_from_bound(SmoothingSpec.isotropic("uniform", sigma, 4), 1, p)
    assert abs(iso_radius(c.region) - sigma * (2 * p - 1)) < 1e-15


def test_cross_polytope_example():
    c = certificate_from_bound(SmoothingSpec.uniform([0.5, 0.5]), 0, 0.8)
    assert abs(c.gap - 0.6) < 1e-15
    ball = max_enclosed_ball(c.region)
    assert ball.kind == "l1_ball" and abs(ball.scale - 0.3) < 1e-15


def test_gmm_constant_and_reduction():
    assert abs(gmm_gap(1.0) - 0.3989422804014327) < 1e-15
    sigma, p = 0.8, 0.9
    c = certificate_from_bound(SmoothingSpec.gmm([(1.0, [sigma] * 3)]), 0, p)
    assert c.region.kind == "ellipsoid"
    assert abs(iso_radius(c.region) - sigma * (2 * p - 1) / math.sqrt(2 * math.pi)) < 1e-15


def test_gaps_monotone_in_k():
    prev = [-1.0, -1.0]
    for k in range(50, 101):
        p = clopper_pearson_lower(k, 100, 0.001)
        g = [ellipsoid_gap(p) if p > 0.5 else 0.0, max(cross_polytope_gap(p), 0.0)]
        assert g[0] >= prev[0] and g[1] >= prev[1]
        prev = g


def test_wrong_kind():
    m, x = constant_model(), np.zeros(2)
    with pytest.raises(SpecKindError):
        certify_ellipsoid(m, x, SmoothingSpec.uniform([1, 1]), n=10)
    with pytest.raises(SpecKindError):
        certify_cross_polytope(m, x, SmoothingSpec.gaussian([1, 1]), n=10)
    with pytest.raises(SpecKindError):
        certify_gmm(m, x, SmoothingSpec.gaussian([1, 1]), n=10)


def test_certify_constant_classifier_is_k_equals_n():
    c = certify(constant_model(), np.zeros(2), SmoothingSpec.gaussian([0.5, 2.0]), n0=10, n=1000,
                alpha=0.001, rng=RngStream(0))
    assert c.predicted_class == 2 and c.top_count == 1000
    assert abs(c.p_lower - 0.001 ** (1 / 1000)) < 1e-9
    assert np.allclose(c.region.semi_axes(), np.array([0.5, 2.0]) * c.gap)
    assert abs(proxy_radius(c.region) - c.gap) < 1e-12


def test_selection_and_estimation_use_fresh_draws(toy_model):
    # estimation continues the stream after the selection draws
    spec = SmoothingSpec.gaussian([0.6, 0.6])
    x = np.array([0.8, 0.0])
    c = certify(toy_model, x, spec, n0=100, n=100, rng=RngStream(3))
    rng = RngStream(3)
    first = predict_counts(toy_model, x, spec, 100, rng)
    second = predict_counts(toy_model, x, spec, 100, rng)
    assert np.array_equal(c.selection_counts, first)
    assert c.top_count == second[int(np.argmax(first))]


def test_dataset_certification(toy_model):
    data = Dataset(np.array([[0.0, 0.0], [1.8, 0.3], [0.2, -0.5]]), np.array([0, 1, 0]))
    specs = [SmoothingSpec.isotropic("gaussian", 0.25, 2)] * 3
    cfg = CertifyConfig(n=2000, record_time=False)
    a, b = certify_dataset(toy_model, data, specs, cfg), certify_dataset(toy_model, data, specs, cfg)
    assert [r.p_lower for r in a] == [r.p_lower for r in b]
    assert all(r.time_ms == 0.0 for r in a)
    assert all(r.correct for r in a)
    with pytest.raises(DataError):
        certify_dataset(toy_model, data, specs[:2], cfg)
    empty = certify_dataset(toy_model, data.subset(slice(0, 0)), [], cfg)
    assert len(empty) == 0


def test_parallel_matches_serial(toy_model):
    data = Dataset(np.array([[0.0, 0.0], [1.8, 0.3], [0.2, -0.5], [-1.5, 1.0]]), np.array([0, 1, 0, 1]))
    specs = [SmoothingSpec.gaussian([0.2, 0.3])] * 4
    serial = certify_dataset(toy_model, data, specs, CertifyConfig(n=1000, record_time=False))
    par = certify_dataset(toy_model, data, specs, CertifyConfig(n=1000, workers=2, record_time=False))
    assert [(r.predicted, r.p_lower, r.gap) for r in serial] == [(r.predicted, r.p_lower, r.gap) for r in par]


def test_smoothed_scores(toy_model):
    spec = SmoothingSpec.gaussian([0.3, 0.3])
    hard = smoothed_scores(toy_model, np.zeros(2), spec, 4000, RngStream(0))
    soft = smoothed_scores(toy_model, np.zeros(2), spec, 4000, RngStream(0), hard=False)
    assert abs(hard.sum() - 1) < 1e-12 and abs(soft.sum() - 1) < 1e-12
    assert hard[0] > 0.9 and soft[0] > 0.9
