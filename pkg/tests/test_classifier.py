import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.special import logsumexp

from mechosr.classifier import NOVEL, NoveltyNaiveBayes, gaussian_log_density


@pytest.fixture
def model(separated_blobs):
    X, y, _, _ = separated_blobs
    return NoveltyNaiveBayes().fit(X, y)


def mixture_log_likelihood_mp(x, means, variances):
    """Equal-weight mixture log density at 50 significant digits."""
    mpmath.mp.dps = 50
    total = mpmath.mpf(0)
    for mu, var in zip(means, variances):
        log_c = mpmath.mpf(0)
        for xi, mi, vi in zip(x, mu, var):
            xi, mi, vi = mpmath.mpf(float(xi)), mpmath.mpf(float(mi)), mpmath.mpf(float(vi))
            log_c += -mpmath.log(2 * mpmath.pi * vi) / 2 - (xi - mi) ** 2 / (2 * vi)
        total += mpmath.exp(log_c)
    return mpmath.log(total / len(means))


def test_fit_means_are_arithmetic_means():
    X = np.array([[1.0, 2, 0.1, 0.5], [3, 4, 0.3, 0.7], [10, 20, 0.5, 1], [12, 22, 0.7, 1.2]])
    m = NoveltyNaiveBayes().fit(X, [1, 1, 2, 2])
    np.testing.assert_array_equal(m.means_, [[2, 3, 0.2, 0.6], [11, 21, 0.6, 1.1]])
    np.testing.assert_allclose(m.variances_, [[2, 2, 0.02, 0.02], [2, 2, 0.02, 0.02]])


def test_constant_feature_gets_floor(separated_blobs):
    X, y, _, _ = separated_blobs
    X = X.copy()
    X[y == 1, 3] = 0.3
    m = NoveltyNaiveBayes().fit(X, y)
    assert m.variances_[0, 3] == m.variance_floor_[3] > 0
    assert np.all(m.variances_ >= m.variance_floor_)


def test_balanced_classes_uniform_priors(model):
    np.testing.assert_allclose(model.priors_, [1 / 3] * 3)
    assert abs(model.priors_.sum() - 1) <= 1e-12


def test_fit_preconditions():
    X = np.ones((4, 4))
    with pytest.raises(ValueError):
        NoveltyNaiveBayes().fit(X, [1, 1, 1, 1])
    with pytest.raises(ValueError):
        NoveltyNaiveBayes().fit(X, [1, 2, 2, 2])


def test_log_likelihood_at_class_mean_matches_high_precision(model):
    for c, mu in enumerate(model.means_):
        ref = mixture_log_likelihood_mp(mu, model.means_, model.variances_)
        got = model.score_samples(mu[None, :])[0]
        assert got == pytest.approx(float(ref), rel=1e-12)
        # separated classes: the nearest class dominates the mixture
        single = np.log(1 / 3) + gaussian_log_density(mu[None], mu[None], model.variances_[[c]])[0, 0]
        assert got == pytest.approx(single, abs=1e-9)


def test_log_likelihood_random_points_match_high_precision(model):
    rng = np.random.default_rng(5)
    pts = model.means_[rng.integers(0, 3, 10)] + rng.normal(0, 3, (10, 4)) * np.sqrt(model.variances_[0])
    for x in pts:
        ref = mixture_log_likelihood_mp(x, model.means_, model.variances_)
        assert model.score_samples(x[None])[0] == pytest.approx(float(ref), rel=1e-10, abs=1e-10)


def test_log_likelihood_agrees_with_naive_form(model):
    rng = np.random.default_rng(6)
    pts = model.means_[0] + rng.normal(0, 1, (20, 4)) * np.sqrt(model.variances_[0])
    dens = np.exp(gaussian_log_density(pts, model.means_, model.variances_))
    naive = np.log(dens.mean(axis=1))
    np.testing.assert_allclose(model.score_samples(pts), naive, rtol=1e-9)


def test_translation_invariance(separated_blobs):
    X, y, _, _ = separated_blobs
    shift = np.array([100.0, 5.0, 0.0, 1.0])
    a = NoveltyNaiveBayes().fit(X, y)
    b = NoveltyNaiveBayes().fit(X + shift, y)
    x = X[:5] + 0.5
    np.testing.assert_allclose(a.score_samples(x), b.score_samples(x + shift), rtol=1e-9)


def test_far_sample_is_finite_and_very_negative(model):
    x = model.means_[0] + 1e6 * np.sqrt(model.variances_.max(axis=0))
    ll = model.score_samples(x[None])[0]
    assert np.isfinite(ll) and ll < -1e6
    assert model.predict(x[None])[0] == NOVEL


def test_posterior_at_class_mean(model):
    p = model.predict_proba(model.means_)
    assert np.all(np.diag(p) > 0.99)


def test_identical_classes_split_posterior_evenly():
    X = np.array([[1.0, 2, 0.1, 0.5], [3, 4, 0.3, 0.7]] * 2)
    m = NoveltyNaiveBayes().fit(X, [1, 1, 2, 2])
    np.testing.assert_allclose(m.predict_proba([[2.0, 3, 0.2, 0.6]]), [[0.5, 0.5]], atol=1e-15)


@given(arrays(np.float64, (3, 4), elements=st.floats(-50, 50)))
def test_posterior_normalised_and_argmax_consistent(offsets):
    rng = np.random.default_rng(0)
    means = np.array([[500.0, 10, 0.2, 0.3], [1500, 40, 0.5, 0.6], [2500, 70, 0.8, 0.9]])
    X = np.vstack([rng.normal(m, [10, 0.5, 0.01, 0.01], (10, 4)) for m in means])
    m = NoveltyNaiveBayes().fit(X, np.repeat([1, 2, 3], 10))
    pts = means + offsets * np.array([10, 0.5, 0.01, 0.01])
    p = m.predict_proba(pts)
    assert np.all(np.abs(p.sum(axis=1) - 1) <= 1e-12)
    assert np.all((p >= 0) & (p <= 1))
    pred = m.predict(pts)
    known = pred != NOVEL
    np.testing.assert_array_equal(pred[known], m.classes_[p.argmax(axis=1)][known])


def test_log_posterior_shift_invariant(model):
    joint = model._joint_log(model.means_)
    shifted = joint + 1234.5
    np.testing.assert_allclose(
        joint - logsumexp(joint, axis=1, keepdims=True),
        shifted - logsumexp(shifted, axis=1, keepdims=True),
        atol=1e-9,
    )


def test_threshold_q0_is_minimum(separated_blobs):
    X, y, _, _ = separated_blobs
    m = NoveltyNaiveBayes(quantile=0).fit(X, y)
    assert m.threshold_ == m.score_samples(X).min()
    assert not m.is_novel(X).any()


def test_threshold_quantile_bounds_training_rejections():
    rng = np.random.default_rng(8)
    X = np.vstack([rng.normal([100 * g, 5 * g, 0.5, 0.5], [5, 0.3, 0.05, 0.05], (150, 4)) for g in range(1, 13)])
    y = np.repeat(np.arange(1, 13), 150)
    m = NoveltyNaiveBayes(quantile=0.01).fit(X, y)
    assert len(X) == 1800
    assert m.is_novel(X).sum() <= 18


def test_threshold_monotone_in_quantile(model, separated_blobs):
    X = separated_blobs[0]
    taus = [model.calibrate_threshold(X, q) for q in (0.0, 0.01, 0.1, 0.3)]
    assert taus == sorted(taus)
    with pytest.raises(ValueError):
        model.calibrate_threshold(X, 0.5)


def test_predict_known_and_novel(model):
    assert list(model.predict(model.means_)) == [1, 2, 3]
    far = model.means_[1] + 100 * np.sqrt(model.variances_[1])
    assert model.predict(far[None])[0] == NOVEL


def test_boundary_is_known(separated_blobs):
    X, y, _, _ = separated_blobs
    x = X[:1] + [1.0, 0.1, 0.002, 0.002]
    tau = NoveltyNaiveBayes().fit(X, y).score_samples(x)[0]
    m = NoveltyNaiveBayes(threshold=tau).fit(X, y)
    assert m.predict(x)[0] == 1
    assert NoveltyNaiveBayes(threshold=np.nextafter(tau, np.inf)).fit(X, y).predict(x)[0] == NOVEL


@given(st.floats(-200, 200), st.floats(0, 50))
def test_raising_threshold_never_unflags(tau, delta):
    rng = np.random.default_rng(1)
    X = np.vstack([rng.normal([100, 5, 0.5, 0.5], [5, 0.3, 0.05, 0.05], (20, 4)),
                   rng.normal([300, 9, 0.2, 0.8], [5, 0.3, 0.05, 0.05], (20, 4))])
    y = np.repeat([1, 2], 20)
    pts = X + rng.normal(0, 10, X.shape) * [5, 0.3, 0.05, 0.05]
    low = NoveltyNaiveBayes(threshold=tau).fit(X, y).is_novel(pts)
    high = NoveltyNaiveBayes(threshold=tau + delta).fit(X, y).is_novel(pts)
    assert np.all(high[low])
