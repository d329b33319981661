import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from driftrack.classifier import LinearModel, TrainingBatch, gradient, loss, score, score_candidates, train


def random_batch(rng, d=None):
    d = d or int(rng.integers(1, 9))
    pos = rng.normal(size=(int(rng.integers(1, 6)), d))
    neg = rng.normal(size=(int(rng.integers(0, 12)), d))
    return TrainingBatch(pos, neg)


def finite_difference(model, batch, h=1e-5):
    """Central differences over (weights, bias)."""
    theta = np.append(model.weights, model.bias)
    g = np.zeros_like(theta)
    for i in range(theta.size):
        up, down = theta.copy(), theta.copy()
        up[i] += h
        down[i] -= h
        lu = loss(LinearModel(up[:-1], up[-1], model.reg_lambda), batch)
        ld = loss(LinearModel(down[:-1], down[-1], model.reg_lambda), batch)
        g[i] = (lu - ld) / (2 * h)
    return g


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    for _ in range(100):
        batch = random_batch(rng)
        model = LinearModel(rng.normal(size=batch.dim), float(rng.normal()), reg_lambda=float(rng.uniform(0, 1)))
        gw, gb = gradient(model, batch)
        analytic = np.append(gw, gb)
        numeric = finite_difference(model, batch)
        rel = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-12)
        assert rel < 1e-5


def test_loss_never_increases_along_descent():
    rng = np.random.default_rng(1)
    for _ in range(100):
        batch = random_batch(rng)
        model = LinearModel(rng.normal(size=batch.dim), reg_lambda=0.1)
        prev = loss(model, batch)
        for _ in range(15):
            model = model.train(batch, steps=1)
            cur = loss(model, batch)
            assert cur <= prev + 1e-12 * max(1.0, abs(prev))
            prev = cur


def test_one_dimensional_closed_form():
    batch = TrainingBatch([[1.0]], [[-1.0]])
    model = LinearModel([0.0], bias=0.0, reg_lambda=0.0, fit_bias=False)
    model = model.train(batch, steps=50)
    assert abs(model.weights[0] - 0.5) < 1e-8
    assert model.bias == 0.0


def test_single_positive_is_interpolated():
    e1 = np.eye(4)[0]
    model = LinearModel.zeros(4, reg_lambda=0.0).train(TrainingBatch([e1], np.zeros((0, 4))), steps=50)
    assert model.score(e1) == pytest.approx(1.0, abs=1e-9)


def test_strong_regularisation_shrinks_weights():
    rng = np.random.default_rng(2)
    batch = random_batch(rng, d=5)
    norms = [np.linalg.norm(LinearModel.zeros(5, reg_lambda=lam).train(batch, steps=200).weights) for lam in (1e-2, 1e2, 1e6)]
    assert norms[0] > norms[1] > norms[2]
    assert norms[2] < 1e-4


def test_training_matches_normal_equations_at_convergence():
    rng = np.random.default_rng(3)
    batch = random_batch(rng, d=4)
    model = LinearModel.zeros(4, reg_lambda=0.3).train(batch, steps=5000)
    x = np.vstack([batch.positives, batch.negatives])
    y = np.r_[np.ones(len(batch.positives)), np.zeros(len(batch.negatives))]
    xa = np.hstack([x, np.ones((len(x), 1))])
    reg = np.diag([0.3] * 4 + [0.0])
    theta = np.linalg.solve(xa.T @ xa + reg, xa.T @ y)
    assert np.allclose(np.append(model.weights, model.bias), theta, atol=1e-6)


def test_score_examples():
    assert score(LinearModel.zeros(3), np.array([4.0, -2.0, 9.0])) == 0.0
    assert LinearModel([1.0], bias=0.7).score([1.0]) == 1.0
    assert LinearModel([0.5]).score([1.0]) == 0.5
    assert LinearModel([1.0]).score([-3.0]) == 0.0


def test_candidate_examples():
    m = LinearModel([1.0])
    assert score_candidates(m, [[0.3]])[1] == 0
    assert score_candidates(m, [[0.3], [0.3]])[1] == 0
    scores, idx, best = m.score_candidates([[0.2], [0.9], [0.4]])
    assert idx == 1 and best == pytest.approx(0.9)
    assert scores.tolist() == pytest.approx([0.2, 0.9, 0.4])


def test_saturated_candidates_are_still_ranked():
    _, idx, best = LinearModel([1.0]).score_candidates([[1.5], [2.0]])
    assert idx == 1 and best == 1.0


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        LinearModel.zeros(3).score(np.zeros(4))
    with pytest.raises(ValueError):
        LinearModel.zeros(3).train(TrainingBatch(np.zeros((1, 4)), np.zeros((0, 4))))
    with pytest.raises(ValueError):
        TrainingBatch(np.zeros((1, 3)), np.zeros((2, 4)))


def test_batch_and_model_validation():
    with pytest.raises(ValueError):
        TrainingBatch(np.zeros((0, 3)), np.zeros((2, 3)))
    with pytest.raises(ValueError):
        LinearModel([np.inf])
    with pytest.raises(ValueError):
        LinearModel([0.0], reg_lambda=-1.0)
    with pytest.raises(ValueError):
        score_candidates(LinearModel.zeros(2), np.zeros((0, 2)))


def test_functional_train_uses_model_steps():
    rng = np.random.default_rng(4)
    batch = random_batch(rng, d=3)
    m = LinearModel.zeros(3, steps=7)
    assert np.array_equal(train(m, batch).weights, m.train(batch, steps=7).weights)


finite = st.floats(-10, 10, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.lists(finite, min_size=3, max_size=3), min_size=1, max_size=8),
    st.lists(finite, min_size=3, max_size=3),
    finite,
    st.floats(1e-3, 1e3),
)
def test_argmax_invariant_to_positive_scaling(cands, w, b, c):
    m = LinearModel(w, b)
    raw = m.raw(np.array(cands))
    scaled = LinearModel(np.array(w) * c, b * c)
    # ties after scaling may be broken differently only if they were ties before
    i, j = m.score_candidates(cands)[1], scaled.score_candidates(cands)[1]
    assert i == j or np.isclose(raw[i], raw[j], rtol=1e-9, atol=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_scores_lie_in_unit_interval(seed):
    rng = np.random.default_rng(seed)
    m = LinearModel(rng.normal(size=5) * 3, float(rng.normal()))
    scores, idx, best = m.score_candidates(rng.normal(size=(6, 5)))
    assert np.all((scores >= 0) & (scores <= 1))
    assert best == scores[idx] == scores.max()
