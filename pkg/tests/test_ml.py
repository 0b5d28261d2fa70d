import math

import numpy as np
import pytest

from sierra.ml import (
    BadArchitecture,
    EmptyMatrix,
    LabelOutOfRange,
    MlpClassifier,
    MlpRegressor,
    NonFiniteInput,
    ShapeMismatch,
    TrainConfig,
    confusion_matrix,
    forward,
    grad,
    grad_check,
    init_mlp,
    load_csv,
    loss,
    metrics,
    predict,
    train,
)
from sierra.ml.data import CsvFormatError

XOR_X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
XOR_Y = np.array([0, 1, 1, 0])
XOR_CFG = TrainConfig(learning_rate=0.1, epochs=2000, batch_size=4, momentum=0.9, seed=7)


def identity_model(n=4):
    m = init_mlp([n, n], "tanh", "regression", seed=0)
    m.weights[0] = np.eye(n)
    m.biases[0] = np.zeros(n)
    return m


# ---------------------------------------------------------------------------
# init

def test_init_deterministic_for_seed():
    a = init_mlp([2, 3, 2], "relu", "classification", seed=7)
    b = init_mlp([2, 3, 2], "relu", "classification", seed=7)
    for wa, wb in zip(a.weights, b.weights):
        assert np.array_equal(wa, wb)
    c = init_mlp([2, 3, 2], "relu", "classification", seed=8)
    assert not np.array_equal(a.weights[0], c.weights[0])


def test_init_shapes_and_zero_biases():
    m = init_mlp([3, 5, 2], "tanh", "classification", seed=1)
    assert [w.shape for w in m.weights] == [(5, 3), (2, 5)]
    assert all(not b.any() for b in m.biases)


def test_init_glorot_bounds():
    m = init_mlp([10, 20], "tanh", "regression", seed=2)
    bound = math.sqrt(6.0 / 30)
    assert np.abs(m.weights[0]).max() <= bound


@pytest.mark.parametrize("sizes", [[2], [], [2, 0, 3], [0, 2]])
def test_bad_architectures(sizes):
    with pytest.raises(BadArchitecture):
        init_mlp(sizes, "tanh", "classification", seed=0)


def test_unknown_activation_and_task():
    with pytest.raises(BadArchitecture):
        init_mlp([2, 2], "sigmoid", "classification", seed=0)
    with pytest.raises(BadArchitecture):
        init_mlp([2, 2], "tanh", "clustering", seed=0)


# ---------------------------------------------------------------------------
# forward

def test_identity_network_forwards_input():
    m = identity_model()
    x = np.array([1.0, -2.0, 0.5, 3.0])
    assert np.allclose(forward(m, x), x)


def test_classification_rows_sum_to_one():
    m = init_mlp([3, 6, 4], "relu", "classification", seed=5)
    x = np.random.default_rng(0).normal(size=(10, 3)) * 5
    out = forward(m, x)
    assert np.allclose(out.sum(axis=1), 1.0, atol=1e-12)
    assert (out >= 0).all()


def test_zero_model_gives_uniform_probs():
    m = init_mlp([2, 4], "tanh", "classification", seed=0)
    m.weights[0][:] = 0.0
    out = forward(m, np.array([3.0, -1.0]))
    assert np.allclose(out, [0.25, 0.25, 0.25, 0.25], atol=1e-15)


def test_forward_shape_mismatch():
    m = init_mlp([3, 2], "tanh", "classification", seed=0)
    with pytest.raises(ShapeMismatch):
        forward(m, np.zeros((4, 5)))


def test_forward_rejects_nan_input():
    m = init_mlp([2, 2], "tanh", "classification", seed=0)
    with pytest.raises(NonFiniteInput):
        forward(m, np.array([1.0, float("nan")]))


# ---------------------------------------------------------------------------
# loss

def test_mse_zero_at_perfect_fit():
    pred = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert loss(pred, pred.copy(), "mse") == 0.0


def test_cross_entropy_uniform_is_log_k():
    pred = np.full((5, 4), 0.25)
    target = np.array([0, 1, 2, 3, 0])
    assert loss(pred, target, "cross_entropy") == pytest.approx(math.log(4), abs=1e-6)


def test_cross_entropy_perfect_prediction_near_zero():
    pred = np.eye(3)
    target = np.array([0, 1, 2])
    assert loss(pred, target, "cross_entropy") == pytest.approx(0.0, abs=1e-9)


def test_cross_entropy_clamps_log_argument():
    pred = np.array([[1.0, 0.0], [0.0, 1.0]])
    target = np.array([1, 0])  # true class has probability 0
    assert loss(pred, target, "cross_entropy") == pytest.approx(-math.log(1e-12))


def test_loss_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        loss(np.zeros((2, 3)), np.zeros((3, 3)), "mse")
    with pytest.raises(ShapeMismatch):
        loss(np.zeros((2, 3)), np.zeros(3), "cross_entropy")


# ---------------------------------------------------------------------------
# gradients

def test_gradients_vanish_at_exact_fit():
    m = identity_model(3)
    x = np.random.default_rng(1).normal(size=(6, 3))
    gw, gb = grad(m, x, x)  # identity net reproduces x exactly: zero loss
    for g in gw + gb:
        assert np.abs(g).max() < 1e-10


def test_duplicating_batch_leaves_gradients_unchanged():
    m = init_mlp([3, 4, 2], "tanh", "classification", seed=3)
    rng = np.random.default_rng(2)
    x = rng.normal(size=(5, 3))
    y = rng.integers(0, 2, 5)
    gw1, gb1 = grad(m, x, y)
    gw2, gb2 = grad(m, np.vstack([x, x]), np.concatenate([y, y]))
    for a, b in zip(gw1 + gb1, gw2 + gb2):
        assert np.allclose(a, b, atol=1e-12)


def test_grad_empty_batch_rejected():
    m = init_mlp([2, 2], "tanh", "classification", seed=0)
    with pytest.raises(ShapeMismatch):
        grad(m, np.zeros((0, 2)), np.zeros(0, dtype=int))


def test_grad_check_tanh_classifier():
    rng = np.random.default_rng(42)
    m = init_mlp([2, 5, 3], "tanh", "classification", seed=11)
    x = rng.normal(size=(8, 2))
    y = rng.integers(0, 3, 8)
    assert grad_check(m, x, y) < 1e-5


def test_grad_check_linear_regression_model():
    rng = np.random.default_rng(43)
    m = init_mlp([3, 2], "tanh", "regression", seed=12)  # no hidden layer: linear + mse
    x = rng.normal(size=(6, 3))
    y = rng.normal(size=(6, 2))
    assert grad_check(m, x, y) < 1e-7


# ---------------------------------------------------------------------------
# training

def test_zero_learning_rate_changes_nothing():
    m = init_mlp([2, 4, 2], "tanh", "classification", seed=1)
    cfg = TrainConfig(learning_rate=0.0, epochs=1, batch_size=2, momentum=0.0, seed=0)
    trained, history = train(m, XOR_X, XOR_Y, cfg)
    assert len(history) == 1
    for a, b in zip(m.weights, trained.weights):
        assert np.array_equal(a, b)


def test_training_is_deterministic():
    m = init_mlp([2, 4, 2], "tanh", "classification", seed=1)
    cfg = TrainConfig(learning_rate=0.05, epochs=20, batch_size=2, momentum=0.9, seed=9)
    _, h1 = train(m, XOR_X, XOR_Y, cfg)
    _, h2 = train(m, XOR_X, XOR_Y, cfg)
    assert h1 == h2


def test_training_does_not_mutate_input_model():
    m = init_mlp([2, 4, 2], "tanh", "classification", seed=1)
    w0 = m.weights[0].copy()
    train(m, XOR_X, XOR_Y, TrainConfig(learning_rate=0.1, epochs=5, batch_size=4, seed=0))
    assert np.array_equal(m.weights[0], w0)


def test_xor_reaches_perfect_train_accuracy():
    m = init_mlp([2, 8, 2], "tanh", "classification", seed=7)
    trained, history = train(m, XOR_X, XOR_Y, XOR_CFG)
    assert len(history) == 2000
    assert (predict(trained, XOR_X) == XOR_Y).all()


def test_history_length_matches_epochs():
    m = init_mlp([2, 3, 2], "relu", "classification", seed=0)
    _, history = train(m, XOR_X, XOR_Y, TrainConfig(learning_rate=0.01, epochs=7, batch_size=2, seed=1))
    assert len(history) == 7


@pytest.mark.parametrize(
    "kwargs",
    [
        {"learning_rate": -0.1, "epochs": 1},
        {"learning_rate": 0.1, "epochs": 0},
        {"learning_rate": 0.1, "epochs": 1, "batch_size": 0},
        {"learning_rate": 0.1, "epochs": 1, "momentum": 1.0},
        {"learning_rate": 0.1, "epochs": 1, "momentum": -0.2},
    ],
)
def test_bad_train_config(kwargs):
    with pytest.raises(ValueError):
        TrainConfig(**kwargs)


# ---------------------------------------------------------------------------
# prediction

def test_predict_argmax():
    m = init_mlp([2, 3], "tanh", "classification", seed=0)
    # bias trick: zero weights, bias picks the winner
    m.weights[0][:] = 0.0
    m.biases[0] = np.array([0.1, 0.7, 0.2])
    assert predict(m, np.zeros((1, 2)))[0] == 1


def test_predict_tie_breaks_low():
    m = init_mlp([2, 2], "tanh", "classification", seed=0)
    m.weights[0][:] = 0.0  # uniform output: exact tie
    assert predict(m, np.zeros((3, 2))).tolist() == [0, 0, 0]


def test_identity_regression_predicts_input():
    m = identity_model(3)
    x = np.array([[1.0, 2.0, 3.0], [-1.0, 0.0, 1.0]])
    assert np.allclose(predict(m, x), x)


# ---------------------------------------------------------------------------
# confusion matrix and metrics

def test_confusion_hand_count():
    cm = confusion_matrix([0, 1, 0, 0], [0, 1, 1, 0], 2)
    assert cm.tolist() == [[2, 1], [0, 1]]


def test_confusion_perfect_diagonal():
    cm = confusion_matrix([0, 1, 1, 2], [0, 1, 1, 2], 3)
    assert cm.tolist() == [[1, 0, 0], [0, 2, 0], [0, 0, 1]]


def test_confusion_empty_inputs():
    assert confusion_matrix([], [], 2).tolist() == [[0, 0], [0, 0]]


def test_confusion_label_out_of_range():
    with pytest.raises(LabelOutOfRange):
        confusion_matrix([0, 2], [0, 1], 2)


def test_confusion_totals():
    rng = np.random.default_rng(3)
    t = rng.integers(0, 4, 200)
    p = rng.integers(0, 4, 200)
    cm = confusion_matrix(t, p, 4)
    assert cm.sum() == 200
    for i in range(4):
        assert cm[i].sum() == (t == i).sum()


def test_metrics_hand_case():
    m = metrics(np.array([[2, 1], [0, 1]]))
    assert m["accuracy"] == pytest.approx(0.75)
    assert m["precision"][1] == pytest.approx(0.5)
    assert m["recall"][1] == pytest.approx(1.0)


def test_metrics_perfect():
    m = metrics(np.diag([3, 4, 5]))
    assert m["accuracy"] == 1.0
    assert m["precision"] == [1.0, 1.0, 1.0]
    assert m["recall"] == [1.0, 1.0, 1.0]


def test_metrics_undefined_is_none_not_zero():
    # class 1 never predicted -> precision undefined; never true -> recall undefined
    m = metrics(np.array([[4, 0], [0, 0]]))
    assert m["precision"][1] is None
    assert m["recall"][1] is None


def test_metrics_empty_matrix():
    with pytest.raises(EmptyMatrix):
        metrics(np.zeros((2, 2), dtype=int))


# ---------------------------------------------------------------------------
# estimator API

def blobs(n=200, seed=0):
    rng = np.random.default_rng(seed)
    half = n // 2
    x0 = rng.normal((-2, -2), 0.6, size=(half, 2))
    x1 = rng.normal((2, 2), 0.6, size=(n - half, 2))
    x = np.vstack([x0, x1])
    y = np.array([0] * half + [1] * (n - half))
    perm = rng.permutation(n)
    return x[perm], y[perm]


def test_classifier_learns_blobs():
    x, y = blobs()
    clf = MlpClassifier(hidden_layer_sizes=(8,), epochs=100, seed=0)
    clf.fit(x[:150], y[:150])
    assert clf.score(x[150:], y[150:]) >= 0.95


def test_classifier_predict_proba_rows():
    x, y = blobs(60)
    clf = MlpClassifier(epochs=30, seed=1).fit(x, y)
    proba = clf.predict_proba(x)
    assert proba.shape == (60, 2)
    assert np.allclose(proba.sum(axis=1), 1.0)


def test_classifier_get_set_params():
    clf = MlpClassifier(epochs=12, learning_rate=0.05)
    params = clf.get_params()
    assert params["epochs"] == 12
    clf.set_params(epochs=3)
    assert clf.epochs == 3


def test_classifier_maps_arbitrary_labels():
    x, y = blobs(80)
    labeled = np.where(y == 0, 10, 42)
    clf = MlpClassifier(epochs=60, seed=2).fit(x, labeled)
    assert set(np.unique(clf.predict(x))) <= {10, 42}


def test_regressor_fits_line():
    rng = np.random.default_rng(4)
    x = rng.uniform(-1, 1, size=(120, 1))
    y = 3.0 * x[:, 0] + 0.5
    reg = MlpRegressor(hidden_layer_sizes=(8,), learning_rate=0.05, epochs=300, seed=3)
    reg.fit(x, y)
    pred = reg.predict(x)
    assert np.mean((pred - y) ** 2) < 0.01


# ---------------------------------------------------------------------------
# CSV loading

CSV_OK = "a,b,label\n0.5,1.5,0\n1.0,2.0,1\n"


def test_load_csv_classification():
    ds = load_csv(CSV_OK)
    assert ds.features.shape == (2, 2)
    assert ds.labels.tolist() == [0, 1]
    assert ds.feature_names == ("a", "b")
    assert ds.n_classes == 2


def test_load_csv_rejects_non_numeric_feature():
    with pytest.raises(CsvFormatError) as exc:
        load_csv("a,b,label\nx,1.5,0\n1.0,2.0,1\n")
    assert "row 2" in str(exc.value)
    assert "'a'" in str(exc.value)


def test_load_csv_rejects_bad_label():
    with pytest.raises(CsvFormatError):
        load_csv("a,label\n1.0,zebra\n2.0,1\n")


def test_load_csv_requires_two_classes():
    with pytest.raises(CsvFormatError):
        load_csv("a,label\n1.0,0\n2.0,0\n")


def test_load_csv_regression():
    ds = load_csv("a,target\n1.0,0.5\n2.0,1.5\n", task="regression")
    assert ds.labels.tolist() == [0.5, 1.5]
