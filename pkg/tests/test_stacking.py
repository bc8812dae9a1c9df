import numpy as np
import pytest

from ecmirror.ensemble import (
    GbtHyperparams,
    MlpHyperparams,
    RegressionMetrics,
    StackingHyperparams,
    TrainingSample,
    evaluate,
    regression_metrics,
    ridge_fit,
    samples_to_arrays,
    scale_features,
    stack_fit,
    stack_predict,
)
from ecmirror.ensemble.stacking import base_predictions
from ecmirror.synth import SyntheticDatasetSpec, generate_dataset, split_dataset
from ecmirror.voltage import VOLT_MAX, VOLT_MIN

FAST = StackingHyperparams(
    gbt=GbtHyperparams(n_estimators=15),
    mlp=MlpHyperparams(hidden_layer_sizes=(12,), max_epochs=300, seed=0),
)


@pytest.fixture(scope="module")
def small_data():
    X, y = generate_dataset(SyntheticDatasetSpec(n_samples=240, seed=13))
    return split_dataset(X, y, 0.75)


@pytest.fixture(scope="module")
def fitted(small_data):
    (X_tr, y_tr), _ = small_data
    return stack_fit(X_tr, y_tr, FAST)


def test_duplicated_exact_base_learners_recover_labels():
    # both meta-feature columns equal the labels: coefficients split a sum of ~1
    rng = np.random.default_rng(0)
    y = rng.uniform(1.5, 3.7, 60)
    M = np.column_stack([y, y])
    meta = ridge_fit(M, y, alpha=1e-6)
    assert meta.coef.sum() == pytest.approx(1.0, abs=1e-4)
    pred = M @ meta.coef + meta.intercept
    assert np.max(np.abs(pred - y)) < 1e-4


def test_stacking_beats_or_matches_bases(small_data, fitted):
    from ecmirror.ensemble import gbt_predict, mlp_forward

    (X_tr, y_tr), (X_te, y_te) = small_data
    Z_te = scale_features(fitted, X_te)
    rmse_gbt = regression_metrics(y_te, gbt_predict(fitted.gbt, Z_te)).rmse
    rmse_mlp = regression_metrics(y_te, mlp_forward(fitted.mlp, Z_te)).rmse
    rmse_stack = evaluate(fitted, X_te, y_te).rmse
    assert rmse_stack <= min(rmse_gbt, rmse_mlp) + 0.02


def test_constant_contrast_still_fits():
    rng = np.random.default_rng(1)
    incident = rng.uniform(0, 5, 40)
    X = np.column_stack([incident, np.zeros(40)])
    y = np.clip(1.6 + 0.4 * incident, VOLT_MIN, VOLT_MAX)
    model = stack_fit(X, y, FAST)
    assert np.all(np.isfinite(stack_predict(model, X)))


def test_meta_identity_on_gbt(fitted, small_data):
    from dataclasses import replace

    from ecmirror.ensemble import gbt_predict

    (_, _), (X_te, _) = small_data
    meta = replace(fitted.meta, coef=np.array([1.0, 0.0]), intercept=0.0)
    model = replace(fitted, meta=meta)
    expected = np.clip(gbt_predict(fitted.gbt, scale_features(fitted, X_te)), VOLT_MIN, VOLT_MAX)
    assert np.allclose(stack_predict(model, X_te), expected)


def test_meta_constant_output(fitted):
    from dataclasses import replace

    meta = replace(fitted.meta, coef=np.zeros(2), intercept=2.5)
    model = replace(fitted, meta=meta)
    assert np.all(stack_predict(model, [[0.0, 0.0], [5.0, 5.0]]) == 2.5)


def test_clamping(fitted):
    from dataclasses import replace

    high = replace(fitted, meta=replace(fitted.meta, coef=np.zeros(2), intercept=5.0))
    low = replace(fitted, meta=replace(fitted.meta, coef=np.zeros(2), intercept=0.2))
    assert stack_predict(high, [[1.0, 1.0]])[0] == VOLT_MAX
    assert stack_predict(low, [[1.0, 1.0]])[0] == VOLT_MIN


def test_predictions_always_in_drive_range(fitted):
    rng = np.random.default_rng(2)
    X = rng.uniform(-10, 10, (300, 2))
    pred = stack_predict(fitted, X)
    assert np.all(pred >= VOLT_MIN) and np.all(pred <= VOLT_MAX)


def test_deterministic_given_seed(small_data):
    (X_tr, y_tr), (X_te, _) = small_data
    a = stack_predict(stack_fit(X_tr, y_tr, FAST), X_te)
    b = stack_predict(stack_fit(X_tr, y_tr, FAST), X_te)
    assert np.array_equal(a, b)


def test_scaling_equivariance(fitted, small_data):
    from dataclasses import replace

    (_, _), (X_te, _) = small_data
    identity = replace(
        fitted, feat_mean=np.zeros(2), feat_sd=np.ones(2)
    )
    pre_scaled = scale_features(fitted, X_te)
    assert np.array_equal(stack_predict(identity, pre_scaled), stack_predict(fitted, X_te))


def test_out_of_fold_mode(small_data):
    (X_tr, y_tr), (X_te, y_te) = small_data
    hp = StackingHyperparams(
        gbt=FAST.gbt, mlp=FAST.mlp, out_of_fold=True, n_folds=4
    )
    model = stack_fit(X_tr, y_tr, hp)
    metrics = evaluate(model, X_te, y_te)
    assert metrics.r2 is not None and metrics.r2 > 0.5


def test_needs_four_samples():
    with pytest.raises(ValueError):
        stack_fit(np.ones((3, 2)), [2.0, 2.0, 2.0])


class TestMetrics:
    def test_perfect(self):
        m = regression_metrics([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert m == RegressionMetrics(rmse=0.0, r2=1.0)

    def test_mean_prediction_zero_r2(self):
        y = np.array([1.0, 2.0, 3.0])
        m = regression_metrics(y, np.full(3, y.mean()))
        assert m.r2 == pytest.approx(0.0)

    def test_hand_case(self):
        m = regression_metrics([1.0, 2.0, 3.0], [1.0, 2.0, 4.0])
        assert m.rmse == pytest.approx(np.sqrt(1.0 / 3.0))
        assert m.r2 == pytest.approx(0.5)

    def test_zero_variance_flagged(self):
        m = regression_metrics([2.0, 2.0], [2.0, 2.1])
        assert m.r2 is None
        assert m.rmse > 0.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            regression_metrics([], [])


def test_training_sample_validation():
    TrainingSample(1.0, 0.5, 2.0)
    with pytest.raises(ValueError):
        TrainingSample(-0.1, 0.0, 2.0)
    with pytest.raises(ValueError):
        TrainingSample(1.0, 0.0, 4.0)
    X, y = samples_to_arrays([TrainingSample(1.0, 0.5, 2.0), TrainingSample(2.0, 1.0, 3.0)])
    assert X.shape == (2, 2) and y.tolist() == [2.0, 3.0]


def test_base_predictions_columns(fitted, small_data):
    from ecmirror.ensemble import gbt_predict, mlp_forward

    (_, _), (X_te, _) = small_data
    Z = scale_features(fitted, X_te)
    M = base_predictions(fitted.gbt, fitted.mlp, Z)
    assert np.array_equal(M[:, 0], gbt_predict(fitted.gbt, Z))
    assert np.array_equal(M[:, 1], mlp_forward(fitted.mlp, Z))
