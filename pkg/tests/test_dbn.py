import numpy as np
import pytest

from edgefield.dbn import (
    ADAM_BETA1,
    ADAM_BETA2,
    ADAM_EPS,
    SELU_ALPHA,
    SELU_LAMBDA,
    DbnModel,
    EmptyDataset,
    InvalidSpec,
    Layer,
    RowDataset,
    ShapeMismatch,
    UntrainedModel,
    build_dbn,
    dataset_from_grid,
    fit_rows,
    forward,
    layer_plan,
    loss_and_grads,
    smooth_dbn,
    train,
)
from edgefield.grid import PixelGrid


def two_cluster_dataset(rng, n=200, width=2):
    half = n // 2
    xs = np.concatenate(
        [rng.normal(0.1, 0.02, (half, width)), rng.normal(0.9, 0.02, (half, width))]
    )
    ys = np.concatenate([np.zeros(half, dtype=int), np.ones(half, dtype=int)])
    return RowDataset(inputs=xs, labels=ys)


def two_tone_9():
    a = np.zeros((9, 9), dtype=np.uint8)
    a[:, 5:] = 255
    return PixelGrid(a)


class TestLayerPlan:
    def test_m2_widths(self):
        assert layer_plan(2, 2) == [
            (2, 2, "relu"),
            (2, 4, "selu"),
            (4, 8, "selu"),
            (8, 16, "selu"),
            (16, 32, "selu"),
            (32, 2, "softmax"),
        ]

    def test_m3_inserts_linear_adapter(self):
        plan = layer_plan(3, 2)
        assert plan[0] == (3, 3, "relu")
        assert plan[1] == (3, 2, "linear")
        assert plan[2:] == [
            (2, 4, "selu"),
            (4, 8, "selu"),
            (8, 16, "selu"),
            (16, 32, "selu"),
            (32, 64, "selu"),
            (64, 128, "selu"),
            (128, 2, "softmax"),
        ]

    def test_hidden_widths_cap_at_2_to_2m_plus_1(self):
        for m in (2, 3, 4):
            widths = [fan_out for _, fan_out, act in layer_plan(m, 2) if act == "selu"]
            assert widths[-1] == 2 ** (2 * m + 1)

    def test_class_count_sets_head(self):
        assert layer_plan(2, 5)[-1] == (32, 5, "softmax")

    def test_invalid_spec(self):
        with pytest.raises(InvalidSpec):
            layer_plan(1, 2)
        with pytest.raises(InvalidSpec):
            build_dbn(2, 1)


class TestBuild:
    def test_layer_shapes_follow_plan(self):
        model = build_dbn(2, 2, seed=0)
        assert [(L.w.shape[0], L.w.shape[1], L.activation) for L in model.layers] == layer_plan(2, 2)
        assert all((L.b == 0).all() for L in model.layers)
        assert model.trained is False
        assert model.class_reps is None
        assert model.loss_trace == []

    def test_scaled_normal_init(self):
        # biggest fan-in gives enough weights for a stable std estimate
        model = build_dbn(3, 2, seed=0)
        L = next(L for L in model.layers if L.w.shape == (64, 128))
        assert L.w.std() == pytest.approx(np.sqrt(2 / 64), rel=0.05)
        assert abs(L.w.mean()) < 0.01

    def test_deterministic(self):
        a = build_dbn(2, 2, seed=9)
        b = build_dbn(2, 2, seed=9)
        assert all(np.array_equal(x.w, y.w) for x, y in zip(a.layers, b.layers))
        c = build_dbn(2, 2, seed=10)
        assert not all(np.array_equal(x.w, y.w) for x, y in zip(a.layers, c.layers))


class TestForward:
    def test_rows_sum_to_one(self):
        model = build_dbn(2, 2, seed=1)
        out = forward(model, np.random.default_rng(0).random((17, 2)))
        assert out.shape == (17, 2)
        assert np.allclose(out.sum(axis=1), 1.0)
        assert (out > 0).all()

    def test_zero_weights_give_uniform(self):
        model = build_dbn(2, 3, seed=0)
        for L in model.layers:
            L.w[:] = 0
        out = forward(model, np.array([[0.3, 0.9], [0.1, 0.2]]))
        assert np.array_equal(out, np.full((2, 3), 1 / 3))

    def test_hand_computed_two_layer_oracle(self):
        l1 = Layer(
            w=np.array([[1.0, -1.0], [0.5, 2.0]]),
            b=np.array([0.1, -0.2]),
            activation="relu",
        )
        l2 = Layer(w=np.array([[1.0, 0.0], [0.0, 2.0]]), b=np.zeros(2), activation="softmax")
        model = DbnModel(m=2, n_classes=2, layers=[l1, l2])
        x = np.array([[0.3, 0.6]])
        hidden = np.maximum(x @ l1.w + l1.b, 0)  # [0.7, 0.7]
        logits = hidden @ l2.w
        want = np.exp(logits) / np.exp(logits).sum()
        assert np.abs(forward(model, x) - want).max() < 1e-9

    def test_selu_constants(self):
        assert SELU_ALPHA == pytest.approx(1.6732632423543772)
        assert SELU_LAMBDA == pytest.approx(1.0507009873554805)
        assert (ADAM_BETA1, ADAM_BETA2, ADAM_EPS) == (0.9, 0.999, 1e-8)

    def test_width_mismatch(self):
        model = build_dbn(2, 2, seed=0)
        with pytest.raises(ShapeMismatch):
            forward(model, np.zeros((4, 3)))


class TestGradients:
    def test_matches_central_differences(self):
        model = build_dbn(2, 2, seed=3)
        rng = np.random.default_rng(5)
        batch = rng.random((8, 2))
        labels = rng.integers(0, 2, 8)
        _, grads = loss_and_grads(model, batch, labels)
        eps = 1e-6
        worst = 0.0
        for li, (gw, gb) in enumerate(grads):
            layer = model.layers[li]
            for arr, g in ((layer.w, gw), (layer.b, gb)):
                it = np.nditer(arr, flags=["multi_index"])
                for _ in range(min(arr.size, 6)):
                    idx = it.multi_index
                    keep = arr[idx]
                    arr[idx] = keep + eps
                    up, _ = loss_and_grads(model, batch, labels)
                    arr[idx] = keep - eps
                    down, _ = loss_and_grads(model, batch, labels)
                    arr[idx] = keep
                    fd = (up - down) / (2 * eps)
                    denom = max(abs(fd), abs(g[idx]), 1e-12)
                    worst = max(worst, abs(fd - g[idx]) / denom)
                    it.iternext()
        assert worst < 1e-4


class TestTrain:
    def test_two_cluster_loss_collapses(self):
        ds = two_cluster_dataset(np.random.default_rng(0))
        model = build_dbn(2, 2, seed=1)
        trace = train(model, ds, epochs=200, lr=1e-3, batch_size=32, seed=1)
        assert len(trace) == 200
        assert trace[-1] * 10 <= trace[0]
        assert model.trained is True
        assert model.loss_trace == trace
        assert model.class_reps is not None and len(model.class_reps) == 2

    def test_final_under_initial_for_every_seed(self):
        # per-epoch traces jitter with minibatching; the end-to-end drop must
        # still be there for all seeds
        for seed in range(20):
            rng = np.random.default_rng(seed)
            ds = two_cluster_dataset(rng, n=100)
            model = build_dbn(2, 2, seed=seed)
            trace = train(model, ds, epochs=60, lr=1e-3, batch_size=16, seed=seed)
            assert trace[-1] < trace[0]

    def test_lr_zero_freezes_loss(self):
        rng = np.random.default_rng(0)
        ds = two_cluster_dataset(rng, n=40)
        model = build_dbn(2, 2, seed=1)
        trace = train(model, ds, epochs=20, lr=0.0, batch_size=8, seed=1)
        assert max(trace) - min(trace) < 1e-12

    def test_deterministic(self):
        def run():
            ds = two_cluster_dataset(np.random.default_rng(3), n=60)
            model = build_dbn(2, 2, seed=4)
            return train(model, ds, epochs=30, lr=1e-3, batch_size=16, seed=4)

        assert run() == run()

    def test_empty_dataset(self):
        model = build_dbn(2, 2, seed=0)
        with pytest.raises(EmptyDataset):
            train(model, RowDataset(inputs=np.zeros((0, 2)), labels=np.zeros(0, dtype=int)))


class TestDatasetFromGrid:
    def test_window_rows_scaled_to_unit(self):
        g = PixelGrid(np.array([[0, 128, 255], [0, 128, 255], [0, 0, 0]], dtype=np.uint8))
        ds = dataset_from_grid(g, 2)
        assert ds.inputs.shape == (3, 3)  # one 3x3 window contributes its rows
        assert np.allclose(ds.inputs[0], [0.0, 128 / 255, 1.0])

    def test_two_tone_labels_split(self):
        ds = dataset_from_grid(two_tone_9(), 2)
        assert ds.inputs.shape == (48, 3)  # 16 windows x 3 rows
        assert set(ds.labels.tolist()) == {0, 1}
        # dark-side window rows label 0, bright-side label 1
        assert ds.labels[:6].tolist() == [0] * 6
        assert ds.labels[6:12].tolist() == [1] * 6

    def test_constant_grid_single_class(self):
        ds = dataset_from_grid(PixelGrid(np.full((5, 5), 77, dtype=np.uint8)), 2)
        assert (ds.labels == 0).all()


class TestFitRows:
    def test_truncates(self):
        assert fit_rows(np.array([[1.0, 2.0, 3.0]]), 2).tolist() == [[1.0, 2.0]]

    def test_pads_with_zeros(self):
        assert fit_rows(np.array([[1.0, 2.0]]), 4).tolist() == [[1.0, 2.0, 0.0, 0.0]]

    def test_identity_width(self):
        a = np.array([[1.0, 2.0]])
        assert np.array_equal(fit_rows(a, 2), a)


class TestSmoothDbn:
    def _trained_two_tone(self):
        g = two_tone_9()
        model = build_dbn(3, 2, seed=0)
        train(model, dataset_from_grid(g, 2), epochs=150, lr=1e-3, batch_size=8, seed=0)
        return g, model

    def test_requires_training(self):
        g = PixelGrid(np.full((3, 3), 50, dtype=np.uint8))
        with pytest.raises(UntrainedModel):
            smooth_dbn(g, build_dbn(2, 2, seed=0), 2, 50)

    def test_constant_grid_unchanged(self):
        g = PixelGrid(np.full((9, 9), 130, dtype=np.uint8))
        model = build_dbn(3, 2, seed=0)
        train(model, dataset_from_grid(g, 2), epochs=50, lr=1e-3, batch_size=8, seed=0)
        assert smooth_dbn(g, model, 2, 256) == g

    def test_narrow_epsilon_identity(self):
        g, model = self._trained_two_tone()
        assert smooth_dbn(g, model, 2, 1) == g

    def test_substitutes_class_representatives(self):
        g, model = self._trained_two_tone()
        reps = np.asarray(model.class_reps)
        assert reps[0] == pytest.approx(0.0)
        out = smooth_dbn(g, model, 2, 60)
        # dark half predicted class 0 (rep 0) stays; bright half moves to the
        # rounded class-1 representative when within epsilon
        assert (out.values[:, :5] == 0).all()
        bright = np.rint(reps[1])
        assert (out.values[:, 5:] == bright).all()
        assert abs(255 - reps[1]) < 60
