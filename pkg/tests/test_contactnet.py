import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from latticetact import contactnet as net
from latticetact.errors import InvalidInputError, ModelFormatError, TrainingError
from latticetact.model import CharacterizationData, ContactSpec, LatticeParams, synth_contact_pressures

SMALL = (7, 8, 8, 12)


def small_data(rng, n=40):
    p = rng.normal(size=(n, 7)) * 30
    return CharacterizationData(
        np.zeros(n, dtype=int), rng.integers(0, 5, n), rng.integers(0, 6, n), rng.uniform(0, 5, n), p
    )


def test_default_architecture_param_count():
    model = net.init_model(rng=np.random.default_rng(0))
    assert model.layer_sizes == [7, 128, 128, 12]
    assert model.n_params == 7 * 128 + 128 + 128 * 128 + 128 + 128 * 12 + 12 == 19084


def test_zero_model_uniform():
    model = net.init_model(zero=True)
    pa, pr, f = net.forward(model, np.arange(7.0))
    assert np.allclose(pa, 0.2) and np.allclose(pr, 1 / 6) and f == 0.0


def test_batch_matches_single(rng):
    model = net.init_model(rng=rng)
    x = rng.normal(size=(16, 7)) * 20
    pa, pr, f = net.forward(model, x)
    for i in range(16):
        a, r, g = net.forward(model, x[i])
        assert np.allclose(a, pa[i], rtol=1e-12, atol=1e-15)
        assert np.allclose(r, pr[i], rtol=1e-12, atol=1e-15)
        assert g == pytest.approx(f[i], rel=1e-12, abs=1e-12)


def test_forward_rejects_bad_input():
    model = net.init_model(zero=True)
    with pytest.raises(InvalidInputError):
        net.forward(model, [0.0] * 6)
    with pytest.raises(InvalidInputError):
        net.forward(model, [math.nan] + [0.0] * 6)


@given(arrays(np.float64, (5, 7), elements=st.floats(-1e6, 1e6)))
@settings(max_examples=100, deadline=None)
def test_softmax_heads_sum_to_one(x):
    model = net.init_model(SMALL, rng=np.random.default_rng(1))
    pa, pr, _ = net.forward(model, x)
    assert np.allclose(pa.sum(axis=1), 1.0, atol=1e-9)
    assert np.allclose(pr.sum(axis=1), 1.0, atol=1e-9)


def test_loss_examples():
    perfect = (np.eye(5)[[2]], np.eye(6)[[4]], np.array([1.5]))
    assert net.loss(perfect, 2, 4, 1.5) == pytest.approx(0.0, abs=1e-12)
    uniform = (np.full((1, 5), 0.2), np.full((1, 6), 1 / 6), np.array([0.0]))
    assert net.loss(uniform, 0, 0, 0.0) == pytest.approx(math.log(5) + math.log(6))
    assert net.loss(uniform, 0, 0, 0.0) == pytest.approx(3.401, abs=1e-3)
    assert net.loss(perfect, 2, 4, 2.5) == pytest.approx(1.0)


def test_grad_check_small_model(rng):
    model = net.init_model(SMALL, rng=rng)
    model.in_mean = rng.normal(size=7)
    model.in_std = rng.uniform(0.5, 2.0, 7)
    p = rng.normal(size=(4, 7))
    err = net.grad_check(model, p, rng.integers(0, 5, 4), rng.integers(0, 6, 4), rng.uniform(0, 5, 4))
    assert err < 1e-4


def test_grad_check_single_sample(rng):
    model = net.init_model(SMALL, rng=rng)
    assert net.grad_check(model, rng.normal(size=7), 3, 1, 2.0) < 1e-4


def test_zero_input_zero_weights_hidden_grads_vanish():
    model = net.init_model(SMALL, zero=True)
    _, gw, gb = net.gradients(model, np.zeros(7), 1, 2, 3.0)
    for g in gw[:-1] + gb[:-1]:
        assert np.all(g == 0.0)
    # the output bias still receives the label error
    assert np.any(gb[-1] != 0.0)


def test_linear_single_layer_matches_closed_form(rng):
    model = net.init_model((7, 12), rng=rng, activation="linear")
    n = 30
    x = rng.normal(size=(n, 7))
    a = rng.integers(0, 5, n)
    r = rng.integers(0, 6, n)
    y = rng.uniform(0, 5, n)
    _, gw, gb = net.gradients(model, x, a, r, y)
    w, b = model.weights[0], model.biases[0]
    z = x @ w + b
    # force column: ordinary least-squares gradient 2/n X^T (X w + b - y)
    resid = z[:, -1] - y
    assert np.allclose(gw[0][:, -1], 2.0 / n * x.T @ resid, atol=1e-12)
    assert gb[0][-1] == pytest.approx(2.0 / n * resid.sum())
    # classification columns: multinomial logistic regression X^T (P - Y) / n
    pa = net.softmax(z[:, :5])
    assert np.allclose(gw[0][:, :5], x.T @ (pa - np.eye(5)[a]) / n, atol=1e-12)
    pr = net.softmax(z[:, 5:11])
    assert np.allclose(gw[0][:, 5:11], x.T @ (pr - np.eye(6)[r]) / n, atol=1e-12)


def test_linear_deep_model_grad_check(rng):
    model = net.init_model(SMALL, rng=rng, activation="linear")
    assert net.grad_check(model, rng.normal(size=(3, 7)), [0, 1, 2], [3, 4, 5], [1.0, 2.0, 3.0]) < 1e-4


def test_memorization():
    p = np.array([[3.0, -1.0, 2.0, 0.5, -2.0, 1.0, 4.0]] * 64)
    data = CharacterizationData(np.zeros(64, int), np.full(64, 3), np.full(64, 5), np.full(64, 2.5), p)
    result = net.train(data, net.TrainConfig(epochs=200, batch_size=8, learning_rate=0.05, hidden=(16, 16), seed=3))
    losses = [h[1] for h in result.history]
    assert losses[-1] < 1e-2 and losses[-1] < losses[0] / 100
    m = net.evaluate(result.model, data)
    assert m.axial_acc == 1.0 and m.radial_acc == 1.0
    assert m.force_mae < 0.05


def test_loss_non_increasing_on_noiseless_task(rng):
    params = LatticeParams(noise_sigma=0.0)
    specs = [ContactSpec(a, r, f) for a in range(5) for r in range(6) for f in (1.0, 3.0)]
    p = np.array([synth_contact_pressures(params, s) for s in specs])
    data = CharacterizationData(
        np.zeros(len(specs), int), np.array([s.axial_pos for s in specs]),
        np.array([s.radial_angle for s in specs]), np.array([s.force for s in specs]), p,
    )
    config = net.TrainConfig(epochs=100, batch_size=len(specs), learning_rate=0.005, momentum=0.0, hidden=(32, 32))
    losses = [h[1] for h in net.train(data, config).history]
    assert np.all(np.diff(losses) <= 1e-12)


def test_training_deterministic(rng):
    data = small_data(rng)
    config = net.TrainConfig(epochs=5, hidden=(8, 8), seed=11)
    a = net.train(data, config).model
    b = net.train(data, config).model
    for wa, wb in zip(a.params(), b.params()):
        assert np.array_equal(wa, wb)


def test_divergence_raises_with_epoch(rng):
    data = small_data(rng)
    data.force[:] = 1e200
    with pytest.raises(TrainingError) as info:
        net.train(data, net.TrainConfig(epochs=3, hidden=(8, 8)))
    assert info.value.epoch == 1


def test_train_rejects_empty():
    empty = CharacterizationData(np.empty(0, int), np.empty(0, int), np.empty(0, int), np.empty(0), np.empty((0, 7)))
    with pytest.raises(InvalidInputError):
        net.train(empty, net.TrainConfig(epochs=1))


@pytest.mark.parametrize("kw", [{"learning_rate": 0}, {"epochs": 0}, {"batch_size": -1}, {"momentum": 1.0}])
def test_train_config_validation(kw):
    with pytest.raises(InvalidInputError):
        net.TrainConfig(**kw)


def test_split_by_trial(params):
    data = CharacterizationData(np.repeat([0, 1, 2], 4), np.zeros(12, int), np.zeros(12, int), np.ones(12), np.zeros((12, 7)))
    train, test = net.split_by_trial(data)
    assert set(train.trial) == {0, 1} and set(test.trial) == {2}
    with pytest.raises(InvalidInputError):
        net.split_by_trial(test)


def test_serialization_roundtrip(tmp_path, rng):
    model = net.init_model(rng=rng)
    model.in_mean = rng.normal(size=7)
    model.in_std = rng.uniform(1, 2, 7)
    path = tmp_path / "m.mlp"
    net.save(model, path)
    blob = path.read_bytes()
    assert blob[:4] == b"MLP1"
    assert len(blob) == 4 + 4 + 4 * 4 + 8 * (7 + 7 + model.n_params) + 4
    back = net.load(path)
    for a, b in zip(model.params(), back.params()):
        assert np.array_equal(a, b)
    assert np.array_equal(back.in_std, model.in_std)


def test_serialization_corruption_detected(rng):
    blob = bytearray(net.dumps(net.init_model(SMALL, rng=rng)))
    for pos in (0, 10, len(blob) // 2, len(blob) - 1):
        bad = bytearray(blob)
        bad[pos] ^= 0x40
        with pytest.raises(ModelFormatError):
            net.loads(bad)
    with pytest.raises(ModelFormatError):
        net.loads(blob[:-9])


def test_latency_bench(rng):
    model = net.init_model(rng=rng)
    mean, std = net.latency_bench(model, 300, rng=rng)
    assert 0 < mean < 5e-3
    assert std > 0
    with pytest.raises(InvalidInputError):
        net.latency_bench(model, 0)


def test_history_csv(tmp_path, rng):
    data = small_data(rng)
    result = net.train(data, net.TrainConfig(epochs=3, hidden=(8, 8)), test_data=data)
    path = tmp_path / "h.csv"
    net.write_history(path, result.history)
    lines = path.read_text().splitlines()
    assert lines[0] == "epoch,loss,axial_acc,radial_acc,force_mae"
    assert len(lines) == 4


# -- trained-model checks (shared session fixture) --------------------------


def test_trained_noiseless_sample(params, trained):
    result = trained[0]
    clean = synth_contact_pressures(params, ContactSpec(0, 0, 3.0))
    a, r, f = net.predict(result.model, clean)
    assert (int(a), int(r)) == (0, 0)
    assert abs(float(f) - 3.0) < 0.16


def test_permuted_channels_break_radial(trained):
    result, _, test = trained
    shifted = test.pressures.copy()
    shifted[:, :6] = np.roll(shifted[:, :6], 1, axis=1)
    perm = CharacterizationData(test.trial, test.axial, test.radial, test.force, shifted)
    assert net.evaluate(result.model, perm).radial_acc < 0.3
    # the shift is a 60 degree rotation, so the prediction moves by one class
    _, r, _ = net.predict(result.model, shifted)
    assert np.mean(r == (test.radial + 1) % 6) > 0.9
