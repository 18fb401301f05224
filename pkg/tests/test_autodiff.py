import numpy as np
import pytest

from parselab import autodiff as ad


def finite_diff(f, params, step=1e-5):
    """Central-difference gradient of scalar f() w.r.t. each tensor in params."""
    grads = []
    for p in params:
        g = np.zeros_like(p.data)
        flat = p.data.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = f()
            flat[i] = orig - step
            down = f()
            flat[i] = orig
            g.ravel()[i] = (up - down) / (2 * step)
        grads.append(g)
    return grads


def assert_close_to_fd(loss_fn, params, rel=1e-4):
    for p in params:
        p.grad = None
    loss = loss_fn()
    ad.backward(loss)
    numeric = finite_diff(lambda: float(loss_fn().data[0, 0]), params)
    for p, num in zip(params, numeric):
        denom = np.maximum(np.abs(num), 1e-8)
        err = np.max(np.abs(p.grad - num) / denom)
        assert err < rel, f"gradient mismatch: max rel err {err}"


def test_affine_identity():
    w = ad.tensor(np.eye(2))
    x = ad.tensor([3.0, 4.0])
    b = ad.tensor([0.0, 0.0])
    assert np.allclose(ad.affine(w, x, b).data.ravel(), [3.0, 4.0])


def test_affine_hand_computed():
    w = ad.tensor([[1.0, 2.0], [3.0, 4.0]])
    x = ad.tensor([1.0, 1.0])
    b = ad.tensor([0.5, 0.5])
    assert np.allclose(ad.affine(w, x, b).data.ravel(), [3.5, 7.5])


def test_affine_gradient_wrt_x_is_column_sums():
    w = ad.tensor([[1.0, 2.0], [3.0, 4.0]])
    x = ad.tensor([1.0, 1.0])
    b = ad.tensor([0.0, 0.0])
    ad.backward(ad.sum_all(ad.affine(w, x, b)))
    assert np.allclose(x.grad.ravel(), [4.0, 6.0])
    assert_close_to_fd(lambda: ad.sum_all(ad.affine(w, x, b)), [w, x, b])


def test_affine_shape_mismatch_mentions_both_shapes():
    w = ad.tensor(np.zeros((2, 3)))
    x = ad.tensor([1.0, 2.0])
    b = ad.tensor([0.0, 0.0])
    with pytest.raises(ValueError, match=r"\(2, 3\).*\(2, 1\)"):
        ad.affine(w, x, b)


def test_tanh_zero_vector():
    x = ad.tensor([0.0, 0.0, 0.0])
    assert np.allclose(ad.tanh_op(x).data, 0.0)


def test_tanh_derivative_at_zero_is_one():
    x = ad.tensor([0.0])
    ad.backward(ad.sum_all(ad.tanh_op(x)))
    assert np.allclose(x.grad, 1.0)


def test_concat():
    a = ad.tensor([1.0])
    b = ad.tensor([2.0, 3.0])
    assert np.allclose(ad.concat([a, b]).data.ravel(), [1.0, 2.0, 3.0])


def test_pointwise_and_structural_backward_match_fd():
    rng = np.random.default_rng(0)
    a = ad.tensor(rng.normal(size=4))
    b = ad.tensor(rng.normal(size=4))

    def loss():
        return ad.sum_all(ad.mul(ad.tanh_op(a), ad.sigmoid_op(b)))

    assert_close_to_fd(loss, [a, b])


def test_pick_and_scale_backward():
    x = ad.tensor([1.0, 2.0, 3.0])
    ad.backward(ad.scale(ad.pick(x, 1), 5.0))
    assert np.allclose(x.grad.ravel(), [0.0, 5.0, 0.0])


def test_lstm_step_zero_weights_gives_zero_h():
    store = ad.ParameterStore(seed=0)
    p = ad.LstmCellParams(store, "cell", 3, 2)
    for name in ("cell.Wi", "cell.Wf", "cell.Wo", "cell.Wg", "cell.bf"):
        store[name].data[...] = 0.0
    h = ad.zeros(2)
    c = ad.zeros(2)
    x = ad.tensor([1.0, -2.0, 0.5])
    h2, c2 = ad.lstm_step(p, (h, c), x)
    # all gates 0.5, candidate tanh(0)=0: c' = 0.5*c = 0, h' = 0.5*tanh(0) = 0
    assert np.allclose(h2.data, 0.0)
    assert np.allclose(c2.data, 0.0)

    c_nonzero = ad.tensor([0.4, -0.8])
    _, c3 = ad.lstm_step(p, (h, c_nonzero), x)
    assert np.allclose(c3.data.ravel(), [0.2, -0.4])


def test_lstm_step_output_bounded():
    store = ad.ParameterStore(seed=1)
    p = ad.LstmCellParams(store, "cell", 3, 4)
    rng = np.random.default_rng(2)
    h = ad.tensor(rng.normal(size=4))
    c = ad.tensor(rng.normal(size=4) * 3)
    x = ad.tensor(rng.normal(size=3) * 5)
    h2, _ = ad.lstm_step(p, (h, c), x)
    assert np.all(np.abs(h2.data) < 1.0)


def test_lstm_step_gradients_match_fd_for_every_gate():
    store = ad.ParameterStore(seed=3)
    p = ad.LstmCellParams(store, "cell", 3, 2)
    rng = np.random.default_rng(4)
    hv, cv, xv = rng.normal(size=2), rng.normal(size=2), rng.normal(size=3)

    holders = [ad.tensor(hv), ad.tensor(cv), ad.tensor(xv)]

    def loss():
        h, c, x = holders
        h2, c2 = ad.lstm_step(p, (h, c), x)
        return ad.sum_all(ad.add(h2, c2))

    gates = [store[n] for n in ("cell.Wi", "cell.bi", "cell.Wf", "cell.bf",
                                "cell.Wo", "cell.bo", "cell.Wg", "cell.bg")]
    assert_close_to_fd(loss, gates + holders, rel=1e-4)


def test_run_lstm_length_one_equals_single_step():
    store = ad.ParameterStore(seed=5)
    p = ad.LstmCellParams(store, "cell", 2, 3)
    x = ad.tensor([0.3, -0.7])
    out = ad.run_lstm(p, [x], "forward")
    h, _ = ad.lstm_step(p, (ad.zeros(3), ad.zeros(3)), x)
    assert len(out) == 1
    assert np.allclose(out[0].data, h.data)


def test_run_lstm_causality():
    store = ad.ParameterStore(seed=6)
    p = ad.LstmCellParams(store, "cell", 2, 3)
    rng = np.random.default_rng(7)
    base = [rng.normal(size=2) for _ in range(4)]

    fwd = ad.run_lstm(p, [ad.tensor(v) for v in base], "forward")
    bwd = ad.run_lstm(p, [ad.tensor(v) for v in base], "backward")

    perturbed = [v.copy() for v in base]
    perturbed[3] = perturbed[3] + 10.0
    fwd2 = ad.run_lstm(p, [ad.tensor(v) for v in perturbed], "forward")
    for i in range(3):
        assert np.allclose(fwd[i].data, fwd2[i].data)
    assert not np.allclose(fwd[3].data, fwd2[3].data)

    perturbed = [v.copy() for v in base]
    perturbed[0] = perturbed[0] + 10.0
    bwd2 = ad.run_lstm(p, [ad.tensor(v) for v in perturbed], "backward")
    for i in range(1, 4):
        assert np.allclose(bwd[i].data, bwd2[i].data)
    assert not np.allclose(bwd[0].data, bwd2[0].data)


def test_run_lstm_empty_sequence_rejected():
    store = ad.ParameterStore(seed=8)
    p = ad.LstmCellParams(store, "cell", 2, 3)
    with pytest.raises(ValueError):
        ad.run_lstm(p, [], "forward")


def test_bilstm_composite_gradients_match_fd():
    store = ad.ParameterStore(seed=9)
    fwd = ad.LstmCellParams(store, "f", 2, 3)
    bwd = ad.LstmCellParams(store, "b", 2, 3)
    w = store.add("W", 1, 6)
    bias = store.add("bias", 1, 1, init="zeros")
    rng = np.random.default_rng(10)
    xs_data = [rng.normal(size=2) for _ in range(3)]

    def loss():
        xs = [ad.tensor(v) for v in xs_data]
        f = ad.run_lstm(fwd, xs, "forward")
        b = ad.run_lstm(bwd, xs, "backward")
        score = ad.tanh_op(ad.affine(w, ad.concat([f[1], b[1]]), bias))
        return ad.sum_all(score)

    params = [store[n] for n in ("f.Wi", "f.Wg", "b.Wf", "b.Wo", "W", "bias")]
    assert_close_to_fd(loss, params)


def test_backward_on_parameter_itself():
    p = ad.tensor([[2.0]])
    ad.backward(p)
    assert np.allclose(p.grad, 1.0)


def test_backward_requires_scalar():
    with pytest.raises(ValueError):
        ad.backward(ad.tensor([1.0, 2.0]))


def test_backward_twice_doubles_gradient():
    w = ad.tensor([[1.0, 2.0], [3.0, 4.0]])
    x = ad.tensor([1.0, 1.0])
    b = ad.tensor([0.0, 0.0])
    loss = ad.sum_all(ad.affine(w, x, b))
    ad.backward(loss)
    first = x.grad.copy()
    ad.backward(loss)
    assert np.allclose(x.grad, 2 * first)


def test_adam_zero_gradient_leaves_parameters_unchanged():
    store = ad.ParameterStore(seed=11)
    p = store.add("p", 2, 2)
    before = p.data.copy()
    ad.adam_step(store)
    assert np.array_equal(p.data, before)


def test_adam_first_step_moves_by_lr():
    store = ad.ParameterStore(seed=12)
    p = store.add("p", 1, 1)
    start = float(p.data[0, 0])
    p.grad = np.array([[1.0]])
    ad.adam_step(store, lr=0.001)
    # bias-corrected m-hat = v-hat = 1 on the first step
    assert abs((start - float(p.data[0, 0])) - 0.001) < 1e-9
    assert p.grad is None


def test_adam_step_count_increments_once_per_call():
    store = ad.ParameterStore(seed=13)
    p = store.add("p", 1, 1)
    for expected in (1, 2, 3):
        p.grad = np.array([[0.5]])
        ad.adam_step(store)
        assert store.step_count("p") == expected


def test_parameter_store_init_deterministic():
    a = ad.ParameterStore(seed=42).add("w", 4, 5)
    b = ad.ParameterStore(seed=42).add("w", 4, 5)
    assert np.array_equal(a.data, b.data)


def test_duplicate_parameter_name_rejected():
    store = ad.ParameterStore(seed=0)
    store.add("w", 1, 1)
    with pytest.raises(ValueError):
        store.add("w", 1, 1)
