import math

import numpy as np
import pytest

from phocqa import neural as nn


class TestDense:
    def test_identity(self):
        x = nn.Tensor([1.0, -2.0, 3.0])
        out = nn.dense_forward(x, nn.Tensor(np.eye(3)), nn.Tensor(np.zeros(3)))
        np.testing.assert_array_equal(out.values, x.values)

    def test_zero_weights_give_bias(self):
        out = nn.dense_forward(
            nn.Tensor([1.0, 2.0]), nn.Tensor(np.zeros((3, 2))), nn.Tensor([4.0, 5.0, 6.0])
        )
        np.testing.assert_array_equal(out.values, [4.0, 5.0, 6.0])

    def test_random_case_matches_manual(self, rng):
        W = rng.standard_normal((3, 4))
        x = rng.standard_normal(4)
        b = rng.standard_normal(3)
        out = nn.dense_forward(nn.Tensor(x), nn.Tensor(W), nn.Tensor(b))
        np.testing.assert_allclose(out.values, W @ x + b, atol=1e-15)

    def test_bias_gradient_is_upstream(self, rng):
        W = nn.Tensor(rng.standard_normal((3, 4)), requires_grad=True)
        b = nn.Tensor(rng.standard_normal(3), requires_grad=True)
        out = nn.dense_forward(nn.Tensor(rng.standard_normal(4)), W, b)
        loss = nn.tsum(nn.mul(out, nn.Tensor([1.0, 2.0, 3.0])))
        nn.backward(loss)
        np.testing.assert_allclose(b.grad, [1.0, 2.0, 3.0])


class TestLstmStep:
    def zero_params(self, d, h):
        return nn.LstmParams(
            W=nn.Tensor(np.zeros((4 * h, d + h)), requires_grad=True),
            b=nn.Tensor(np.zeros(4 * h), requires_grad=True),
            hidden=h,
        )

    def test_zero_weights_zero_output(self):
        p = self.zero_params(3, 2)
        h, c = nn.lstm_step(nn.Tensor(np.ones(3)), nn.Tensor(np.zeros(2)), nn.Tensor(np.zeros(2)), p)
        np.testing.assert_array_equal(h.values, 0.0)
        np.testing.assert_array_equal(c.values, 0.0)

    def test_scalar_oracle(self, rng):
        # independent per-gate computation with scalar math
        d, hidden = 2, 1
        p = nn.init_lstm(d, hidden, rng)
        x = rng.standard_normal(d)
        hp, cp = rng.standard_normal(1), rng.standard_normal(1)
        h, c = nn.lstm_step(nn.Tensor(x), nn.Tensor(hp), nn.Tensor(cp), p)
        xh = np.concatenate([x, hp])
        z = p.W.values @ xh + p.b.values
        sig = lambda v: 1.0 / (1.0 + math.exp(-v))
        i, f, o, g = sig(z[0]), sig(z[1]), sig(z[2]), math.tanh(z[3])
        c_ref = f * cp[0] + i * g
        h_ref = o * math.tanh(c_ref)
        assert c.values[0] == pytest.approx(c_ref, abs=1e-14)
        assert h.values[0] == pytest.approx(h_ref, abs=1e-14)

    def test_gradients(self, rng):
        p = nn.init_lstm(3, 2, rng)
        x = rng.standard_normal(3)
        params = {"W": p.W, "b": p.b}

        def loss_fn():
            h, c = nn.lstm_step(
                nn.Tensor(x), nn.Tensor(np.zeros(2)), nn.Tensor(np.zeros(2)), p
            )
            return nn.tsum(nn.mul(h, h))

        assert nn.finite_difference_check(loss_fn, params) <= 1e-4


class TestBlstm:
    def test_length_one(self, rng):
        p = nn.init_blstm(3, 2, rng)
        out = nn.blstm_forward([nn.Tensor(rng.standard_normal(3))], p)
        assert len(out) == 1
        assert out[0].values.shape == (4,)

    def test_reversal_consistency_bit_exact(self, rng):
        p = nn.init_blstm(3, 4, rng)
        seq = [nn.Tensor(rng.standard_normal(3)) for _ in range(6)]
        rev = list(reversed(seq))
        out = nn.blstm_forward(seq, p)
        out_rev = nn.blstm_forward(rev, p)
        # backward half on s == forward half of a mirrored-parameter run on
        # reversed s, reversed; here both halves come from the same machinery
        swapped = nn.BlstmParams(fwd=p.bwd, bwd=p.fwd)
        out_swapped = nn.blstm_forward(rev, swapped)
        for t in range(6):
            bwd_half = out[t].values[4:]
            fwd_half_rev = out_swapped[5 - t].values[:4]
            np.testing.assert_array_equal(bwd_half, fwd_half_rev)
        assert len(out_rev) == 6

    def test_gradients(self, rng):
        p = nn.init_blstm(2, 2, rng)
        xs = [rng.standard_normal(2) for _ in range(4)]
        params = {"fW": p.fwd.W, "fb": p.fwd.b, "bW": p.bwd.W, "bb": p.bwd.b}

        def loss_fn():
            out = nn.blstm_forward([nn.Tensor(x) for x in xs], p)
            return nn.tsum(nn.mul(nn.stack(out), nn.stack(out)))

        assert nn.finite_difference_check(loss_fn, params) <= 1e-4


class TestSoftmax:
    def test_symmetric_pair(self):
        np.testing.assert_allclose(nn.softmax(nn.Tensor([0.0, 0.0])).values, [0.5, 0.5])

    def test_constant_vector_uniform(self):
        np.testing.assert_allclose(nn.softmax(nn.Tensor([3.0, 3.0, 3.0])).values, np.full(3, 1 / 3))

    def test_shift_invariance(self, rng):
        z = rng.standard_normal(7)
        a = nn.softmax(nn.Tensor(z)).values
        b = nn.softmax(nn.Tensor(z + 123.456)).values
        np.testing.assert_allclose(a, b, atol=1e-12)
        assert np.argmax(a) == np.argmax(b)

    def test_sums_to_one(self, rng):
        for _ in range(20):
            p = nn.softmax(nn.Tensor(rng.standard_normal(9) * 10)).values
            assert abs(p.sum() - 1.0) < 1e-9
            assert (p > 0).all()

    def test_large_logits_stable(self):
        p = nn.softmax(nn.Tensor([1000.0, 999.0])).values
        assert np.isfinite(p).all()


class TestCrossEntropy:
    def test_certain_prediction(self):
        assert nn.cross_entropy(nn.Tensor([0.0, 1.0]), 1).values == pytest.approx(0.0)

    def test_uniform(self):
        n = 5
        assert nn.cross_entropy(nn.Tensor(np.full(n, 1 / n)), 2).values == pytest.approx(math.log(n))

    def test_quarter(self):
        assert nn.cross_entropy(nn.Tensor([0.25, 0.75]), 0).values == pytest.approx(math.log(4))

    def test_clamps_at_zero_probability(self):
        assert np.isfinite(nn.cross_entropy(nn.Tensor([0.0, 1.0]), 0).values)

    def test_softmax_xent_gradient(self):
        logits = nn.Tensor([0.0, 0.0], requires_grad=True)
        loss = nn.cross_entropy(nn.softmax(logits), 0)
        nn.backward(loss)
        np.testing.assert_allclose(logits.grad, [-0.5, 0.5], atol=1e-12)


class TestDropout:
    def test_rate_zero_identity(self, rng):
        x = nn.Tensor([1.0, 2.0])
        assert nn.dropout(x, 0.0, rng, training=True) is x

    def test_eval_mode_identity(self, rng):
        x = nn.Tensor([1.0, 2.0])
        assert nn.dropout(x, 0.5, rng, training=False) is x

    def test_survivor_fraction(self):
        rng = np.random.default_rng(3)
        x = nn.Tensor(np.ones(100_000))
        out = nn.dropout(x, 0.2, rng, training=True).values
        frac = np.count_nonzero(out) / out.size
        se = math.sqrt(0.2 * 0.8 / out.size)
        assert abs(frac - 0.8) < 3 * se
        # survivors are rescaled so the expectation is preserved
        np.testing.assert_allclose(out[out != 0], 1.0 / 0.8)

    def test_rejects_bad_rate(self, rng):
        with pytest.raises(ValueError):
            nn.dropout(nn.Tensor([1.0]), 1.0, rng, training=True)


class TestC2QAttention:
    def test_single_question_vector(self, rng):
        H = nn.Tensor(rng.standard_normal((4, 6)))
        u = rng.standard_normal((1, 6))
        out = nn.c2q_attention(H, nn.Tensor(u), nn.Tensor(rng.standard_normal(18)))
        np.testing.assert_allclose(out.values, np.repeat(u, 4, axis=0), atol=1e-12)

    def test_identical_question_vectors(self, rng):
        H = nn.Tensor(rng.standard_normal((3, 4)))
        u = rng.standard_normal(4)
        U = nn.Tensor(np.stack([u, u, u]))
        out = nn.c2q_attention(H, U, nn.Tensor(rng.standard_normal(12)))
        np.testing.assert_allclose(out.values, np.stack([u, u, u]), atol=1e-12)

    def test_matches_brute_force(self, rng):
        T, J, d = 3, 2, 4
        Hv = rng.standard_normal((T, d))
        Uv = rng.standard_normal((J, d))
        ws = rng.standard_normal(3 * d)
        out = nn.c2q_attention(nn.Tensor(Hv), nn.Tensor(Uv), nn.Tensor(ws)).values
        for t in range(T):
            scores = np.array(
                [ws @ np.concatenate([Hv[t], Uv[j], Hv[t] * Uv[j]]) for j in range(J)]
            )
            e = np.exp(scores - scores.max())
            a = e / e.sum()
            np.testing.assert_allclose(out[t], a @ Uv, atol=1e-12)

    def test_accepts_lists(self, rng):
        H = [nn.Tensor(rng.standard_normal(4)) for _ in range(2)]
        U = [nn.Tensor(rng.standard_normal(4))]
        out = nn.c2q_attention(H, U, nn.Tensor(rng.standard_normal(12)))
        assert out.values.shape == (2, 4)

    def test_gradients(self, rng):
        Hv = rng.standard_normal((3, 4))
        Uv = rng.standard_normal((2, 4))
        ws = nn.Tensor(rng.standard_normal(12), requires_grad=True)

        def loss_fn():
            out = nn.c2q_attention(nn.Tensor(Hv), nn.Tensor(Uv), ws)
            return nn.tsum(nn.mul(out, out))

        assert nn.finite_difference_check(loss_fn, {"ws": ws}) <= 1e-4


class TestAdadelta:
    def test_zero_gradient_no_change(self):
        p = nn.Tensor([1.0, 2.0], requires_grad=True)
        state = nn.AdadeltaState()
        state.eg2["p"] = np.array([4.0, 4.0])
        state.edx2["p"] = np.array([1.0, 1.0])
        nn.adadelta_step({"p": p}, state)
        np.testing.assert_array_equal(p.values, [1.0, 2.0])
        np.testing.assert_allclose(state.eg2["p"], [3.8, 3.8])  # decayed by rho

    def test_first_step_direction(self):
        p = nn.Tensor([1.0, 1.0], requires_grad=True)
        p.grad = np.array([0.5, -2.0])
        state = nn.AdadeltaState()
        before = p.values.copy()
        nn.adadelta_step({"p": p}, state)
        delta = p.values - before
        np.testing.assert_array_equal(np.sign(delta), [-1.0, 1.0])

    def test_repeated_gradient_accumulation(self):
        p = nn.Tensor([0.0], requires_grad=True)
        state = nn.AdadeltaState(lr=0.0)  # isolate the running averages
        prev = 0.0
        for _ in range(50):
            p.grad = np.array([2.0])
            nn.adadelta_step({"p": p}, state)
            assert state.eg2["p"][0] > prev
            prev = state.eg2["p"][0]
        assert state.eg2["p"][0] == pytest.approx(4.0, rel=0.1)

    def test_descends_quadratic(self):
        p = nn.Tensor([5.0], requires_grad=True)
        state = nn.AdadeltaState()
        for _ in range(3000):
            p.grad = 2.0 * p.values  # d/dx x^2
            nn.adadelta_step({"p": p}, state)
        assert abs(p.values[0]) < 0.5


class TestPerLayerGradients:
    """Central finite differences for each layer in isolation, 10 seeds."""

    @pytest.mark.parametrize("seed", range(10))
    def test_dense(self, seed):
        rng = np.random.default_rng(seed)
        W = nn.Tensor(rng.standard_normal((3, 4)), requires_grad=True)
        b = nn.Tensor(rng.standard_normal(3), requires_grad=True)
        x = rng.standard_normal(4)

        def loss_fn():
            out = nn.dense_forward(nn.Tensor(x), W, b)
            return nn.cross_entropy(nn.softmax(out), 1)

        assert nn.finite_difference_check(loss_fn, {"W": W, "b": b}) <= 1e-4

    @pytest.mark.parametrize("seed", range(10))
    def test_blstm_with_heads(self, seed):
        rng = np.random.default_rng(seed)
        p = nn.init_blstm(3, 3, rng)
        w = nn.Tensor(rng.standard_normal(6), requires_grad=True)
        xs = [rng.standard_normal(3) for _ in range(4)]
        params = {"fW": p.fwd.W, "fb": p.fwd.b, "bW": p.bwd.W, "bb": p.bwd.b, "w": w}

        def loss_fn():
            out = nn.stack(nn.blstm_forward([nn.Tensor(x) for x in xs], p))
            return nn.cross_entropy(nn.softmax(nn.matmul(out, w)), 2)

        assert nn.finite_difference_check(loss_fn, params) <= 1e-4

    @pytest.mark.parametrize("seed", range(10))
    def test_attention(self, seed):
        rng = np.random.default_rng(seed)
        Hv = rng.standard_normal((4, 4))
        Uv = rng.standard_normal((3, 4))
        ws = nn.Tensor(rng.standard_normal(12), requires_grad=True)
        w_out = nn.Tensor(rng.standard_normal(4), requires_grad=True)

        def loss_fn():
            att = nn.c2q_attention(nn.Tensor(Hv), nn.Tensor(Uv), ws)
            return nn.cross_entropy(nn.softmax(nn.matmul(att, w_out)), 0)

        assert nn.finite_difference_check(loss_fn, {"ws": ws, "w_out": w_out}) <= 1e-4
