"""Model blocks: shapes, attention arithmetic, finite-difference oracles."""
import math

import numpy as np
import pytest
import torch

from mda_predictor import (CrossModeSelfAttention, CrossSideFusion,
                           InvalidInputError, MdaPredictor, PredictorConfig,
                           ShapeError, TcnDecoder, TcnEncoder,
                           autoregressive_restore)

torch.manual_seed(0)


def finite_difference(probe, tensor, index, eps=1e-6):
    """Central difference of a scalar probe along one tensor entry."""
    with torch.no_grad():
        original = float(tensor.view(-1)[index])
        tensor.view(-1)[index] = original + eps
        upper = float(probe())
        tensor.view(-1)[index] = original - eps
        lower = float(probe())
        tensor.view(-1)[index] = original
    return (upper - lower) / (2.0 * eps)


def check_parameter_gradients(module, make_probe, n_entries=3, seed=0):
    """Autodiff vs central differences on randomly drawn parameter entries.

    Entries whose analytic gradient is essentially zero are redrawn; a dead
    ReLU path would compare noise against noise.
    """
    out = make_probe()
    out.backward()
    params = [p for p in module.parameters() if p.requires_grad]
    rng = np.random.default_rng(seed)
    checked = 0
    attempts = 0
    while checked < n_entries:
        attempts += 1
        assert attempts < 200, "could not find live parameter entries"
        param = params[int(rng.integers(len(params)))]
        index = int(rng.integers(param.numel()))
        analytic = float(param.grad.view(-1)[index])
        if abs(analytic) < 1e-8:
            continue
        numeric = finite_difference(make_probe, param.data, index)
        rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric))
        assert rel <= 1e-4, (f"gradient mismatch at entry {index}: "
                             f"autodiff {analytic!r} vs fd {numeric!r}")
        checked += 1


def scalar_probe(module, *inputs):
    """Deterministic scalar functional of the module output."""
    out = module(*inputs)
    weights = torch.arange(1.0, out.numel() + 1.0, dtype=torch.float64)
    return (out.reshape(-1) * weights / out.numel()).sum()


class TestEncoder:
    def test_zero_input_is_batch_constant(self):
        encoder = TcnEncoder(d=8).double()
        latents = encoder(torch.zeros(3, 2, 16, dtype=torch.float64))
        assert latents.shape == (3, 2, 8)
        assert torch.equal(latents[0], latents[1])
        assert torch.equal(latents[1], latents[2])
        assert torch.equal(latents[0, 0], latents[0, 1])

    def test_identical_windows_identical_latents(self):
        encoder = TcnEncoder(d=8).double()
        window = torch.randn(1, 3, 20, dtype=torch.float64)
        stacked = torch.cat([window, window], dim=0)
        latents = encoder(stacked)
        assert torch.equal(latents[0], latents[1])

    def test_rejects_flat_input(self):
        with pytest.raises(ShapeError, match="batch, modes, window"):
            TcnEncoder(d=8)(torch.zeros(4, 16))

    def test_input_gradient_matches_finite_difference(self):
        encoder = TcnEncoder(d=6).double()
        window = torch.randn(1, 1, 12, dtype=torch.float64, requires_grad=True)
        probe = lambda: scalar_probe(encoder, window)
        probe().backward()
        analytic = float(window.grad[0, 0, 5])
        numeric = finite_difference(probe, window.data, 5)
        assert abs(analytic - numeric) / max(abs(analytic), 1e-10) <= 1e-4


class TestCrossModeSelfAttention:
    def test_rows_sum_to_one(self):
        block = CrossModeSelfAttention(d=8, heads=2, k=3).double()
        x = torch.randn(4, 3, 8, dtype=torch.float64)
        _, weights = block(x, return_weights=True)
        assert weights.shape == (4, 2, 3, 3)
        assert torch.all(torch.abs(weights.sum(dim=-1) - 1.0) < 1e-6)

    def test_single_mode_weight_is_exactly_one(self):
        block = CrossModeSelfAttention(d=4, heads=2, k=1).double()
        x = torch.randn(2, 1, 4, dtype=torch.float64)
        _, weights = block(x, return_weights=True)
        assert torch.equal(weights, torch.ones_like(weights))

    def test_single_mode_output_is_residual_ff_path(self):
        block = CrossModeSelfAttention(d=4, heads=1, k=1).double()
        x = torch.randn(2, 1, 4, dtype=torch.float64)
        out = block(x)
        tokens = x + block.mode_embeddings
        attn = block.wo(block.wv(tokens))
        y = block.norm_attn(x + attn)
        expected = block.norm_ff(y + block.ff(y))
        assert torch.allclose(out, expected, atol=1e-12, rtol=0)

    def test_two_token_case_matches_manual_arithmetic(self):
        """Independent numpy reimplementation of the whole block at d=2."""
        block = CrossModeSelfAttention(d=2, heads=1, k=2,
                                       use_embeddings=False).double()
        assigned = {
            "wq.weight": [[0.5, -0.25], [1.0, 0.75]],
            "wk.weight": [[0.2, 0.4], [-0.6, 0.1]],
            "wv.weight": [[1.0, 0.0], [0.5, -1.0]],
            "wo.weight": [[0.3, -0.2], [0.8, 0.6]],
            "ff.0.weight": [[0.1, 0.2], [-0.3, 0.4], [0.5, -0.6], [0.7, 0.8],
                            [-0.1, 0.9], [0.2, -0.7], [0.4, 0.3], [-0.5, 0.6]],
            "ff.0.bias": [0.05, -0.05, 0.1, 0.0, 0.2, -0.1, 0.0, 0.15],
            "ff.2.weight": [[0.25, -0.35, 0.15, 0.45, -0.05, 0.3, -0.2, 0.1],
                            [0.6, 0.2, -0.4, 0.05, 0.35, -0.15, 0.5, -0.3]],
            "ff.2.bias": [0.02, -0.03],
        }
        state = block.state_dict()
        for name, value in assigned.items():
            state[name] = torch.tensor(value, dtype=torch.float64)
        block.load_state_dict(state)
        x = torch.tensor([[[1.0, 2.0], [3.0, -1.0]]], dtype=torch.float64)
        out = block(x)

        def layer_norm(v, eps=1e-5):
            mean = v.mean(axis=-1, keepdims=True)
            var = v.var(axis=-1, keepdims=True)  # biased, as torch uses
            return (v - mean) / np.sqrt(var + eps)

        xn = np.array([[1.0, 2.0], [3.0, -1.0]])
        wq = np.array(assigned["wq.weight"])
        q = xn @ wq.T
        k = xn @ np.array(assigned["wk.weight"]).T
        v = xn @ np.array(assigned["wv.weight"]).T
        scores = q @ k.T / math.sqrt(2.0)
        expw = np.exp(scores - scores.max(axis=1, keepdims=True))
        attn_w = expw / expw.sum(axis=1, keepdims=True)
        context = attn_w @ v
        y = layer_norm(xn + context @ np.array(assigned["wo.weight"]).T)
        hidden = np.maximum(y @ np.array(assigned["ff.0.weight"]).T
                            + np.array(assigned["ff.0.bias"]), 0.0)
        ff = hidden @ np.array(assigned["ff.2.weight"]).T \
            + np.array(assigned["ff.2.bias"])
        expected = layer_norm(y + ff)
        assert np.max(np.abs(out[0].detach().numpy() - expected)) <= 1e-6

    def test_embedding_toggle(self):
        torch.manual_seed(3)
        with_emb = CrossModeSelfAttention(d=4, heads=1, k=2,
                                          use_embeddings=True).double()
        x = torch.randn(1, 2, 4, dtype=torch.float64)
        before = with_emb(x)
        with torch.no_grad():
            with_emb.mode_embeddings += 1.0
        assert not torch.allclose(with_emb(x), before)
        without = CrossModeSelfAttention(d=4, heads=1, k=2,
                                         use_embeddings=False).double()
        reference = without(x)
        with torch.no_grad():
            without.mode_embeddings += 1.0
        assert torch.equal(without(x), reference)

    def test_wrong_mode_count(self):
        block = CrossModeSelfAttention(d=4, heads=1, k=3)
        with pytest.raises(ShapeError, match="3 modes"):
            block(torch.zeros(1, 2, 4))


class TestCrossSideFusion:
    def test_rows_sum_to_one(self):
        block = CrossSideFusion(d=8, heads=2).double()
        own = torch.randn(3, 4, 8, dtype=torch.float64)
        other = torch.randn(3, 4, 8, dtype=torch.float64)
        _, weights = block(own, other, return_weights=True)
        assert torch.all(torch.abs(weights.sum(dim=-1) - 1.0) < 1e-6)

    def test_zero_other_reduces_to_coupling_path(self):
        block = CrossSideFusion(d=6, heads=2).double()
        own = torch.randn(2, 3, 6, dtype=torch.float64)
        out = block(own, torch.zeros_like(own))
        y = block.norm_fuse(block.coupling(own))
        expected = block.norm_ff(y + block.ff(y))
        assert torch.allclose(out, expected, atol=1e-12, rtol=0)

    def test_roles_are_asymmetric(self):
        block = CrossSideFusion(d=6, heads=1).double()
        a = torch.randn(1, 2, 6, dtype=torch.float64)
        b = torch.randn(1, 2, 6, dtype=torch.float64)
        assert not torch.allclose(block(a, b), block(b, a))

    def test_gradient_reaches_own_side_under_saturated_attention(self):
        block = CrossSideFusion(d=8, heads=1).double()
        own = (200.0 * torch.randn(1, 3, 8, dtype=torch.float64)
               ).requires_grad_(True)
        other = 200.0 * torch.randn(1, 3, 8, dtype=torch.float64)
        with torch.no_grad():
            _, weights = block(own, other, return_weights=True)
        assert float(weights.max()) >= 0.999, "fixture failed to saturate"
        probe = lambda: scalar_probe(block, own, other)
        probe().backward()
        # LayerNorm divides by the x200 input scale, so entries are tiny but
        # must stay well clear of zero: the coupling path carries them.
        assert float(own.grad.abs().max()) >= 1e-8
        index = int(own.grad.abs().argmax())
        numeric = finite_difference(probe, own.data, index, eps=1e-4)
        analytic = float(own.grad.view(-1)[index])
        assert abs(analytic - numeric) / abs(analytic) <= 1e-3

    def test_shape_mismatch(self):
        block = CrossSideFusion(d=4, heads=1)
        with pytest.raises(ShapeError, match="differ"):
            block(torch.zeros(1, 2, 4), torch.zeros(1, 3, 4))


class TestDecoder:
    def test_zero_latent_constant_output(self):
        decoder = TcnDecoder(d=8, horizon=5).double()
        out = decoder(torch.zeros(4, 3, 8, dtype=torch.float64))
        assert out.shape == (4, 3, 5)
        assert torch.equal(out[0], out[3])
        assert torch.equal(out[0, 0], out[0, 2])

    def test_single_step_horizon(self):
        decoder = TcnDecoder(d=8, horizon=1).double()
        out = decoder(torch.randn(2, 2, 8, dtype=torch.float64))
        assert out.shape == (2, 2, 1)

    def test_projection_gradient_matches_finite_difference(self):
        decoder = TcnDecoder(d=6, horizon=4).double()
        latents = torch.randn(1, 1, 6, dtype=torch.float64)
        probe = lambda: scalar_probe(decoder, latents)
        probe().backward()
        weight = decoder.project.weight
        for index in (0, 7, 13):
            analytic = float(weight.grad.view(-1)[index])
            numeric = finite_difference(probe, weight.data, index)
            assert abs(analytic - numeric) / max(abs(analytic), 1e-10) <= 1e-4

    def test_latent_width_checked(self):
        with pytest.raises(ShapeError, match="latent width"):
            TcnDecoder(d=8, horizon=4)(torch.zeros(1, 2, 6))


class TestGradientChecksPerBlock:
    """Autodiff against central differences, >= 3 entries per block type."""

    def test_encoder(self):
        torch.manual_seed(10)
        encoder = TcnEncoder(d=6).double()
        x = torch.randn(2, 2, 16, dtype=torch.float64)
        check_parameter_gradients(encoder, lambda: scalar_probe(encoder, x))

    def test_self_attention(self):
        torch.manual_seed(11)
        block = CrossModeSelfAttention(d=8, heads=2, k=3).double()
        x = torch.randn(2, 3, 8, dtype=torch.float64)
        check_parameter_gradients(block, lambda: scalar_probe(block, x))

    def test_cross_side_fusion(self):
        torch.manual_seed(12)
        block = CrossSideFusion(d=8, heads=2).double()
        own = torch.randn(2, 3, 8, dtype=torch.float64)
        other = torch.randn(2, 3, 8, dtype=torch.float64)
        check_parameter_gradients(block, lambda: scalar_probe(block, own, other))

    def test_decoder(self):
        torch.manual_seed(13)
        decoder = TcnDecoder(d=6, horizon=5).double()
        latents = torch.randn(2, 2, 6, dtype=torch.float64)
        check_parameter_gradients(decoder, lambda: scalar_probe(decoder, latents))


class TestFullModel:
    def config(self):
        return PredictorConfig(k=2, w=16, h=4, d=8, heads=2, epochs=1,
                               batch_size=2)

    def test_forward_shapes(self):
        model = MdaPredictor(self.config())
        human = torch.randn(3, 2, 16, dtype=torch.float64)
        robot = torch.randn(3, 2, 16, dtype=torch.float64)
        pred_h, pred_r = model(human, robot)
        assert pred_h.shape == (3, 2, 4)
        assert pred_r.shape == (3, 2, 4)

    def test_side_weights_are_distinct(self):
        model = MdaPredictor(self.config())
        human_w = model.decoder["human"].project.weight
        robot_w = model.decoder["robot"].project.weight
        assert not torch.equal(human_w, robot_w)

    def test_mode_count_checked(self):
        model = MdaPredictor(self.config())
        bad = torch.zeros(1, 3, 16, dtype=torch.float64)
        with pytest.raises(ShapeError, match="expected"):
            model(bad, bad)

    def test_single_hop_restore_equals_one_shot(self):
        model = MdaPredictor(self.config())
        model.eval()
        human = torch.randn(2, 16, dtype=torch.float64)
        robot = torch.randn(2, 16, dtype=torch.float64)
        restored = autoregressive_restore(model, human, robot, steps=4)
        with torch.no_grad():
            pred_h, pred_r = model(human[None], robot[None])
        assert torch.equal(restored.human_modes, pred_h[0])
        assert torch.equal(restored.robot_modes, pred_r[0])

    def test_restore_rolls_its_own_predictions(self):
        model = MdaPredictor(self.config())
        model.eval()
        human = torch.randn(2, 16, dtype=torch.float64)
        robot = torch.randn(2, 16, dtype=torch.float64)
        restored = autoregressive_restore(model, human, robot, steps=8)
        with torch.no_grad():
            first_h, first_r = model(human[None], robot[None])
            next_h_in = torch.cat([human, first_h[0]], dim=1)[:, -16:]
            next_r_in = torch.cat([robot, first_r[0]], dim=1)[:, -16:]
            second_h, _ = model(next_h_in[None], next_r_in[None])
        assert torch.equal(restored.human_modes[:, 4:], second_h[0])
        assert torch.equal(restored.human_signal,
                           restored.human_modes.sum(dim=0))

    def test_restore_validates_steps_and_history(self):
        model = MdaPredictor(self.config())
        history = torch.zeros(2, 16, dtype=torch.float64)
        with pytest.raises(InvalidInputError, match="steps"):
            autoregressive_restore(model, history, history, steps=0)
        with pytest.raises(InvalidInputError, match="at least"):
            autoregressive_restore(model, history[:, :8], history[:, :8], steps=4)
        with pytest.raises(ShapeError, match="history"):
            autoregressive_restore(model, history[0], history, steps=4)
