"""Transformer core: forward contracts, chunked inference, gradients,
and the weight file format."""

import numpy as np
import pytest

from speechrig.errors import DataError, NumericError
from speechrig.features import FeatureSequence
from speechrig.network import (
    InferenceConfig,
    build_model,
    chunked_apply,
    clip_loss_and_grads,
    forward,
    forward_with_attention,
    grad_check,
    gradcheck_probe,
    infer,
    load_model,
    mse_and_grad,
    named_parameters,
    save_model,
    training_forward,
)
from speechrig.rig import constant_timeline


def tiny_model(layers=1, seed=3, output_dim=12, dropout=0.0):
    return build_model(feature_dim=8, d_model=16, n_layers=layers, n_heads=2,
                       d_ff=32, output_dim=output_dim, dropout=dropout, seed=seed)


@pytest.fixture(scope="module")
def model():
    return tiny_model(layers=2, output_dim=174)


class TestForward:
    def test_output_shape(self, model):
        rng = np.random.default_rng(0)
        y = forward(model, rng.normal(0, 1, (9, 16)))
        assert y.shape == (9, 174)

    def test_attention_rows_sum_to_one(self, model):
        rng = np.random.default_rng(1)
        _, maps = forward_with_attention(model, rng.normal(0, 1, (7, 16)))
        assert len(maps) == 2
        for attn in maps:
            assert attn.shape == (2, 7, 7)
            np.testing.assert_allclose(attn.sum(axis=-1), 1.0, atol=1e-6)

    def test_permutation_equivariance_without_pe(self, model):
        # hidden states fed directly carry no positional information, so
        # unmasked self-attention commutes with row permutations
        rng = np.random.default_rng(2)
        hidden = rng.normal(0, 1, (8, 16))
        perm = rng.permutation(8)
        y = forward(model, hidden)
        yp = forward(model, hidden[perm])
        np.testing.assert_allclose(yp, y[perm], atol=1e-6)

    def test_repeated_calls_bitwise_identical(self, model):
        rng = np.random.default_rng(3)
        hidden = rng.normal(0, 1, (5, 16))
        assert np.array_equal(forward(model, hidden), forward(model, hidden))

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_non_finite_activation_reported_with_layer(self):
        bad = tiny_model(layers=2)
        bad.layers[1].w1[:] = np.inf
        rng = np.random.default_rng(4)
        with pytest.raises(NumericError, match="layer 1"):
            forward(bad, rng.normal(0, 1, (4, 16)))

    def test_hidden_width_checked(self, model):
        with pytest.raises(DataError):
            forward(model, np.zeros((4, 15)))


class TestEmotionPathway:
    def test_zeroed_emotion_parameters_make_output_label_invariant(self):
        m = tiny_model(output_dim=20)
        enc = m.encoder
        for name in ("emotion_embed", "emotion_w1", "emotion_b1",
                     "emotion_w2", "emotion_b2"):
            getattr(enc, name)[:] = 0.0
        rng = np.random.default_rng(5)
        feats = rng.normal(0, 1, (6, 8))
        outs = [training_forward(m, feats, constant_timeline(lab, 6))[0]
                for lab in range(7)]
        for other in outs[1:]:
            assert np.array_equal(outs[0], other)

    def test_distinct_labels_change_output(self):
        m = tiny_model(output_dim=20)
        rng = np.random.default_rng(6)
        feats = rng.normal(0, 1, (6, 8))
        a = training_forward(m, feats, constant_timeline(0, 6))[0]
        b = training_forward(m, feats, constant_timeline(4, 6))[0]
        assert not np.allclose(a, b)


class TestChunkedInference:
    def test_short_clip_equals_single_pass(self):
        m = tiny_model(layers=2, output_dim=174)
        rng = np.random.default_rng(7)
        feats = FeatureSequence(rng.normal(0, 1, (40, 8)).astype(np.float32), 60.0)
        tl = constant_timeline(1, 40)
        wide = infer(feats, tl, m, InferenceConfig(600, 60, 0))
        tight = infer(feats, tl, m, InferenceConfig(41, 5, 0))
        assert np.array_equal(wide.values, tight.values)

    def test_crossfade_passes_agreeing_chunks_through(self):
        rng = np.random.default_rng(8)
        const = np.tile(rng.normal(0, 1, (1, 6)), (26, 1))
        cfg = InferenceConfig(20, 4, 0)
        out = chunked_apply(lambda s, e: const[s:e].copy(), 26, 6, cfg)
        assert np.array_equal(out, const)

    def test_deterministic_across_runs(self):
        m = tiny_model(layers=1, output_dim=174, dropout=0.3)  # dropout off at inference
        rng = np.random.default_rng(9)
        feats = FeatureSequence(rng.normal(0, 1, (75, 8)).astype(np.float32), 60.0)
        tl = constant_timeline(2, 75)
        cfg = InferenceConfig(30, 6, 0)
        a = infer(feats, tl, m, cfg)
        b = infer(feats, tl, m, cfg)
        assert np.array_equal(a.values, b.values)

    def test_resamples_internally(self):
        m = tiny_model(layers=1, output_dim=174)
        rng = np.random.default_rng(10)
        feats = FeatureSequence(rng.normal(0, 1, (50, 8)).astype(np.float32), 50.0)
        seq = infer(feats, constant_timeline(0, 60), m)
        assert len(seq) == 60 and seq.fps == 60.0

    def test_timeline_length_mismatch_rejected(self):
        m = tiny_model(layers=1, output_dim=174)
        feats = FeatureSequence(np.zeros((30, 8), dtype=np.float32), 60.0)
        with pytest.raises(DataError):
            infer(feats, constant_timeline(0, 29), m)

    def test_feature_width_mismatch_rejected(self):
        m = tiny_model(layers=1, output_dim=174)
        feats = FeatureSequence(np.zeros((30, 9), dtype=np.float32), 60.0)
        with pytest.raises(DataError):
            infer(feats, constant_timeline(0, 30), m)

    def test_chunk_config_invariant(self):
        with pytest.raises(DataError):
            InferenceConfig(chunk_frames=10, overlap_frames=5)

    def test_timeline_variation_within_clip_changes_output(self):
        m = tiny_model(layers=1, output_dim=174)
        rng = np.random.default_rng(14)
        feats = FeatureSequence(rng.normal(0, 1, (40, 8)).astype(np.float32), 60.0)
        a = infer(feats, constant_timeline(0, 40), m)
        switched = np.array([0] * 20 + [5] * 20)
        b = infer(feats, switched, m)
        assert not np.array_equal(a.values, b.values)

    def test_reference_configuration_runs(self):
        m = reference_model(feature_dim=768, seed=1)
        assert (m.n_layers, m.d_model, m.n_heads, m.d_ff, m.output_dim) == \
            (10, 512, 8, 2048, 174)
        rng = np.random.default_rng(15)
        feats = FeatureSequence(rng.normal(0, 1, (100, 768)).astype(np.float32), 50.0)
        seq = infer(feats, constant_timeline(3, 120), m)
        assert seq.values.shape == (120, 174)
        assert np.isfinite(seq.values).all()


class TestGradients:
    def test_gradcheck_small_model(self):
        m, feats, labels, target = gradcheck_probe(seed=11)
        assert grad_check(m, feats, labels, target, eps=1e-5) < 1e-4

    def test_linear_model_gradients_nearly_exact(self):
        # with zero encoder layers the loss is exactly quadratic in the
        # output head, so central differences agree to roundoff
        m = tiny_model(layers=0)
        rng = np.random.default_rng(12)
        feats = rng.normal(0, 1, (5, 8))
        labels = rng.integers(0, 7, 5)
        target = rng.normal(0, 0.5, (5, 12))
        err = grad_check(m, feats, labels, target, eps=1e-5,
                         param_names=("head_w", "head_b"))
        assert err < 5e-8

    def test_zero_loss_probe_gives_zero_gradients(self):
        m = tiny_model(layers=1)
        rng = np.random.default_rng(13)
        feats = rng.normal(0, 1, (4, 8))
        labels = constant_timeline(3, 4)
        target, _ = training_forward(m, feats, labels)
        loss, grads = clip_loss_and_grads(m, feats, labels, target)
        assert loss == 0.0
        for name, g in grads.items():
            np.testing.assert_allclose(g, 0.0, atol=1e-15, err_msg=name)

    def test_mse_shape_mismatch(self):
        with pytest.raises(DataError):
            mse_and_grad(np.zeros((2, 3)), np.zeros((3, 2)))


class TestWeightFile:
    def test_roundtrip_preserves_f32_values_and_metadata(self, tmp_path):
        m = tiny_model(layers=2, output_dim=174)
        m.feature_family = "synthetic-desk"
        path = tmp_path / "w.emow"
        save_model(path, m)
        back = load_model(path)
        assert back.feature_family == "synthetic-desk"
        assert back.n_layers == 2 and back.d_model == 16 and back.n_heads == 2
        for (name_a, a), (name_b, b) in zip(named_parameters(m), named_parameters(back)):
            assert name_a == name_b
            assert np.array_equal(a.astype(np.float32), b.astype(np.float32))

    def test_saved_file_reload_is_stable(self, tmp_path):
        # saving a loaded model reproduces the file byte for byte
        m = tiny_model(layers=1)
        p1, p2 = tmp_path / "a.emow", tmp_path / "b.emow"
        save_model(p1, m)
        save_model(p2, load_model(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "w.emow"
        path.write_bytes(b"XXXX" + bytes(32))
        with pytest.raises(DataError, match="magic"):
            load_model(path)

    def test_truncated_rejected(self, tmp_path):
        m = tiny_model(layers=1)
        path = tmp_path / "w.emow"
        save_model(path, m)
        blob = path.read_bytes()
        path.write_bytes(blob[:-100])
        with pytest.raises(DataError, match="truncated"):
            load_model(path)
