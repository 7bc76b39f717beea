import numpy as np
import pytest

from ltc_emotion.autograd import Tensor, gradcheck
from ltc_emotion.config import apply_overrides, config_lines, read_config, write_config
from ltc_emotion.errors import ConfigError, DataError, ShapeError, StageError
from ltc_emotion.features import BLOCK_SHAPES
from ltc_emotion.ltc import make_rng
from ltc_emotion.nn import (
    ABLATION_PRESETS,
    MODALITIES,
    MODALITY_BLOCK,
    EmotionNet,
    ModelConfig,
    TemporalAttention,
    attention_pool,
    miniature_config,
    model_forward,
    parse_modalities,
)
from ltc_emotion.nn.checkpoint import load_model, save_model


def random_batch(b, seed=0, n_timesteps=256):
    rng = np.random.default_rng(seed)
    batch = {}
    for name, shape in BLOCK_SHAPES.items():
        if name == "eeg_raw":
            shape = (shape[0], n_timesteps)
        batch[name] = rng.normal(size=(b,) + shape)
    batch["psd"] = np.exp(batch["psd"])  # powers are positive
    return batch


@pytest.fixture(scope="module")
def full_model():
    model = EmotionNet(ModelConfig(seed=0))
    model.fit_scaler(random_batch(32, seed=99))
    return model


class TestShapes:
    @pytest.mark.parametrize("b", [1, 2, 17])
    def test_stage_shapes(self, full_model, b):
        out = model_forward(full_model, random_batch(b, seed=b))
        assert out.logits.shape == (b, 7)
        assert out.attention.shape == (b, 32)
        assert out.z.shape == (b, 128)
        assert out.fused.shape == (b, 312) and out.recon.shape == (b, 312)
        pooled, alpha, hidden = full_model.encode_raw(random_batch(b)["eeg_raw"])
        assert pooled.shape == (b, 128) and hidden.shape == (b, 32, 128)

    def test_conv_blocks_halve_length(self, full_model):
        x = Tensor(random_batch(2)["eeg_raw"])
        lengths = []
        for block in full_model.cnn:
            x = block(x, None)
            lengths.append(x.shape[1:])
            assert np.all(x.data >= 0)
        assert lengths == [(48, 128), (64, 64), (48, 32)]

    def test_encoder_widths(self, full_model):
        widths = {"psd": 32, "de": 32, "stats": 32, "asym": 8, "hrv": 16, "eda": 16, "hr": 16,
                  "temp": 16, "personality": 16}
        batch = random_batch(3)
        for m, w in widths.items():
            assert full_model.encode_modality(m, batch[m]).shape == (3, w)

    def test_encoder_width_mismatch_names_modality(self, full_model):
        with pytest.raises(ShapeError, match="hrv"):
            full_model.encode_modality("hrv", np.zeros((2, 6)))

    def test_missing_block_is_stage_error(self, full_model):
        batch = random_batch(2)
        del batch["eda"]
        with pytest.raises(StageError, match="encode:eda"):
            model_forward(full_model, batch)

    def test_wrong_raw_shape(self, full_model):
        batch = random_batch(2)
        batch["eeg_raw"] = batch["eeg_raw"][:, :, :128]
        with pytest.raises(StageError):
            model_forward(full_model, batch)


class TestFusion:
    def test_fused_width_and_order(self, full_model):
        batch = random_batch(4, seed=5)
        out = model_forward(full_model, batch)
        start = 0
        for m in MODALITIES:
            if m == "raw_eeg":
                part = full_model.encode_raw(batch["eeg_raw"])[0].data
            else:
                part = full_model.encode_modality(m, batch[m]).data
            np.testing.assert_array_equal(out.fused.data[:, start:start + part.shape[1]], part)
            start += part.shape[1]
        assert start == 312

    def test_dict_order_does_not_matter(self, full_model):
        batch = random_batch(3, seed=6)
        shuffled = dict(reversed(list(batch.items())))
        np.testing.assert_array_equal(model_forward(full_model, batch).logits.data,
                                      model_forward(full_model, shuffled).logits.data)

    def test_eval_is_deterministic_and_batch_independent(self, full_model):
        batch = random_batch(3, seed=7)
        pair = {k: np.concatenate([v[:1], v[:1]]) for k, v in batch.items()}
        a = model_forward(full_model, batch).logits.data
        b = model_forward(full_model, batch).logits.data
        np.testing.assert_array_equal(a, b)
        p = model_forward(full_model, pair).logits.data
        np.testing.assert_allclose(p[0], p[1], atol=1e-12)
        np.testing.assert_allclose(p[0], a[0], atol=1e-12)


class TestAttention:
    def test_weights_sum_to_one_and_pool_in_hull(self):
        attn = TemporalAttention(6, 4, 0.0, make_rng(0))
        hidden = np.random.default_rng(1).normal(size=(5, 9, 6))
        pooled, alpha = attention_pool(hidden, attn)
        np.testing.assert_allclose(alpha.data.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(pooled.data <= hidden.max(axis=1) + 1e-12)
        assert np.all(pooled.data >= hidden.min(axis=1) - 1e-12)

    def test_single_step(self):
        attn = TemporalAttention(3, 2, 0.0, make_rng(0))
        hidden = np.random.default_rng(2).normal(size=(2, 1, 3))
        pooled, alpha = attention_pool(hidden, attn)
        np.testing.assert_array_equal(alpha.data, 1.0)
        np.testing.assert_allclose(pooled.data, hidden[:, 0])

    def test_uniform_cases(self):
        attn = TemporalAttention(3, 2, 0.0, make_rng(0))
        same = np.tile(np.random.default_rng(3).normal(size=(1, 1, 3)), (2, 5, 1))
        np.testing.assert_allclose(attention_pool(same, attn)[1].data, 0.2)
        attn.v.data[:] = 0.0
        varied = np.random.default_rng(4).normal(size=(2, 5, 3))
        np.testing.assert_allclose(attention_pool(varied, attn)[1].data, 0.2)

    def test_model_attention_rows(self, full_model):
        out = model_forward(full_model, random_batch(4, seed=8))
        np.testing.assert_allclose(out.attention.data.sum(axis=1), 1.0, atol=1e-5)


class TestInitialisation:
    def test_parameter_count(self):
        # default widths; the score vector v carries no bias
        assert EmotionNet(ModelConfig()).n_parameters() == 432_567

    def test_initial_logits_are_small(self):
        batch = random_batch(8, seed=10)
        worst = 0.0
        for seed in range(100):
            model = EmotionNet(miniature_config(seed=seed, n_classes=7, classifier_dims=(256, 128),
                                                latent_dim=128, ae_hidden=256))
            model.fit_scaler(batch)
            worst = max(worst, np.abs(model_forward(model, batch).logits.data).max())
        assert worst < 1.0

    def test_full_config_logits_small(self, full_model):
        assert np.abs(model_forward(full_model, random_batch(8, seed=11)).logits.data).max() < 1.0


class TestAblation:
    @pytest.mark.parametrize("preset,width", [("A1", 312), ("A5", 128), ("A6", 144),
                                              ("A4", 80), ("A7", 184)])
    def test_fused_width(self, preset, width):
        assert ModelConfig().with_modalities(preset).fused_dim == width

    def test_removing_modality_removes_exactly_its_parameters(self):
        full = EmotionNet(ModelConfig())
        cfg = ModelConfig(modalities=tuple(m for m in MODALITIES if m != "eda"))
        reduced = EmotionNet(cfg)
        full_names = dict((n, p.size) for n, p in full.named_parameters())
        red_names = dict((n, p.size) for n, p in reduced.named_parameters())
        removed = set(full_names) - set(red_names)
        assert removed and all(n.startswith("nn.encoders.eda.") for n in removed)
        assert set(red_names) <= set(full_names)
        # only the autoencoder's fused-width dimensions change size
        changed = [n for n in red_names if red_names[n] != full_names[n]]
        assert sorted(changed) == ["nn.autoencoder.dec2.bias", "nn.autoencoder.dec2.weight",
                                   "nn.autoencoder.enc1.weight"]

    def test_raw_only_model_runs(self):
        model = EmotionNet(ModelConfig().with_modalities("A5"))
        out = model_forward(model, {"eeg_raw": random_batch(2)["eeg_raw"]})
        assert out.fused.shape == (2, 128)

    def test_tabular_only_has_no_attention(self):
        model = EmotionNet(ModelConfig().with_modalities("A4"))
        model.fit_scaler(random_batch(8))
        assert model_forward(model, random_batch(2)).attention is None

    def test_parse_modalities(self):
        assert parse_modalities("personality,raw_eeg") == ("raw_eeg", "personality")
        assert parse_modalities("all") == MODALITIES
        assert parse_modalities("A6") == ABLATION_PRESETS["A6"]
        with pytest.raises(ConfigError):
            parse_modalities("eeg,gsr")
        assert set(MODALITY_BLOCK.values()) == set(BLOCK_SHAPES)


class TestGradients:
    def test_miniature_end_to_end_gradcheck(self):
        cfg = miniature_config(n_timesteps=32)
        model = EmotionNet(cfg)
        batch = random_batch(4, seed=12, n_timesteps=32)
        model.fit_scaler(batch)
        labels = np.array([0, 1, 1, 0])
        model.train()

        def loss():
            out = model.forward(batch, make_rng(3))
            logp = out.logits - out.logits.exp().sum(axis=1, keepdims=True).log()
            ce = -logp[np.arange(4), labels].mean()
            return ce + ((out.recon - out.fused) ** 2).mean()

        params = dict(model.named_parameters())
        # zero-initialised biases put dead ReLU units exactly on the kink, where a
        # central difference is meaningless; move them off it
        jitter = np.random.default_rng(1)
        for name, p in params.items():
            if name.endswith(".bias"):
                p.data += jitter.uniform(0.05, 0.1, size=p.shape)
        report = gradcheck(loss, params, tol=1e-3, max_entries=12,
                           rng=np.random.default_rng(0))
        assert report.passed, str(report)
        for group in ("ltc.layer0.theta_tau", "nn.attention.W_a", "nn.attention.v",
                      "nn.autoencoder.enc1.weight", "nn.cnn.0.weight"):
            assert group in report.errors


class TestCheckpoint:
    def test_round_trip_with_running_stats(self, tmp_path):
        cfg = miniature_config(n_timesteps=32, modalities=("raw_eeg", "hrv", "temp"), seed=4)
        model = EmotionNet(cfg)
        batch = random_batch(6, seed=13, n_timesteps=32)
        model.fit_scaler(batch)
        model_forward(model, batch, training=True, rng=make_rng(0))  # moves running stats
        assert np.any(dict(model.named_buffers())["nn.cnn.0.bn.running_mean"] != 0)
        save_model(tmp_path / "m.ckpt", model, {"best_epoch": 3})
        back, meta = load_model(tmp_path / "m.ckpt")
        assert back.cfg == cfg and meta["best_epoch"] == "3"
        for (na, a), (nb, b) in zip(model.state_dict().items(), back.state_dict().items()):
            assert na == nb
            np.testing.assert_array_equal(a, b)
        model.eval()
        np.testing.assert_array_equal(model_forward(model, batch).logits.data,
                                      model_forward(back, batch).logits.data)

    def test_names_follow_scheme(self):
        names = list(EmotionNet(ModelConfig()).state_dict())
        assert "ltc.layer0.Wx" in names and "nn.cnn.0.weight" in names
        assert "nn.cnn.0.bn.running_mean" in names
        assert "nn.encoders.psd.layers.0.weight" in names
        assert all(n.startswith(("ltc.", "nn.")) for n in names)

    def test_missing_checkpoint(self, tmp_path):
        with pytest.raises(DataError):
            load_model(tmp_path / "nope.ckpt")

    def test_config_file_round_trip(self, tmp_path):
        cfg = miniature_config(modalities=("raw_eeg", "psd"), dropout=0.25)
        write_config(tmp_path / "c.txt", {"model": cfg})
        parsed = read_config(tmp_path / "c.txt")
        assert apply_overrides(ModelConfig(), parsed["model"]) == cfg
        assert "model.encoder_dims.psd = 4,4" in config_lines("model", cfg)

    def test_bad_config_values(self):
        with pytest.raises(ConfigError):
            apply_overrides(ModelConfig(), {"lnn_hidden": "many"})
        with pytest.raises(ConfigError):
            apply_overrides(ModelConfig(), {"no_such_key": "1"})
        with pytest.raises(ConfigError):
            ModelConfig(dropout=1.5).validate()
