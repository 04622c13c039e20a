import numpy as np
import pytest

from madtwinnet.exceptions import InvalidArgumentError, NumericError
from madtwinnet.gru import gru_forward
from madtwinnet.masker import (
    MaskerConfig,
    apply_skip_filter,
    decode,
    encode,
    masker_forward,
    sparsify,
    trim,
)
from madtwinnet.params import ModelDims, init_parameters


def identity_cell(F):
    """GRU whose update gate is shut and candidate is tanh(x): h_t = tanh(x_t)."""
    W = np.concatenate([np.zeros((F, 2 * F)), np.eye(F)], axis=1)
    b = np.concatenate([np.full(F, -1e3), np.zeros(2 * F)])
    return {"W": W, "U": np.zeros((F, 3 * F)), "b": b}


def test_trim_bandwidth_at_default_analysis():
    # 744 bins of a 4096-point FFT at 44.1 kHz reach about 8 kHz
    assert 744 * 44100 / 4096 == pytest.approx(8010.35, abs=0.01)
    assert trim(np.ones((3, 2049)), 744).shape == (3, 744)
    with pytest.raises(InvalidArgumentError):
        trim(np.ones((3, 10)), 11)


def test_identity_gru():
    x = np.random.default_rng(0).standard_normal((2, 5, 4))
    hs, _ = gru_forward(x, identity_cell(4))
    np.testing.assert_allclose(hs, np.tanh(x), atol=1e-12)


class TestEncoder:
    def test_residual_identity_oracle(self, rng):
        F, T, L = 4, 9, 2
        v = rng.standard_normal((T, F))
        cells = {"enc_fwd": identity_cell(F), "enc_bwd": identity_cell(F)}
        h = encode(v, cells, L)
        expected = np.tanh(v) + v
        np.testing.assert_allclose(h[:, :F], expected[L:T - L], atol=1e-12)
        np.testing.assert_allclose(h[:, F:], expected[L:T - L], atol=1e-12)

    def test_literal_alignment_pairs_reversed_frames(self, rng):
        F, T, L = 3, 8, 1
        v = rng.standard_normal((T, F))
        cells = {"enc_fwd": identity_cell(F), "enc_bwd": identity_cell(F)}
        h = encode(v, cells, L, alignment="literal")
        rev = v[::-1]
        np.testing.assert_allclose(h[:, F:], (np.tanh(rev) + rev)[L:T - L], atol=1e-12)

    def test_backward_stream_sees_future(self, rng):
        F, T, L = 3, 10, 2
        dims = ModelDims(N=6, F=F, denoiser_hidden=2)
        p = init_parameters(0, dims)
        cells = {"enc_fwd": p.group("masker.enc_fwd"), "enc_bwd": p.group("masker.enc_bwd")}
        v = rng.standard_normal((T, F))
        h0 = encode(v, cells, L)
        v2 = v.copy()
        v2[-1] += 1.0
        h1 = encode(v2, cells, L)
        # the last frame is context only: forward half unchanged, backward half changed
        np.testing.assert_array_equal(h0[:, :F], h1[:, :F])
        assert not np.allclose(h0[:, F:], h1[:, F:])

    def test_rejects_short_and_non_finite(self):
        cells = {"enc_fwd": identity_cell(2), "enc_bwd": identity_cell(2)}
        with pytest.raises(InvalidArgumentError):
            encode(np.zeros((4, 2)), cells, L=2)
        bad = np.zeros((6, 2))
        bad[1, 1] = np.nan
        with pytest.raises(NumericError):
            encode(bad, cells, L=1)
        with pytest.raises(InvalidArgumentError):
            encode(np.zeros((6, 2)), cells, L=1, alignment="sideways")


class TestMaskerForward:
    def test_full_scale_shapes(self):
        cfg = MaskerConfig()
        p = init_parameters(0, ModelDims(), dtype=np.float32)
        v = np.abs(np.random.default_rng(0).standard_normal((cfg.T, cfg.N)))
        cells = {"enc_fwd": p.group("masker.enc_fwd"), "enc_bwd": p.group("masker.enc_bwd")}
        assert encode(trim(v, cfg.F), cells, cfg.L).shape == (40, 1488)
        v_filt, h_dec = masker_forward(v, p, cfg)
        assert v_filt.shape == (40, 2049)
        assert h_dec.shape == (40, 744)

    def test_decoder_states_bounded_and_mask_non_negative(self, rng):
        cfg = MaskerConfig(N=20, F=6, T=10, L=2)
        p = init_parameters(1, ModelDims(N=20, F=6))
        for key in list(p):
            p[key] = p[key] * 5.0
        v = np.abs(rng.standard_normal((3, 10, 20))) * 10
        v_filt, h_dec = masker_forward(v, p, cfg)
        assert np.all(np.abs(h_dec) <= 1.0)
        assert np.all(v_filt >= 0)

    def test_batch_matches_single(self, rng):
        cfg = MaskerConfig(N=12, F=5, T=8, L=2)
        p = init_parameters(2, ModelDims(N=12, F=5))
        v = np.abs(rng.standard_normal((3, 8, 12)))
        batched, _ = masker_forward(v, p, cfg)
        for i in range(3):
            np.testing.assert_allclose(masker_forward(v[i], p, cfg)[0], batched[i], atol=1e-12)

    def test_bins_above_F_are_still_filtered(self, rng):
        cfg = MaskerConfig(N=12, F=5, T=8, L=2)
        p = init_parameters(2, ModelDims(N=12, F=5))
        v = np.abs(rng.standard_normal((8, 12)))
        v2 = v.copy()
        v2[:, 5:] *= 3.0
        a, _ = masker_forward(v, p, cfg)
        b, _ = masker_forward(v2, p, cfg)
        # the mask only depends on the low band, so high bins scale linearly
        np.testing.assert_allclose(b[:, 5:], 3.0 * a[:, 5:], rtol=1e-12)
        np.testing.assert_allclose(b[:, :5], a[:, :5], rtol=1e-12)

    def test_wrong_bin_count(self):
        cfg = MaskerConfig(N=12, F=5, T=8, L=2)
        with pytest.raises(InvalidArgumentError):
            masker_forward(np.zeros((8, 11)), init_parameters(0, ModelDims(N=12, F=5)), cfg)

    @pytest.mark.parametrize("kwargs", [dict(F=0), dict(F=3000), dict(T=20, L=10),
                                        dict(encoder_alignment="other")])
    def test_config_validation(self, kwargs):
        with pytest.raises(InvalidArgumentError):
            MaskerConfig(**kwargs)


def test_sparsify_and_skip_filter():
    h = np.array([[1.0, -1.0]])
    W = np.array([[1.0, -1.0, 0.0], [0.0, 1.0, 2.0]])
    mask = sparsify(h, W, np.zeros(3))
    np.testing.assert_array_equal(mask, [[1.0, 0.0, 0.0]])
    np.testing.assert_array_equal(apply_skip_filter(mask, np.array([[4.0, 5.0, 6.0]])), [[4.0, 0, 0]])
    with pytest.raises(InvalidArgumentError):
        apply_skip_filter(mask, np.ones((2, 3)))


def test_decoder_starts_from_zero_state():
    # with zero input and zero biases the state never leaves zero
    F = 3
    p = init_parameters(0, ModelDims(N=4, F=F)).group("masker.dec")
    assert np.all(decode(np.zeros((5, 2 * F)), p) == 0)
