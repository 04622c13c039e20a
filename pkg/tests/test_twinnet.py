import numpy as np
import pytest

from madtwinnet.masker import MaskerConfig, decode
from madtwinnet.objective import ObjectiveConfig, TrainingBatch, composite_loss
from madtwinnet.params import ModelDims, init_parameters
from madtwinnet.pipeline import separate
from madtwinnet.signal import StftConfig
from madtwinnet.data import SequenceConfig, synth_fixture
from madtwinnet.twinnet import (
    twin_forward,
    twin_regularization_backward,
    twin_regularization_loss,
)

DIMS = ModelDims(N=10, F=4, denoiser_hidden=5)
MCFG = MaskerConfig(N=10, F=4, T=8, L=2)


def random_batch(seed, n=2):
    rng = np.random.default_rng(seed)
    return TrainingBatch(rng.uniform(0.2, 1.0, (n, MCFG.T, MCFG.N)),
                         rng.uniform(0.2, 1.0, (n, MCFG.T - 2 * MCFG.L, MCFG.N)))


def test_three_four_five():
    loss = twin_regularization_loss(np.array([[3.0, 0.0]]), np.array([[0.0, 4.0]]), np.eye(2), np.zeros(2))
    assert loss == pytest.approx(5.0, abs=1e-12)


def test_loss_matches_frame_loop(rng):
    h_dec = rng.standard_normal((3, 7, 4))
    h_twin = rng.standard_normal((3, 7, 4))
    W, b = rng.standard_normal((4, 4)), rng.standard_normal(4)
    brute = sum(np.sqrt(sum((h_dec[i, t] @ W + b - h_twin[i, t]) ** 2))
                for i in range(3) for t in range(7))
    assert twin_regularization_loss(h_dec, h_twin, W, b) == pytest.approx(brute, rel=1e-12)


def test_zero_distance_has_zero_subgradient():
    h = np.ones((1, 2, 3))
    grads = twin_regularization_backward(h, h.copy(), np.eye(3), np.zeros(3))
    for g in grads:
        assert np.all(np.isfinite(g)) and np.all(g == 0)


def test_twin_on_palindrome_mirrors_decoder(rng):
    half = rng.standard_normal((4, 8))
    h_enc = np.concatenate([half, half[::-1]])
    cell = init_parameters(0, DIMS).group("masker.dec")
    W, b = rng.standard_normal((4, 10)), np.zeros(10)
    _, h_twin = twin_forward(h_enc, np.ones((8, 10)), cell, W, b)
    np.testing.assert_allclose(h_twin, decode(h_enc, cell)[::-1], atol=1e-12)


def test_twin_reads_the_future(rng):
    cell = init_parameters(1, DIMS).group("twin.dec")
    h_enc = rng.standard_normal((6, 8))
    W, b = rng.standard_normal((4, 10)), np.zeros(10)
    _, a = twin_forward(h_enc, np.ones((6, 10)), cell, W, b)
    h_enc[-1] += 1.0
    _, c = twin_forward(h_enc, np.ones((6, 10)), cell, W, b)
    # every twin state depends on the last frame
    assert np.all(np.abs(a - c).sum(axis=1) > 0)


class TestGradientRouting:
    def test_stop_keeps_twin_cost_out_of_twin_decoder(self):
        p = init_parameters(3, DIMS)
        batch = random_batch(3)
        _, with_cost = composite_loss(batch, p, MCFG, ObjectiveConfig(), return_grads=True)
        _, no_cost = composite_loss(batch, p, MCFG, ObjectiveConfig(twin_weight=0.0), return_grads=True)
        for key in ("twin.dec.W", "twin.dec.U", "twin.dec.b"):
            np.testing.assert_allclose(with_cost[key], no_cost[key], rtol=0, atol=1e-15)
        assert not np.allclose(with_cost["masker.dec.W"], no_cost["masker.dec.W"])

    def test_full_routes_twin_cost_into_twin_decoder(self):
        p = init_parameters(3, DIMS)
        batch = random_batch(3)
        _, stop = composite_loss(batch, p, MCFG, ObjectiveConfig(), return_grads=True)
        _, full = composite_loss(batch, p, MCFG, ObjectiveConfig(twin_loss_backprop="full"),
                                 return_grads=True)
        diff = sum(np.abs(stop[k] - full[k]).sum() for k in ("twin.dec.W", "twin.dec.U", "twin.dec.b"))
        assert diff > 1e-6
        # the extra path runs through the twin decoder into the shared encoder only
        assert not np.allclose(stop["masker.enc_fwd.W"], full["masker.enc_fwd.W"])
        for key in p:
            if key.startswith(("masker.dec", "masker.fnn", "denoiser.", "twin.bridge", "twin.fnn")):
                np.testing.assert_allclose(stop[key], full[key], rtol=0, atol=1e-14)

    def test_disabled_twin_reports_zero_terms(self):
        p = init_parameters(4, DIMS)
        losses, grads = composite_loss(random_batch(4), p, MCFG, ObjectiveConfig(twin_enabled=False),
                                       return_grads=True)
        assert losses.L_TW == 0.0 and losses.L_twin == 0.0
        assert all(np.all(grads[k] == 0) for k in grads if k.startswith("twin."))

    def test_shared_projection_uses_masker_weights(self):
        p = init_parameters(5, DIMS)
        obj = ObjectiveConfig(twin_shares_projection=True)
        _, g = composite_loss(random_batch(5), p, MCFG, obj, return_grads=True)
        assert np.all(g["twin.fnn.W"] == 0)


def test_nan_twin_parameters_do_not_reach_separation():
    cfg = StftConfig(frame_length=255, fft_length=256, hop=64)
    dims = ModelDims(N=cfg.retained_bins, F=16, denoiser_hidden=8)
    mcfg = MaskerConfig(N=dims.N, F=16, T=12, L=2)
    seq = SequenceConfig(12, 2)
    p = init_parameters(0, dims)
    mix = synth_fixture(0, 0.3).mixture
    clean = separate(mix, p, cfg, seq, mcfg, gla_iterations=2)
    for key in p:
        if key.startswith("twin."):
            p[key] = np.full_like(p[key], np.nan)
    poisoned = separate(mix, p, cfg, seq, mcfg, gla_iterations=2)
    assert np.all(np.isfinite(poisoned))
    np.testing.assert_array_equal(poisoned, clean)
