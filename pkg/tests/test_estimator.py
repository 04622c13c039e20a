import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from madtwinnet import MaDTwinNet
from madtwinnet.data import synth_fixture
from madtwinnet.exceptions import ConfigError, InvalidArgumentError

SMALL = dict(frame_length=255, fft_length=256, hop=64, F=24, T=12, L=2, batch_size=8,
             griffin_lim_iterations=2)


@pytest.fixture(scope="module")
def tracks():
    return [synth_fixture(k, 0.4) for k in range(2)]


@pytest.fixture(scope="module")
def fitted(tracks):
    est = MaDTwinNet(max_steps=5, **SMALL)
    return est.fit([t.mixture for t in tracks], [t.voice for t in tracks])


def test_params_and_clone():
    est = MaDTwinNet(T=20, L=3, random_state=4)
    params = est.get_params()
    assert params["T"] == 20 and params["random_state"] == 4
    twin = clone(est)
    assert twin.get_params() == params
    est.set_params(F=50)
    assert est.run_config().F == 50


def test_fit_respects_max_steps(fitted):
    assert fitted.n_steps_ == 5 and len(fitted.history_) == 5
    assert fitted.config_.F == 24
    assert set(fitted.history_[0][1]) >= {"L_D", "L_twin", "total"}


def test_predict_shapes(fitted, tracks):
    out = fitted.predict([t.mixture for t in tracks])
    assert [o.size for o in out] == [t.mixture.size for t in tracks]
    single = fitted.transform(tracks[0].mixture)
    np.testing.assert_array_equal(single[0], out[0])


def test_score_is_finite(fitted, tracks):
    assert np.isfinite(fitted.score([t.mixture for t in tracks], [t.voice for t in tracks]))


def test_save_and_reload(fitted, tracks, tmp_path):
    fitted.save(tmp_path / "m.madt", tmp_path / "config.txt")
    again = MaDTwinNet.from_checkpoint(tmp_path / "m.madt", fitted.config_)
    assert again.n_steps_ == 5
    np.testing.assert_array_equal(again.predict(tracks[0].mixture)[0],
                                  fitted.predict(tracks[0].mixture)[0])


def test_unfitted():
    with pytest.raises(NotFittedError):
        MaDTwinNet().predict(np.zeros(100))


def test_input_validation(tracks):
    est = MaDTwinNet(max_steps=1, **SMALL)
    with pytest.raises(InvalidArgumentError):
        est.fit([tracks[0].mixture], [tracks[0].voice[:-1]])
    with pytest.raises(InvalidArgumentError):
        est.fit([np.array([np.nan, 1.0])], [np.zeros(2)])
    with pytest.raises(InvalidArgumentError):
        est.fit([tracks[0].mixture], [])
    with pytest.raises(ConfigError):
        MaDTwinNet(T=4, L=2).fit([tracks[0].mixture], [tracks[0].voice])
