import numpy as np
import pytest

from mdnn.baselines import FisherLDA, LinearCCA, RFFKernelCCA
from mdnn.checkpoint import load_model, model_kind, save_model
from mdnn.datasets import gen_synth_gaussian
from mdnn.errors import CheckpointError
from mdnn.network import TrainConfig, project, train


@pytest.fixture(scope="module")
def synth():
    return gen_synth_gaussian(
        3, 12, 10, 200, separation=3.0, shared_dim=4, noise=1.0, seed=0, n_test=60
    )


class TestCoupledCheckpoint:
    def test_round_trip_projection_bit_exact(self, tmp_path, synth):
        cfg = TrainConfig(hidden_layers=(16,), repr_dim=3, lam=2.0, epochs=2,
                          batch_size=100, seed=0)
        model, _ = train(cfg, synth.train)
        path = tmp_path / "model.ckpt.npz"
        save_model(path, model)
        loaded = load_model(path)
        X = synth.test.view1.astype(np.float64)
        np.testing.assert_array_equal(project(loaded, X), project(model, X))
        np.testing.assert_array_equal(
            project(loaded, synth.test.view2.astype(np.float64), view=2),
            project(model, synth.test.view2.astype(np.float64), view=2),
        )
        assert loaded.config == model.config
        assert loaded.train_labeled_count == model.train_labeled_count
        assert model_kind(loaded) == "mdnn"

    def test_single_view_model(self, tmp_path, synth):
        cfg = TrainConfig(hidden_layers=(8,), repr_dim=2, lam=1.0, epochs=1,
                          batch_size=100, seed=0, mode="dlda")
        model, _ = train(cfg, synth.train)
        path = tmp_path / "dlda.ckpt.npz"
        save_model(path, model)
        loaded = load_model(path)
        assert loaded.net2 is None
        X = synth.test.view1.astype(np.float64)
        np.testing.assert_array_equal(project(loaded, X), project(model, X))

    def test_interrupted_save_leaves_no_file(self, tmp_path, synth, monkeypatch):
        cfg = TrainConfig(hidden_layers=(8,), repr_dim=2, lam=0.0, epochs=1,
                          batch_size=100, seed=0)
        model, _ = train(cfg, synth.train)
        path = tmp_path / "model.ckpt.npz"

        import mdnn.checkpoint as cp

        def boom(*args, **kwargs):
            raise OSError("disk full")

        monkeypatch.setattr(cp.os, "replace", boom)
        with pytest.raises(OSError):
            save_model(path, model)
        assert not path.exists()
        assert list(tmp_path.iterdir()) == []


class TestBaselineCheckpoints:
    def test_linear_cca(self, tmp_path, synth):
        Xs = [synth.train.view1.T.astype(float), synth.train.view2.T.astype(float)]
        model = LinearCCA(n_components=3, r=1e-4).fit(Xs)
        path = tmp_path / "cca.ckpt.npz"
        save_model(path, model)
        loaded = load_model(path)
        np.testing.assert_array_equal(
            loaded.transform(Xs[0]), model.transform(Xs[0])
        )
        np.testing.assert_array_equal(loaded.correlations_, model.correlations_)

    def test_lda(self, tmp_path, synth):
        X = synth.train.view1.T.astype(float)
        y = synth.train.labels
        model = FisherLDA(n_components=2, r=1e-3).fit(X, y)
        path = tmp_path / "lda.ckpt.npz"
        save_model(path, model)
        loaded = load_model(path)
        np.testing.assert_array_equal(loaded.transform(X), model.transform(X))
        assert loaded.get_params() == model.get_params()

    def test_rff_kcca(self, tmp_path, synth):
        Xs = [synth.train.view1.T.astype(float), synth.train.view2.T.astype(float)]
        model = RFFKernelCCA(n_components=2, n_features=64, seed=5).fit(Xs)
        path = tmp_path / "kcca.ckpt.npz"
        save_model(path, model)
        loaded = load_model(path)
        np.testing.assert_array_equal(loaded.transform(Xs[0]), model.transform(Xs[0]))
        assert loaded.maps_[0].bandwidth == model.maps_[0].bandwidth

    def test_version_guard(self, tmp_path, synth):
        Xs = [synth.train.view1.T.astype(float), synth.train.view2.T.astype(float)]
        save_model(tmp_path / "m.npz", LinearCCA(n_components=2).fit(Xs))
        blobs = dict(np.load(tmp_path / "m.npz", allow_pickle=False))
        blobs["checkpoint_version"] = np.asarray(99)
        np.savez(tmp_path / "bad.npz", **blobs)
        with pytest.raises(CheckpointError, match="version"):
            load_model(tmp_path / "bad.npz")

    def test_not_a_checkpoint(self, tmp_path):
        np.savez(tmp_path / "junk.npz", stuff=np.arange(3))
        with pytest.raises(CheckpointError):
            load_model(tmp_path / "junk.npz")
