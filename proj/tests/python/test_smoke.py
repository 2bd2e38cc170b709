import json
from fractions import Fraction

import numpy as np
import pytest

import stepgan


def small_model(n=3, seed=4):
    arch = stepgan.Architecture(noise_dim=4, data_dim=2, generator_hidden=[8, 8], discriminator_hidden=[16, 16])
    return stepgan.GanModel(n, arch, seed)


def small_config(n=3):
    c = stepgan.TrainConfig()
    c.n_generators = n
    c.batch_size = 32
    c.monitor_batch = 32
    c.inner_disc_cap = 10
    c.max_epochs = 3
    c.seed = 4
    return c


def test_default_shapes():
    m = stepgan.GanModel(5)
    assert m.real_class == 5
    z = m.sample_noise(7)
    assert z.shape == (7, 50)
    x = m.generate(0, z)
    assert x.shape == (7, 128)
    assert np.all(np.abs(x) < 1.0)
    p = m.discriminate(x)
    assert p.shape == (7, 6)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)


def test_metrics_worked_example():
    r = stepgan.metrics(tp=3, tn=2, fp=1, fn=0)
    assert r["accuracy"] == float(Fraction(5, 6))
    assert r["f_measure"] == float(Fraction(6, 7))


def test_train_and_evaluate_roundtrip(tmp_path):
    data = stepgan.synth(n_normal=300, n_anomaly=100, seed=2)
    m = small_model()
    seen = []
    out = stepgan.train(m, data["normal"], small_config(), on_epoch=seen.append)
    assert len(out["history"]) == 3 == len(seen)
    assert all(0.0 <= e["se"] <= 1.0 for e in out["history"])

    rows = np.vstack([data["normal"], data["anomalies"]])
    attack = [0] * 300 + [1] * 100
    r = stepgan.evaluate(m, rows, attack)
    assert r["tp"] + r["tn"] + r["fp"] + r["fn"] == 400
    assert r["tp"] + r["fn"] == 300
    assert m.classify(rows) == [int(v) for v in np.asarray(m.classify(rows))]

    path = tmp_path / "m.stepgan"
    m.save(path)
    back = stepgan.load_model(path)
    np.testing.assert_array_equal(back.discriminate(rows), m.discriminate(rows))


def test_determinism():
    data = stepgan.synth(n_normal=200, n_anomaly=1, seed=5)
    a, b = small_model(), small_model()
    ha = stepgan.train(a, data["normal"], small_config())["history"]
    hb = stepgan.train(b, data["normal"], small_config())["history"]
    assert [e["disc_loss"] for e in ha] == [e["disc_loss"] for e in hb]


def test_closed_gate_freezes_generators():
    data = stepgan.synth(n_normal=200, n_anomaly=1, seed=6)
    m = small_model()
    z = m.sample_noise(16)
    before = [m.generate(i, z) for i in range(3)]
    c = small_config()
    c.alpha = c.beta = 1.0
    hist = stepgan.train(m, data["normal"], c)["history"]
    assert all(e["gen_steps"] == 0 for e in hist)
    for i in range(3):
        np.testing.assert_array_equal(m.generate(i, z), before[i])


def test_coverage_and_projection():
    data = stepgan.synth(n_normal=1000, n_anomaly=1, seed=3)
    same = stepgan.mode_coverage(data["normal"], data["normal"], 20, data["mode_centers"])
    assert same["coverage_ratio"] == 0.0
    assert len(same["mode_nearest_distance"]) == 8
    p = stepgan.pca_project(data["normal"])
    assert p["points"].shape == (1000, 2)
    assert p["variance"][0] >= p["variance"][1]


def test_errors_map_to_python_exceptions():
    m = small_model()
    with pytest.raises(stepgan.ShapeError):
        m.discriminate(np.zeros((2, 3)))
    with pytest.raises(stepgan.ConfigError):
        stepgan.resolve_config({"train": {"alhpa": 0.5}})
    with pytest.raises(stepgan.ConfigError):
        m.classify(np.zeros((1, 2)), threshold=1.5)
    assert issubclass(stepgan.ShapeError, stepgan.DataError)


def test_config_driven_run(tmp_path):
    cfg = stepgan.resolve_config(
        {
            "seed": 3,
            "data": {"source": "synth", "folds": 3},
            "synth": {"n_normal": 240, "n_anomaly": 120},
            "model": {"noise_dim": 4, "generator_hidden": [8, 8], "discriminator_hidden": [16, 16]},
            "train": {"n_generators": 2, "max_epochs": 2, "batch_size": 32, "monitor_batch": 32, "inner_disc_cap": 10},
        }
    )
    assert cfg["train"]["alpha"] == 0.9
    out = stepgan.run_training(cfg, tmp_path / "run")
    assert len(out["folds"]) == 3
    assert 0.0 <= out["accuracy_mean"] <= 1.0
    summary = json.loads((tmp_path / "run" / "summary.json").read_text())
    assert summary is not None
    ckpt = next((tmp_path / "run").glob("fold_*/checkpoint.stepgan"))
    test_csv = ckpt.parent / "test.csv"
    r = stepgan.evaluate_checkpoint(ckpt, test_csv)
    assert r["tp"] + r["tn"] + r["fp"] + r["fn"] > 0
