# SPDX-License-Identifier: Apache-2.0
# Copyright 2026 The ACT-VAE Authors.

import math

import numpy as np
import pytest

import actvae


@pytest.fixture(scope="module")
def data():
    return actvae.Dataset.synthetic(n=48, frames=12, seed=3)


@pytest.fixture(scope="module")
def ckpt(data):
    cfg = actvae.ModelConfig.desk(data.joints, len(data.categories))
    cfg.rollout_steps = 4
    return actvae.train(data, cfg, steps=20, epochs=10, seed=1, lr=1e-3, batch=8)


def test_reference_dims():
    cfg = actvae.ModelConfig.reference(13, 9)
    assert cfg.encoder_input_dim == 547
    assert cfg.parameter_count == 7548910


def test_ablation_names():
    cfg = actvae.ModelConfig.desk(4, 2)
    cfg.apply_ablation("wo_az")
    assert cfg.ablation == "wo_az"
    assert not cfg.condition_on_past_latents
    with pytest.raises(Exception):
        cfg.apply_ablation("nope")


def test_kl_closed_form():
    assert actvae.kl_to_standard_normal([0.0, 0.0], [1.0, 1.0]) == 0.0
    kl = actvae.kl_to_standard_normal([1.0], [2.0])
    assert kl == pytest.approx(0.5 * (1 + 4 - 1) - math.log(2.0))


def test_dataset_round_trip(data, tmp_path):
    assert len(data) == 48
    assert data.poses().shape == (48, 12, data.joints, 2)
    path = tmp_path / "d.jsonl"
    data.save(path)
    back = actvae.Dataset.load(path)
    assert back.ids == data.ids
    assert back.labels == data.labels
    np.testing.assert_allclose(back.poses(), data.poses(), atol=1e-3)
    with pytest.raises(actvae.SchemaError):
        actvae.Dataset.parse("{}\n")


def test_metrics_hand_case():
    truth = np.zeros((1, 1, 2))
    samples = np.array([[[[3.0, 4.0]]], [[[6.0, 8.0]]]])
    assert actvae.l2_best_of_k(samples, truth, 1) == pytest.approx(5.0)
    assert actvae.l2_best_of_k(samples, truth, 2) == pytest.approx(7.5)
    assert actvae.diversity_std(samples) == pytest.approx(1.75)
    assert actvae.diversity_std(np.repeat(samples[:1], 3, axis=0)) == 0.0


def test_train_sample_evaluate(ckpt, data, tmp_path):
    assert ckpt.step == 20
    assert len(ckpt.history["total"]) == 20
    seed_pose = data.frames(0)[0]
    out = ckpt.sample(seed_pose, label=1, k=5, seed=9)
    assert out.shape == (5, 4, data.joints, 2)
    assert np.isfinite(out).all()
    np.testing.assert_array_equal(out, ckpt.sample(seed_pose, label=1, k=5, seed=9))
    mean = ckpt.sample(seed_pose, label=1, k=3, sample=False)
    assert actvae.diversity_std(mean) == 0.0

    report = ckpt.evaluate(data, k=6, keep=2, seed=4)
    assert report["sequences"] == 48
    assert report["l2_best_of_k"] > 0.0

    path = tmp_path / "m.ckpt"
    ckpt.save(path)
    again = actvae.Checkpoint.load(path)
    assert again.step == 20
    assert again.config == ckpt.config


def test_resume_matches_straight_run(data):
    cfg = actvae.ModelConfig.desk(data.joints, len(data.categories))
    cfg.rollout_steps = 4
    straight = actvae.train(data, cfg, steps=12, seed=2, batch=8, epochs=5)
    half = actvae.train(data, cfg, steps=6, seed=2, batch=8, epochs=5)
    resumed = actvae.resume(half, data, steps=12)
    assert half.step == 6
    assert resumed.history["total"] == straight.history["total"]


def test_cli_in_process(tmp_path):
    out = tmp_path / "g.jsonl"
    code, _, err = actvae.cli(["gen", "--out", str(out), "--n", "6", "--seed", "1"])
    assert code == 0, err
    assert len(actvae.Dataset.load(out)) == 6
    code, _, _ = actvae.cli(["bogus"])
    assert code == 2
