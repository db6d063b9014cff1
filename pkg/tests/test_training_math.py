import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hotscore.training_math import (
    FusionParams, explain_losses, fuse_features, log_ratio_term, positional_embeddings, rl_loss,
    score_mse, serialize_keyframes, sft_loss,
)


def test_positional_embedding_entries():
    P = positional_embeddings(6, 8)
    for pos in range(6):
        for i in range(8):
            angle = pos / 10000 ** (2 * (i // 2) / 8)
            want = math.sin(angle) if i % 2 == 0 else math.cos(angle)
            assert P[pos, i] == pytest.approx(want, abs=1e-12)


def test_serialize_keyframes_modes():
    frames = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]]
    added = serialize_keyframes(frames, "add")
    assert added.shape == (3, 4)
    assert np.allclose(added - np.array(frames), positional_embeddings(3, 4))
    cat = serialize_keyframes(frames, "concat")
    assert cat.shape == (3, 8) and np.array_equal(cat[:, :4], np.array(frames))
    with pytest.raises(ValueError):
        serialize_keyframes([[1.0], [1.0, 2.0]])
    with pytest.raises(ValueError):
        serialize_keyframes([])


def test_fuse_features_with_projection():
    t = np.array([1.0, 2.0])
    s = np.array([1.0, 1.0, 1.0])
    proj = np.array([[1, 0, 0], [0, 1, 1]])
    assert np.allclose(fuse_features(t, s, projection=proj), [1.0, 2.0])
    with pytest.raises(ValueError):
        fuse_features(t, s)


@given(st.floats(0, 10), st.floats(0, 1), st.floats(0, 1))
def test_sft_loss_is_weighted_sum(ce, pred, true):
    lf = score_mse(pred, true)
    assert lf == pytest.approx((pred - true) ** 2)
    assert sft_loss(ce, lf) == pytest.approx(0.8 * ce + 0.2 * lf)


@given(st.floats(-5, 5), st.floats(-20, 0), st.floats(-20, 0))
def test_rl_loss_is_weighted_sum(r, lp_rl, lp_sft):
    assert log_ratio_term(lp_rl, lp_sft) == pytest.approx(-(lp_rl - lp_sft))
    assert rl_loss(r, lp_rl, lp_sft) == pytest.approx(0.3 * r - 0.7 * (lp_rl - lp_sft), abs=1e-12)


def test_explain_losses_trace(tmp_path):
    f = tmp_path / "fp.json"
    f.write_text(json.dumps({"w1_S": 0.5, "w2_S": 0.5}))
    p = FusionParams.load(f)
    out = explain_losses(2.0, 0.4, 0.6, 1.0, -1.0, -2.0, p)
    assert out["sft"]["L_F"] == pytest.approx(0.04)
    assert out["sft"]["L_SFT"] == pytest.approx(0.5 * 2.0 + 0.5 * 0.04)
    assert out["rl"]["log_ratio_term"] == pytest.approx(-1.0)
    assert out["rl"]["L_RL"] == pytest.approx(0.3 * 1.0 + 0.7 * -1.0)
    assert out["rl"]["sign_convention"] == "maximize L_RL"
    with pytest.raises(ValueError):
        FusionParams(alpha=float("nan"))
