import numpy as np
import pytest
from hypothesis import given, strategies as st

from hotscore.corpus import VideoRecord
from hotscore.providers import KnowledgeBase
from hotscore.tot import (
    CONNECTIVE, DIMENSIONS, ToTError, ToTNode, ToTTree, TotOptimizerConfig, build_comment_tot, build_video_tot,
    contradicts, enhance_knowledge, merge_comment_tot, optimize_tot_weights, refine_prompt, run_tot,
    tot_utility, tot_weight_step, weights_from_utilities,
)

VIDEO = VideoRecord("v1", title="法式可丽饼的做法", theme="food", description="一位厨师分享法式可丽饼的制作过程。",
                    caption_text="今天教大家做法式可丽饼。先准备面粉。然后调制酱汁。最后煎到金黄。")


def tree(weights, texts=None):
    texts = texts or {d: d for d in DIMENSIONS}
    return ToTTree({d: ToTNode(texts[d], w) for d, w in zip(DIMENSIONS, weights)})


def test_build_trees():
    t = build_video_tot(VIDEO)
    assert t.origin == "video" and np.allclose(t.weights(), 0.2)
    assert "先准备面粉" in t.text("Eve")
    c = build_comment_tot("好吃！")
    assert c.origin == "comment" and all("好吃" in c.text(d) for d in DIMENSIONS)
    with pytest.raises(ToTError):
        build_video_tot(VideoRecord("x", title="t"))
    with pytest.raises(ToTError):
        build_comment_tot("  ")


def test_caption_stands_in_for_missing_description():
    t = build_video_tot(VideoRecord("x", caption_text="猫咪跳起来了。"))
    assert "猫咪跳起来了" in t.text("Des")


def test_node_weight_bounds():
    with pytest.raises(ValueError):
        ToTNode("x", 1.5)
    with pytest.raises(ValueError):
        ToTTree({"Des": ToTNode("x")})


def test_contradiction_rules():
    assert contradicts("可丽饼不是法国的", "一种起源于法国的薄饼")
    assert contradicts("Crepes are not European food", "a European recipe")
    assert not contradicts("可丽饼来自法国", "一种起源于法国的薄饼")


def test_enhance_knowledge(kb_path):
    kb = KnowledgeBase.from_file(kb_path)
    t = tree([0.2] * 5, {**{d: d for d in DIMENSIONS}, "Kno": "可丽饼不是法国的。可丽饼很好吃。"})
    out = enhance_knowledge(t, kb)
    assert out.flags["enhanced"] is True
    assert out.flags["errors"] == [{"sentence": "可丽饼不是法国的。", "entity_id": "Q_crepe"}]
    assert "不是法国" not in out.text("Kno") and "起源于法国" in out.text("Kno")
    assert out.text("Des") == "Des"

    assert enhance_knowledge(t, None).flags == {"kb_unavailable": True}
    plain = tree([0.2] * 5)
    assert enhance_knowledge(plain, kb).flags["enhanced"] is False


@given(st.lists(st.floats(0, 1), min_size=5, max_size=5), st.lists(st.floats(-2, 2), min_size=5, max_size=5),
       st.floats(0.001, 1.0), st.sampled_from(["descent", "ascent"]))
def test_step_stays_in_unit_box(w, f, lr, direction):
    out = tot_weight_step(w, f, lr, direction)
    assert np.all((out >= 0) & (out <= 1))
    sign = -1 if direction == "descent" else 1
    want = np.clip(np.array(w) + sign * lr * np.array(f), 0, 1)
    assert np.array_equal(out, want)


def test_ascent_clamps_at_one_and_zero_gradient_stops():
    res = optimize_tot_weights(tree([0.5] * 5), dict.fromkeys(DIMENSIONS, 0.5),
                               TotOptimizerConfig(learning_rate=0.25, direction="ascent"))
    assert (res.reason, res.iterations) == ("clamped", 4) and np.all(res.tree.weights() == 1.0)
    res = optimize_tot_weights(tree([0.5] * 5), dict.fromkeys(DIMENSIONS, 0.0))
    assert (res.reason, res.iterations) == ("step", 1)
    res = optimize_tot_weights(tree([0.5] * 5), dict.fromkeys(DIMENSIONS, 1e-4), TotOptimizerConfig(max_iters=3))
    assert res.reason == "max_iters" and len(res.history) == 4


def test_utility_and_initial_weights():
    t = tree([0.1, 0.2, 0.3, 0.2, 0.2])
    vals = dict(zip(DIMENSIONS, [1.0, 2.0, 3.0, 4.0, 5.0]))
    assert tot_utility("c", t, vals) == pytest.approx(0.1 + 0.4 + 0.9 + 0.8 + 1.0)
    assert tot_utility("c", t, {d: (lambda s, v=v: v) for d, v in vals.items()}) == pytest.approx(3.2)
    assert weights_from_utilities(dict(zip(DIMENSIONS, [1, -1, 1, 0, 2]))) == [0.25, 0, 0.25, 0, 0.5]
    assert weights_from_utilities(dict.fromkeys(DIMENSIONS, -1.0)) == [0.2] * 5


def test_merge_and_refine_prompt():
    ct = tree([0.2] * 5, {d: "c" + d for d in DIMENSIONS})
    vt = tree([0.0, 0.0, 0.9, 0.1, 0.9], {d: "v" + d for d in DIMENSIONS})
    m = merge_comment_tot(ct, vt)
    assert [m.text(d) for d in DIMENSIONS] == ["cDes", "cEve", "vKno", "vCre", "vAud"]
    assert m.origin == "merged"
    assert refine_prompt("好评", m) == "好评" + CONNECTIVE + "vKno"  # tie 0.9/0.9 goes to Kno
    empty = tree([0.0, 0.0, 1.0, 0.0, 0.0], {**{d: d for d in DIMENSIONS}, "Kno": " "})
    assert refine_prompt(" 好评 ", empty) == "好评"


def test_run_tot_end_to_end(kb_path):
    kb = KnowledgeBase.from_file(kb_path)
    res = run_tot(VIDEO, "法式可丽饼看起来真好吃", kb, config=TotOptimizerConfig(direction="ascent"))
    assert res["refined_comment"].startswith("法式可丽饼看起来真好吃" + CONNECTIVE)
    assert res["flags"]["enhanced"] is True
    assert "起源于法国" in res["video_tree"]["Kno"]["text"]
    assert set(res["tree"]) == set(DIMENSIONS)
    assert res["optimizer"]["reason"] in ("clamped", "step", "max_iters")
