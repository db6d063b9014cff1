"""Regenerate corpus.jsonl: python tests/fixtures/make_corpus.py"""

import json
import random
from pathlib import Path

HERE = Path(__file__).parent

VIDEOS = [
    dict(video_id="v1", title="法式可丽饼的做法 French crepes", theme="food",
         description="一位厨师分享法式可丽饼的制作过程，从挑选食材到煎饼。",
         caption_text="今天教大家做法式可丽饼。先准备面粉、鸡蛋和牛奶。然后调制酱汁。最后把可丽饼煎到金黄。",
         audio_text="大家好，今天我们来做法式可丽饼，步骤很简单。",
         duration_s=96, keyframe_count=40, likes=25230, comments_count=1446, favorites=2883, shares=5243,
         created_at="2023-06-01T12:00:00Z"),
    dict(video_id="v2", title="西湖日落", theme="travel",
         description="在杭州西湖边拍到的日落，湖面波光粼粼。",
         caption_text="西湖的日落太美了。游船慢慢划过湖面。远处的雷峰塔在夕阳中发光。",
         audio_text="这里是杭州西湖，现在是傍晚六点。",
         duration_s=60, keyframe_count=35, likes=3986, comments_count=195, favorites=395, shares=255,
         created_at="2023-07-15T18:30:00+08:00"),
    dict(video_id="v3", title="猫咪第一次见到黄瓜", theme="pets",
         description="",
         caption_text="猫咪看到黄瓜吓了一跳。它跳得比桌子还高。主人笑得停不下来。",
         audio_text="哈哈哈你看它。",
         duration_s=15, keyframe_count=8, likes=120000, comments_count=8800, favorites=12000, shares=30000,
         created_at="2023-08-02T09:00:00Z"),
    dict(video_id="v4", title="钢琴演奏 月光奏鸣曲", theme="music",
         description="业余钢琴爱好者演奏贝多芬的月光奏鸣曲第一乐章。",
         caption_text="贝多芬月光奏鸣曲。第一乐章。慢板。",
         audio_text="",
         duration_s=360, keyframe_count=120, likes=860, comments_count=64, favorites=210, shares=12,
         created_at="2023-09-10T21:00:00Z"),
    dict(video_id="v5", title="街头篮球绝杀", theme="sports",
         description="周末街头篮球赛最后三秒的绝杀球。",
         caption_text="比分平了。还剩三秒。他投出了三分球。球进了！",
         audio_text="进了进了！",
         duration_s=30, keyframe_count=15, likes=45000, comments_count=2100, favorites=900, shares=4100,
         created_at="2023-10-01T16:45:00Z"),
    dict(video_id="v6", title="只有一条评论的视频", theme="life",
         description="一段普通的日常记录。", caption_text="今天天气不错。",
         audio_text="", duration_s=12, keyframe_count=5, likes=12, comments_count=6, favorites=0, shares=0,
         created_at="2023-10-02T08:00:00Z"),
    dict(video_id="v7", title="全部评论都不合格", theme="unknown",
         description="评论全被过滤的视频。", caption_text="测试视频。",
         audio_text="", duration_s=5, keyframe_count=1, likes=20, comments_count=7, favorites=1, shares=0,
         created_at="2023-10-03T08:00:00Z"),
]

COMMENTS = {
    "v1": [
        "看起来就像一件艺术品，法式可丽饼真的太香了",
        "可丽饼的酱汁是怎么调的？求配方",
        "面粉鸡蛋牛奶，简单又好吃，周末试试",
        "绝绝子！这个金黄色简直完美",
        "我上次做的可丽饼破了，原来要小火",
        "好好好",
        "这个视频是广告吧",
        "so yummy",
    ],
    "v2": [
        "西湖的日落仿佛一幅水墨画",
        "雷峰塔在夕阳里真好看",
        "去年去杭州也看到了这样的日落",
        "湖面波光粼粼，太治愈了",
        "打工人看完这个视频破防了",
        "美😍",
    ],
    "v3": [
        "猫咪：我以为是蛇啊！！",
        "跳得比桌子还高哈哈哈哈",
        "主人太坏了，别吓猫了",
        "我家猫看到黄瓜一点反应都没有",
        "这跳跃能力可以参加奥运会了",
    ],
    "v4": [
        "月光奏鸣曲第一乐章弹得很有感觉",
        "业余能弹成这样真的厉害",
        "慢板最难弹出味道，赞",
        "听着听着就像在月光下散步",
    ],
    "v5": [
        "最后三秒绝杀，太燃了！！",
        "这球进得真香",
        "街头篮球也能这么精彩",
        "他投篮的姿势好标准",
        "比分平了还敢投三分，心态真好",
    ],
    "v6": ["天气真好"],
    "v7": ["OK", "🙂🙂", "x" * 60],
}


def main():
    rng = random.Random(7)
    rows = [dict(v) for v in VIDEOS]
    n = 0
    for vid, texts in COMMENTS.items():
        for i, text in enumerate(texts):
            n += 1
            likes = int(rng.paretovariate(1.2) * 3) - 3
            c = {
                "comment_id": f"c{n:03d}",
                "video_id": vid,
                "text": text,
                "likes": max(0, likes * (len(texts) - i)),
                "replies": rng.randrange(0, 6),
            }
            if vid in ("v1", "v2", "v3", "v5"):
                c["human_labels"] = {
                    "informativeness": int(len(text) >= 10 or rng.random() < 0.2),
                    "relevance": int(i < len(texts) // 2 or rng.random() < 0.25),
                    "creativity": int(any(m in text for m in ("像", "仿佛", "绝绝子", "破防", "！！")) or rng.random() < 0.2),
                    "engagement": int(c["likes"] > 5 or rng.random() < 0.2),
                    "hot": int(i < 2),
                }
            if vid in ("v1", "v2", "v4"):
                base = 5 - min(i, 4)
                if vid == "v4":  # annotators disagree on this video
                    c["human_rating"] = [1 + (i % 5), 5 - (i % 5), 3]
                else:
                    c["human_rating"] = [base, base, max(1, base - (i % 2))]
            rows.append(c)
    with open(HERE / "corpus.jsonl", "w", encoding="utf-8") as fh:
        for r in rows:
            fh.write(json.dumps(r, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
