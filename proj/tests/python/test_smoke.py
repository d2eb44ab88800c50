import json

import pytest

import coldwarm


def toy_rows():
    rows = []
    t = 0
    for u in range(12):
        for i in range(6):
            if (u + i) % 3 != 0:
                t += 1
                rows.append((f"u{u}", f"i{i}", t))
    return rows


def test_stats():
    s = coldwarm.dataset_stats([("a", "x", 1), ("a", "y", 2), ("b", "x", 3)])
    assert s["users"] == 2
    assert s["items"] == 2
    assert s["interactions"] == 3
    assert s["density"] == pytest.approx(0.75)


def test_pcore_drops_sparse_users():
    rows = [("a", "x", 1), ("a", "y", 2), ("b", "x", 3), ("b", "y", 4), ("c", "z", 5)]
    assert coldwarm.pcore_size(rows, 2)["users"] == 2


def test_step_curve_threshold():
    curve = {n: (1.0 if n >= 10 else 0.0) for n in range(7, 14)}
    r = coldwarm.detect_threshold(curve, window=3)
    assert r["threshold"] == 10
    assert r["window"] == (8, 10)
    assert r["verdict"] == "shift"
    flat = coldwarm.detect_threshold({n: 0.2 for n in range(1, 8)}, window=3)
    assert flat["threshold"] is None
    assert flat["verdict"] == "no_positive_shift"


def test_window_slopes_linear():
    slopes = coldwarm.window_slopes({n: 2.0 * n for n in range(1, 6)}, 3)
    assert [s[2] for s in slopes] == pytest.approx([2.0, 2.0, 2.0])


def test_split_summary():
    s = coldwarm.split_summary(toy_rows(), q=0.8, val_fraction=0.2, seed=3)
    assert s["test_users"] >= 1
    assert s["train_events"] > 0


def test_model_recommend_filters_history():
    model = coldwarm.Model("itemknn", toy_rows(), {"k": 3})
    assert model.n_items == 6
    recs = model.recommend(["i1", "i2"], k=3)
    assert len(recs) == 3
    assert "i1" not in recs and "i2" not in recs


def test_confidence_interval_of_constant():
    low, high = coldwarm.confidence_interval([0.4] * 20)
    assert low == high == pytest.approx(0.4)


def test_errors():
    with pytest.raises(coldwarm.DataError):
        coldwarm.dataset_stats([])
    with pytest.raises(coldwarm.ConfigError):
        coldwarm.Model("ease", toy_rows(), {"lambda": -1.0})
    with pytest.raises(coldwarm.ConfigError):
        coldwarm.run_stats("/nonexistent/config.json")


def test_run_stats_from_config(tmp_path):
    data = tmp_path / "log.csv"
    data.write_text("user,item,timestamp\n" + "".join(f"{u},{i},{t}\n" for u, i, t in toy_rows()))
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"dataset": {"path": str(data), "name": "toy"}}))
    s = coldwarm.run_stats(str(config), str(tmp_path / "out"))
    assert s["interactions"] == len(toy_rows())
