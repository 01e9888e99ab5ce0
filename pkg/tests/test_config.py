"""Strict JSON config schema: defaults, unknown keys, typed errors."""

import json

import numpy as np
import pytest

from jointrec import ConfigError, MissingFile, load_config, parse_config


def test_empty_document_uses_defaults():
    cfg = parse_config({})
    assert cfg.data_seed == 0
    assert cfg.synth.emotion_labels == ("neutral", "happy", "sad", "angry")
    assert cfg.synth.intent_labels == ("inform", "question", "complain", "agree")
    assert cfg.synth.dims == {"audio": 24, "video": 20, "text": 16}
    assert cfg.train.epochs == 10 and cfg.train.batch_size == 16
    assert cfg.train.top_k == 3 and cfg.ensemble_top_k == 3
    np.testing.assert_array_equal(cfg.synth.counts["train"],
                                  np.full((4, 4), 10))
    np.testing.assert_array_equal(cfg.synth.counts["val"], np.full((4, 4), 4))


@pytest.mark.parametrize("raw,fragment", [
    ({"bogus": {}}, "bogus"),
    ({"data": {"zeed": 1}}, "data.zeed"),
    ({"data": {"dims": {"aural": 4}}}, "data.dims.aural"),
    ({"data": {"counts": {"dev": 4}}}, "data.counts.dev"),
    ({"model": {"layers": 2}}, "model.layers"),
    ({"loss": {"focus": 2.0}}, "loss.focus"),
    ({"train": {"lr": 0.1}}, "train.lr"),
    ({"train": {"augment": {"ratio": 0.5}}}, "train.augment.ratio"),
    ({"ensemble": {"k": 3}}, "ensemble.k"),
])
def test_unknown_keys_are_fatal_with_dotted_path(raw, fragment):
    with pytest.raises(ConfigError) as err:
        parse_config(raw)
    assert fragment in str(err.value)


@pytest.mark.parametrize("raw", [
    {"data": {"seed": True}},          # bool is not an integer here
    {"data": {"seed": "7"}},
    {"train": {"epochs": 2.5}},
    {"train": {"use_swfc": 1}},
    {"loss": {"tau": "warm"}},
    {"data": {"emotion_labels": []}},
    {"data": {"emotion_labels": ["ok", 3]}},
    {"data": {"seq_len": [8]}},
    {"data": {"seq_len": [8, "x"]}},
    {"data": {"seq_len": [True, False]}},
    {"data": {"counts": {"train": True}}},
    {"data": {"counts": {"train": -1}}},
    {"data": {"counts": "lots"}},
    {"model": "wide"},
    [],
])
def test_type_errors_rejected(raw):
    with pytest.raises(ConfigError):
        parse_config(raw)


def test_count_scalar_expands_to_full_grid():
    cfg = parse_config({"data": {"emotion_labels": ["a", "b"],
                                 "intent_labels": ["x", "y", "z"],
                                 "counts": {"train": 5}}})
    np.testing.assert_array_equal(cfg.synth.counts["train"], np.full((2, 3), 5))


def test_count_matrix_taken_verbatim():
    grid = [[4, 0], [1, 3]]
    cfg = parse_config({"data": {"emotion_labels": ["a", "b"],
                                 "intent_labels": ["x", "y"],
                                 "counts": {"train": grid, "val": 2}}})
    np.testing.assert_array_equal(cfg.synth.counts["train"], np.asarray(grid))


def test_count_matrix_shape_must_match_labels():
    with pytest.raises(ConfigError):
        parse_config({"data": {"emotion_labels": ["a", "b"],
                               "intent_labels": ["x", "y"],
                               "counts": {"train": [[1, 2, 3], [4, 5, 6]]}}})


@pytest.mark.parametrize("raw", [
    {"model": {"dropout_p": 1.5}},
    {"model": {"h": 10, "fusion_heads": 4}},
    {"loss": {"tau": 0.0}},
    {"loss": {"gamma": -1.0}},
    {"loss": {"w_max": 0.0}},
    {"train": {"augment": {"target_ratio": 0.0}}},
    {"train": {"augment": {"jitter_sigma": -0.1}}},
    {"train": {"augment": {"task": "mood"}}},
    {"train": {"batch_size": 1}},  # contrastive term needs pairs
    {"ensemble": {"top_k": 0}},
    {"data": {"separation": -2.0}},
])
def test_out_of_range_values_rejected(raw):
    with pytest.raises(ConfigError):
        parse_config(raw)


def test_batch_size_one_allowed_without_contrastive_term():
    cfg = parse_config({"train": {"batch_size": 1, "use_swfc": False}})
    assert cfg.train.batch_size == 1


def test_ensemble_top_k_feeds_training_retention():
    cfg = parse_config({"ensemble": {"top_k": 5}})
    assert cfg.train.top_k == 5 and cfg.ensemble_top_k == 5


def test_seed_override_helpers():
    cfg = parse_config({"data": {"seed": 1}, "train": {"seed": 2}})
    bumped = cfg.with_data_seed(9).with_train_seed(11)
    assert (bumped.data_seed, bumped.train.seed) == (9, 11)
    assert (cfg.data_seed, cfg.train.seed) == (1, 2)
    assert bumped.synth is cfg.synth


def test_load_config_paths(tmp_path):
    good = tmp_path / "run.json"
    good.write_text(json.dumps({"train": {"epochs": 3}}))
    assert load_config(good).train.epochs == 3
    with pytest.raises(MissingFile):
        load_config(tmp_path / "absent.json")
    bad = tmp_path / "broken.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)
