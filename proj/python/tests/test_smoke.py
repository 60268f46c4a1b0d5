import json
import math
import os
from pathlib import Path

import pytest

import salgan

PROFILE_DIR = Path(os.environ.get("SALGAN_PROFILE_DIR", Path(__file__).resolve().parents[2] / "profiles"))


def test_reward_cases():
    assert salgan.reward(1.0, 0.0, 0.0) == 1.0
    assert salgan.reward(0.0, 0.0, 1.0) == 0.0
    assert salgan.reward(0.5, 0.3, 0.2) == pytest.approx(0.47, abs=1e-6)


def test_schedule_endpoints():
    assert salgan.scheduled_weights(0, 99) == (1.0, -0.1)
    assert salgan.scheduled_weights(99, 99) == (0.8, -0.2)


def test_pair_counts():
    for n in range(1, 11):
        unordered, _ = salgan.pair_counts(n, n)
        assert unordered == math.comb(2 * n, 2)


def test_bleu_hand_case():
    assert salgan.bleu_forward([[4, 5, 4, 4]], [[4, 5, 6, 4]], 2) == pytest.approx(0.5, abs=1e-9)


def test_frechet_one_dimensional():
    a = [[1.0], [3.0], [2.0], [6.0]]
    b = [[x + 2.0] for [x] in a]
    assert salgan.frechet_distance(a, b) == pytest.approx(4.0, abs=1e-9)


def test_oracle_sampling_is_deterministic():
    o = salgan.Oracle(seed=3, vocab=20, seq_len=6, embed=4, hidden=4)
    first, second = o.sample(10, seed=1), o.sample(10, seed=1)
    assert first == second
    assert all(len(s) == 6 and all(0 <= t < 20 for t in s) for s in first)
    assert 0.0 < o.nll(first) < 2 * math.log(20)


def test_config_json_applies_overrides():
    cfg = json.loads(salgan.config_json(str(PROFILE_DIR / "desk.json"), ["train.rounds=3"]))
    assert cfg["model.vocab"] == 200
    assert cfg["train.rounds"] == 3


def test_errors_carry_kind():
    with pytest.raises(salgan.SalganError) as info:
        salgan.config_json(None, ["no.such_key=1"])
    assert info.value.kind == "ConfigError"


def test_cli_round_trip(tmp_path):
    out = tmp_path / "run"
    args = ["--config", str(PROFILE_DIR / "desk.json"), "--out", str(out)]
    small = ["--set", "data.n_train=200", "--set", "data.n_test=100", "--set", "pretrain.epochs=1"]
    assert salgan.run_cli(["pretrain", *args, *small]) == 0
    ckpt = salgan.load_checkpoint(str(out / "pretrain.ckpt"))
    assert ckpt["fingerprint"] != salgan.config_fingerprint(None)
    assert any(name.startswith("gen/") for name in ckpt["arrays"])
    assert salgan.run_cli(["train", "--bogus"]) == 2
