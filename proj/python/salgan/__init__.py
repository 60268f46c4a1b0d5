"""Python bindings for the self-adversarial text GAN lab."""

from ._core import (
    Oracle,
    SalganError,
    bleu_backward,
    bleu_forward,
    config_fingerprint,
    config_json,
    frechet_distance,
    load_checkpoint,
    pair_counts,
    reward,
    run_cli,
    scheduled_weights,
)

__all__ = [
    "Oracle",
    "SalganError",
    "bleu_backward",
    "bleu_forward",
    "config_fingerprint",
    "config_json",
    "frechet_distance",
    "load_checkpoint",
    "pair_counts",
    "reward",
    "run_cli",
    "scheduled_weights",
]
