# SPDX-License-Identifier: Apache-2.0
# Copyright 2026 The ACT-VAE Authors.
"""Action-conditioned temporal VAE for 2-D pose sequences."""

from ._core import (
    Checkpoint,
    CheckpointError,
    Dataset,
    ModelConfig,
    SchemaError,
    TrainingAborted,
    cli,
    diversity_std,
    kl_to_standard_normal,
    l2_best_of_k,
    resume,
    train,
)

__all__ = [
    "Checkpoint",
    "CheckpointError",
    "Dataset",
    "ModelConfig",
    "SchemaError",
    "TrainingAborted",
    "cli",
    "diversity_std",
    "kl_to_standard_normal",
    "l2_best_of_k",
    "resume",
    "train",
]
