"""Save and restore a :class:`Trainer` so a resumed run continues bit-for-bit.

A checkpoint is a single ``.npz``: network weights, optimiser moments, the
replay buffer and the training log as arrays, plus one JSON string holding
configs, counters and the bit-generator states of the acting and update
streams.
"""
from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from ..env import RelayEnv
from .sac import SacConfig
from .train import TrainConfig, Trainer, TrainLog

FORMAT_VERSION = 1
_META = "__meta__"


def _config_dict(cfg) -> dict:
    return json.loads(json.dumps(dataclasses.asdict(cfg)))


def save_checkpoint(trainer: Trainer, path: str | Path, extra: dict | None = None) -> Path:
    path = Path(path)
    arrays: dict[str, np.ndarray] = {}
    arrays.update({f"agent/{k}": v for k, v in trainer.agent.state_arrays().items()})
    arrays.update(trainer.buffer.state_arrays("buffer"))
    arrays.update(trainer.log.to_arrays("log"))
    meta = {
        "format_version": FORMAT_VERSION,
        "agent_kind": trainer.agent_kind,
        "agent_config": _config_dict(trainer.agent_config),
        "train_config": _config_dict(trainer.train_config),
        "seed": trainer.seed,
        "episode": trainer.episode,
        "total_steps": trainer.total_steps,
        "rng_act": trainer.rng_act.bit_generator.state,
        "rng_update": trainer.rng_update.bit_generator.state,
        "extra": extra or {},
    }
    arrays[_META] = np.array(json.dumps(meta))
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return path


def read_metadata(path: str | Path) -> dict:
    with np.load(path, allow_pickle=False) as data:
        return json.loads(str(data[_META]))


def load_checkpoint(path: str | Path, env: RelayEnv) -> Trainer:
    """Rebuild the trainer around ``env``; the env itself carries no learnt state."""
    with np.load(path, allow_pickle=False) as data:
        arrays = {k: data[k] for k in data.files}
    meta = json.loads(str(arrays.pop(_META)))
    if meta.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format {meta.get('format_version')!r}")
    trainer = Trainer(env, meta["agent_kind"], SacConfig(**meta["agent_config"]),
                      TrainConfig(**meta["train_config"]), meta["seed"])
    trainer.agent.load_arrays({k[len("agent/"):]: v for k, v in arrays.items() if k.startswith("agent/")})
    trainer.buffer.load_arrays(arrays, "buffer")
    trainer.log = TrainLog.from_arrays(arrays, "log")
    trainer.episode = int(meta["episode"])
    trainer.total_steps = int(meta["total_steps"])
    trainer.rng_act.bit_generator.state = meta["rng_act"]
    trainer.rng_update.bit_generator.state = meta["rng_update"]
    return trainer
