"""Model checkpoints: ``<u8 header length><JSON header><little-endian float64 arrays>``."""
import json
import logging
import struct
from pathlib import Path

import numpy as np

from observations.serializer import ObservationSpaceSerializer
from learner.exceptions import LearnerError
from learner.models import TrainConfig, TrainedModel
from learner.sac import SoftActorCritic
from learner.serializer import TrainConfigSerializer

logger = logging.getLogger(__name__)

FORMAT = "obsearch-sac/1"
_DTYPE = np.dtype("<f8")


def _networks(agent: SoftActorCritic):
    nets = {"actor": agent.actor}
    for i, (critic, target) in enumerate(zip(agent.critics, agent.targets)):
        nets[f"critic_{i}"] = critic
        nets[f"target_{i}"] = target
    return nets


def save_checkpoint(model: TrainedModel, path) -> Path:
    agent = model.agent
    nets = _networks(agent)
    header = {
        "format": FORMAT,
        "space": ObservationSpaceSerializer(model.space).data,
        "config": TrainConfigSerializer(model.config).data,
        "layer_sizes": {name: net.layer_sizes for name, net in nets.items()},
        "log_alpha": float(agent.log_alpha[0]),
        "dropout_rate": model.dropout_rate,
        "seed": model.seed,
        "steps": model.steps,
        "action_low": list(model.action_low),
        "action_high": list(model.action_high),
        "reward_history": [[int(s), float(r)] for s, r in model.reward_history],
    }
    blob = json.dumps(header).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for net in nets.values():
            for p in net.params:
                fh.write(np.ascontiguousarray(p, dtype=_DTYPE).tobytes())
    logger.info("saved checkpoint %s", path)
    return path


def load_checkpoint(path, env) -> TrainedModel:
    """Restore a model for evaluation; the replay buffer and optimizer state are not kept."""
    raw = Path(path).read_bytes()
    (length,) = struct.unpack_from("<Q", raw, 0)
    header = json.loads(raw[8:8 + length].decode("utf-8"))
    if header.get("format") != FORMAT:
        raise LearnerError(f"{path} is not an {FORMAT} checkpoint")
    space_serializer = ObservationSpaceSerializer(data=header["space"], context={"env": env})
    space_serializer.is_valid(raise_exception=True)
    space = space_serializer.save()
    config_serializer = TrainConfigSerializer(data=header["config"])
    config_serializer.is_valid(raise_exception=True)
    config: TrainConfig = config_serializer.save()

    agent = SoftActorCritic(space.total_dim, space.action_dim, config, dropout_rate=header["dropout_rate"])
    agent.log_alpha[0] = header["log_alpha"]
    arrays = np.frombuffer(raw, dtype=_DTYPE, offset=8 + length)
    offset = 0
    for name, net in _networks(agent).items():
        if net.layer_sizes != header["layer_sizes"][name]:
            raise LearnerError(f"{path}: layer sizes of {name} do not match the stored space")
        for p in net.params:
            p[...] = arrays[offset:offset + p.size].reshape(p.shape)
            offset += p.size
    if offset != arrays.size:
        raise LearnerError(f"{path}: {arrays.size - offset} trailing values after the last array")
    return TrainedModel(
        agent=agent, space=space, config=config,
        reward_history=[(int(s), float(r)) for s, r in header["reward_history"]],
        dropout_rate=header["dropout_rate"], seed=header["seed"], steps=header["steps"],
        action_low=tuple(header["action_low"]), action_high=tuple(header["action_high"]),
    )


def export_reward_history(model: TrainedModel, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    model.history_frame().to_csv(path, index=False)
    return path
