"""One-episode trajectory dumps, the only rendering the environments offer."""
import logging
from pathlib import Path

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


def rollout(env, policy=None, seed: int = 0, max_steps: int | None = None):
    """Run one episode; ``policy(state) -> action`` defaults to zero action."""
    state = env.reset(seed)
    zero = np.zeros(env.spec.action_dim)
    transitions = []
    for _ in range(max_steps or env.spec.horizon):
        action = zero if policy is None else policy(state)
        transition = env.step(state, action)
        transitions.append(transition)
        state = transition.next_state
        if transition.done:
            break
    return transitions


def trajectory_frame(transitions) -> pd.DataFrame:
    rows = []
    for tr in transitions:
        s = tr.next_state
        row = {"t": s.t, "reward": tr.reward, "done_reason": tr.done_reason or ""}
        row.update({f"q_{i}": v for i, v in enumerate(s.q)})
        row.update({f"qdot_{i}": v for i, v in enumerate(s.qdot)})
        row.update({f"a_{i}": v for i, v in enumerate(tr.action)})
        row.update({f"contact_{i}": int(v) for i, v in enumerate(s.contacts)})
        rows.append(row)
    return pd.DataFrame(rows)


def dump_trajectory(env, path, policy=None, seed: int = 0, max_steps: int | None = None) -> pd.DataFrame:
    """Write generalized coordinates, actions, rewards and contact flags of one episode to CSV."""
    frame = trajectory_frame(rollout(env, policy, seed, max_steps))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    logger.info("wrote %d steps of %s to %s", len(frame), env.spec.env_id, path)
    return frame
