import numpy as np

from envs.base import RigidBodyEnv
from envs.kinematics import SLIDER, Link, PlanarChain
from envs.models import EnvId, EnvSpec

CART_MASS = 1.0
POLE_MASS = 0.5
POLE_LENGTH = 0.6
FORCE_GEAR = 20.0   # N per unit action
ALIVE_BONUS = 1.0
FALL_FRACTION = 0.75  # episode ends when the tip drops below this share of full height


def _pole(name):
    return Link(name=name, mass=POLE_MASS, inertia=POLE_MASS * POLE_LENGTH ** 2 / 12.0,
                axis=(0.0, 1.0), com=POLE_LENGTH / 2.0, end=POLE_LENGTH)


class CartDoublePendulumEnv(RigidBodyEnv):
    """Two uniform poles on a frictionless cart; one actuator pushes the cart.

    Bodies: cart, lower pole, upper pole. ``q = [x, phi_1, phi_2]`` with
    ``phi_2`` relative to the lower pole; all zeros is upright.
    Reward: alive bonus minus the squared shortfall of the tip height.
    """

    chain = PlanarChain(
        root=Link(name="cart", mass=CART_MASS, inertia=0.0, axis=(1.0, 0.0), com=0.0, end=0.0),
        links=(_pole("pole_1"), _pole("pole_2")),
        root_kind=SLIDER,
    )
    tip_height = 2 * POLE_LENGTH

    def __init__(self, horizon: int = 500, dt: float = 0.01, joint_damping: float = 0.0):
        super().__init__()
        self.joint_damping = joint_damping
        self.spec = EnvSpec(
            env_id=EnvId.PENDULUM,
            action_dim=1,
            joint_count=2,
            body_count=3,
            contact_site_count=0,
            root_dofs=self.chain.root_dofs,
            dt=dt,
            horizon=horizon,
            reward_description="alive bonus - (full height - tip height)^2",
            action_low=(-1.0,),
            action_high=(1.0,),
        )

    def generalized_force(self, q, qdot, action):
        force = np.zeros(self.chain.n_q)
        force[0] = FORCE_GEAR * action[0]
        force[1:] -= self.joint_damping * qdot[1:]
        return force

    def tip(self, q) -> np.ndarray:
        pos, _, _ = self.chain.point(q, 2, local=(0.0, POLE_LENGTH))
        return pos

    def reward(self, state, next_state, action):
        shortfall = self.tip_height - self.tip(next_state.q)[1]
        return ALIVE_BONUS - shortfall ** 2

    def failed(self, state):
        return self.tip(state.q)[1] < FALL_FRACTION * self.tip_height
