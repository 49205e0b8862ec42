import numpy as np

from envs.base import RigidBodyEnv
from envs.kinematics import FLOATING, Link, PlanarChain
from envs.models import EnvId, EnvSpec

TORQUE_GEAR = 200.0
ALIVE_BONUS = 1.0
CTRL_COST = 1e-3
HEALTHY_Z = 0.7
HEALTHY_PITCH = 0.2

# Passive joint spring/damper, N*m/rad and N*m*s/rad.
JOINT_STIFFNESS = 150.0
JOINT_DAMPING = 5.0

# Penalty contact on the heel and toe of the foot.
CONTACT_STIFFNESS = 2.0e4   # N/m
CONTACT_DAMPING = 500.0     # N*s/m
FRICTION_DAMPING = 1000.0   # N*s/m, tangential
FRICTION_COEF = 1.0
CONTACT_THRESHOLD = 0.01    # m
HEEL, TOE = -0.13, 0.26

TORSO_LENGTH, THIGH_LENGTH, LEG_LENGTH = 0.4, 0.45, 0.5


def _rod(name, mass, length, axis=(0.0, -1.0)):
    return Link(name=name, mass=mass, inertia=mass * length ** 2 / 12.0,
                axis=axis, com=length / 2.0, end=length)


class HopperEnv(RigidBodyEnv):
    """Planar one-legged hopper: torso, thigh, leg and a foot touching the ground.

    ``q = [x, z, theta, hip, knee, ankle]`` with ``(x, z)`` the torso COM. The foot
    spans heel to toe around the ankle; both ends carry penalty springs and a single
    contact flag reports whether either is within ``CONTACT_THRESHOLD`` of the ground.
    Reward: forward velocity + alive bonus - 0.001 |a|^2.
    """

    chain = PlanarChain(
        root=Link(name="torso", mass=3.5, inertia=3.5 * TORSO_LENGTH ** 2 / 12.0,
                  axis=(0.0, 1.0), com=0.0, end=0.0),
        links=(
            _rod("thigh", 3.9, THIGH_LENGTH),
            _rod("leg", 2.7, LEG_LENGTH),
            Link(name="foot", mass=5.1, inertia=5.1 * (TOE - HEEL) ** 2 / 12.0,
                 axis=(1.0, 0.0), com=(HEEL + TOE) / 2.0, end=TOE),
        ),
        root_kind=FLOATING,
        attach=(0.0, -TORSO_LENGTH / 2.0),
    )
    substeps = 10

    def __init__(self, horizon: int = 1000, dt: float = 0.01):
        super().__init__()
        self.spec = EnvSpec(
            env_id=EnvId.HOPPER,
            action_dim=3,
            joint_count=3,
            body_count=4,
            contact_site_count=1,
            root_dofs=self.chain.root_dofs,
            dt=dt,
            horizon=horizon,
            reward_description="forward velocity + alive bonus - 0.001 |a|^2",
            action_low=(-1.0,) * 3,
            action_high=(1.0,) * 3,
        )

    def nominal_q(self):
        q = np.zeros(self.chain.n_q)
        q[1] = LEG_LENGTH + THIGH_LENGTH + TORSO_LENGTH / 2.0
        return q

    def foot_points(self, q):
        """``[(position, jacobian)]`` for heel and toe."""
        return [self.chain.point(q, 3, local=(s, 0.0))[:2] for s in (HEEL, TOE)]

    def contact_forces(self, q, qdot) -> np.ndarray:
        force = np.zeros(self.chain.n_q)
        for pos, jac in self.foot_points(q):
            if pos[1] >= 0.0:
                continue
            vel = jac @ qdot
            normal = max(0.0, -CONTACT_STIFFNESS * pos[1] - CONTACT_DAMPING * vel[1])
            limit = FRICTION_COEF * normal
            tangent = float(np.clip(-FRICTION_DAMPING * vel[0], -limit, limit))
            force += jac.T @ np.array([tangent, normal])
        return force

    def generalized_force(self, q, qdot, action):
        force = self.contact_forces(q, qdot)
        joints = slice(self.chain.root_dofs, None)
        force[joints] += TORQUE_GEAR * action
        force[joints] -= JOINT_STIFFNESS * q[joints] + JOINT_DAMPING * qdot[joints]
        return force

    def contact_flags(self, q):
        height = min(pos[1] for pos, _ in self.foot_points(q))
        return np.array([int(height <= CONTACT_THRESHOLD)])

    def reward(self, state, next_state, action):
        forward = next_state.com_vel[0, 0]
        return forward + ALIVE_BONUS - CTRL_COST * float(action @ action)

    def failed(self, state):
        return state.com_pos[0, 1] < HEALTHY_Z or abs(state.body_rot[0]) > HEALTHY_PITCH
