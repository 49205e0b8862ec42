"""Channel registries: the full candidate pool an environment can expose."""
from __future__ import annotations

from typing import TYPE_CHECKING

from observations.models import ChannelGroup as G
from observations.models import ChannelSource as S
from observations.models import ChannelSpec

if TYPE_CHECKING:
    from envs.models import EnvSpec


class RegistryBuilder:
    """Appends channels in insertion order and stamps ``order`` on each."""

    def __init__(self):
        self._specs: list[ChannelSpec] = []

    def add(self, name, group, dim, key, index=None, units=(), source=S.DERIVED):
        if dim < 1:
            return self
        self._specs.append(ChannelSpec(
            name=name, group=group, dim=dim, key=key, index=index,
            units=tuple(units), source=source, order=len(self._specs),
        ))
        return self

    def build(self) -> list[ChannelSpec]:
        return list(self._specs)


def rigid_body_channels(spec: EnvSpec) -> list[ChannelSpec]:
    """Registry for a planar articulated body.

    Positions are in meters, angles in radians. ``C_i``/``Cdot_i``/``r_i`` are
    1-indexed like the body list; body 1 is the root.
    """
    joints, bodies = spec.joint_count, spec.body_count
    b = RegistryBuilder()
    b.add("q_jt", G.JOINT_POSITION, joints, "q_jt", units=("rad",) * joints, source=S.RAW_SENSOR)
    b.add("qdot_jt", G.JOINT_VELOCITY, joints, "qdot_jt", units=("rad/s",) * joints, source=S.RAW_SENSOR)
    b.add("theta", G.BODY_ROTATION, 1, "theta", units=("rad",), source=S.RAW_SENSOR)
    b.add("theta_dot", G.BODY_ROTATION, 1, "theta_dot", units=("rad/s",), source=S.RAW_SENSOR)
    b.add("root_acc", G.ROOT_ACCELERATION, 2, "root_acc", units=("m/s^2",) * 2, source=S.RAW_SENSOR)
    b.add("q", G.JOINT_POSITION, spec.root_dofs + joints, "q", source=S.ESTIMATED)
    b.add("qdot", G.JOINT_VELOCITY, spec.root_dofs + joints, "qdot", source=S.ESTIMATED)
    b.add("z", G.ROOT_POSITION, 1, "z", units=("m",), source=S.ESTIMATED)
    b.add("x", G.EXTRA, 1, "x", units=("m",), source=S.ESTIMATED)
    b.add("C_1", G.ROOT_POSITION, 2, "com_pos", index=0, units=("m", "m"), source=S.ESTIMATED)
    b.add("Cdot_1", G.ROOT_VELOCITY, 2, "com_vel", index=0, units=("m/s", "m/s"), source=S.ESTIMATED)
    for i in range(1, bodies):
        b.add(f"C_{i + 1}", G.CARTESIAN_POSITION, 2, "com_pos", index=i, units=("m", "m"))
    for i in range(1, bodies):
        b.add(f"Cdot_{i + 1}", G.CARTESIAN_VELOCITY, 2, "com_vel", index=i, units=("m/s", "m/s"))
    for i in range(bodies):
        b.add(f"r_{i + 1}", G.BODY_ROTATION, 1, "body_rot", index=i, units=("rad",))
    b.add("contacts", G.CONTACT, spec.contact_site_count, "contacts", source=S.RAW_SENSOR)
    b.add("prev_action", G.PREVIOUS_ACTION, spec.action_dim, "prev_action")
    b.add("time", G.EXTRA, 1, "extra", index="time", units=("s",))
    b.add("frame", G.EXTRA, 1, "extra", index="frame")
    b.add("random", G.EXTRA, 1, "extra", index="random")
    return b.build()
