"""Planar articulated chains: forward kinematics and equations of motion.

A chain is a root body followed by a serial list of links, each hinged at the
distal end of its parent. The root is either a horizontal slider (``q = [x, joints]``,
fixed height, no rotation) or a floating base (``q = [x, z, theta, joints]``).
Absolute link angles are linear in ``q`` (``alpha = D q``), so every point on a
body is a base translation plus a sum of rotated segments ``R(alpha_j) w_j``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from envs.exceptions import EnvError
from envs.models import BodyKinematics

SLIDER = "slider"
FLOATING = "floating"


def rotation(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def _perp(v: np.ndarray) -> np.ndarray:
    """d/dalpha of ``R(alpha) w`` expressed through ``v = R(alpha) w``."""
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


@dataclass(frozen=True)
class Link:
    name: str
    mass: float
    inertia: float
    axis: tuple[float, float]
    com: float
    end: float


@dataclass(frozen=True)
class PlanarChain:
    root: Link
    links: tuple[Link, ...]
    root_kind: str
    attach: tuple[float, float] = (0.0, 0.0)
    root_height: float = 0.0

    @property
    def root_dofs(self) -> int:
        return 1 if self.root_kind == SLIDER else 3

    @property
    def n_q(self) -> int:
        return self.root_dofs + len(self.links)

    @property
    def bodies(self) -> tuple[Link, ...]:
        return (self.root, *self.links)

    @property
    def angle_map(self) -> np.ndarray:
        """``D`` with ``alpha = D @ q`` (one row per body)."""
        n_b = len(self.bodies)
        d = np.zeros((n_b, self.n_q))
        for b in range(n_b):
            if self.root_kind == FLOATING:
                d[b, 2] = 1.0
            d[b, self.root_dofs:self.root_dofs + b] = 1.0
        return d

    def _check(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=np.float64)
        if q.shape != (self.n_q,):
            raise EnvError(f"q has shape {q.shape}, chain expects ({self.n_q},)")
        return q

    def _base(self, q: np.ndarray) -> np.ndarray:
        if self.root_kind == SLIDER:
            return np.array([q[0], self.root_height])
        return q[:2].copy()

    def _translation_jacobian(self) -> np.ndarray:
        t = np.zeros((2, self.n_q))
        t[0, 0] = 1.0
        if self.root_kind == FLOATING:
            t[1, 1] = 1.0
        return t

    def segments(self, q: np.ndarray, body: int, local: np.ndarray | None = None) -> np.ndarray:
        """Rotated segments from the root COM to a point on ``body``.

        Row ``j`` is the segment carried by body ``j``'s rotation. ``local`` is the
        point's offset along the body axis frame (defaults to the body COM).
        """
        alpha = self.angle_map @ q
        links = self.bodies
        rows = np.zeros((body + 1, 2))
        if body == 0:
            offset = np.zeros(2) if local is None else np.asarray(local, dtype=np.float64)
            rows[0] = rotation(alpha[0]) @ offset
            return rows
        rows[0] = rotation(alpha[0]) @ np.asarray(self.attach)
        for j in range(1, body):
            rows[j] = rotation(alpha[j]) @ (links[j].end * np.asarray(links[j].axis))
        if local is None:
            local = links[body].com * np.asarray(links[body].axis)
        rows[body] = rotation(alpha[body]) @ np.asarray(local, dtype=np.float64)
        return rows

    def point(self, q, body, local=None, qdot=None):
        """Position, Jacobian and velocity-product acceleration of a body point."""
        q = self._check(q)
        segs = self.segments(q, body, local)
        d = self.angle_map[:body + 1]
        pos = self._base(q) + segs.sum(axis=0)
        jac = self._translation_jacobian() + _perp(segs).T @ d
        if qdot is None:
            return pos, jac, None
        alpha_dot = d @ np.asarray(qdot, dtype=np.float64)
        bias_acc = -(alpha_dot ** 2) @ segs
        return pos, jac, bias_acc

    def body_kinematics(self, q, qdot=None) -> BodyKinematics:
        q = self._check(q)
        qdot = np.zeros_like(q) if qdot is None else self._check(qdot)
        n_b = len(self.bodies)
        com_pos, com_vel = np.zeros((n_b, 2)), np.zeros((n_b, 2))
        for b in range(n_b):
            pos, jac, _ = self.point(q, b)
            com_pos[b] = pos
            com_vel[b] = jac @ qdot
        d = self.angle_map
        return BodyKinematics(com_pos=com_pos, com_vel=com_vel, body_rot=d @ q, body_omega=d @ qdot)

    def dynamics(self, q, qdot, generalized_force, gravity: float = 9.81):
        """``M qddot = f + G - h`` solved for ``qddot``."""
        q, qdot = self._check(q), self._check(qdot)
        d = self.angle_map
        mass = np.zeros((self.n_q, self.n_q))
        rhs = np.asarray(generalized_force, dtype=np.float64).copy()
        for b, link in enumerate(self.bodies):
            _, jac, bias_acc = self.point(q, b, qdot=qdot)
            mass += link.mass * jac.T @ jac + link.inertia * np.outer(d[b], d[b])
            rhs += link.mass * jac.T @ (np.array([0.0, -gravity]) - bias_acc)
        return np.linalg.solve(mass, rhs)

    def energy(self, q, qdot, gravity: float = 9.81) -> float:
        kin = self.body_kinematics(q, qdot)
        total = 0.0
        for b, link in enumerate(self.bodies):
            total += 0.5 * link.mass * kin.com_vel[b] @ kin.com_vel[b]
            total += 0.5 * link.inertia * kin.body_omega[b] ** 2
            total += link.mass * gravity * kin.com_pos[b, 1]
        return float(total)
