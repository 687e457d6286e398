"""UAV kinematics on the rotating circular patrol formation.

Connected UAVs track the commanded phase schedule: within the deviation band
they fly the circle tangentially at patrol speed, outside it they cut straight
toward the commanded point at maximum speed. Disconnected UAVs dead-reckon:
the commanded phase freezes and they continue straight at patrol speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class FormationSpec:
    center: np.ndarray        # (3,) circle center, z = patrol height
    radius: float
    angular_speed: float      # rad/s, radius * angular_speed = patrol speed

    @classmethod
    def from_config(cls, cfg) -> "FormationSpec":
        center = np.array([cfg.gcs_position[0], cfg.gcs_position[1],
                           cfg.patrol_height], dtype=float)
        return cls(center=center, radius=cfg.patrol_radius,
                   angular_speed=cfg.omega)

    @property
    def v_pat(self) -> float:
        return self.radius * self.angular_speed


@dataclass(frozen=True)
class UavKinematics:
    position: np.ndarray      # (3,) meters
    speed: float              # m/s
    heading: float            # radians
    phase: float              # radians, current angular station
    target_phase: float       # radians, last phase received from leader/GCS


def ideal_position(spec: FormationSpec, theta: float) -> np.ndarray:
    """Point on the formation circle at phase angle theta."""
    return spec.center + spec.radius * np.array(
        [math.cos(theta), math.sin(theta), 0.0])


def advance_phase(theta0: float, omega: float, t: float) -> float:
    return (theta0 + omega * t) % TWO_PI


def initial_kinematics(spec: FormationSpec, theta: float) -> UavKinematics:
    return UavKinematics(
        position=ideal_position(spec, theta),
        speed=spec.v_pat,
        heading=(theta + math.pi / 2.0) % TWO_PI,
        phase=theta % TWO_PI,
        target_phase=theta % TWO_PI,
    )


def step_kinematics(kin: UavKinematics, spec: FormationSpec, connected: bool,
                    dt: float, v_max: float,
                    deviation_threshold: float) -> UavKinematics:
    """Advance one UAV by dt seconds under the movement rule."""
    v_pat = spec.v_pat
    if connected:
        target = advance_phase(kin.target_phase, spec.angular_speed, dt)
        goal = ideal_position(spec, target)
        offset = goal - kin.position
        deviation = math.sqrt(float(offset @ offset))
        if deviation > deviation_threshold:
            # Catch-up: cut straight toward the commanded point.
            heading = math.atan2(offset[1], offset[0]) % TWO_PI
            speed = v_max
        else:
            heading = (target + math.pi / 2.0) % TWO_PI
            speed = v_pat
    else:
        # No commands received: freeze the schedule, keep flying straight.
        target = kin.target_phase
        heading = kin.heading
        speed = v_pat
    speed = min(max(speed, v_pat), v_max)
    direction = np.array([math.cos(heading), math.sin(heading), 0.0])
    position = kin.position + speed * dt * direction
    return UavKinematics(position=position, speed=speed, heading=heading,
                         phase=target, target_phase=target)


def deviation_from_ideal(kin: UavKinematics, spec: FormationSpec) -> float:
    diff = kin.position - ideal_position(spec, kin.target_phase)
    return math.sqrt(float(diff @ diff))


def check_separation(positions, d_min: float):
    """All pairs (i, j), i < j, closer than d_min; empty means the constraint holds."""
    pts = np.asarray(positions, dtype=float)
    violations = []
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if np.linalg.norm(pts[i] - pts[j]) < d_min:
                violations.append((i, j))
    return violations
