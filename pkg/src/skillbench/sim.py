"""Deterministic 2D vehicle: unicycle kinematics driven by normalized commands.

uy commands forward speed, ux commands turn rate (sign configurable, default
matches a wheelchair joystick: push right, turn clockwise).  Explicit Euler
at the input sample rate; no inertia, slip, or latency, so stored sessions
replay bit-for-bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .model import CommandVector, Pose, TrajectorySample, wrap_angle

#: Convex pentagon footprint, 0.8 m long x 0.7 m wide, apex marking the front.
DEFAULT_FOOTPRINT: tuple[tuple[float, float], ...] = (
    (-0.4, -0.35),
    (0.15, -0.35),
    (0.4, 0.0),
    (0.15, 0.35),
    (-0.4, 0.35),
)


@dataclass(frozen=True)
class SimParams:
    v_max: float = 1.0
    omega_max: float = math.pi / 2.0
    dt: float = 0.02
    turn_sign: float = -1.0
    footprint: tuple[tuple[float, float], ...] = DEFAULT_FOOTPRINT

    def __post_init__(self) -> None:
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.turn_sign not in (-1.0, 1.0):
            raise ValueError("turn_sign must be -1 or +1")

    @property
    def footprint_radius(self) -> float:
        return max(math.hypot(x, y) for x, y in self.footprint)


def step(pose: Pose, u: CommandVector, params: SimParams) -> Pose:
    """One Euler step; total on valid inputs, heading kept wrapped."""
    v = u.uy * params.v_max
    omega = params.turn_sign * u.ux * params.omega_max
    dt = params.dt
    return Pose(
        pose.x + v * math.cos(pose.heading) * dt,
        pose.y + v * math.sin(pose.heading) * dt,
        wrap_angle(pose.heading + omega * dt),
    )


def run_trace(
    pose0: Pose,
    commands: Sequence[CommandVector],
    params: SimParams,
    duration: Optional[float] = None,
) -> list[TrajectorySample]:
    """Integrate a time-ordered command stream with zero-order hold.

    A command takes effect at its timestamp and holds until the next one;
    one sample is emitted per dt.  Samples carry in_bounds=True and no
    segment id -- course annotation happens separately.
    """
    if not commands:
        return []
    last = -math.inf
    for c in commands:
        if c.t < last:
            raise ValueError("commands must be time-ordered")
        last = c.t
    if duration is None:
        duration = commands[-1].t
    n_steps = round(duration / params.dt)
    samples: list[TrajectorySample] = []
    pose = pose0
    held = CommandVector(0.0, 0.0, 0.0)
    ptr = 0
    for k in range(1, n_steps + 1):
        t_start = (k - 1) * params.dt
        while ptr < len(commands) and commands[ptr].t <= t_start + 1e-12:
            held = commands[ptr]
            ptr += 1
        pose = step(pose, held, params)
        samples.append(
            TrajectorySample(
                t=k * params.dt,
                pose=pose,
                command=held,
                v=abs(held.uy) * params.v_max,
                segment_id=None,
                in_bounds=True,
            )
        )
    return samples


def sim_to_dict(params: SimParams) -> dict:
    return {
        "v_max": params.v_max,
        "omega_max": params.omega_max,
        "dt": params.dt,
        "turn_sign": params.turn_sign,
        "footprint": [list(v) for v in params.footprint],
    }


def sim_from_dict(d: dict) -> SimParams:
    return SimParams(
        v_max=d["v_max"],
        omega_max=d["omega_max"],
        dt=d["dt"],
        turn_sign=d.get("turn_sign", -1.0),
        footprint=tuple(tuple(v) for v in d["footprint"]),
    )
