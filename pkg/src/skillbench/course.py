"""Course geometry: square and curved loops, corridors, containment, clipping.

A course is an ordered chain of segments, each inflated by the corridor
half-width to form the in-bounds region (capsules around lines, annular
sectors around arcs, discs around turn-in-place corners).  Boundary points
count as in-bounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .model import ConfigError, Pose, TrajectorySample, wrap_angle

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Line:
    p0: tuple[float, float]
    p1: tuple[float, float]

    @property
    def length(self) -> float:
        return math.dist(self.p0, self.p1)

    @property
    def start(self) -> tuple[float, float]:
        return self.p0

    @property
    def end(self) -> tuple[float, float]:
        return self.p1


@dataclass(frozen=True)
class Arc:
    """Circle arc from phi0 sweeping dphi (signed; positive = CCW)."""

    center: tuple[float, float]
    radius: float
    phi0: float
    dphi: float

    @property
    def length(self) -> float:
        return self.radius * abs(self.dphi)

    def point_at(self, frac: float) -> tuple[float, float]:
        phi = self.phi0 + frac * self.dphi
        return (
            self.center[0] + self.radius * math.cos(phi),
            self.center[1] + self.radius * math.sin(phi),
        )

    @property
    def start(self) -> tuple[float, float]:
        return self.point_at(0.0)

    @property
    def end(self) -> tuple[float, float]:
        return self.point_at(1.0)

    def tangent_at(self, frac: float) -> float:
        phi = self.phi0 + frac * self.dphi
        return wrap_angle(phi + math.copysign(math.pi / 2.0, self.dphi))


@dataclass(frozen=True)
class Spin:
    """Turn-in-place zone: heading change dphi at a fixed point, zero travel."""

    at: tuple[float, float]
    dphi: float

    @property
    def length(self) -> float:
        return 0.0

    @property
    def start(self) -> tuple[float, float]:
        return self.at

    @property
    def end(self) -> tuple[float, float]:
        return self.at


Geometry = Union[Line, Arc, Spin]


@dataclass(frozen=True)
class Segment:
    id: int
    geometry: Geometry
    travel: str = "forward"  # driving gear: forward | backward

    def __post_init__(self) -> None:
        if self.travel not in ("forward", "backward"):
            raise ConfigError(f"bad travel {self.travel!r}")
        if not isinstance(self.geometry, Spin) and self.geometry.length <= 0.0:
            raise ConfigError(f"segment {self.id} has zero length")

    @property
    def length(self) -> float:
        return self.geometry.length

    @property
    def is_spin(self) -> bool:
        return isinstance(self.geometry, Spin)


@dataclass(frozen=True)
class CourseSpec:
    kind: str  # square | curved
    segments: tuple[Segment, ...]
    corridor_half_width: float
    visibility_radius: float
    start_pose: Pose
    params: dict = None  # builder parameters, for serialization

    def __post_init__(self) -> None:
        if self.corridor_half_width <= 0.0:
            raise ConfigError("corridor_half_width must be positive")
        for a, b in zip(self.segments, self.segments[1:] + self.segments[:1]):
            if math.dist(a.geometry.end, b.geometry.start) > 1e-9:
                raise ConfigError(f"segments {a.id}->{b.id} do not connect")

    def path_segments(self) -> tuple[Segment, ...]:
        """Segments with translation (lines and arcs), excluding spin zones."""
        return tuple(s for s in self.segments if not s.is_spin)

    def require_footprint_fits(self, footprint: Sequence[tuple[float, float]]) -> None:
        r = max(math.hypot(x, y) for x, y in footprint)
        if r >= self.corridor_half_width:
            raise ConfigError(
                f"footprint radius {r:.3f} m must be under the corridor "
                f"half-width {self.corridor_half_width:.3f} m"
            )


# ---------------------------------------------------------------------------
# Builders


def build_square_course(
    side: float = 10.0,
    half_width: float = 1.0,
    visibility_radius: float = 3.0,
) -> CourseSpec:
    """Closed square loop: four full-length sides joined by four
    turn-in-place corners, exactly two 90-degree lefts and two rights.

    The first two sides are driven forward, the last two backward, which is
    what forces the alternating corner directions.
    """
    if side <= 4.0 * half_width:
        raise ConfigError("side must exceed four corridor half-widths")
    s = side
    corners = [(0.0, 0.0), (s, 0.0), (s, s), (0.0, s)]
    segments: list[Segment] = []
    travels = ["forward", "forward", "backward", "backward"]
    # Corner heading change: from this side's driving heading to the next's.
    headings = [0.0, math.pi / 2.0, 0.0, math.pi / 2.0]
    for i in range(4):
        segments.append(
            Segment(
                id=2 * i,
                geometry=Line(corners[i], corners[(i + 1) % 4]),
                travel=travels[i],
            )
        )
        turn = wrap_angle(headings[(i + 1) % 4] - headings[i])
        segments.append(
            Segment(id=2 * i + 1, geometry=Spin(corners[(i + 1) % 4], turn))
        )
    return CourseSpec(
        kind="square",
        segments=tuple(segments),
        corridor_half_width=half_width,
        visibility_radius=visibility_radius,
        start_pose=Pose(0.0, 0.0, 0.0),
        params={"side": side, "half_width": half_width, "visibility_radius": visibility_radius},
    )


def build_curved_course(
    r_long: float = 6.0,
    r_small: float = 2.0,
    half_width: float = 1.0,
    visibility_radius: float = 3.0,
    long_sweep_deg: float = 120.0,
    small_sweep_deg: float = 60.0,
) -> CourseSpec:
    """Closed smooth loop of two long and two small arcs, tangent-continuous.

    Each half of the chain (one long + one small arc) must turn exactly 180
    degrees; the second half is then the point reflection of the first, which
    closes the loop exactly.
    """
    if r_small <= half_width:
        raise ConfigError("r_small must exceed the corridor half-width")
    if r_long < r_small:
        raise ConfigError("r_long must be >= r_small")
    if abs(long_sweep_deg + small_sweep_deg - 180.0) > 1e-9:
        raise ConfigError("long and small sweeps must sum to 180 degrees")
    sweeps = [math.radians(long_sweep_deg), math.radians(small_sweep_deg)] * 2
    radii = [r_long, r_small] * 2
    segments: list[Segment] = []
    px, py, heading = 0.0, 0.0, 0.0
    for i, (r, beta) in enumerate(zip(radii, sweeps)):
        cx = px + r * math.cos(heading + math.pi / 2.0)
        cy = py + r * math.sin(heading + math.pi / 2.0)
        phi0 = math.atan2(py - cy, px - cx)
        segments.append(Segment(id=i, geometry=Arc((cx, cy), r, phi0, beta)))
        phi1 = phi0 + beta
        px = cx + r * math.cos(phi1)
        py = cy + r * math.sin(phi1)
        heading += beta
    if math.dist((px, py), (0.0, 0.0)) > 1e-9:
        raise ConfigError("curved course failed to close")
    return CourseSpec(
        kind="curved",
        segments=tuple(segments),
        corridor_half_width=half_width,
        visibility_radius=visibility_radius,
        start_pose=Pose(0.0, 0.0, 0.0),
        params={
            "r_long": r_long,
            "r_small": r_small,
            "half_width": half_width,
            "visibility_radius": visibility_radius,
            "long_sweep_deg": long_sweep_deg,
            "small_sweep_deg": small_sweep_deg,
        },
    )


# ---------------------------------------------------------------------------
# Distance and containment


def _point_line_distance(px: float, py: float, line: Line) -> float:
    x0, y0 = line.p0
    x1, y1 = line.p1
    dx, dy = x1 - x0, y1 - y0
    denom = dx * dx + dy * dy
    t = ((px - x0) * dx + (py - y0) * dy) / denom
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (x0 + t * dx), py - (y0 + t * dy))


def _angle_in_sweep(phi: float, arc: Arc) -> bool:
    if arc.dphi >= 0.0:
        delta = (phi - arc.phi0) % TWO_PI
        return delta <= arc.dphi
    delta = (arc.phi0 - phi) % TWO_PI
    return delta <= -arc.dphi


def _point_arc_distance(px: float, py: float, arc: Arc) -> float:
    qx, qy = px - arc.center[0], py - arc.center[1]
    rho = math.hypot(qx, qy)
    if rho == 0.0:
        return arc.radius
    if _angle_in_sweep(math.atan2(qy, qx), arc):
        return abs(rho - arc.radius)
    return min(math.dist((px, py), arc.start), math.dist((px, py), arc.end))


def segment_distance(point: tuple[float, float], segment: Segment) -> float:
    """Euclidean distance from a point to the segment's centerline."""
    px, py = point
    geom = segment.geometry
    if isinstance(geom, Line):
        return _point_line_distance(px, py, geom)
    if isinstance(geom, Arc):
        return _point_arc_distance(px, py, geom)
    return math.hypot(px - geom.at[0], py - geom.at[1])


def min_corridor_distance(point: tuple[float, float], course: CourseSpec) -> float:
    return min(segment_distance(point, seg) for seg in course.segments)


def footprint_world(pose: Pose, footprint: Sequence[tuple[float, float]]) -> list[tuple[float, float]]:
    c, s = math.cos(pose.heading), math.sin(pose.heading)
    return [(pose.x + c * vx - s * vy, pose.y + s * vx + c * vy) for vx, vy in footprint]


def footprint_in_bounds(
    pose: Pose, footprint: Sequence[tuple[float, float]], course: CourseSpec
) -> bool:
    """True iff every footprint vertex lies within the corridor (closed set)."""
    hw = course.corridor_half_width
    return all(
        min_corridor_distance(v, course) <= hw for v in footprint_world(pose, footprint)
    )


def in_bounds_batch(
    poses: np.ndarray, footprint: Sequence[tuple[float, float]], course: CourseSpec
) -> np.ndarray:
    """Vectorized footprint_in_bounds over an (N, 3) pose array."""
    poses = np.asarray(poses, dtype=float)
    cos_h, sin_h = np.cos(poses[:, 2]), np.sin(poses[:, 2])
    fp = np.asarray(footprint, dtype=float)
    # vertices: (N, V, 2) world-frame footprint corners
    vx = poses[:, None, 0] + cos_h[:, None] * fp[None, :, 0] - sin_h[:, None] * fp[None, :, 1]
    vy = poses[:, None, 1] + sin_h[:, None] * fp[None, :, 0] + cos_h[:, None] * fp[None, :, 1]
    best = np.full(vx.shape, np.inf)
    for seg in course.segments:
        geom = seg.geometry
        if isinstance(geom, Line):
            x0, y0 = geom.p0
            dx, dy = geom.p1[0] - x0, geom.p1[1] - y0
            denom = dx * dx + dy * dy
            t = np.clip(((vx - x0) * dx + (vy - y0) * dy) / denom, 0.0, 1.0)
            d = np.hypot(vx - (x0 + t * dx), vy - (y0 + t * dy))
        elif isinstance(geom, Arc):
            qx, qy = vx - geom.center[0], vy - geom.center[1]
            rho = np.hypot(qx, qy)
            phi = np.arctan2(qy, qx)
            if geom.dphi >= 0.0:
                inside = (phi - geom.phi0) % TWO_PI <= geom.dphi
            else:
                inside = (geom.phi0 - phi) % TWO_PI <= -geom.dphi
            d_end = np.minimum(
                np.hypot(vx - geom.start[0], vy - geom.start[1]),
                np.hypot(vx - geom.end[0], vy - geom.end[1]),
            )
            d = np.where(inside, np.abs(rho - geom.radius), d_end)
            d = np.where(rho == 0.0, geom.radius, d)
        else:
            d = np.hypot(vx - geom.at[0], vy - geom.at[1])
        np.minimum(best, d, out=best)
    return (best <= course.corridor_half_width).all(axis=1)


def locate_segment(
    pose: Pose, course: CourseSpec, prev: Optional[int] = None
) -> Optional[int]:
    """Nearest segment by centerline distance, sticky toward prev at junction
    ties; absent when far outside every corridor.
    """
    point = (pose.x, pose.y)
    best_id, best_d = None, math.inf
    prev_d = None
    for seg in course.segments:
        d = segment_distance(point, seg)
        if seg.id == prev:
            prev_d = d
        if d < best_d:
            best_id, best_d = seg.id, d
    if best_d > 3.0 * course.corridor_half_width:
        return None
    if prev_d is not None and prev_d <= best_d + 1e-9:
        return prev
    return best_id


def annotate_trace(
    samples: Sequence[TrajectorySample],
    course: CourseSpec,
    footprint: Sequence[tuple[float, float]],
) -> list[TrajectorySample]:
    """Fill segment_id and in_bounds on a raw kinematic trace."""
    if not samples:
        return []
    poses = np.array([(s.pose.x, s.pose.y, s.pose.heading) for s in samples])
    flags = in_bounds_batch(poses, footprint, course)
    out: list[TrajectorySample] = []
    prev: Optional[int] = None
    for s, ok in zip(samples, flags):
        prev = locate_segment(s.pose, course, prev)
        out.append(s._replace(segment_id=prev, in_bounds=bool(ok)))
    return out


# ---------------------------------------------------------------------------
# Visibility clipping


def _clip_line(line: Line, cx: float, cy: float, radius: float) -> Optional[Line]:
    x0, y0 = line.p0
    dx, dy = line.p1[0] - x0, line.p1[1] - y0
    # |p0 + t d - c|^2 = r^2, t in [0, 1]
    fx, fy = x0 - cx, y0 - cy
    a = dx * dx + dy * dy
    b = 2.0 * (fx * dx + fy * dy)
    c = fx * fx + fy * fy - radius * radius
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return None
    sq = math.sqrt(disc)
    t0 = max(0.0, (-b - sq) / (2.0 * a))
    t1 = min(1.0, (-b + sq) / (2.0 * a))
    if t0 >= t1:
        return None
    return Line((x0 + t0 * dx, y0 + t0 * dy), (x0 + t1 * dx, y0 + t1 * dy))


def _clip_arc(arc: Arc, cx: float, cy: float, radius: float) -> list[Arc]:
    qx, qy = cx - arc.center[0], cy - arc.center[1]
    rho = math.hypot(qx, qy)
    r = arc.radius
    if rho == 0.0:
        return [arc] if r <= radius else []
    k = (r * r + rho * rho - radius * radius) / (2.0 * r * rho)
    if k <= -1.0:
        return [arc]
    if k >= 1.0:
        return []
    alpha = math.atan2(qy, qx)
    half = math.acos(k)
    # Visible angular window [alpha - half, alpha + half] intersected with
    # the arc's swept interval, handled in sweep-local coordinates.
    sign = 1.0 if arc.dphi >= 0.0 else -1.0
    span = abs(arc.dphi)
    lo = (sign * (alpha - arc.phi0) - half) % TWO_PI
    width = 2.0 * half
    pieces: list[tuple[float, float]] = []
    # The window may wrap; split into at most two local intervals.
    if lo + width <= TWO_PI:
        pieces.append((lo, lo + width))
    else:
        pieces.append((lo, TWO_PI))
        pieces.append((0.0, lo + width - TWO_PI))
    out: list[Arc] = []
    for a0, a1 in pieces:
        s0, s1 = max(0.0, a0), min(span, a1)
        if s0 < s1:
            out.append(Arc(arc.center, r, arc.phi0 + sign * s0, sign * (s1 - s0)))
    return out


def visible_window(pose: Pose, course: CourseSpec) -> list[dict]:
    """Course geometry clipped to the visibility disc around the pose.

    Returns JSON-ready fragments for the client renderer.
    """
    radius = course.visibility_radius
    if radius <= 0.0:
        return []
    cx, cy = pose.x, pose.y
    fragments: list[dict] = []
    for seg in course.segments:
        geom = seg.geometry
        if isinstance(geom, Line):
            clipped = _clip_line(geom, cx, cy, radius)
            if clipped is not None:
                fragments.append(
                    {
                        "kind": "line",
                        "segment_id": seg.id,
                        "p0": list(clipped.p0),
                        "p1": list(clipped.p1),
                        "length": clipped.length,
                    }
                )
        elif isinstance(geom, Arc):
            for piece in _clip_arc(geom, cx, cy, radius):
                fragments.append(
                    {
                        "kind": "arc",
                        "segment_id": seg.id,
                        "center": list(piece.center),
                        "radius": piece.radius,
                        "phi0": piece.phi0,
                        "dphi": piece.dphi,
                        "length": piece.length,
                    }
                )
        else:
            if math.hypot(geom.at[0] - cx, geom.at[1] - cy) <= radius:
                fragments.append(
                    {
                        "kind": "spin",
                        "segment_id": seg.id,
                        "at": list(geom.at),
                        "dphi": geom.dphi,
                        "length": 0.0,
                    }
                )
    return fragments


# ---------------------------------------------------------------------------
# Serialization (parameters only; geometry rebuilds deterministically)


def course_to_dict(course: CourseSpec) -> dict:
    return {"version": 1, "kind": course.kind, **(course.params or {})}


def course_from_dict(d: dict) -> CourseSpec:
    version = d.get("version", 1)
    if version != 1:
        raise ConfigError(f"unsupported course version {version}")
    kind = d["kind"]
    args = {k: v for k, v in d.items() if k not in ("version", "kind")}
    if kind == "square":
        return build_square_course(**args)
    if kind == "curved":
        return build_curved_course(**args)
    raise ConfigError(f"unknown course kind {kind!r}")
