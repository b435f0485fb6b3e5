"""Schematic perspective renderer for the synthetic world.

Draws the road corridor, lane markings, and entity glyphs with a simple
ground-plane pinhole projection.  The route intent is not an input, the
pedestrian ``moving`` flag is deliberately ignored, and the camera pose
comes from the scene's frozen view state, so frames never encode
information reserved for advice.
"""

from __future__ import annotations

import math

import numpy as np

from .scene import (
    ConstructionCones,
    ParkedCar,
    Pedestrian,
    Scene,
    StopSign,
    TrafficLight,
    WorldConfig,
)

SKY = (118, 160, 214)
GRASS = (44, 98, 56)
ROAD = (72, 72, 76)
LANE_MARK = (232, 232, 228)
POLE = (52, 52, 58)
HOUSING = (38, 38, 42)
RED_LAMP = (232, 44, 44)
GREEN_LAMP = (52, 220, 96)
SIGN_RED = (212, 32, 48)
SIGN_WHITE = (240, 240, 240)
PED_BODY = (206, 88, 152)
PED_HEAD = (236, 202, 168)
CAR_BODY = (66, 108, 214)
CAR_DARK = (40, 62, 120)
CONE = (246, 132, 38)

_NEAR_Z = 1.2  # closer objects are behind the hood, not drawn


class _Projection:
    """Ground-plane pinhole shared by the renderer and bbox helper."""

    def __init__(self, scene: Scene, config: WorldConfig):
        self.h, self.w = config.frame_h, config.frame_w
        self.horizon = int(self.h * 0.42)
        self.f_v = 2.6 * (self.h - self.horizon)
        self.f_x = 0.85 * self.w
        self.cx = self.w / 2.0
        lane_w = scene.lane_width
        self.half_road = scene.lane_count * lane_w / 2.0
        # ego lane center in road coordinates (rightmost lane)
        self.ego_lane_x = lane_w * (scene.lane_count / 2.0 - 0.5)
        self.cam_x = self.ego_lane_x + scene.view.lateral
        self.tan_head = math.tan(scene.view.heading)
        self.curv = scene.curvature
        self.odo = scene.view_odometer

    def z_of_row(self, rows):
        return self.f_v / np.maximum(rows - self.horizon, 0.5)

    def row_of_z(self, z: float) -> float:
        return self.horizon + self.f_v / max(z, 0.1)

    def col_of(self, x_road: float, z) -> np.ndarray:
        x_cam = x_road + self.curv * z * z / 2.0 - self.cam_x - z * self.tan_head
        return self.cx + self.f_x * x_cam / z

    def px_per_m(self, z: float) -> float:
        return self.f_x / max(z, 0.1)

    def glyph_px_h(self, h_m: float, z: float) -> float:
        return 0.55 * h_m * self.f_v / max(z, 0.1)


def _box(img, r0, r1, c0, c1, color):
    h, w, _ = img.shape
    r0, r1 = int(np.clip(r0, 0, h)), int(np.clip(r1, 0, h))
    c0, c1 = int(np.clip(c0, 0, w)), int(np.clip(c1, 0, w))
    if r1 > r0 and c1 > c0:
        img[r0:r1, c0:c1] = color


def _glyph_rect(p: _Projection, x_road: float, z: float,
                width_m: float, height_m: float) -> tuple[int, int, int, int]:
    """(r0, r1, c0, c1) of an upright object standing on the ground."""
    base = p.row_of_z(z)
    hpx = p.glyph_px_h(height_m, z)
    cc = float(p.col_of(x_road, np.asarray(z)))
    wpx = max(1.0, width_m * p.px_per_m(z))
    return (int(base - hpx), int(base) + 1,
            int(cc - wpx / 2.0), int(cc + wpx / 2.0) + 1)


def _entity_geometry(scene: Scene, p: _Projection):
    """(kind, entity, z, rect) for every drawable entity, far to near."""
    out = []
    for e in scene.entities:
        z = e.distance
        if z < _NEAR_Z:
            continue
        if isinstance(e, TrafficLight):
            rect = _glyph_rect(p, -(p.half_road + 0.9), z, 0.9, 4.6)
        elif isinstance(e, StopSign):
            rect = _glyph_rect(p, p.half_road + 0.9, z, 1.0, 2.6)
        elif isinstance(e, Pedestrian):
            sgn = -1.0 if e.side == "left" else 1.0
            rect = _glyph_rect(p, sgn * (p.half_road + 0.6), z, 0.55, 1.75)
        elif isinstance(e, ParkedCar):
            sgn = -1.0 if e.side == "left" else 1.0
            rect = _glyph_rect(p, sgn * (p.half_road - 0.9), z, 1.8, 1.4)
        elif isinstance(e, ConstructionCones):
            rect = _glyph_rect(p, p.ego_lane_x, z, 2.6, 0.62)
        else:
            continue
        out.append((type(e).__name__, e, z, rect))
    out.sort(key=lambda item: -item[2])
    return out


def render(scene: Scene, config: WorldConfig) -> np.ndarray:
    """Rasterize a scene to an H x W x 3 uint8 frame."""
    p = _Projection(scene, config)
    h, w = p.h, p.w
    img = np.empty((h, w, 3), dtype=np.uint8)
    img[: p.horizon + 1] = SKY
    img[p.horizon + 1:] = GRASS

    rows = np.arange(p.horizon + 1, h)
    z = p.z_of_row(rows)
    cols = np.arange(w)[None, :]

    left = p.col_of(-p.half_road, z)[:, None]
    right = p.col_of(p.half_road, z)[:, None]
    road_mask = (cols >= left) & (cols <= right)
    img[p.horizon + 1:][road_mask] = ROAD

    # intersection: crossing road band across the full width
    if scene.intersection is not None:
        zi = scene.intersection.distance
        band = (z >= max(zi, _NEAR_Z * 0.5)) & (z <= zi + 9.0)
        img[p.horizon + 1:][band, :] = ROAD

    # lane boundaries: solid edges, dashed interior lines
    for i in range(scene.lane_count + 1):
        x_b = -p.half_road + i * scene.lane_width
        cb = p.col_of(x_b, z)[:, None]
        width = np.maximum(1.0, 0.14 * p.f_x / z)[:, None]
        line = np.abs(cols - cb) <= width
        if 0 < i < scene.lane_count:
            dash = ((z + p.odo) % 4.0 < 2.4)[:, None]
            line &= dash
        if scene.intersection is not None:
            zi = scene.intersection.distance
            line &= ((z < zi) | (z > zi + 9.0))[:, None]
        img[p.horizon + 1:][line] = LANE_MARK

    # stop line ahead of stop-requiring entities and intersections
    stop_zs = [e.distance for e in scene.entities
               if isinstance(e, (StopSign,)) or
               (isinstance(e, TrafficLight) and e.state in ("red", "green"))]
    if scene.intersection is not None:
        stop_zs.append(scene.intersection.distance)
    for zs in stop_zs:
        if zs <= _NEAR_Z:
            continue
        band = (z >= zs - 1.2) & (z <= zs - 0.4)
        img[p.horizon + 1:][band[:, None] & road_mask] = LANE_MARK

    # crosswalk stripes where a pedestrian waits or crosses
    for e in scene.entities:
        if isinstance(e, Pedestrian) and e.distance > _NEAR_Z:
            band = (z >= e.distance - 0.3) & (z <= e.distance + 1.7)
            stripes = (np.arange(w)[None, :] % 6) < 3
            img[p.horizon + 1:][band[:, None] & road_mask & stripes] = LANE_MARK

    for kind, e, zd, rect in _entity_geometry(scene, p):
        r0, r1, c0, c1 = rect
        if kind == "TrafficLight":
            cc = (c0 + c1) // 2
            _box(img, r0 + (r1 - r0) // 3, r1, cc, cc + max(1, (c1 - c0) // 5), POLE)
            boxh = max(2, (r1 - r0) // 3)
            _box(img, r0, r0 + boxh, c0, c1, HOUSING)
            lamp = RED_LAMP if e.state == "red" else GREEN_LAMP
            third = max(1, boxh // 3)
            if e.state == "red":
                _box(img, r0, r0 + third + 1, c0 + 1, c1 - 1, lamp)
            else:
                _box(img, r0 + boxh - third - 1, r0 + boxh, c0 + 1, c1 - 1, lamp)
        elif kind == "StopSign":
            cc = (c0 + c1) // 2
            _box(img, r0 + (r1 - r0) // 3, r1, cc, cc + max(1, (c1 - c0) // 6), POLE)
            signh = max(2, (r1 - r0) // 2)
            _box(img, r0, r0 + signh, c0, c1, SIGN_RED)
            mid = r0 + signh // 2
            _box(img, mid, mid + max(1, signh // 4), c0 + 1, c1 - 1, SIGN_WHITE)
        elif kind == "Pedestrian":
            headh = max(1, (r1 - r0) // 4)
            _box(img, r0 + headh, r1, c0, c1, PED_BODY)
            hc = (c0 + c1) // 2
            hw = max(1, (c1 - c0) // 3)
            _box(img, r0, r0 + headh, hc - hw // 2 - 1, hc + hw // 2 + 1, PED_HEAD)
        elif kind == "ParkedCar":
            roofh = max(1, (r1 - r0) // 3)
            _box(img, r0 + roofh, r1, c0, c1, CAR_BODY)
            _box(img, r0, r0 + roofh, c0 + (c1 - c0) // 5, c1 - (c1 - c0) // 5,
                 CAR_DARK)
        elif kind == "ConstructionCones":
            total = c1 - c0
            for j in range(3):
                cc = c0 + total * (2 * j + 1) // 6
                ch = r1 - r0
                for rr in range(r0, r1):
                    frac = (rr - r0 + 1) / max(1, ch)
                    half = max(1, int(frac * total / 8.0))
                    _box(img, rr, rr + 1, cc - half, cc + half, CONE)
    return img


def entity_bboxes(scene: Scene, config: WorldConfig) -> dict[str, tuple]:
    """Clipped glyph bounding boxes keyed by entity class name."""
    p = _Projection(scene, config)
    out = {}
    for kind, _e, _z, (r0, r1, c0, c1) in _entity_geometry(scene, p):
        r0 = int(np.clip(r0, 0, p.h))
        r1 = int(np.clip(r1, 0, p.h))
        c0 = int(np.clip(c0, 0, p.w))
        c1 = int(np.clip(c1, 0, p.w))
        if r1 > r0 and c1 > c0:
            out[kind] = (r0, r1, c0, c1)
    return out
