"""Built-in multi-sonar mounting layouts (alpha deg, beta deg, l cm).

Ten catalogued single/dual/triple arrangements covering forward, lateral,
diagonal and rear-looking placements; scenario files may reference a
layout number instead of spelling out sensor poses.
"""

from __future__ import annotations

from .flow import SensorPose

SENSOR_LAYOUTS: dict[int, tuple[tuple[float, float, float], ...]] = {
    1: ((0, 0, 18),),
    2: ((0, -20, 14), (90, -10, 10), (-90, -5, 8)),
    3: ((90, -20, 10), (-90, 20, 10)),
    4: ((0, 0, 12), (90, 0, 12), (-90, 0, 12)),
    5: ((45, 0, 4), (-135, 0, 4)),
    6: ((0, 0, 10), (-180, 0, 0)),
    7: ((0, 20, 6), (90, 10, 0), (-90, 20, 14)),
    8: ((0, 0, 0), (120, -120, 14), (-120, 120, 14)),
    9: ((180, -180, 6),),
    10: ((45, -10, 6), (-45, 10, 6), (-180, 0, 0)),
}


def layout_poses(layout_id: int) -> list[SensorPose]:
    if layout_id not in SENSOR_LAYOUTS:
        raise KeyError(f"unknown sensor layout {layout_id}; choose 1..{len(SENSOR_LAYOUTS)}")
    return [
        SensorPose.from_degrees_cm(l_cm, alpha_deg, beta_deg)
        for alpha_deg, beta_deg, l_cm in SENSOR_LAYOUTS[layout_id]
    ]
