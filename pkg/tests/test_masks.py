"""Mask-generation tests, including exact agreement with a brute-force
per-voxel membership oracle written independently of the vectorized path."""

import math

import numpy as np
import pytest

from echonav.flow import PlatformMotion, PolarPoint, SensorPose, integrate_flow_line
from echonav.grid import EnergyGrid, sensor_frame_xy
from echonav.masks import (
    Circle,
    Corridor,
    FlowLineMask,
    HalfCircle,
    Rectangle,
    RegionError,
    Sector,
    TernaryMask,
    Trapezoid,
    flowline_mask,
    mask_to_pgm_bytes,
    region_to_mask,
    split_lr,
)

REDUCED = EnergyGrid(n_range=50, n_angle=37, r_max=5.0)


def oracle_voxel_xy(grid: EnergyGrid, pose: SensorPose):
    """Recompute voxel-center platform coordinates without sensor_frame_xy."""
    r = (np.arange(grid.n_range) + 0.5) * (grid.r_max / grid.n_range)
    th = np.radians(np.linspace(-90.0, 90.0, grid.n_angle))
    x = pose.l * np.cos(pose.alpha) + r[:, None] * np.cos(pose.delta - th[None, :])
    y = pose.l * np.sin(pose.alpha) + r[:, None] * np.sin(pose.delta - th[None, :])
    return x, y


def oracle_member(shape, x: float, y: float) -> bool:
    """Scalar membership test, written separately from the shape classes."""
    if isinstance(shape, HalfCircle):
        return x >= 0 and x * x + y * y <= shape.radius**2
    if isinstance(shape, Circle):
        return x * x + y * y <= shape.radius**2
    if isinstance(shape, Rectangle):
        return shape.x_min <= x <= shape.x_max and shape.y_min <= y <= shape.y_max
    if isinstance(shape, Corridor):
        return abs(y) <= shape.half_width
    if isinstance(shape, Sector):
        return x * x + y * y <= shape.radius**2 and abs(math.atan2(y, x)) <= shape.span / 2
    if isinstance(shape, Trapezoid):
        # winding-number test (the implementation uses the even-odd rule)
        wn = 0
        verts = shape.vertices
        for (x0, y0), (x1, y1) in zip(verts, verts[1:] + verts[:1]):
            if y0 <= y:
                if y1 > y and (x1 - x0) * (y - y0) - (x - x0) * (y1 - y0) > 0:
                    wn += 1
            elif y1 <= y and (x1 - x0) * (y - y0) - (x - x0) * (y1 - y0) < 0:
                wn -= 1
        return wn != 0
    raise TypeError(shape)


def oracle_mask(region, pose: SensorPose, grid: EnergyGrid) -> np.ndarray:
    shapes = region if isinstance(region, list) else [region]
    x, y = oracle_voxel_xy(grid, pose)
    out = np.zeros(grid.shape(), dtype=np.int8)
    for i in range(grid.n_range):
        for k in range(grid.n_angle):
            if any(oracle_member(s, float(x[i, k]), float(y[i, k])) for s in shapes):
                out[i, k] = 1 if y[i, k] >= 0 else -1
    return out


def random_convex_quad(rng) -> Trapezoid:
    while True:
        pts = rng.uniform(-3, 3, size=(4, 2))
        c = pts.mean(axis=0)
        order = np.argsort(np.arctan2(pts[:, 1] - c[1], pts[:, 0] - c[0]))
        pts = pts[order]
        area = 0.0
        for (x0, y0), (x1, y1) in zip(pts, np.roll(pts, -1, axis=0)):
            area += x0 * y1 - x1 * y0
        if abs(area) > 0.5:
            return Trapezoid(tuple(map(tuple, pts)))


def random_pose(rng) -> SensorPose:
    return SensorPose(rng.uniform(0, 0.3), rng.uniform(-math.pi, math.pi), rng.uniform(-math.pi, math.pi))


class TestRegionValidation:
    def test_degenerate_shapes_rejected(self):
        with pytest.raises(RegionError):
            Circle(0.0)
        with pytest.raises(RegionError):
            Rectangle(0, 1, 2, 2)
        with pytest.raises(RegionError):
            Corridor(-0.5)
        with pytest.raises(RegionError):
            Trapezoid(((0, 0), (1, 0), (2, 0), (3, 0)))
        with pytest.raises(RegionError):
            Sector(0.0, 1.0)

    def test_mask_rejects_bad_entries(self):
        with pytest.raises(ValueError):
            TernaryMask(np.full((3, 3), 2))


class TestSignConvention:
    def test_centered_sensor_full_circle(self):
        # enclosing circle: no zeros; theta > 0 is the right side (-1),
        # theta < 0 the left (+1), theta = 0 ties to +1
        grid = EnergyGrid(n_range=20, n_angle=21, r_max=2.0)
        mask = region_to_mask(Circle(10.0), SensorPose(0.0, 0.0, 0.0), grid)
        assert np.all(mask.values != 0)
        angles = grid.angles_deg
        for k, a in enumerate(angles):
            expected = -1 if a > 0 else 1
            assert np.all(mask.values[:, k] == expected), f"angle {a}"

    def test_region_behind_platform_is_empty(self):
        mask = region_to_mask(
            Rectangle(-3.0, -0.5, -1.0, 1.0), SensorPose(0.0, 0.0, 0.0), REDUCED
        )
        assert np.all(mask.values == 0)


class TestOracleEquivalence:
    @pytest.mark.parametrize("shape_idx", range(6))
    def test_reduced_grid_twenty_poses(self, shape_idx):
        rng = np.random.default_rng(100 + shape_idx)
        for _ in range(20):
            pose = random_pose(rng)
            shape = [
                HalfCircle(rng.uniform(0.3, 4.0)),
                Circle(rng.uniform(0.3, 4.0)),
                Rectangle(*sorted(rng.uniform(-3, 3, 2)), *sorted(rng.uniform(-3, 3, 2))),
                Corridor(rng.uniform(0.2, 2.5)),
                random_convex_quad(rng),
                Sector(rng.uniform(0.3, 2 * math.pi), rng.uniform(0.3, 4.0)),
            ][shape_idx]
            mask = region_to_mask(shape, pose, REDUCED)
            assert np.array_equal(mask.values, oracle_mask(shape, pose, REDUCED))

    def test_full_grid_half_circle_three_sensors(self):
        # front zone seen by a three-sensor layout; exact voxel-for-voxel match
        grid = EnergyGrid()
        region = HalfCircle(0.6)
        for pose in (
            SensorPose.from_degrees_cm(14, 0, -20),
            SensorPose.from_degrees_cm(10, 90, -10),
            SensorPose.from_degrees_cm(8, -90, -5),
        ):
            mask = region_to_mask(region, pose, grid)
            expected = oracle_mask(region, pose, grid)
            assert np.array_equal(mask.values, expected)
            assert np.count_nonzero(mask.values) == np.count_nonzero(expected)


class TestProperties:
    def test_ternarity_500_samples(self):
        rng = np.random.default_rng(5)
        grid = EnergyGrid(n_range=25, n_angle=19, r_max=5.0)
        makers = [
            lambda: HalfCircle(rng.uniform(0.2, 4)),
            lambda: Circle(rng.uniform(0.2, 4)),
            lambda: Rectangle(*sorted(rng.uniform(-4, 4, 2)), *sorted(rng.uniform(-4, 4, 2))),
            lambda: Corridor(rng.uniform(0.1, 3)),
            lambda: random_convex_quad(rng),
            lambda: Sector(rng.uniform(0.2, 2 * math.pi), rng.uniform(0.2, 4)),
        ]
        for i in range(500):
            mask = region_to_mask(makers[i % 6](), random_pose(rng), grid)
            assert np.isin(mask.values, (-1, 0, 1)).all()

    def test_split_lr_partition(self):
        rng = np.random.default_rng(6)
        vals = rng.integers(-1, 2, size=(50, 37)).astype(np.int8)
        mask = TernaryMask(vals)
        left, right = split_lr(mask)
        assert np.array_equal(left + right, np.abs(vals))
        assert np.array_equal(left, np.maximum(vals, 0))
        assert np.array_equal(right, np.maximum(-vals, 0))

    def test_split_lr_trivial_identities(self):
        zero = TernaryMask(np.zeros((4, 5)))
        l, r = split_lr(zero)
        assert not l.any() and not r.any()
        ones = TernaryMask(np.ones((4, 5)))
        l, r = split_lr(ones)
        assert l.all() and not r.any()

    def test_mirror_symmetry(self):
        rng = np.random.default_rng(8)
        grid = EnergyGrid(n_range=40, n_angle=37, r_max=5.0)
        for _ in range(25):
            pose = SensorPose(rng.uniform(0.01, 0.3), rng.uniform(-3, 3), rng.uniform(-3, 3))
            mirrored_pose = SensorPose(pose.l, -pose.alpha, -pose.beta)
            rect = Rectangle(*sorted(rng.uniform(-3, 3, 2)), *sorted(rng.uniform(-3, 3, 2)))
            mirrored_rect = Rectangle(rect.x_min, rect.x_max, -rect.y_max, -rect.y_min)
            m = region_to_mask(rect, pose, grid).values
            mm = region_to_mask(mirrored_rect, mirrored_pose, grid).values
            assert np.array_equal(mm, -m[:, ::-1])


class TestFlowlineMask:
    def test_left_line_lands_on_negative_angles(self):
        grid = EnergyGrid()
        fm = flowline_mask(1.0, SensorPose(0.0, 0.0, 0.0), grid)
        assert fm.length > 0
        for i, k in fm.voxels:
            theta = math.radians(grid.angles_deg[k])
            assert theta < 0  # y = +1 m is the left side: theta negative
            r_line = 1.0 / abs(math.sin(theta))
            assert abs(grid.range_centers[i] - r_line) <= grid.range_bin

    def test_through_axis_line_is_empty(self):
        fm = flowline_mask(0.0, SensorPose(0.0, 0.0, 0.0), EnergyGrid())
        assert fm.length == 0

    def test_out_of_band_rejected(self):
        with pytest.raises(RegionError):
            flowline_mask(6.0, SensorPose(0.5, 0.0, 0.0), EnergyGrid())

    def test_voxels_unique_and_one_per_column(self):
        rng = np.random.default_rng(9)
        grid = EnergyGrid()
        for _ in range(50):
            pose = random_pose(rng)
            d = rng.uniform(-2.5, 2.5)
            fm = flowline_mask(d, pose, grid)
            cols = [k for _, k in fm.voxels]
            assert len(cols) == len(set(cols))

    def test_reprojection_property(self):
        # every voxel center reprojects within one range bin of the line
        rng = np.random.default_rng(10)
        grid = EnergyGrid()
        for _ in range(50):
            pose = random_pose(rng)
            d = rng.uniform(-2.5, 2.5)
            fm = flowline_mask(d, pose, grid)
            for i, k in fm.voxels:
                r = grid.range_centers[i]
                theta = grid.angles_rad[k]
                y = pose.l * math.sin(pose.alpha) + r * math.sin(pose.delta - theta)
                cos_t = abs(math.cos(theta))
                assert abs(y - d) < grid.range_bin * max(1.0, 1.0 / max(cos_t, 1e-9))

    def test_flow_consistency_with_integrated_line(self):
        # a point sliding along the linear flow-line stays on the flow-line
        # mask wherever its bearing passes near a beam center
        grid = EnergyGrid()
        pose = SensorPose(0.08, 0.4, -0.4)
        d = 1.4
        fm = flowline_mask(d, pose, grid)
        by_col = {k: i for i, k in fm.voxels}
        d_rel = d - pose.l * math.sin(pose.alpha)
        # start on the line at a steep-incidence beam
        k0 = min(by_col, key=lambda k: abs(abs(grid.angles_deg[k]) - 70.0))
        theta0 = grid.angles_rad[k0]
        r0 = d_rel / math.sin(pose.delta - theta0)
        line = integrate_flow_line(
            PolarPoint(r0, theta0), pose, PlatformMotion(0.3, 0.0), dt=1e-3, n_steps=6000
        )
        checked = 0
        for pt in line.points:
            deg = math.degrees(pt.theta)
            k = grid.angle_bin_index(deg)
            if k < 0 or k not in by_col:
                continue
            if abs(deg - grid.angles_deg[k]) > 0.05:
                continue
            i = grid.range_bin_index(pt.r)
            assert i >= 0 and abs(i - by_col[k]) <= 1
            checked += 1
        assert checked >= 3


class TestPgmExport:
    def test_header_and_values(self):
        vals = np.array([[-1, 0], [1, -1]], dtype=np.int8)
        data = mask_to_pgm_bytes(TernaryMask(vals))
        assert data.startswith(b"P5\n2 2\n255\n")
        assert data[-4:] == bytes([0, 128, 255, 0])
