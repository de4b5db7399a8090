"""Kinematics, collision and stuck-detection tests."""

import math

import numpy as np
import pytest

from echonav.controller import VelocityCommand
from echonav.world import (
    CircleObstacle,
    DynamicObstacle,
    EnvironmentModel,
    RobotState,
    Segment,
    detect_collision,
    detect_stuck,
    min_clearance,
    point_segment_distance,
    step_world,
)

EMPTY = EnvironmentModel()


class TestStepWorld:
    def test_straight_drive(self):
        robot = RobotState(0.0, 0.0, 0.0)
        world = EMPTY
        for _ in range(10):
            world, robot = step_world(world, robot, VelocityCommand(0.3, 0.0))
        assert robot.x == pytest.approx(0.30, rel=1e-12)
        assert robot.y == 0.0 and robot.yaw == 0.0
        assert world.clock == pytest.approx(1.0)

    def test_turn_in_place(self):
        robot = RobotState(1.0, 2.0, 0.0)
        world = EMPTY
        for _ in range(10):
            world, robot = step_world(world, robot, VelocityCommand(0.0, 0.5))
        assert robot.yaw == pytest.approx(0.5)
        assert (robot.x, robot.y) == (1.0, 2.0)

    def test_arc_traces_circle_of_radius_v_over_omega(self):
        v, om, dt = 0.3, 0.5, 0.1
        robot = RobotState(0.0, 0.0, 0.0)
        world = EMPTY
        pts = []
        for _ in range(int(round(4 * math.pi / om / dt))):
            world, robot = step_world(world, robot, VelocityCommand(v, om), dt)
            pts.append((robot.x, robot.y))
        xs, ys = np.array([p[0] for p in pts]), np.array([p[1] for p in pts])
        cx = (xs.max() + xs.min()) / 2
        cy = (ys.max() + ys.min()) / 2
        radii = np.hypot(xs - cx, ys - cy)
        assert np.max(np.abs(radii - v / om)) < 1e-2

    def test_yaw_normalized(self):
        robot = RobotState(0.0, 0.0, 3.1)
        _, robot = step_world(EMPTY, robot, VelocityCommand(0.0, 2.0), 0.1)
        assert -math.pi < robot.yaw <= math.pi

    def test_kinematic_bound(self):
        rng = np.random.default_rng(2)
        robot = RobotState(0.0, 0.0, 0.0)
        world = EMPTY
        for _ in range(100):
            cmd = VelocityCommand(rng.uniform(-0.3, 0.3), rng.uniform(-2, 2))
            world, nxt = step_world(world, robot, cmd)
            assert math.hypot(nxt.x - robot.x, nxt.y - robot.y) <= 0.3 * 0.1 + 1e-12
            robot = nxt


class TestCollision:
    def test_tangent_wall_is_not_collision(self):
        world = EnvironmentModel(segments=(Segment(0.1, -1.0, 0.1, 1.0),))
        robot = RobotState(0.0, 0.0, 0.0, radius=0.1)
        assert detect_collision(world, robot) is None

    def test_wall_inside_radius_collides(self):
        world = EnvironmentModel(segments=(Segment(0.1 - 1e-6, -1.0, 0.1 - 1e-6, 1.0),))
        robot = RobotState(0.0, 0.0, 0.0, radius=0.1)
        ev = detect_collision(world, robot)
        assert ev is not None
        assert ev.entity == "segment[0]"
        assert ev.clearance < 0

    def test_circle_and_dynamic_obstacles(self):
        world = EnvironmentModel(
            circles=(CircleObstacle(1.0, 0.0, 0.5),),
            dynamic=(DynamicObstacle(0.2, ((0.0, 2.0), (0.0, -2.0)), speed=1.0),),
        )
        robot = RobotState(0.45, 0.0, 0.0, radius=0.1)
        ev = detect_collision(world, robot, t=0.0)
        assert ev is not None and ev.entity == "circle[0]"
        # dynamic obstacle crosses the origin at t = 2 s
        robot2 = RobotState(0.0, 0.05, 0.0, radius=0.1)
        world2 = EnvironmentModel(dynamic=world.dynamic)
        assert detect_collision(world2, robot2, t=2.0) is not None
        assert detect_collision(world2, robot2, t=0.0) is None

    def test_randomized_scenes_match_brute_force(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            seg = Segment(*rng.uniform(-2, 2, 4))
            if seg.length() < 1e-6:
                continue
            robot = RobotState(rng.uniform(-2, 2), rng.uniform(-2, 2), 0.0, radius=0.15)
            # dense sampling along the segment as an independent distance oracle
            ts = np.linspace(0, 1, 20001)
            px = seg.x1 + ts * (seg.x2 - seg.x1)
            py = seg.y1 + ts * (seg.y2 - seg.y1)
            brute = float(np.min(np.hypot(px - robot.x, py - robot.y)))
            exact = point_segment_distance(robot.x, robot.y, seg)
            assert exact == pytest.approx(brute, abs=1e-4)
            if abs(exact - robot.radius) > 1e-3:  # skip knife-edge cases
                world = EnvironmentModel(segments=(seg,))
                assert (detect_collision(world, robot) is not None) == (brute < robot.radius)

    def test_min_clearance_consistency(self):
        world = EnvironmentModel(segments=(Segment(1.0, -1.0, 1.0, 1.0),))
        robot = RobotState(0.0, 0.0, 0.0, radius=0.1)
        clearance, entity = min_clearance(world, robot)
        assert clearance == pytest.approx(0.9)
        assert entity == "segment[0]"


class TestDynamicObstacle:
    def test_no_teleport(self):
        dyn = DynamicObstacle(0.2, ((0.0, 0.0), (2.0, 0.0), (2.0, 1.0)), speed=0.4)
        dt = 0.1
        prev = dyn.position_at(0.0)
        for k in range(1, 400):
            cur = dyn.position_at(k * dt)
            d = math.hypot(cur[0] - prev[0], cur[1] - prev[1])
            assert d <= 0.4 * dt + 1e-9
            prev = cur

    def test_loop_closure(self):
        dyn = DynamicObstacle(0.2, ((0.0, 0.0), (1.0, 0.0)), speed=1.0)
        # closed loop of length 2: position repeats every 2 s
        assert dyn.position_at(0.0) == pytest.approx(dyn.position_at(2.0))
        assert dyn.position_at(0.5) == pytest.approx((0.5, 0.0))
        assert dyn.position_at(1.5) == pytest.approx((0.5, 0.0))

    def test_zero_speed_stays_put(self):
        dyn = DynamicObstacle(0.2, ((1.0, 1.0), (2.0, 2.0)), speed=0.0)
        assert dyn.position_at(123.0) == (1.0, 1.0)


class TestStuckDetection:
    def test_parked_robot_is_stuck(self):
        traj = [(0.1 * k, 0.0, 0.0) for k in range(150)]
        assert detect_stuck(traj)

    def test_cruising_robot_is_not_stuck(self):
        traj = [(0.1 * k, 0.03 * k, 0.0) for k in range(150)]
        assert not detect_stuck(traj)

    def test_short_window_not_stuck(self):
        traj = [(0.1 * k, 0.0, 0.0) for k in range(50)]  # only 5 s of data
        assert not detect_stuck(traj)

    def test_slow_creep_below_threshold(self):
        # 2 mm/s * 10 s = 2 cm < 5 cm threshold
        traj = [(0.1 * k, 0.0002 * k, 0.0) for k in range(200)]
        assert detect_stuck(traj)
