"""Acceptance suite: one test per shipping criterion, each printing a
PASS/FAIL line (run with `pytest -v -s tests/test_acceptance.py`)."""

import math
import time

import numpy as np
import pytest
from click.testing import CliRunner

from test_flow import oracle_rates

from echonav.cli import main as cli_main
from echonav.controller import (
    ControllerConfig,
    ControllerState,
    VelocityCommand,
    aff_alignment,
    aff_layer,
    build_flow_bank,
    build_mask_set,
    ca_layer,
    oa_layer,
    step as controller_step,
)
from echonav.flow import (
    PlatformMotion,
    PolarPoint,
    SensorPose,
    integrate_flow_line,
    integrate_flow_line_family,
    velocity_field,
)
from echonav.grid import CANONICAL_GRID, EnergyGrid, Energyscape
from echonav.layouts import layout_poses
from echonav.masks import (
    Circle,
    Corridor,
    HalfCircle,
    Rectangle,
    Sector,
    TernaryMask,
    region_to_mask,
    split_lr,
)
from echonav.scenario import load_scenario, resolve_scenario
from echonav.sonar.pipeline import SonarConfig, render_energyscape
from echonav.sonar.reflect import ReflectionEvent

from test_masks import oracle_mask, random_convex_quad, random_pose  # noqa: E402


def report(ac: str, ok: bool, detail: str) -> None:
    print(f"\n{ac}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"{ac} failed: {detail}"


class TestAC1FlowConstantConservation:
    def test_rk4_conserves_linear_flow_constant(self):
        rng = np.random.default_rng(2024)
        t0 = time.perf_counter()
        n = 200
        starts, poses, motions = [], [], []
        while len(starts) < n:
            pose = SensorPose(rng.uniform(0, 0.4), rng.uniform(-math.pi, math.pi),
                              rng.uniform(-math.pi, math.pi))
            r0 = rng.uniform(0.5, 4.5)
            th0 = rng.uniform(-math.pi / 2, math.pi / 2)
            if abs(math.sin(th0 - pose.delta)) <= 0.05:
                continue
            starts.append(PolarPoint(r0, th0))
            poses.append(pose)
            motions.append(PlatformMotion(rng.uniform(0.05, 0.5), 0.0))
        r_hist, th_hist, lengths, _ = integrate_flow_line_family(
            starts, poses, motions, dt=1e-3, n_steps=5000
        )
        deltas = np.array([p.delta for p in poses])
        worst = 0.0
        for i in range(n):
            c = np.abs(r_hist[:lengths[i], i]) * np.sin(th_hist[:lengths[i], i] - deltas[i])
            worst = max(worst, float(np.max(np.abs(c - c[0])) / abs(c[0])))
        elapsed = time.perf_counter() - t0
        ok = worst < 1e-6 and elapsed < 5.0
        report("AC-1", ok, f"max relative drift {worst:.2e} over {n} lines in {elapsed:.2f}s")


class TestAC2VelocityFieldOracle:
    def test_matches_finite_difference_world_oracle(self):
        rng = np.random.default_rng(4242)
        worst = 0.0
        for _ in range(1000):
            r = rng.uniform(0.2, 5.0)
            th = rng.uniform(-math.pi / 2, math.pi / 2)
            l = rng.uniform(0.0, 0.5)
            a = rng.uniform(-math.pi, math.pi)
            b = rng.uniform(-math.pi, math.pi)
            v = rng.uniform(-0.5, 0.5)
            om = rng.uniform(-1.5, 1.5)
            f = velocity_field(PolarPoint(r, th), SensorPose(l, a, b), PlatformMotion(v, om))
            dr_o, dth_o = oracle_rates(r, th, l, a, b, v, om)
            worst = max(worst, abs(f.dr_dt - dr_o), abs(f.dtheta_dt - dth_o))
        ok = worst < 1e-5
        report("AC-2", ok, f"max |field - oracle| = {worst:.2e} over 1000 samples")


class TestAC3CenteredRotationClosedForm:
    def test_r_constant_theta_advances_linearly(self):
        om, dt = 0.7, 1e-3
        line = integrate_flow_line(
            PolarPoint(2.4, -1.1), SensorPose(0.0, 1.0, -1.0), PlatformMotion(0.0, om),
            dt=dt, n_steps=4000,
        )
        worst_r = max(abs(p.r - 2.4) for p in line.points)
        worst_th = max(abs(p.theta - (-1.1 + om * k * dt)) for k, p in enumerate(line.points))
        ok = worst_r <= 1e-9 and worst_th <= 1e-9
        report("AC-3", ok, f"r drift {worst_r:.2e}, theta error {worst_th:.2e} over {len(line.points)} steps")


class TestAC4SonarLocalization:
    def test_hundred_random_reflectors(self):
        cfg = SonarConfig()
        rng = np.random.default_rng(99)
        t0 = time.perf_counter()
        worst_b = worst_r = 0.0
        for _ in range(100):
            r = rng.uniform(0.5, 4.5)
            b = rng.uniform(-80.0, 80.0)
            scape = render_energyscape([ReflectionEvent(r, b, 1.0, "plane")], cfg)
            i, k = np.unravel_index(np.argmax(scape.energy), scape.energy.shape)
            worst_b = max(worst_b, abs(float(scape.angle_grid[k]) - b))
            worst_r = max(worst_r, abs(float(scape.grid.range_centers[i]) - r))
        elapsed = time.perf_counter() - t0
        ok = worst_b <= 2.0 and worst_r <= 0.05 and elapsed < 60.0
        report("AC-4", ok,
               f"worst |dbearing| {worst_b:.2f} deg, worst |drange| {worst_r:.3f} m, {elapsed:.1f}s")


class TestAC5MaskOracleEquivalence:
    def test_exact_membership_and_partition(self):
        reduced = EnergyGrid(n_range=50, n_angle=37, r_max=5.0)
        rng = np.random.default_rng(1001)
        mismatches = 0
        for shape_idx in range(6):
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
                mask = region_to_mask(shape, pose, reduced)
                if not np.array_equal(mask.values, oracle_mask(shape, pose, reduced)):
                    mismatches += 1

        ternarity_ok = True
        partition_ok = True
        small = EnergyGrid(n_range=25, n_angle=19, r_max=5.0)
        for i in range(500):
            shape = [
                HalfCircle(rng.uniform(0.2, 4)), Circle(rng.uniform(0.2, 4)),
                Rectangle(*sorted(rng.uniform(-4, 4, 2)), *sorted(rng.uniform(-4, 4, 2))),
                Corridor(rng.uniform(0.1, 3)), random_convex_quad(rng),
                Sector(rng.uniform(0.2, 2 * math.pi), rng.uniform(0.2, 4)),
            ][i % 6]
            mask = region_to_mask(shape, random_pose(rng), small)
            ternarity_ok &= bool(np.isin(mask.values, (-1, 0, 1)).all())
            left, right = split_lr(mask)
            partition_ok &= bool(np.array_equal(left + right, np.abs(mask.values)))
        ok = mismatches == 0 and ternarity_ok and partition_ok
        report("AC-5", ok,
               f"{mismatches} oracle mismatches over 120 region/pose pairs; "
               f"ternarity {'ok' if ternarity_ok else 'BROKEN'}, "
               f"partition {'ok' if partition_ok else 'BROKEN'} on 500 samples")


class TestAC6ControllerLaws:
    GRID = CANONICAL_GRID

    def _lr_mask_bundle(self):
        from echonav.controller import LayerBundle
        vals = np.zeros(self.GRID.shape(), dtype=np.int8)
        vals[:, self.GRID.angles_deg <= 0] = 1
        vals[:, self.GRID.angles_deg > 0] = -1
        mask = TernaryMask(vals)
        signed = mask.values.astype(np.float64)
        inv_r2 = 1.0 / np.square(self.GRID.range_centers)[:, None]
        return LayerBundle(masks=[mask], signed=[signed], unsigned=[np.abs(signed)],
                           inv_r2_signed=[signed * inv_r2])

    def test_scripted_law_suites(self):
        cfg = ControllerConfig()
        bundle = self._lr_mask_bundle()
        checks: list[tuple[str, bool]] = []

        # CA: sign, magnitude, latch with reverse on the 4th consecutive trigger
        e = np.zeros(self.GRID.shape())
        e[30, 40] = 1.0  # left side
        state = ControllerState()
        speeds, omegas = [], []
        for _ in range(5):
            dec = ca_layer([Energyscape(e, self.GRID)], bundle, cfg, state)
            state = ControllerState(ca_streak=state.ca_streak + 1)
            speeds.append(dec.command.V)
            omegas.append(dec.command.omega)
        checks.append(("CA turn away at 0.5 rad/s", all(w == -0.5 for w in omegas)))
        checks.append(("CA reverse -0.1 from 4th trigger", speeds == [0.0, 0.0, 0.0, -0.1, -0.1]))

        # OA: inverse-square weighting ratio 0.5 m vs 4.9 m ~ 96:1
        rhos = []
        for r_target in (0.5, 4.9):
            e = np.zeros(self.GRID.shape())
            e[self.GRID.range_bin_index(r_target), 120] = 1.0
            dec = oa_layer([Energyscape(e, self.GRID)], bundle, VelocityCommand(0.3, 0.0), cfg)
            rhos.append(abs(dec.diagnostics["rho"]))
        ratio = rhos[0] / rhos[1]
        checks.append((f"OA 1/r^2 ratio {ratio:.1f}:1", abs(ratio - 96.04) / 96.04 < 0.05))

        # AFF: symmetric corridor balances omega exactly
        pose = SensorPose(0.0, 0.0, 0.0)
        bank = build_flow_bank([pose], self.GRID, cfg.d_grid)
        e = np.zeros(self.GRID.shape())
        for d in (1.0, -1.0):
            di = int(np.argmin(np.abs(bank.d_grid - d)))
            for i, k in bank.masks[di][0].voxels:
                e[i, k] = 1.0
        profile, _ = aff_alignment([Energyscape(e, self.GRID)], bank)
        cmd_in = VelocityCommand(0.3, 0.07)
        dec = aff_layer(profile, bank, cmd_in, cfg, ControllerState())
        checks.append(("AFF corridor balance omega_out == omega_in",
                       dec.triggered and dec.command.omega == pytest.approx(cmd_in.omega, abs=1e-12)))

        # subsumption priority CA > OA > AFF > RCF under forced multi-triggers
        regions = {"CA": HalfCircle(0.5), "OA": Sector(math.radians(60), 2.0),
                   "RCF": Corridor(2.0)}
        mask_set = build_mask_set(regions, [pose], self.GRID, cfg)
        e_all = np.zeros(self.GRID.shape())
        e_all[self.GRID.range_bin_index(0.3), 90] = 1.0   # CA+OA+RCF zone
        e_all[self.GRID.range_bin_index(1.0), 90] = 1.0   # OA+RCF zone
        for d in (1.0, -1.0):
            di = int(np.argmin(np.abs(mask_set.flow.d_grid - d)))
            for i, k in mask_set.flow.masks[di][0].voxels:
                e_all[i, k] = 0.08                          # AFF + RCF evidence
        order = []
        e_work = e_all.copy()
        _, dec, _ = controller_step([Energyscape(e_work, self.GRID)], mask_set,
                                    VelocityCommand(0.3, 0.0), cfg, ControllerState())
        order.append(dec.layer)
        e_work[self.GRID.range_bin_index(0.3), 90] = 0.0
        _, dec, _ = controller_step([Energyscape(e_work, self.GRID)], mask_set,
                                    VelocityCommand(0.3, 0.0), cfg, ControllerState())
        order.append(dec.layer)
        e_work[self.GRID.range_bin_index(1.0), 90] = 0.0
        _, dec, _ = controller_step([Energyscape(e_work, self.GRID)], mask_set,
                                    VelocityCommand(0.3, 0.0), cfg, ControllerState())
        order.append(dec.layer)
        e_rcf = np.zeros(self.GRID.shape())
        e_rcf[self.GRID.range_bin_index(2.0), 170] = 0.07
        _, dec, _ = controller_step([Energyscape(e_rcf, self.GRID)], mask_set,
                                    VelocityCommand(0.3, 0.0), cfg, ControllerState())
        order.append(dec.layer)
        checks.append((f"priority order {order}", order == ["CA", "OA", "AFF", "RCF"]))

        failed = [name for name, ok in checks if not ok]
        report("AC-6", not failed, "; ".join(name for name, _ in checks) +
               (f" | FAILED: {failed}" if failed else ""))


class TestAC7ZeroCollisionCampaign:
    def test_fifteen_runs_clean(self):
        scn = load_scenario(resolve_scenario("corridor_junction"))
        assert len(scn.world.dynamic) == 2
        t0 = time.perf_counter()
        from echonav.engine import run_scenario

        bad = []
        for layout in (1, 4, 8):
            s = scn.with_layout(layout)
            for seed in range(100, 105):
                rep = run_scenario(s, seed=seed, fast_sonar=True)
                if not (rep.goal_reached and not rep.collisions and not rep.stuck_intervals):
                    bad.append((layout, seed, rep.termination))
        elapsed = time.perf_counter() - t0
        ok = not bad and elapsed < 900.0
        report("AC-7", ok, f"15/15 clean runs in {elapsed:.0f}s" if ok
               else f"failures {bad} in {elapsed:.0f}s")


class TestAC8RealTimeBudget:
    def test_controller_step_under_budget(self):
        poses = layout_poses(4)  # three sensors
        cfg = ControllerConfig()
        regions = {"CA": Circle(0.4),
                   "OA": Sector(math.radians(60), 1.2),
                   "RCF": Corridor(1.6)}
        mask_set = build_mask_set(regions, poses, CANONICAL_GRID, cfg)
        rng = np.random.default_rng(5)
        scapes = [Energyscape(rng.uniform(0, 0.2, CANONICAL_GRID.shape()), CANONICAL_GRID, j)
                  for j in range(3)]
        state = ControllerState()
        cmd = VelocityCommand(0.3, 0.0)
        controller_step(scapes, mask_set, cmd, cfg, state)  # warm caches
        times = []
        for _ in range(1000):
            t0 = time.perf_counter()
            _, _, state = controller_step(scapes, mask_set, cmd, cfg, state)
            times.append(time.perf_counter() - t0)
        mean_ms = 1e3 * float(np.mean(times))
        max_ms = 1e3 * float(np.max(times))
        ok = mean_ms < 40.0 and max_ms < 50.0
        report("AC-8", ok, f"controller step mean {mean_ms:.2f} ms, max {max_ms:.2f} ms over 1000 steps")


class TestAC9Determinism:
    def test_cli_run_byte_identical(self, tmp_path):
        runner = CliRunner()
        outs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            result = runner.invoke(cli_main, [
                "run", "--scenario", "corridor_junction", "--fast-sonar",
                "--seed", "321", "--out", str(out),
            ])
            assert result.exit_code == 0, result.output
            outs.append(next(out.glob("trajectory_*.csv")).read_bytes())
        ok = outs[0] == outs[1] and len(outs[0]) > 0
        report("AC-9", ok, f"two cli runs produced byte-identical {len(outs[0])}-byte trajectories")
