"""闭环仿真测试"""

import math

import numpy as np
import pytest

from app.core.config import ScenarioFile
from app.features.avoidance.models import AvoidanceMode
from app.features.radar.models import HaltNoiseBurst, NoiseModel, RadarConfig
from app.features.sim.models import (
    BatchSettings,
    Obstacle,
    PipelineConfig,
    RememberedObstacle,
    SweepSettings,
    WorldConfig,
)
from app.features.sim.service import (
    _decide,
    _noise_multiplier,
    _refresh_memory,
    error_sweep,
    initial_state,
    observe_obstacle,
    preferred_velocity,
    ring_worlds,
    run_batch,
    run_trial,
    sense,
    trial_names,
)
from app.features.tracker.models import Measurement


def _disabled(pipeline: PipelineConfig) -> PipelineConfig:
    avoidance = pipeline.avoidance.model_copy(update={"mode": AvoidanceMode.DISABLED})
    return pipeline.model_copy(update={"avoidance": avoidance})


class TestWorldConfig:
    def test_start_inside_obstacle_is_rejected(self):
        with pytest.raises(ValueError):
            WorldConfig(start=(4.0, 0.0), obstacles=[Obstacle(center=(4.2, 0.0))])

    def test_obstacle_outside_arena_is_rejected(self):
        with pytest.raises(ValueError):
            WorldConfig(
                arena_max=(5.0, 5.0),
                goal=(4.0, 0.0),
                obstacles=[Obstacle(center=(7.0, 0.0))],
            )

    def test_frame_budget(self):
        world = WorldConfig(frame_rate=10.0, max_duration=2.5)
        assert world.dt == pytest.approx(0.1)
        assert world.max_frames == 25


def test_initial_state_faces_goal():
    state = initial_state(WorldConfig(start=(0.0, 0.0), goal=(0.0, 3.0)), PipelineConfig())
    assert state.heading == pytest.approx(math.pi / 2)
    assert not np.any(state.velocity)
    assert state.min_clearance is None


def test_preferred_velocity_slows_near_goal():
    world = WorldConfig(start=(0.0, 0.0), goal=(8.0, 0.0))
    state = initial_state(world, PipelineConfig())
    assert preferred_velocity(state, world) == pytest.approx([1.0, 0.0])
    state.position = np.array([7.9, 0.0])
    assert preferred_velocity(state, world) == pytest.approx([0.2, 0.0])


def test_halt_burst_starts_after_first_stop():
    noise = NoiseModel(halt_noise_burst=HaltNoiseBurst(duration_s=0.5, multiplier=3.0))
    pipeline = PipelineConfig(radar=RadarConfig(noise=noise))
    state = initial_state(WorldConfig(), pipeline)

    assert _noise_multiplier(state, pipeline) == 1.0
    state.velocity = np.array([0.8, 0.0])
    assert _noise_multiplier(state, pipeline) == 1.0
    state.velocity = np.zeros(2)
    state.time = 2.0
    assert _noise_multiplier(state, pipeline) == 3.0
    state.time = 2.6
    assert _noise_multiplier(state, pipeline) == 1.0


class TestSense:
    def test_only_obstacles_inside_detection_window_echo(self):
        world = WorldConfig(
            obstacles=[
                Obstacle(center=(-3.0, 0.0)),
                Obstacle(center=(1.05, 0.0)),
                Obstacle(center=(4.0, 0.0)),
            ]
        )
        pipeline = PipelineConfig()
        state = initial_state(world, pipeline)
        echoes, frame = sense(state, world, pipeline, np.random.default_rng(0))
        # 身后的障碍物在视场外，1.05m 处的表面距离 0.8m 低于最小探测距离
        assert len(echoes) == 1
        assert echoes[0].range == pytest.approx(3.75, abs=0.3)
        assert frame.samples.shape == (2, 16, 256)

    def test_behind_and_too_close_give_no_echoes(self):
        world = WorldConfig(
            obstacles=[Obstacle(center=(-3.0, 0.0)), Obstacle(center=(1.05, 0.0))]
        )
        pipeline = PipelineConfig()
        state = initial_state(world, pipeline)
        echoes, _ = sense(state, world, pipeline, np.random.default_rng(0))
        assert echoes == []


def _remembered(track_id: int, center, time: float = 0.0) -> RememberedObstacle:
    return RememberedObstacle(
        track_id=track_id,
        center=np.asarray(center, dtype=float),
        position_std=0.1,
        last_seen=time,
        samples=[(time, float(center[0]), float(center[1]))],
    )


class TestObstacleMemory:
    def test_static_obstacle_is_averaged_without_velocity(self):
        cfg = PipelineConfig().avoidance
        rng = np.random.default_rng(3)
        remembered = _remembered(1, (4.0, 0.0))
        for frame in range(1, 26):
            noisy = np.array([4.0, 0.0]) + 0.1 * rng.standard_normal(2)
            remembered = observe_obstacle(remembered, frame * 0.1, noisy, 0.1, cfg)
        assert not np.any(remembered.velocity)
        assert remembered.center == pytest.approx([4.0, 0.0], abs=0.1)
        assert remembered.samples[0][0] == pytest.approx(2.5 - cfg.memory_window_s)

    def test_moving_obstacle_velocity_is_fitted(self):
        cfg = PipelineConfig().avoidance
        remembered = _remembered(1, (4.0, 0.0))
        for frame in range(1, 11):
            time = frame * 0.1
            remembered = observe_obstacle(
                remembered, time, np.array([4.0 - 0.8 * time, 0.5 * time]), 0.1, cfg
            )
        assert remembered.velocity == pytest.approx([-0.8, 0.5], abs=1e-6)
        assert remembered.center_at(1.5) == pytest.approx([4.0 - 1.2, 0.75], abs=1e-6)

    def test_unobserved_visible_entry_is_dropped_blind_entry_kept(self):
        world = WorldConfig()
        pipeline = PipelineConfig()
        state = initial_state(world, pipeline)
        # 前方 4m 应当可见；正侧方 0.9m 处于盲区
        state.memory = {1: _remembered(1, (4.0, 0.0)), 2: _remembered(2, (0.0, 0.9))}
        misses = pipeline.avoidance.memory_miss_frames
        for _ in range(misses - 1):
            _refresh_memory(state, world, pipeline, [])
        assert set(state.memory) == {1, 2}
        _refresh_memory(state, world, pipeline, [])
        assert set(state.memory) == {2}

    def test_restarted_track_takes_over_nearby_entry(self):
        world = WorldConfig()
        pipeline = PipelineConfig()
        state = initial_state(world, pipeline)
        state.memory = {99: _remembered(99, (4.25, 0.0))}
        z = Measurement(range=4.0, bearing=0.0, radial_velocity=0.0)
        state.tracker.step([z], 0.0)
        (track,) = state.tracker.tracks
        _refresh_memory(state, world, pipeline, [z])
        assert list(state.memory) == [track.id]
        remembered = state.memory[track.id]
        assert remembered.track_id == track.id
        assert len(remembered.samples) == 2
        assert remembered.center == pytest.approx([4.25, 0.0], abs=1e-9)

    def test_candidate_track_alone_does_not_create_memory(self):
        world = WorldConfig()
        pipeline = PipelineConfig()
        state = initial_state(world, pipeline)
        z = Measurement(range=4.0, bearing=0.0, radial_velocity=0.0)
        state.tracker.step([z], 0.0)
        _refresh_memory(state, world, pipeline, [z])
        assert state.memory == {}

    def test_avoidance_ignores_passed_obstacle_for_one_ahead(self):
        world = WorldConfig()
        pipeline = PipelineConfig()
        state = initial_state(world, pipeline)
        state.velocity = np.array([1.0, 0.0])
        state.memory = {1: _remembered(1, (0.0, 0.8)), 2: _remembered(2, (2.0, 0.1))}
        command, nearest = _decide(state, world, pipeline, [])
        assert nearest is not None and nearest.obstacle_id == 2
        assert command.in_cone


class TestRunTrial:
    def test_goal_equals_start(self):
        world = WorldConfig(start=(1.0, 1.0), goal=(1.0, 1.0))
        log = run_trial(world)
        assert log.outcome == "reached_goal"
        assert log.frames == 0
        assert log.commands == []

    def test_open_field_reaches_goal(self):
        world = WorldConfig(start=(0.0, 0.0), goal=(3.0, 0.0), seed=5)
        log = run_trial(world)
        assert log.outcome == "reached_goal"
        assert log.min_clearance is None
        assert log.detections == []
        assert all(math.isinf(record.clearance) for record in log.truth)
        assert log.events[-1].kind == "outcome"

    def test_timeout(self):
        world = WorldConfig(start=(0.0, 0.0), goal=(8.0, 0.0), max_duration=1.0)
        log = run_trial(world)
        assert log.outcome == "timeout"
        assert log.frames == world.max_frames

    def test_identical_seed_is_bitwise_reproducible(self, scenario_dir):
        scenario = ScenarioFile.from_toml(scenario_dir / "one_pole.toml")
        first = run_trial(scenario.world, scenario.pipeline)
        second = run_trial(scenario.world, scenario.pipeline)
        assert first.model_dump_json() == second.model_dump_json()

    def test_one_pole_is_avoided(self, scenario_dir):
        scenario = ScenarioFile.from_toml(scenario_dir / "one_pole.toml")
        log = run_trial(scenario.world, scenario.pipeline)
        assert log.outcome == "reached_goal"
        assert log.min_clearance >= 0.0
        assert any(event.kind == "confirm" for event in log.events)
        assert any(record.in_cone for record in log.commands)

    def test_one_pole_without_avoidance_collides(self, scenario_dir):
        scenario = ScenarioFile.from_toml(scenario_dir / "one_pole.toml")
        log = run_trial(scenario.world, _disabled(scenario.pipeline))
        assert log.outcome == "collision"
        assert log.min_clearance < 0.0
        assert any(event.kind == "collision" for event in log.events)

    def test_side_step_mode(self, scenario_dir):
        scenario = ScenarioFile.from_toml(scenario_dir / "one_pole.toml")
        avoidance = scenario.avoidance.model_copy(update={"mode": AvoidanceMode.SIDE_STEP})
        pipeline = scenario.pipeline.model_copy(update={"avoidance": avoidance})
        log = run_trial(scenario.world, pipeline)
        assert log.outcome != "collision"
        assert any(event.kind == "side_step" for event in log.events)

    def test_min_clearance_is_minimum_over_frames(self, scenario_dir):
        scenario = ScenarioFile.from_toml(scenario_dir / "one_pole.toml")
        log = run_trial(scenario.world, scenario.pipeline)
        world = scenario.world
        start = np.asarray(world.start)
        initial = min(
            float(np.linalg.norm(start - np.asarray(obstacle.center)))
            - world.mav_radius
            - obstacle.radius
            for obstacle in world.obstacles
        )
        assert log.min_clearance == pytest.approx(
            min([initial] + [record.clearance for record in log.truth])
        )

    def test_track_records_reference_frame_detections(self, scenario_dir):
        scenario = ScenarioFile.from_toml(scenario_dir / "one_pole.toml")
        log = run_trial(scenario.world, scenario.pipeline)
        per_frame = {}
        for record in log.detections:
            per_frame.setdefault(record.frame, set()).add(record.index)
        for record in log.tracks:
            if record.assigned_detection_index >= 0:
                assert record.assigned_detection_index in per_frame[record.frame]


def test_ring_worlds_face_antipodes():
    worlds = ring_worlds(WorldConfig(seed=10), BatchSettings(n_trials=4, ring_radius=5.0))
    assert [world.seed for world in worlds] == [10, 11, 12, 13]
    assert worlds[1].start == pytest.approx((0.0, 5.0), abs=1e-12)
    assert worlds[1].goal == pytest.approx((0.0, -5.0), abs=1e-12)
    assert ring_worlds(WorldConfig(), BatchSettings(n_trials=0)) == []


def test_trial_names():
    assert trial_names(3) == ["trial_000", "trial_001", "trial_002"]


@pytest.mark.slow
def test_parallel_batch_matches_serial(scenario_dir):
    scenario = ScenarioFile.from_toml(scenario_dir / "two_poles_26.toml")
    worlds = ring_worlds(scenario.world, scenario.batch.model_copy(update={"n_trials": 4}))
    serial = run_batch(worlds, scenario.pipeline, parallelism=1)
    parallel = run_batch(worlds, scenario.pipeline, parallelism=2)
    assert [log.model_dump_json() for log in serial] == [
        log.model_dump_json() for log in parallel
    ]


@pytest.mark.slow
def test_two_poles_ring(scenario_dir):
    scenario = ScenarioFile.from_toml(scenario_dir / "two_poles_26.toml")
    worlds = ring_worlds(scenario.world, scenario.batch)
    logs = run_batch(worlds, scenario.pipeline, parallelism=4)
    assert len(logs) == 26
    assert all(log.outcome == "reached_goal" for log in logs)
    assert all(log.min_clearance >= 0.0 for log in logs)
    margin = scenario.avoidance.safety_margin
    assert sum(log.min_clearance >= margin for log in logs) >= 24


@pytest.mark.slow
def test_two_poles_ring_without_avoidance_collides(scenario_dir):
    scenario = ScenarioFile.from_toml(scenario_dir / "two_poles_26.toml")
    worlds = ring_worlds(scenario.world, scenario.batch)
    logs = run_batch(worlds, _disabled(scenario.pipeline), parallelism=4)
    assert sum(log.outcome == "collision" for log in logs) >= 1


class TestErrorSweep:
    def test_noise_free_profile_is_flat(self):
        pipeline = PipelineConfig(radar=RadarConfig(noise=NoiseModel.noise_free()))
        result = error_sweep(pipeline, SweepSettings(n_bearings=8, seeds_per_bearing=2))
        assert len(result.rows) == 8
        for row in result.rows:
            assert row.detection_rate == 1.0
            assert row.range_error <= 0.1875
            assert row.bearing_error_deg <= 1e-6

    def test_doubling_bearing_slope_doubles_fit(self):
        settings = SweepSettings(n_bearings=10, seeds_per_bearing=50, seed=3)
        base = NoiseModel(iq_noise_std=0.0)
        slope = 2.0 * base.bearing_error_slope
        doubled = base.model_copy(update={"bearing_error_slope": slope})
        fits = [
            error_sweep(PipelineConfig(radar=RadarConfig(noise=noise)), settings).bearing_fit
            for noise in (base, doubled)
        ]
        assert fits[0].slope > 0.0
        assert fits[1].slope == pytest.approx(2.0 * fits[0].slope, rel=0.1)

    @pytest.mark.slow
    def test_calibrated_noise_gives_linear_trend(self, scenario_dir):
        scenario = ScenarioFile.from_toml(scenario_dir / "error_sweep.toml")
        settings = scenario.sweep.model_copy(update={"seeds_per_bearing": 100})
        result = error_sweep(scenario.pipeline, settings)
        for fit in (result.range_fit, result.bearing_fit):
            assert fit.slope > 0.0
            assert fit.r_squared >= 0.8
        assert result.rows[0].bearing_error_deg < result.rows[-1].bearing_error_deg
