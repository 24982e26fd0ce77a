"""多目标跟踪测试"""

import itertools
import math
from typing import Optional

import numpy as np
import pytest

from app.features.radar.models import RadarConfig
from app.features.tracker.models import (
    CostMatrix,
    Measurement,
    Track,
    TrackerConfig,
    TrackState,
    TrackStatus,
)
from app.features.tracker.service import (
    MultiTargetTracker,
    build_cost_matrix,
    initiate_track,
    innovation,
    manage_lifecycle,
    predict,
    process_noise,
    solve_assignment,
    step,
    track_to_obstacle,
    transition_matrix,
    update,
)


DT = 0.1


def _cost(association: np.ndarray, misdetection: np.ndarray) -> CostMatrix:
    n, m = association.shape
    costs = np.full((n, m + n), np.inf)
    costs[:, :m] = association
    costs[np.arange(n), m + np.arange(n)] = misdetection
    return CostMatrix(costs=costs, n_tracks=n, n_detections=m)


def _brute_force(costs: np.ndarray, n: int, m: int) -> float:
    best = math.inf

    def search(row: int, used: frozenset, total: float) -> None:
        nonlocal best
        if total >= best:
            return
        if row == n:
            best = total
            return
        search(row + 1, used, total + costs[row, m + row])
        for col in range(m):
            if col not in used and np.isfinite(costs[row, col]):
                search(row + 1, used | {col}, total + costs[row, col])

    search(0, frozenset(), 0.0)
    return best


def _track(r: float = 5.0, theta: float = 0.0) -> Track:
    z = Measurement(range=r, bearing=theta, radial_velocity=0.0)
    return initiate_track(1, z, TrackerConfig())


class TestModel:
    def test_transition_matrix_constant_acceleration(self):
        x = np.array([5.0, 0.1, -1.0, 0.2, 0.5, 0.0])
        predicted = transition_matrix(0.5) @ x
        assert predicted[0] == pytest.approx(5.0 - 0.5 + 0.5 * 0.5 * 0.25)
        assert predicted[1] == pytest.approx(0.1 + 0.2 * 0.5)
        assert predicted[2] == pytest.approx(-1.0 + 0.5 * 0.5)

    def test_process_noise_is_symmetric_positive_semidefinite(self):
        Q = process_noise(DT, TrackerConfig())
        assert np.allclose(Q, Q.T)
        assert np.linalg.eigvalsh(Q).min() >= -1e-12

    def test_predict_rejects_non_positive_step(self):
        with pytest.raises(ValueError):
            predict(_track(), 0.0, TrackerConfig())

    def test_thresholds_must_be_ordered(self):
        with pytest.raises(ValueError):
            TrackerConfig(tau_birth=0.5, tau_death=0.2)

    def test_radial_velocity_noise_covers_doppler_quantization(self):
        radar = RadarConfig()
        bin_width = radar.wavelength / (2 * radar.chirps_per_frame * radar.chirp_duration)
        assert TrackerConfig().radial_velocity_std >= bin_width / math.sqrt(12.0)


class TestAssignment:
    def test_diagonal_assignment(self):
        assignment = solve_assignment(
            _cost(np.array([[1.0, 2.0], [3.0, 1.0]]), np.array([10.0, 10.0]))
        )
        assert assignment.track_to_detection == [0, 1]
        assert assignment.total_cost == pytest.approx(2.0)
        assert assignment.unassigned_detections == []

    def test_fully_gated_tracks_are_misdetected(self):
        assignment = solve_assignment(_cost(np.full((2, 3), np.inf), np.array([2.3, 2.3])))
        assert assignment.track_to_detection == [None, None]
        assert assignment.unassigned_detections == [0, 1, 2]

    def test_misdetection_cheaper_than_association(self):
        assignment = solve_assignment(_cost(np.array([[5.0]]), np.array([2.3])))
        assert assignment.track_to_detection == [None]
        assert assignment.unassigned_detections == [0]

    def test_no_tracks(self):
        cost = CostMatrix(costs=np.zeros((0, 2)), n_tracks=0, n_detections=2)
        assert solve_assignment(cost).unassigned_detections == [0, 1]

    def test_matches_brute_force_optimum(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            n, m = int(rng.integers(0, 7)), int(rng.integers(0, 7))
            association = rng.uniform(0.0, 10.0, size=(n, m))
            association[rng.random((n, m)) < 0.3] = np.inf
            cost = _cost(association, rng.uniform(0.5, 5.0, size=n))
            assignment = solve_assignment(cost)

            assert assignment.total_cost == pytest.approx(
                _brute_force(cost.costs, n, m), abs=1e-9
            )
            assigned = [j for j in assignment.track_to_detection if j is not None]
            assert len(assigned) == len(set(assigned))
            for i, j in enumerate(assignment.track_to_detection):
                if j is not None:
                    assert np.isfinite(cost.costs[i, j])


class TestCostMatrix:
    def test_far_detection_is_gated(self):
        config = TrackerConfig()
        tracks = [_track(5.0)]
        near = Measurement(range=5.05, bearing=0.0, radial_velocity=0.0)
        far = Measurement(range=9.0, bearing=0.0, radial_velocity=0.0)
        cost = build_cost_matrix(tracks, [near, far], config)
        assert cost.costs.shape == (1, 3)
        assert np.isfinite(cost.association[0, 0])
        assert np.isinf(cost.association[0, 1])
        assert cost.misdetection[0, 0] == pytest.approx(-math.log(0.1))

    def test_singular_innovation_row_is_gated(self):
        config = TrackerConfig()
        track = _track()
        broken = track.model_copy(
            update={"state": TrackState(x=track.state.x, P=np.full((6, 6), np.nan))}
        )
        z = Measurement(range=5.0, bearing=0.0, radial_velocity=0.0)
        cost = build_cost_matrix([broken], [z], config)
        assert cost.singular_rows == [0]
        assert np.isinf(cost.association).all()


class TestUpdate:
    def test_precise_measurement_pins_state(self):
        config = TrackerConfig(range_std=1e-6, bearing_std=1e-6, radial_velocity_std=1e-6)
        track = initiate_track(
            1, Measurement(range=5.0, bearing=0.0, radial_velocity=0.0), TrackerConfig()
        )
        z = Measurement(range=5.3, bearing=0.05, radial_velocity=-0.4)
        updated, event = update(track, z, config)
        assert event is None
        assert updated.state.x[:3] == pytest.approx(z.vector, abs=1e-6)

    def test_repeated_identical_measurement_contracts_covariance(self):
        config = TrackerConfig()
        track = _track()
        z = Measurement(range=5.0, bearing=0.0, radial_velocity=0.0)
        scores = [track.state.position_score]
        for _ in range(10):
            track, _ = update(track, z, config)
            scores.append(track.state.position_score)
        assert all(later <= earlier + 1e-15 for earlier, later in zip(scores, scores[1:]))

    def test_covariance_stays_symmetric_positive_semidefinite(self):
        config = TrackerConfig()
        rng = np.random.default_rng(4)
        track = _track()
        for _ in range(200):
            track = predict(track, DT, config)
            z = Measurement(
                range=5.0 + 0.15 * rng.standard_normal(),
                bearing=0.035 * rng.standard_normal(),
                radial_velocity=0.5 * rng.standard_normal(),
            )
            track, _ = update(track, z, config)
            P = track.state.P
            assert np.abs(P - P.T).max() <= 1e-9
            assert np.linalg.eigvalsh(P).min() >= -1e-9

    def test_singular_innovation_skips_update_and_inflates(self):
        config = TrackerConfig()
        track = _track()
        singular = track.model_copy(
            update={"state": TrackState(x=track.state.x, P=np.full((6, 6), 1e20))}
        )
        z = Measurement(range=5.5, bearing=0.0, radial_velocity=0.0)
        updated, event = update(singular, z, config)
        assert event is not None and event.kind == "singular"
        assert np.array_equal(updated.state.x, singular.state.x)
        assert updated.state.P == pytest.approx(singular.state.P * config.singular_inflation)

    def test_bearing_residual_wraps(self):
        config = TrackerConfig()
        track = _track(theta=math.pi - 0.01)
        z = Measurement(range=5.0, bearing=-math.pi + 0.01, radial_velocity=0.0)
        residual, _ = innovation(track, z, config)
        assert residual[1] == pytest.approx(0.02)


class TestLifecycle:
    def test_unassigned_detection_spawns_candidate(self):
        ids = itertools.count(1)
        z = Measurement(range=4.0, bearing=0.1, radial_velocity=-0.5)
        tracks, events = manage_lifecycle([], [z], TrackerConfig(), ids)
        assert len(tracks) == 1
        assert tracks[0].status is TrackStatus.CANDIDATE
        assert tracks[0].state.x[:3] == pytest.approx(z.vector)
        assert tracks[0].state.x[3:] == pytest.approx(np.zeros(3))
        assert [event.kind for event in events] == ["birth"]

    def test_empty_is_noop(self):
        assert manage_lifecycle([], [], TrackerConfig(), itertools.count(1)) == ([], [])

    def test_confirm_within_five_frames_then_die_within_ten(self):
        tracker = MultiTargetTracker()
        z = Measurement(range=5.0, bearing=0.1, radial_velocity=0.0)
        confirmed_at = None
        for frame in range(5):
            tracker.step([z.model_copy(update={"timestamp": frame * DT})], frame * DT)
            if tracker.confirmed:
                confirmed_at = frame
                break
        assert confirmed_at is not None
        assert len(tracker.tracks) == 1

        died_after = None
        for coast in range(1, 11):
            tracker.step([], (confirmed_at + coast) * DT)
            if not tracker.tracks:
                died_after = coast
                break
        assert died_after is not None

    def test_ids_are_never_reused(self):
        tracker = MultiTargetTracker()
        born: list[int] = []
        time = 0.0
        for burst in range(3):
            z = Measurement(range=3.0 + 3.0 * burst, bearing=0.0, radial_velocity=0.0)
            for _ in range(3):
                result = tracker.step([z.model_copy(update={"timestamp": time})], time)
                born.extend(e.track_id for e in result.events if e.kind == "birth")
                time += DT
            for _ in range(12):
                tracker.step([], time)
                time += DT
            assert tracker.tracks == []
        assert born == sorted(set(born))
        assert len(born) == 3

    def test_no_targets_no_tracks(self):
        tracker = MultiTargetTracker()
        for frame in range(20):
            tracker.step([], frame * DT)
        assert tracker.tracks == []

    def test_birth_exclusion_suppresses_duplicate(self):
        config = TrackerConfig()
        ids = itertools.count(1)
        z = Measurement(range=5.0, bearing=0.0, radial_velocity=0.0)
        result = step([], [z], 0.0, config, ids)
        # 两个量测都落在同一航迹门限内，只有一个被关联
        twin = [
            z.model_copy(update={"timestamp": DT}),
            Measurement(range=5.02, bearing=0.0, radial_velocity=0.0, timestamp=DT),
        ]
        result = step(result.tracks, twin, DT, config, ids, DT)
        assert len(result.tracks) == 1

        without = config.model_copy(update={"birth_exclusion": False})
        first = step([], [z], 0.0, without, ids)
        result = step(first.tracks, twin, DT, without, ids, DT)
        assert len(result.tracks) == 2

    def test_second_target_inside_gate_is_born(self):
        tracker = MultiTargetTracker()
        for frame in range(5):
            time = frame * DT
            tracker.step(
                [Measurement(range=5.0, bearing=0.0, radial_velocity=0.0, timestamp=time)], time
            )
        for frame in range(5, 30):
            time = frame * DT
            tracker.step(
                [
                    Measurement(range=r, bearing=0.0, radial_velocity=0.0, timestamp=time)
                    for r in (5.0, 5.6)
                ],
                time,
            )
        ranges = sorted(float(track.state.x[0]) for track in tracker.confirmed)
        assert ranges == pytest.approx([5.0, 5.6], abs=0.05)


def test_filter_beats_raw_measurements():
    config = TrackerConfig(q_range=1.0, radial_velocity_std=0.5)
    sigma = config.range_std
    filtered_sq, raw_sq = [], []
    for seed in range(100):
        rng = np.random.default_rng(seed)
        track: Optional[Track] = None
        for frame in range(50):
            time = frame * DT
            truth = 10.0 - 1.0 * time
            z = Measurement(
                range=truth + sigma * rng.standard_normal(),
                bearing=config.bearing_std * rng.standard_normal(),
                radial_velocity=-1.0 + config.radial_velocity_std * rng.standard_normal(),
                timestamp=time,
            )
            if track is None:
                track = initiate_track(1, z, config)
                continue
            track, _ = update(predict(track, DT, config), z, config)
            if frame >= 10:
                filtered_sq.append((track.state.x[0] - truth) ** 2)
                raw_sq.append((z.range - truth) ** 2)
    assert math.sqrt(np.mean(filtered_sq)) < 0.7 * math.sqrt(np.mean(raw_sq))


def test_crossing_targets_keep_identity():
    config = TrackerConfig()
    rng = np.random.default_rng(0)
    tracker = MultiTargetTracker(config)
    labels: dict[str, set[int]] = {"near": set(), "far": set()}
    for frame in range(30):
        time = frame * DT
        truths = {"near": (4.0, 0.3 - 0.02 * frame), "far": (8.0, -0.3 + 0.02 * frame)}
        measurements = [
            Measurement(
                range=r + config.range_std * rng.standard_normal(),
                bearing=theta + config.bearing_std * rng.standard_normal(),
                radial_velocity=config.radial_velocity_std * rng.standard_normal(),
                timestamp=time,
            )
            for r, theta in truths.values()
        ]
        tracker.step(measurements, time)
        if frame >= 15:
            for track in tracker.confirmed:
                label = min(truths, key=lambda name: abs(truths[name][0] - track.state.x[0]))
                labels[label].add(track.id)
    assert len(tracker.confirmed) == 2
    assert len(labels["near"]) == 1 and len(labels["far"]) == 1
    assert labels["near"] != labels["far"]


class TestTrackToObstacle:
    @staticmethod
    def _with_state(r: float, theta: float, r_dot: float, theta_dot: float) -> Track:
        x = np.array([r, theta, r_dot, theta_dot, 0.0, 0.0])
        return Track(id=1, state=TrackState(x=x, P=np.eye(6)))

    def test_boresight_approach(self):
        position, velocity = track_to_obstacle(self._with_state(5.0, 0.0, -1.0, 0.0))
        assert position == pytest.approx([5.0, 0.0])
        assert velocity == pytest.approx([-1.0, 0.0])

    def test_tangential_motion_on_left(self):
        position, velocity = track_to_obstacle(self._with_state(5.0, math.pi / 2, 0.0, 0.2))
        assert position == pytest.approx([0.0, 5.0], abs=1e-12)
        assert velocity == pytest.approx([-1.0, 0.0], abs=1e-12)

    def test_static(self):
        _, velocity = track_to_obstacle(self._with_state(3.0, 0.0, 0.0, 0.0))
        assert velocity == pytest.approx([0.0, 0.0])
