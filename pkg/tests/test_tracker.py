"""Tracking loop: particle sampling, scoring, MAP selection, gated updates."""

import numpy as np
import pytest

from bmrtrack.classifier import predict, represent
from bmrtrack.config import RunConfig
from bmrtrack.imgproc import TargetState, extract_patch
from bmrtrack.tracker import (
    BmrTracker,
    MotionModel,
    TrackingLostError,
    sample_particles,
    track_sequence,
)

FAST = RunConfig(n_particles=120, beta=60.0)  # smaller search keeps unit tests quick


class TestSampleParticles:
    def test_mean_converges_to_previous_state(self):
        rng = np.random.default_rng(0)
        prev = TargetState(100.0, 80.0, 1.0)
        mm = MotionModel()
        n = 100_000
        ps = sample_particles(prev, mm, n, rng)
        for col, mean, sigma in ((0, prev.x, mm.sigma_x), (1, prev.y, mm.sigma_y),
                                 (2, prev.s, mm.sigma_s)):
            assert abs(ps.states[:, col].mean() - mean) < 3.0 * sigma / np.sqrt(n)

    def test_zero_sigma_collapses_to_previous(self):
        rng = np.random.default_rng(1)
        prev = TargetState(10.0, 20.0, 1.5)
        ps = sample_particles(prev, MotionModel(0.0, 0.0, 0.0), 50, rng)
        assert np.all(ps.states == np.array([10.0, 20.0, 1.5]))

    def test_scale_clamped_above_floor(self):
        rng = np.random.default_rng(2)
        prev = TargetState(0.0, 0.0, 0.06)
        ps = sample_particles(prev, MotionModel(1.0, 1.0, 5.0), 2000, rng)
        assert ps.states[:, 2].min() >= 0.05
        assert ps.states[:, 2].max() <= 20.0

    def test_default_count_matches_config(self):
        assert RunConfig().n_particles == 400

    def test_needs_at_least_one_particle(self):
        with pytest.raises(ValueError):
            sample_particles(TargetState(0, 0, 1), MotionModel(), 0, np.random.default_rng(3))


class TestInit:
    def test_state_is_box_center_at_unit_scale(self, scene_factory):
        frames, boxes = scene_factory(1, seed=3)
        tracker = BmrTracker(FAST)
        state = tracker.init(frames[0], boxes[0], seed=5)
        x, y, w, h = boxes[0]
        # working frame equals the native 240x320 scene, so no rescaling
        assert state.x == pytest.approx(x + w / 2)
        assert state.y == pytest.approx(y + h / 2)
        assert state.s == 1.0

    def test_target_scores_above_background(self, scene_factory):
        frames, boxes = scene_factory(1, seed=4)
        tracker = BmrTracker(FAST)
        tracker.init(frames[0], boxes[0], seed=5)
        x, y, w, h = boxes[0]
        on_target = extract_patch(frames[0], TargetState(x + w / 2, y + h / 2, 1.0), (w, h))
        far = extract_patch(frames[0], TargetState(260.0, 40.0, 1.0), (w, h))
        mode = tracker.mode
        f_target = predict(tracker.w, represent(on_target, mode))
        f_far = predict(tracker.w, represent(far, mode))
        assert f_target > f_far
        assert f_target > 0.9

    def test_deterministic_for_fixed_seed(self, scene_factory):
        frames, boxes = scene_factory(1, seed=5)
        a = BmrTracker(FAST)
        a.init(frames[0], boxes[0], seed=9)
        b = BmrTracker(FAST)
        b.init(frames[0], boxes[0], seed=9)
        assert np.array_equal(a.w, b.w)

    def test_degenerate_box_rejected(self, scene_factory):
        frames, _ = scene_factory(1)
        with pytest.raises(ValueError):
            BmrTracker(FAST).init(frames[0], (10, 10, 0, 5))

    def test_box_outside_frame_rejected(self, scene_factory):
        frames, _ = scene_factory(1)
        with pytest.raises(ValueError):
            BmrTracker(FAST).init(frames[0], (300, 230, 40, 40))


class TestScoreParticles:
    @pytest.fixture
    def ready(self, scene_factory):
        frames, boxes = scene_factory(2, seed=6)
        tracker = BmrTracker(FAST)
        tracker.init(frames[0], boxes[0], seed=11)
        return tracker, frames, boxes

    def test_scores_in_unit_interval(self, ready):
        tracker, frames, _ = ready
        rng = np.random.default_rng(4)
        ps = sample_particles(tracker.current, tracker.motion_model(), 64, rng)
        scores = tracker.score_particles(frames[1], ps)
        assert np.all(scores >= 0.0)
        assert np.all(scores <= 1.0)

    def test_duplicate_particles_get_identical_scores(self, ready):
        tracker, frames, boxes = ready
        x, y, w, h = boxes[1]
        state = np.array([x + w / 2, y + h / 2, 1.0])
        from bmrtrack.tracker import ParticleSet

        ps = ParticleSet(np.stack([state, state, state]), np.full(3, 1 / 3))
        scores = tracker.score_particles(frames[1], ps)
        assert scores[0] == scores[1] == scores[2]

    def test_on_target_beats_background_median(self, ready):
        tracker, frames, boxes = ready
        x, y, w, h = boxes[1]
        rng = np.random.default_rng(5)
        bg = np.column_stack([
            rng.uniform(200, 300, size=25), rng.uniform(20, 60, size=25), np.ones(25),
        ])
        from bmrtrack.tracker import ParticleSet

        states = np.vstack([[x + w / 2, y + h / 2, 1.0], bg])
        scores = tracker.score_particles(frames[1], ParticleSet(states, np.full(26, 1 / 26)))
        assert scores[0] > np.median(scores[1:])

    def test_worker_count_does_not_change_scores(self, ready):
        tracker, frames, _ = ready
        rng = np.random.default_rng(6)
        ps = sample_particles(tracker.current, tracker.motion_model(), 40, rng)
        serial = tracker.score_particles(frames[1], ps)
        tracker.config = tracker.config.replaced(workers=4)
        parallel = tracker.score_particles(frames[1], ps)
        assert np.array_equal(serial, parallel)


class TestStep:
    def test_static_target_stays_within_two_pixels(self, scene_factory):
        frames, boxes = scene_factory(8, step=0, seed=7)
        tracker = BmrTracker(FAST)
        tracker.init(frames[0], boxes[0], seed=13)
        x, y, w, h = boxes[0]
        cx, cy = x + w / 2, y + h / 2
        for frame in frames[1:]:
            state = tracker.step(frame)
            assert abs(state.x - cx) <= 2.0
            assert abs(state.y - cy) <= 2.0

    def test_confident_frame_leaves_weights_bit_identical(self, scene_factory):
        frames, boxes = scene_factory(4, step=0, seed=8)
        tracker = BmrTracker(FAST)
        tracker.init(frames[0], boxes[0], seed=17)
        for frame in frames[1:]:
            before = tracker.w.copy()
            tracker.step(frame)
            rec = tracker.records[-1]
            if rec.confidence >= tracker.config.rho:
                assert not rec.updated
                assert np.array_equal(tracker.w, before)
            else:
                assert rec.updated

    def test_map_selection_invariant(self, scene_factory):
        frames, boxes = scene_factory(5, seed=9)
        tracker = BmrTracker(FAST)
        tracker.init(frames[0], boxes[0], seed=19)
        for frame in frames[1:]:
            state = tracker.step(frame)
            best = int(np.argmax(tracker.last_log_weights))
            assert state.x == tracker.last_particles.states[best, 0]
            assert state.y == tracker.last_particles.states[best, 1]

    def test_all_particles_out_of_view_raises_lost(self, scene_factory):
        frames, boxes = scene_factory(2, seed=10)
        tracker = BmrTracker(FAST.replaced(sigma_x=0.5, sigma_y=0.5))
        tracker.init(frames[0], boxes[0], seed=23)
        # teleport the state far outside the working frame
        tracker.current = TargetState(5000.0, 5000.0, 1.0)
        with pytest.raises(TrackingLostError):
            tracker.step(frames[1])
        assert tracker.records[-1].lost

    def test_step_before_init_rejected(self, scene_factory):
        frames, _ = scene_factory(1)
        with pytest.raises(RuntimeError):
            BmrTracker(FAST).step(frames[0])


class TestTrackSequence:
    def test_single_frame_echoes_init_box(self, scene_factory):
        frames, boxes = scene_factory(1, seed=11)
        out, records = track_sequence(frames, boxes[0], FAST, seed=29)
        assert out == [boxes[0]]
        assert records[0].confidence == 0.5
        assert records[0].updated

    def test_output_length_matches_frames(self, scene_factory):
        frames, boxes = scene_factory(6, seed=12)
        out, records = track_sequence(frames, boxes[0], FAST, seed=29)
        assert len(out) == len(frames)
        assert [r.frame for r in records] == list(range(len(frames)))

    def test_reproducible_for_same_seed(self, scene_factory):
        frames, boxes = scene_factory(5, seed=13)
        a, _ = track_sequence(frames, boxes[0], FAST, seed=31)
        b, _ = track_sequence(frames, boxes[0], FAST, seed=31)
        assert a == b

    def test_different_seeds_may_differ_but_stay_valid(self, scene_factory):
        frames, boxes = scene_factory(4, seed=14)
        out, _ = track_sequence(frames, boxes[0], FAST, seed=37)
        for x, y, w, h in out:
            assert np.isfinite([x, y, w, h]).all()
            assert w > 0 and h > 0

    def test_moving_target_followed(self, scene_factory):
        from bmrtrack.evaluate import overlap

        frames, boxes = scene_factory(25, seed=15)
        out, _ = track_sequence(frames, boxes[0], FAST, seed=41)
        overlaps = [overlap(b, g) for b, g in zip(out, boxes)]
        assert np.mean(overlaps) >= 0.6

    def test_empty_sequence_rejected(self):
        with pytest.raises(ValueError):
            track_sequence([], (0, 0, 10, 10), FAST)


class TestCoordinateConversion:
    def test_boxes_reported_in_original_coordinates(self, scene_factory):
        # 480x640 original frames downscale by half into the working frame
        frames, boxes = scene_factory(3, size=(480, 640), box=80, step=0, seed=16)
        out, _ = track_sequence(frames, boxes[0], FAST, seed=43)
        for x, y, w, h in out:
            assert 0 <= x <= 640 and 0 <= y <= 480
            assert w == pytest.approx(80, abs=30)
            assert h == pytest.approx(80, abs=30)
