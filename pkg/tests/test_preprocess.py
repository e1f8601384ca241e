import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trajlab.errors import ValidationError
from trajlab.geometry import TrajectorySet, arc_length, cumulative_arclength
from trajlab.preprocess import (
    DEFAULT_K,
    FilterParams,
    ResampledPath,
    filter_broken,
    resample,
    resample_all,
)

from conftest import make_traj, straight_traj


def tset_of(*trajs):
    return TrajectorySet(tuple(trajs), (640, 360))


class TestFilterParams:
    def test_defaults(self):
        p = FilterParams()
        assert (p.min_points, p.min_path_length, p.max_time_gap, p.min_duration) == (10, 40.0, 2.0, 1.0)

    def test_rescaled_touches_only_pixels(self):
        p = FilterParams().rescaled(2.0)
        assert p.min_path_length == 80.0
        assert (p.min_points, p.max_time_gap, p.min_duration) == (10, 2.0, 1.0)

    @pytest.mark.parametrize("kw", [{"min_points": 0}, {"min_path_length": -1.0}, {"max_time_gap": 0.0}])
    def test_rejects_nonpositive(self, kw):
        with pytest.raises(ValidationError):
            FilterParams(**kw)


class TestFilterBroken:
    def test_single_point_discarded_for_count(self):
        kept, discards = filter_broken(tset_of(make_traj("a", [(5, 5)])), FilterParams())
        assert len(kept) == 0
        assert discards == [("a", "min_points")]

    def test_long_clean_trajectory_kept(self):
        # 100 points over 20 s covering 500 px: passes every criterion
        t = straight_traj("ok", (0, 100), (500, 100), n=100, dt=20.0 / 99)
        kept, discards = filter_broken(tset_of(t), FilterParams())
        assert kept.ids == ("ok",)
        assert discards == []

    def test_short_path_discarded(self):
        t = straight_traj("short", (0, 0), (30, 0), n=20, dt=0.2)
        _, discards = filter_broken(tset_of(t), FilterParams())
        assert discards == [("short", "min_path_length")]

    def test_time_gap_discarded(self):
        coords = [(i * 10.0, 0.0) for i in range(12)]
        times = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 6.0, 6.5, 7.0, 7.5, 8.0, 8.5]
        from trajlab.geometry import TrackPoint, Trajectory

        t = Trajectory("gap", tuple(TrackPoint(x, y, ti) for (x, y), ti in zip(coords, times)))
        _, discards = filter_broken(tset_of(t), FilterParams())
        assert discards == [("gap", "max_time_gap")]

    def test_too_brief_discarded(self):
        t = straight_traj("brief", (0, 0), (100, 0), n=12, dt=0.05)  # 0.55 s on screen
        _, discards = filter_broken(tset_of(t), FilterParams())
        assert discards == [("brief", "min_duration")]

    def test_reason_is_first_violated_criterion(self):
        # violates min_points AND min_path_length AND min_duration
        t = make_traj("multi", [(0, 0), (1, 0)], dt=0.1)
        _, discards = filter_broken(tset_of(t), FilterParams())
        assert discards == [("multi", "min_points")]

    def test_partition_is_exact(self):
        trajs = [straight_traj(f"t{i}", (0, i), (500, i), n=100, dt=0.25) for i in range(5)]
        trajs.append(make_traj("frag", [(0, 0), (2, 0)]))
        kept, discards = filter_broken(tset_of(*trajs), FilterParams())
        assert len(kept) + len(discards) == 6
        assert set(kept.ids) | {d[0] for d in discards} == {t.id for t in trajs}

    def test_idempotent(self):
        trajs = [straight_traj(f"t{i}", (0, i), (500, i), n=100, dt=0.25) for i in range(3)]
        trajs.append(make_traj("frag", [(0, 0), (2, 0)]))
        kept, _ = filter_broken(tset_of(*trajs), FilterParams())
        kept2, discards2 = filter_broken(kept, FilterParams())
        assert kept2.ids == kept.ids
        assert discards2 == []


class TestResample:
    def test_straight_line_uniform(self):
        t = straight_traj("a", (0, 0), (10, 0), n=3, dt=1.0)
        r = resample(t, k=5)
        assert r.samples.tolist() == [[0, 0], [2.5, 0], [5, 0], [7.5, 0], [10, 0]]

    def test_k2_keeps_endpoints_only(self):
        t = make_traj("a", [(0, 0), (3, 7), (10, 0)])
        r = resample(t, k=2)
        assert r.samples.tolist() == [[0, 0], [10, 0]]

    def test_l_shape_corner_hit(self):
        # two 10 px legs: k=3 puts the middle sample exactly on the corner
        t = make_traj("a", [(0, 0), (10, 0), (10, 10)])
        r = resample(t, k=3)
        assert r.samples.tolist() == [[0, 0], [10, 0], [10, 10]]

    def test_endpoints_exact(self):
        t = make_traj("a", [(0.1, 0.2), (3.7, 9.1), (5.3, 2.2)])
        r = resample(t, k=7)
        assert r.samples[0].tolist() == [0.1, 0.2]
        assert r.samples[-1].tolist() == [5.3, 2.2]

    def test_default_k(self):
        t = straight_traj("a", (0, 0), (100, 0))
        assert resample(t).k == DEFAULT_K == 64

    def test_dwell_does_not_shift_samples(self):
        # repeated coordinates (queuing) collapse before resampling
        moving = make_traj("m", [(0, 0), (5, 0), (10, 0)])
        dwelling = make_traj("d", [(0, 0), (5, 0), (5, 0.0), (10, 0)])
        # construct the dwell trajectory with distinct times but repeated coords
        from trajlab.geometry import TrackPoint, Trajectory

        dwelling = Trajectory(
            "d",
            (
                TrackPoint(0, 0, 0.0),
                TrackPoint(5, 0, 1.0),
                TrackPoint(5, 0, 2.0),
                TrackPoint(5, 0, 3.0),
                TrackPoint(10, 0, 4.0),
            ),
        )
        assert resample(moving, k=5).samples.tolist() == resample(dwelling, k=5).samples.tolist()

    def test_arclength_never_grows(self):
        t = make_traj("a", [(0, 0), (10, 0), (10, 10), (0, 10), (0, 20)])
        r = resample(t, k=9)
        assert arc_length(r.samples) <= t.path_length + 1e-9

    def test_densification_invariance(self):
        # subdividing segments of the source polyline barely moves the samples
        coarse = make_traj("c", [(0, 0), (10, 0), (10, 10)])
        fine_pts = [(x, 0.0) for x in np.linspace(0, 10, 21)] + [(10.0, y) for y in np.linspace(0.5, 10, 20)]
        fine = make_traj("f", fine_pts)
        rc = resample(coarse, k=16).samples
        rf = resample(fine, k=16).samples
        assert np.abs(rc - rf).max() < 1e-6

    def test_zero_length_rejected(self):
        from trajlab.geometry import TrackPoint, Trajectory

        t = Trajectory("still", (TrackPoint(5, 5, 0.0), TrackPoint(5, 5, 1.0)))
        with pytest.raises(ValidationError, match="degenerate"):
            resample(t)

    def test_k_too_small(self):
        with pytest.raises(ValidationError):
            resample(straight_traj("a", (0, 0), (10, 0)), k=1)

    def test_samples_read_only(self):
        r = resample(straight_traj("a", (0, 0), (10, 0)), k=4)
        with pytest.raises(ValueError):
            r.samples[0, 0] = 99.0

    @given(
        st.lists(
            st.tuples(
                st.floats(min_value=0, max_value=600, allow_nan=False),
                st.floats(min_value=0, max_value=350, allow_nan=False),
            ),
            min_size=2,
            max_size=12,
        ),
        st.integers(min_value=2, max_value=40),
    )
    def test_chord_bound_property(self, coords, k):
        if all(a == b for a, b in zip(coords, coords[1:])):
            return
        t = make_traj("h", coords)
        r = resample(t, k=k)
        assert r.samples[0].tolist() == list(coords[0])
        assert r.samples[-1].tolist() == list(coords[-1])
        # consecutive samples are one arc-length step apart on the source
        # curve, so each chord is bounded by that step (folds shrink it)
        step = t.path_length / (k - 1)
        seg = np.diff(cumulative_arclength(r.samples))
        assert seg.max() <= step + 1e-9 * max(1.0, step)
        assert arc_length(r.samples) <= t.path_length + 1e-9 * max(1.0, t.path_length)


class TestResampleAll:
    def test_preserves_order_and_k(self):
        trajs = [straight_traj(f"t{i}", (0, i * 5), (200, i * 5)) for i in range(4)]
        out = resample_all(tset_of(*trajs), k=32)
        assert [r.source_id for r in out] == [t.id for t in trajs]
        assert all(r.k == 32 for r in out)


class TestResampledPath:
    def test_shape_validation(self):
        with pytest.raises(ValidationError):
            ResampledPath("x", np.zeros((3, 3)))
        with pytest.raises(ValidationError):
            ResampledPath("x", np.zeros((1, 2)))
