import numpy as np
import pytest

from hyrrt.input_library import InputLibrary, build_library, sample_flow_signal, sample_jump_value


def test_bouncing_ball_library(library):
    assert library.t_max == 0.1
    assert np.array_equal(library.flow_box[0], [0.0]) and np.array_equal(library.flow_box[1], [5.0])


def test_unit_cube_library():
    lib = build_library(0.4, (np.zeros(3), np.ones(3)), (np.zeros(3), np.ones(3)))
    sig = sample_flow_signal(lib, np.random.default_rng(0))
    assert sig.value.shape == (3,)
    assert 0 < sig.duration <= 0.4


@pytest.mark.parametrize("t_max", [0.0, -1.0])
def test_nonpositive_horizon_rejected(t_max):
    with pytest.raises(ValueError):
        build_library(t_max, (0, 5), (0, 5))


@pytest.mark.parametrize(
    "box", [(5.0, 0.0), (np.zeros(2), np.ones(3)), (0.0, np.inf), ([], [])]
)
def test_bad_boxes_rejected(box):
    with pytest.raises(ValueError):
        build_library(0.1, box, (0, 1))
    with pytest.raises(ValueError):
        InputLibrary(0.1, (0, 1), box)


def test_flow_draws_stay_in_range(library):
    rng = np.random.default_rng(1)
    for _ in range(10_000):
        sig = sample_flow_signal(library, rng)
        assert 0.0 < sig.duration <= 0.1
        assert 0.0 <= sig.value[0] <= 5.0


def test_sampling_is_reproducible(library):
    a = [sample_flow_signal(library, np.random.default_rng(42)) for _ in range(3)]
    assert all(s.duration == a[0].duration and np.array_equal(s.value, a[0].value) for s in a)
    r1, r2 = np.random.default_rng(9), np.random.default_rng(9)
    for _ in range(100):
        assert np.array_equal(sample_jump_value(library, r1), sample_jump_value(library, r2))
        s1, s2 = sample_flow_signal(library, r1), sample_flow_signal(library, r2)
        assert s1.duration == s2.duration and np.array_equal(s1.value, s2.value)


def test_duration_mean(library):
    rng = np.random.default_rng(2)
    mean = np.mean([sample_flow_signal(library, rng).duration for _ in range(100_000)])
    assert mean == pytest.approx(0.05, abs=1e-3)


def test_jump_value_mean_and_range(library):
    rng = np.random.default_rng(3)
    draws = np.array([sample_jump_value(library, rng)[0] for _ in range(100_000)])
    assert np.all((draws >= 0) & (draws <= 5))
    assert draws.mean() == pytest.approx(2.5, abs=0.01)


def test_degenerate_jump_box():
    lib = build_library(0.1, (0, 1), ([2.0, -1.0], [2.0, -1.0]))
    rng = np.random.default_rng(4)
    for _ in range(10):
        assert np.array_equal(sample_jump_value(lib, rng), [2.0, -1.0])


def test_library_boxes_are_frozen(library):
    with pytest.raises(ValueError):
        library.flow_box[0][0] = 1.0
