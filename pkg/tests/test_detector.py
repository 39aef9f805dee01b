import numpy as np
import pytest
from dataclasses import replace

from raindet import detector as det, imgcore
from raindet.detector import DetectorParams, FrameSequence
from raindet.errors import DimensionError, InputError, ParameterError

SMALL = DetectorParams(d=23, m=7)


def frames(rng, n=3, h=8, w=8):
    return rng.integers(0, 256, size=(n, h, w), dtype=np.uint8)


def test_sequence_validation():
    with pytest.raises(InputError):
        FrameSequence.from_frames([])
    with pytest.raises(DimensionError, match="8x8"):
        FrameSequence.from_frames([np.zeros((8, 8)), np.zeros((8, 9))])
    assert len(FrameSequence(np.zeros((4, 5, 6)))) == 4


def test_params_validation():
    for bad in (dict(d=4), dict(m=0), dict(t_b=1.2), dict(t_d=-0.1), dict(sobel_aperture=7)):
        with pytest.raises(ParameterError):
            DetectorParams(**bad)
    assert DetectorParams() == DetectorParams(5, 271, 0.18, 91, 0.1)


def test_scale_params_rounds_to_odd():
    p = det.scale_params(DetectorParams(), 128, 128)
    # diagonal ratio 181.02 / 2202.91 = 0.0822 -> d 22.27 -> 23 (odd), m 7.48 -> 7
    assert (p.d, p.m) == (23, 7)
    assert p.t_b == 0.18 and p.t_d == 0.1
    assert det.scale_params(DetectorParams(), 1920, 1080) == DetectorParams()


# --- averaged_gradient ----------------------------------------------------------------------

def test_identical_frames_equal_single_magnitude(rng):
    f = frames(rng, 1)[0]
    g = det.averaged_gradient([f] * 5, 5)
    single = imgcore.gradient_magnitude(*imgcore.sobel_gradients(f, 5))
    np.testing.assert_allclose(g, single, atol=1e-9)


def test_constant_frames_zero_map():
    seq = FrameSequence(np.stack([np.full((6, 6), v, np.uint8) for v in (0, 50, 200)]))
    assert not det.averaged_gradient(seq, 3).any()


def test_mean_matches_independent_recomputation(rng):
    import oracles

    fs = frames(rng, 3)
    want = np.zeros((8, 8))
    for f in fs:
        gx, gy = oracles.sobel(f, 5)
        want += np.hypot(gx, gy)
    np.testing.assert_allclose(det.averaged_gradient(fs, 5), want / 3, rtol=1e-12)


def test_averaged_gradient_errors(rng):
    with pytest.raises(InputError):
        det.averaged_gradient([], 5)
    with pytest.raises(DimensionError):
        det.averaged_gradient([np.zeros((4, 4)), np.zeros((5, 4))], 5)


def test_permutation_and_duplication_invariance(rng):
    fs = frames(rng, 6, 16, 16)
    g = det.averaged_gradient(fs)
    np.testing.assert_allclose(det.averaged_gradient(fs[::-1]), g, atol=1e-9)
    np.testing.assert_allclose(det.averaged_gradient(np.concatenate([fs, fs])), g, atol=1e-9)


def test_thread_count_does_not_change_bits(rng):
    fs = frames(rng, 7, 32, 32)
    a = det.averaged_gradient(fs, threads=1)
    b = det.averaged_gradient(fs, threads=4)
    assert a.tobytes() == b.tobytes()


# --- segment / detect -----------------------------------------------------------------------

def test_segment_is_exact_composition(rng):
    fs = frames(rng, 4, 40, 40)
    p = DetectorParams(d=9, t_b=0.4, m=5)
    manual = imgcore.dilate(
        imgcore.threshold_inverse(imgcore.gaussian_blur(det.averaged_gradient(fs, 5), 9), 0.4), 5
    )
    np.testing.assert_array_equal(det.segment(fs, p), manual)


def test_constant_sequence_fully_flagged():
    seq = np.full((10, 32, 32), 90, np.uint8)
    assert det.segment(seq).all()
    res = det.detect(seq, DetectorParams(t_d=0.1))
    assert res.detected and res.artifact_fraction == 1.0


def test_iid_noise_default_params_not_flagged():
    fs = np.random.default_rng(0).integers(0, 256, (10, 128, 128), dtype=np.uint8)
    res = det.detect(fs)
    assert res.artifact_fraction < 0.1
    assert not res.detected


def test_noise_translation_not_detected(noise_scene):
    assert not det.detect(noise_scene.sequence).detected
    assert not det.detect(noise_scene.sequence, SMALL).detected


def test_static_drop_recovered(drop_scene):
    res = det.detect(drop_scene.sequence, SMALL)
    inter = np.count_nonzero(res.mask & drop_scene.mask)
    union = np.count_nonzero(res.mask | drop_scene.mask)
    assert inter / union >= 0.5


def test_detection_strictly_exceeds_td():
    seq = np.zeros((2, 10, 10), np.uint8)
    seq[:, :, 5:] = np.random.default_rng(3).integers(0, 256, (2, 10, 5))
    p = DetectorParams(d=1, m=1, t_b=0.0, t_d=0.0)
    res = det.detect(seq, p)
    fraction = np.count_nonzero(res.mask) / res.mask.size
    assert res.artifact_fraction == fraction
    assert res.detected == (fraction > 0.0)
    edge = replace(p, t_d=fraction)
    assert det.detect(seq, edge).detected is False


def test_result_fraction_consistent(drop_scene):
    res = det.detect(drop_scene.sequence, SMALL)
    assert res.artifact_fraction == np.count_nonzero(res.mask) / res.mask.size
    assert res.detected == (res.artifact_fraction > SMALL.t_d)
    assert res.averaged_gradient.shape == res.mask.shape


def test_fraction_monotone_in_tb(drop_scene):
    tbs = [round(0.1 + 0.05 * i, 2) for i in range(17)]
    fr = det.fractions_over_tb(drop_scene.sequence, SMALL, tbs)
    assert all(a <= b for a, b in zip(fr, fr[1:]))
    # the fast sweep agrees with full detect calls
    for t in (0.1, 0.45, 0.9):
        assert fr[tbs.index(t)] == det.detect(drop_scene.sequence, replace(SMALL, t_b=t)).artifact_fraction


def test_timings_collected(drop_scene):
    timings = {}
    det.detect(drop_scene.sequence, SMALL, timings=timings)
    assert set(timings) == {"gradient", "blur", "threshold", "dilate"}
    assert all(v >= 0 for v in timings.values())


# --- properties -----------------------------------------------------------------------------

from hypothesis import given, settings, strategies as st  # noqa: E402


def _seq_from_seed(seed, n, h, w):
    return np.random.default_rng(seed).integers(0, 256, (n, h, w), dtype=np.uint8)


seq_args = st.tuples(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(4, 24), st.integers(4, 24))
param_st = st.builds(DetectorParams, sobel_aperture=st.sampled_from([3, 5]),
                     d=st.sampled_from([1, 3, 7, 15]), t_b=st.floats(0, 1),
                     m=st.sampled_from([1, 3, 5]), t_d=st.floats(0, 1))


@settings(max_examples=40, deadline=None)
@given(seq_args, param_st, st.randoms(use_true_random=False))
def test_prop_permutation(args, params, rnd):
    fs = _seq_from_seed(*args)
    order = list(range(len(fs)))
    rnd.shuffle(order)
    a, b = det.detect(fs, params), det.detect(fs[order], params)
    np.testing.assert_allclose(a.averaged_gradient, b.averaged_gradient, rtol=0, atol=1e-9)
    assert a.detected == (np.count_nonzero(a.mask) / a.mask.size > params.t_d)


@settings(max_examples=40, deadline=None)
@given(seq_args, param_st)
def test_prop_duplication_and_composition(args, params):
    fs = _seq_from_seed(*args)
    g = det.averaged_gradient(fs, params.sobel_aperture)
    np.testing.assert_allclose(det.averaged_gradient(np.concatenate([fs, fs]), params.sobel_aperture), g,
                               rtol=0, atol=1e-9)
    manual = imgcore.dilate(imgcore.threshold_inverse(imgcore.gaussian_blur(g, params.d), params.t_b), params.m)
    np.testing.assert_array_equal(det.segment(fs, params), manual)


@settings(max_examples=40, deadline=None)
@given(seq_args, param_st, st.lists(st.floats(0, 1), min_size=2, max_size=8))
def test_prop_tb_monotone(args, params, tbs):
    fs = _seq_from_seed(*args)
    tbs = sorted(tbs)
    fr = det.fractions_over_tb(fs, params, tbs)
    assert all(x <= y for x, y in zip(fr, fr[1:]))
    assert fr == [det.detect(fs, replace(params, t_b=t)).artifact_fraction for t in tbs]


@settings(max_examples=20, deadline=None)
@given(seq_args, st.integers(2, 6))
def test_prop_threads_bitwise(args, threads):
    fs = _seq_from_seed(*args)
    assert det.averaged_gradient(fs, threads=1).tobytes() == det.averaged_gradient(fs, threads=threads).tobytes()
