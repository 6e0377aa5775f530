import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_glcm
from texturekit.errors import DataValidationError, ParameterError
from texturekit.glcm import DIRECTIONS, Direction, compute_glcm, glcm_all_directions


@st.composite
def quantized(draw, max_side=12, max_levels=8):
    levels = draw(st.integers(2, max_levels))
    h = draw(st.integers(2, max_side))
    w = draw(st.integers(2, max_side))
    seed = draw(st.integers(0, 2**32 - 1))
    return np.random.default_rng(seed).integers(0, levels, (h, w)), levels


def test_single_pair():
    g = compute_glcm(np.array([[0, 1]]), 2, Direction.HORIZONTAL)
    assert g.counts.tolist() == [[0, 1], [1, 0]]
    np.testing.assert_array_equal(g.probs, [[0, 0.5], [0.5, 0]])


@pytest.mark.parametrize("d", DIRECTIONS)
def test_constant_image(d):
    P = compute_glcm(np.full((4, 4), 3), 4, d).probs
    expected = np.zeros((4, 4))
    expected[3, 3] = 1
    np.testing.assert_array_equal(P, expected)


def test_worked_example_matches_enumerator():
    img = np.array([[0, 0, 1, 1], [0, 0, 1, 1], [0, 2, 2, 2], [2, 2, 3, 3]])
    np.testing.assert_array_equal(compute_glcm(img, 4).counts, brute_force_glcm(img, 4, 0, 1))


def test_enumerator_on_200_random_images():
    rng = np.random.default_rng(1)
    for _ in range(200):
        levels = int(rng.integers(2, 9))
        img = rng.integers(0, levels, (int(rng.integers(2, 17)), int(rng.integers(2, 17))))
        for d in DIRECTIONS:
            np.testing.assert_array_equal(compute_glcm(img, levels, d).counts,
                                          brute_force_glcm(img, levels, *d.offset))


@settings(max_examples=50, deadline=None)
@given(quantized(), st.integers(1, 3))
def test_distance_matches_enumerator(qi, dist):
    img, levels = qi
    for d in DIRECTIONS:
        dr, dc = d.offset
        if abs(dr) * dist >= img.shape[0] or abs(dc) * dist >= img.shape[1]:
            with pytest.raises(DataValidationError):
                compute_glcm(img, levels, d, dist)
            continue
        np.testing.assert_array_equal(compute_glcm(img, levels, d, dist).counts,
                                      brute_force_glcm(img, levels, dr * dist, dc * dist))


@settings(max_examples=100, deadline=None)
@given(quantized())
def test_symmetry_and_horizontal_total(qi):
    img, levels = qi
    for g in glcm_all_directions(img, levels):
        np.testing.assert_array_equal(g.counts, g.counts.T)
    h, w = img.shape
    assert compute_glcm(img, levels).total == 2 * h * (w - 1)


@settings(max_examples=100, deadline=None)
@given(quantized())
def test_rotation_swaps_directions(qi):
    img, levels = qi
    rot = np.rot90(img)
    H, V, LD, RD = (compute_glcm(img, levels, d).counts for d in DIRECTIONS)
    rH, rV, rLD, rRD = (compute_glcm(rot, levels, d).counts for d in DIRECTIONS)
    np.testing.assert_array_equal(rH, V)
    np.testing.assert_array_equal(rV, H)
    np.testing.assert_array_equal(rLD, RD)
    np.testing.assert_array_equal(rRD, LD)


@settings(max_examples=100, deadline=None)
@given(quantized(), st.randoms(use_true_random=False))
def test_permutation_equivariance(qi, rnd):
    img, levels = qi
    perm = list(range(levels))
    rnd.shuffle(perm)
    perm = np.array(perm)
    for d in DIRECTIONS:
        base = compute_glcm(img, levels, d).counts
        relabeled = compute_glcm(perm[img], levels, d).counts
        expected = np.zeros_like(base)
        expected[np.ix_(perm, perm)] = base
        np.testing.assert_array_equal(relabeled, expected)


def test_direction_parse_and_errors():
    assert Direction.parse("ld") is Direction.LEFT_DIAGONAL
    assert Direction.LEFT_DIAGONAL.offset == (1, -1)
    assert Direction.RIGHT_DIAGONAL.offset == (1, 1)
    with pytest.raises(ParameterError):
        compute_glcm(np.zeros((2, 2), int), 1)
    with pytest.raises(DataValidationError):
        compute_glcm(np.array([[0, 5]]), 4)
    with pytest.raises(DataValidationError, match="empty"):
        compute_glcm(np.array([[0, 1]]), 2, Direction.VERTICAL)
