import math

import numpy as np
import pytest

from apps.geometry.models import ElementCategory, MapElement, NormalizationFrame, Point2D
from apps.geometry.services import (
    chamfer_distance,
    chamfer_matrix,
    cosine_similarity,
    edge_vectors,
    manhattan_distance,
    normalize,
    denormalize,
    polyline_length,
    resample_uniform,
)
from crowdmap.exceptions import EmptyPointSetError, ValidationError


def test_polyline_length_open_closed_degenerate(l_shape, unit_square):
    assert polyline_length(l_shape) == pytest.approx(7.0)
    assert polyline_length(unit_square) == pytest.approx(4.0)
    degenerate = MapElement(ElementCategory.STOP_LINE, [(0, 0), (0, 0)])
    assert polyline_length(degenerate) == 0.0


def test_resample_straight_line():
    line = MapElement(ElementCategory.LANE_DIVIDER, [(0, 0), (10, 0)])
    out = resample_uniform(line, 5)
    assert np.allclose(out.points, [(0, 0), (2.5, 0), (5, 0), (7.5, 0), (10, 0)])
    assert out.category == ElementCategory.LANE_DIVIDER and out.closed is False


def test_resample_l_shape_against_arc_walk(l_shape):
    out = resample_uniform(l_shape, 8)
    expected = [(0, 0), (1, 0), (2, 0), (3, 0), (4, 0), (4, 1), (4, 2), (4, 3)]
    assert np.allclose(out.points, expected, atol=1e-12)
    # концы — точно
    assert tuple(out.points[0]) == (0.0, 0.0)
    assert tuple(out.points[-1]) == (4.0, 3.0)


def test_resample_closed_square_gives_corners(unit_square):
    out = resample_uniform(unit_square, 4)
    assert np.allclose(out.points, unit_square.points, atol=1e-12)
    assert out.closed is True


def test_resample_degenerate_is_flagged():
    point = MapElement(ElementCategory.STOP_LINE, [(3, 3), (3, 3)])
    out = resample_uniform(point, 6)
    assert out.points.shape == (6, 2)
    assert np.all(out.points == 3.0)
    assert out.meta["degenerate"] is True


def test_resample_rejects_single_point(l_shape):
    with pytest.raises(ValidationError):
        resample_uniform(l_shape, 1)


def test_normalize_examples(frame):
    assert normalize(Point2D(30, 30), frame) == Point2D(0.5, 0.5)
    assert normalize(Point2D(0, 60), frame) == Point2D(0.0, 1.0)
    assert denormalize(Point2D(0.5, 0.5), frame) == Point2D(30.0, 30.0)
    # вне кадра — вне [0,1], без обрезки
    assert normalize(Point2D(-6, 66), frame) == pytest.approx(Point2D(-0.1, 1.1))


def test_manhattan_examples():
    assert manhattan_distance((0, 0), (3, 4)) == 7
    assert manhattan_distance((1, 1), (1, 1)) == 0
    assert manhattan_distance((-1, 2), (2, -2)) == 7


def test_chamfer_examples():
    pts = [(0, 0), (1, 2), (5, 5)]
    assert chamfer_distance(pts, pts) == 0.0
    assert chamfer_distance([(0, 0)], [(3, 4)]) == pytest.approx(5.0)
    expected = 0.5 * ((1 + math.sqrt(2)) / 2 + 1)
    assert chamfer_distance([(0, 0), (1, 0)], [(0, 1)]) == pytest.approx(expected)
    assert expected == pytest.approx(1.10355, abs=1e-5)


def test_chamfer_empty_is_error():
    with pytest.raises(EmptyPointSetError):
        chamfer_distance([], [(0, 0)])


def test_chamfer_matrix_is_pairwise():
    a_sets = [[(0, 0), (1, 0)], [(0, 0)]]
    b_sets = [[(0, 1)], [(3, 4)], [(0, 0), (1, 0)]]
    matrix = chamfer_matrix(a_sets, b_sets)
    assert matrix.shape == (2, 3)
    for i, a in enumerate(a_sets):
        for j, b in enumerate(b_sets):
            assert matrix[i, j] == chamfer_distance(a, b)
    assert chamfer_matrix([], b_sets).shape == (0, 3)
    assert chamfer_matrix(a_sets, []).shape == (2, 0)


def test_edge_vectors(unit_square):
    open_el = MapElement(ElementCategory.LANE_DIVIDER, [(0, 0), (1, 0), (1, 1)])
    assert np.array_equal(edge_vectors(open_el), [(1, 0), (0, 1)])

    edges = edge_vectors(unit_square)
    assert len(edges) == 4
    assert np.allclose(edges.sum(axis=0), 0.0, atol=1e-9)

    segment = MapElement(ElementCategory.STOP_LINE, [(0, 0), (2, 0)])
    assert np.array_equal(edge_vectors(segment), [(2, 0)])


def test_cosine_similarity_examples():
    assert cosine_similarity((1, 0), (2, 0)) == pytest.approx(1.0)
    assert cosine_similarity((1, 0), (0, 5)) == pytest.approx(0.0)
    assert cosine_similarity((1, 0), (-3, 0)) == pytest.approx(-1.0)
    # нулевой вектор не даёт деления на ноль
    assert cosine_similarity((0, 0), (1, 0)) == 0.0


def test_frame_and_element_validation():
    with pytest.raises(ValidationError):
        NormalizationFrame(0, 0, 0, 10)
    with pytest.raises(ValidationError):
        MapElement(ElementCategory.LANE_DIVIDER, [(0, 0)])
    with pytest.raises(ValidationError):
        MapElement(ElementCategory.LANE_DIVIDER, [(0, 0), (float("nan"), 1)])
    with pytest.raises(ValidationError):
        MapElement(ElementCategory.CROSSWALK, [(0, 0), (1, 0), (1, 1), (0, 0)], closed=True)
