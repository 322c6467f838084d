import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from flatgap.errors import ResolutionError
from flatgap.harmonics import (
    ModeIndex,
    basis_eval,
    circle_nodes,
    eigenvalue,
    mode_count,
    modes_upto,
    project,
    sphere_measure,
    synthesize,
)


@pytest.mark.parametrize("k,n,want", [(0, 2, 0), (0, 5, 0), (1, 3, 1), (1, 2, 0), (2, 3, 4), (3, 4, 12)])
def test_eigenvalue(k, n, want):
    assert eigenvalue(k, n) == want


@pytest.mark.parametrize(
    "k,n,want",
    [(0, 3, 1), (1, 3, 2), (5, 3, 2), (0, 2, 1), (1, 2, 1), (2, 2, 0), (1, 4, 3), (2, 4, 5), (2, 5, 9)],
)
def test_mode_count(k, n, want):
    assert mode_count(k, n) == want


def test_sphere_measure():
    assert_allclose(sphere_measure(2), 2.0)
    assert_allclose(sphere_measure(3), 2 * np.pi)
    assert_allclose(sphere_measure(4), 4 * np.pi)


def test_basis_values():
    th = np.array([0.0, 1.0])
    assert_allclose(basis_eval(ModeIndex(0), th).values, 1 / np.sqrt(2 * np.pi))
    assert_allclose(basis_eval(ModeIndex(1, 1), th).values[0], 1 / np.sqrt(np.pi))
    assert_allclose(basis_eval(ModeIndex(2, 2), th).values[1], np.sin(2.0) / np.sqrt(np.pi))


def test_basis_unsupported_dimension():
    with pytest.raises(NotImplementedError):
        basis_eval(ModeIndex(1), np.zeros(4), n=4)


def test_mode_index_range():
    with pytest.raises(ValueError):
        ModeIndex(0, 2)
    with pytest.raises(ValueError):
        ModeIndex(-1, 1)


def test_weights_sum_to_circle():
    _, w = circle_nodes(37)
    assert_allclose(w.sum(), 2 * np.pi)


def test_orthonormality():
    theta, w = circle_nodes(64)
    modes = modes_upto(4)
    Y = np.array([basis_eval(m, theta).values for m in modes])
    assert_allclose((Y * w) @ Y.T, np.eye(len(modes)), atol=1e-10)


def test_project_examples():
    theta, w = circle_nodes(16)
    const = synthesize({}, theta)
    const = type(const)(theta, w, np.full(16, 3.0))
    assert_allclose(project(const, ModeIndex(0)), 3.0 * np.sqrt(2 * np.pi))
    assert_allclose(project(const, ModeIndex(1, 1)), 0.0, atol=1e-14)
    y11 = basis_eval(ModeIndex(1, 1), theta)
    assert_allclose(project(y11, ModeIndex(1, 1)), 1.0)


def test_project_resolution_error():
    theta, _ = circle_nodes(11)
    with pytest.raises(ResolutionError):
        project(basis_eval(ModeIndex(1), theta), ModeIndex(1))


def test_project_keeps_leading_axes():
    theta, w = circle_nodes(32)
    vals = np.outer(np.arange(1.0, 4.0), np.cos(theta))
    from flatgap.harmonics import SphereSamples

    out = project(SphereSamples(theta, w, vals), ModeIndex(1, 1))
    assert_allclose(out, np.arange(1.0, 4.0) * np.sqrt(np.pi))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=9, max_size=9))
def test_project_synthesize_identity(cs):
    modes = modes_upto(4)
    coeffs = dict(zip(modes, cs))
    theta, _ = circle_nodes(64)
    s = synthesize(coeffs, theta)
    got = [project(s, m) for m in modes]
    assert_allclose(got, cs, atol=1e-10)
