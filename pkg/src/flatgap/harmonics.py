"""Spherical-harmonic bookkeeping on S^{n-2}.

The reduced mode equations only see the degree through the eigenvalue k(k + n - 3),
so basis evaluation and projection are implemented for n = 3 (the circle) only.
On S^1 the orthonormal basis is

    Y_{0,1} = 1/sqrt(2 pi),   Y_{k,1} = cos(k theta)/sqrt(pi),   Y_{k,2} = sin(k theta)/sqrt(pi).
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.special import gamma

from .errors import ResolutionError

__all__ = [
    "ModeIndex",
    "SphereSamples",
    "eigenvalue",
    "mode_count",
    "sphere_measure",
    "circle_nodes",
    "basis_eval",
    "project",
    "synthesize",
    "modes_upto",
]


def eigenvalue(k: int, n: int) -> float:
    """Eigenvalue k(k + n - 3) of -Laplacian on S^{n-2} for degree k."""
    if k < 0 or n < 2:
        raise ValueError("need k >= 0 and n >= 2")
    return float(k * (k + n - 3))


def _comb(a: int, b: int) -> int:
    return comb(a, b) if a >= 0 and b >= 0 else 0


def mode_count(k: int, n: int) -> int:
    """Dimension N(k) of degree-k harmonics on S^{n-2} (ambient R^{n-1})."""
    d = n - 1
    if k < 0 or d < 1:
        return 0
    return _comb(k + d - 1, d - 1) - _comb(k + d - 3, d - 1)


def sphere_measure(n: int) -> float:
    """Surface measure of S^{n-2}; counting measure (2) for S^0."""
    d = n - 1
    return float(2.0 * np.pi ** (d / 2) / gamma(d / 2))


@dataclass(frozen=True)
class ModeIndex:
    k: int
    i: int = 1

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("degree must be nonnegative")
        if not 1 <= self.i <= (1 if self.k == 0 else 2):
            raise ValueError(f"index {self.i} out of range for degree {self.k} on S^1")


@dataclass(frozen=True)
class SphereSamples:
    """Values sampled at quadrature nodes on S^1."""

    theta: np.ndarray
    weights: np.ndarray
    values: np.ndarray

    @property
    def size(self) -> int:
        return self.theta.shape[0]


def circle_nodes(m: int):
    """Uniform trapezoid nodes and weights on S^1 (exact for degree < m)."""
    theta = 2.0 * np.pi * np.arange(m) / m
    return theta, np.full(m, 2.0 * np.pi / m)


def _check_n(n: int):
    if n != 3:
        raise NotImplementedError("basis evaluation is only available for n = 3")


def _y(mode: ModeIndex, theta):
    theta = np.asarray(theta, dtype=float)
    if mode.k == 0:
        return np.full_like(theta, 1.0 / np.sqrt(2.0 * np.pi))
    trig = np.cos if mode.i == 1 else np.sin
    return trig(mode.k * theta) / np.sqrt(np.pi)


def basis_eval(mode: ModeIndex, theta, n: int = 3) -> SphereSamples:
    """Sample Y_{k,i} at angles ``theta``; weights are uniform trapezoid weights."""
    _check_n(n)
    theta = np.asarray(theta, dtype=float)
    w = np.full(theta.shape, 2.0 * np.pi / max(theta.size, 1))
    return SphereSamples(theta=theta, weights=w, values=_y(mode, theta))


def project(field: SphereSamples, mode: ModeIndex) -> float:
    """Quadrature approximation of the integral of field * Y_{k,i} over S^1.

    ``field.values`` may carry extra leading axes (e.g. an (r, x_n) grid); the angular
    axis is the last one.
    """
    if field.size < 4 * mode.k + 8:
        raise ResolutionError(
            f"{field.size} nodes cannot resolve degree {mode.k}; need >= {4 * mode.k + 8}"
        )
    return np.tensordot(field.values, field.weights * _y(mode, field.theta), axes=([-1], [0]))


def synthesize(coeffs: dict, theta) -> SphereSamples:
    """Sum of c * Y for a mapping {ModeIndex: c}."""
    theta = np.asarray(theta, dtype=float)
    vals = np.zeros_like(theta)
    for mode, c in coeffs.items():
        vals = vals + c * _y(mode, theta)
    w = np.full(theta.shape, 2.0 * np.pi / max(theta.size, 1))
    return SphereSamples(theta=theta, weights=w, values=vals)


def modes_upto(kmax: int):
    """All n = 3 mode indices with degree <= kmax."""
    out = [ModeIndex(0, 1)]
    for k in range(1, kmax + 1):
        out += [ModeIndex(k, 1), ModeIndex(k, 2)]
    return out
