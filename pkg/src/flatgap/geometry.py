"""Neck geometry: inclusion profiles, the flattening map and its coefficient matrix.

Near the closest points the two insulators are the graphs

    x_n =  eps/2 + h1(|x'|)      (upper boundary)
    x_n = -eps/2 + h2(|x'|)      (lower boundary)

with h1 = h2 = 0 on the flat disk |x'| <= r0 and h1 - h2 = a (|x'| - r0)_+^2 + remainder
outside.  The canonical split used here is h2 = 0.

The flattening map sends the neck to the slab |y_n| < eps:

    y' = x',   y_n = 2 eps ((x_n - h2 + eps/2) / gap - 1/2),   gap = eps + h1 - h2.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError
from .harmonics import mode_count

__all__ = [
    "ProblemConfig",
    "Profile",
    "CoefficientMatrix",
    "gap",
    "flatten",
    "unflatten",
    "jacobian",
    "coefficients",
    "radial_coefficients",
]


@dataclass(frozen=True)
class ProblemConfig:
    """Physical and modal parameters of one neck problem.

    ``r0 = 0`` selects the strictly convex control configuration.
    """

    n: int = 3
    epsilon: float = 1e-2
    a: float = 1.0
    r0: float = 0.25
    gamma: float = 0.5
    mode_k: int = 1
    mode_i: int = 1

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n}")
        if not 0.0 < self.epsilon < 0.25:
            raise ValueError(f"epsilon must be in (0, 1/4), got {self.epsilon}")
        if not self.a > 0.0:
            raise ValueError(f"a must be positive, got {self.a}")
        if not 0.0 <= self.r0 < 0.5:
            raise ValueError(f"r0 must be in [0, 1/2), got {self.r0}")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must be in (0, 1), got {self.gamma}")
        if int(self.mode_k) != self.mode_k or self.mode_k < 0:
            raise ValueError(f"mode_k must be a nonnegative integer, got {self.mode_k}")
        nk = mode_count(self.mode_k, self.n)
        if not 1 <= self.mode_i <= nk:
            raise ValueError(
                f"mode_i must be in [1, {nk}] for k={self.mode_k}, n={self.n}, got {self.mode_i}"
            )

    @property
    def is_convex_control(self) -> bool:
        return self.r0 == 0.0

    @property
    def eigenvalue(self) -> float:
        return float(self.mode_k * (self.mode_k + self.n - 3))

    def with_(self, **changes) -> "ProblemConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class Profile:
    """Radial profiles h1, h2 of the upper and lower boundaries.

    h2 is identically zero and h1 = a (r - r0)_+^2 + remainder (r - r0)_+^(2 + gamma).
    ``a = 0`` gives two parallel planes, which is only useful for testing.
    """

    a: float = 1.0
    r0: float = 0.25
    gamma: float = 0.5
    remainder: float = 0.0

    @classmethod
    def from_config(cls, cfg: ProblemConfig, remainder: float = 0.0) -> "Profile":
        return cls(a=cfg.a, r0=cfg.r0, gamma=cfg.gamma, remainder=remainder)

    def h1(self, r):
        d = np.maximum(np.asarray(r, dtype=float) - self.r0, 0.0)
        return self.a * d**2 + self.remainder * d ** (2.0 + self.gamma)

    def h2(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    def dh1(self, r):
        d = np.maximum(np.asarray(r, dtype=float) - self.r0, 0.0)
        return 2.0 * self.a * d + self.remainder * (2.0 + self.gamma) * d ** (1.0 + self.gamma)

    def dh2(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    def d2h1(self, r):
        r = np.asarray(r, dtype=float)
        d = np.maximum(r - self.r0, 0.0)
        return 2.0 * self.a * (r > self.r0) + self.remainder * (2.0 + self.gamma) * (
            1.0 + self.gamma
        ) * d**self.gamma

    def d2h2(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    def quadratic(self, r):
        """The leading part a (r - r0)_+^2 of h1 - h2."""
        d = np.maximum(np.asarray(r, dtype=float) - self.r0, 0.0)
        return self.a * d**2

    def correction(self, r):
        """e(r) = h1 - h2 - a (r - r0)_+^2, the diagonal correction of the coefficients."""
        return self.h1(r) - self.h2(r) - self.quadratic(r)


def _check_radius(r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0) or np.any(r > 1.0) or np.any(~np.isfinite(r)):
        raise DomainError("radius must lie in [0, 1]")
    return r


def gap(profile: Profile, cfg: ProblemConfig, r):
    """Vertical width eps + h1(r) - h2(r) of the neck at radius r."""
    r = _check_radius(r)
    return cfg.epsilon + profile.h1(r) - profile.h2(r)


def _split(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] < 2:
        raise DomainError("points must have at least two coordinates")
    xp = x[..., :-1]
    return xp, x[..., -1], np.linalg.norm(xp, axis=-1)


def flatten(profile: Profile, cfg: ProblemConfig, x):
    """Map neck points x (shape ``(..., n)``) to the slab |y_n| < eps."""
    xp, xn, r = _split(x)
    if np.any(r >= 1.0):
        raise DomainError("flatten requires |x'| < 1")
    eps = cfg.epsilon
    lo = -eps / 2 + profile.h2(r)
    hi = eps / 2 + profile.h1(r)
    tol = 1e-14 * max(1.0, float(np.max(np.abs(xn), initial=0.0)))
    if np.any(xn < lo - tol) or np.any(xn > hi + tol):
        raise DomainError("point lies outside the neck")
    g = eps + profile.h1(r) - profile.h2(r)
    yn = 2.0 * eps * ((xn - profile.h2(r) + eps / 2) / g - 0.5)
    return np.concatenate([xp, yn[..., None]], axis=-1)


def unflatten(profile: Profile, cfg: ProblemConfig, y):
    """Inverse of :func:`flatten`."""
    yp, yn, r = _split(y)
    eps = cfg.epsilon
    if np.any(r >= 1.0) or np.any(np.abs(yn) > eps * (1 + 1e-14)):
        raise DomainError("point lies outside the cylinder |y'| < 1, |y_n| <= eps")
    g = eps + profile.h1(r) - profile.h2(r)
    xn = (yn / (2.0 * eps) + 0.5) * g + profile.h2(r) - eps / 2
    return np.concatenate([yp, xn[..., None]], axis=-1)


def jacobian(profile: Profile, cfg: ProblemConfig, x):
    """Analytic Jacobian D_x y at neck points; returns shape ``(..., n, n)``."""
    xp, xn, r = _split(x)
    n = xp.shape[-1] + 1
    eps = cfg.epsilon
    g = eps + profile.h1(r) - profile.h2(r)
    with np.errstate(invalid="ignore", divide="ignore"):
        er = np.where(r[..., None] > 0, xp / r[..., None], 0.0)
    dg = profile.dh1(r) - profile.dh2(r)
    s = (xn - profile.h2(r) + eps / 2) / g
    # d y_n / d x_i = (2 eps / g) (-dh2 - s dg) e_r
    drow = (2.0 * eps / g) * (-profile.dh2(r) - s * dg)
    J = np.zeros(xp.shape[:-1] + (n, n))
    idx = np.arange(n - 1)
    J[..., idx, idx] = 1.0
    J[..., n - 1, : n - 1] = drow[..., None] * er
    J[..., n - 1, n - 1] = 2.0 * eps / g
    return J


@dataclass(frozen=True)
class CoefficientMatrix:
    """Coefficient matrix of the flattened equation at one cylinder point."""

    matrix: np.ndarray
    diagonal: float
    correction: float
    off_diagonal: np.ndarray
    normal: float

    @property
    def a_in(self) -> np.ndarray:
        return self.off_diagonal

    @property
    def a_nn(self) -> float:
        return self.normal

    @property
    def e(self) -> float:
        return self.correction

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])


def radial_coefficients(profile: Profile, epsilon: float, r, yn):
    """Vectorized radial form of the flattened coefficients.

    Returns ``(g, alpha, beta)`` with g = eps + h1 - h2 the tangential diagonal,
    alpha the off-diagonal entry along e_r and beta = a^{nn}.
    """
    r = np.asarray(r, dtype=float)
    yn = np.asarray(yn, dtype=float)
    g = epsilon + profile.h1(r) - profile.h2(r)
    alpha = -2.0 * epsilon * profile.dh2(r) - (yn + epsilon) * (profile.dh1(r) - profile.dh2(r))
    beta = (4.0 * epsilon**2 + alpha**2) / g
    return g, alpha, beta


def coefficients(profile: Profile, cfg: ProblemConfig, y) -> CoefficientMatrix:
    """Assemble the n x n coefficient matrix at a single cylinder point y."""
    y = np.asarray(y, dtype=float)
    if y.shape != (cfg.n,):
        raise DomainError(f"expected a point with {cfg.n} coordinates")
    yp, yn = y[:-1], y[-1]
    r = float(np.linalg.norm(yp))
    if r >= 1.0 or abs(yn) > cfg.epsilon * (1 + 1e-14):
        raise DomainError("point lies outside the cylinder")
    g, alpha, beta = radial_coefficients(profile, cfg.epsilon, r, yn)
    er = yp / r if r > 0 else np.zeros_like(yp)
    a_in = float(alpha) * er
    n = cfg.n
    A = np.zeros((n, n))
    A[np.arange(n - 1), np.arange(n - 1)] = float(g)
    A[: n - 1, n - 1] = a_in
    A[n - 1, : n - 1] = a_in
    A[n - 1, n - 1] = float(beta)
    e = float(profile.correction(r))
    return CoefficientMatrix(
        matrix=A,
        diagonal=cfg.epsilon + float(profile.quadratic(r)),
        correction=e,
        off_diagonal=a_in,
        normal=float(beta),
    )
