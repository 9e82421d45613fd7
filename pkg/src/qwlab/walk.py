"""Coin, shift and direct time stepping of the walk in physical space."""

from __future__ import annotations

import math
import warnings

import numpy as np

from .lattice import SpinorField, WalkParams, support_radius

SIGMA0 = np.eye(2, dtype=np.complex128)
SIGMA1 = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=np.complex128)


class TimeGridError(ValueError):
    pass


class WrapGuardWarning(UserWarning):
    pass


def coin_matrix(params: WalkParams) -> np.ndarray:
    """exp(-i delta m sigma_1)."""
    a = params.coin_angle
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)


def coin_apply(u: SpinorField) -> SpinorField:
    return u.replace(u.values @ coin_matrix(u.params).T)


def _shift(v: np.ndarray) -> np.ndarray:
    out = np.empty_like(v)
    out[:, 0] = np.roll(v[:, 0], 1)
    out[:, 1] = np.roll(v[:, 1], -1)
    return out


def shift_apply(u: SpinorField) -> SpinorField:
    """First component moves one site right, second one site left (periodic)."""
    return u.replace(_shift(u.values))


def step(u: SpinorField) -> SpinorField:
    return shift_apply(coin_apply(u))


def steps_for(t: float, delta: float) -> int:
    """Number of walk steps t/delta; raises unless t is a point of delta*Z>=0."""
    n = round(t / delta)
    if n < 0 or not math.isclose(n * delta, t, rel_tol=1e-12, abs_tol=1e-12 * delta):
        raise TimeGridError(f"t={t} is not a nonnegative multiple of delta={delta}")
    return n


def wrap_guard_ok(u: SpinorField, t: float, tol: float = 0.0) -> bool:
    """Ring evolution up to time t equals the infinite-lattice one."""
    return support_radius(u, tol) + t < u.sites * u.delta / 2


def iterate(u: SpinorField, nsteps: int):
    """Yield U^k u for k = 0..nsteps as raw (N, 2) arrays."""
    coin_t = coin_matrix(u.params).T
    v = np.array(u.values)
    yield v
    for _ in range(nsteps):
        v = _shift(v @ coin_t)
        yield v


def evolve(u: SpinorField, t: float, guard_tol: float = 0.0) -> SpinorField:
    """Apply the walk t/delta times.

    When the light cone of ``u`` reaches the ring boundary the result is still the
    ring dynamics but carries ``wrap_ok=False`` and a warning is emitted.
    """
    n = steps_for(t, u.delta)
    ok = wrap_guard_ok(u, n * u.delta, guard_tol)
    if not ok:
        warnings.warn("light cone exceeds the periodic window", WrapGuardWarning, stacklevel=2)
    v = u.values
    for v in iterate(u, n):
        pass
    return SpinorField(u.params, v, wrap_ok=u.wrap_ok and ok)


def one_step_matrix(params: WalkParams, sites: int) -> np.ndarray:
    """Dense (2N x 2N) matrix of the one-step operator; state ordering is values.ravel()."""
    dim = 2 * sites
    mat = np.zeros((dim, dim), dtype=np.complex128)
    eye = np.eye(dim, dtype=np.complex128)
    coin_t = coin_matrix(params).T
    for col in range(dim):
        v = eye[:, col].reshape(sites, 2)
        mat[:, col] = _shift(v @ coin_t).ravel()
    return mat
