"""Bump functions, Littlewood-Paley projections and fractional weights."""

from __future__ import annotations

import csv
import io
import math
import threading
from dataclasses import dataclass

import numpy as np

from .lattice import SpinorField
from .spectral import FrequencyGrid, _fwd, _inv, _grid_xi, grid_of


class ShapeError(ValueError):
    pass


class AnnihilatorInverseError(ValueError):
    pass


def _g(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def smooth_step(s):
    """g(s) / (g(s) + g(1 - s)) with g(s) = exp(-1/s) for s > 0 and 0 otherwise."""
    a, b = _g(s), _g(1.0 - np.asarray(s, dtype=float))
    return a / (a + b)


def bump_phi(x):
    """Even bump, 1 on [-1, 1], 0 outside (-2, 2), nonincreasing in |x|."""
    ax = np.abs(np.asarray(x, dtype=float))
    out = np.where(ax <= 1.0, 1.0, 0.0)
    mid = (ax > 1.0) & (ax < 2.0)
    if np.any(mid):
        out = np.where(mid, smooth_step(np.where(mid, 2.0 - ax, 0.5)), out)
    return out if out.ndim else float(out)


def bump_psi(x):
    x = np.asarray(x, dtype=float)
    return bump_phi(x) - bump_phi(2 * x)


def bump_psi_tilde(x):
    """Companion of psi: equal to 1 on 1/2 <= |x| <= 2 and 0 for |x| <= 1/4."""
    x = np.asarray(x, dtype=float)
    return bump_phi(x / 2) - bump_phi(4 * x)


def psi_lambda(xi, lam: float, delta: float):
    """psi(xi / lam) restricted to the Brillouin zone [-pi/delta, pi/delta]."""
    xi = np.asarray(xi, dtype=float)
    inside = np.abs(xi) <= math.pi / delta
    return np.where(inside, bump_psi(xi / lam), 0.0)


def psi_tilde_lambda(xi, lam: float, delta: float):
    xi = np.asarray(xi, dtype=float)
    inside = np.abs(xi) <= math.pi / delta
    return np.where(inside, bump_psi_tilde(xi / lam), 0.0)


@dataclass(frozen=True, eq=False)
class Multiplier:
    grid: FrequencyGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != (self.grid.sites,):
            raise ShapeError(f"symbol has shape {v.shape}, grid has {self.grid.sites} points")
        if not np.all(np.isfinite(v)):
            raise ValueError("symbol has non-finite samples")

    @classmethod
    def from_function(cls, grid: FrequencyGrid, fn) -> "Multiplier":
        return cls(grid, np.asarray(fn(grid.xi)))

    def __mul__(self, other: "Multiplier") -> "Multiplier":
        if other.grid != self.grid:
            raise ShapeError("multipliers live on different grids")
        return Multiplier(self.grid, self.values * other.values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "xi", "re", "im"])
        ks = np.arange(-self.grid.sites // 2, self.grid.sites // 2)
        vals = self.values.astype(np.complex128)
        for k, x, z in zip(ks, self.grid.xi, vals):
            w.writerow([int(k), repr(float(x)), repr(float(z.real)), repr(float(z.imag))])
        return buf.getvalue()


def apply_multiplier(u: SpinorField, m: Multiplier) -> SpinorField:
    if m.grid != grid_of(u):
        raise ShapeError("multiplier grid does not match the field")
    uh = _fwd(u.values, u.delta)
    return u.replace(_inv(m.values[:, None] * uh, u.delta))


_LP_CACHE: dict = {}
_LP_LOCK = threading.Lock()


def lp_multiplier(grid: FrequencyGrid, lam: float, companion: bool = False) -> Multiplier:
    key = (grid.sites, grid.params.delta, float(lam), companion)
    m = _LP_CACHE.get(key)
    if m is None:
        fn = psi_tilde_lambda if companion else psi_lambda
        vals = fn(_grid_xi(grid.sites, grid.params.delta), lam, grid.params.delta)
        vals.flags.writeable = False
        with _LP_LOCK:
            m = _LP_CACHE.setdefault(key, Multiplier(grid, vals))
    return Multiplier(grid, m.values)


def littlewood_paley(u: SpinorField, lam: float, companion: bool = False) -> SpinorField:
    """P_lambda u (or the companion projection when ``companion``).

    For lam >= 2 pi / delta the symbol vanishes on the zone and the zero field
    is returned with ``wrap_ok`` untouched.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if not companion and lam >= 2 * math.pi / u.delta:
        return u.replace(np.zeros_like(u.values))
    return apply_multiplier(u, lp_multiplier(grid_of(u), lam, companion))


def vanishes(lam: float, delta: float) -> bool:
    return lam >= 2 * math.pi / delta


def dyadic_ladder(sites: int, delta: float) -> list[float]:
    """Dyadic lambdas whose psi-pieces sum to 1 on every nonzero grid frequency."""
    lo = 2 * math.pi / (sites * delta)
    hi = math.pi / delta
    jmin = math.floor(math.log2(lo))
    jmax = math.ceil(math.log2(hi))
    return [2.0**j for j in range(jmin, jmax + 1)]


def weight_symbol(xi, a: float, b: float):
    """|xi|^a <xi>^b with the convention |0|^0 = 1."""
    xi = np.asarray(xi, dtype=float)
    ax = np.abs(xi)
    if a == 0:
        base = np.ones_like(ax)
    else:
        with np.errstate(divide="ignore"):
            base = ax**a
    return base * (1.0 + xi * xi) ** (b / 2)


def fractional_weight(u: SpinorField, a: float, b: float) -> SpinorField:
    """|D|^a <D>^b u."""
    if a < 0:
        uh = _fwd(u.values, u.delta)
        if np.any(np.abs(uh[u.sites // 2]) > 0):
            raise AnnihilatorInverseError("negative |D| power on a field with nonzero mean")
        raise AnnihilatorInverseError("negative |D| powers are not supported")
    grid = grid_of(u)
    return apply_multiplier(u, Multiplier(grid, weight_symbol(grid.xi, a, b)))
