"""Lattice Fourier transform, walk symbol, dispersion relation and spectral evolution.

Transform convention on a ring of N sites with spacing delta::

    (F u)(xi) = delta / sqrt(2 pi) * sum_x exp(-i x xi) u(x)
    (F^-1 v)(x) = 1 / sqrt(2 pi) * sum_k dxi * exp(i x xi_k) v(xi_k),   dxi = 2 pi / (N delta)

with xi_k = k dxi, k = -N/2 .. N/2 - 1, stored in that (centered) order.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .lattice import SpinorField, WalkParams
from .walk import steps_for

SQRT2PI = math.sqrt(2 * math.pi)


class DegenerateSymbolError(ArithmeticError):
    pass


class SingularityError(ArithmeticError):
    pass


@dataclass(frozen=True)
class FrequencyGrid:
    params: WalkParams
    sites: int

    @property
    def spacing(self) -> float:
        return 2 * math.pi / (self.sites * self.params.delta)

    @property
    def xi(self) -> np.ndarray:
        return _grid_xi(self.sites, self.params.delta)


@lru_cache(maxsize=64)
def _grid_xi(n: int, delta: float) -> np.ndarray:
    xi = np.arange(-n // 2, n // 2) * (2 * math.pi / (n * delta))
    xi.flags.writeable = False
    return xi


def grid_of(u: SpinorField) -> FrequencyGrid:
    return FrequencyGrid(u.params, u.sites)


@dataclass(frozen=True, eq=False)
class FrequencyField:
    grid: FrequencyGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != (self.grid.sites, 2):
            raise ValueError(f"expected shape ({self.grid.sites}, 2), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("frequency field has non-finite entries")
        object.__setattr__(self, "values", v)


def _fwd(values: np.ndarray, delta: float) -> np.ndarray:
    v = np.fft.ifftshift(values, axes=0)
    return np.fft.fftshift(np.fft.fft(v, axis=0), axes=0) * (delta / SQRT2PI)


def _inv(values: np.ndarray, delta: float) -> np.ndarray:
    v = np.fft.ifftshift(values, axes=0)
    return np.fft.fftshift(np.fft.ifft(v, axis=0), axes=0) * (SQRT2PI / delta)


def forward_transform(u: SpinorField) -> FrequencyField:
    return FrequencyField(grid_of(u), _fwd(u.values, u.delta))


def inverse_transform(v: FrequencyField) -> SpinorField:
    return SpinorField(v.grid.params, _inv(v.values, v.grid.params.delta))


def dispersion(xi, params: WalkParams):
    """p(xi) = arccos(cos(delta m) cos(delta xi)) / delta."""
    d = params.delta
    c, s = math.cos(d * params.mass), math.sin(d * params.mass)
    xi = np.asarray(xi, dtype=float)
    # sin(delta p)^2 = 1 - c^2 cos^2 = s^2 + c^2 sin^2, without cancellation
    sin_dp = np.sqrt(s * s + (c * np.sin(d * xi)) ** 2)
    return np.arctan2(sin_dp, c * np.cos(d * xi)) / d


def dispersion_derivatives(xi, params: WalkParams):
    """Closed forms of (p', p'', p''').

    The third derivative carries an overall minus sign: p'' is proportional to
    cos(delta xi), so p''' < 0 on (0, pi/(2 delta)).
    """
    d = params.delta
    c = math.cos(d * params.mass)
    s2 = math.sin(d * params.mass) ** 2
    xi = np.asarray(xi, dtype=float)
    cx, sx = np.cos(d * xi), np.sin(d * xi)
    den = s2 + c * c * sx * sx
    if np.any(den <= 0.0):
        raise SingularityError("1 - cos^2(delta m) cos^2(delta xi) vanishes")
    p1 = c * sx / den**0.5
    p2 = d * c * s2 * cx / den**1.5
    p3 = -(d**2) * c * s2 * (1 + 2 * c * c * cx * cx) * sx / den**2.5
    return p1, p2, p3


def symbol_matrix(xi, params: WalkParams) -> np.ndarray:
    """Fourier symbol of one walk step, diag(e^{-i delta xi}, e^{i delta xi}) @ coin.

    Scalar xi gives a (2, 2) array, an array of xi gives shape (len, 2, 2).
    """
    from .walk import coin_matrix

    ph = np.exp(-1j * params.delta * np.asarray(xi, dtype=float))
    coin = coin_matrix(params)
    out = np.empty(ph.shape + (2, 2), dtype=np.complex128)
    out[..., 0, :] = ph[..., None] * coin[0]
    out[..., 1, :] = np.conj(ph)[..., None] * coin[1]
    return out


@dataclass(frozen=True, eq=False)
class SymbolDecomposition:
    xi: np.ndarray
    p: np.ndarray
    qplus: np.ndarray
    qminus: np.ndarray
    params: WalkParams

    def projector(self, sign: int) -> np.ndarray:
        return self.qplus if sign > 0 else self.qminus

    def power(self, n: int) -> np.ndarray:
        """Symbol of U^n for integer n (negative allowed)."""
        ph = np.exp(1j * n * self.params.delta * self.p)[:, None, None]
        return ph * self.qplus + np.conj(ph) * self.qminus


def projectors(xi, params: WalkParams) -> SymbolDecomposition:
    """Eigen-decomposition of the symbol at arbitrary frequencies.

    Q_s = (U - e^{-i s delta p}) / (e^{i s delta p} - e^{-i s delta p}); Q_+ belongs
    to the eigenvalue e^{+i delta p}.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    d = params.delta
    p = dispersion(xi, params)
    sdp = np.sin(d * p)
    bad = np.abs(sdp) < 1e-10
    if bad.any():
        k = int(np.argmax(bad))
        raise DegenerateSymbolError(
            f"eigenvalues e^(+-i delta p) collide at xi = {float(xi[k])!r} (|sin(delta p)| < 1e-10)"
        )
    sym = symbol_matrix(xi, params)
    eye = np.eye(2)
    ep = np.exp(1j * d * p)[:, None, None]
    qplus = (sym - np.conj(ep) * eye) / (2j * sdp)[:, None, None]
    qminus = (sym - ep * eye) / (-2j * sdp)[:, None, None]
    return SymbolDecomposition(xi, p, qplus, qminus, params)


_DECOMP_CACHE: dict = {}


def spectral_decompose(params: WalkParams, grid: FrequencyGrid | int) -> SymbolDecomposition:
    n = grid if isinstance(grid, int) else grid.sites
    key = (params, n)
    dec = _DECOMP_CACHE.get(key)
    if dec is None:
        dec = projectors(_grid_xi(n, params.delta), params)
        if len(_DECOMP_CACHE) > 32:
            _DECOMP_CACHE.clear()
        _DECOMP_CACHE[key] = dec
    return dec


def apply_symbol(u: SpinorField, sym: np.ndarray) -> SpinorField:
    """Multiply F u by a (N, 2, 2) matrix symbol and transform back."""
    uh = _fwd(u.values, u.delta)
    vh = np.einsum("kij,kj->ki", sym, uh)
    return u.replace(_inv(vh, u.delta))


def spectral_evolve(u: SpinorField, t: float) -> SpinorField:
    """U_delta(t) u through the Fourier side; negative t gives the inverse evolution."""
    n = steps_for(abs(t), u.delta) * (1 if t >= 0 else -1)
    dec = spectral_decompose(u.params, u.sites)
    return apply_symbol(u, dec.power(n))


def locate_degeneracies(params: WalkParams, h: float = 1e-6):
    """Zeros of p'' and of p''' in [-pi/delta, pi/delta].

    Each candidate is confirmed by a sign change of the closed form across
    [z - h, z + h].
    """
    d = params.delta
    if not (0.0 < abs(d * params.mass) < math.pi):
        raise SingularityError("delta*|m| must lie in (0, pi)")
    p2_zeros = [-math.pi / (2 * d), math.pi / (2 * d)]
    p3_zeros = [-math.pi / d, 0.0, math.pi / d]
    for zeros, idx in ((p2_zeros, 1), (p3_zeros, 2)):
        for z in zeros:
            lo = dispersion_derivatives(z - h, params)[idx]
            hi = dispersion_derivatives(z + h, params)[idx]
            if not lo * hi < 0:
                raise ArithmeticError(f"no sign change of derivative {idx + 1} at {z}")
    return p2_zeros, p3_zeros


SYMBOL_COLUMNS = ["k", "xi", "p", "pprime", "pdprime", "ptprime"] + [
    f"{part}Q{s}{i}{j}" for s in "+-" for i in (1, 2) for j in (1, 2) for part in ("re", "im")
]


def symbol_table(params: WalkParams, sites: int) -> str:
    """CSV export of the dispersion, its derivatives and both projectors on the grid."""
    dec = spectral_decompose(params, sites)
    p1, p2, p3 = dispersion_derivatives(dec.xi, params)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SYMBOL_COLUMNS)
    ks = np.arange(-sites // 2, sites // 2)
    for i, k in enumerate(ks):
        row = [int(k), repr(float(dec.xi[i])), repr(float(dec.p[i])),
               repr(float(p1[i])), repr(float(p2[i])), repr(float(p3[i]))]
        for q in (dec.qplus[i], dec.qminus[i]):
            for z in q.ravel():
                row += [repr(float(z.real)), repr(float(z.imag))]
        w.writerow(row)
    return buf.getvalue()
