"""Spinor fields on a periodic window of the lattice delta*Z, and lattice norms.

A field with ``sites = N`` stores ``values[i]`` for the site ``x = (i - N/2) * delta``,
so index ``N // 2`` is the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEFAULT_SITES = 2**14


class InvalidFieldError(ValueError):
    pass


class EmptyWindowError(ValueError):
    pass


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class WalkParams:
    delta: float
    mass: float

    def __post_init__(self):
        if not (0.0 < self.delta <= 1.0):
            raise ParameterError(f"delta must lie in (0, 1], got {self.delta}")
        if not math.isfinite(self.mass):
            raise ParameterError("mass must be finite")

    @property
    def coin_angle(self) -> float:
        return self.delta * self.mass

    def in_mass_window(self) -> bool:
        """True when delta*|m| is in the open interval (0, pi/2)."""
        return 0.0 < abs(self.coin_angle) < math.pi / 2

    def require_mass_window(self):
        if not self.in_mass_window():
            raise ParameterError(
                f"delta*|mass| = {abs(self.coin_angle):.6g} outside (0, pi/2)"
            )


def _check_sites(n: int):
    if n < 2 or n & (n - 1):
        raise InvalidFieldError(f"ring size must be a power of two >= 2, got {n}")


@dataclass(frozen=True, eq=False)
class SpinorField:
    params: WalkParams
    values: np.ndarray
    wrap_ok: bool = True

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.ndim != 2 or v.shape[1] != 2:
            raise InvalidFieldError(f"values must have shape (N, 2), got {v.shape}")
        _check_sites(v.shape[0])
        if not np.all(np.isfinite(v)):
            raise InvalidFieldError("field has non-finite entries")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def sites(self) -> int:
        return self.values.shape[0]

    @property
    def delta(self) -> float:
        return self.params.delta

    def indices(self) -> np.ndarray:
        n = self.sites
        return np.arange(-n // 2, n // 2)

    def positions(self) -> np.ndarray:
        return self.indices() * self.delta

    def pointwise_norm(self) -> np.ndarray:
        return np.sqrt(np.sum(np.abs(self.values) ** 2, axis=1))

    def replace(self, values, wrap_ok: bool | None = None) -> "SpinorField":
        return SpinorField(self.params, values, self.wrap_ok if wrap_ok is None else wrap_ok)

    def __add__(self, other: "SpinorField") -> "SpinorField":
        return self.replace(self.values + other.values, self.wrap_ok and other.wrap_ok)

    def __sub__(self, other: "SpinorField") -> "SpinorField":
        return self.replace(self.values - other.values, self.wrap_ok and other.wrap_ok)

    def __mul__(self, c) -> "SpinorField":
        return self.replace(c * self.values)

    __rmul__ = __mul__

    def to_text(self) -> str:
        lines = [f"# delta={self.delta!r} N={self.sites} mass={self.params.mass!r}"]
        for j, (a, b) in zip(self.indices(), self.values):
            nums = " ".join(repr(float(z)) for z in (a.real, a.imag, b.real, b.imag))
            lines.append(f"{j} {nums}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SpinorField":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        # leading comment lines may carry a run manifest; the header is the one with delta=
        heads = [ln for ln in lines if ln.startswith("# delta=")]
        if not heads:
            raise InvalidFieldError("missing header line")
        header = dict(tok.split("=", 1) for tok in heads[0].lstrip("#").split())
        params = WalkParams(float(header["delta"]), float(header["mass"]))
        n = int(header["N"])
        vals = np.zeros((n, 2), dtype=np.complex128)
        rows = [ln.split() for ln in lines[1:] if not ln.startswith("#")]
        if len(rows) != n:
            raise InvalidFieldError(f"expected {n} rows, found {len(rows)}")
        for row in rows:
            j = int(row[0])
            re1, im1, re2, im2 = map(float, row[1:5])
            vals[j + n // 2] = (complex(re1, im1), complex(re2, im2))
        return cls(params, vals)


def write_field(u: SpinorField, path: str | Path):
    Path(path).write_text(u.to_text())


def read_field(path: str | Path) -> SpinorField:
    return SpinorField.from_text(Path(path).read_text())


@dataclass(frozen=True, eq=False)
class SpaceTimeField:
    params: WalkParams
    times: tuple
    slices: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "slices", tuple(self.slices))
        if len(self.times) != len(self.slices):
            raise InvalidFieldError("times and slices differ in length")
        if self.slices:
            n = self.slices[0].sites
            for s in self.slices:
                if s.sites != n or s.params != self.params:
                    raise InvalidFieldError("slices must share params and ring size")
        d = self.params.delta
        for a, b in zip(self.times, self.times[1:]):
            if not math.isclose(b - a, d, rel_tol=1e-9):
                raise InvalidFieldError("times must be consecutive points of delta*Z")

    @classmethod
    def from_slices(cls, slices, t0: float = 0.0) -> "SpaceTimeField":
        slices = list(slices)
        if not slices:
            raise EmptyWindowError("no slices")
        params = slices[0].params
        times = [t0 + k * params.delta for k in range(len(slices))]
        return cls(params, times, slices)

    def at(self, t: float) -> SpinorField:
        k = round((t - self.times[0]) / self.params.delta)
        if k < 0 or k >= len(self.slices):
            raise KeyError(t)
        return self.slices[k]


@dataclass(frozen=True)
class NormSpec:
    p: float
    q: float

    def __post_init__(self):
        for e in (self.p, self.q):
            if not (1.0 <= e <= math.inf):
                raise ParameterError(f"exponent {e} outside [1, inf]")


def _weighted_pnorm(a: np.ndarray, p: float, weight: float) -> float:
    # a holds nonnegative magnitudes
    if a.size == 0:
        return 0.0
    if math.isinf(p):
        return float(np.max(a))
    top = float(np.max(a))
    if top == 0.0:
        return 0.0
    # scale by the max so large p does not overflow
    return top * float(weight * np.sum((a / top) ** p)) ** (1.0 / p)


def field_norm(u: SpinorField, p: float) -> float:
    """Weighted lattice norm ``(delta * sum_x |u(x)|^p)^(1/p)``, max for ``p = inf``."""
    if not (1.0 <= p <= math.inf):
        raise ParameterError(f"exponent {p} outside [1, inf]")
    return _weighted_pnorm(u.pointwise_norm(), p, u.delta)


def time_norm(slice_norms, p: float, delta: float) -> float:
    """Outer delta-weighted l^p over precomputed per-slice spatial norms."""
    return _weighted_pnorm(np.asarray(slice_norms, dtype=float), p, delta)


def mixed_norm(f: SpaceTimeField, spec: NormSpec) -> float:
    if not f.slices:
        raise EmptyWindowError("space-time field has no time slices")
    inner = [field_norm(s, spec.q) for s in f.slices]
    return time_norm(inner, spec.p, f.params.delta)


def make_state(
    kind: str,
    params: WalkParams,
    sites: int = DEFAULT_SITES,
    *,
    site: int = 0,
    width: float = 4.0,
    carrier: float = 0.0,
    seed: int = 0,
    radius: int | None = None,
) -> SpinorField:
    """Build an initial state.

    kind is one of ``impulse`` (value (1, 0) at site index ``site``),
    ``gaussian`` (``exp(-x^2/(2 width^2) + i carrier x) * (1, 0)``) or
    ``random`` (complex normal entries from ``seed``, optionally restricted to
    ``|j| <= radius``).
    """
    _check_sites(sites)
    vals = np.zeros((sites, 2), dtype=np.complex128)
    x = np.arange(-sites // 2, sites // 2) * params.delta
    if kind == "impulse":
        vals[site + sites // 2, 0] = 1.0
    elif kind in ("gaussian", "gaussian-wavepacket"):
        if width <= 0:
            raise ParameterError("width must be positive")
        vals[:, 0] = np.exp(-(x**2) / (2 * width**2)) * np.exp(1j * carrier * x)
    elif kind in ("random", "random-seeded"):
        rng = np.random.default_rng(seed)
        vals = rng.standard_normal((sites, 2)) + 1j * rng.standard_normal((sites, 2))
        if radius is not None:
            j = np.arange(-sites // 2, sites // 2)
            vals[np.abs(j) > radius] = 0.0
    else:
        raise ParameterError(f"unknown state kind {kind!r}")
    return SpinorField(params, vals)


def support_radius(u: SpinorField, tol: float = 0.0) -> float:
    mask = u.pointwise_norm() > tol
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(u.positions()[mask])))


def embed(u: SpinorField, sites: int) -> SpinorField:
    """Zero-pad u into a larger ring with the same origin."""
    _check_sites(sites)
    n = u.sites
    if sites < n:
        raise InvalidFieldError("target ring is smaller than the field")
    vals = np.zeros((sites, 2), dtype=np.complex128)
    off = sites // 2 - n // 2
    vals[off:off + n] = u.values
    return SpinorField(u.params, vals, u.wrap_ok)


def restrict(u: SpinorField, sites: int) -> SpinorField:
    """Central window of ``sites`` sites (inverse of embed on its image)."""
    _check_sites(sites)
    off = u.sites // 2 - sites // 2
    return SpinorField(u.params, u.values[off:off + sites], u.wrap_ok)
