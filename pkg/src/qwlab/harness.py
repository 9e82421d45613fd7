"""Measured constants of the dispersive and Strichartz estimates.

Every estimate ``lhs <~ rhs`` is sampled as a ratio ``lhs / rhs`` and stored in a
RatioRecord; sweeps over delta check that the ratios stay bounded.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from fractions import Fraction

import numpy as np

from .lattice import (
    SpaceTimeField,
    SpinorField,
    WalkParams,
    field_norm,
    make_state,
    time_norm,
)
from .multipliers import fractional_weight, littlewood_paley, psi_lambda
from .spectral import projectors, spectral_evolve
from .walk import evolve, iterate, steps_for, wrap_guard_ok

INF = math.inf
# support threshold (relative to the peak) used for the wrap-guard of smooth data
GUARD_RTOL = 1e-14


class PairError(ValueError):
    pass


class ConfigError(ValueError):
    pass


class FitError(ValueError):
    pass


class DomainError(ValueError):
    pass


def _frac(x) -> Fraction | None:
    """Exact value of an exponent; None stands for infinity."""
    if isinstance(x, str):
        if x.strip().lower() in ("inf", "infinity"):
            return None
        return Fraction(x.strip())
    if isinstance(x, float) and math.isinf(x):
        return None
    return Fraction(x)


def _recip(x) -> Fraction:
    f = _frac(x)
    return Fraction(0) if f is None else 1 / f


def _coeff(kind: str) -> int:
    if kind == "discrete":
        return 3
    if kind == "continuous":
        return 2
    raise ValueError(f"unknown pair kind {kind!r}")


def admissible_check(p, q, kind: str = "discrete") -> bool:
    """Exact test of 3/p + 1/q = 1/2 (discrete) or 2/p + 1/q = 1/2 (continuous)."""
    for e in (p, q):
        f = _frac(e)
        if f is not None and f < 2:
            return False
    return _coeff(kind) * _recip(p) + _recip(q) == Fraction(1, 2)


def solve_q(p, kind: str = "discrete") -> float:
    """The q making (p, q) admissible, or raise if none exists in [2, inf]."""
    inv_q = Fraction(1, 2) - _coeff(kind) * _recip(p)
    if inv_q < 0 or inv_q > Fraction(1, 2):
        raise PairError(f"no admissible q for p={p}")
    return INF if inv_q == 0 else float(1 / inv_q)


def conjugate(p: float) -> float:
    """Hoelder conjugate, 1/p + 1/p' = 1."""
    if math.isinf(p):
        return 1.0
    if p == 1:
        return INF
    return p / (p - 1)


@dataclass(frozen=True)
class AdmissiblePair:
    p: float
    q: float
    kind: str = "discrete"

    def __post_init__(self):
        if not admissible_check(self.p, self.q, self.kind):
            raise PairError(f"({self.p}, {self.q}) is not {self.kind}-admissible")
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "q", float(self.q))

    @classmethod
    def from_p(cls, p, kind: str = "discrete") -> "AdmissiblePair":
        f = _frac(p)
        return cls(INF if f is None else float(f), solve_q(p, kind), kind)


CSV_FIELDS = ["delta", "mass", "lambda", "t_or_T", "p", "q", "ptilde", "qtilde",
              "lhs", "rhs", "ratio", "wrap_ok", "seed"]


@dataclass(frozen=True)
class RatioRecord:
    delta: float
    mass: float
    lam: float | None
    t_or_T: float
    p: float | None
    q: float | None
    ptilde: float | None
    qtilde: float | None
    lhs: float
    rhs: float
    wrap_ok: bool
    seed: int | None = None

    def __post_init__(self):
        if not self.rhs > 0:
            raise DomainError("right-hand side vanishes")

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs

    def as_row(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        d["ratio"] = self.ratio
        return {k: d[k] for k in CSV_FIELDS}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return "inf" if math.isinf(v) else repr(v)
    return str(v)


def records_to_csv(records, header: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(CSV_FIELDS)
    for r in records:
        w.writerow([_fmt(v) for v in r.as_row().values()])
    return buf.getvalue()


def records_to_jsonl(records) -> str:
    def enc(v):
        if isinstance(v, float) and math.isinf(v):
            return "inf"
        return v

    return "".join(json.dumps({k: enc(v) for k, v in r.as_row().items()}) + "\n"
                   for r in records)


def _guard_tol(u: SpinorField) -> float:
    return GUARD_RTOL * float(np.max(u.pointwise_norm(), initial=0.0))


def _pointwise_max(vals: np.ndarray) -> float:
    return float(np.sqrt(np.max(np.sum(vals.real**2 + vals.imag**2, axis=1))))


def _slice_norm(vals: np.ndarray, q: float, delta: float) -> float:
    a = np.sqrt(np.sum(vals.real**2 + vals.imag**2, axis=1))
    return time_norm(a, q, delta)


# -- dispersive decay ---------------------------------------------------------

def dispersive_bound(lam: float, t: float) -> float:
    return lam ** (1 / 3) * math.sqrt(1 + lam * lam) * t ** (-1 / 3)


def dispersive_ratio(u: SpinorField, lam: float, t: float, method: str = "step",
                     seed: int | None = None) -> RatioRecord:
    """Sample of ||U(t) P_lam u||_inf / (lam^(1/3) <lam> t^(-1/3) ||u||_1)."""
    if t <= 0:
        raise DomainError("t must be positive for the dispersive estimate")
    if not (0 < lam < 2 * math.pi / u.delta):
        raise DomainError(f"lambda={lam} outside (0, 2 pi/delta)")
    l1 = field_norm(u, 1)
    if l1 == 0:
        raise DomainError("zero input")
    v = littlewood_paley(u, lam)
    if method == "spectral":
        lhs = field_norm(spectral_evolve(v, t), INF)
    else:
        # P_lam u is never compactly supported, so step on the ring without the guard
        for vals in iterate(v, steps_for(t, u.delta)):
            pass
        lhs = _pointwise_max(vals)
    ok = wrap_guard_ok(u, t, _guard_tol(u))
    return RatioRecord(u.delta, u.params.mass, lam, t, None, None, None, None,
                       lhs, dispersive_bound(lam, t) * l1, ok, seed)


def decay_series(u: SpinorField, lam: float, times, seed: int | None = None,
                 method: str = "step") -> list[RatioRecord]:
    """dispersive_ratio at every t in ``times``.

    ``step`` makes a single stepping pass up to max(times); ``spectral`` jumps to
    each time through the symbol, which is cheaper for sparse ladders on big rings.
    """
    d = u.delta
    wanted = {steps_for(t, d): t for t in times}
    if 0 in wanted:
        raise DomainError("t must be positive for the dispersive estimate")
    if not (0 < lam < 2 * math.pi / d):
        raise DomainError(f"lambda={lam} outside (0, 2 pi/delta)")
    l1 = field_norm(u, 1)
    if l1 == 0:
        raise DomainError("zero input")
    v = littlewood_paley(u, lam)
    tol = _guard_tol(u)

    def record(t, vals):
        return RatioRecord(d, u.params.mass, lam, t, None, None, None, None,
                           _pointwise_max(vals), dispersive_bound(lam, t) * l1,
                           wrap_guard_ok(u, t, tol), seed)

    if method == "spectral":
        return [record(t, spectral_evolve(v, t).values) for _, t in sorted(wanted.items())]
    out = []
    for k, vals in enumerate(iterate(v, max(wanted))):
        if k in wanted:
            out.append(record(wanted[k], vals))
    return out


def dyadic_times(delta: float, kmin: int = 3, kmax: int = 10) -> list[float]:
    """t = 2^k delta for k = kmin..kmax."""
    return [delta * 2**k for k in range(kmin, kmax + 1)]


def decay_slope_fit(records, transient_steps: int = 8):
    """Least-squares fit of log lhs against log t.

    Samples with t < transient_steps * delta are dropped. Returns
    ``(slope, intercept, rms_residual)``.
    """
    pts = [(r.t_or_T, r.lhs) for r in records if r.t_or_T >= transient_steps * r.delta - 1e-12]
    if len(pts) < 3:
        raise FitError(f"need at least 3 samples, got {len(pts)}")
    x = np.log([t for t, _ in pts])
    y = np.log([v for _, v in pts])
    a = np.column_stack([x, np.ones_like(x)])
    (slope, icpt), *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = y - a @ np.array([slope, icpt])
    return float(slope), float(icpt), float(np.sqrt(np.mean(resid**2)))


# -- Strichartz ratios ---------------------------------------------------------

def _as_pair(pair) -> AdmissiblePair:
    if isinstance(pair, AdmissiblePair):
        if pair.kind != "discrete":
            raise PairError("Strichartz ratios need a discrete-admissible pair")
        return pair
    return AdmissiblePair(*pair)


def trajectory_norm(u: SpinorField, p: float, q: float, T: float) -> float:
    """l^p_delta l^q_delta norm of t -> U(t) u over [0, T] on the time grid."""
    n = steps_for(T, u.delta)
    inner = [_slice_norm(v, q, u.delta) for v in iterate(u, n)]
    return time_norm(inner, p, u.delta)


def homogeneous_ratio(u: SpinorField, pair, T: float, seed: int | None = None) -> RatioRecord:
    """||U(t) u||_{l^p l^q}, t in [0, T], over || |D|^(1/p) <D>^(3/p) u ||_2."""
    pair = _as_pair(pair)
    p, q = pair.p, pair.q
    lhs = trajectory_norm(u, p, q, T)
    rhs = field_norm(fractional_weight(u, 1 / p, 3 / p), 2)
    ok = wrap_guard_ok(u, T, _guard_tol(u))
    return RatioRecord(u.delta, u.params.mass, None, T, p, q, None, None, lhs, rhs, ok, seed)


def duhamel(f: SpaceTimeField, t: float, weighted: bool = False) -> SpinorField:
    """sum_{s in [0, t] cap delta Z} U(t - s) f(s), times delta when ``weighted``."""
    d = f.params.delta
    n = steps_for(t, d)
    if not f.slices or f.times[0] != 0.0 or len(f.slices) < n + 1:
        raise DomainError(f"f must be given on every s in [0, {t}]")
    out = None
    for s in range(n + 1):
        term = evolve(f.slices[s], (n - s) * d)
        out = term if out is None else out + term
    return out * d if weighted else out


def duhamel_series(f: SpaceTimeField, nsteps: int, weighted: bool = False):
    """Yield the Duhamel sums at t = 0, delta, ..., nsteps*delta as raw arrays.

    Slices missing beyond the end of ``f`` count as zero.
    """
    from .walk import _shift, coin_matrix

    coin_t = coin_matrix(f.params).T
    scale = f.params.delta if weighted else 1.0
    acc = None
    for k in range(nsteps + 1):
        src = f.slices[k].values if k < len(f.slices) else 0.0
        acc = np.array(src, dtype=np.complex128) if acc is None else _shift(acc @ coin_t) + src
        yield acc * scale


def inhomogeneous_ratio(f: SpaceTimeField, pair, pair_tilde, T: float,
                        weighted: bool = False, seed: int | None = None) -> RatioRecord:
    """Duhamel trajectory norm in (p, q) over the weighted source norm in (p~', q~')."""
    pair, pt = _as_pair(pair), _as_pair(pair_tilde)
    d = f.params.delta
    if not f.slices or f.times[0] != 0.0:
        raise DomainError("source must start at s = 0")
    n = steps_for(T, d)
    inner = [_slice_norm(v, pair.q, d) for v in duhamel_series(f, n, weighted)]
    lhs = time_norm(inner, pair.p, d)
    a = 1 / pair.p + 1 / pt.p
    b = 3 / pair.p + 3 / pt.p
    src = [field_norm(fractional_weight(s, a, b), conjugate(pt.q)) for s in f.slices]
    rhs = time_norm(src, conjugate(pt.p), d)
    ok = all(wrap_guard_ok(s, T, _guard_tol(s)) for s in f.slices)
    u0 = f.slices[0]
    return RatioRecord(d, u0.params.mass, None, T, pair.p, pair.q, pt.p, pt.q, lhs, rhs, ok, seed)


# -- oscillatory kernel ----------------------------------------------------------

def _refined_nodes(params: WalkParams, sites: int, refinement: int):
    m = sites * refinement
    dxi = 2 * math.pi / (m * params.delta)
    return np.arange(-m // 2, m // 2) * dxi, dxi


def kernel_quadrature(params: WalkParams, lam: float, sign: int, t: float, x,
                      sites: int, refinement: int = 8, scalar: bool = False) -> np.ndarray:
    """Trapezoidal value of (1/2pi) int e^{i(s p t + x xi)} Q_s(xi) psi_lam(xi) dxi.

    The frequency grid of a ``sites`` ring is refined ``refinement`` times; p and
    Q_s are re-evaluated at every node. Returns shape ``x.shape + (2, 2)``, or
    ``x.shape`` for the bare phase integral (Q_s dropped) when ``scalar``.
    """
    if not (0 < lam < 2 * math.pi / params.delta):
        raise DomainError(f"lambda={lam} outside (0, 2 pi/delta)")
    xi, dxi = _refined_nodes(params, sites, refinement)
    w = psi_lambda(xi, lam, params.delta)
    keep = w != 0
    xi, w = xi[keep], w[keep]
    dec = projectors(xi, params)
    if scalar:
        amp = np.exp(1j * sign * dec.p * t) * w
    else:
        amp = np.exp(1j * sign * dec.p * t)[:, None, None] * dec.projector(sign) * w[:, None, None]
    x = np.asarray(x, dtype=float)
    phase = np.exp(1j * np.multiply.outer(x, xi))
    return np.tensordot(phase, amp, axes=([-1], [0])) * (dxi / (2 * math.pi))


def kernel_convolve(u: SpinorField, lam: float, t: float, refinement: int = 8) -> SpinorField:
    """sum_s (I_s * u)(x) with (I * u)(x) = delta sum_y I(x - y) u(y) on the window sites."""
    n = u.sites
    d = u.delta
    offsets = np.arange(-(n - 1), n) * d
    total = np.zeros((n, 2), dtype=np.complex128)
    j = np.arange(n)
    diff = j[:, None] - j[None, :] + (n - 1)
    for sign in (1, -1):
        ker = kernel_quadrature(u.params, lam, sign, t, offsets, n, refinement)
        total += d * np.einsum("xyab,yb->xa", ker[diff], u.values)
    return u.replace(total)


# -- sweeps ------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepConfig:
    delta_ladder: tuple = (1.0, 0.5, 0.25, 0.125, 0.0625)
    mass: float = 1.0
    lambda_ladder: tuple = ()
    time_window: float = 64.0
    pairs: tuple = ((INF, 2.0), (6.0, INF))
    ring_size: int = 2**14
    seeds: tuple = (0,)
    state: str = "gaussian"
    width: float = 4.0
    carrier: float = 0.0

    def __post_init__(self):
        for name in ("delta_ladder", "lambda_ladder", "seeds"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "pairs", tuple(tuple(float(e) for e in pr) for pr in self.pairs))
        problems = self.problems()
        if problems:
            raise ConfigError("; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if not self.delta_ladder:
            out.append("delta_ladder is empty")
        for d in self.delta_ladder:
            if not (0 < d <= 1):
                out.append(f"delta={d} outside (0, 1]")
                continue
            if not (0 < d * abs(self.mass) < math.pi / 2):
                out.append(f"delta*|mass|={d * abs(self.mass):g} outside (0, pi/2)")
            for lam in self.lambda_ladder:
                if not (0 < lam < 2 * math.pi / d):
                    out.append(f"lambda={lam} outside (0, 2pi/delta) for delta={d}")
            if not math.isclose(round(self.time_window / d) * d, self.time_window,
                                rel_tol=1e-12):
                out.append(f"time_window={self.time_window} not on the grid of delta={d}")
        for pr in self.pairs:
            if len(pr) != 2 or not admissible_check(*pr):
                out.append(f"pair {pr} is not admissible")
        if self.time_window <= 0:
            out.append("time_window must be positive")
        if self.ring_size < 2 or self.ring_size & (self.ring_size - 1):
            out.append(f"ring_size={self.ring_size} is not a power of two")
        if self.width <= 0:
            out.append("width must be positive")
        if self.state not in ("impulse", "gaussian", "random"):
            out.append(f"unknown state {self.state!r}")
        return out

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def initial_state(self, delta: float, seed: int) -> SpinorField:
        params = WalkParams(delta, self.mass)
        if self.state == "random":
            return make_state("random", params, self.ring_size, seed=seed, radius=16)
        return make_state(self.state, params, self.ring_size,
                          width=self.width, carrier=self.carrier)


def _sweep_task(task):
    cfg, di, kind, idx, seed = task
    d = cfg.delta_ladder[di]
    u = cfg.initial_state(d, seed)
    if kind == "pair":
        return homogeneous_ratio(u, cfg.pairs[idx], cfg.time_window, seed=seed)
    return dispersive_ratio(u, cfg.lambda_ladder[idx], cfg.time_window, seed=seed)


def sweep_tasks(cfg: SweepConfig) -> list[tuple]:
    tasks = []
    for di in range(len(cfg.delta_ladder)):
        for seed in cfg.seeds:
            for pi in range(len(cfg.pairs)):
                tasks.append((cfg, di, "pair", pi, seed))
            for li in range(len(cfg.lambda_ladder)):
                tasks.append((cfg, di, "lambda", li, seed))
    return tasks


def uniformity_sweep(cfg: SweepConfig, jobs: int = 1) -> list[RatioRecord]:
    """Ratios for every (delta, seed, pair | lambda), ordered by that key."""
    tasks = sweep_tasks(cfg)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_sweep_task, tasks))
    return [_sweep_task(t) for t in tasks]
