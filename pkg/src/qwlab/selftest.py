"""Small-size oracle checks runnable from the command line (``qwlab selftest``)."""

from __future__ import annotations

import math

import numpy as np

from .harness import (
    dispersive_ratio,
    duhamel,
    homogeneous_ratio,
    inhomogeneous_ratio,
    kernel_convolve,
)
from .lattice import (
    SpaceTimeField,
    WalkParams,
    embed,
    field_norm,
    make_state,
    restrict,
    support_radius,
)
from .multipliers import dyadic_ladder, fractional_weight, littlewood_paley, psi_lambda
from .spectral import (
    dispersion_derivatives,
    forward_transform,
    grid_of,
    locate_degeneracies,
    spectral_decompose,
    spectral_evolve,
    symbol_matrix,
)
from .walk import iterate, one_step_matrix

CHECKS = []


def check(fn):
    CHECKS.append(fn)
    return fn


def _direct_dft(u):
    xi = grid_of(u).xi
    return u.delta / math.sqrt(2 * math.pi) * np.exp(-1j * np.outer(xi, u.positions())) @ u.values


@check
def plancherel():
    u = make_state("random", WalkParams(0.25, 1.0), 128, seed=1)
    lhs = field_norm(u, 2) ** 2
    rhs = 2 * math.pi / (u.sites * u.delta) * np.sum(np.abs(_direct_dft(u)) ** 2)
    fast = np.max(np.abs(forward_transform(u).values - _direct_dft(u))) / np.max(np.abs(_direct_dft(u)))
    return max(abs(lhs - rhs) / lhs, fast), 1e-12


@check
def derivative_finite_differences():
    import mpmath as mp

    worst = 0.0
    with mp.workdps(40):
        h = mp.mpf("1e-5")
        for delta in (1.0, 0.125):
            p = WalkParams(delta, 1.0)
            for x in (0.3 / delta, 1.1 / delta, -2.5 / delta):
                f = {k: mp.acos(mp.cos(mp.mpf(delta)) * mp.cos(mp.mpf(delta) * (mp.mpf(x) + k * h)))
                     / delta for k in (-2, -1, 0, 1, 2)}
                fd = ((f[1] - f[-1]) / (2 * h), (f[1] - 2 * f[0] + f[-1]) / h**2,
                      (f[2] - 2 * f[1] + 2 * f[-1] - f[-2]) / (2 * h**3))
                for a, b in zip(dispersion_derivatives(x, p), fd):
                    worst = max(worst, abs(float(a) - float(b)) / abs(float(b)))
    return worst, 1e-6


@check
def degeneracy_bisection():
    from scipy.optimize import bisect

    p = WalkParams(0.5, 1.0)
    p2, _ = locate_degeneracies(p)
    f = lambda x: float(dispersion_derivatives(x, p)[1])
    root = bisect(f, 0.5 / p.delta, 2.5 / p.delta, xtol=1e-13)
    return abs(root - p2[1]), 1e-8


@check
def dispersion_identity():
    p = WalkParams(0.125, 1.0)
    dec = spectral_decompose(p, 1024)
    res = np.cos(p.delta * dec.p) - math.cos(p.delta) * np.cos(p.delta * dec.xi)
    return float(np.max(np.abs(res))), 1e-13


@check
def projector_reconstruction():
    p = WalkParams(0.25, 1.0)
    dec = spectral_decompose(p, 512)
    ph = np.exp(1j * p.delta * dec.p)[:, None, None]
    recon = ph * dec.qplus + np.conj(ph) * dec.qminus
    return float(np.max(np.abs(recon - symbol_matrix(dec.xi, p)))), 1e-12


@check
def spectral_vs_stepping():
    u = make_state("random", WalkParams(0.5, 1.0), 512, seed=2)
    for v in iterate(u, 200):
        pass
    return field_norm(spectral_evolve(u, 100.0) - u.replace(v), 2) / field_norm(u, 2), 1e-10


@check
def unitarity_and_light_cone():
    u = make_state("impulse", WalkParams(1.0, 1.0), 1024)
    n0 = field_norm(u, 2)
    worst = 0.0
    for k, v in enumerate(iterate(u, 400)):
        w = u.replace(v)
        worst = max(worst, abs(field_norm(w, 2) - n0))
        if support_radius(w) != k:
            return 1.0, 0.0
    return worst, 1e-12


@check
def dense_matrix_dispersive():
    n, delta, lam = 32, 0.5, 2.0
    params = WalkParams(delta, 1.0)
    u = make_state("random", params, n, seed=3, radius=2)
    xi = grid_of(u).xi
    x = u.positions()
    fwd = delta / math.sqrt(2 * math.pi) * np.exp(-1j * np.outer(xi, x))
    inv = (2 * math.pi / (n * delta)) / math.sqrt(2 * math.pi) * np.exp(1j * np.outer(x, xi))
    v = inv @ np.diag(psi_lambda(xi, lam, delta)) @ fwd @ u.values
    w = (np.linalg.matrix_power(one_step_matrix(params, n), 16) @ v.ravel()).reshape(n, 2)
    lhs = float(np.max(np.linalg.norm(w, axis=1)))
    return abs(dispersive_ratio(u, lam, 16 * delta).lhs - lhs), 1e-10


@check
def littlewood_paley_identities():
    u = make_state("random", WalkParams(0.25, 1.0), 256, seed=4)
    worst = 0.0
    for lam in dyadic_ladder(256, u.delta):
        a = littlewood_paley(u, lam)
        b = littlewood_paley(littlewood_paley(u, lam, companion=True), lam)
        worst = max(worst, field_norm(a - b, 2))
    total = sum((littlewood_paley(u, lam) for lam in dyadic_ladder(256, u.delta)), start=u * 0)
    centered = u.replace(u.values - u.values.mean(axis=0))
    return max(worst, field_norm(total - centered, 2)) / field_norm(u, 2), 1e-10


@check
def fractional_weight_plancherel():
    u = make_state("random", WalkParams(0.5, 1.0), 128, seed=5)
    xi = grid_of(u).xi
    w = np.abs(xi) ** (1 / 3) * (1 + xi**2) ** 0.5
    expected = 2 * math.pi / (u.sites * u.delta) * np.sum(w[:, None] * np.abs(_direct_dft(u)) ** 2)
    got = field_norm(fractional_weight(u, 1 / 6, 1 / 2), 2) ** 2
    return abs(got - expected) / expected, 1e-12


@check
def duhamel_hand_example():
    imp = make_state("impulse", WalkParams(1.0, 0.0), 16)
    out = duhamel(SpaceTimeField.from_slices([imp] * 3), 2.0)
    expected = np.zeros((16, 2))
    expected[[8, 9, 10], 0] = 1
    return float(np.max(np.abs(out.values - expected))), 1e-15


@check
def kernel_representation():
    n, r, lam = 64, 8, 1.0
    u = make_state("random", WalkParams(1.0, 1.0), n, seed=6)
    big = littlewood_paley(embed(u, n * r), lam)
    for v in iterate(big, 16):
        pass
    ref = restrict(big.replace(v), n)
    return field_norm(kernel_convolve(u, lam, 16.0, r) - ref, 2) / field_norm(u, 2), 1e-8


@check
def strichartz_endpoints():
    u = make_state("gaussian", WalkParams(0.5, 1.0), 512, width=4.0)
    hom = abs(homogeneous_ratio(u, (math.inf, 2), 16.0).ratio - 1)
    f = SpaceTimeField.from_slices(
        [make_state("random", WalkParams(1.0, 1.0), 128, seed=s, radius=4) for s in range(6)])
    inh = inhomogeneous_ratio(f, (math.inf, 2), (math.inf, 2), 5.0).ratio - 1
    return max(hom, inh), 1e-12


def run(verbose: bool = True) -> bool:
    ok_all = True
    for fn in CHECKS:
        try:
            err, tol = fn()
            ok = bool(0 <= err <= tol)
            detail = f"error={err:.3e} tol={tol:.0e}"
        except Exception as exc:  # a crashing oracle is a failed oracle
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        ok_all &= ok
        if verbose:
            print(f"{'PASS' if ok else 'FAIL'} {fn.__name__}: {detail}")
    return ok_all
