import math

import mpmath as mp
import numpy as np
import pytest
from scipy.optimize import bisect

from qwlab.lattice import WalkParams, field_norm, make_state
from qwlab.spectral import (
    DegenerateSymbolError,
    FrequencyField,
    SingularityError,
    SYMBOL_COLUMNS,
    dispersion,
    dispersion_derivatives,
    forward_transform,
    grid_of,
    inverse_transform,
    locate_degeneracies,
    projectors,
    spectral_decompose,
    spectral_evolve,
    symbol_matrix,
    symbol_table,
)
from qwlab.walk import SIGMA1, iterate

LADDER = [1.0, 0.5, 0.25, 0.125, 0.0625]


def direct_forward(u):
    """O(N^2) evaluation of delta/sqrt(2pi) sum_x e^{-i x xi} u(x)."""
    x = u.positions()
    xi = grid_of(u).xi
    kern = np.exp(-1j * np.outer(xi, x))
    return u.delta / math.sqrt(2 * math.pi) * kern @ u.values


def test_forward_impulse_is_constant():
    u = make_state("impulse", WalkParams(1.0, 1.0), 16)
    v = forward_transform(u).values
    assert np.allclose(v[:, 0], 1 / math.sqrt(2 * math.pi), atol=1e-15)
    assert np.all(v[:, 1] == 0)


@pytest.mark.parametrize("delta", [1.0, 0.25])
def test_forward_matches_direct_sum(delta):
    u = make_state("random", WalkParams(delta, 1.0), 64, seed=3)
    assert np.allclose(forward_transform(u).values, direct_forward(u), atol=1e-12)


@pytest.mark.parametrize("delta", [1.0, 0.5, 0.125])
def test_plancherel_direct_summation(delta):
    u = make_state("random", WalkParams(delta, 1.0), 128, seed=5)
    vh = direct_forward(u)
    dxi = 2 * math.pi / (u.sites * delta)
    lhs = field_norm(u, 2) ** 2
    rhs = dxi * np.sum(np.abs(vh) ** 2)
    assert abs(lhs - rhs) <= 1e-12 * lhs


def test_transform_pair_inverse():
    p = WalkParams(0.5, 1.0)
    u = make_state("random", p, 256, seed=1)
    assert np.allclose(inverse_transform(forward_transform(u)).values, u.values, atol=1e-12)
    c = FrequencyField(grid_of(u), np.tile([1 / math.sqrt(2 * math.pi), 0], (256, 1)))
    w = inverse_transform(c)
    imp = make_state("impulse", p, 256)
    assert np.allclose(w.values * p.delta, imp.values, atol=1e-14)


def test_inverse_linearity_and_modulation():
    p = WalkParams(1.0, 1.0)
    a = forward_transform(make_state("random", p, 32, seed=1))
    b = forward_transform(make_state("random", p, 32, seed=2))
    s = inverse_transform(FrequencyField(a.grid, 2 * a.values - 3j * b.values))
    assert np.allclose(s.values, 2 * inverse_transform(a).values - 3j * inverse_transform(b).values,
                       atol=1e-13)
    x0 = 3 * p.delta
    mod = FrequencyField(a.grid, a.values * np.exp(-1j * x0 * a.grid.xi)[:, None])
    assert np.allclose(inverse_transform(mod).values, np.roll(inverse_transform(a).values, 3, axis=0),
                       atol=1e-13)


def test_dispersion_examples():
    for m in (0.3, 1.0, -2.0):
        p = WalkParams(0.5, m)
        assert dispersion(0.0, p) == pytest.approx(abs(m), rel=1e-14)
    xi = np.linspace(-math.pi / 0.5, math.pi / 0.5, 17)
    assert np.allclose(dispersion(xi, WalkParams(0.5, 0.0)), np.abs(xi), atol=1e-14)
    # 40-digit reference of arccos(cos(1e-3) cos(1e-3)) / 1e-3
    ref = 1.4142134445219442
    val = float(dispersion(1.0, WalkParams(1e-3, 1.0)))
    assert val == pytest.approx(ref, rel=1e-12)
    assert abs(val - math.sqrt(2)) < 1e-3


@pytest.mark.parametrize("delta", LADDER)
def test_dispersion_identity_and_parity(delta):
    p = WalkParams(delta, 1.0)
    dec = spectral_decompose(p, 1024)
    res = np.cos(delta * dec.p) - math.cos(delta) * np.cos(delta * dec.xi)
    assert np.max(np.abs(res)) < 1e-13
    assert np.all((dec.p >= 0) & (dec.p <= math.pi / delta))
    xi = dec.xi[1:]  # symmetric part of the grid
    p0 = dispersion(xi, p)
    d1, d2, d3 = dispersion_derivatives(xi, p)
    assert np.allclose(p0, p0[::-1], atol=1e-13)
    assert np.allclose(d1, -d1[::-1], atol=1e-12)
    assert np.allclose(d2, d2[::-1], atol=1e-12)
    assert np.allclose(d3, -d3[::-1], atol=1e-12)


def test_derivative_special_points():
    p = WalkParams(1.0, 1.0)
    d1, d2, _ = dispersion_derivatives(math.pi / 2, p)
    assert abs(d2) < 1e-15
    assert d1 == pytest.approx(math.cos(1.0), rel=1e-14)
    d1, _, d3 = dispersion_derivatives(0.0, p)
    assert d1 == 0 and d3 == 0


def _mp_dispersion(x, delta, m):
    return mp.acos(mp.cos(delta * m) * mp.cos(delta * x)) / delta


def mp_finite_differences(xi, delta, m, h=mp.mpf("1e-5")):
    """Central differences of the defining arccos formula at 40 digits."""
    f = {k: _mp_dispersion(mp.mpf(xi) + k * h, delta, m) for k in (-2, -1, 0, 1, 2)}
    d1 = (f[1] - f[-1]) / (2 * h)
    d2 = (f[1] - 2 * f[0] + f[-1]) / h**2
    d3 = (f[2] - 2 * f[1] + 2 * f[-1] - f[-2]) / (2 * h**3)
    return float(d1), float(d2), float(d3)


def sample_away_from_degeneracies(delta, n, rng, gap=1e-3):
    bad = np.array([-math.pi, -math.pi / 2, 0.0, math.pi / 2, math.pi]) / delta
    out = []
    while len(out) < n:
        x = rng.uniform(-math.pi / delta, math.pi / delta)
        if np.min(np.abs(bad - x)) > gap:
            out.append(x)
    return np.array(out)


@pytest.mark.parametrize("delta, mass", [(1.0, 1.0), (0.25, 1.0), (0.0625, 1.0), (0.5, 2.5)])
def test_derivatives_match_finite_differences(delta, mass):
    mp.mp.dps = 40
    rng = np.random.default_rng(17)
    xs = sample_away_from_degeneracies(delta, 60, rng)
    closed = np.array(dispersion_derivatives(xs, WalkParams(delta, mass))).T
    for x, c in zip(xs, closed):
        fd = mp_finite_differences(x, mp.mpf(delta), mp.mpf(mass))
        for a, b in zip(c, fd):
            assert abs(a - b) <= 1e-6 * abs(b)


def test_third_derivative_sign():
    # the closed form must decrease p'' past xi = 0 on the positive side
    p = WalkParams(1.0, 1.0)
    _, d2a, _ = dispersion_derivatives(0.2, p)
    _, d2b, d3 = dispersion_derivatives(0.2 + 1e-6, p)
    assert d2b < d2a and d3 < 0


def test_singular_derivatives():
    with pytest.raises(SingularityError):
        dispersion_derivatives(0.0, WalkParams(1.0, 0.0))


def test_locate_degeneracies():
    assert locate_degeneracies(WalkParams(1.0, 1.0))[0] == [-math.pi / 2, math.pi / 2]
    assert locate_degeneracies(WalkParams(0.5, 1.0))[1] == [-2 * math.pi, 0.0, 2 * math.pi]


@pytest.mark.parametrize("delta", LADDER)
def test_degeneracies_bisection_oracle(delta):
    p = WalkParams(delta, 1.0)
    p2_zeros, p3_zeros = locate_degeneracies(p)
    grid = np.linspace(-math.pi / delta - 0.1, math.pi / delta + 0.1, 4001)

    def roots(idx):
        f = lambda x: float(dispersion_derivatives(x, p)[idx])
        vals = np.array([f(x) for x in grid])
        out = []
        for a, b, fa, fb in zip(grid, grid[1:], vals, vals[1:]):
            if fa == 0:
                out.append(a)
            elif fa * fb < 0:
                out.append(bisect(f, a, b, xtol=1e-12))
        return out

    r2 = roots(1)
    r3 = [r for r in roots(2) if abs(r) <= math.pi / delta + 1e-9]
    assert len(r2) == 2 and np.allclose(sorted(r2), p2_zeros, atol=1e-8)
    assert len(r3) == 3 and np.allclose(sorted(r3), p3_zeros, atol=1e-8)


def test_symbol_matrix_examples():
    xi = np.linspace(-math.pi, math.pi, 9)
    sym = symbol_matrix(xi, WalkParams(1.0, 0.0))
    for x, s in zip(xi, sym):
        assert np.allclose(s, np.diag([np.exp(-1j * x), np.exp(1j * x)]), atol=1e-15)
    assert np.allclose(symbol_matrix(0.0, WalkParams(1.0, math.pi / 2)), -1j * SIGMA1, atol=1e-15)


@pytest.mark.parametrize("delta, mass", [(1.0, 1.0), (0.25, 0.7), (0.0625, 1.0)])
def test_symbol_unitary_trace(delta, mass):
    p = WalkParams(delta, mass)
    dec = spectral_decompose(p, 2048)
    sym = symbol_matrix(dec.xi, p)
    eye = np.eye(2)
    assert np.max(np.abs(np.einsum("kij,klj->kil", sym, sym.conj()) - eye)) < 1e-14
    assert np.max(np.abs(np.linalg.det(sym) - 1)) < 1e-14
    tr = np.trace(sym, axis1=1, axis2=2)
    assert np.max(np.abs(tr - 2 * np.cos(delta * dec.p))) < 1e-13


def test_symbol_is_fourier_of_step():
    p = WalkParams(0.5, 1.0)
    u = make_state("random", p, 64, seed=8)
    stepped = next(x for i, x in enumerate(iterate(u, 1)) if i == 1)
    lhs = forward_transform(u.replace(stepped)).values
    rhs = np.einsum("kij,kj->ki", symbol_matrix(grid_of(u).xi, p), forward_transform(u).values)
    assert np.allclose(lhs, rhs, atol=1e-13)


@pytest.mark.parametrize("delta", LADDER)
def test_projector_algebra(delta):
    p = WalkParams(delta, 1.0)
    dec = spectral_decompose(p, 4096)
    qp, qm = dec.qplus, dec.qminus
    eye = np.eye(2)
    mm = lambda a, b: np.einsum("kij,kjl->kil", a, b)
    assert np.max(np.abs(qp + qm - eye)) < 1e-12
    assert np.max(np.abs(mm(qp, qp) - qp)) < 1e-12
    assert np.max(np.abs(mm(qm, qm) - qm)) < 1e-12
    assert np.max(np.abs(mm(qp, qm))) < 1e-12
    ph = np.exp(1j * delta * dec.p)[:, None, None]
    recon = ph * qp + np.conj(ph) * qm
    assert np.max(np.abs(recon - symbol_matrix(dec.xi, p))) < 1e-12


def test_projector_uniform_bounds():
    sup = {}
    var = {}
    for delta in LADDER:
        dec = spectral_decompose(WalkParams(delta, 1.0), 4096)
        q = np.stack([dec.qplus, dec.qminus])
        sup[delta] = np.max(np.abs(q))
        # total variation on the grid approximates ||Q'||_{L^1}
        dq = np.abs(np.diff(np.concatenate([q, q[:, :1]], axis=1), axis=1))
        var[delta] = np.max(np.sum(dq, axis=1))
    assert max(sup.values()) <= 2 * sup[1.0]
    assert max(var.values()) <= 2 * var[1.0]


def test_degenerate_symbol_error():
    with pytest.raises(DegenerateSymbolError, match="xi = 0.0"):
        projectors([0.0, 1.0], WalkParams(1.0, 0.0))


@pytest.mark.parametrize("delta", [1.0, 0.5, 0.25])
def test_spectral_evolve_matches_stepping(delta):
    p = WalkParams(delta, 1.0)
    u = make_state("random", p, 1024, seed=21)
    t = 500 * delta
    for v in iterate(u, 500):
        pass
    diff = field_norm(spectral_evolve(u, t) - u.replace(v), 2)
    assert diff < 1e-10 * field_norm(u, 2)


def test_spectral_evolve_identity_and_inverse():
    p = WalkParams(0.5, 1.0)
    u = make_state("random", p, 256, seed=2)
    assert field_norm(spectral_evolve(u, 0.0) - u, 2) < 1e-13 * field_norm(u, 2)
    back = spectral_evolve(spectral_evolve(u, 40.0), -40.0)
    assert field_norm(back - u, 2) < 1e-11 * field_norm(u, 2)
    assert field_norm(spectral_evolve(u, 40.0), 2) == pytest.approx(field_norm(u, 2), rel=1e-12)


def test_symbol_table_csv():
    text = symbol_table(WalkParams(1.0, 1.0), 8)
    lines = text.splitlines()
    assert lines[0].split(",") == SYMBOL_COLUMNS
    assert SYMBOL_COLUMNS[6:8] == ["reQ+11", "imQ+11"]
    assert len(lines) == 9
    assert lines[1].split(",")[0] == "-4"


def test_low_frequency_convexity():
    for delta in LADDER:
        p = WalkParams(delta, 1.0)
        xi = np.linspace(-1 / delta, 1 / delta, 2001)
        assert np.all(dispersion_derivatives(xi, p)[1] > 0)
