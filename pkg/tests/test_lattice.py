import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qwlab.lattice import (
    EmptyWindowError,
    InvalidFieldError,
    NormSpec,
    ParameterError,
    SpaceTimeField,
    SpinorField,
    WalkParams,
    embed,
    field_norm,
    make_state,
    mixed_norm,
    read_field,
    restrict,
    support_radius,
    write_field,
)

INF = math.inf


def single(delta, value=(1, 0), sites=8, j=0):
    vals = np.zeros((sites, 2), dtype=complex)
    vals[j + sites // 2] = value
    return SpinorField(WalkParams(delta, 1.0), vals)


def test_field_norm_unit_site():
    assert field_norm(single(1.0), 1) == 1.0


@pytest.mark.parametrize("p, expected", [(1, 0.5), (2, 0.5**0.5), (INF, 1.0)])
def test_field_norm_weights(p, expected):
    assert field_norm(single(0.5), p) == pytest.approx(expected, rel=1e-15)


def test_field_norm_euclidean_sum():
    vals = np.zeros((8, 2), dtype=complex)
    vals[4] = (1, 0)
    vals[5] = (0, 1)
    u = SpinorField(WalkParams(1.0, 1.0), vals)
    assert field_norm(u, 2) == pytest.approx(math.sqrt(2), rel=1e-15)


def test_nonfinite_field_rejected():
    vals = np.zeros((8, 2), dtype=complex)
    vals[0, 0] = np.nan
    with pytest.raises(InvalidFieldError):
        SpinorField(WalkParams(1.0, 1.0), vals)


def test_ring_size_must_be_power_of_two():
    with pytest.raises(InvalidFieldError):
        SpinorField(WalkParams(1.0, 1.0), np.zeros((12, 2)))


def test_delta_range():
    with pytest.raises(ParameterError):
        WalkParams(1.5, 1.0)
    with pytest.raises(ParameterError):
        WalkParams(0.0, 1.0)


def test_mixed_norm_examples():
    f = SpaceTimeField.from_slices([single(1.0)])
    assert mixed_norm(f, NormSpec(2, 2)) == 1.0
    g = SpaceTimeField.from_slices([single(0.5)])
    assert mixed_norm(g, NormSpec(1, 1)) == pytest.approx(0.25, rel=1e-15)
    h = SpaceTimeField.from_slices([single(1.0), single(1.0)])
    assert mixed_norm(h, NormSpec(INF, 2)) == 1.0


def test_mixed_norm_empty():
    with pytest.raises(EmptyWindowError):
        mixed_norm(SpaceTimeField(WalkParams(1.0, 1.0), [], []), NormSpec(2, 2))


def test_space_time_times_must_be_consecutive():
    with pytest.raises(InvalidFieldError):
        SpaceTimeField(WalkParams(1.0, 1.0), [0.0, 2.0], [single(1.0), single(1.0)])


def test_make_state_kinds():
    p = WalkParams(1.0, 1.0)
    imp = make_state("impulse", p, 8)
    assert np.count_nonzero(imp.pointwise_norm()) == 1
    g = make_state("gaussian", p, 64, width=4.0)
    assert np.all(g.values[:, 0].real > 0)
    assert np.all(g.values[:, 0].imag == 0)
    assert np.all(g.values[:, 1] == 0)
    a = make_state("random", p, 64, seed=7)
    b = make_state("random", p, 64, seed=7)
    assert a.values.tobytes() == b.values.tobytes()
    with pytest.raises(ParameterError):
        make_state("gaussian", p, 64, width=0.0)


def test_support_radius():
    assert support_radius(single(1.0), 0) == 0.0
    assert support_radius(single(0.5, j=3), 0) == 1.5
    assert support_radius(SpinorField(WalkParams(1.0, 1.0), np.zeros((8, 2))), 0) == 0.0


def test_field_file_roundtrip(tmp_path):
    u = make_state("random", WalkParams(0.25, 1.3), 16, seed=3)
    path = tmp_path / "u.txt"
    write_field(u, path)
    text = path.read_text()
    assert text.splitlines()[0] == "# delta=0.25 N=16 mass=1.3"
    assert text.splitlines()[1].split()[0] == "-8"
    v = read_field(path)
    assert np.array_equal(u.values, v.values)
    assert v.params == u.params


def test_embed_restrict():
    u = make_state("random", WalkParams(1.0, 1.0), 16, seed=1)
    big = embed(u, 64)
    assert field_norm(big, 2) == pytest.approx(field_norm(u, 2), rel=1e-15)
    assert np.array_equal(restrict(big, 16).values, u.values)
    assert np.array_equal(big.positions()[big.pointwise_norm() > 0],
                          u.positions()[u.pointwise_norm() > 0])


exps = st.sampled_from([1.0, 1.5, 2.0, 3.0, 6.0, INF])
deltas = st.sampled_from([1.0, 0.5, 0.125])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), delta=deltas, p1=exps, p2=exps)
def test_lattice_embedding(seed, delta, p1, p2):
    p1, p2 = min(p1, p2), max(p1, p2)
    u = make_state("random", WalkParams(delta, 1.0), 32, seed=seed)
    lhs = field_norm(u, p2)
    rhs = delta ** ((0 if p2 == INF else 1 / p2) - (0 if p1 == INF else 1 / p1)) * field_norm(u, p1)
    assert lhs <= rhs * (1 + 1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), p=exps, c=st.complex_numbers(min_magnitude=1e-3, max_magnitude=3))
def test_homogeneity_and_triangle(seed, p, c):
    params = WalkParams(0.5, 1.0)
    u = make_state("random", params, 32, seed=seed)
    v = make_state("random", params, 32, seed=seed + 1)
    assert field_norm(c * u, p) == pytest.approx(abs(c) * field_norm(u, p), rel=1e-12)
    assert field_norm(u + v, p) <= (field_norm(u, p) + field_norm(v, p)) * (1 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), p=exps, q=exps, delta=deltas)
def test_single_slice_mixed_norm(seed, p, q, delta):
    u = make_state("random", WalkParams(delta, 1.0), 16, seed=seed)
    f = SpaceTimeField.from_slices([u])
    w = 1.0 if p == INF else delta ** (1 / p)
    assert mixed_norm(f, NormSpec(p, q)) == pytest.approx(w * field_norm(u, q), rel=1e-13)


def test_pointwise_domination_monotone():
    rng = np.random.default_rng(0)
    a = rng.random((32, 2))
    b = a * rng.random((32, 2))
    params = WalkParams(0.25, 1.0)
    for p in (1, 2, 4, INF):
        assert field_norm(SpinorField(params, b), p) <= field_norm(SpinorField(params, a), p)
