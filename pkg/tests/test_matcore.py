import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from covlab.errors import DomainError, SizeError
from covlab.matcore import (
    Spectrum,
    as_sym,
    effective_rank,
    frobenius_norm,
    haar_orthogonal,
    kron,
    operator_norm,
    orthogonality_defect,
    trace_power,
    unvec,
    vec,
)
from covlab.rng import stream

from .conftest import random_psd, random_sym


def test_as_sym_is_exactly_symmetric_and_read_only(rng):
    s = as_sym(rng.standard_normal((4, 4)))
    assert np.array_equal(s, s.T)
    with pytest.raises(ValueError):
        s[0, 0] = 1.0


@pytest.mark.parametrize("bad", [np.zeros((2, 3)), np.zeros((0, 0)), np.array([[np.nan]])])
def test_as_sym_rejects_bad_input(bad):
    with pytest.raises(DomainError):
        as_sym(bad)


def test_spectrum_invariants():
    with pytest.raises(DomainError):
        Spectrum(np.array([1.0, 2.0]))
    with pytest.raises(DomainError):
        Spectrum(np.array([0.0, 0.0]))
    with pytest.raises(DomainError):
        Spectrum(np.array([1.0, -0.1]))
    assert Spectrum.from_values([0.5, 2.0, 1.0]).values.tolist() == [2.0, 1.0, 0.5]


def test_trace_power_examples(rng):
    assert trace_power(np.eye(3), 2) == 3.0
    assert trace_power(np.diag([1.0, 2.0]), 2) == 5.0
    a = random_psd(rng, 4)
    expected = np.sum(np.linalg.eigvalsh(a) ** 3)
    assert trace_power(a, 3) == pytest.approx(expected, rel=1e-10)


def test_operator_norm_examples(rng):
    assert operator_norm(np.diag([3.0, 1.0, 0.5])) == 3.0
    assert operator_norm(np.eye(6)) == 1.0
    a = random_psd(rng, 5)
    assert operator_norm(a) == pytest.approx(np.linalg.eigvalsh(a)[-1], rel=1e-10)


def test_operator_norm_near_degenerate_top(rng):
    # two top eigenvalues 1e-9 apart: plain power iteration would stall
    q = haar_orthogonal(8, rng)
    vals = np.array([1.0, 1.0 - 1e-9, 0.5, 0.4, 0.3, 0.2, 0.1, 0.0])
    a = (q * vals) @ q.T
    assert operator_norm(a) == pytest.approx(1.0, rel=1e-10)


def test_operator_norm_of_indefinite_matrix_is_largest_magnitude():
    assert operator_norm(np.array([[0.0, 2.0], [2.0, 0.0]])) == pytest.approx(2.0, rel=1e-12)
    assert operator_norm(np.diag([-5.0, 1.0])) == 5.0


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_operator_norm_matches_eigensolver(d, seed):
    a = random_sym(stream(seed), d)
    assert operator_norm(a) == pytest.approx(np.max(np.abs(np.linalg.eigvalsh(a))), rel=1e-9, abs=1e-12)


def test_effective_rank_examples():
    assert effective_rank(np.eye(7)) == 7.0
    assert effective_rank(np.diag([1.0, 0.0, 0.0])) == 1.0
    lam = 1.0 - np.arange(50) / 50
    assert effective_rank(Spectrum(lam)) == pytest.approx(25.5, abs=1e-12)
    assert effective_rank(np.diag(lam)) == pytest.approx(25.5, abs=1e-12)
    with pytest.raises(DomainError):
        effective_rank(np.zeros((3, 3)))


@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_stable_rank_never_exceeds_effective_rank(d, seed):
    a = random_psd(stream(seed), d)
    op = operator_norm(a)
    r1 = trace_power(a, 1) / op
    r2 = trace_power(a, 2) / op ** 2
    assert 1.0 - 1e-9 <= r2 <= r1 * (1 + 1e-9) <= d * (1 + 1e-9)


def test_haar_orthogonality_and_d1():
    for seed in range(5):
        assert orthogonality_defect(haar_orthogonal(3, stream(seed))) <= 1e-10
    signs = {float(haar_orthogonal(1, stream(seed))[0, 0]) for seed in range(40)}
    assert signs == {-1.0, 1.0}


def test_haar_first_entry_is_centered():
    vals = np.array([haar_orthogonal(3, stream(7, j))[0, 0] for j in range(10_000)])
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(vals.mean()) <= 3 * se


def test_kron_examples(rng):
    assert np.array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))
    a, b = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
    assert np.trace(kron(a, b)) == pytest.approx(np.trace(a) * np.trace(b), rel=1e-12)
    a, b, u = rng.standard_normal((3, 3)), rng.standard_normal((2, 2)), rng.standard_normal((2, 3))
    assert np.max(np.abs(kron(a, b) @ vec(u) - vec(b @ u @ a.T))) <= 1e-12
    assert np.allclose(kron(a, b), np.kron(a, b), rtol=0, atol=0)


def test_kron_size_cap():
    with pytest.raises(SizeError):
        kron(np.eye(17), np.eye(16))


def test_vec_examples(rng):
    assert vec(np.array([[1, 2], [3, 4]])).tolist() == [1, 3, 2, 4]
    assert vec(np.eye(2)).tolist() == [1, 0, 0, 1]
    a = rng.standard_normal((4, 4))
    assert np.linalg.norm(vec(a)) == pytest.approx(frobenius_norm(a), rel=1e-14)
    assert np.array_equal(unvec(vec(a), 4, 4), a)
