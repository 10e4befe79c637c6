import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles as O
from latbp import approximants as ap
from latbp import operators as op
from latbp.lattice import L1, L2, LINF, LatticeError, Partition

entries = st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False)
mats = st.integers(2, 6).flatmap(lambda n: arrays(float, (n, n), elements=entries))


@st.composite
def mat_and_partition(draw):
    M = draw(mats)
    n = M.shape[0]
    labels = draw(st.lists(st.integers(0, n - 1), min_size=n, max_size=n))
    blocks = [[i for i in range(n) if labels[i] == k] for k in set(labels)]
    return M, Partition(tuple(blocks), n)


def _average_by_definition(M, P):
    """Direct 2^m loop with explicit projection matrices."""
    mats_ = [p.matrix() for p in P.projections()]
    n = M.shape[0]
    acc = np.zeros_like(M)
    for pick in itertools.product((0, 1), repeat=len(mats_)):
        PS = sum((m for m, b in zip(mats_, pick) if b), np.zeros((n, n)))
        acc += PS @ M @ (np.eye(n) - PS)
    return acc / 2 ** len(mats_)


@settings(max_examples=60, deadline=None)
@given(mat_and_partition())
def test_averaging_identity(case):
    M, P = case
    assert ap.offdiag_average_check(M, P) <= 1e-12
    T = sum(p.matrix() @ M @ p.matrix() for p in P.projections())
    assert np.allclose(ap.partition_compress(M, P), T)
    assert np.allclose(M - T, 4 * _average_by_definition(M, P), atol=1e-12)


def test_averaging_block_limit():
    with pytest.raises(LatticeError):
        ap.offdiag_average_check(np.zeros((21, 21)), Partition.finest(21))


@pytest.mark.parametrize("spec,p", [(L1, 1), (L2, 2), (LINF, math.inf)])
@settings(max_examples=30, deadline=None)
@given(case=mat_and_partition())
def test_compression_within_four_bp(spec, p, case):
    M, P = case
    bp = O.bp_brute(M, p)
    assert O.opnorm(M - ap.partition_compress(M, P), p) <= 4 * bp + 1e-8
    assert O.opnorm(M - ap.diagonal_part(M), p) <= 4 * bp + 1e-8
    assert O.opnorm(ap.diagonal_part(M), p) <= O.opnorm(M, p) + 1e-12


@settings(max_examples=60, deadline=None)
@given(mats)
def test_ck_multiplier_within_two_bp(M):
    bp = O.bp_brute(M, math.inf)
    assert O.opnorm_inf(M - ap.ck_multiplier(M)) <= 2 * bp + 1e-9


def test_ck_equality_on_antidiagonal():
    M = np.array([[0.0, 0.3], [0.3, 0.0]])
    gap = O.opnorm_inf(M - ap.ck_multiplier(M))
    assert gap / (2 * op.bp_defect(M, LINF).value) == pytest.approx(1.0, abs=1e-12)


def test_ck_tight_for_positive_matrices():
    rng = np.random.default_rng(0)
    for _ in range(20):
        M = rng.uniform(0, 1, (5, 5))
        gap = O.opnorm_inf(M - ap.ck_multiplier(M))
        assert gap == pytest.approx(2 * op.bp_defect(M, LINF).value, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: st.tuples(arrays(float, n, elements=entries),
                                                      arrays(float, n, elements=entries))))
def test_clip_to_ideal(xy):
    y, x = xy
    u = ap.clip_to_ideal(y, x)
    assert np.all(np.abs(u) <= np.abs(x) + 1e-15)
    r = y - u
    assert np.allclose(np.abs(r), np.maximum(np.abs(y) - np.abs(x), 0.0))


@pytest.mark.parametrize("spec", [L1, L2, LINF])
def test_local_approximant(spec):
    rng = np.random.default_rng(4)
    for _ in range(10):
        M = rng.uniform(-1, 1, (5, 5))
        x = rng.uniform(-1, 1, 5)
        x[rng.random(5) < 0.3] = 0.0
        if not np.any(x):
            continue
        lam = float(rng.uniform(0, 2))
        D = ap.local_bp_approximant(M, x, lam, spec)
        assert np.all(np.abs(np.diag(D)) <= lam + 1e-12)
        assert np.count_nonzero(D - np.diag(np.diag(D))) == 0
        assert np.all(np.diag(D)[x == 0] == 0)
        resid = np.linalg.norm(M @ x - D @ x, np.inf if spec == LINF else spec.p)
        gap = op.center_gap(M, x, lam, spec) * O.vec_norm(x, spec.p)
        assert resid == pytest.approx(gap, abs=1e-12)


def test_local_approximant_errors():
    with pytest.raises(LatticeError):
        ap.local_bp_approximant(np.eye(2), [0.0, 0.0], 1.0)
    with pytest.raises(LatticeError):
        ap.local_bp_approximant(np.eye(2), [1.0, 0.0], -1.0)


def test_positive_net_decreases_to_diagonal():
    rng = np.random.default_rng(7)
    for _ in range(10):
        n = int(rng.integers(2, 7))
        M = rng.uniform(0, 1, (n, n))
        chain = ap.random_refinement_chain(n, rng)
        assert len(chain) == n and ap.is_refinement_chain(chain)
        S, trace = ap.positive_net_infimum(M, chain, spec=LINF)
        assert np.array_equal(S, np.diag(np.diag(M)))
        # the first sample is 𝟏: the net runs from the row sums down to diag(M)
        assert np.allclose(trace[0][0], M.sum(axis=1))
        assert np.allclose(trace[0][-1], np.diag(M))
        assert all(np.all(b <= a + 1e-12) for row in trace for a, b in zip(row, row[1:]))


def test_positive_net_rejects_bad_input():
    M = np.ones((3, 3))
    with pytest.raises(LatticeError):
        ap.positive_net_infimum(-M, [Partition.trivial(3), Partition.finest(3)])
    with pytest.raises(LatticeError):
        ap.positive_net_infimum(M, [Partition.finest(3), Partition.trivial(3)])
    with pytest.raises(LatticeError):
        ap.positive_net_infimum(M, [Partition.trivial(3)])
    with pytest.raises(LatticeError):
        ap.positive_net_infimum(M, [])
