import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from latbp.lattice import (
    L1, L2, LINF, BandProjection, LatticeError, NormSpec, Partition, componentwise_inf,
    lattice_op, matrix_from_json, matrix_to_json, refine, support, vector_from_json,
    vector_norm, vector_to_json,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
vecs = st.integers(1, 8).flatmap(lambda n: arrays(float, n, elements=finite))


@given(vecs)
def test_abs_splits_into_parts(x):
    assert np.array_equal(lattice_op("pos", x) - lattice_op("neg", x), x)
    assert np.array_equal(lattice_op("pos", x) + lattice_op("neg", x), lattice_op("abs", x))
    assert np.all(np.minimum(lattice_op("pos", x), lattice_op("neg", x)) == 0)


@given(st.integers(1, 8).flatmap(lambda n: st.tuples(arrays(float, n, elements=finite),
                                                      arrays(float, n, elements=finite))))
def test_meet_join_identity(xy):
    x, y = xy
    assert np.allclose(lattice_op("meet", x, y) + lattice_op("join", x, y), x + y)


@pytest.mark.parametrize("spec", [L1, L2, LINF, NormSpec.lp(3)])
@given(x=vecs)
def test_norm_is_lattice_norm(spec, x):
    # |x| ≤ |y| ⟹ ‖x‖ ≤ ‖y‖, checked with y = 2|x| and the modulus itself
    assert vector_norm(np.abs(x), spec) == pytest.approx(vector_norm(x, spec))
    assert vector_norm(x, spec) <= vector_norm(2 * np.abs(x), spec) + 1e-12


def test_norm_values():
    x = [3.0, -4.0]
    assert vector_norm(x, L1) == 7.0
    assert vector_norm(x, L2) == 5.0
    assert vector_norm(x, LINF) == 4.0
    assert vector_norm(x, NormSpec.wsup([2.0, 0.5])) == 6.0
    assert vector_norm([1e300, 1e300], NormSpec.lp(3)) == pytest.approx(1e300 * 2 ** (1 / 3))


def test_errors():
    with pytest.raises(LatticeError):
        lattice_op("meet", [1.0])
    with pytest.raises(LatticeError):
        lattice_op("meet", [1.0], [1.0, 2.0])
    with pytest.raises(LatticeError):
        lattice_op("floor", [1.0])
    with pytest.raises(LatticeError):
        vector_norm([np.nan], L1)
    with pytest.raises(LatticeError):
        NormSpec.lp(0.5)
    with pytest.raises(LatticeError):
        NormSpec.wsup([1.0, 0.0])
    with pytest.raises(LatticeError):
        vector_norm([1.0, 2.0, 3.0], NormSpec.wsup([1.0, 2.0]))


def test_parse(tmp_path):
    assert NormSpec.parse("l1") == L1
    assert NormSpec.parse("linf") == LINF
    assert NormSpec.parse("lp:3").p == 3.0
    w = tmp_path / "w.json"
    w.write_text(json.dumps({"weights": [1, 2, 4]}))
    spec = NormSpec.parse(f"wsup:{w}")
    assert spec.weights == (1.0, 2.0, 4.0) and spec.is_sup
    w.write_text("[1, 3]")
    assert NormSpec.parse(f"wsup:{w}").weights == (1.0, 3.0)
    for bad in ("l7x", "lp:abc", f"wsup:{tmp_path / 'missing.json'}"):
        with pytest.raises(LatticeError):
            NormSpec.parse(bad)


def test_dual():
    assert L1.dual() == LINF and LINF.dual() == L1 and L2.dual() == L2
    assert NormSpec.lp(3).dual().p == pytest.approx(1.5)


def test_band_projection():
    P = BandProjection({0, 2}, 4)
    x = np.array([1.0, 2.0, 3.0, 4.0])
    assert np.array_equal(P.apply(x), [1, 0, 3, 0])
    assert np.array_equal(P.apply(x) + P.complement().apply(x), x)
    assert np.array_equal(P.matrix() @ P.matrix(), P.matrix())
    assert P.annihilates([0.0, 5.0, 0.0, 1.0])
    assert not P.annihilates([1.0, 0.0, 0.0, 0.0])
    assert support([0.0, 1.0, 0.0, -2.0]) == {1, 3}
    with pytest.raises(LatticeError):
        BandProjection({5}, 3)


def test_partition_canonical_and_order():
    P = Partition(([2, 3], [0, 1]))
    assert P.blocks == (frozenset({0, 1}), frozenset({2, 3}))
    assert P == Partition(([0, 1], [3, 2]))
    F, T = Partition.finest(4), Partition.trivial(4)
    assert F.refines(P) and P.refines(T) and not T.refines(P)
    assert T.precedes(P) and P.precedes(F)
    assert np.array_equal(P.labels(), [0, 0, 1, 1])
    Q = Partition(([0, 2], [1, 3]))
    R = refine(P, Q)
    assert R == F and R.refines(P) and R.refines(Q)
    with pytest.raises(LatticeError):
        Partition(([0, 1], [1, 2]))
    with pytest.raises(LatticeError):
        Partition(([0], [2]), 3)
    with pytest.raises(LatticeError):
        Partition(([0], []), 1)


def test_projections_sum_to_identity():
    P = Partition(([0, 3], [1], [2, 4]))
    total = sum(p.matrix() for p in P.projections())
    assert np.array_equal(total, np.eye(5))


def test_componentwise_inf():
    assert np.array_equal(componentwise_inf([[1, 5], [3, 2], [4, 4]]), [1, 2])


def test_json_round_trip():
    M = np.arange(9.0).reshape(3, 3) / 7
    assert np.array_equal(matrix_from_json(json.loads(json.dumps(matrix_to_json(M)))), M)
    x = np.array([0.1, -2.0])
    assert np.array_equal(vector_from_json(vector_to_json(x)), x)
    with pytest.raises(LatticeError):
        matrix_from_json({"n": 2, "rows": [[1.0]]})
    with pytest.raises(LatticeError):
        matrix_from_json({"rows": [[1.0, 2.0]]})
    with pytest.raises(LatticeError):
        vector_from_json({"n": 3, "entries": [1.0]})
    with pytest.raises(LatticeError):
        matrix_from_json({"cols": []})


@settings(max_examples=50)
@given(st.floats(1.0, 20.0))
def test_lp_norms_monotone_in_p(p):
    x = np.array([0.3, -1.2, 2.0, 0.0])
    assert vector_norm(x, NormSpec.lp(p)) >= vector_norm(x, LINF) - 1e-12
    assert vector_norm(x, NormSpec.lp(p)) <= vector_norm(x, L1) + 1e-12
    assert math.isfinite(vector_norm(x, NormSpec.lp(p)))
