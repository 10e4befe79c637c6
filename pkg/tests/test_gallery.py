import math

import numpy as np
import pytest
import scipy.linalg

from latbp import gallery
from latbp.lattice import L1, L2, LINF, LatticeError, NormSpec


@pytest.mark.parametrize("eps", [0.01, 0.1, 1.0, 3.0])
def test_antidiagonal(eps):
    out = gallery.antidiagonal_example(eps)
    for lab in ("l1", "l2", "linf"):
        inv = out["specs"][lab]["inverse"]
        assert inv["ratio"] == pytest.approx(0.5, abs=1e-12)
        assert inv["bp_inverse"] == pytest.approx(1 / eps, rel=1e-12)


def test_antidiagonal_rejects_nonpositive():
    with pytest.raises(LatticeError):
        gallery.antidiagonal_example(0.0)


def test_walsh_matrix_structure():
    for i in (2, 3, 5):
        n = 1 << i
        T = gallery.walsh_matrix(i)
        S = (T - np.eye(n)) * math.sqrt(n)
        assert np.allclose(S @ S.T, np.eye(n))
        # independent construction by Kronecker powers
        H = np.array([[1.0]])
        for _ in range(i):
            H = np.kron(H, [[1.0, 1.0], [1.0, -1.0]])
        assert np.array_equal(H, scipy.linalg.hadamard(n))


@pytest.mark.parametrize("i", range(2, 8))
def test_walsh_gap(i):
    out = gallery.walsh_modulus_example(i)
    assert out["gap"] == pytest.approx(0.5, abs=1e-9)
    assert out["norm_T_minus_I"] == pytest.approx(2 ** (-i / 2), abs=1e-9)


def test_walsh_witness_is_disjoint_unit():
    x, y = gallery.walsh_witness(5)
    assert np.linalg.norm(x) == pytest.approx(1.0)
    assert not np.any((x != 0) & (y != 0))


def test_walsh_exact_bp_small():
    out = gallery.walsh_modulus_example(3, exact_bp_max_i=4)
    assert out["bp_absT_exact"] >= 0.5 - 1e-9
    assert out["bp_T_exact"] <= 2 ** (-1.5) + 1e-9


def test_walsh_range():
    with pytest.raises(LatticeError):
        gallery.walsh_modulus_example(1)


def test_random_suite_deterministic_and_clean():
    kw = dict(seed=7, trials=12, dims=(3, 4), specs=(L1, L2, LINF))
    a = gallery.random_suite(**kw)
    b = gallery.random_suite(**kw)
    assert a.failures == 0
    assert a.to_json() == b.to_json()
    assert "four_eps[l2]" in a.checks and "ck_two_eps[linf]" in a.checks


def test_random_suite_weighted_sup():
    w = NormSpec.wsup([1.0, 2.0, 0.5, 4.0])
    rep = gallery.random_suite(seed=3, trials=6, dims=(4,), specs=(w,),
                               groups=("bounds", "approximants", "dist"))
    assert rep.failures == 0


def test_check_records_worst_case():
    c = gallery.Check()
    c.record(0.5, 0.0, {"k": 1})
    c.record(-0.1, 0.0, {"k": 2})
    c.record(-1e-10, 1e-9, {"k": 3})
    assert c.checked == 3 and c.failures == 1 and c.worst_case == {"k": 2}


def test_function_suite_small():
    rep = gallery.function_suite(seed=1, trials=20, ns=(3,), phi_candidates=100,
                                 renorm_eps=(0.1,))
    assert rep.failures == 0
    assert rep.stats["e_certificate_min[n=3]"] >= 0.5 - 1e-12
    assert rep.to_json()["suite"] == "function"


def test_draw_matrix_ensembles():
    rng = np.random.default_rng(0)
    assert np.all(gallery.draw_matrix(rng, 4, "positive") >= 0)
    with pytest.raises(LatticeError):
        gallery.draw_matrix(rng, 4, "gaussian")
    P = gallery.random_partition(rng, 6, max_blocks=3)
    assert 1 <= len(P) <= 3 and P.n == 6

