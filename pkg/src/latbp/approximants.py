"""Band-preserving (diagonal) approximants of an operator.

All constructions return plain n×n arrays.
"""

from __future__ import annotations

import numpy as np

from .lattice import (
    LatticeError,
    NormSpec,
    Partition,
    as_operator,
    as_vector,
)
from .operators import bp_defect, operator_norm

MAX_AVERAGE_BLOCKS = 20


def _check_partition(M: np.ndarray, P: Partition) -> None:
    if P.n != M.shape[0]:
        raise LatticeError(f"dimension mismatch: partition of {P.n}, operator of {M.shape[0]}")


def partition_compress(M, P: Partition) -> np.ndarray:
    """T_P = Σ_k P_k M P_k: keep only entries whose row and column share a block."""
    M = as_operator(M)
    _check_partition(M, P)
    lab = P.labels()
    return np.where(lab[:, None] == lab[None, :], M, 0.0)


def diagonal_part(M) -> np.ndarray:
    M = as_operator(M)
    return np.diag(np.diag(M))


def _pairwise_sum(terms: list) -> np.ndarray:
    while len(terms) > 1:
        nxt = [terms[i] + terms[i + 1] for i in range(0, len(terms) - 1, 2)]
        if len(terms) % 2:
            nxt.append(terms[-1])
        terms = nxt
    return terms[0]


def offdiag_average_check(M, P: Partition) -> float:
    """Max-entry residual of  M − T_P = 4·Ave_S P_S M P_{Sᶜ}.

    S runs over all subsets of the blocks of P, and P_S is the sum of the
    block projections in S.  The identity is exact, so the residual is pure
    rounding.
    """
    M = as_operator(M)
    _check_partition(M, P)
    m = len(P)
    if m > MAX_AVERAGE_BLOCKS:
        raise LatticeError(f"{m} blocks exceed the limit of {MAX_AVERAGE_BLOCKS} for 2^m averaging")
    lab = P.labels()
    total = 1 << m
    terms = []
    for S in range(total):
        in_S = ((S >> lab) & 1).astype(float)
        terms.append(M * np.outer(in_S, 1.0 - in_S))
    avg = _pairwise_sum(terms) / total
    lhs = M - partition_compress(M, P)
    return float(np.max(np.abs(lhs - 4.0 * avg)))


def ck_multiplier(M) -> np.ndarray:
    """Multiplication by φ = M𝟏 (row sums)."""
    M = as_operator(M)
    return np.diag(M.sum(axis=1))


def clip_to_ideal(y, x) -> np.ndarray:
    """u with |u| ≤ |x| componentwise and y − u = sign(y)(|y| − |x|)₊."""
    y, x = as_vector(y), as_vector(x)
    if y.shape != x.shape:
        raise LatticeError(f"dimension mismatch: {y.size} vs {x.size}")
    return np.sign(y) * np.minimum(np.abs(y), np.abs(x))


def local_bp_approximant(M, x, lam: float, spec: NormSpec | None = None) -> np.ndarray:
    """Diagonal D with |D_ii| ≤ λ and Dx = clip_to_ideal(Mx, λx).

    Off supp(x) the diagonal is set to 0.  ``spec`` is accepted for symmetry
    with the other constructions; the result does not depend on it.
    """
    M = as_operator(M)
    x = as_vector(x)
    if x.size != M.shape[0]:
        raise LatticeError(f"dimension mismatch: {x.size} vs {M.shape[0]}")
    if not np.any(x):
        raise LatticeError("x must be nonzero")
    if lam < 0:
        raise LatticeError("lambda must be nonnegative")
    u = clip_to_ideal(M @ x, lam * x)
    d = np.zeros_like(x)
    nz = x != 0
    d[nz] = u[nz] / x[nz]
    return np.diag(d)


def is_refinement_chain(chain: list) -> bool:
    return all(a.precedes(b) for a, b in zip(chain, chain[1:]))


def positive_net_infimum(M, chain: list, *, samples: int = 8, seed: int = 0,
                         spec: NormSpec | None = None, tol: float = 1e-12) -> tuple:
    """Limit of the decreasing net T_P x along a refinement chain, for M ≥ 0.

    Returns (diag(M), trace) where trace[k][j] is T_{P_j} x_k for the k-th
    seeded x ≥ 0 (the first is 𝟏).  Raises if M has a negative entry, if the
    chain is not increasing in the refinement order or does not end in the
    finest partition, or if a trace fails to decrease.  If ``spec`` is given,
    also checks ‖M − diag(M)‖ ≤ 4·bp(M).
    """
    M = as_operator(M)
    n = M.shape[0]
    if np.any(M < 0):
        raise LatticeError("M must be entrywise nonnegative")
    if not chain:
        raise LatticeError("empty chain")
    for P in chain:
        _check_partition(M, P)
    if not is_refinement_chain(chain):
        raise LatticeError("chain is not increasing in the refinement order")
    if len(chain[-1]) != n:
        raise LatticeError("chain must end in the finest partition")
    rng = np.random.default_rng(seed)
    xs = [np.ones(n)] + [rng.uniform(0.0, 1.0, n) for _ in range(samples - 1)]
    trace = []
    for x in xs:
        row = [partition_compress(M, P) @ x for P in chain]
        for a, b in zip(row, row[1:]):
            if np.any(b > a + tol):
                raise AssertionError("net T_P x failed to decrease along the chain")
        trace.append(row)
    S = diagonal_part(M)
    if spec is not None:
        gap = float(operator_norm(M - S, spec))
        bp = bp_defect(M, spec).value
        if gap > 4.0 * bp + 1e-8:
            raise AssertionError(f"‖M − S‖ = {gap} exceeds 4·bp = {4 * bp}")
    return S, trace


def random_refinement_chain(n: int, rng: np.random.Generator) -> list:
    """Coarsest-to-finest chain obtained by repeatedly splitting one block."""
    P = Partition.trivial(n)
    chain = [P]
    while len(P) < n:
        splittable = [b for b in P.blocks if len(b) > 1]
        b = sorted(splittable[int(rng.integers(len(splittable)))])
        cut = int(rng.integers(1, len(b)))
        perm = rng.permutation(b)
        left, right = perm[:cut], perm[cut:]
        P = Partition(tuple(blk for blk in P.blocks if blk != frozenset(b)) + (left, right), n)
        chain.append(P)
    return chain
