"""Brute-force reference implementations used only by the tests.

Nothing here imports latbp; each routine is a slow, direct transcription
of a definition so that it can disagree with the library.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def vec_norm(x, p):
    x = np.abs(np.asarray(x, dtype=float))
    if p == math.inf:
        return float(x.max()) if x.size else 0.0
    return float(np.sum(x ** p) ** (1.0 / p))


def opnorm_inf(M):
    """sup of ‖Mx‖∞ over the vertices of the unit cube."""
    M = np.asarray(M, dtype=float)
    best = 0.0
    for signs in itertools.product((-1.0, 1.0), repeat=M.shape[1]):
        best = max(best, float(np.abs(M @ np.array(signs)).max()))
    return best


def opnorm_1(M):
    """sup of ‖Mx‖₁ over the vertices ±e_j of the cross-polytope."""
    M = np.asarray(M, dtype=float)
    return max(float(np.abs(M[:, j]).sum()) for j in range(M.shape[1]))


def opnorm_2(M):
    M = np.asarray(M, dtype=float)
    return float(math.sqrt(max(np.linalg.eigvals(M.T @ M).real.max(), 0.0)))


def opnorm(M, p):
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0.0
    return {1: opnorm_1, 2: opnorm_2, math.inf: opnorm_inf}[p](M)


def proper_subsets(n):
    for k in range(1, n):
        yield from itertools.combinations(range(n), k)


def bp_brute(M, p):
    """max over proper nonempty A of ‖P_{Aᶜ} M P_A‖, smallest-first tie order ignored."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    best = 0.0
    for A in proper_subsets(n):
        Ac = [i for i in range(n) if i not in A]
        best = max(best, opnorm(M[np.ix_(Ac, list(A))], p))
    return best


def commutator_brute(M, p):
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    best = 0.0
    for A in proper_subsets(n):
        P = np.diag([1.0 if i in A else 0.0 for i in range(n)])
        best = max(best, opnorm(P @ M - M @ P, p))
    return best


def dist_diag_cvx(M, p):
    """min over diagonal D of ‖M − D‖ via cvxpy (p in {1, 2, inf})."""
    import cvxpy as cp

    M = np.asarray(M, dtype=float)
    d = cp.Variable(M.shape[0])
    R = M - cp.diag(d)
    obj = {1: cp.norm(R, 1), 2: cp.sigma_max(R), math.inf: cp.norm(R, "inf")}[p]
    prob = cp.Problem(cp.Minimize(obj))
    prob.solve(solver=cp.CLARABEL)
    return float(prob.value)


def pl_sup_on_grid(f, lo, hi, k=20001, extra=()):
    s = np.concatenate((np.linspace(lo, hi, k), [t for t in extra if lo <= t <= hi]))
    return float(np.max(np.abs(f(s))))


def e_norm_sampled(f, depth, k=20001):
    """Lower bound on the E norm: dense grid for the sup part, exact dyadic weights."""
    floor = 2.0 ** -(depth + 1)
    sup = pl_sup_on_grid(f, floor, 1.0, k, extra=getattr(f, "breakpoints", ()))
    weighted = max(2.0 ** j * abs(float(f(2.0 ** -j))) for j in range(0, depth + 1))
    return max(sup, weighted)
