"""Defect functionals and norms of operators on finite atomic lattices.

The band-preserving operators on R^n with a lattice norm are exactly the
diagonal matrices, so the "BP defect" of M measures how far M is from
mapping every coordinate subspace into itself:

    bp(M) = max over nonempty proper A of ‖P_{Aᶜ} M P_A‖.

Subsets are enumerated as bit masks; coordinate i belongs to the subset
encoded by the integer s iff bit i of s is set.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
import scipy.optimize

from .lattice import (
    DEFAULT_EXACT_CAP,
    CapExceeded,
    LatticeError,
    NormSpec,
    as_operator,
    as_vector,
    vector_norm,
)

SCHEMA = "latbp-report-v1"
TIE_TOL = 1e-12
CHUNK = 1 << 14


class Bracket(NamedTuple):
    lo: float
    hi: float

    @property
    def exact(self) -> bool:
        return self.hi - self.lo <= 1e-12 * max(1.0, abs(self.hi))


class SubsetMax(NamedTuple):
    value: float
    witness: tuple


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("LATBP_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn: Callable, items: list) -> list:
    # results come back in input order, so reductions stay deterministic
    k = thread_count()
    if k == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=k) as pool:
        return list(pool.map(fn, items))


def mask_to_subset(s: int, n: int) -> tuple:
    return tuple(i for i in range(n) if (s >> i) & 1)


def subset_to_mask(A) -> int:
    s = 0
    for i in A:
        s |= 1 << int(i)
    return s


def _mask_rows(ints: np.ndarray, n: int) -> np.ndarray:
    return ((ints[:, None] >> np.arange(n)) & 1).astype(bool)


def _check_dim(M: np.ndarray, spec: NormSpec) -> None:
    if spec.kind == "wsup":
        spec.weight_array(M.shape[0])


def _check_cap(n: int, cap: int) -> None:
    if n > cap:
        raise CapExceeded(f"exact enumeration over 2^{n} subsets exceeds cap n <= {cap}")


def _lex_argmax(values: np.ndarray, ints: np.ndarray, n: int) -> SubsetMax:
    """Largest value; ties (within TIE_TOL) go to the lexicographically smallest subset."""
    best = float(values.max())
    tied = ints[values >= best - TIE_TOL * max(1.0, abs(best))]
    witness = min(mask_to_subset(int(s), n) for s in tied)
    return SubsetMax(best, witness)


# -- operator norms ------------------------------------------------------------

def _pnorm_lower(B: np.ndarray, p: float, rng: np.random.Generator, restarts: int = 8,
                 iters: int = 200) -> tuple:
    """Lower bound on ‖B‖_{p→p} by a nonlinear power iteration from several starts.

    Returns (value, maximizing x); every returned value is attained by x.
    """
    r, c = B.shape
    if not np.any(B):
        return 0.0, np.eye(c)[0]
    q = p / (p - 1.0)
    spec = NormSpec.lp(p)
    starts = [np.eye(c)[j] for j in range(c)] + [np.ones(c)]
    starts += [rng.standard_normal(c) for _ in range(restarts)]
    best, best_x = -1.0, starts[0]
    for x in starts:
        x = x / vector_norm(x, spec)
        val = vector_norm(B @ x, spec)
        for _ in range(iters):
            y = B @ x
            if not np.any(y):
                break
            z = B.T @ (np.sign(y) * np.abs(y / np.abs(y).max()) ** (p - 1.0))
            if not np.any(z):
                break
            xn = np.sign(z) * np.abs(z / np.abs(z).max()) ** (q - 1.0)
            xn = xn / vector_norm(xn, spec)
            vn = vector_norm(B @ xn, spec)
            if vn <= val * (1 + 1e-14):
                if vn > val:
                    x, val = xn, vn
                break
            x, val = xn, vn
        if val > best:
            best, best_x = val, x
    return float(best), best_x


def _l2(B: np.ndarray) -> float:
    if B.size == 0:
        return 0.0
    if B.shape[0] == B.shape[1] and np.array_equal(B, B.T):
        return float(np.abs(np.linalg.eigvalsh(B)).max())
    return float(np.linalg.svd(B, compute_uv=False)[0])


def block_norm(B: np.ndarray, spec: NormSpec, row_w=None, col_w=None, *,
               seed: int = 0) -> float | Bracket:
    """Norm of a rectangular block between coordinate subspaces.

    ``row_w``/``col_w`` are the weights of the target/source coordinates for
    weighted sup norms.
    """
    B = np.asarray(B, dtype=float)
    if B.size == 0:
        return 0.0
    A = np.abs(B)
    if spec.kind == "wsup":
        return float(((row_w[:, None] * A) / col_w[None, :]).sum(axis=1).max())
    p = spec.p
    if p == math.inf:
        return float(A.sum(axis=1).max())
    if p == 1.0:
        return float(A.sum(axis=0).max())
    if p == 2.0:
        return _l2(B)
    lo, _ = _pnorm_lower(B, p, np.random.default_rng(seed))
    # Riesz-Thorin between the 1 and inf norms
    hi = float(A.sum(axis=0).max() ** (1.0 / p) * A.sum(axis=1).max() ** (1.0 - 1.0 / p))
    return Bracket(min(lo, hi), hi)


def operator_norm(M, spec: NormSpec, *, seed: int = 0) -> float | Bracket:
    """‖M‖ induced by ``spec``; a float when exact, a Bracket for general p."""
    M = as_operator(M)
    _check_dim(M, spec)
    w = spec.weight_array(M.shape[0])
    return block_norm(M, spec, w, w, seed=seed)


def norm_upper(M, spec: NormSpec, *, seed: int = 0) -> float:
    v = operator_norm(M, spec, seed=seed)
    return v.hi if isinstance(v, Bracket) else v


def norm_lower(M, spec: NormSpec, *, seed: int = 0) -> float:
    v = operator_norm(M, spec, seed=seed)
    return v.lo if isinstance(v, Bracket) else v


def _stack_norms(stack: np.ndarray, spec: NormSpec, w: np.ndarray | None = None) -> np.ndarray:
    """Exact norms of a stack of n×n matrices under the same lattice norm."""
    A = np.abs(stack)
    if spec.kind == "wsup":
        return ((w[:, None] * A) / w[None, :]).sum(axis=2).max(axis=1)
    if spec.p == math.inf:
        return A.sum(axis=2).max(axis=1)
    if spec.p == 1.0:
        return A.sum(axis=1).max(axis=1)
    if spec.p == 2.0:
        return np.linalg.svd(stack, compute_uv=False)[:, 0]
    raise LatticeError(f"exact stacked norms unavailable for {spec.label()}")


# -- BP defect -------------------------------------------------------------------

def block(M, A) -> np.ndarray:
    """The block P_{Aᶜ} M P_A as an |Aᶜ|×|A| array."""
    M = as_operator(M)
    a = np.zeros(M.shape[0], dtype=bool)
    a[list(A)] = True
    return M[np.ix_(~a, a)]


def subset_block_norm(M, A, spec: NormSpec, *, seed: int = 0) -> float | Bracket:
    M = as_operator(M)
    a = np.zeros(M.shape[0], dtype=bool)
    a[list(A)] = True
    w = spec.weight_array(M.shape[0])
    return block_norm(M[np.ix_(~a, a)], spec, w[~a], w[a], seed=seed)


def _bp_values_closed_form(M: np.ndarray, spec: NormSpec, ints: np.ndarray) -> np.ndarray:
    n = M.shape[0]
    masks = _mask_rows(ints, n)
    fm = masks.astype(float)
    A = np.abs(M)
    if spec.kind == "wsup" or spec.p == math.inf:
        w = spec.weight_array(n)
        W = (w[:, None] * A) / w[None, :]
        rows = fm @ W.T              # rows[s, i] = Σ_{j∈A_s} W_ij
        rows[masks] = 0.0            # only rows outside A count
        return rows.max(axis=1)
    # l1: column j ∈ A, mass leaving A
    cols = A.sum(axis=0)[None, :] - fm @ A
    cols[~masks] = 0.0
    return cols.max(axis=1)


def _bp_values_l2(M: np.ndarray, ints: np.ndarray) -> np.ndarray:
    n = M.shape[0]
    out = np.empty(ints.size)
    masks = _mask_rows(ints, n)
    sizes = masks.sum(axis=1)
    for k in range(1, n):
        sel = np.flatnonzero(sizes == k)
        if sel.size == 0:
            continue
        inside = np.nonzero(masks[sel])[1].reshape(sel.size, k)
        outside = np.nonzero(~masks[sel])[1].reshape(sel.size, n - k)
        blocks = M[outside[:, :, None], inside[:, None, :]]
        out[sel] = np.linalg.svd(blocks, compute_uv=False)[:, 0]
    return out


def _all_proper(n: int) -> list:
    total = (1 << n) - 1
    return [np.arange(lo, min(lo + CHUNK, total), dtype=np.int64)
            for lo in range(1, total, CHUNK)]


def bp_defect(M, spec: NormSpec, mode: str = "exact", *, cap: int = DEFAULT_EXACT_CAP,
              seed: int = 0, restarts: int = 64) -> SubsetMax:
    """max_A ‖P_{Aᶜ} M P_A‖ with an attaining subset A.

    ``mode="exact"`` enumerates all 2ⁿ−2 subsets (ℓ₁, ℓ₂, ℓ∞, weighted sup).
    ``mode="heuristic"`` runs greedy flip search from seeded restarts and
    returns a lower bound attained by the witness.
    """
    M = as_operator(M)
    _check_dim(M, spec)
    n = M.shape[0]
    if n == 1:
        return SubsetMax(0.0, ())
    if mode == "heuristic":
        return _bp_heuristic(M, spec, seed=seed, restarts=restarts)
    if mode != "exact":
        raise LatticeError(f"unknown mode {mode!r}")
    if not spec.exact_operator_norm:
        raise LatticeError(f"exact mode needs l1, l2, linf or wsup, got {spec.label()}")
    _check_cap(n, cap)
    if spec.kind == "lp" and spec.p == 2.0:
        fn = lambda ints: _bp_values_l2(M, ints)  # noqa: E731
    else:
        fn = lambda ints: _bp_values_closed_form(M, spec, ints)  # noqa: E731
    chunks = _all_proper(n)
    values = np.concatenate(_map(fn, chunks))
    return _lex_argmax(values, np.concatenate(chunks), n)


def _bp_heuristic(M: np.ndarray, spec: NormSpec, *, seed: int, restarts: int) -> SubsetMax:
    n = M.shape[0]
    full = (1 << n) - 1

    def value(s: int) -> float:
        v = subset_block_norm(M, mask_to_subset(s, n), spec, seed=seed)
        return v.lo if isinstance(v, Bracket) else v

    cache: dict = {}

    def cached(s: int) -> float:
        if s not in cache:
            cache[s] = value(s)
        return cache[s]

    rngs = [np.random.default_rng(ss) for ss in np.random.SeedSequence(seed).spawn(restarts)]
    best, best_s = -1.0, 1
    for rng in rngs:
        s = 0
        while s in (0, full):
            s = int(sum(1 << i for i in range(n) if rng.random() < 0.5))
        v = cached(s)
        while True:
            flips = [s ^ (1 << i) for i in range(n)]
            swaps = [s ^ (1 << i) ^ (1 << j) for i in range(n) for j in range(i + 1, n)
                     if ((s >> i) ^ (s >> j)) & 1]
            moves = [t for t in flips + swaps if t not in (0, full)]
            if not moves:
                break
            vals = [cached(t) for t in moves]
            k = int(np.argmax(vals))
            if vals[k] <= v:
                break
            s, v = moves[k], vals[k]
        key = mask_to_subset(s, n)
        if v > best + TIE_TOL or (abs(v - best) <= TIE_TOL and key < mask_to_subset(best_s, n)):
            best, best_s = v, s
    return SubsetMax(float(best), mask_to_subset(best_s, n))


# -- definition-level oracle ---------------------------------------------------

@dataclass(frozen=True)
class SamplerBudget:
    samples: int = 2000
    seed: int = 0
    pattern_sweep: bool = True
    max_patterns: int = 1 << 12


def bp_pair_value(M, spec: NormSpec, x, y) -> float:
    """‖|Mx| ∧ y‖ / ‖x‖ for a disjoint pair x ⊥ y with y ≥ 0."""
    M = as_operator(M)
    x, y = as_vector(x), as_vector(y)
    if np.any(y < 0):
        raise LatticeError("y must be positive")
    if np.any((x != 0) & (y != 0)):
        raise LatticeError("x and y must be disjoint")
    nx = vector_norm(x, spec)
    if nx == 0:
        return 0.0
    return vector_norm(np.minimum(np.abs(M @ x), y), spec) / nx


def _oracle_candidates(M: np.ndarray, spec: NormSpec, budget: SamplerBudget):
    n = M.shape[0]
    rng = np.random.default_rng(budget.seed)
    eye = np.eye(n)
    for j in range(n):
        yield eye[j]
    for _ in range(budget.samples):
        x = rng.standard_normal(n)
        x[rng.random(n) < rng.random()] = 0.0
        if np.any(x):
            yield x
    if not budget.pattern_sweep:
        return
    total = (1 << n) - 2
    if total <= budget.max_patterns:
        patterns = range(1, total + 1)
    else:
        patterns = rng.integers(1, total + 1, size=budget.max_patterns)
    w = spec.weight_array(n)
    for s in patterns:
        a = _mask_rows(np.array([s]), n)[0]
        if spec.is_sup:
            # extreme points of the sup-ball supported on A, one per target row
            for i in np.flatnonzero(~a):
                sg = np.where(M[i] >= 0, 1.0, -1.0)
                yield np.where(a, sg / w, 0.0)
        elif spec.p == 2.0:
            B = M[np.ix_(~a, a)]
            _, _, vt = np.linalg.svd(B)
            x = np.zeros(n)
            x[a] = vt[0]
            yield x


def bp_defect_oracle(M, spec: NormSpec, budget: SamplerBudget = SamplerBudget()) -> tuple:
    """Lower bound on the BP defect straight from the definition.

    For each sampled x, y is a large multiple of the indicator of supp(x)ᶜ
    so that |Mx| ∧ y keeps all of |Mx| off the support of x.
    Returns (value, x) with the best sampled x.
    """
    M = as_operator(M)
    _check_dim(M, spec)
    n = M.shape[0]
    w = spec.weight_array(n)
    scale = norm_upper(M, spec) / w.min() if spec.kind == "wsup" else norm_upper(M, spec)
    best, best_x = 0.0, np.eye(n)[0]
    for x in _oracle_candidates(M, spec, budget):
        nx = vector_norm(x, spec)
        y = np.where(x == 0, (scale + 1.0) * nx, 0.0)
        v = bp_pair_value(M, spec, x, y)
        if v > best:
            best, best_x = v, x
    return float(best), best_x


# -- ideal-preserving defect -------------------------------------------------

def ip_defect(M, spec: NormSpec, *, cap: int = DEFAULT_EXACT_CAP) -> SubsetMax:
    """max over coordinate ideals U = span(A) of sup_{x∈U, ‖x‖≤1} dist(Mx, U).

    The residual Mx − P_A Mx is formed as the full matrix M P_A − P_A M P_A
    and normed as an n×n operator, independently of the block routine.
    """
    M = as_operator(M)
    _check_dim(M, spec)
    if not spec.exact_operator_norm:
        raise LatticeError(f"ip_defect needs an exact norm, got {spec.label()}")
    n = M.shape[0]
    if n == 1:
        return SubsetMax(0.0, ())
    _check_cap(n, cap)
    w = spec.weight_array(n)

    def fn(ints):
        a = _mask_rows(ints, n).astype(float)
        proj_on_A = M[None, :, :] * a[:, None, :]                 # M P_A
        resid = proj_on_A - a[:, :, None] * proj_on_A              # (I - P_A) M P_A
        return _stack_norms(resid, spec, w)

    chunks = [c for big in _all_proper(n) for c in np.array_split(big, max(1, big.size // 2048))]
    values = np.concatenate(_map(fn, chunks))
    return _lex_argmax(values, np.concatenate(chunks), n)


# -- commutators -------------------------------------------------------------

def commutator_max(M, spec: NormSpec, *, cap: int = DEFAULT_EXACT_CAP) -> SubsetMax:
    """max over all subsets A of ‖P_A M − M P_A‖."""
    M = as_operator(M)
    _check_dim(M, spec)
    if not spec.exact_operator_norm:
        raise LatticeError(f"commutator_max needs an exact norm, got {spec.label()}")
    n = M.shape[0]
    _check_cap(n, cap)
    w = spec.weight_array(n)

    def fn(ints):
        a = _mask_rows(ints, n).astype(float)
        comm = M[None] * (a[:, :, None] - a[:, None, :])
        return _stack_norms(comm, spec, w)

    ints = np.arange(0, 1 << n, dtype=np.int64)
    chunks = np.array_split(ints, max(1, ints.size // 2048))
    values = np.concatenate(_map(fn, chunks))
    return _lex_argmax(values, ints, n)


# -- disjointness-preserving defect ------------------------------------------

def dp_pair_value(M, spec: NormSpec, x, y) -> float:
    """‖|Mx| ∧ |My|‖ for disjoint x, y scaled into the unit ball."""
    M = as_operator(M)
    x, y = as_vector(x), as_vector(y)
    if np.any((x != 0) & (y != 0)):
        raise LatticeError("x and y must be disjoint")
    nx, ny = vector_norm(x, spec), vector_norm(y, spec)
    if nx == 0 or ny == 0:
        return 0.0
    return vector_norm(np.minimum(np.abs(M @ (x / nx)), np.abs(M @ (y / ny))), spec)


@dataclass(frozen=True)
class DPBudget:
    seed: int = 0
    restarts: int = 4
    rounds: int = 8
    max_splits: int = 3 ** 7
    pool: int = 16


def row_norms(V: np.ndarray, spec: NormSpec) -> np.ndarray:
    """vector_norm applied along the last axis."""
    A = np.abs(V)
    if spec.kind == "wsup":
        return (A * spec.weight_array(V.shape[-1])).max(axis=-1)
    if spec.p == math.inf:
        return A.max(axis=-1)
    if spec.p == 1.0:
        return A.sum(axis=-1)
    if spec.p == 2.0:
        return np.sqrt((A * A).sum(axis=-1))
    m = A.max(axis=-1, keepdims=True)
    m = np.where(m == 0, 1.0, m)
    return m[..., 0] * ((A / m) ** spec.p).sum(axis=-1) ** (1.0 / spec.p)


def _ball_candidates(idx: np.ndarray, n: int, spec: NormSpec, rng, k: int) -> np.ndarray:
    """Unit vectors supported on idx: basis vectors, sup-ball corners, random directions."""
    w = spec.weight_array(n)
    rows = [np.eye(n)[j] for j in idx]
    if spec.is_sup:
        v = np.zeros(n)
        v[idx] = 1.0 / w[idx]
        rows.append(v)
    for _ in range(k):
        v = np.zeros(n)
        g = rng.standard_normal(idx.size)
        v[idx] = np.sign(g) / w[idx] if (spec.is_sup and rng.random() < 0.5) else g
        rows.append(v)
    X = np.array(rows)
    return X / row_norms(X, spec)[:, None]


def _perturb(x: np.ndarray, idx: np.ndarray, spec: NormSpec, rng, k: int, scale: float) -> np.ndarray:
    X = np.repeat(x[None], k, axis=0)
    X[:, idx] += scale * rng.standard_normal((k, idx.size))
    nr = row_norms(X, spec)
    X = X[nr > 0] / nr[nr > 0, None]
    return X


def dp_defect_lb(M, spec: NormSpec, budget: DPBudget = DPBudget()) -> tuple:
    """Lower bound on sup ‖|Mx| ∧ |My|‖ over disjoint x, y in the unit ball.

    Enumerates disjoint support splits (A, B) (randomly sampled when there
    are more than ``budget.max_splits``).  For each split the best pair from
    two candidate pools is refined by alternating ascent: perturb x with y
    fixed, then y with x fixed.  Returns (value, (x, y)); the value is
    attained by the returned pair.
    """
    M = as_operator(M)
    _check_dim(M, spec)
    n = M.shape[0]
    rng = np.random.default_rng(budget.seed)
    if 3 ** n <= budget.max_splits:
        labels = np.array(np.meshgrid(*[np.arange(3)] * n, indexing="ij")).reshape(n, -1).T
    else:
        labels = rng.integers(0, 3, size=(budget.max_splits, n))
    best, best_pair = 0.0, (np.eye(n)[0], np.zeros(n))
    seen = set()

    def pair_values(XA, XB):
        IA, IB = np.abs(XA @ M.T), np.abs(XB @ M.T)
        return row_norms(np.minimum(IA[:, None, :], IB[None, :, :]), spec)

    for lab in labels:
        A, B = np.flatnonzero(lab == 1), np.flatnonzero(lab == 2)
        if A.size == 0 or B.size == 0:
            continue
        key = (tuple(A), tuple(B))
        if (key[1], key[0]) in seen:
            continue
        seen.add(key)
        XA = _ball_candidates(A, n, spec, rng, budget.pool)
        XB = _ball_candidates(B, n, spec, rng, budget.pool)
        V = pair_values(XA, XB)
        i, j = np.unravel_index(int(np.argmax(V)), V.shape)
        x, y, val = XA[i], XB[j], float(V[i, j])
        scale = 0.5
        for _ in range(budget.rounds):
            if val == 0.0:
                break
            improved = False
            cand = np.vstack([x[None], _perturb(x, A, spec, rng, budget.restarts, scale)])
            v = pair_values(cand, y[None])[:, 0]
            k = int(np.argmax(v))
            if v[k] > val:
                x, val, improved = cand[k], float(v[k]), True
            cand = np.vstack([y[None], _perturb(y, B, spec, rng, budget.restarts, scale)])
            v = pair_values(x[None], cand)[0]
            k = int(np.argmax(v))
            if v[k] > val:
                y, val, improved = cand[k], float(v[k]), True
            if not improved:
                scale *= 0.5
        if val > best:
            best, best_pair = val, (x, y)
    return float(best), best_pair


# -- distance to the diagonal class --------------------------------------------

@dataclass
class DistResult:
    value: float
    status: str
    minimizer: np.ndarray
    lower: float
    iterations: int = 0


SMOOTHING_SCHEDULE = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7)


def _dual_bound(M: np.ndarray, U: np.ndarray, w: np.ndarray, Vt: np.ndarray) -> float:
    """⟨M, W⟩ / ‖W‖_* for W = offdiag(U diag(w) Vᵀ).

    Any W with zero diagonal has ⟨M, W⟩ = ⟨M − D, W⟩ ≤ ‖M − D‖₂ ‖W‖_* for
    every diagonal D, so this is a valid lower bound on the distance.
    """
    W = (U * w) @ Vt
    np.fill_diagonal(W, 0.0)
    nuc = np.linalg.svd(W, compute_uv=False).sum()
    return 0.0 if nuc == 0 else float(abs(np.sum(M * W)) / nuc)


def _l2_dist_smoothed(M: np.ndarray, schedule=SMOOTHING_SCHEDULE) -> tuple:
    """min_d σ_max(M − diag d) through the log-sum-exp smoothing of the singular values.

    f_μ(d) = μ log Σ exp(σ_k/μ) lies within μ log n of σ_max and has
    gradient −Σ w_k u_k∘v_k with w = softmax(σ/μ).  Each μ is solved with
    L-BFGS, warm-started from the previous one.  The softmax weights at the
    end of each stage double as a dual certificate.
    """
    d = np.diag(M).copy()
    lower, iterations = 0.0, 0
    for mu in schedule:
        def fg(d, mu=mu):
            U, s, Vt = np.linalg.svd(M - np.diag(d))
            w = np.exp((s - s[0]) / mu)
            total = w.sum()
            w /= total
            return s[0] + mu * math.log(total), -np.einsum("ik,k,ki->i", U, w, Vt)

        res = scipy.optimize.minimize(fg, d, jac=True, method="L-BFGS-B",
                                      options={"gtol": 1e-12, "ftol": 1e-15, "maxiter": 500})
        d, iterations = res.x, iterations + res.nit
        U, s, Vt = np.linalg.svd(M - np.diag(d))
        w = np.exp((s - s[0]) / mu)
        lower = max(lower, _dual_bound(M, U, w / w.sum(), Vt))
    return float(s[0]), d, min(lower, float(s[0])), iterations


def dist_to_diagonal(M, spec: NormSpec) -> DistResult:
    """inf over diagonal D of ‖M − D‖ with a minimizing D."""
    M = as_operator(M)
    _check_dim(M, spec)
    n = M.shape[0]
    A = np.abs(M)
    off = A - np.diag(np.diag(A))
    if spec.kind == "wsup" or spec.p == math.inf:
        w = spec.weight_array(n)
        val = float(((w[:, None] * off) / w[None, :]).sum(axis=1).max())
        return DistResult(val, "exact", np.diag(np.diag(M)), val)
    if spec.p == 1.0:
        val = float(off.sum(axis=0).max())
        return DistResult(val, "exact", np.diag(np.diag(M)), val)
    if spec.p == 2.0:
        if not np.any(off):
            return DistResult(0.0, "exact", np.diag(np.diag(M)), 0.0)
        val, d, lower, it = _l2_dist_smoothed(M)
        return DistResult(val, "convex-numerical", np.diag(d), lower, it)
    raise LatticeError(f"dist_to_diagonal unsupported for {spec.label()}")


# -- center radius ---------------------------------------------------------------

@dataclass
class CenterEstimate:
    epsilon: float
    rho_lower: float
    rho_upper: float
    restarts: int
    seed: int
    iterations: int
    status: str = "estimate"

    def to_json(self) -> dict:
        return {"epsilon": self.epsilon, "rho_lower": self.rho_lower,
                "rho_upper": self.rho_upper, "status": self.status,
                "search": {"restarts": self.restarts, "seed": self.seed,
                           "iterations": self.iterations}}


def center_gap(M, x, lam: float, spec: NormSpec) -> float:
    """‖(|Mx| − λ|x|)₊‖ / ‖x‖."""
    M = as_operator(M)
    x = as_vector(x)
    nx = vector_norm(x, spec)
    if nx == 0:
        return 0.0
    return vector_norm(np.maximum(np.abs(M @ x) - lam * np.abs(x), 0.0), spec) / nx


def _norm_gradient(r: np.ndarray, spec: NormSpec) -> np.ndarray:
    """A supporting functional of the norm at r ≥ 0."""
    n = r.size
    if spec.kind == "wsup" or spec.p == math.inf:
        w = spec.weight_array(n)
        g = np.zeros(n)
        k = int(np.argmax(w * r))
        g[k] = w[k]
        return g
    if spec.p == 1.0:
        return (r > 0).astype(float)
    nr = vector_norm(r, spec)
    return (r / nr) ** (spec.p - 1.0) if nr > 0 else np.zeros(n)


def _center_ascent(M: np.ndarray, x: np.ndarray, lam: float, spec: NormSpec,
                   iters: int = 60, face: np.ndarray | None = None) -> tuple:
    """Step-halving ascent of the center gap from x; returns (value, x).

    With ``face`` (a boolean mask) the iterate stays on that coordinate face.
    """
    n = x.size
    norm = _nonneg_norm(spec, n)

    def gap(y):
        return norm(np.maximum(np.abs(M @ y) - lam * np.abs(y), 0.0))

    x = x / norm(np.abs(x))
    val = gap(x)
    step = 0.5
    for _ in range(iters):
        Mx = M @ x
        r = np.maximum(np.abs(Mx) - lam * np.abs(x), 0.0)
        active = r > 0
        if not np.any(active):
            # dead start: nudge toward the largest image coordinate
            g = M[int(np.argmax(np.abs(Mx)))] if np.any(Mx) else np.ones(n)
        else:
            phi = _norm_gradient(r, spec) * active
            sx = np.where(x >= 0, 1.0, -1.0)
            g = (phi * np.sign(Mx)) @ M - lam * phi * sx
        if face is not None:
            g = g * face
        gn = np.linalg.norm(g)
        if gn == 0:
            break
        improved = False
        while step > 1e-10:
            xn = x + step * g / gn
            nn = norm(np.abs(xn))
            if nn > 0:
                xn = xn / nn
                vn = gap(xn)
                if vn > val:
                    x, val, improved = xn, vn, True
                    step = min(1.0, step * 2.0)
                    break
            step *= 0.5
        if not improved:
            break
    return val, x


FACE_SEED_MAX_N = 8
FACE_SEEDS = 16
SAMPLE_POOL = 2048
POLISH = 4


def _pool_thresholds(M: np.ndarray, X: np.ndarray, epsilon: float, spec: NormSpec,
                     limit: float, iters: int = 64) -> np.ndarray:
    """For each row x of X the least λ ∈ [0, limit] with gap(x, λ) ≤ ε; inf if none.

    gap(x, ·) is nonincreasing, so one vectorized bisection serves the pool.
    """
    Y = np.abs(X @ M.T)
    A = np.abs(X)
    nx = row_norms(X, spec)

    def gaps(lam):
        return row_norms(np.maximum(Y - lam[:, None] * A, 0.0), spec) / nx

    k = X.shape[0]
    lo, hi = np.zeros(k), np.full(k, limit)
    if k == 0:
        return lo
    done = gaps(lo) <= epsilon
    never = gaps(hi) > epsilon
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ok = gaps(mid) <= epsilon
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    out = np.where(done, 0.0, hi)
    return np.where(never, math.inf, out)


def _nonneg_norm(spec: NormSpec, n: int) -> Callable:
    """Unchecked norm of a nonnegative vector, for inner loops."""
    if spec.is_sup:
        w = spec.weight_array(n)
        return lambda v: float(np.max(w * v))
    if spec.p == 1.0:
        return lambda v: float(v.sum())
    if spec.p == 2.0:
        return lambda v: math.sqrt(float(v @ v))
    return lambda v: vector_norm(v, spec)


def _threshold(M: np.ndarray, x: np.ndarray, epsilon: float, spec: NormSpec) -> float:
    """λ_x for a single x by Brent's method on a tight bracket; inf if unbounded."""
    a, b = np.abs(M @ x), np.abs(x)
    norm = _nonneg_norm(spec, x.size)
    nx = norm(b)
    if nx == 0:
        return 0.0
    target = epsilon * nx

    def h(lam):
        return norm(np.maximum(a - lam * b, 0.0)) - target

    if h(0.0) <= 0:
        return 0.0
    on = b > 0
    # past max a_i/b_i only the coordinates off supp(x) remain
    hi = float(np.max(a[on] / b[on]))
    if h(hi) > 0:
        return math.inf
    return float(scipy.optimize.brentq(h, 0.0, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps))


def _polish(M: np.ndarray, starts: np.ndarray, epsilon: float, spec: NormSpec) -> np.ndarray:
    """Nelder-Mead on λ_x over the face of each start (λ_x is scale invariant)."""
    out = []
    for x0 in starts:
        face = np.flatnonzero(x0)

        def neg(z, face=face):
            x = np.zeros(x0.size)
            x[face] = z
            t = _threshold(M, x, epsilon, spec)
            # an unbounded threshold is kept (it proves ρ = ∞) but must stay finite here
            return -min(t, 1e300)

        res = scipy.optimize.minimize(neg, x0[face], method="Nelder-Mead",
                                      options={"xatol": 1e-10, "fatol": 1e-12, "maxfev": 400})
        x = np.zeros(x0.size)
        x[face] = res.x
        if np.any(x):
            out.append(x / vector_norm(x, spec))
    return np.array(out).reshape(-1, M.shape[0])


def rho_center(M, spec: NormSpec, epsilon: float, tol: float = 1e-7, *, seed: int = 0,
               restarts: int = 32, rounds: int = 40) -> CenterEstimate:
    """Estimate ρ_ε(M) = inf{λ ≥ 0 : sup_{‖x‖≤1} ‖(|Mx| − λ|x|)₊‖ ≤ ε}.

    Each candidate x has an exact threshold λ_x (found by bisection, the
    gap being monotone in λ), and max λ_x is a certified lower bound on ρ_ε.
    The candidates (± basis vectors, normalized rows of M, seeded random
    starts) are improved by gradient ascent of the gap just above the current
    level until no ascent clears it.  rho_upper = rho_lower + tol is certified
    only against the points found.
    """
    if epsilon < 0:
        raise LatticeError("epsilon must be nonnegative")
    M = as_operator(M)
    _check_dim(M, spec)
    n = M.shape[0]
    rng = np.random.default_rng(seed)
    w = spec.weight_array(n)
    pool = [row for row in np.vstack([np.eye(n), -np.eye(n)])]
    pool += [row for row in M if np.any(row)]
    if spec.is_sup:
        pool.append(1.0 / w)
    # scoring a candidate is a cheap vectorized threshold, so sample widely
    # and spend the ascents on the best ones
    pool += list(rng.standard_normal((SAMPLE_POOL, n)))
    # the gap is largest on coordinate faces (λ|x_i| vanishes where x_i = 0),
    # which full-space ascent cannot follow, so seed every face when affordable
    if n <= FACE_SEED_MAX_N:
        for s in range(1, (1 << n) - 1):
            mask = ((s >> np.arange(n)) & 1).astype(float)
            pool += list(rng.standard_normal((FACE_SEEDS, n)) * mask)
    X = np.array(pool)
    X /= row_norms(X, spec)[:, None]

    # beyond this level ρ is reported infinite (ε < bp(M) gives ρ = ∞)
    limit = 1e6 * max(norm_upper(M, spec), 1.0)
    lam_x = _pool_thresholds(M, X, epsilon, spec, limit)
    iterations = 0
    for r in range(rounds):
        lam = float(lam_x.max())
        if math.isinf(lam):
            break
        probe = lam + tol if lam > 0 else 0.0
        width = restarts if r == 0 else max(4, restarts // 4)
        top = np.argsort(-lam_x, kind="stable")[:width]
        found = []
        for k in top:
            faces = [None]
            if not np.all(X[k]):
                faces.append(X[k] != 0)
            for face in faces:
                v, x = _center_ascent(M, X[k], probe, spec, face=face)
                iterations += 1
                if v > epsilon:
                    found.append(x)
        if not found:
            break
        F = np.array(found)
        F /= row_norms(F, spec)[:, None]
        lam_f = _pool_thresholds(M, F, epsilon, spec, limit)
        X, lam_x = np.vstack([X, F]), np.concatenate([lam_x, lam_f])
    if np.isfinite(lam_x.max()) and lam_x.max() > 0:
        P = _polish(M, X[np.argsort(-lam_x, kind="stable")[:POLISH]], epsilon, spec)
        X, lam_x = np.vstack([X, P]), np.concatenate([lam_x, _pool_thresholds(M, P, epsilon, spec, limit)])
    lam = float(lam_x.max())
    if math.isinf(lam):
        finite = lam_x[np.isfinite(lam_x)]
        lo = float(finite.max()) if finite.size else 0.0
        return CenterEstimate(epsilon, lo, math.inf, restarts, seed, iterations,
                              status="not-in-center")
    upper = lam + tol if lam > 0 else 0.0
    if lam == 0.0 and float(np.max(row_norms(np.abs(X @ M.T), spec))) > epsilon:
        upper = tol
    return CenterEstimate(epsilon, lam, upper, restarts, seed, iterations)


# -- inverse bound -----------------------------------------------------------------

@dataclass
class InverseReport:
    bp: float
    bp_inverse: float
    inverse_norm: float
    bound: float
    ratio: float | None
    holds: bool
    condition: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def inverse_defect_check(M, spec: NormSpec, *, cap: int = DEFAULT_EXACT_CAP) -> InverseReport:
    """Check bp(M⁻¹) ≤ 2‖M⁻¹‖²·bp(M) and report bp(M⁻¹)/bound."""
    M = as_operator(M)
    _check_dim(M, spec)
    if not spec.exact_operator_norm:
        raise LatticeError(f"inverse check needs an exact norm, got {spec.label()}")
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond >= 1e12:
        raise LatticeError(f"matrix is singular or ill-conditioned (cond ≈ {cond:.3g})")
    Minv = np.linalg.inv(M)
    b = bp_defect(M, spec, cap=cap).value
    bi = bp_defect(Minv, spec, cap=cap).value
    ninv = float(operator_norm(Minv, spec))
    bound = 2.0 * ninv ** 2 * b
    ratio = bi / bound if bound > 0 else None
    return InverseReport(b, bi, ninv, bound, ratio, bi <= bound + 1e-8, cond)


# -- full report -------------------------------------------------------------------

@dataclass
class DefectReport:
    norm_spec: NormSpec
    op_norm: float | Bracket
    bp: SubsetMax
    ip: float | None
    dp_lb: float
    dp_witness: tuple
    commutator: SubsetMax | None
    dist: DistResult | None
    seed: int
    exact: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        on = self.op_norm
        return {
            "schema": SCHEMA,
            "norm_spec": self.norm_spec.to_json(),
            "op_norm": {"lo": on.lo, "hi": on.hi} if isinstance(on, Bracket) else on,
            "bp": {"value": self.bp.value, "witness": list(self.bp.witness)},
            "ip": self.ip,
            "dp_lb": {"value": self.dp_lb,
                      "witness": {"x": [float(v) for v in self.dp_witness[0]],
                                  "y": [float(v) for v in self.dp_witness[1]]}},
            "commutator_max": None if self.commutator is None else
            {"value": self.commutator.value, "witness": list(self.commutator.witness)},
            "dist_to_diag": None if self.dist is None else
            {"value": self.dist.value, "lower": self.dist.lower, "status": self.dist.status,
             "minimizer": [float(v) for v in np.diag(self.dist.minimizer)]},
            "seed": self.seed,
            "exact": self.exact,
        }


def defect_report(M, spec: NormSpec, *, cap: int = DEFAULT_EXACT_CAP, seed: int = 0) -> DefectReport:
    M = as_operator(M)
    _check_dim(M, spec)
    n = M.shape[0]
    exact_spec = spec.exact_operator_norm
    exact_bp = exact_spec and n <= cap
    bp = bp_defect(M, spec, "exact" if exact_bp else "heuristic", cap=cap, seed=seed)
    ip = ip_defect(M, spec, cap=cap).value if exact_bp else None
    comm = commutator_max(M, spec, cap=cap) if exact_bp else None
    dp, pair = dp_defect_lb(M, spec, DPBudget(seed=seed))
    dist = dist_to_diagonal(M, spec) if exact_spec else None
    return DefectReport(
        norm_spec=spec, op_norm=operator_norm(M, spec, seed=seed), bp=bp, ip=ip,
        dp_lb=dp, dp_witness=pair, commutator=comm, dist=dist, seed=seed,
        exact={"op_norm": exact_spec, "bp": exact_bp, "ip": exact_bp,
               "dp_lb": False, "commutator_max": exact_bp,
               "dist_to_diag": dist is not None and dist.status == "exact"},
    )
