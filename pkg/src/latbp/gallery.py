"""Named examples and the seeded property driver."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import approximants as ap
from . import operators as op
from .lattice import L1, L2, LINF, LatticeError, NormSpec, Partition


class GalleryAssertion(AssertionError):
    pass


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise GalleryAssertion(msg)


def antidiagonal(eps: float) -> np.ndarray:
    return np.array([[0.0, eps], [eps, 0.0]])


def antidiagonal_example(eps: float, specs=(L1, L2, LINF)) -> dict:
    """[[0, ε], [ε, 0]] is ε-BP with an inverse that is exactly (1/ε)-BP."""
    if not eps > 0:
        raise LatticeError("eps must be positive")
    M = antidiagonal(eps)
    out = {"eps": eps, "matrix": M.tolist(), "specs": {}}
    for spec in specs:
        rep = op.defect_report(M, spec)
        inv = op.inverse_defect_check(M, spec)
        _require(abs(rep.bp.value - eps) <= 1e-12 * max(1.0, eps), f"bp = {rep.bp.value} != {eps}")
        _require(abs(inv.bp_inverse - 1.0 / eps) <= 1e-12 * max(1.0, 1.0 / eps),
                 f"bp(M^-1) = {inv.bp_inverse} != {1 / eps}")
        _require(inv.holds and abs(inv.ratio - 0.5) <= 1e-12, f"inverse ratio {inv.ratio} != 1/2")
        out["specs"][spec.label()] = {"report": rep.to_json(), "inverse": inv.to_json()}
    return out


def walsh_matrix(i: int, permute_seed: int | None = None) -> np.ndarray:
    """T_i = I + 2^{-i/2} S_i with S_i the normalized Sylvester-Hadamard matrix.

    With ``permute_seed`` the rows of S_i are shuffled (still orthogonal).
    """
    n = 1 << i
    S = scipy.linalg.hadamard(n).astype(float) / math.sqrt(n)
    if permute_seed is not None:
        S = S[np.random.default_rng(permute_seed).permutation(n)]
    return np.eye(n) + S / math.sqrt(n)


def walsh_witness(i: int) -> tuple:
    n = 1 << i
    h = n // 2
    x = np.concatenate([np.full(h, 2.0 ** ((1 - i) / 2)), np.zeros(h)])
    y = np.concatenate([np.zeros(h), np.ones(h)])
    return x, y


def walsh_modulus_example(i: int, *, permute_seed: int | None = 12345,
                          exact_bp_max_i: int = 4) -> dict:
    """|T_i| keeps a gap of 1/2 on the half/half witness while ‖T_i − I‖ = 2^{-i/2}."""
    if not 2 <= i <= 13:
        raise LatticeError("i must lie in [2, 13]")
    T = walsh_matrix(i)
    absT = np.abs(T)
    x, y = walsh_witness(i)
    gap = float(np.linalg.norm(np.minimum(absT @ x, y)))
    dist_I = float(op.operator_norm(T - np.eye(T.shape[0]), L2))
    _require(abs(float(np.linalg.norm(x)) - 1.0) <= 1e-12, "witness x is not a unit vector")
    _require(abs(gap - 0.5) <= 1e-9, f"gap {gap} != 1/2")
    _require(abs(dist_I - 2.0 ** (-i / 2)) <= 1e-9, f"‖T − I‖ = {dist_I} != 2^(-{i}/2)")
    out = {"i": i, "size": T.shape[0], "gap": gap, "norm_T_minus_I": dist_I,
           "bp_T_upper": dist_I, "bp_absT_lower": gap,
           "bp_ratio_lower": gap / dist_I}
    if permute_seed is not None:
        Tp = walsh_matrix(i, permute_seed)
        gp = float(np.linalg.norm(np.minimum(np.abs(Tp) @ x, y)))
        _require(abs(gp - 0.5) <= 1e-9, f"permuted gap {gp} != 1/2")
        out["permuted_gap"] = gp
        out["permute_seed"] = permute_seed
    if i <= exact_bp_max_i:
        bpT = op.bp_defect(T, L2)
        bpA = op.bp_defect(absT, L2)
        _require(bpT.value <= dist_I + 1e-9, "bp(T_i) exceeds ‖T_i − I‖")
        _require(bpA.value >= gap - 1e-9, "bp(|T_i|) below the witnessed gap")
        out["bp_T_exact"] = bpT.value
        out["bp_absT_exact"] = bpA.value
    return out


# -- property driver -----------------------------------------------------------

@dataclass
class Check:
    checked: int = 0
    failures: int = 0
    worst_slack: float = math.inf
    worst_case: dict | None = None

    def record(self, slack: float, tol: float, case: dict) -> None:
        self.checked += 1
        if slack < -tol:
            self.failures += 1
        if slack < self.worst_slack:
            self.worst_slack, self.worst_case = slack, case

    def to_json(self) -> dict:
        return {"checked": self.checked, "failures": self.failures,
                "worst_slack": None if self.checked == 0 else self.worst_slack,
                "worst_case": self.worst_case}


@dataclass
class SuiteReport:
    seed: int
    trials: int
    dims: tuple
    specs: tuple
    ensembles: tuple
    checks: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)
    name: str = "random"

    @property
    def failures(self) -> int:
        return sum(c.failures for c in self.checks.values())

    def to_json(self) -> dict:
        return {"schema": op.SCHEMA, "suite": self.name, "seed": self.seed,
                "trials": self.trials, "dims": list(self.dims),
                "specs": [s.label() for s in self.specs], "ensembles": list(self.ensembles),
                "failures": self.failures,
                "checks": {k: v.to_json() for k, v in sorted(self.checks.items())},
                "stats": self.stats}


def draw_matrix(rng: np.random.Generator, n: int, ensemble: str) -> np.ndarray:
    if ensemble == "uniform":
        return rng.uniform(-1.0, 1.0, (n, n))
    if ensemble == "sparse":
        M = rng.uniform(-1.0, 1.0, (n, n))
        return np.where(rng.random((n, n)) < 0.6, 0.0, M)
    if ensemble == "positive":
        return rng.uniform(0.0, 1.0, (n, n))
    raise LatticeError(f"unknown ensemble {ensemble!r}")


def random_partition(rng: np.random.Generator, n: int, max_blocks: int = 8) -> Partition:
    k = int(rng.integers(1, min(n, max_blocks) + 1))
    labels = rng.integers(0, k, size=n)
    labels[rng.permutation(n)[:k]] = np.arange(k)
    return Partition(tuple(np.flatnonzero(labels == b) for b in range(k)), n)


ALL_CHECKS = ("bounds", "approximants", "dist", "dp", "inverse")


def _trial(args) -> list:
    """Run every check on one seeded draw; returns (name, slack, tol, case) tuples."""
    idx, ss, n, ensemble, specs, groups, dp_budget = args
    rng = np.random.default_rng(ss)
    M = draw_matrix(rng, n, ensemble)
    N = draw_matrix(rng, n, "uniform")
    c = float(rng.uniform(-3, 3))
    case = {"trial": idx, "n": n, "ensemble": ensemble}
    out = []

    def rec(name, slack, tol=1e-9, **extra):
        out.append((name, float(slack), tol, dict(case, **extra)))

    for spec in specs:
        lab = spec.label()
        norm = lambda A: float(op.operator_norm(A, spec))  # noqa: E731
        bp = op.bp_defect(M, spec).value
        nM = norm(M)
        if "bounds" in groups:
            rec(f"bp_le_norm[{lab}]", nM - bp)
            comm = op.commutator_max(M, spec).value
            rec(f"commutator_lower[{lab}]", comm - bp)
            rec(f"commutator_upper[{lab}]", 2 * bp - comm)
            ip = op.ip_defect(M, spec).value
            rec(f"ip_eq_bp[{lab}]", 1e-9 - abs(ip - bp), tol=0.0)
            if spec.kind == "lp":
                bpt = op.bp_defect(M.T, spec.dual()).value
                rec(f"duality[{lab}]", 1e-9 - abs(bpt - bp), tol=0.0)
            if spec.is_sup or spec.p == 1.0:
                bpa = op.bp_defect(np.abs(M), spec).value
                rec(f"modulus[{lab}]", 1e-9 - abs(bpa - bp), tol=0.0)
            bpn = op.bp_defect(N, spec).value
            rec(f"lipschitz[{lab}]", norm(M - N) - abs(bp - bpn))
            rec(f"subadditive[{lab}]", bp + bpn - op.bp_defect(M + N, spec).value)
            rec(f"homogeneous[{lab}]", 1e-9 * max(1.0, abs(c) * bp)
                - abs(op.bp_defect(c * M, spec).value - abs(c) * bp), tol=0.0)
        if "dp" in groups:
            dp, _ = op.dp_defect_lb(M, spec, dp_budget)
            rec(f"dp_le_2bp[{lab}]", 2 * bp - dp)
        if "approximants" in groups:
            D = ap.diagonal_part(M)
            rec(f"four_eps[{lab}]", 4 * bp - norm(M - D), tol=1e-8)
            rec(f"diag_contraction[{lab}]", nM - norm(D), tol=1e-12)
            P = random_partition(rng, n)
            rec(f"partition_four_eps[{lab}]", 4 * bp - norm(M - ap.partition_compress(M, P)), tol=1e-8)
            rec("averaging_identity", 1e-12 - ap.offdiag_average_check(M, P), tol=0.0)
            if spec.is_sup and spec.kind == "lp":
                S = ap.ck_multiplier(M)
                gap = norm(M - S)
                rec("ck_two_eps[linf]", 2 * bp - gap)
                if bp > 0:
                    out.append(("ck_ratio", gap / (2 * bp), None, case))
                x, y = _disjoint_unit_pair(rng, n)
                prod = float(np.max(np.abs((M @ x) * (M @ y))))
                rec("product_bound[linf]", bp * nM - prod)
                z = rng.uniform(-1, 1, n)
                z[rng.random(n) < 0.5] = 0.0
                if np.any(z) and not np.all(z):
                    off = np.abs(M @ z)[z == 0].max()
                    rec("zero_coordinate_criterion[linf]", bp * np.abs(z).max() - off)
            if ensemble == "positive":
                chain = ap.random_refinement_chain(n, rng)
                try:
                    ap.positive_net_infimum(M, chain, samples=3, seed=idx)
                    rec("monotone_net", 0.0, tol=0.0)
                except AssertionError:
                    rec("monotone_net", -1.0, tol=0.0)
        if "dist" in groups and spec.exact_operator_norm:
            dist = op.dist_to_diagonal(M, spec).value
            rec(f"dist_lower[{lab}]", dist - bp, tol=1e-8)
            rec(f"dist_upper[{lab}]", 4 * bp - dist, tol=1e-8)
        if "inverse" in groups and np.linalg.cond(M) < 1e6:
            inv = op.inverse_defect_check(M, spec)
            rec(f"inverse_bound[{lab}]", inv.bound - inv.bp_inverse, tol=1e-8)
    return out


def _disjoint_unit_pair(rng: np.random.Generator, n: int) -> tuple:
    side = rng.integers(0, 2, size=n)
    side[0], side[-1] = 0, 1
    x = np.where(side == 0, rng.uniform(-1, 1, n), 0.0)
    y = np.where(side == 1, rng.uniform(-1, 1, n), 0.0)
    return x / np.abs(x).max(), y / np.abs(y).max()


def random_suite(seed: int = 42, trials: int = 100, dims=(5,), specs=(LINF,),
                 ensembles=("uniform", "sparse", "positive"), groups=ALL_CHECKS,
                 dp_budget: op.DPBudget | None = None) -> SuiteReport:
    """Run the seeded property checks; deterministic for a fixed seed.

    Trial t uses dimension dims[t % len(dims)] and ensemble
    ensembles[t % len(ensembles)], with its own child seed.
    """
    dims, specs, ensembles = tuple(dims), tuple(specs), tuple(ensembles)
    if dp_budget is None:
        dp_budget = op.DPBudget(max_splits=81, pool=8, rounds=4, restarts=3)
    children = np.random.default_rng(seed).bit_generator.seed_seq.spawn(trials)
    jobs = [(t, children[t], dims[t % len(dims)], ensembles[t % len(ensembles)],
             specs, tuple(groups), dp_budget) for t in range(trials)]
    results = op._map(_trial, jobs)
    rep = SuiteReport(seed, trials, dims, specs, ensembles)
    ck_ratios = []
    for rows in results:
        for name, slack, tol, case in rows:
            if tol is None:
                ck_ratios.append(slack)
                continue
            rep.checks.setdefault(name, Check()).record(slack, tol, case)
    if ck_ratios:
        rep.stats["ck_ratio_max"] = max(ck_ratios)
        rep.stats["ck_ratio_tight_count"] = sum(r >= 1 - 1e-12 for r in ck_ratios)
    return rep


def function_suite(seed: int = 42, trials: int = 500, ns=(3, 4, 5), depth: int = 12,
                   phi_candidates: int = 2000, renorm_eps=(0.5, 0.1, 0.01)) -> SuiteReport:
    """Seeded checks on the E-lattice and renormed-sequence models."""
    from . import function_lattices as fl

    cfg = fl.ELatticeConfig(depth)
    rng = np.random.default_rng(seed)
    rep = SuiteReport(seed, trials, tuple(ns), (), ("pl",), name="function")
    checks = rep.checks
    for n in ns:
        pn = 2.0 ** -n
        for t in range(trials):
            f = fl.random_element(cfg, rng, n_hint=n)
            g = fl.random_element(cfg, rng)
            case = {"n": n, "trial": t}
            nf = fl.e_norm(f, cfg)
            checks.setdefault("center_gap", Check()).record(
                pn - fl.center_witness_check(n, f, cfg), 1e-12, case)
            checks.setdefault("Tn_contraction", Check()).record(
                nf - fl.e_norm(fl.apply_Tn(n, f, cfg), cfg), 1e-12, case)
            checks.setdefault("triangle", Check()).record(
                nf + fl.e_norm(g, cfg) - fl.e_norm(f + g, cfg), 1e-12, case)
            Tfg = fl.apply_Tn(n, f + g, cfg) - (fl.apply_Tn(n, f, cfg) + fl.apply_Tn(n, g, cfg))
            checks.setdefault("Tn_linear", Check()).record(
                1e-12 * max(1.0, nf) - fl.e_norm(Tfg, cfg), 0.0, case)
        m = n + 1
        checks.setdefault("Tn_Tm_zero", Check()).record(
            -fl.e_norm(fl.apply_Tn(n, fl.apply_Tn(m, fl.hat(m), cfg), cfg), cfg), 0.0, {"n": n})
        checks.setdefault("Tn_fixes_hat", Check()).record(
            -fl.e_norm(fl.apply_Tn(n, fl.hat(n), cfg) - fl.hat(n), cfg), 0.0, {"n": n})
        adv = fl.adversarial_phi_search(n, cfg, candidates=phi_candidates,
                                        seed=int(rng.integers(2**31)))
        checks.setdefault("e_certificate_floor", Check()).record(
            adv["min_minus_half"], 1e-12, {"n": n})
        rep.stats[f"e_certificate_min[n={n}]"] = adv["min_value"]
    for eps in renorm_eps:
        for t in range(max(1, trials // 5)):
            size = int(rng.integers(1, 12))
            c = rng.uniform(-1, 2) if rng.random() < 0.3 else 0.5
            psi = fl.SeqWithLimit(tuple(c + 0.5 * rng.standard_normal(size) * rng.random()),
                                  float(c + 0.1 * rng.standard_normal() * rng.random()), 0.0)
            cert = fl.renorm_certificate(eps, psi, samples=32, seed=t)
            checks.setdefault("renorm_floor", Check()).record(
                cert.value - 0.5, 1e-12, {"eps": eps, "trial": t})
    return rep
