"""Desk-scale models of two function lattices.

E-lattice: continuous functions on (0, 1] with the norm

    ‖x‖ = max(‖x‖∞, sup_k 2^k |x(2^-k)|),

modeled by piecewise-linear functions supported in [2^-(K+1), 1] for a
depth K.  The rank-one maps T_n x = x(2^-n)·x_n (x_n the hat at 2^-n) are
2^-n-close to the center yet stay ≥ 1/2 away from every multiplication
operator; ``e_certificate`` exhibits the witnesses.

Renormed sequences: a convergent sequence with limit point k under
⦀x⦀ = max(‖x‖∞, ε⁻¹|x(k)|) and T x = x(k)·𝟏.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import LatticeError


@dataclass(frozen=True)
class PLFunction:
    """Piecewise-linear on its breakpoints, 0 to the left, constant to the right."""

    breakpoints: tuple
    values: tuple

    def __post_init__(self):
        t = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.size < 1 or t.shape != v.shape:
            raise LatticeError("breakpoints and values must be nonempty and of equal length")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise LatticeError("breakpoints and values must be finite")
        if t[0] <= 0 or t[-1] > 1 or np.any(np.diff(t) <= 0):
            raise LatticeError("breakpoints must be strictly increasing inside (0, 1]")
        object.__setattr__(self, "breakpoints", tuple(float(s) for s in t))
        object.__setattr__(self, "values", tuple(float(s) for s in v))

    @property
    def t(self) -> np.ndarray:
        return np.asarray(self.breakpoints)

    @property
    def v(self) -> np.ndarray:
        return np.asarray(self.values)

    def __call__(self, s):
        return np.interp(s, self.t, self.v, left=0.0, right=self.values[-1])

    @classmethod
    def constant(cls, c: float, cfg: "ELatticeConfig") -> "PLFunction":
        return cls((cfg.floor, 1.0), (c, c))

    @classmethod
    def from_json(cls, data: dict) -> "PLFunction":
        try:
            return cls(tuple(data["breakpoints"]), tuple(data["values"]))
        except (KeyError, TypeError) as exc:
            raise LatticeError(f"malformed PL function JSON: {exc}") from exc

    def to_json(self) -> dict:
        return {"breakpoints": list(self.breakpoints), "values": list(self.values)}

    def resample(self, grid) -> "PLFunction":
        grid = np.asarray(grid, dtype=float)
        return PLFunction(tuple(grid), tuple(self(grid)))

    def _binary(self, other: "PLFunction", op) -> "PLFunction":
        grid = np.union1d(self.t, other.t)
        # a nonzero first value is a jump from the zero extension; it cannot
        # be represented once the other operand starts further left
        for f in (self, other):
            if f.t[0] > grid[0] and f.values[0] != 0.0:
                raise LatticeError("operand jumps at its left end inside the other's domain")
        return PLFunction(tuple(grid), tuple(op(self(grid), other(grid))))

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def scale(self, c: float) -> "PLFunction":
        return PLFunction(self.breakpoints, tuple(c * self.v))

    def with_roots(self) -> "PLFunction":
        """Same function with every sign change between breakpoints made a breakpoint."""
        t, v = self.t, self.v
        ts, vs = [t[0]], [v[0]]
        for a, b, va, vb in zip(t[:-1], t[1:], v[:-1], v[1:]):
            if va * vb < 0:
                r = a + (b - a) * va / (va - vb)
                if a < r < b:
                    ts.append(r)
                    vs.append(0.0)
            ts.append(b)
            vs.append(vb)
        return PLFunction(tuple(ts), tuple(vs))

    def abs(self) -> "PLFunction":
        f = self.with_roots()
        return PLFunction(f.breakpoints, tuple(np.abs(f.v)))

    def pos(self) -> "PLFunction":
        f = self.with_roots()
        return PLFunction(f.breakpoints, tuple(np.maximum(f.v, 0.0)))

    def sup_abs(self) -> float:
        # linear between breakpoints, so |f| peaks at one of them
        return float(np.abs(self.v).max())


@dataclass(frozen=True)
class ELatticeConfig:
    depth: int = 12

    def __post_init__(self):
        if int(self.depth) != self.depth or self.depth < 2:
            raise LatticeError("depth K must be an integer >= 2")

    @property
    def floor(self) -> float:
        return 2.0 ** -(self.depth + 1)

    @property
    def dyadic_points(self) -> np.ndarray:
        return 2.0 ** -np.arange(1, self.depth + 1)

    @property
    def dyadic_weights(self) -> np.ndarray:
        return 2.0 ** np.arange(1, self.depth + 1)

    def weight_at(self, s: float) -> float:
        """Norm weight of the point s: 2^k at s = 2^-k, else 1."""
        k = -math.log2(s) if s > 0 else math.inf
        if k == round(k) and 1 <= round(k) <= self.depth:
            return 2.0 ** round(k)
        return 1.0


def check_support(f: PLFunction, cfg: ELatticeConfig) -> None:
    """Elements of E must be continuous and vanish on (0, 2^-(K+1)]."""
    if f.values[0] != 0.0:
        raise LatticeError("element of E must start at value 0 (continuity at its left end)")
    low = f.t <= cfg.floor
    if np.any(f.v[low] != 0.0):
        raise LatticeError(f"element of E must vanish on (0, {cfg.floor}]")


def e_norm(f: PLFunction, cfg: ELatticeConfig) -> float:
    check_support(f, cfg)
    weighted = cfg.dyadic_weights * np.abs(f(cfg.dyadic_points))
    return float(max(f.sup_abs(), weighted.max()))


def hat(n: int) -> PLFunction:
    """x_n: 0 outside (2^-(n+1), 2^(1-n)), 1 at 2^-n, linear in between."""
    return PLFunction((2.0 ** -(n + 1), 2.0 ** -n, 2.0 ** (1 - n)), (0.0, 1.0, 0.0))


def _check_n(n: int, cfg: ELatticeConfig) -> None:
    if not 2 <= n <= cfg.depth - 1:
        raise LatticeError(f"n must lie in [2, {cfg.depth - 1}] for depth {cfg.depth}, got {n}")


def apply_Tn(n: int, f: PLFunction, cfg: ELatticeConfig) -> PLFunction:
    """T_n f = f(2^-n)·x_n."""
    _check_n(n, cfg)
    check_support(f, cfg)
    return hat(n).scale(float(f(2.0 ** -n)))


def center_witness_check(n: int, f: PLFunction, cfg: ELatticeConfig) -> float:
    """‖(|T_n f| − |f|)₊‖ / ‖f‖, computed exactly; must not exceed 2^-n."""
    _check_n(n, cfg)
    nf = e_norm(f, cfg)
    if nf == 0:
        raise LatticeError("f must be nonzero")
    gap = (apply_Tn(n, f, cfg).abs() - f.abs()).pos()
    value = e_norm(gap, cfg) / nf
    if value > 2.0 ** -n + 1e-12:
        raise AssertionError(f"center gap {value} exceeds 2^-{n}")
    return value


# -- the ≥ 1/2 certificate ---------------------------------------------------

@dataclass
class Witness:
    """A unit vector w and a point s where weight(s)·|[(T − S)w](s)| ≥ bound."""

    kind: str
    function: PLFunction
    point: float
    weight: float
    bound: float

    def to_json(self) -> dict:
        return {"kind": self.kind, "function": self.function.to_json(),
                "point": self.point, "weight": self.weight, "bound": self.bound}


@dataclass
class Certificate:
    value: float
    guarantee: float
    witnesses: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        d = {"value": self.value, "guarantee": self.guarantee,
             "witnesses": [w.to_json() for w in self.witnesses]}
        d.update(self.extra)
        return d


def _check_multiplier(phi: PLFunction, cfg: ELatticeConfig) -> None:
    if phi.breakpoints[0] > cfg.floor:
        raise LatticeError(f"multiplier must be defined on [{cfg.floor}, 1]: "
                           f"first breakpoint {phi.breakpoints[0]} is too far right")


def _dyadic_gap(s: float, cfg: ELatticeConfig) -> tuple:
    """The gap (2^-(m+1), 2^-m) of dyadic points, m ≤ K, containing or bordering s."""
    m = min(cfg.depth, max(0, int(math.floor(-math.log2(s)))))
    return 2.0 ** -(m + 1), 2.0 ** -m


def _bump_point(s: float, phi: PLFunction, cfg: ELatticeConfig) -> float:
    """A point strictly inside a dyadic gap with |φ| as close as possible to |φ(s)|."""
    a, b = _dyadic_gap(s, cfg)
    if a < s < b:
        return s
    t = phi.t
    best = None
    for side in (1.0, -1.0):
        if (side > 0 and s >= 1.0) or (side < 0 and s <= cfg.floor):
            continue
        ga, gb = _dyadic_gap(s * (1.0 + 0.25 * side), cfg)
        nbr = t[t > s] if side > 0 else t[t < s]
        span = min(gb - ga, abs(nbr[0 if side > 0 else -1] - s) if nbr.size else gb - ga)
        cand = s + side * span * 1e-12
        cand = min(max(cand, ga + (gb - ga) * 1e-15), gb - (gb - ga) * 1e-15)
        if not ga < cand < gb:
            cand = 0.5 * (ga + gb)
        if best is None or abs(phi(cand)) > abs(phi(best)):
            best = cand
    return float(best)


def e_certificate(n: int, phi: PLFunction, cfg: ELatticeConfig) -> Certificate:
    """Lower bound on ‖T_n − M_φ‖ over E, for a multiplier φ.

    Witness "bump": a unit tent inside a gap between dyadic points, where
    T_n vanishes, realizes |φ(s)| for s in the gap; its supremum over s is
    sup|φ|.  Witness "peak": w = 2^-n·x_n has ‖w‖ = 1 and
    2^n|[(T_n − φ)w](2^-n)| = |1 − φ(2^-n)|.  Since sup|φ| ≥ |φ(2^-n)|, the
    bound is at least 1/2.
    """
    _check_n(n, cfg)
    _check_multiplier(phi, cfg)
    grid = np.concatenate(([cfg.floor], phi.t[(phi.t > cfg.floor)], [1.0]))
    vals = np.abs(phi(grid))
    k = int(np.argmax(vals))
    sup_phi = float(vals[k])

    # bump at the argmax, nudged off the dyadic set (and off the floor) into
    # an adjacent gap by a step small against both the gap and φ's own
    # breakpoint spacing, so |φ| moves by at most ~1e-12 of a local jump
    s = float(grid[k])
    s = _bump_point(s, phi, cfg)
    a, b = _dyadic_gap(s, cfg)
    bump = PLFunction((a, s, b), (0.0, 1.0, 0.0))
    bump_bound = float(abs(phi(s)))

    pn = 2.0 ** -n
    peak = hat(n).scale(pn)
    tn_at = float(apply_Tn(n, peak, cfg)(pn))
    peak_bound = float(abs(tn_at - phi(pn) * peak(pn)) / pn)

    value = max(sup_phi, peak_bound)
    return Certificate(
        value=value,
        guarantee=0.5,
        witnesses=[Witness("bump", bump, s, 1.0, bump_bound),
                   Witness("peak", peak, pn, 2.0 ** n, peak_bound)],
        extra={"n": n, "depth": cfg.depth, "sup_abs_phi": sup_phi},
    )


def recheck_witness(w: Witness, n: int, phi: PLFunction, cfg: ELatticeConfig) -> float:
    """Independent pointwise re-evaluation of a witness: weight·|[(T_n − φ)w](s)| / ‖w‖."""
    nw = e_norm(w.function, cfg)
    diff = float(apply_Tn(n, w.function, cfg)(w.point)) - float(phi(w.point)) * float(w.function(w.point))
    return cfg.weight_at(w.point) * abs(diff) / nw


def adversarial_phi_search(n: int, cfg: ELatticeConfig, *, candidates: int = 10_000,
                           seed: int = 0, max_breakpoints: int = 50) -> dict:
    """Try to push e_certificate below 1/2 with PL multipliers.

    Half the budget is random PL functions with up to ``max_breakpoints``
    breakpoints; the rest is greedy local perturbation of the best so far.
    Returns the minimum certificate value found and its multiplier.
    """
    rng = np.random.default_rng(seed)
    pn = 2.0 ** -n

    def random_phi():
        k = int(rng.integers(2, max_breakpoints + 1))
        inner = np.sort(rng.uniform(cfg.floor, 1.0, size=k - 2))
        # snap a third of the interior points onto dyadic points, including 2^-n
        snap = rng.random(inner.size) < 0.3
        inner[snap] = 2.0 ** -rng.integers(1, cfg.depth + 1, size=int(snap.sum()))
        if rng.random() < 0.5:
            inner = np.append(inner, pn)
        t = np.unique(np.concatenate(([cfg.floor], inner, [1.0])))
        centre = rng.uniform(-1.0, 1.5) if rng.random() < 0.3 else 0.5
        spread = 10.0 ** rng.uniform(-6, 0)
        return PLFunction(tuple(t), tuple(centre + spread * rng.standard_normal(t.size)))

    def perturb(phi):
        v = phi.v + (10.0 ** rng.uniform(-8, -1)) * rng.standard_normal(phi.v.size)
        if rng.random() < 0.5:
            v = 0.5 + (v - 0.5) * rng.uniform(0.0, 1.0)
        return PLFunction(phi.breakpoints, tuple(v))

    best_val, best_phi = math.inf, None
    worst_gap = math.inf
    explore = candidates // 2
    for i in range(candidates):
        phi = random_phi() if (i < explore or best_phi is None) else perturb(best_phi)
        val = e_certificate(n, phi, cfg).value
        worst_gap = min(worst_gap, val - 0.5)
        if val < best_val:
            best_val, best_phi = val, phi
    return {"n": n, "candidates": candidates, "min_value": best_val,
            "argmin": best_phi.to_json(), "min_minus_half": worst_gap}


def random_element(cfg: ELatticeConfig, rng: np.random.Generator, *, max_breakpoints: int = 20,
                   n_hint: int | None = None) -> PLFunction:
    """A random nonzero element of E, sometimes with breakpoints on dyadic points."""
    k = int(rng.integers(1, max_breakpoints + 1))
    pts = rng.uniform(cfg.floor, 1.0, size=k)
    if rng.random() < 0.5:
        pts = np.append(pts, 2.0 ** -rng.integers(1, cfg.depth + 1, size=int(rng.integers(1, 4))))
    if n_hint is not None and rng.random() < 0.7:
        pts = np.append(pts, [2.0 ** -n_hint, 2.0 ** -(n_hint + 1), 2.0 ** (1 - n_hint)])
    t = np.unique(np.concatenate(([cfg.floor], pts)))
    v = rng.standard_normal(t.size) * 10.0 ** rng.uniform(-3, 0, size=t.size)
    v[t <= cfg.floor] = 0.0
    if not np.any(v):
        v[-1] = 1.0
    return PLFunction(tuple(t), tuple(v))


# -- renormed convergent sequences -------------------------------------------

@dataclass(frozen=True)
class SeqWithLimit:
    """x_1..x_M followed by an unseen tail within ``delta`` of ``limit``."""

    entries: tuple
    limit: float
    delta: float = 0.0

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.ndim != 1 or e.size < 1 or not np.all(np.isfinite(e)):
            raise LatticeError("entries must be a nonempty list of finite reals")
        if not math.isfinite(self.limit):
            raise LatticeError("limit must be finite")
        if not self.delta >= 0:
            raise LatticeError("tail modulus delta must be nonnegative")
        object.__setattr__(self, "entries", tuple(float(s) for s in e))

    @classmethod
    def constant(cls, c: float, size: int = 8) -> "SeqWithLimit":
        return cls((c,) * size, c, 0.0)

    @classmethod
    def from_json(cls, data: dict) -> "SeqWithLimit":
        try:
            return cls(tuple(data["entries"]), float(data["limit"]), float(data.get("delta", 0.0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise LatticeError(f"malformed sequence JSON: {exc}") from exc

    def to_json(self) -> dict:
        return {"entries": list(self.entries), "limit": self.limit, "delta": self.delta}


def renorm_norm(x: np.ndarray, limit: float, eps: float) -> float:
    """⦀x⦀ = max(‖x‖∞, |x(k)|/ε); ``x`` excludes the limit coordinate."""
    return max(float(np.abs(x).max()), abs(limit), abs(limit) / eps)


def renorm_certificate(eps: float, psi: SeqWithLimit, *, samples: int = 256,
                       seed: int = 0) -> Certificate:
    """Lower bound on ⦀T − M_ψ⦀ for T x = x(k)𝟏, plus sampled checks on T.

    Witnesses: e_m at an isolated point gives |ψ_m|; a point far in the tail
    gives at least |ψ_k| − δ; ε𝟏 (unit norm) gives |1 − ψ_k|.  The bound is
    therefore at least (1 − δ)/2.
    """
    if not 0 < eps < 1:
        raise LatticeError("eps must lie in (0, 1)")
    e = np.asarray(psi.entries)
    m = int(np.argmax(np.abs(e)))
    isolated = float(abs(e[m]))
    tail = max(0.0, abs(psi.limit) - psi.delta)
    constant = abs(1.0 - psi.limit)
    value = max(isolated, tail, constant)
    guarantee = (1.0 - psi.delta) / 2.0
    if value < guarantee - 1e-12:
        raise AssertionError(f"certificate {value} below guaranteed {guarantee}")

    rng = np.random.default_rng(seed)
    worst_contraction, worst_center = -math.inf, -math.inf
    for _ in range(samples):
        x = rng.standard_normal(e.size) * 10.0 ** rng.uniform(-2, 1)
        xk = float(rng.standard_normal()) * 10.0 ** rng.uniform(-3, 1)
        nx = renorm_norm(x, xk, eps)
        tx = renorm_norm(np.full(e.size, xk), xk, eps)
        # y = (|Tx| − |x|)₊ vanishes at k
        y = np.maximum(abs(xk) - np.abs(x), 0.0)
        ny = renorm_norm(y, 0.0, eps)
        worst_contraction = max(worst_contraction, tx / nx)
        worst_center = max(worst_center, ny / nx)
    contraction_ok = worst_contraction <= 1.0 + 1e-12
    center_ok = worst_center <= eps + 1e-12
    if not (contraction_ok and center_ok):
        raise AssertionError("T failed the sampled contraction / ε-center check")
    return Certificate(
        value=value,
        guarantee=guarantee,
        witnesses=[],
        extra={"eps": eps, "isolated": {"index": m, "bound": isolated},
               "tail": {"bound": tail}, "constant": {"vector": "eps*1", "bound": constant},
               "samples": samples, "max_contraction_ratio": worst_contraction,
               "max_center_gap": worst_center},
    )
