"""Finite-dimensional atomic Banach lattices.

Vectors and operators are plain numpy float arrays.  Coordinates are
0-based throughout.  The lattice order is the componentwise one, so every
band is a coordinate subspace and every band projection is a 0/1 diagonal.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

TOL = 1e-9
DEFAULT_EXACT_CAP = 20


class LatticeError(ValueError):
    """Invalid input to a lattice routine (dimension mismatch, bad spec, ...)."""


class CapExceeded(LatticeError):
    """An exact combinatorial routine was asked to enumerate beyond its cap."""


def as_vector(x) -> np.ndarray:
    v = np.array(x, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise LatticeError(f"vector must be 1-d and nonempty, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise LatticeError("vector entries must be finite")
    return v


def as_operator(M) -> np.ndarray:
    A = np.array(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise LatticeError(f"operator must be a nonempty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise LatticeError("operator entries must be finite")
    return A


def _same_dim(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape != y.shape:
        raise LatticeError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")


# -- lattice operations ------------------------------------------------------

def lattice_op(kind: str, x, y=None) -> np.ndarray:
    """Componentwise |x|, x ∧ y, x ∨ y, x₊ or x₋."""
    x = as_vector(x)
    if kind in ("meet", "join"):
        if y is None:
            raise LatticeError(f"{kind} needs two vectors")
        y = as_vector(y)
        _same_dim(x, y)
        return np.minimum(x, y) if kind == "meet" else np.maximum(x, y)
    if kind == "abs":
        return np.abs(x)
    if kind == "pos":
        return np.maximum(x, 0.0)
    if kind == "neg":
        return np.maximum(-x, 0.0)
    raise LatticeError(f"unknown lattice operation {kind!r}")


def support(x) -> frozenset:
    return frozenset(int(i) for i in np.flatnonzero(as_vector(x)))


# -- norms -------------------------------------------------------------------

@dataclass(frozen=True)
class NormSpec:
    """A lattice norm on R^n: ℓ_p (1 ≤ p ≤ ∞) or max_i w_i|x_i|.

    Construct with :meth:`lp`, :meth:`wsup` or :meth:`parse`.
    """

    kind: str
    p: float = math.inf
    weights: tuple | None = None

    def __post_init__(self):
        if self.kind == "lp":
            if not (self.p >= 1.0):
                raise LatticeError(f"p must be >= 1, got {self.p}")
            if self.weights is not None:
                raise LatticeError("lp norms carry no weights")
        elif self.kind == "wsup":
            if not self.weights:
                raise LatticeError("weighted sup norm needs weights")
            w = np.asarray(self.weights, dtype=float)
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise LatticeError("weights must be finite and strictly positive")
        else:
            raise LatticeError(f"unknown norm kind {self.kind!r}")

    @classmethod
    def lp(cls, p: float) -> "NormSpec":
        return cls("lp", float(p))

    @classmethod
    def wsup(cls, weights: Sequence[float]) -> "NormSpec":
        return cls("wsup", math.inf, tuple(float(w) for w in weights))

    @classmethod
    def parse(cls, text: str) -> "NormSpec":
        """Parse ``l1 | l2 | linf | lp:<p> | wsup:<path-to-weights-json>``."""
        t = text.strip()
        if t == "l1":
            return cls.lp(1)
        if t == "l2":
            return cls.lp(2)
        if t in ("linf", "lp:inf"):
            return cls.lp(math.inf)
        if t.startswith("lp:"):
            try:
                p = float(t[3:])
            except ValueError as exc:
                raise LatticeError(f"bad exponent in norm spec {text!r}") from exc
            return cls.lp(p)
        if t.startswith("wsup:"):
            path = Path(t[5:])
            try:
                data = json.loads(path.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise LatticeError(f"cannot read weights from {path}: {exc}") from exc
            if isinstance(data, dict):
                data = data.get("weights", data.get("entries"))
            return cls.wsup(data)
        raise LatticeError(f"unknown norm spec {text!r}")

    @property
    def is_sup(self) -> bool:
        return self.kind == "wsup" or self.p == math.inf

    @property
    def exact_operator_norm(self) -> bool:
        return self.kind == "wsup" or self.p in (1.0, 2.0, math.inf)

    def weight_array(self, n: int) -> np.ndarray:
        if self.kind != "wsup":
            return np.ones(n)
        w = np.asarray(self.weights, dtype=float)
        if w.size != n:
            raise LatticeError(f"weights have length {w.size}, dimension is {n}")
        return w

    def dual(self) -> "NormSpec":
        if self.kind != "lp":
            raise LatticeError("dual only implemented for lp norms")
        if self.p == 1.0:
            return NormSpec.lp(math.inf)
        if self.p == math.inf:
            return NormSpec.lp(1)
        return NormSpec.lp(self.p / (self.p - 1.0))

    def label(self) -> str:
        if self.kind == "wsup":
            return "wsup"
        if self.p == math.inf:
            return "linf"
        if self.p in (1.0, 2.0):
            return f"l{int(self.p)}"
        return f"lp:{self.p:g}"

    def to_json(self) -> dict:
        d = {"kind": self.kind, "label": self.label()}
        if self.kind == "lp":
            d["p"] = "inf" if self.p == math.inf else self.p
        else:
            d["weights"] = list(self.weights)
        return d


L1 = NormSpec.lp(1)
L2 = NormSpec.lp(2)
LINF = NormSpec.lp(math.inf)


def vector_norm(x, spec: NormSpec) -> float:
    x = as_vector(x)
    a = np.abs(x)
    if spec.kind == "wsup":
        return float(np.max(spec.weight_array(x.size) * a))
    p = spec.p
    if p == math.inf:
        return float(a.max())
    if p == 1.0:
        return float(a.sum())
    if p == 2.0:
        return float(np.linalg.norm(a))
    m = a.max()
    if m == 0.0:
        return 0.0
    # scale first so |x_i|^p cannot overflow
    return float(m * np.sum((a / m) ** p) ** (1.0 / p))


# -- band projections and partitions -----------------------------------------

@dataclass(frozen=True)
class BandProjection:
    """Projection onto the coordinates in ``subset``."""

    subset: frozenset
    n: int

    def __post_init__(self):
        object.__setattr__(self, "subset", frozenset(int(i) for i in self.subset))
        if self.n < 1:
            raise LatticeError("dimension must be positive")
        if any(i < 0 or i >= self.n for i in self.subset):
            raise LatticeError(f"subset {sorted(self.subset)} not inside range({self.n})")

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.n, dtype=bool)
        m[list(self.subset)] = True
        return m

    def complement(self) -> "BandProjection":
        return BandProjection(frozenset(range(self.n)) - self.subset, self.n)

    def apply(self, x) -> np.ndarray:
        x = as_vector(x)
        if x.size != self.n:
            raise LatticeError(f"dimension mismatch: {x.size} vs {self.n}")
        return np.where(self.mask, x, 0.0)

    def matrix(self) -> np.ndarray:
        return np.diag(self.mask.astype(float))

    def annihilates(self, x) -> bool:
        """True iff P x = 0, i.e. supp(x) misses the subset."""
        return not (support(x) & self.subset)


@dataclass(frozen=True)
class Partition:
    """Disjoint nonempty blocks covering range(n), stored in canonical order."""

    blocks: tuple
    n: int = field(default=-1)

    def __post_init__(self):
        blocks = [frozenset(int(i) for i in b) for b in self.blocks]
        if any(not b for b in blocks):
            raise LatticeError("partition blocks must be nonempty")
        union = frozenset().union(*blocks) if blocks else frozenset()
        if sum(len(b) for b in blocks) != len(union):
            raise LatticeError("partition blocks overlap")
        n = self.n if self.n >= 0 else len(union)
        if union != frozenset(range(n)):
            raise LatticeError(f"partition blocks do not cover range({n})")
        blocks.sort(key=min)
        object.__setattr__(self, "blocks", tuple(blocks))
        object.__setattr__(self, "n", n)

    @classmethod
    def trivial(cls, n: int) -> "Partition":
        return cls((range(n),), n)

    @classmethod
    def finest(cls, n: int) -> "Partition":
        return cls(tuple((i,) for i in range(n)), n)

    def __len__(self):
        return len(self.blocks)

    def labels(self) -> np.ndarray:
        """Block index of every coordinate."""
        lab = np.empty(self.n, dtype=int)
        for k, b in enumerate(self.blocks):
            lab[list(b)] = k
        return lab

    def projections(self) -> list:
        return [BandProjection(b, self.n) for b in self.blocks]

    def refines(self, other: "Partition") -> bool:
        """True iff every block of self lies inside a block of other (other ≺ self)."""
        if self.n != other.n:
            return False
        lab = other.labels()
        return all(len({lab[i] for i in b}) == 1 for b in self.blocks)

    def precedes(self, other: "Partition") -> bool:
        """The net order: self ≺ other iff other refines self."""
        return other.refines(self)

    def to_json(self) -> list:
        return [sorted(b) for b in self.blocks]


def refine(P: Partition, Q: Partition) -> Partition:
    """Common refinement: all nonempty intersections of a P-block with a Q-block."""
    if P.n != Q.n:
        raise LatticeError(f"dimension mismatch: {P.n} vs {Q.n}")
    blocks = [a & b for a in P.blocks for b in Q.blocks if a & b]
    return Partition(tuple(blocks), P.n)


def componentwise_inf(vectors: Iterable) -> np.ndarray:
    return np.min(np.stack([as_vector(v) for v in vectors]), axis=0)


# -- JSON formats --------------------------------------------------------------

def vector_to_json(x) -> dict:
    x = as_vector(x)
    return {"n": int(x.size), "entries": [float(v) for v in x]}


def vector_from_json(data: dict) -> np.ndarray:
    try:
        x = as_vector(data["entries"])
    except (KeyError, TypeError) as exc:
        raise LatticeError(f"malformed vector JSON: {exc}") from exc
    if "n" in data and int(data["n"]) != x.size:
        raise LatticeError(f"vector JSON declares n={data['n']} but has {x.size} entries")
    return x


def matrix_to_json(M) -> dict:
    M = as_operator(M)
    return {"n": int(M.shape[0]), "rows": [[float(v) for v in row] for row in M]}


def matrix_from_json(data: dict) -> np.ndarray:
    try:
        M = as_operator(data["rows"])
    except (KeyError, TypeError) as exc:
        raise LatticeError(f"malformed matrix JSON: {exc}") from exc
    if "n" in data and int(data["n"]) != M.shape[0]:
        raise LatticeError(f"matrix JSON declares n={data['n']} but is {M.shape[0]}x{M.shape[0]}")
    return M
