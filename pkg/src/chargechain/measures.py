"""Finitely additive signed measures over finite or countable state spaces.

States are integers.  A finite space is ``{0, ..., n-1}``; a countable space
is the half-line ``N = {0, 1, 2, ...}`` or the integer line ``Z``, with one
declared *end* per unbounded direction.  A measure carries a sparse atomic
part (state -> weight) plus one bucket weight per end; an end bucket stands
for a purely finitely additive unit charge concentrated along that
direction, coarsened to a single degree of freedom.

Measurable sets are drawn from the finite/co-tail algebra: finite sets of
atoms, end tails ``{x beyond m}``, unions of both, and complements.  Within
this algebra the (atoms, ends) split of a measure is exactly its
decomposition into a countably additive part and a pure-charge part, and
the lattice operations have the closed form implemented below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, DomainError, PreconditionError, ValidationError

END_POS = "+inf"
END_NEG = "-inf"

#: exact subset enumeration is capped at this many states
ORACLE_STATE_CAP = 20


@dataclass(frozen=True)
class End:
    """A coarse direction to infinity carrying pure-charge mass."""

    ident: str
    direction: int  # +1 or -1


@dataclass(frozen=True)
class StateSpace:
    kind: str  # "finite" | "countable"
    size: int = 0
    labels: tuple[str, ...] | None = None
    support: str | None = None  # "N" | "Z"
    ends: tuple[End, ...] = ()

    @staticmethod
    def finite(size: int, labels=None) -> "StateSpace":
        if size < 1:
            raise ValidationError(f"finite space needs size >= 1, got {size}")
        if labels is not None:
            labels = tuple(labels)
            if len(labels) != size:
                raise ValidationError(f"{len(labels)} labels for {size} states")
        return StateSpace(kind="finite", size=size, labels=labels)

    @staticmethod
    def half_line() -> "StateSpace":
        return StateSpace(kind="countable", support="N", ends=(End(END_POS, +1),))

    @staticmethod
    def integer_line() -> "StateSpace":
        return StateSpace(
            kind="countable", support="Z", ends=(End(END_POS, +1), End(END_NEG, -1))
        )

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    def end_ids(self) -> tuple[str, ...]:
        return tuple(e.ident for e in self.ends)

    def has_end(self, ident: str) -> bool:
        return any(e.ident == ident for e in self.ends)

    def end(self, ident: str) -> End:
        for e in self.ends:
            if e.ident == ident:
                return e
        raise DomainError(f"unknown end {ident!r} on this space")

    def contains_state(self, x: int) -> bool:
        if self.is_finite:
            return 0 <= x < self.size
        if self.support == "N":
            return x >= 0
        return True

    def states(self):
        if not self.is_finite:
            raise DomainError("cannot enumerate a countable space")
        return range(self.size)


def _check_states(space: StateSpace, states, what: str) -> None:
    for x in states:
        if not space.contains_state(int(x)):
            raise DomainError(f"{what}: state {x} not in space")


@dataclass(frozen=True)
class MeasurableSet:
    """Finite atoms plus end tails, optionally complemented.

    A tail ``(e, m)`` is the set of states strictly beyond ``m`` in the
    direction of end ``e``.  Canonical form keeps at most one (widest) tail
    per end and no atom that a kept tail already covers.
    """

    space: StateSpace
    atoms: frozenset[int]
    tails: frozenset[tuple[str, int]]
    complemented: bool = False

    def covers_state(self, x: int) -> bool:
        inner = x in self.atoms or any(self._tail_has(e, m, x) for e, m in self.tails)
        return inner != self.complemented

    def covers_end(self, ident: str) -> bool:
        inner = any(e == ident for e, _ in self.tails)
        return inner != self.complemented

    def _tail_has(self, ident: str, m: int, x: int) -> bool:
        d = self.space.end(ident).direction
        return x > m if d > 0 else x < m

    def complement(self) -> "MeasurableSet":
        return MeasurableSet(self.space, self.atoms, self.tails, not self.complemented)

    def to_json(self) -> dict:
        return {
            "atoms": sorted(self.atoms),
            "tails": [
                {"end": e, "after": m} for e, m in sorted(self.tails)
            ],
            "complement": self.complemented,
        }


def measurable(space: StateSpace, atoms=(), tails=(), complement: bool = False) -> MeasurableSet:
    """Build a canonical MeasurableSet from atoms and (end, threshold) tails."""
    atoms = {int(a) for a in atoms}
    _check_states(space, atoms, "measurable set")
    best: dict[str, int] = {}
    for e, m in tails:
        if not space.has_end(e):
            raise DomainError(f"measurable set references unknown end {e!r}")
        d = space.end(e).direction
        m = int(m)
        if e not in best:
            best[e] = m
        else:
            # widest tail wins: lowest threshold toward +inf, highest toward -inf
            best[e] = min(best[e], m) if d > 0 else max(best[e], m)
    kept = frozenset(best.items())
    for e, m in kept:
        d = space.end(e).direction
        atoms = {a for a in atoms if not (a > m if d > 0 else a < m)}
    return MeasurableSet(space, frozenset(atoms), kept, complement)


def set_from_json(space: StateSpace, obj: dict) -> MeasurableSet:
    try:
        atoms = obj.get("atoms", [])
        tails = [(t["end"], t["after"]) for t in obj.get("tails", [])]
        complement = bool(obj.get("complement", False))
    except (TypeError, KeyError) as exc:
        raise ValidationError(f"bad set literal: {exc}") from exc
    return measurable(space, atoms, tails, complement)


@dataclass(frozen=True)
class FAMeasure:
    """Signed finitely additive measure: sparse atoms + per-end charge weights.

    Instances are treated as immutable values; all operations return new
    measures.  Exact zero weights are dropped at construction.
    """

    space: StateSpace
    atoms: dict[int, float] = field(default_factory=dict)
    ends: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        _check_states(self.space, self.atoms, "measure atoms")
        for e in self.ends:
            if not self.space.has_end(e):
                raise DomainError(f"measure references unknown end {e!r}")
        object.__setattr__(
            self, "atoms", {int(k): float(v) for k, v in self.atoms.items() if v != 0.0}
        )
        object.__setattr__(
            self, "ends", {k: float(v) for k, v in self.ends.items() if v != 0.0}
        )

    # -- norms and membership -------------------------------------------------

    def total(self) -> float:
        """Value on the whole space."""
        return math.fsum(self.atoms.values()) + math.fsum(self.ends.values())

    def total_variation(self) -> float:
        return math.fsum(abs(v) for v in self.atoms.values()) + math.fsum(
            abs(v) for v in self.ends.values()
        )

    def is_nonnegative(self, tol: float = 0.0) -> bool:
        return all(v >= -tol for v in self.atoms.values()) and all(
            v >= -tol for v in self.ends.values()
        )

    def is_probability(self, tol: float = 1e-9) -> bool:
        return self.is_nonnegative(tol) and abs(self.total() - 1.0) <= tol

    def is_countably_additive(self, tol: float = 0.0) -> bool:
        """True when the pure-charge part vanishes (no end mass)."""
        return all(abs(v) <= tol for v in self.ends.values())

    def is_pure_charge(self, tol: float = 0.0) -> bool:
        """True when the atomic part vanishes."""
        return all(abs(v) <= tol for v in self.atoms.values())

    # -- linear structure -----------------------------------------------------

    def __add__(self, other: "FAMeasure") -> "FAMeasure":
        _same_space(self, other)
        atoms = dict(self.atoms)
        for k, v in other.atoms.items():
            atoms[k] = atoms.get(k, 0.0) + v
        ends = dict(self.ends)
        for k, v in other.ends.items():
            ends[k] = ends.get(k, 0.0) + v
        return FAMeasure(self.space, atoms, ends)

    def __sub__(self, other: "FAMeasure") -> "FAMeasure":
        return self + (other * -1.0)

    def __mul__(self, c: float) -> "FAMeasure":
        return FAMeasure(
            self.space,
            {k: v * c for k, v in self.atoms.items()},
            {k: v * c for k, v in self.ends.items()},
        )

    __rmul__ = __mul__

    def normalized(self) -> "FAMeasure":
        t = self.total()
        if t == 0.0:
            raise PreconditionError("cannot normalize the zero measure")
        return self * (1.0 / t)

    def to_json(self) -> dict:
        return {
            "atoms": {str(k): float(self.atoms[k]) for k in sorted(self.atoms)},
            "ends": {k: float(self.ends[k]) for k in sorted(self.ends)},
        }


def _same_space(a, b) -> None:
    if a.space != b.space:
        raise DomainError("objects live on different state spaces")


def dirac(space: StateSpace, x: int) -> FAMeasure:
    return FAMeasure(space, atoms={int(x): 1.0})

def end_charge(space: StateSpace, ident: str, weight: float = 1.0) -> FAMeasure:
    if not space.has_end(ident):
        raise DomainError(f"unknown end {ident!r}")
    return FAMeasure(space, ends={ident: float(weight)})

def from_vector(space: StateSpace, vec) -> FAMeasure:
    if not space.is_finite:
        raise DomainError("from_vector needs a finite space")
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (space.size,):
        raise ValidationError(f"vector length {vec.size} != space size {space.size}")
    return FAMeasure(space, atoms={i: float(vec[i]) for i in range(space.size)})

def to_vector(mu: FAMeasure) -> np.ndarray:
    if not mu.space.is_finite:
        raise DomainError("to_vector needs a finite space")
    v = np.zeros(mu.space.size)
    for k, w in mu.atoms.items():
        v[k] = w
    return v


def measure_from_json(space: StateSpace, obj: dict) -> FAMeasure:
    try:
        atoms = {int(k): float(v) for k, v in obj.get("atoms", {}).items()}
        ends = {str(k): float(v) for k, v in obj.get("ends", {}).items()}
    except (TypeError, ValueError, AttributeError) as exc:
        raise ValidationError(f"bad measure literal: {exc}") from exc
    return FAMeasure(space, atoms, ends)


# -- evaluation and pairing ---------------------------------------------------

def evaluate(mu: FAMeasure, ev_set: MeasurableSet) -> float:
    """mu(E): atom weights inside E plus end weights whose tail E includes."""
    _same_space(mu, ev_set)
    if ev_set.complemented:
        return mu.total() - evaluate(mu, ev_set.complement())
    parts = [w for x, w in sorted(mu.atoms.items()) if ev_set.covers_state(x)]
    parts += [mu.ends[e] for e in sorted(mu.ends) if ev_set.covers_end(e)]
    return math.fsum(parts)


@dataclass(frozen=True)
class BoundedFunction:
    """Bounded function with finitely many explicit values and end limits.

    The value at a state x is: ``window[x]`` when listed; the limit of the
    end whose region x lies in when x is beyond the window's extent in that
    direction; ``default`` on unlisted states inside the window's hull.  On
    a finite space there are no ends and ``default`` fills every gap.  A
    function on a countable space must declare a limit for every end so
    that pairing with end charges is defined.
    """

    space: StateSpace
    window: dict[int, float] = field(default_factory=dict)
    default: float = 0.0
    end_limits: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        _check_states(self.space, self.window, "function window")
        for e in self.end_limits:
            if not self.space.has_end(e):
                raise DomainError(f"function references unknown end {e!r}")
        for e in self.space.end_ids():
            if e not in self.end_limits:
                raise DomainError(f"function must declare a limit at end {e!r}")
        object.__setattr__(
            self, "window", {int(k): float(v) for k, v in self.window.items()}
        )

    def value(self, x: int) -> float:
        if x in self.window:
            return self.window[x]
        if self.space.is_finite:
            return self.default
        hi = max(self.window) if self.window else None
        lo = min(self.window) if self.window else None
        if self.space.support == "N":
            if hi is None or x > hi:
                return self.end_limits[END_POS]
            return self.default
        if hi is None:  # empty window on Z: split regions at the origin
            return self.end_limits[END_POS if x >= 0 else END_NEG]
        if x > hi:
            return self.end_limits[END_POS]
        if x < lo:
            return self.end_limits[END_NEG]
        return self.default

    def sup_norm(self) -> float:
        vals = [abs(v) for v in self.window.values()]
        vals.append(abs(self.default))
        vals += [abs(v) for v in self.end_limits.values()]
        return max(vals)


def pair(mu: FAMeasure, f: BoundedFunction) -> float:
    """Integral pairing <mu, f>: atoms against values, end charges against limits."""
    _same_space(mu, f)
    parts = [w * f.value(x) for x, w in sorted(mu.atoms.items())]
    for e in sorted(mu.ends):
        if e not in f.end_limits:
            raise DomainError(f"function has no limit at end {e!r}")
        parts.append(mu.ends[e] * f.end_limits[e])
    return math.fsum(parts)


# -- decompositions -----------------------------------------------------------

def jordan_decompose(mu: FAMeasure) -> tuple[FAMeasure, FAMeasure]:
    """Split into positive and negative parts, componentwise.

    ``mu = pos - neg`` exactly, and the total variation of ``mu`` equals
    ``pos(X) + neg(X)``.
    """
    pos = FAMeasure(
        mu.space,
        {k: v for k, v in mu.atoms.items() if v > 0.0},
        {k: v for k, v in mu.ends.items() if v > 0.0},
    )
    neg = FAMeasure(
        mu.space,
        {k: -v for k, v in mu.atoms.items() if v < 0.0},
        {k: -v for k, v in mu.ends.items() if v < 0.0},
    )
    return pos, neg


def yosida_hewitt(mu: FAMeasure) -> tuple[FAMeasure, FAMeasure]:
    """Split into the countably additive part (atoms) and the pure-charge part (ends)."""
    return (
        FAMeasure(mu.space, dict(mu.atoms), {}),
        FAMeasure(mu.space, {}, dict(mu.ends)),
    )


# -- lattice structure --------------------------------------------------------

def lattice_inf(mu1: FAMeasure, mu2: FAMeasure) -> FAMeasure:
    """Lattice infimum of two nonnegative measures.

    Closed form in this representation: pointwise min on atoms and on end
    buckets.  Atomic mass and charge mass never overlap, so cross terms
    contribute nothing.  Signed inputs must be routed through their Jordan
    parts by the caller.
    """
    _same_space(mu1, mu2)
    if not (mu1.is_nonnegative() and mu2.is_nonnegative()):
        raise PreconditionError("lattice_inf needs nonnegative measures")
    atoms = {
        k: min(mu1.atoms[k], mu2.atoms[k]) for k in mu1.atoms.keys() & mu2.atoms.keys()
    }
    ends = {k: min(mu1.ends[k], mu2.ends[k]) for k in mu1.ends.keys() & mu2.ends.keys()}
    return FAMeasure(mu1.space, atoms, ends)


def lattice_sup(mu1: FAMeasure, mu2: FAMeasure) -> FAMeasure:
    """sup(a, b) = a + b - inf(a, b) for nonnegative inputs."""
    return mu1 + mu2 - lattice_inf(mu1, mu2)


def lattice_inf_oracle(mu1: FAMeasure, mu2: FAMeasure, ev_set: MeasurableSet) -> float:
    """Brute-force value of the infimum on a set: min over C of mu1(C) + mu2(E \\ C).

    Exact enumeration over every subset C of E; independent of the closed
    form above.  Finite spaces only, capped at ORACLE_STATE_CAP states.
    """
    _same_space(mu1, mu2)
    if not mu1.space.is_finite:
        raise CapacityError("subset oracle needs a finite space")
    n = mu1.space.size
    if n > ORACLE_STATE_CAP:
        raise CapacityError(f"subset oracle capped at {ORACLE_STATE_CAP} states, got {n}")
    members = [x for x in range(n) if ev_set.covers_state(x)]
    k = len(members)
    w1 = np.array([mu1.atoms.get(x, 0.0) for x in members])
    w2 = np.array([mu2.atoms.get(x, 0.0) for x in members])
    s1 = _subset_sums(w1)
    s2 = _subset_sums(w2)
    # complement of submask i within E sits at index (2^k - 1) - i
    return float(np.min(s1 + s2[::-1])) if k else 0.0


def _subset_sums(weights: np.ndarray) -> np.ndarray:
    """Sums over all subsets, indexed by bitmask (doubling construction)."""
    n = weights.size
    sums = np.zeros(1 << n)
    for b in range(n):
        step = 1 << b
        sums[step : 2 * step] = sums[:step] + weights[b]
    return sums


def is_disjoint(mu1: FAMeasure, mu2: FAMeasure, tol: float = 1e-12) -> bool:
    """Lattice infimum vanishes."""
    return lattice_inf(mu1, mu2).total() <= tol


def singularity_witness(
    mu1: FAMeasure, mu2: FAMeasure, tol: float = 1e-12
) -> tuple[MeasurableSet, MeasurableSet] | None:
    """Disjoint full-measure sets (D1, D2) for a singular pair, if they exist.

    Within the finite/co-tail algebra a disjoint nonnegative pair always
    has such a witness: the supports are separated state sets and, for end
    mass, tails chosen beyond every atom of either measure.
    """
    if not (mu1.is_nonnegative(tol) and mu2.is_nonnegative(tol)):
        raise PreconditionError("singularity needs nonnegative measures")
    if not is_disjoint(mu1, mu2, tol):
        return None
    space = mu1.space
    all_atoms = set(mu1.atoms) | set(mu2.atoms)
    hi = max(all_atoms, default=0)
    lo = min(all_atoms, default=0)

    def support(mu: FAMeasure) -> MeasurableSet:
        tails = []
        for e in mu.ends:
            d = space.end(e).direction
            tails.append((e, hi if d > 0 else lo))
        return measurable(space, atoms=set(mu.atoms), tails=tails)

    return support(mu1), support(mu2)
