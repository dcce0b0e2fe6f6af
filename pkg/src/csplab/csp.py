"""CSP instances over +/-1 variables.

An instance is a list of constraints, each a predicate polynomial applied
to an ordered scope of distinct variables.  Scopes are distinct as sets,
and a declared degree cap bounds how many constraints any one variable
appears in.  Instances are immutable; all generators take an explicit
seed and are pure functions of it.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import GenerationError
from .boolfn import MultilinearPoly, fourier_transform

#: Total rejection-sampling budget is this factor times the requested
#: number of scopes.
GENERATION_BUDGET_FACTOR = 1000


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# predicate ensembles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PredicateDistribution:
    """Finite distribution over predicates of a common arity."""

    arity: int
    items: tuple[tuple[MultilinearPoly, float], ...]

    def __post_init__(self):
        if not self.items:
            raise ValueError("distribution needs at least one predicate")
        for poly, prob in self.items:
            if poly.arity != self.arity:
                raise ValueError("all predicates must share the distribution arity")
            if prob < 0:
                raise ValueError("probabilities must be nonnegative")
        total = sum(prob for _, prob in self.items)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total}, expected 1")

    def mean_coeffs(self) -> np.ndarray:
        """Probability-weighted average of the coefficient vectors."""
        acc = np.zeros(1 << self.arity)
        for poly, prob in self.items:
            acc += prob * poly.coeffs
        return acc

    def is_typical(self, tol: float = 1e-12) -> bool:
        """True when every nonconstant coefficient averages to zero.

        Ensembles with this property look like a fixed constant plus
        zero-mean noise, which is what makes the fixed-angle quantum and
        greedy advantages kick in.
        """
        return bool(np.max(np.abs(self.mean_coeffs()[1:]), initial=0.0) <= tol)

    def sample(self, rng: np.random.Generator) -> MultilinearPoly:
        probs = np.array([p for _, p in self.items])
        idx = rng.choice(len(self.items), p=probs / probs.sum())
        return self.items[idx][0]


def dist_kxor(k: int) -> PredicateDistribution:
    """Parity constraints: 1/2 +/- 1/2 * x_0...x_{k-1}, each sign with probability 1/2."""
    if k < 1:
        raise ValueError("k must be >= 1")
    full = (1 << k) - 1
    plus = MultilinearPoly.from_dict(k, {0: 0.5, full: 0.5})
    minus = MultilinearPoly.from_dict(k, {0: 0.5, full: -0.5})
    return PredicateDistribution(k, ((plus, 0.5), (minus, 0.5)))


def dist_ksat(k: int) -> PredicateDistribution:
    """OR clauses over k literals, one per sign pattern, uniformly weighted.

    The pattern s in {-1,+1}^k denotes the clause violated exactly at
    x = s; its table is 1 everywhere except that single input.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    items = []
    for signs in itertools.product((1, -1), repeat=k):
        table = np.ones(1 << k)
        bad = sum(1 << j for j, s in enumerate(signs) if s == -1)
        table[bad] = 0.0
        items.append((fourier_transform(table), 2.0**-k))
    return PredicateDistribution(k, tuple(items))


def dist_cut() -> PredicateDistribution:
    """The single cut predicate (1 - x_0 x_1) / 2, satisfied when endpoints differ."""
    poly = MultilinearPoly.from_dict(2, {0: 0.5, 0b11: -0.5})
    return PredicateDistribution(2, ((poly, 1.0),))


# ---------------------------------------------------------------------------
# weight distributions for real-weighted XOR instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightDistribution:
    """Zero-mean weight law for single-monomial constraints."""

    kind: str
    scale: float

    _KINDS = ("rademacher", "uniform", "gaussian")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"kind must be one of {self._KINDS}")
        if self.scale < 0:
            raise ValueError("scale must be nonnegative")

    @classmethod
    def rademacher(cls, w: float) -> "WeightDistribution":
        return cls("rademacher", w)

    @classmethod
    def uniform(cls, w: float) -> "WeightDistribution":
        """Uniform on [-w, w]."""
        return cls("uniform", w)

    @classmethod
    def gaussian(cls, sigma: float) -> "WeightDistribution":
        return cls("gaussian", sigma)

    def variance(self) -> float:
        if self.kind == "rademacher":
            return self.scale**2
        if self.kind == "uniform":
            return self.scale**2 / 3.0
        return self.scale**2

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "rademacher":
            return self.scale * rng.choice((1.0, -1.0), size=size)
        if self.kind == "uniform":
            return rng.uniform(-self.scale, self.scale, size=size)
        return rng.normal(0.0, self.scale, size=size)


# ---------------------------------------------------------------------------
# constraints and instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Constraint:
    """A predicate applied to an ordered scope of distinct variables.

    Nonconstant predicates must depend on every scope coordinate, so a
    scope never carries padded variables.  Fully constant predicates are
    tolerated as the degenerate zero-weight case.
    """

    scope: tuple[int, ...]
    predicate: MultilinearPoly

    def __post_init__(self):
        scope = tuple(int(v) for v in self.scope)
        object.__setattr__(self, "scope", scope)
        if len(set(scope)) != len(scope):
            raise ValueError(f"scope entries must be distinct, got {scope}")
        if self.predicate.arity != len(scope):
            raise ValueError(
                f"predicate arity {self.predicate.arity} != scope length {len(scope)}"
            )
        if not self.predicate.is_constant():
            for pos in range(len(scope)):
                if not self.predicate.depends_on(pos):
                    raise ValueError(f"predicate ignores scope position {pos}")

    @property
    def arity(self) -> int:
        return len(self.scope)

    def global_mask(self, subset_mask: int) -> int:
        """Map a scope-local subset mask onto global variable bits."""
        out = 0
        for pos, var in enumerate(self.scope):
            if (subset_mask >> pos) & 1:
                out |= 1 << var
        return out

    def evaluate(self, assignment: Sequence[float]) -> float:
        return self.predicate.evaluate([assignment[v] for v in self.scope])


@dataclass(frozen=True)
class Instance:
    """n variables, m constraints, and a declared per-variable degree cap."""

    n: int
    constraints: tuple[Constraint, ...]
    max_degree: int

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        seen = set()
        for c in self.constraints:
            key = frozenset(c.scope)
            if key in seen:
                raise ValueError(f"duplicate scope {sorted(key)}")
            seen.add(key)
            if any(not 0 <= v < self.n for v in c.scope):
                raise ValueError(f"scope {c.scope} out of range for n={self.n}")
        profile = self.degree_profile()
        if profile.size and profile.max(initial=0) > self.max_degree:
            raise ValueError(
                f"variable degree {int(profile.max())} exceeds declared cap {self.max_degree}"
            )

    @property
    def m(self) -> int:
        return len(self.constraints)

    @property
    def excess_degree(self) -> int:
        """The declared cap minus one: the D entering every 1/sqrt(D) scaling."""
        return self.max_degree - 1

    def scopes(self) -> list[tuple[int, ...]]:
        return [c.scope for c in self.constraints]

    def degree_profile(self) -> np.ndarray:
        counts = np.zeros(self.n, dtype=np.int64)
        for c in self.constraints:
            for v in c.scope:
                counts[v] += 1
        return counts

    def realized_max_degree(self) -> int:
        return int(self.degree_profile().max(initial=0))

    def mu(self) -> float:
        """Average satisfaction probability of a uniformly random assignment."""
        if not self.constraints:
            return 0.0
        return float(np.mean([c.predicate.mean() for c in self.constraints]))

    def count_satisfied(self, assignment: Sequence[float]) -> float:
        if len(assignment) != self.n:
            raise ValueError(f"assignment length {len(assignment)} != n {self.n}")
        return float(sum(c.evaluate(assignment) for c in self.constraints))

    def check_no_overlap(self) -> bool:
        """True when any two scopes share at most one variable."""
        return check_no_overlap_scopes(self.scopes())


def check_no_overlap_scopes(scopes: Sequence[Sequence[int]]) -> bool:
    pairs = set()
    for scope in scopes:
        for pair in itertools.combinations(sorted(scope), 2):
            if pair in pairs:
                return False
            pairs.add(pair)
    return True


def has_gf2_independent_neighborhoods(scopes: Sequence[Sequence[int]]) -> bool:
    """Check that each scope's incident scopes are GF(2)-independent off it.

    For every scope S, take the variable sets of the other scopes that
    touch S, drop the variables of S from each, and view the results as
    GF(2) vectors.  This returns True when no nonempty subset of them
    XORs to zero, for every S.  On instances with this property (plus
    pairwise overlap at most one), the single-layer closed form in
    `csplab.analytic` is exact instead of leading-order: every phase
    cross-term that the closed form drops vanishes identically.
    """
    masks = [sum(1 << v for v in scope) for scope in scopes]
    for u, mask_u in enumerate(masks):
        basis: list[int] = []
        for l, mask_l in enumerate(masks):
            if l == u or not (mask_l & mask_u):
                continue
            vec = mask_l & ~mask_u
            for b in basis:
                vec = min(vec, vec ^ b)
            if vec == 0:
                return False
            basis.append(vec)
    return True


# ---------------------------------------------------------------------------
# scope-set generators
# ---------------------------------------------------------------------------


def _check_scope_params(n: int, m: int, k: int, max_degree: int):
    if k < 1 or n < k or m < 0 or max_degree < 1:
        raise ValueError(f"bad scope parameters n={n} m={m} k={k} max_degree={max_degree}")
    if m * k > n * max_degree:
        raise GenerationError(
            f"infeasible: {m} scopes of arity {k} cannot fit {n} variables at degree {max_degree}"
        )


def gen_scopes_bounded(n: int, m: int, k: int, max_degree: int, seed) -> list[tuple[int, ...]]:
    """Rejection-sample m distinct k-subsets of [n] under a degree cap."""
    _check_scope_params(n, m, k, max_degree)
    rng = _rng(seed)
    degrees = np.zeros(n, dtype=np.int64)
    seen: set[tuple[int, ...]] = set()
    scopes: list[tuple[int, ...]] = []
    budget = GENERATION_BUDGET_FACTOR * max(m, 1)
    while len(scopes) < m and budget > 0:
        budget -= 1
        cand = tuple(sorted(int(v) for v in rng.choice(n, size=k, replace=False)))
        if cand in seen or any(degrees[v] >= max_degree for v in cand):
            continue
        seen.add(cand)
        scopes.append(cand)
        for v in cand:
            degrees[v] += 1
    if len(scopes) < m:
        raise GenerationError(f"placed only {len(scopes)}/{m} scopes within budget")
    return scopes


def gen_scopes_no_overlap(n: int, m: int, k: int, max_degree: int, seed) -> list[tuple[int, ...]]:
    """Like `gen_scopes_bounded`, but any two scopes share at most one variable."""
    _check_scope_params(n, m, k, max_degree)
    rng = _rng(seed)
    degrees = np.zeros(n, dtype=np.int64)
    used_pairs: set[tuple[int, int]] = set()
    scopes: list[tuple[int, ...]] = []
    budget = GENERATION_BUDGET_FACTOR * max(m, 1)
    while len(scopes) < m and budget > 0:
        budget -= 1
        cand = tuple(sorted(int(v) for v in rng.choice(n, size=k, replace=False)))
        if any(degrees[v] >= max_degree for v in cand):
            continue
        pairs = list(itertools.combinations(cand, 2))
        if any(p in used_pairs for p in pairs):
            continue
        if k == 1 and cand in (tuple(s) for s in scopes):
            continue
        scopes.append(cand)
        used_pairs.update(pairs)
        for v in cand:
            degrees[v] += 1
    if len(scopes) < m:
        raise GenerationError(f"placed only {len(scopes)}/{m} non-overlapping scopes within budget")
    return scopes


def gen_scopes_clique(q: int) -> list[tuple[int, ...]]:
    """All q(q-1)/2 edges on q vertices: the worst-case control structure."""
    if q < 2:
        raise ValueError("clique size must be >= 2")
    return list(itertools.combinations(range(q), 2))


def gen_scopes_circulant(n: int, degree: int) -> list[tuple[int, ...]]:
    """Edges of a circulant graph where every vertex has the given degree.

    Uses offsets 1..degree//2, plus the antipodal offset n/2 when the
    degree is odd (which requires even n).  Handy for exactly regular
    ensembles.
    """
    if not 1 <= degree < n:
        raise ValueError(f"degree must be in [1, n), got {degree}")
    if degree % 2 == 1 and n % 2 == 1:
        raise ValueError("odd degree needs an even vertex count")
    edges = set()
    for off in range(1, degree // 2 + 1):
        for v in range(n):
            edges.add(tuple(sorted((v, (v + off) % n))))
    if degree % 2 == 1:
        for v in range(n // 2):
            edges.add(tuple(sorted((v, v + n // 2))))
    out = sorted(edges)
    if any(sum(1 for e in out if v in e) != degree for v in range(n)):
        raise ValueError(f"circulant offsets collide for n={n} degree={degree}")
    return out


# ---------------------------------------------------------------------------
# constraint sampling
# ---------------------------------------------------------------------------


def _declared_degree(scopes, max_degree) -> int:
    if max_degree is not None:
        return int(max_degree)
    counts: dict[int, int] = {}
    for scope in scopes:
        for v in scope:
            counts[v] = counts.get(v, 0) + 1
    return max(counts.values(), default=1)


def sample_instance(scopes, dist, seed, *, n=None, max_degree=None) -> Instance:
    """Draw one predicate per scope, independently, from the distribution.

    `dist` is either a single PredicateDistribution or one per scope for
    mixed-arity instances.
    """
    scopes = [tuple(s) for s in scopes]
    dists = list(dist) if isinstance(dist, (list, tuple)) else [dist] * len(scopes)
    if len(dists) != len(scopes):
        raise ValueError(f"{len(dists)} distributions for {len(scopes)} scopes")
    for scope, d in zip(scopes, dists):
        if d.arity != len(scope):
            raise ValueError(f"distribution arity {d.arity} != scope arity {len(scope)}")
    rng = _rng(seed)
    constraints = tuple(Constraint(s, d.sample(rng)) for s, d in zip(scopes, dists))
    n = int(n) if n is not None else 1 + max((v for s in scopes for v in s), default=-1)
    return Instance(n, constraints, _declared_degree(scopes, max_degree))


def sample_weighted_xor(
    scopes, wdist: WeightDistribution, seed, *, mu: float = 0.0, n=None, max_degree=None
) -> Instance:
    """One scope-covering monomial per constraint, weights drawn independently."""
    scopes = [tuple(s) for s in scopes]
    rng = _rng(seed)
    weights = wdist.sample(rng, len(scopes))
    constraints = []
    for scope, w in zip(scopes, weights):
        k = len(scope)
        poly = MultilinearPoly.from_dict(k, {0: mu, (1 << k) - 1: float(w)})
        constraints.append(Constraint(scope, poly))
    n = int(n) if n is not None else 1 + max((v for s in scopes for v in s), default=-1)
    return Instance(n, tuple(constraints), _declared_degree(scopes, max_degree))


# ---------------------------------------------------------------------------
# serialization (the on-disk instance format)
# ---------------------------------------------------------------------------


def instance_to_dict(instance: Instance) -> dict:
    return {
        "n": instance.n,
        "max_degree": instance.max_degree,
        "constraints": [
            {
                "scope": list(c.scope),
                "coeffs": [
                    {"subset_mask": mask, "value": value} for mask, value in c.predicate.items()
                ],
            }
            for c in instance.constraints
        ],
    }


def instance_from_dict(data: dict) -> Instance:
    constraints = []
    for entry in data["constraints"]:
        scope = tuple(int(v) for v in entry["scope"])
        coeffs = {int(c["subset_mask"]): float(c["value"]) for c in entry["coeffs"]}
        constraints.append(Constraint(scope, MultilinearPoly.from_dict(len(scope), coeffs)))
    return Instance(int(data["n"]), tuple(constraints), int(data["max_degree"]))


def save_instance(instance: Instance, path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(instance), fh, indent=2)
        fh.write("\n")


def load_instance(path) -> Instance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))
