"""Closed-form single-layer expectations for the tractable regimes.

These formulas serve two roles: fast evaluation of ensemble means on
large instances, and independent oracles against the state-vector
simulator.  All angles are radians; `g` is the dimensionless scale in
gamma = g / sqrt(D), where D is the excess degree (cap minus one).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from scipy import optimize

from .csp import Instance


@dataclass(frozen=True)
class AnglePlan:
    """Fixed mixing angle plus a degree-scaled phase angle."""

    beta: float
    g: float
    excess_degree: int

    def __post_init__(self):
        if self.excess_degree < 1:
            raise ValueError("excess degree must be >= 1")

    @property
    def gamma(self) -> float:
        return self.g / math.sqrt(self.excess_degree)


def avg_advantage_2xor(
    edge_excess_degrees: Iterable[tuple[int, int]], beta: float, gamma: float
) -> float:
    """Exact sign-ensemble mean of the total advantage for +/-1/2 pair constraints.

    Each entry (D1, D2) counts the OTHER edges at the two endpoints of one
    edge.  Averaged over independent uniform signs, the edge contributes

        (1/2) sin(2 beta) cos(2 beta) sin(gamma) (cos(gamma)^D1 + cos(gamma)^D2)

    to the mean of <total satisfied> - m/2, with no finite-degree error:
    the sign average kills the cross term and the remaining factor is
    sign-independent.
    """
    trig = 0.5 * math.sin(2 * beta) * math.cos(2 * beta) * math.sin(gamma)
    cg = math.cos(gamma)
    total = 0.0
    for d1, d2 in edge_excess_degrees:
        if d1 < 0 or d2 < 0:
            raise ValueError("excess degrees must be nonnegative")
        total += trig * (cg**d1 + cg**d2)
    return total


def optimal_g_2xor() -> tuple[float, float]:
    """Argmax and maximum of (g/2) exp(-g^2/2), the large-degree edge prefactor."""
    res = optimize.minimize_scalar(
        lambda g: -0.5 * g * math.exp(-0.5 * g * g),
        bounds=(1e-9, 4.0),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return float(res.x), float(-res.fun)


def _covering_weight(instance: Instance, idx: int) -> float:
    c = instance.constraints[idx]
    full = (1 << c.arity) - 1
    stray = [mask for mask, _ in c.predicate.items() if mask not in (0, full)]
    if stray or c.predicate.coeff(full) == 0.0:
        raise ValueError(
            f"constraint {idx} is not a constant plus a single scope-covering monomial"
        )
    return c.predicate.coeff(full)


def no_overlap_term_expectation(instance: Instance, u: int, beta: float, gamma: float) -> float:
    """Advantage contribution of constraint u on a no-overlap instance.

    Requires pairwise scope overlaps of at most one variable and
    predicates of the form constant + weight * (product over the scope).
    Writing w_l for the weights and G_u(t) for the other constraints
    through variable t of scope u, the contribution of u is

        w_u sin(2 gamma w_u) * sum over odd-size subsets T of scope u of
        s(|T|) cos(2 beta)^(k-|T|) sin(2 beta)^|T|
             * prod_{t in T} prod_{l in G_u(t)} cos(2 gamma w_l)

    with s(q) = +1 for q = 1 mod 4 and -1 for q = 3 mod 4.  The sign
    s(q) is the alternating unit left over once the commutator algebra
    is reduced to real factors.  On instances that additionally satisfy
    `csp.has_gf2_independent_neighborhoods`, this value agrees with the
    state vector to machine precision; otherwise dropped phase
    cross-terms enter at order 1/D.
    """
    if not 0 <= u < instance.m:
        raise ValueError(f"constraint index {u} out of range")
    if not instance.check_no_overlap():
        raise ValueError("instance has overlapping constraints")
    weights = [_covering_weight(instance, l) for l in range(instance.m)]
    scopes = instance.scopes()
    scope_u = scopes[u]
    k = len(scope_u)
    # cos factors accumulated per variable of scope u
    per_var = {}
    for t in scope_u:
        prod = 1.0
        for l, scope in enumerate(scopes):
            if l != u and t in scope:
                prod *= math.cos(2 * gamma * weights[l])
        per_var[t] = prod
    cos2b, sin2b = math.cos(2 * beta), math.sin(2 * beta)
    total = 0.0
    for q in range(1, k + 1, 2):
        sign = 1.0 if q % 4 == 1 else -1.0
        for subset in itertools.combinations(scope_u, q):
            prod = 1.0
            for t in subset:
                prod *= per_var[t]
            total += sign * cos2b ** (k - q) * sin2b**q * prod
    w_u = weights[u]
    return w_u * math.sin(2 * gamma * w_u) * total


def predicted_advantage_lower_bound(
    k_u: int, var_u: float, max_var: float, beta: float, g: float
) -> float:
    """Degree-free coefficient bounding one constraint's mean advantage.

    The true ensemble mean advantage of an arity-k_u constraint with
    weight variance var_u, at angles (beta, g / sqrt(D)), is at least
    this value divided by sqrt(D), up to order-1/D corrections:

        2 g var_u [ cos(2b)^(k-1) sin(2b) k exp(-2 g^2 max_var)
                    - sum_{q odd >= 3} |cos(2b)^(k-q) sin(2b)^q| C(k, q) ]
    """
    if k_u < 1:
        raise ValueError("k_u must be >= 1")
    if var_u <= 0 or max_var <= 0:
        raise ValueError("variances must be positive")
    cos2b, sin2b = math.cos(2 * beta), math.sin(2 * beta)
    main = cos2b ** (k_u - 1) * sin2b * k_u * math.exp(-2 * g * g * max_var)
    penalty = sum(
        abs(cos2b ** (k_u - q) * sin2b**q) * math.comb(k_u, q) for q in range(3, k_u + 1, 2)
    )
    return 2 * g * var_u * (main - penalty)


def optimize_beta(k: int, g: float, max_var: float) -> float:
    """Mixing angle in (0, pi/4) maximizing the advantage lower bound."""
    res = optimize.minimize_scalar(
        lambda b: -predicted_advantage_lower_bound(k, 1.0, max_var, b, g),
        bounds=(1e-9, math.pi / 4),
        method="bounded",
        options={"xatol": 1e-8},
    )
    return float(res.x)


def optimize_beta_mixed(
    arity_variance_pairs: Sequence[tuple[int, float]], g: float, max_var: float
) -> float:
    """Single mixing angle for a mixed-arity instance.

    A one-layer circuit has one beta, so for instances mixing arities we
    maximize the SUM of the per-constraint lower bounds.
    """
    if not arity_variance_pairs:
        raise ValueError("need at least one (arity, variance) pair")

    def neg_total(b):
        return -sum(
            predicted_advantage_lower_bound(k, var, max_var, b, g)
            for k, var in arity_variance_pairs
        )

    res = optimize.minimize_scalar(
        neg_total, bounds=(1e-9, math.pi / 4), method="bounded", options={"xatol": 1e-8}
    )
    return float(res.x)
