"""Classical baselines.

`run_greedy` is the random-partition algorithm: variables split into a
fixed half F (assigned uniformly at random) and a greedy half G, each
greedy variable then chosen by the sign of the summed discrete
derivatives of the constraints that touch G exactly at that variable.
`conditional_expectations` is the deterministic benchmark that fixes
variables one at a time and never drops below the random-assignment
baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boolfn import MultilinearPoly
from .csp import Instance


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


@dataclass(frozen=True)
class Partition:
    """Greedy/fixed split plus the random assignment of the fixed half.

    `values` holds +/-1 entries for every variable; positions where
    `in_greedy` is True are provisional (an independent uniform draw,
    kept only if no active constraint ever scores that variable).
    """

    in_greedy: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.in_greedy.shape != self.values.shape:
            raise ValueError("mask and value arrays must align")


@dataclass(frozen=True)
class ActiveSet:
    """Constraints touching the greedy half exactly at one variable j.

    `members` lists (constraint index, local position of j) pairs and
    `derivatives` the matching local derivative polynomials; their sum,
    evaluated on the fixed half, is the score for x_j, and `theta` is
    that sum's mean over uniform inputs.
    """

    j: int
    members: tuple[tuple[int, int], ...]
    derivatives: tuple[MultilinearPoly, ...]
    theta: float


def draw_partition(n: int, rng: np.random.Generator) -> Partition:
    in_greedy = rng.random(n) < 0.5
    values = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    return Partition(in_greedy, values)


def active_sets(instance: Instance, partition: Partition) -> dict[int, ActiveSet]:
    """Group active constraints by their unique greedy variable."""
    per_var: dict[int, list[tuple[int, int]]] = {}
    for idx, c in enumerate(instance.constraints):
        greedy_positions = [pos for pos, v in enumerate(c.scope) if partition.in_greedy[v]]
        if len(greedy_positions) != 1:
            continue
        pos = greedy_positions[0]
        per_var.setdefault(c.scope[pos], []).append((idx, pos))
    out = {}
    for j, members in per_var.items():
        derivs = tuple(
            instance.constraints[idx].predicate.derivative(pos) for idx, pos in members
        )
        theta = float(sum(d.mean() for d in derivs))
        out[j] = ActiveSet(j, tuple(members), derivs, theta)
    return out


def run_with_partition(
    instance: Instance, partition: Partition, rng: np.random.Generator
) -> np.ndarray:
    """Complete a partition into a full assignment by derivative signs."""
    x = partition.values.copy()
    for j, act in sorted(active_sets(instance, partition).items()):
        score = -act.theta
        for (idx, _), deriv in zip(act.members, act.derivatives):
            scope = instance.constraints[idx].scope
            score += deriv.evaluate([x[v] for v in scope])
        if score > 0:
            x[j] = 1.0
        elif score < 0:
            x[j] = -1.0
        else:
            # sign(0) resolved by an independent fair coin, keeping the
            # chosen value mean-free
            x[j] = 1.0 if rng.random() < 0.5 else -1.0
    return x


def run_greedy(instance: Instance, seed) -> tuple[tuple[int, ...], float]:
    """Draw a partition, complete it greedily, and score the result."""
    rng = _rng(seed)
    partition = draw_partition(instance.n, rng)
    x = run_with_partition(instance, partition, rng)
    return tuple(int(v) for v in x), instance.count_satisfied(x)


def conditional_expectations(instance: Instance) -> tuple[tuple[int, ...], float]:
    """Fix variables in index order, each maximizing the exact conditional mean.

    A monomial conditions to the product of its fixed values when fully
    fixed and to zero otherwise, so the conditional mean never decreases
    and the final value is at least mu * m on every instance.
    """
    n = instance.n
    x = np.zeros(n)
    by_var: dict[int, list[tuple[int, int]]] = {}
    for idx, c in enumerate(instance.constraints):
        for pos, v in enumerate(c.scope):
            by_var.setdefault(v, []).append((idx, pos))
    for v in range(n):
        delta = 0.0
        for idx, pos in by_var.get(v, ()):
            c = instance.constraints[idx]
            bit = 1 << pos
            for mask, value in c.predicate.items():
                if not mask & bit:
                    continue
                rest = mask & ~bit
                prod = value
                fixed = True
                mm = rest
                while mm:
                    p = (mm & -mm).bit_length() - 1
                    other = c.scope[p]
                    if other >= v:
                        fixed = False
                        break
                    prod *= x[other]
                    mm &= mm - 1
                if fixed:
                    delta += prod
        x[v] = 1.0 if delta >= 0 else -1.0
    return tuple(int(s) for s in x), instance.count_satisfied(x)
