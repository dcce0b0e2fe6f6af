"""Exact single-layer QAOA on diagonal cost operators.

States are dense complex amplitude vectors over the 2^n computational
basis.  Basis index z encodes the assignment through the package-wide
convention: bit i of z gives variable i, bit value 0 meaning spin +1.

The circuit is one phase layer under a diagonal cost operator followed
by one layer of independent single-variable rotations; expectation
values are always taken of the full constraint sum, whatever operator
drove the evolution.
"""

from __future__ import annotations

from typing import Sequence, Union

import numpy as np

from . import CapacityError
from .csp import Instance

#: Default ceiling on state-vector width (2^24 amplitudes is ~256 MiB).
DEFAULT_QUBIT_CAP = 24

#: Parity matrices are cached for reuse across same-scope operators only
#: up to this width; beyond it the values are recomputed on demand.
_PARITY_MATRIX_MAX_QUBITS = 16


def _check_cap(n: int, cap: int):
    if not 1 <= n <= cap:
        raise CapacityError(f"n={n} outside the supported range [1, {cap}]")


def _parity_signs(n: int, mask: int, z: np.ndarray | None = None) -> np.ndarray:
    """(-1)^popcount(z & mask) over all basis indices z."""
    if z is None:
        z = np.arange(1 << n, dtype=np.uint64)
    odd = np.bitwise_count(z & np.uint64(mask)) & np.uint64(1)
    return 1.0 - 2.0 * odd.astype(np.float64)


class CostOperator:
    """Diagonal operator: a merged list of (variable-subset mask, weight) terms.

    Duplicate masks are merged by summing weights and empty-set terms are
    folded into `constant_offset`, which never enters evolution (it is a
    global phase) but is reported with expectation values.
    """

    def __init__(self, n: int, terms: Sequence[tuple[int, float]], constant_offset: float = 0.0):
        if n < 1:
            raise ValueError("n must be >= 1")
        merged: dict[int, float] = {}
        offset = float(constant_offset)
        for mask, weight in terms:
            mask = int(mask)
            if mask < 0 or mask >> n:
                raise ValueError(f"term mask {mask} out of range for n={n}")
            if mask == 0:
                offset += float(weight)
            else:
                merged[mask] = merged.get(mask, 0.0) + float(weight)
        self.n = int(n)
        self.masks = np.array(sorted(merged), dtype=np.uint64)
        self.weights = np.array([merged[int(m)] for m in self.masks])
        self.constant_offset = offset
        self._cache: dict = {}

    @property
    def num_terms(self) -> int:
        return self.masks.size

    def with_weights(self, weights: Sequence[float]) -> "CostOperator":
        """Same masks, new weights; sibling operators share the parity cache."""
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != self.masks.shape:
            raise ValueError("weight vector must match the term count")
        out = CostOperator.__new__(CostOperator)
        out.n = self.n
        out.masks = self.masks
        out.weights = weights.copy()
        out.constant_offset = self.constant_offset
        out._cache = {}
        parity = self._ensure_parity()
        if parity is not None:
            out._cache["parity"] = parity
        return out

    def _ensure_parity(self) -> np.ndarray | None:
        if self.n <= _PARITY_MATRIX_MAX_QUBITS and "parity" not in self._cache:
            z = np.arange(1 << self.n, dtype=np.uint64)
            mat = np.empty((self.masks.size, z.size))
            for row, mask in enumerate(self.masks):
                mat[row] = _parity_signs(self.n, int(mask), z)
            self._cache["parity"] = mat
        return self._cache.get("parity")

    def values(self) -> np.ndarray:
        """C(z) over all basis indices, excluding the constant offset."""
        if "values" not in self._cache:
            parity = self._ensure_parity()
            if parity is not None:
                vals = self.weights @ parity
            else:
                vals = np.zeros(1 << self.n)
                z = np.arange(1 << self.n, dtype=np.uint64)
                for mask, w in zip(self.masks, self.weights):
                    vals += w * _parity_signs(self.n, int(mask), z)
            self._cache["values"] = vals
        return self._cache["values"]

    def value_at(self, assignments: np.ndarray) -> np.ndarray:
        """Evaluate C (offset included) on +/-1 assignment rows."""
        assignments = np.atleast_2d(np.asarray(assignments))
        out = np.full(assignments.shape[0], self.constant_offset)
        for mask, w in zip(self.masks, self.weights):
            cols = [i for i in range(self.n) if (int(mask) >> i) & 1]
            out += w * np.prod(assignments[:, cols], axis=1)
        return out


class QaoaState:
    """Unit-norm amplitude vector over n variables."""

    def __init__(self, n: int, amplitudes: np.ndarray):
        amplitudes = np.asarray(amplitudes, dtype=np.complex128)
        if amplitudes.shape != (1 << n,):
            raise ValueError(f"expected {1 << n} amplitudes, got {amplitudes.shape}")
        norm_sq = float(np.sum(np.abs(amplitudes) ** 2))
        if abs(norm_sq - 1.0) > 1e-6:
            raise ValueError(f"state norm^2 is {norm_sq}, not 1")
        amplitudes = amplitudes.copy()
        amplitudes.setflags(write=False)
        self.n = int(n)
        self.amplitudes = amplitudes

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))


def build_cost(instance: Instance, policy: str) -> CostOperator:
    """Assemble the evolution operator from an instance.

    policy="full" keeps every nonconstant term of every predicate;
    policy="truncated" keeps a single highest-degree term per constraint
    (ties broken by the numerically smallest global mask).  Either way,
    same-mask terms from different constraints merge by weight summation
    and all constant terms land in the offset.
    """
    if policy not in ("full", "truncated"):
        raise ValueError(f"policy must be 'full' or 'truncated', got {policy!r}")
    terms: list[tuple[int, float]] = []
    offset = 0.0
    for c in instance.constraints:
        offset += c.predicate.mean()
        nonconst = [(c.global_mask(mask), mask.bit_count(), value) for mask, value in c.predicate.items() if mask]
        if not nonconst:
            continue
        if policy == "full":
            terms.extend((gmask, value) for gmask, _, value in nonconst)
        else:
            top = max(size for _, size, _ in nonconst)
            gmask, _, value = min(
                (entry for entry in nonconst if entry[1] == top), key=lambda e: e[0]
            )
            terms.append((gmask, value))
    return CostOperator(instance.n, terms, offset)


def uniform_state(n: int, cap: int = DEFAULT_QUBIT_CAP) -> QaoaState:
    """The uniform superposition: every amplitude 2^(-n/2)."""
    _check_cap(n, cap)
    return QaoaState(n, np.full(1 << n, 2.0 ** (-n / 2), dtype=np.complex128))


def apply_phase(state: QaoaState, cost: CostOperator, gamma: float) -> QaoaState:
    """Multiply each amplitude by exp(-i * gamma * C(z)); offset omitted (global phase)."""
    if cost.n != state.n:
        raise ValueError(f"operator on {cost.n} variables, state on {state.n}")
    return QaoaState(state.n, state.amplitudes * np.exp(-1j * gamma * cost.values()))


def apply_mixer(state: QaoaState, beta: float) -> QaoaState:
    """Apply exp(-i * beta * X) independently on every variable."""
    c, s = np.cos(beta), np.sin(beta)
    a = state.amplitudes.reshape([2] * state.n)
    for axis in range(state.n):
        a0 = np.take(a, 0, axis=axis)
        a1 = np.take(a, 1, axis=axis)
        a = np.stack((c * a0 - 1j * s * a1, c * a1 - 1j * s * a0), axis=axis)
    return QaoaState(state.n, a.reshape(-1))


def qaoa_state(cost: CostOperator, beta: float, gamma: float, cap: int = DEFAULT_QUBIT_CAP) -> QaoaState:
    """One full layer: uniform start, phase under `cost`, then the mixer."""
    return apply_mixer(apply_phase(uniform_state(cost.n, cap=cap), cost, gamma), beta)


def expectation_of_cost(state: QaoaState, cost: CostOperator) -> float:
    """<state| C |state> including the constant offset."""
    if cost.n != state.n:
        raise ValueError(f"operator on {cost.n} variables, state on {state.n}")
    return float(state.probabilities() @ cost.values()) + cost.constant_offset


def expectation(state: QaoaState, instance: Instance) -> float:
    """Expected number of satisfied constraints (the full objective, always)."""
    return expectation_of_cost(state, build_cost(instance, "full"))


def per_constraint_expectation(state: QaoaState, instance: Instance) -> np.ndarray:
    """Expectation of each constraint separately; entries sum to the total."""
    if instance.n != state.n:
        raise ValueError(f"instance on {instance.n} variables, state on {state.n}")
    probs = state.probabilities()
    z = np.arange(1 << state.n, dtype=np.uint64)
    out = np.zeros(instance.m)
    for idx, c in enumerate(instance.constraints):
        total = 0.0
        for mask, value in c.predicate.items():
            if mask == 0:
                total += value
            else:
                total += value * float(probs @ _parity_signs(state.n, c.global_mask(mask), z))
        out[idx] = total
    return out


def sample(state: QaoaState, shots: int, seed) -> np.ndarray:
    """Draw assignments from |amplitude|^2; rows are +/-1 vectors of length n."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    cdf = np.cumsum(state.probabilities())
    cdf[-1] = 1.0
    z = np.searchsorted(cdf, rng.random(shots)).astype(np.uint64)
    bits = (z[:, None] >> np.arange(state.n, dtype=np.uint64)) & np.uint64(1)
    return (1 - 2 * bits.astype(np.int8)).astype(np.int8)


def best_of(samples: np.ndarray, instance: Instance) -> tuple[tuple[int, ...], float]:
    """Highest-scoring sampled assignment under the full objective."""
    op = build_cost(instance, "full")
    scores = op.value_at(samples)
    idx = int(np.argmax(scores))
    return tuple(int(v) for v in samples[idx]), float(scores[idx])


def _objective_values(obj: Union[Instance, CostOperator]) -> tuple[np.ndarray, float, int]:
    if isinstance(obj, Instance):
        op = build_cost(obj, "full")
    else:
        op = obj
    return op.values(), op.constant_offset, op.n


def brute_force_optimum(
    obj: Union[Instance, CostOperator], minimize: bool = False, cap: int = DEFAULT_QUBIT_CAP
) -> tuple[tuple[int, ...], float]:
    """Exhaustive extremum of the objective over all 2^n assignments."""
    values, offset, n = _objective_values(obj)
    _check_cap(n, cap)
    z = int(np.argmin(values) if minimize else np.argmax(values))
    assignment = tuple(1 - 2 * ((z >> i) & 1) for i in range(n))
    return assignment, float(values[z]) + offset
