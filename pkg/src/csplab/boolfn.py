"""Real multilinear polynomials on {-1,+1}^k.

A function f: {-1,+1}^k -> R has a unique expansion

    f(x) = sum over subsets K of [k] of  c(K) * prod_{j in K} x_j

and this module stores such functions as the dense vector of the 2^k
coefficients c(K), indexed by the subset bitmask K (bit j set means
coordinate j is in the subset).

Conventions, fixed once for the whole package:

* coordinates are 0-based;
* a truth table of length 2^k lists f over all inputs in index order,
  where bit j of the table index encodes x_j, with bit value 0 meaning
  x_j = +1 and bit value 1 meaning x_j = -1.

Everything here is immutable and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np

#: Arity guard for the dense 2^k coefficient layout.
MAX_ARITY = 8


def _walsh_sums(values: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh correlations: out[K] = sum_z f(z) * (-1)^popcount(z & K)."""
    out = values.astype(np.float64).copy()
    half = 1
    while half < out.size:
        out = out.reshape(-1, 2 * half)
        lo = out[:, :half].copy()
        hi = out[:, half:].copy()
        out[:, :half] = lo + hi
        out[:, half:] = lo - hi
        half *= 2
    return out.reshape(-1)


@dataclass(frozen=True, eq=False)
class MultilinearPoly:
    """Dense multilinear polynomial over {-1,+1}^arity."""

    arity: int
    coeffs: np.ndarray

    def __post_init__(self):
        if not 0 <= self.arity <= MAX_ARITY:
            raise ValueError(f"arity must be in [0, {MAX_ARITY}], got {self.arity}")
        arr = np.asarray(self.coeffs, dtype=np.float64)
        if arr.shape != (1 << self.arity,):
            raise ValueError(
                f"expected {1 << self.arity} coefficients for arity {self.arity}, got shape {arr.shape}"
            )
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @classmethod
    def from_dict(cls, arity: int, coeffs: Mapping[int, float]) -> "MultilinearPoly":
        """Build from a sparse {subset_mask: coefficient} mapping."""
        dense = np.zeros(1 << arity)
        for mask, value in coeffs.items():
            if not 0 <= mask < dense.size:
                raise ValueError(f"subset mask {mask} out of range for arity {arity}")
            dense[mask] = value
        return cls(arity, dense)

    @classmethod
    def zero(cls, arity: int) -> "MultilinearPoly":
        return cls(arity, np.zeros(1 << arity))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MultilinearPoly)
            and self.arity == other.arity
            and np.array_equal(self.coeffs, other.coeffs)
        )

    def coeff(self, mask: int) -> float:
        return float(self.coeffs[mask])

    def items(self) -> Iterator[tuple[int, float]]:
        """Nonzero (subset_mask, coefficient) pairs in mask order."""
        for mask in np.nonzero(self.coeffs)[0]:
            yield int(mask), float(self.coeffs[mask])

    def evaluate(self, x: Sequence[float]) -> float:
        """Evaluate at a single +/-1 input of length `arity`."""
        if len(x) != self.arity:
            raise ValueError(f"input length {len(x)} != arity {self.arity}")
        total = 0.0
        for mask, c in self.items():
            prod = c
            m = mask
            while m:
                j = (m & -m).bit_length() - 1
                prod *= x[j]
                m &= m - 1
            total += prod
        return total

    def truth_table(self) -> np.ndarray:
        """Values over all 2^arity inputs, in the package-wide index order."""
        # The synthesis direction of the transform is the same butterfly,
        # without the 2^-k normalization.
        return _walsh_sums(self.coeffs)

    def derivative(self, j: int) -> "MultilinearPoly":
        """Discrete derivative in coordinate j.

        The result carries coefficient c(K | {j}) on each subset K not
        containing j, so that f(x) = x_j * (d_j f)(x) + (terms without j).
        The returned polynomial does not mention coordinate j.
        """
        if not 0 <= j < self.arity:
            raise ValueError(f"coordinate {j} out of range for arity {self.arity}")
        bit = 1 << j
        out = np.zeros_like(self.coeffs)
        masks = np.arange(self.coeffs.size)
        without = masks[(masks & bit) == 0]
        out[without] = self.coeffs[without | bit]
        return MultilinearPoly(self.arity, out)

    def decompose_at(self, j: int) -> tuple["MultilinearPoly", "MultilinearPoly", float]:
        """Split as f(x) = x_j * Q(x) + R(x) + c with R having zero mean.

        Q is the derivative in j, c is the constant coefficient, and R
        collects the remaining terms that avoid j.
        """
        q = self.derivative(j)
        rest = np.array(self.coeffs)
        bit = 1 << j
        masks = np.arange(rest.size)
        rest[(masks & bit) != 0] = 0.0
        c = rest[0]
        rest[0] = 0.0
        return q, MultilinearPoly(self.arity, rest), float(c)

    def mean(self) -> float:
        """Expectation over a uniform +/-1 input: the constant coefficient."""
        return float(self.coeffs[0])

    def variance(self) -> float:
        """Sum of squared nonconstant coefficients (Parseval)."""
        return float(np.sum(self.coeffs[1:] ** 2))

    def fraction_above_mean(self) -> float:
        """Fraction of inputs where the value strictly exceeds the mean."""
        table = self.truth_table()
        return float(np.count_nonzero(table > self.mean())) / table.size

    def depends_on(self, j: int) -> bool:
        """True when some subset containing coordinate j has a nonzero coefficient."""
        if not 0 <= j < self.arity:
            raise ValueError(f"coordinate {j} out of range for arity {self.arity}")
        bit = 1 << j
        masks = np.arange(self.coeffs.size)
        return bool(np.any(self.coeffs[(masks & bit) != 0] != 0.0))

    def is_constant(self) -> bool:
        return not np.any(self.coeffs[1:] != 0.0)


def fourier_transform(truth_table: Sequence[float]) -> MultilinearPoly:
    """Interpolate a value table into its multilinear coefficient form.

    The table must have power-of-two length 2^k and follow the package
    index order (bit j of the index 0 means x_j = +1).  The returned
    polynomial reproduces the table exactly; for a {0,1}-valued table
    every coefficient is an integer multiple of 2^-k.
    """
    table = np.asarray(truth_table, dtype=np.float64)
    if table.ndim != 1 or table.size == 0 or table.size & (table.size - 1):
        raise ValueError(f"table length must be a power of two, got {table.size}")
    arity = table.size.bit_length() - 1
    coeffs = _walsh_sums(table) / table.size
    return MultilinearPoly(arity, coeffs)


def all_boolean_tables(arity: int) -> Iterator[np.ndarray]:
    """Enumerate every {0,1} value table on `arity` inputs (2^2^arity of them)."""
    size = 1 << arity
    for code in range(1 << size):
        yield np.array([(code >> i) & 1 for i in range(size)], dtype=np.float64)
