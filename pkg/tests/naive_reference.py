"""Deliberately naive second implementation of the single-layer circuit.

Everything here is written differently from the production code on
purpose: costs are evaluated bit-by-bit per basis state in plain Python,
the mixer is a 2x2 matrix contracted with tensordot, and the objective
is scored through Instance.count_satisfied on spin tuples.  Used only as
an independent oracle in tests (n <= 10).
"""

import numpy as np


def spins_of(z, n):
    return tuple(1 if not (z >> i) & 1 else -1 for i in range(n))


def cost_of(z, terms):
    total = 0.0
    for mask, w in terms:
        parity = bin(z & mask).count("1") % 2
        total += -w if parity else w
    return total


def naive_qaoa_amplitudes(n, terms, beta, gamma):
    amps = np.full(2**n, 2 ** (-n / 2), dtype=complex)
    for z in range(2**n):
        amps[z] *= np.exp(-1j * gamma * cost_of(z, terms))
    u = np.array([[np.cos(beta), -1j * np.sin(beta)], [-1j * np.sin(beta), np.cos(beta)]])
    tensor = amps.reshape([2] * n)
    for axis in range(n):
        tensor = np.tensordot(u, tensor, axes=([1], [axis]))
        tensor = np.moveaxis(tensor, 0, axis)
    return tensor.reshape(-1)


def naive_expectation(instance, terms, beta, gamma):
    amps = naive_qaoa_amplitudes(instance.n, terms, beta, gamma)
    total = 0.0
    for z in range(2**instance.n):
        total += abs(amps[z]) ** 2 * instance.count_satisfied(spins_of(z, instance.n))
    return total
