"""Independent reference constructions used as test oracles.

Everything here is built entry by entry from basis-state bit manipulation,
sharing no code with the tensordot/matrix-free paths under test.
"""

import numpy as np


def embed_gate(g, n):
    """Dense 2**n matrix of a gate, qubit 0 = least-significant bit."""
    dim = 2 ** n
    w = len(g.targets)
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        local_in = 0
        for i, t in enumerate(g.targets):
            local_in |= ((col >> t) & 1) << (w - 1 - i)
        for local_out in range(2 ** w):
            amp = g.matrix[local_out, local_in]
            if amp == 0:
                continue
            row = col
            for i, t in enumerate(g.targets):
                bit = (local_out >> (w - 1 - i)) & 1
                row = (row & ~(1 << t)) | (bit << t)
            out[row, col] += amp
    return out


def dense_cyclic_u(gates, n):
    """U on clock (x) sign (x) qubits for the mirrored cycle of ``gates``."""
    T = len(gates)
    m = 2 * T
    steps = list(gates) + [g.adjoint() for g in reversed(gates)]
    q = 2 ** n

    def sign(label):
        return 1 if T < label % m else 0

    U = np.zeros((m * 2 * q, m * 2 * q), dtype=complex)
    for c in range(m):
        G = embed_gate(steps[c], n)
        d = (c + 1) % m
        for s in range(2):
            s2 = s ^ (sign(c) != sign(d))
            r0, c0 = (d * 2 + s2) * q, (c * 2 + s) * q
            U[r0:r0 + q, c0:c0 + q] += G
    return U


def dense_truncated_u(gates, n):
    """U on clock labels -L..L for forward gates g_1..g_L (no hop out of +L)."""
    L = len(gates)
    q = 2 ** n
    size = 2 * L + 1
    U = np.zeros((size * q, size * q), dtype=complex)
    for label in range(-L, L):
        g = gates[label] if label >= 0 else gates[-label - 1].adjoint()
        G = embed_gate(g, n)
        c, d = label + L, label + L + 1
        U[d * q:(d + 1) * q, c * q:(c + 1) * q] = G
    return U


def path_gap(L):
    """Gap of the (2L+1)-site path adjacency, eigenvalues 2cos(pi j / (2L+2))."""
    N1 = 2 * L + 2
    return 2 * np.cos(np.pi / N1) - 2 * np.cos(2 * np.pi / N1)


def cycle(m):
    a = np.zeros((m, m))
    for i in range(m):
        a[i, (i + 1) % m] += 1
        a[(i + 1) % m, i] += 1
    return a
