"""Independent reference values for the test suite.

Everything here is computed from first principles with plain numpy so the
package code under test never certifies itself: the partial transpose is a
reshape, negativity an eigendecomposition, tail sums are geometric series.
"""

import math

import numpy as np


def partial_transpose_ref(M: np.ndarray, d: int, n: int) -> np.ndarray:
    """Partial transpose over the first tensor factor via reshape/swap."""
    T = M.reshape(d, n, d, n).transpose(2, 1, 0, 3)
    return T.reshape(d * n, d * n)


def negativity_ref(M: np.ndarray, d: int, n: int) -> float:
    """Sum of the negative eigenvalues of the partial transpose, as |sum|."""
    w = np.linalg.eigvalsh(partial_transpose_ref(M, d, n))
    return float(-w[w < 0].sum())


def bell_state(n: int = 2) -> np.ndarray:
    """|00> + |11> over sqrt(2), embedded in a 2 x n layout."""
    v = np.zeros(2 * n)
    v[0] = v[n + 1] = 1 / math.sqrt(2)
    return np.outer(v, v)


def werner_state(p: float) -> np.ndarray:
    return p * bell_state() + (1 - p) * np.eye(4) / 4


def random_separable(rng: np.random.Generator, d: int, n: int, terms: int = 4) -> np.ndarray:
    """Convex mixture of random product states on C^d (x) C^n."""
    out = np.zeros((d * n, d * n), dtype=complex)
    w = rng.dirichlet(np.ones(terms))
    for k in range(terms):
        va = rng.normal(size=d) + 1j * rng.normal(size=d)
        vb = rng.normal(size=n) + 1j * rng.normal(size=n)
        va /= np.linalg.norm(va)
        vb /= np.linalg.norm(vb)
        v = np.kron(va, vb)
        out += w[k] * np.outer(v, v.conj())
    return out


def coherent_amplitudes_ref(alpha: complex, N: int) -> np.ndarray:
    """exp(-|a|^2/2) a^n / sqrt(n!) from the factorial, small N only."""
    return np.array(
        [
            math.exp(-abs(alpha) ** 2 / 2) * alpha**n / math.sqrt(math.factorial(n))
            for n in range(N + 1)
        ],
        dtype=complex,
    )


def thermal_tail_ref(nbar: float, N: int) -> float:
    """Trace of a thermal state above level N: (nbar/(1+nbar))^(N+1).

    Geometric series: p_k = (1/(1+nbar)) q^k with q = nbar/(1+nbar), so the
    tail sum from N+1 telescopes to q^(N+1)."""
    q = nbar / (1.0 + nbar)
    return q ** (N + 1)


def span_negativity_ref(s: float) -> float:
    """Exact negativity of (|0>|psi_0> + |1>|psi_1>)/sqrt(2) with <psi_0|psi_1> = s.

    Gram-Schmidt maps the pair onto a qubit: psi_0 -> e_0,
    psi_1 -> s e_0 + sqrt(1-s^2) e_1; the 4x4 pure state then gives the value
    by eigendecomposition of the partial transpose."""
    c = math.sqrt(1 - s * s)
    v = np.zeros(4)
    v[0] = 1 / math.sqrt(2)
    v[2] = s / math.sqrt(2)
    v[3] = c / math.sqrt(2)
    return negativity_ref(np.outer(v, v), 2, 2)


def saturating_state(nbar: float, N: int, dim: int) -> np.ndarray:
    """Diagonal state reaching the truncation-trace bound with equality.

    Weight nbar/(N+1) at level N+1 and the rest at vacuum, written at a
    cutoff dim-1 >= N+1."""
    q = nbar / (N + 1)
    rho = np.zeros((dim, dim))
    rho[0, 0] = 1 - q
    rho[N + 1, N + 1] = q
    return rho
