"""Two-site thermal expectations for the spin-1/2 XXZ and spin-1 nematic models.

Matrices are real in the product basis ``|s_x> (x) |s_y>``; everything is
diagonalised with the cyclic Jacobi method below.
"""
from __future__ import annotations

import math

import numpy as np

SYMMETRY_TOL = 1e-14
MAX_SWEEPS = 100

# grid on which the spin and loop two-point functions are compared
BETA_GRID = (0.2, 0.5, 1.0)
DELTA_GRID = (-1.0, 0.0, 1.0)
U_GRID = (0.25, 0.5, 0.75)


class JacobiError(ArithmeticError):
    pass


class DenseSymmetricMatrix(np.ndarray):
    """Real symmetric ``n x n`` array (``n`` is 4 or 9 here)."""

    def __new__(cls, data):
        arr = np.asarray(data, dtype=np.float64).view(cls)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("matrix must be square")
        if np.max(np.abs(arr - arr.T), initial=0.0) > SYMMETRY_TOL:
            raise ValueError("matrix is not symmetric")
        return arr

    @property
    def dimension(self) -> int:
        return self.shape[0]


def jacobi_eigh(a: np.ndarray, tol: float = 1e-15, max_sweeps: int = MAX_SWEEPS):
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Returns ``(w, V)`` with ascending eigenvalues and ``a @ V = V @ diag(w)``.
    """
    A = np.array(a, dtype=np.float64)
    n = A.shape[0]
    V = np.eye(n)
    scale = max(np.abs(A).max(), 1.0)
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(np.triu(A, 1) ** 2)))
        if off <= tol * scale:
            w = np.diag(A).copy()
            order = np.argsort(w)
            return w[order], V[:, order]
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) < 1e-300:
                    continue
                # Rutishauser's stable rotation
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                Ap = A[:, p].copy()
                Aq = A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap = A[p, :].copy()
                Aq = A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                A[p, q] = A[q, p] = 0.0
                Vp = V[:, p].copy()
                V[:, p] = c * Vp - s * V[:, q]
                V[:, q] = s * Vp + c * V[:, q]
    raise JacobiError(f"Jacobi did not converge in {max_sweeps} sweeps")


# -- spin operators -----------------------------------------------------------


def spin_operators(spin: float):
    """``(S1, iS2, S3)`` for one site; ``S2`` is imaginary, so ``i*S2`` is stored
    (real antisymmetric) and products ``S2 (x) S2 = -(iS2) (x) (iS2)`` stay real."""
    dim = int(round(2 * spin + 1))
    m = spin - np.arange(dim)
    sp = np.zeros((dim, dim))
    for k in range(1, dim):
        sp[k - 1, k] = math.sqrt(spin * (spin + 1) - m[k] * (m[k] + 1))
    sm = sp.T
    s1 = (sp + sm) / 2
    is2 = (sp - sm) / 2
    s3 = np.diag(m)
    return s1, is2, s3


def dot_product(spin: float) -> np.ndarray:
    """``S_x . S_y`` on two sites of equal spin."""
    s1, is2, s3 = spin_operators(spin)
    return np.kron(s1, s1) - np.kron(is2, is2) + np.kron(s3, s3)


def hamiltonian_xxz_2site(delta: float) -> DenseSymmetricMatrix:
    """``-2 (S1 S1 + S2 S2 + delta S3 S3)`` on two spin-1/2 sites."""
    if not -1.0 <= delta <= 1.0:
        raise ValueError("delta must lie in [-1, 1]")
    s1, is2, s3 = spin_operators(0.5)
    h = -2.0 * (np.kron(s1, s1) - np.kron(is2, is2) + delta * np.kron(s3, s3))
    return DenseSymmetricMatrix(h)


def hamiltonian_nematic_2site(u: float) -> DenseSymmetricMatrix:
    """``-(u S.S + (S.S)^2)`` on two spin-1 sites."""
    if not 0.0 <= u <= 1.0:
        raise ValueError("u must lie in [0, 1]")
    ss = dot_product(1.0)
    return DenseSymmetricMatrix(-(u * ss + ss @ ss))


def s1s1_observable() -> DenseSymmetricMatrix:
    s1, _, _ = spin_operators(0.5)
    return DenseSymmetricMatrix(np.kron(s1, s1))


def nematic_observable() -> DenseSymmetricMatrix:
    """``A_x A_y`` with ``A = (S3)^2 - 2/3``."""
    _, _, s3 = spin_operators(1.0)
    a = s3 @ s3 - 2.0 / 3.0 * np.eye(3)
    return DenseSymmetricMatrix(np.kron(a, a))


def thermal_two_point(H: np.ndarray, O: np.ndarray, beta: float) -> float:
    """``tr(O e^{-beta H}) / tr(e^{-beta H})`` via the Jacobi eigenbasis."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    w, V = jacobi_eigh(H)
    boltz = np.exp(-beta * (w - w.min()))
    diag = np.einsum("ij,jk,ki->i", V.T, np.asarray(O), V)
    return float(np.dot(boltz, diag) / boltz.sum())


def eigen_residual(H: np.ndarray) -> float:
    w, V = jacobi_eigh(H)
    return float(np.abs(np.asarray(H) @ V - V * w).max())


def correspondence_grid(betas=BETA_GRID, deltas=DELTA_GRID, us=U_GRID) -> list[dict]:
    """Spin two-point functions next to their loop counterparts on one edge.

    XXZ: ``<S1 S1>`` against ``P^(theta=2)(x <-> y) / 4`` at ``u = (1 + delta)/2``.
    Nematic: ``<A_x A_y>`` against ``(2/9) P^(theta=3)(x <-> y)``.  The loop side
    comes from the exact single-edge enumeration.
    """
    from .oracle import enumerate_edge

    rows = []
    for beta in betas:
        for delta in deltas:
            spin = thermal_two_point(hamiltonian_xxz_2site(delta), s1s1_observable(), beta)
            loop = 0.25 * enumerate_edge(beta, 2.0, (1 + delta) / 2).prob_connected
            rows.append({"model": "xxz", "beta": beta, "delta": delta, "spin": spin,
                         "loop": loop, "difference": abs(spin - loop)})
        for u in us:
            spin = thermal_two_point(hamiltonian_nematic_2site(u), nematic_observable(), beta)
            loop = 2.0 / 9.0 * enumerate_edge(beta, 3.0, u).prob_connected
            rows.append({"model": "nematic", "beta": beta, "u": u, "spin": spin, "loop": loop,
                         "difference": abs(spin - loop)})
    return rows
