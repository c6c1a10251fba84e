"""Pure numpy kernels. Same signatures as the compiled ``_kernels`` module.

These double as the plain reference implementations the compiled kernels
are checked against.
"""
import numpy as np

NAME = "python"


def cosine_distance(A, B):
    na = np.sqrt(np.einsum("ij,ij->i", A, A))
    nb = np.sqrt(np.einsum("ij,ij->i", B, B))
    sim = (A @ B.T) / np.outer(na, nb)
    return np.clip(1.0 - sim, 0.0, 2.0)


def euclidean_distance(A, B):
    diff = A[:, None, :] - B[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def sinkhorn_scaling(K, a, b, max_iter, tol):
    """Alternating scaling from u = v = 1.

    Returns ``(u, v, iterations, converged, status)``; ``status`` is 0 when all
    iterates stayed in (0, inf), otherwise the iteration at which they left.
    """
    M = K.shape[0]
    u = np.ones(M)
    v = np.ones(K.shape[1])
    Kv = K @ v
    for it in range(1, max_iter + 1):
        with np.errstate(over="ignore", divide="ignore"):
            u = a / Kv
            KTu = K.T @ u
            v = b / KTu
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))
                and np.all(u > 0) and np.all(v > 0)):
            return u, v, it, False, it
        Kv = K @ v
        row_res = np.max(np.abs(u * Kv - a))
        col_res = np.max(np.abs(v * KTu - b))
        if max(row_res, col_res) <= tol:
            return u, v, it, True, 0
    return u, v, max_iter, False, 0
