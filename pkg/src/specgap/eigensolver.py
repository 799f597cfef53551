"""Dense Hermitian eigensolver, singular values and spectral weights.

Small matrices (order <= ``JACOBI_MAX_ORDER``) and stacks of symbol samples
go through cyclic complex Jacobi rotations; large truncations go to LAPACK.
Eigenvalues are always returned in descending order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from specgap import _kernels
from specgap.errors import ContractError, NumericalError

TOL = 1e-12
MAX_SWEEPS = 30
JACOBI_MAX_ORDER = 64
CLUSTER_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """Eigenpairs of a Hermitian matrix, eigenvalues nonincreasing.

    Column ``k`` of ``vectors`` is the eigenvector of ``values[k]``.
    """

    values: np.ndarray
    vectors: np.ndarray

    @property
    def n(self) -> int:
        return len(self.values)

    def top(self, k: int) -> float:
        """lambda_k, 1-based from the top."""
        return float(self.values[k - 1])

    def bottom(self, k: int) -> float:
        """lambda_{n+1-k}, 1-based from the bottom (a view, not a re-sort)."""
        return float(self.values[self.n - k])


def _as_square(h) -> np.ndarray:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ContractError("matrix has non-finite entries")
    return h


def hermitian_defect(h: np.ndarray) -> float:
    return float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0


def check_hermitian(h, tol: float = TOL) -> np.ndarray:
    """Validate and symmetrise ``h``; real input stays real."""
    h = _as_square(h)
    fro = float(np.linalg.norm(h))
    defect = hermitian_defect(h)
    if defect > tol * max(fro, 1.0):
        raise ContractError(f"matrix is not Hermitian (defect {defect:.3e})")
    if np.iscomplexobj(h):
        if not np.any(h.imag):
            h = h.real
        else:
            return 0.5 * (h + h.conj().T)
    h = h.astype(float, copy=False)
    return 0.5 * (h + h.T)


def _jacobi_stack(stack: np.ndarray, kernel=None, want_vectors=True):
    """Run the Jacobi kernel on a (B, n, n) stack; returns sorted values/vectors."""
    a = np.ascontiguousarray(stack, dtype=np.complex128).copy()
    nb, n, _ = a.shape
    # unit max-entry scaling keeps squares away from under- and overflow
    amax = np.max(np.abs(a), axis=(1, 2)) if a.size else np.zeros(nb)
    amax = np.where(amax > 0, amax, 1.0)
    a /= amax[:, None, None]
    v = np.ascontiguousarray(np.broadcast_to(np.eye(n, dtype=np.complex128), a.shape)).copy()
    fro = np.sqrt(np.sum(np.abs(a) ** 2, axis=(1, 2)))
    thresh = np.ascontiguousarray(TOL * fro)
    offnorm = np.zeros(nb)
    sweeps = np.zeros(nb, dtype=np.int32)
    kernel = _kernels.jacobi_batch if kernel is None else kernel
    kernel(a, v, thresh, MAX_SWEEPS, offnorm, sweeps)
    bad = offnorm > thresh
    if np.any(bad):
        worst = int(np.argmax(offnorm - thresh))
        raise NumericalError(
            f"Jacobi did not converge in {MAX_SWEEPS} sweeps "
            f"(matrix {worst}: off-diagonal residual {offnorm[worst] * amax[worst]:.3e})"
        )
    w = np.real(np.diagonal(a, axis1=1, axis2=2)) * amax[:, None]
    order = np.argsort(-w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    if not want_vectors:
        return w, None
    v = np.take_along_axis(v, order[:, None, :], axis=2)
    return w, v


def _choose(n: int, method: str) -> str:
    if method == "auto":
        return "jacobi" if n <= JACOBI_MAX_ORDER else "lapack"
    if method not in ("jacobi", "lapack"):
        raise ValueError(f"unknown eigensolver method {method!r}")
    return method


def eigh(h, method: str = "auto") -> EigenDecomposition:
    """Full eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Raises ContractError for non-Hermitian input and NumericalError when
    the Jacobi sweeps fail to reach ``TOL * ||H||_F``.
    """
    h = check_hermitian(h)
    n = h.shape[0]
    if n == 0:
        return EigenDecomposition(np.zeros(0), np.zeros((0, 0)))
    if _choose(n, method) == "jacobi":
        w, v = _jacobi_stack(h[None])
        w, v = w[0], v[0]
        if not np.iscomplexobj(h):
            v = v.real  # real rotations keep V real
        return EigenDecomposition(w, v)
    w, v = np.linalg.eigh(h)
    return EigenDecomposition(w[::-1].copy(), v[:, ::-1].copy())


def eigvalsh(h, method: str = "auto") -> np.ndarray:
    """Eigenvalues only, descending."""
    h = check_hermitian(h)
    n = h.shape[0]
    if n == 0:
        return np.zeros(0)
    if _choose(n, method) == "jacobi":
        return _jacobi_stack(h[None], want_vectors=False)[0][0]
    return np.linalg.eigvalsh(h)[::-1].copy()


def eigh_batch(stack, want_vectors: bool = False, kernel=None):
    """Jacobi on a (B, p, p) stack of Hermitian matrices.

    Returns ``(values, vectors)``; values have shape (B, p), descending per
    row. ``vectors`` is None unless requested.
    """
    stack = np.asarray(stack)
    if stack.ndim != 3 or stack.shape[1] != stack.shape[2]:
        raise ContractError(f"expected a (B, p, p) stack, got {stack.shape}")
    fro = np.sqrt(np.sum(np.abs(stack) ** 2, axis=(1, 2)))
    defect = np.max(np.abs(stack - np.conj(np.swapaxes(stack, 1, 2))), axis=(1, 2))
    if np.any(defect > TOL * np.maximum(fro, 1.0)):
        raise ContractError("stack contains a non-Hermitian matrix")
    return _jacobi_stack(stack, kernel=kernel, want_vectors=want_vectors)


def singular_values(h, method: str = "auto") -> np.ndarray:
    """s_1 >= s_2 >= ...; for Hermitian input these are the sorted |eigenvalues|."""
    return np.sort(np.abs(eigvalsh(h, method=method)))[::-1]


def spectral_norm(h) -> float:
    h = np.asarray(h)
    if h.size == 0:
        return 0.0
    return float(singular_values(h)[0])


def spectral_weights(decomp: EigenDecomposition, basis_index: int) -> np.ndarray:
    """w_k = |<v_k, e_i>|^2 for the 1-based basis index i.

    The weights sum to one and sum_k w_k lambda_k reproduces H[i, i].
    """
    if not 1 <= basis_index <= decomp.n:
        raise ContractError(f"basis index {basis_index} outside 1..{decomp.n}")
    row = decomp.vectors[basis_index - 1, :]
    return np.abs(row) ** 2


def eigenvalue_clusters(values: np.ndarray, rtol: float = CLUSTER_RTOL):
    """Group descending eigenvalues whose neighbours differ by < rtol * scale."""
    if len(values) == 0:
        return []
    scale = max(float(np.max(np.abs(values))), 1.0)
    groups = [[0]]
    for k in range(1, len(values)):
        if values[groups[-1][-1]] - values[k] < rtol * scale:
            groups[-1].append(k)
        else:
            groups.append([k])
    return groups


def eigenspace_weights(decomp: EigenDecomposition, basis_index: int):
    """Weights of e_i on whole eigenspaces: list of (eigenvalue, weight).

    Numerically equal eigenvalues are merged so each weight is
    <Q e_i, e_i> for the projection Q onto the full eigenspace.
    """
    w = spectral_weights(decomp, basis_index)
    out = []
    for group in eigenvalue_clusters(decomp.values):
        out.append((float(np.mean(decomp.values[group])), float(np.sum(w[group]))))
    return out
