"""Dense complex linear algebra kernel for small multi-spin systems.

All operators and states are plain numpy arrays (complex128, row major,
square unless noted). Dimensions in this package stay small -- at most 64
for protocol operators and a few thousand for the brute-force cross-check --
so dense storage plus Hermitian eigendecompositions are the simplest and
fastest tools for the job.

Tolerances are fixed module-wide: 1e-12 for exactness checks (Hermiticity,
unit trace) and 1e-10 for decomposition residuals, appropriate for double
precision at these sizes.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

#: max-entry tolerance for exactness checks (Hermiticity, unit trace)
EXACT_ATOL = 1e-12
#: tolerance for decomposition residuals and Hermiticity preconditions
RESIDUAL_ATOL = 1e-10
#: how far below zero an eigenvalue of a density matrix may dip
PSD_SLACK = 1e-10


def as_complex_matrix(a) -> np.ndarray:
    """Coerce to a 2-d complex128 array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got array of ndim {m.ndim}")
    return m


def hermiticity_defect(a) -> float:
    """Max-entry distance between a square matrix and its adjoint."""
    m = as_complex_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix is not square: shape {m.shape}")
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0

def _require_hermitian(a, op: str, atol: float = RESIDUAL_ATOL) -> np.ndarray:
    m = as_complex_matrix(a)
    defect = hermiticity_defect(m)
    if defect > atol:
        raise ValueError(f"{op}: matrix is not Hermitian (defect {defect:.3e})")
    return m


def kron(a, b) -> np.ndarray:
    """Kronecker (tensor) product of two matrices."""
    return np.kron(as_complex_matrix(a), as_complex_matrix(b))


def kron_all(factors: Iterable[np.ndarray]) -> np.ndarray:
    """Kronecker product of a sequence of matrices, left to right."""
    out = np.array([[1.0 + 0.0j]])
    for f in factors:
        out = np.kron(out, as_complex_matrix(f))
    return out


def embed(op, dims: Sequence[int], slot: int) -> np.ndarray:
    """Lift ``op`` to the full product space: I x ... x op x ... x I."""
    dims = [int(d) for d in dims]
    op = as_complex_matrix(op)
    if op.shape != (dims[slot], dims[slot]):
        raise ValueError(
            f"operator shape {op.shape} does not match factor dim {dims[slot]}"
        )
    return kron_all(op if j == slot else np.eye(d, dtype=complex)
                    for j, d in enumerate(dims))


def partial_trace(m, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out all tensor factors not listed in ``keep``.

    ``dims`` is the factorization of the square matrix ``m`` (row-major
    ordering, first factor slowest). Kept factors appear in the output in
    ascending slot order. ``keep=()`` traces everything, returning a 1x1
    matrix holding trace(m).
    """
    m = as_complex_matrix(m)
    dims = [int(d) for d in dims]
    side = int(np.prod(dims)) if dims else 0
    if not dims or any(d <= 0 for d in dims) or m.shape != (side, side):
        raise ValueError(
            f"bad factorization: dims {dims} do not factor a {m.shape} matrix"
        )
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError(f"bad factorization: keep {keep} outside {len(dims)} factors")

    n = len(dims)
    tensor = m.reshape(dims + dims)
    kept = set(keep)
    # bra axis i gets label i; ket axis i shares it unless the factor is kept
    labels = list(range(n)) + [n + i if i in kept else i for i in range(n)]
    out_labels = keep + [n + i for i in keep]
    reduced = np.einsum(tensor, labels, out_labels)
    d_keep = int(np.prod([dims[k] for k in keep])) if keep else 1
    return reduced.reshape(d_keep, d_keep)


def herm_eig(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(eigenvalues, eigenvectors)`` with real eigenvalues in
    ascending order and eigenvectors as columns of a unitary matrix, so that
    ``h = U @ diag(w) @ U.conj().T`` up to the 1e-10 reconstruction residual.
    """
    h = _require_hermitian(h, "herm_eig")
    w, u = np.linalg.eigh(h)
    return w, u


def expm_generator(h, theta: float) -> np.ndarray:
    """Unitary exp(-i * theta * h) for Hermitian ``h``, via eigendecomposition.

    ``theta == 0`` returns the exact identity.
    """
    h = _require_hermitian(h, "expm_generator")
    if theta == 0.0 or not np.any(h):
        return np.eye(h.shape[0], dtype=complex)
    w, u = np.linalg.eigh(h)
    return (u * np.exp(-1j * theta * w)) @ u.conj().T


def trace_norm(a) -> float:
    """Trace norm (sum of |eigenvalues|) of a Hermitian matrix.

    Every use in this package is a difference of density matrices, so the
    Hermitian-only restriction avoids a general singular value path.
    """
    a = _require_hermitian(a, "trace_norm")
    return float(np.sum(np.abs(np.linalg.eigvalsh(a))))


def operator_norm(a) -> float:
    """Spectral norm (max |eigenvalue|) of a Hermitian matrix."""
    a = _require_hermitian(a, "operator_norm")
    return float(np.max(np.abs(np.linalg.eigvalsh(a)))) if a.size else 0.0


def spectral_norm(a) -> float:
    """Largest singular value; for general (not necessarily Hermitian) input."""
    return float(np.linalg.norm(as_complex_matrix(a), 2))


def validate_density_matrix(rho, *, name: str = "state") -> np.ndarray:
    """Check the density-matrix contract and return the array.

    Hermitian within 1e-12 (max entry), unit trace within 1e-12, and all
    eigenvalues above -1e-10.
    """
    rho = as_complex_matrix(rho)
    defect = hermiticity_defect(rho)
    if defect > EXACT_ATOL:
        raise ValueError(f"{name}: not Hermitian (defect {defect:.3e})")
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > EXACT_ATOL:
        raise ValueError(f"{name}: trace {tr} is not 1")
    lo = float(np.min(np.linalg.eigvalsh((rho + rho.conj().T) / 2)))
    if lo < -PSD_SLACK:
        raise ValueError(f"{name}: negative eigenvalue {lo:.3e}")
    return rho


def pure_density(vec) -> np.ndarray:
    """Density matrix |v><v| of a (normalized) state vector."""
    v = np.asarray(vec, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-uniform random state vector of the given dimension."""
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_density_matrix(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Random full-rank mixed state (Ginibre construction)."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
