"""Spin operators, polarized reference states, and the three-body coupling.

The coupling operator is the scalar triple product s . (s' x s'') of the
spin vectors of three particles of equal spin. Being a rotational scalar it
commutes with every component of the total spin, which is what lets the
step unitaries built from it conserve all three angular momentum components
at once. Units are hbar = 1 throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .linalg import (
    embed,
    expm_generator,
    kron_all,
    pure_density,
    spectral_norm,
)

AXES = ("x", "y", "z")

#: nonzero entries of the rank-3 antisymmetric symbol, axis triple -> sign
LEVI_CIVITA = {
    ("x", "y", "z"): 1.0,
    ("y", "z", "x"): 1.0,
    ("z", "x", "y"): 1.0,
    ("x", "z", "y"): -1.0,
    ("z", "y", "x"): -1.0,
    ("y", "x", "z"): -1.0,
}


def _check_spin(s: float) -> float:
    s = float(s)
    two_s = 2 * s
    if s <= 0 or abs(two_s - round(two_s)) > 1e-12:
        raise ValueError(f"spin must be a positive half-integer, got {s}")
    return s


def _check_axis(axis: str) -> str:
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    return axis


@dataclass(frozen=True)
class SpinOperators:
    """The triple (sx, sy, sz) for one particle of spin ``s``."""

    s: float
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray

    @property
    def dim(self) -> int:
        return self.sz.shape[0]

    def component(self, axis: str) -> np.ndarray:
        return {"x": self.sx, "y": self.sy, "z": self.sz}[_check_axis(axis)]

    def as_tuple(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.sx, self.sy, self.sz)


@lru_cache(maxsize=None)
def _spin_operators_cached(two_s: int) -> SpinOperators:
    s = two_s / 2
    dim = two_s + 1
    # basis ordered by decreasing magnetic quantum number m = s .. -s
    m = s - np.arange(dim)
    sz = np.diag(m).astype(complex)
    raise_elems = np.sqrt(s * (s + 1) - m[1:] * (m[1:] + 1))
    s_plus = np.zeros((dim, dim), dtype=complex)
    s_plus[np.arange(dim - 1), np.arange(1, dim)] = raise_elems
    s_minus = s_plus.conj().T
    sx = (s_plus + s_minus) / 2
    sy = (s_plus - s_minus) / 2j
    return SpinOperators(s=s, sx=sx, sy=sy, sz=sz)


def spin_operators(s: float) -> SpinOperators:
    """Spin matrices of dimension 2s+1 via the standard ladder construction."""
    s = _check_spin(s)
    return _spin_operators_cached(round(2 * s))


def tau_state(s: float, axis: str) -> np.ndarray:
    """Density matrix of a spin-s particle maximally polarized along ``axis``.

    For spin-1/2 this is I/2 + s_axis, built directly to sidestep eigenvector
    phase ambiguity; for higher spin it is the projector onto the top
    eigenvector of s_axis (the density matrix is phase-free either way).
    """
    s = _check_spin(s)
    ops = spin_operators(s)
    op = ops.component(axis)
    if ops.dim == 2:
        return np.eye(2, dtype=complex) / 2 + op
    _, u = np.linalg.eigh(op)
    return pure_density(u[:, -1])


def tau_expectations(s: float, axis: str) -> np.ndarray:
    """Spin expectation vector (s_x, s_y, s_z) of the polarized state."""
    ops = spin_operators(s)
    rho = tau_state(s, axis)
    return np.array([np.trace(ops.component(k) @ rho).real for k in AXES])


@lru_cache(maxsize=None)
def _build_T_cached(two_s: int) -> np.ndarray:
    ops = spin_operators(two_s / 2)
    dim = ops.dim
    t = np.zeros((dim**3, dim**3), dtype=complex)
    for (j, k, l), sign in LEVI_CIVITA.items():
        t += sign * kron_all(
            [ops.component(j), ops.component(k), ops.component(l)]
        )
    return t


def build_T(s: float) -> np.ndarray:
    """Three-body scalar coupling s . (s' x s'') on three spin-s particles.

    Hermitian, traceless, and invariant under global rotations, i.e. it
    commutes with every component of the three-particle total spin.
    """
    s = _check_spin(s)
    return _build_T_cached(round(2 * s)).copy()


def coupling_constant(s: float, alpha: float, N: int) -> float:
    """Strength of one step interaction: alpha / (s^2 N).

    At s = 1/2 this is 4 * alpha / N, the coefficient that makes a single
    step reproduce the rotation exp(-i (alpha/N) s_axis) to first order.
    """
    s = _check_spin(s)
    if N < 1:
        raise ValueError(f"iteration count must be positive, got {N}")
    return alpha / (s * s * N)


@dataclass(frozen=True)
class StepUnitary:
    """One step interaction exp(-i c T) on system plus two reference spins."""

    s: float
    alpha: float
    N: int
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def build_V(s: float, alpha: float, N: int) -> StepUnitary:
    """Step unitary exp(-i (alpha / (s^2 N)) T) acting on three spin-s parties."""
    s = _check_spin(s)
    c = coupling_constant(s, alpha, N)
    matrix = expm_generator(build_T(s), c)
    return StepUnitary(s=s, alpha=float(alpha), N=int(N), matrix=matrix)


def total_spin_component(
    axis: str, parties: list[tuple[float, bool]]
) -> np.ndarray:
    """Sum of s_axis over the flagged parties, embedded in the full space.

    ``parties`` lists (spin, include_flag) per tensor factor; factors with a
    false flag contribute only identity, which is how a component restricted
    to a sub-collection (one battery, say) is formed.
    """
    _check_axis(axis)
    if not parties:
        raise ValueError("party list must be nonempty")
    dims = [spin_operators(_check_spin(s)).dim for s, _ in parties]
    total = np.zeros((int(np.prod(dims)),) * 2, dtype=complex)
    for slot, (s, present) in enumerate(parties):
        if present:
            total += embed(spin_operators(s).component(axis), dims, slot)
    return total


def conservation_residual(v: StepUnitary, axis: str) -> float:
    """Spectral norm of [V, S_axis] over the three interacting parties.

    Exactly zero in exact arithmetic; anything beyond floating noise flags a
    broken coupling.
    """
    s_total = total_spin_component(axis, [(v.s, True)] * 3)
    m = v.matrix
    return spectral_norm(m @ s_total - s_total @ m)
