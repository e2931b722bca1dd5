"""Brute-force global-Hilbert-space evolution of the frame protocol.

This is the independent cross-check for the sequential channel composition:
instead of tracing out each reference pair as soon as it has interacted, the
full register of system plus all 6N reference spins is evolved as one state
and only reduced at the end. For spin-1/2 and N = 2 that is an 8192-state
space, comfortably handled as a state vector.

Pure system inputs evolve as state vectors (the global initial state is a
product of pure states); mixed inputs are eigendecomposed and the pure runs
mixed with their weights, which is exact by linearity of the channel.
"""

from __future__ import annotations

import numpy as np

from .linalg import validate_density_matrix
from .protocol import PAIR_LAYOUT, BatteryLedger, _spin_expectations
from .spin import AXES, _check_spin, build_V, spin_operators, tau_state


def apply_local_unitary(
    psi: np.ndarray, dims: list[int], targets: list[int], u: np.ndarray
) -> np.ndarray:
    """Apply a unitary on the listed tensor factors of a state vector."""
    tensor = psi.reshape(dims)
    moved = np.moveaxis(tensor, targets, range(len(targets)))
    block = int(np.prod([dims[t] for t in targets]))
    out = (u @ moved.reshape(block, -1)).reshape(moved.shape)
    return np.moveaxis(out, range(len(targets)), targets).reshape(-1)


def _single_site_marginal(psi: np.ndarray, dims: list[int], site: int) -> np.ndarray:
    """Reduced density matrix of one factor of a pure state."""
    tensor = np.moveaxis(psi.reshape(dims), site, 0)
    m = tensor.reshape(dims[site], -1)
    return m @ m.conj().T


def _tau_vector(s: float, axis: str) -> np.ndarray:
    """State vector of the maximally polarized reference state."""
    rho = tau_state(s, axis)
    w, u = np.linalg.eigh(rho)
    return u[:, -1]


def monolithic_rotation(
    rho_s: np.ndarray, alpha_vec, N: int, s: float = 0.5
) -> tuple[np.ndarray, BatteryLedger]:
    """Evolve system plus all 6N reference spins in one Hilbert space.

    Returns the final reduced system state and the battery ledger computed
    from the exact single-spin marginals of every reference spin. Intended
    for tiny N; the space has dimension (2s+1)^(6N+1).
    """
    s = _check_spin(s)
    ops = spin_operators(s)
    d = ops.dim
    rho_s = validate_density_matrix(np.asarray(rho_s, dtype=complex), name="system")
    if rho_s.shape != (d, d):
        raise ValueError(f"system state must be {d}x{d} for spin {s}")
    alpha_vec = np.asarray(alpha_vec, dtype=float)

    n_refs = 6 * N
    dims = [d] * (1 + n_refs)
    # reference layout: per iteration, pairs in axis order x, y, z
    ref_axes: list[str] = []
    for _ in range(N):
        for axis in AXES:
            ax1, ax2, _, _ = PAIR_LAYOUT[axis]
            ref_axes.extend([ax1, ax2])
    ref_vectors = [_tau_vector(s, ax) for ax in ref_axes]
    tau_expect = {
        ax: np.array(
            [np.trace(op @ tau_state(s, ax)).real for op in ops.as_tuple()]
        )
        for ax in AXES
    }

    step_unitaries = {
        axis: build_V(s, a, N).matrix
        for axis, a in zip(AXES, alpha_vec)
        if a != 0.0
    }

    def evolve_pure(vec: np.ndarray) -> np.ndarray:
        psi = vec
        for r in ref_vectors:
            psi = np.kron(psi, r)
        slot = 1
        for _ in range(N):
            for axis, a in zip(AXES, alpha_vec):
                if a != 0.0:
                    psi = apply_local_unitary(
                        psi, dims, [0, slot, slot + 1], step_unitaries[axis]
                    )
                slot += 2
        return psi

    weights, vecs = np.linalg.eigh(rho_s)
    rho_final = np.zeros((d, d), dtype=complex)
    ref_marginals = [np.zeros((d, d), dtype=complex) for _ in range(n_refs)]
    for w, vec in zip(weights, vecs.T):
        if w < 1e-15:
            continue
        psi = evolve_pure(vec)
        rho_final += w * _single_site_marginal(psi, dims, 0)
        for j in range(n_refs):
            ref_marginals[j] += w * _single_site_marginal(psi, dims, 1 + j)

    ledger = BatteryLedger()
    slot = 0
    for _ in range(N):
        for axis in AXES:
            _, _, part1, part2 = PAIR_LAYOUT[axis]
            ax1, ax2, _, _ = PAIR_LAYOUT[axis]
            for part, ax, j in ((part1, ax1, slot), (part2, ax2, slot + 1)):
                delta = _spin_expectations(ref_marginals[j], ops) - tau_expect[ax]
                ledger.add(part, delta)
            slot += 2
    return rho_final, ledger
