"""Operator bases of conserved quantities and the generalized frame machinery.

A valid basis is a set of K = d^2 - 1 Hermitian operators that are
traceless, mutually orthogonal, and closed under commutation (each
commutator is zero or proportional to a single basis element). For
dimension d = 2^n the products of single-site spin-1/2 operators form such
a basis; n = 1 recovers the plain spin operators.

The generalized coupling is a sum over all orderings of the K operators
across K particles, signed by permutation parity. It is built densely only
for K = 3 (n = 1), where the generalized step channel is simulated exactly;
for K = 15 (n = 2) the construction has 15! terms and is verified
structurally instead (basis properties, closure table, separation
classifier, spot-evaluated coefficients).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .linalg import (
    expm_generator,
    kron,
    kron_all,
    operator_norm,
    partial_trace,
    validate_density_matrix,
)
from .spin import spin_operators

#: tolerance for exact structural checks (tracelessness, orthogonality)
PROPERTY_ATOL = 1e-12
#: tolerance for the proportionality residual in closure checks
CLOSURE_ATOL = 1e-10


class ScopeError(RuntimeError):
    """Raised when a request exceeds the dense-verification budget."""


@dataclass(frozen=True)
class OperatorBasis:
    """K = d^2 - 1 candidate conserved quantities on a d-dimensional system."""

    d: int
    K: int
    ops: list[np.ndarray]
    labels: list[str]

    def norm(self, k: int) -> float:
        return operator_norm(self.ops[k])

    def eta(self, k: int) -> float:
        """Normalization tr(O_k^2) / (d |O_k|) controlling coupling strength."""
        o = self.ops[k]
        return float(np.trace(o @ o).real) / (self.d * self.norm(k))


@dataclass(frozen=True)
class StructureTable:
    """Commutator structure: (k, l) -> None (zero) or (m, coefficient).

    ``expansions`` is only populated in diagnostic mode, for pairs whose
    commutator is not proportional to a single element.
    """

    entries: dict[tuple[int, int], tuple[int, complex] | None]
    expansions: dict[tuple[int, int], list[tuple[int, complex]]] | None = None

    def entry(self, k: int, l: int):
        return self.entries[(k, l)]


@dataclass(frozen=True)
class BasisReport:
    """Verdicts for the three required basis properties."""

    d: int
    K: int
    traceless_ok: bool
    orthogonal_ok: bool
    closed_ok: bool
    max_trace: float
    max_overlap: float
    closure_failures: list[tuple[int, int]]

    @property
    def all_ok(self) -> bool:
        return self.traceless_ok and self.orthogonal_ok and self.closed_ok


@dataclass(frozen=True)
class GeneralFrameState:
    """Product frame state targeting generator index ``r``.

    Particle k (1-based) is polarized along the operator with index
    (k + r) mod K, in the state (I + O/|O|) / d.
    """

    n: int
    r_offset: int
    carried: list[int]
    states: list[np.ndarray]


@dataclass(frozen=True)
class ParticleSeparation:
    """Which observable one frame particle accumulates, if any."""

    particle: int
    carried: int
    changes: int | None  # None: no change; else index of the one observable


def _site_factors() -> dict[str, np.ndarray]:
    half = spin_operators(0.5)
    return {
        "I": np.eye(2, dtype=complex) / 2,
        "X": half.sx,
        "Y": half.sy,
        "Z": half.sz,
    }


def pauli_string_basis(n: int) -> OperatorBasis:
    """All 4^n - 1 products of single-site spin operators and I/2.

    Site factors run over {I/2, sx, sy, sz} with the all-identity string
    excluded. Dense construction is limited to n <= 2; beyond that the
    closure table alone has too many pairs to verify at full precision.
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if n > 2:
        raise ScopeError("dense basis beyond scope: n <= 2")
    letters = "IXYZ"
    factors = _site_factors()
    ops: list[np.ndarray] = []
    labels: list[str] = []
    for digits in itertools.product(range(4), repeat=n):
        if all(dig == 0 for dig in digits):
            continue
        ops.append(kron_all(factors[letters[dig]] for dig in digits))
        labels.append("".join(letters[dig] for dig in digits))
    return OperatorBasis(d=2**n, K=4**n - 1, ops=ops, labels=labels)


#: sentinel for commutators that are neither zero nor single-element
_NOT_PROPORTIONAL = object()


def _project_commutator(comm: np.ndarray, basis: OperatorBasis, k: int, l: int):
    """Classify [O_k, O_l]: None if zero, (m, coef) if proportional to O_m."""
    scale = float(np.max(np.abs(comm))) if comm.size else 0.0
    if scale <= PROPERTY_ATOL:
        return None
    best = None
    best_residual = np.inf
    for m, om in enumerate(basis.ops):
        if m in (k, l):
            continue
        coef = np.trace(om.conj().T @ comm) / np.trace(om.conj().T @ om)
        residual = float(np.max(np.abs(comm - coef * om)))
        if residual < best_residual:
            best_residual = residual
            best = (m, complex(coef))
    if best is not None and best_residual <= CLOSURE_ATOL:
        return best
    return _NOT_PROPORTIONAL


def basis_report(
    basis: OperatorBasis, *, expand_general: bool = False
) -> tuple[BasisReport, StructureTable]:
    """Verify the three basis properties and tabulate the commutator structure.

    Failures are reported, never raised; that is the point of a report.
    With ``expand_general`` a commutator that is not proportional to a
    single element is still entered as its full expansion over the basis
    (diagnostic mode for candidate sets without the closure property);
    otherwise it is recorded as a closure failure.
    """
    max_trace = max(abs(complex(np.trace(o))) for o in basis.ops)
    max_overlap = 0.0
    for k in range(basis.K):
        for l in range(k + 1, basis.K):
            max_overlap = max(
                max_overlap,
                abs(complex(np.trace(basis.ops[k] @ basis.ops[l]))),
            )

    entries: dict[tuple[int, int], tuple[int, complex] | None] = {}
    failures: list[tuple[int, int]] = []
    expansions: dict[tuple[int, int], list[tuple[int, complex]]] = {}
    for k in range(basis.K):
        entries[(k, k)] = None
        for l in range(k + 1, basis.K):
            comm = basis.ops[k] @ basis.ops[l] - basis.ops[l] @ basis.ops[k]
            verdict = _project_commutator(comm, basis, k, l)
            if verdict is _NOT_PROPORTIONAL:
                failures.append((k, l))
                if expand_general:
                    expansions[(k, l)] = [
                        (
                            m,
                            complex(
                                np.trace(om.conj().T @ comm)
                                / np.trace(om.conj().T @ om)
                            ),
                        )
                        for m, om in enumerate(basis.ops)
                    ]
                entries[(k, l)] = None
                entries[(l, k)] = None
            elif verdict is None:
                entries[(k, l)] = None
                entries[(l, k)] = None
            else:
                m, coef = verdict
                entries[(k, l)] = (m, coef)
                entries[(l, k)] = (m, -coef)

    report = BasisReport(
        d=basis.d,
        K=basis.K,
        traceless_ok=max_trace <= PROPERTY_ATOL,
        orthogonal_ok=max_overlap <= PROPERTY_ATOL,
        closed_ok=not failures,
        max_trace=float(max_trace),
        max_overlap=float(max_overlap),
        closure_failures=failures,
    )
    table = StructureTable(
        entries=entries, expansions=expansions if expand_general else None
    )
    return report, table


def f_sign(indices, size: int | None = None) -> int:
    """Total antisymmetry coefficient of an index tuple.

    Zero on any repeated index, otherwise the parity (+1/-1) of the tuple
    as a permutation of (0, 1, ..., K-1). ``size`` pins the expected tuple
    length; a mismatch is an error, as is an out-of-range index.
    """
    indices = list(indices)
    k = len(indices) if size is None else int(size)
    if len(indices) != k:
        raise ValueError(f"expected {k} indices, got {len(indices)}")
    if any(i < 0 or i >= k for i in indices):
        raise ValueError(f"indices must lie in [0, {k}), got {indices}")
    if len(set(indices)) != k:
        return 0
    # parity via cycle decomposition
    seen = [False] * k
    sign = 1
    for start in range(k):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = indices[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def build_general_T(basis: OperatorBasis) -> np.ndarray:
    """Signed sum over all orderings of the basis across K particles.

    Dense construction is K! terms of d^K-dimensional products, so it is
    rejected beyond K = 3; the n = 2 case (K = 15) is covered structurally
    elsewhere.
    """
    if basis.K > 3:
        raise ScopeError("combinatorial blowup - out of scope: K <= 3")
    dim = basis.d ** basis.K
    t = np.zeros((dim, dim), dtype=complex)
    for perm in itertools.permutations(range(basis.K)):
        sign = f_sign(perm)
        t += sign * kron_all(basis.ops[i] for i in perm)
    return t


def general_frame_state(basis: OperatorBasis, r: int) -> GeneralFrameState:
    """Frame of K-1 particles cycled so that the step implements O_r."""
    if not 0 <= r < basis.K:
        raise ValueError(f"target index {r} outside basis of size {basis.K}")
    carried = [(k + r) % basis.K for k in range(1, basis.K)]
    states = []
    for c in carried:
        o = basis.ops[c]
        rho = (np.eye(basis.d, dtype=complex) + o / basis.norm(c)) / basis.d
        states.append(validate_density_matrix(rho, name=f"frame state {c}"))
    n = int(round(np.log2(basis.d)))
    return GeneralFrameState(n=n, r_offset=r, carried=carried, states=states)


def general_step(
    rho: np.ndarray, basis: OperatorBasis, r: int, alpha: float, N: int
) -> tuple[np.ndarray, dict[tuple[int, int], float]]:
    """Exact generalized step channel targeting exp(-i (alpha/N) O_r).

    Only the n = 1 basis (K = 3) is dense-feasible. Returns the reduced
    system state and the expectation change of every basis element on every
    particle, keyed by (particle, operator index) with particle 0 the
    system and 1..K-1 the frame.
    """
    if basis.K > 3:
        raise ScopeError("generalized step beyond n = 1 is out of scope")
    rho = validate_density_matrix(np.asarray(rho, dtype=complex), name="system")
    if rho.shape != (basis.d, basis.d):
        raise ValueError(f"state dim {rho.shape[0]} does not match basis d={basis.d}")

    frame = general_frame_state(basis, r)
    eta_product = float(np.prod([basis.eta(k) for k in range(1, basis.K)]))
    t = build_general_T(basis)
    v = expm_generator(t, alpha / (eta_product * N))

    joint = rho
    for state in frame.states:
        joint = kron(joint, state)
    out = v @ joint @ v.conj().T

    dims = [basis.d] * basis.K
    deltas: dict[tuple[int, int], float] = {}
    initial = [rho] + frame.states
    for particle in range(basis.K):
        reduced = partial_trace(out, dims, keep=[particle])
        for k, op in enumerate(basis.ops):
            before = np.trace(op @ initial[particle]).real
            after = np.trace(op @ reduced).real
            deltas[(particle, k)] = float(after - before)
    rho_out = partial_trace(out, dims, keep=[0])
    return rho_out, deltas


def separation_classifier(
    table: StructureTable, r: int = 0, *, basis_size: int | None = None
) -> dict[int, ParticleSeparation]:
    """Predict which observable each frame particle accumulates.

    Particle k carries the operator with index (k + r) mod K. It stays
    unchanged when that operator commutes with the target generator O_r,
    and otherwise accumulates only the observable their commutator is
    proportional to.
    """
    if basis_size is None:
        basis_size = max(k for k, _ in table.entries) + 1
    out: dict[int, ParticleSeparation] = {}
    for particle in range(1, basis_size):
        carried = (particle + r) % basis_size
        entry = table.entry(r, carried)
        changes = None if entry is None else entry[0]
        out[particle] = ParticleSeparation(
            particle=particle, carried=carried, changes=changes
        )
    return out
