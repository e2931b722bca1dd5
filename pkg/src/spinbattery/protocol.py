"""Sequential-channel simulation of the frame rotation protocol.

A target rotation exp(-iH), H = sum_k alpha_k s_k, is realized as N
iterations of three small axis steps. Each axis step couples the system to
two fresh reference spins polarized transverse to the rotation axis and
applies the step unitary built from the triple-product coupling; tracing
out the pair yields the exact step channel on the system.

Because every reference pair interacts exactly once and is never touched
again, composing the 8-dimensional (for spin-1/2) step channels in sequence
is *exact* -- it reproduces the monolithic unitary on the full system plus
6N reference spins without ever building that space. That is the central
performance decision of this package, and ``monolithic`` cross-checks it.

Each reference spin is assigned to the battery (x, y or z part of the
frame) whose component it absorbs at first order; the ledger accumulates
the exact expectation changes of every consumed reference spin, grouped by
battery part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    embed,
    expm_generator,
    kron,
    partial_trace,
    trace_norm,
    validate_density_matrix,
)
from .spin import (
    AXES,
    LEVI_CIVITA,
    SpinOperators,
    _check_axis,
    _check_spin,
    build_V,
    coupling_constant,
    spin_operators,
    tau_expectations,
    tau_state,
)

E_MINUS_2 = math.e - 2.0

#: per-step channel error constant: 40 (e-2) (alpha/N)^2
STEP_CHANNEL_COEFF = 40.0 * E_MINUS_2
#: per-step battery delta constant: 18 (e-2) (alpha/N)^2
STEP_DELTA_COEFF = 18.0 * E_MINUS_2
#: full-run accuracy constant: (648 + 16 (e-2)) pi^2 / N
TOTAL_ERROR_COEFF = (648.0 + 16.0 * E_MINUS_2) * math.pi**2
#: diagonal separation constant: 648 pi^2 / N
SEPARATION_DIAG_COEFF = 648.0 * math.pi**2
#: off-diagonal separation constant: 324 pi^2 / N
SEPARATION_OFF_COEFF = 324.0 * math.pi**2

#: axis -> (ref1 polarization, ref2 polarization, ref1 battery, ref2 battery)
#: ref1 points along the next axis (cyclic), ref2 along the one after; each
#: spin absorbs the component it does *not* point along and is banked there.
PAIR_LAYOUT = {
    "x": ("y", "z", "z", "y"),
    "y": ("z", "x", "x", "z"),
    "z": ("x", "y", "y", "x"),
}


@dataclass
class BatteryLedger:
    """Accumulated expectation changes per battery part.

    ``parts[k]`` is the 3-vector of (delta s_x, delta s_y, delta s_z)
    absorbed so far by the k-part of the reference frame.
    """

    parts: dict[str, np.ndarray] = field(
        default_factory=lambda: {k: np.zeros(3) for k in AXES}
    )

    def add(self, part: str, delta: np.ndarray) -> None:
        self.parts[_check_axis(part)] += delta

    def entry(self, component: str, part: str) -> float:
        """Change of the ``component`` spin stored in the ``part`` battery."""
        return float(self.parts[_check_axis(part)][AXES.index(component)])

    def copy(self) -> "BatteryLedger":
        return BatteryLedger({k: v.copy() for k, v in self.parts.items()})


@dataclass(frozen=True)
class StepResult:
    """Outcome of one axis step: new system state plus reference changes."""

    rho_out: np.ndarray
    delta_ref1: np.ndarray
    delta_ref2: np.ndarray
    part_ref1: str
    part_ref2: str


@dataclass(frozen=True)
class ProtocolConfig:
    """Inputs of one full protocol run."""

    s: float
    N: int
    alpha_vec: np.ndarray
    initial_state: np.ndarray

    def __post_init__(self):
        _check_spin(self.s)
        if self.N < 1:
            raise ValueError(f"N must be positive, got {self.N}")
        alpha = np.asarray(self.alpha_vec, dtype=float)
        if alpha.shape != (3,):
            raise ValueError("alpha_vec must have three components")
        if np.max(np.abs(alpha)) > math.pi + 1e-12:
            raise ValueError("rotation components must satisfy |alpha_k| <= pi")
        object.__setattr__(self, "alpha_vec", alpha)
        dim = spin_operators(self.s).dim
        rho = validate_density_matrix(self.initial_state, name="initial_state")
        if rho.shape != (dim, dim):
            raise ValueError(f"initial state must be {dim}x{dim} for spin {self.s}")
        object.__setattr__(self, "initial_state", rho)


@dataclass(frozen=True)
class BoundSet:
    """The five explicit bound values plus their validity preconditions."""

    values: dict[str, float]
    valid_step: bool      # N >= 6 alpha_max
    valid_sequence: bool  # N >= 36 pi


@dataclass(frozen=True)
class ProtocolResult:
    rho_final: np.ndarray
    ledger: BatteryLedger
    system_delta: np.ndarray
    error_trace_norm: float
    bound_values: dict[str, float]
    passes: dict[str, bool]
    bound_validity: dict[str, bool]


def _spin_expectations(rho: np.ndarray, ops: SpinOperators) -> np.ndarray:
    return np.array([np.trace(op @ rho).real for op in ops.as_tuple()])


def _pair_step(
    rho_sys: np.ndarray,
    sys_dims: list[int],
    v_matrix: np.ndarray,
    ref_ops: SpinOperators,
    tau1: np.ndarray,
    tau2: np.ndarray,
    tau1_expect: np.ndarray,
    tau2_expect: np.ndarray,
):
    """Conjugate rho_sys x tau1 x tau2 by the step unitary and trace the pair.

    ``v_matrix`` must already act on the full space sys_dims + [dr, dr].
    Returns the reduced system state and the exact expectation change of
    each reference spin.
    """
    joint = kron(kron(rho_sys, tau1), tau2)
    out = v_matrix @ joint @ v_matrix.conj().T
    dims = sys_dims + [ref_ops.dim, ref_ops.dim]
    n_sys = len(sys_dims)
    rho_out = partial_trace(out, dims, keep=range(n_sys))
    ref1 = partial_trace(out, dims, keep=[n_sys])
    ref2 = partial_trace(out, dims, keep=[n_sys + 1])
    d1 = _spin_expectations(ref1, ref_ops) - tau1_expect
    d2 = _spin_expectations(ref2, ref_ops) - tau2_expect
    return rho_out, d1, d2


def _lifted_step_unitary(
    sys_dims: list[int], target: int, s: float, alpha: float, N: int
) -> np.ndarray:
    """Step unitary whose system leg is embedded at ``target`` of ``sys_dims``.

    The coupling acts on the target factor and the two appended reference
    legs; every other register factor is a spectator.
    """
    ops = spin_operators(s)
    full_dims = list(sys_dims) + [ops.dim, ops.dim]
    n = len(full_dims)
    t = np.zeros((int(np.prod(full_dims)),) * 2, dtype=complex)
    for (j, k, l), sign in LEVI_CIVITA.items():
        t += sign * (
            embed(ops.component(j), full_dims, target)
            @ embed(ops.component(k), full_dims, n - 2)
            @ embed(ops.component(l), full_dims, n - 1)
        )
    return expm_generator(t, coupling_constant(s, alpha, N))


class _StepEngine:
    """Per-run cache of step unitaries and pair states, one entry per axis."""

    def __init__(self, sys_dims: list[int], target: int, s: float, N: int):
        self.sys_dims = [int(d) for d in sys_dims]
        self.target = target
        self.s = s
        self.N = N
        self.ops = spin_operators(s)
        self._unitaries: dict[tuple[str, float], np.ndarray] = {}
        self._taus: dict[str, tuple] = {}

    def step(self, rho: np.ndarray, axis: str, alpha: float):
        key = (axis, alpha)
        if key not in self._unitaries:
            if len(self.sys_dims) == 1:
                v = build_V(self.s, alpha, self.N).matrix
            else:
                v = _lifted_step_unitary(
                    self.sys_dims, self.target, self.s, alpha, self.N
                )
            self._unitaries[key] = v
        if axis not in self._taus:
            ax1, ax2, _, _ = PAIR_LAYOUT[axis]
            self._taus[axis] = (
                tau_state(self.s, ax1),
                tau_state(self.s, ax2),
                tau_expectations(self.s, ax1),
                tau_expectations(self.s, ax2),
            )
        tau1, tau2, e1, e2 = self._taus[axis]
        return _pair_step(
            rho, self.sys_dims, self._unitaries[key], self.ops, tau1, tau2, e1, e2
        )


def axis_step(
    rho: np.ndarray,
    axis: str,
    alpha: float,
    N: int,
    s: float = 0.5,
    *,
    dims: list[int] | None = None,
    target: int = 0,
) -> StepResult:
    """One exact small-rotation step about ``axis`` using a fresh reference pair.

    The pair is polarized per PAIR_LAYOUT; the step unitary acts on the
    system and the pair, and the pair is traced out. ``dims``/``target``
    embed the interaction when the rotated spin lives inside a larger
    register (identity on the other factors).
    """
    axis = _check_axis(axis)
    s = _check_spin(s)
    ops = spin_operators(s)
    if dims is None:
        dims = [ops.dim]
    dims = [int(d) for d in dims]
    if dims[target] != ops.dim:
        raise ValueError(f"target factor dim {dims[target]} does not match spin {s}")
    expected = int(np.prod(dims))
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (expected, expected):
        raise ValueError(f"state has shape {rho.shape}, expected {expected} square")

    _, _, part1, part2 = PAIR_LAYOUT[axis]
    if alpha == 0.0:
        return StepResult(rho.copy(), np.zeros(3), np.zeros(3), part1, part2)

    engine = _StepEngine(dims, target, s, N)
    rho_out, d1, d2 = engine.step(rho, axis, alpha)
    return StepResult(rho_out, d1, d2, part1, part2)


def step_error(
    rho: np.ndarray, axis: str, alpha: float, N: int, s: float = 0.5
) -> float:
    """Trace distance between one axis step and the ideal small rotation.

    The ideal target is conjugation by exp(-i (alpha/N) s_axis). The value is
    returned regardless of whether the N >= 6 alpha validity condition of
    the analytic bound holds; checking the bound is a separate concern.
    """
    result = axis_step(rho, axis, alpha, N, s)
    u = expm_generator(spin_operators(s).component(axis), alpha / N)
    rho = np.asarray(rho, dtype=complex)
    return trace_norm(result.rho_out - u @ rho @ u.conj().T)


def general_step(
    rho: np.ndarray, alpha_vec, N: int, s: float = 0.5
) -> tuple[np.ndarray, list[StepResult]]:
    """One small rotation about a general axis: x step, then y, then z.

    Axes with a vanishing component are exact no-ops and consume no
    reference pair, so they produce no StepResult.
    """
    alpha_vec = np.asarray(alpha_vec, dtype=float)
    steps: list[StepResult] = []
    for axis, alpha in zip(AXES, alpha_vec):
        if alpha == 0.0:
            continue
        step = axis_step(rho, axis, alpha, N, s)
        rho = step.rho_out
        steps.append(step)
    return rho, steps


def apply_framed_rotation(
    rho: np.ndarray,
    alpha_vec,
    N: int,
    *,
    dims: list[int] | None = None,
    target: int = 0,
    s: float = 0.5,
    ledger: BatteryLedger | None = None,
) -> tuple[np.ndarray, BatteryLedger]:
    """Realize exp(-i sum alpha_k s_k) on one spin through N framed iterations.

    Works on a bare spin (default) or on one factor of a larger register
    (``dims``/``target``), which is how circuit gates are driven through the
    frame. Reference-spin changes accrue to ``ledger`` (a fresh one if not
    given). Step unitaries are built once per axis and reused across
    iterations.
    """
    s = _check_spin(s)
    if dims is None:
        dims = [spin_operators(s).dim]
    alpha_vec = np.asarray(alpha_vec, dtype=float)
    if ledger is None:
        ledger = BatteryLedger()
    rho = np.asarray(rho, dtype=complex)

    active = [(axis, a) for axis, a in zip(AXES, alpha_vec) if a != 0.0]
    if not active:
        return rho.copy(), ledger

    engine = _StepEngine(dims, target, s, N)
    for _ in range(N):
        for axis, alpha in active:
            rho, d1, d2 = engine.step(rho, axis, alpha)
            _, _, part1, part2 = PAIR_LAYOUT[axis]
            ledger.add(part1, d1)
            ledger.add(part2, d2)
    return rho, ledger


def _evaluate_passes(
    error: float, system_delta: np.ndarray, ledger: BatteryLedger, N: int
) -> dict[str, bool]:
    passes = {"total": error <= TOTAL_ERROR_COEFF / N}
    diag_bound = SEPARATION_DIAG_COEFF / N
    off_bound = SEPARATION_OFF_COEFF / N
    for j, comp in enumerate(AXES):
        balance = abs(system_delta[j] + ledger.entry(comp, comp))
        passes[f"sep_{comp}{comp}"] = balance <= diag_bound
    for comp in AXES:
        for part in AXES:
            if comp != part:
                passes[f"off_{comp}{part}"] = (
                    abs(ledger.entry(comp, part)) <= off_bound
                )
    return passes


def run_protocol(config: ProtocolConfig) -> ProtocolResult:
    """Run the full N-iteration protocol and evaluate every bound.

    The ledger is the exact sum of per-step reference-spin changes grouped
    by battery part; the reported error is the trace distance to the ideal
    target exp(-iH) conjugation (not to the per-step Trotter composite).
    Deterministic: identical configs produce bit-identical results.
    """
    ops = spin_operators(config.s)
    exp_start = _spin_expectations(config.initial_state, ops)

    rho, ledger = apply_framed_rotation(
        config.initial_state, config.alpha_vec, config.N, s=config.s
    )

    system_delta = _spin_expectations(rho, ops) - exp_start
    if np.any(config.alpha_vec):
        h = sum(a * op for a, op in zip(config.alpha_vec, ops.as_tuple()))
        u_target = expm_generator(h, 1.0)
        target = u_target @ config.initial_state @ u_target.conj().T
    else:
        target = config.initial_state
    error = trace_norm(rho - target)

    bound_set = bounds(config.alpha_vec, config.N)
    return ProtocolResult(
        rho_final=rho,
        ledger=ledger,
        system_delta=system_delta,
        error_trace_norm=error,
        bound_values=bound_set.values,
        passes=_evaluate_passes(error, system_delta, ledger, config.N),
        bound_validity={
            "valid_step": bound_set.valid_step,
            "valid_sequence": bound_set.valid_sequence,
        },
    )


def generator_from_unitary(u: np.ndarray) -> np.ndarray:
    """Rotation vector (alpha_x, alpha_y, alpha_z) with exp(-i sum alpha_k s_k)
    equal to ``u`` up to a global phase.

    The Hermitian generator is i log(u) with eigenphases on the principal
    branch (-pi, pi], projected onto its traceless part.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError("expected a 2x2 unitary")
    defect = float(np.max(np.abs(u @ u.conj().T - np.eye(2))))
    if defect > 1e-10:
        raise ValueError(f"matrix is not unitary (defect {defect:.3e})")
    evals, evecs = np.linalg.eig(u)
    # i log(u) has eigenvalues -arg(u_j), with arg on (-pi, pi]
    phases = -np.angle(evals)
    # eigenvectors of a unitary are orthogonal up to degeneracy; re-orthonormalize
    q, _ = np.linalg.qr(evecs)
    h = (q * phases) @ q.conj().T
    h = (h + h.conj().T) / 2
    h -= np.trace(h).real / 2 * np.eye(2)
    ops = spin_operators(0.5)
    # tr(s_j s_k) = delta_jk / 2, so alpha_j = 2 tr(s_j h)
    return np.array([2 * np.trace(op @ h).real for op in ops.as_tuple()])


def bounds(alpha, N) -> BoundSet:
    """The five explicit bound values for the given rotation size and N.

    ``alpha`` may be a single axis angle or the vector of three; the
    per-step bounds use its largest magnitude. The constants assume
    spin-1/2. Validity flags report the preconditions N >= 6 alpha (step
    bounds) and N >= 36 pi (sequence bounds).
    """
    alpha_arr = np.atleast_1d(np.asarray(alpha, dtype=float))
    alpha_max = float(np.max(np.abs(alpha_arr)))
    if N <= 0:
        raise ValueError(f"N must be positive, got {N}")
    ratio = alpha_max / N
    values = {
        "step_channel": STEP_CHANNEL_COEFF * ratio**2,
        "step_delta": STEP_DELTA_COEFF * ratio**2,
        "total": TOTAL_ERROR_COEFF / N,
        "separation_diag": SEPARATION_DIAG_COEFF / N,
        "separation_off": SEPARATION_OFF_COEFF / N,
    }
    return BoundSet(
        values=values,
        valid_step=N >= 6.0 * alpha_max,
        valid_sequence=N >= 36.0 * math.pi,
    )


def verify(result: ProtocolResult, N: int) -> dict[str, bool]:
    """Check a finished run against the accuracy and separation bounds.

    Keys: ``total`` for the trace-norm error, ``sep_jj`` for the diagonal
    balance |delta s_j + delta S_j^(j)|, and ``off_jk`` for the j-component
    leaked into the k battery. Comparisons are raw measured-vs-bound;
    validity preconditions gate how callers act on a failure, not whether
    it is reported.
    """
    return _evaluate_passes(
        result.error_trace_norm, result.system_delta, result.ledger, N
    )
