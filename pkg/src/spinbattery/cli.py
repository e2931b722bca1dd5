"""Command-line front end: protocol runs, sweeps, extraction, reports.

Commands
--------
rotate    run the framed rotation protocol once and check every bound
sweep     run a grid of (N, seed) points and fit the error decay slope
extract   run the spin-component extraction circuit
bounds    print the explicit bound values for given angle and N
basis     build and verify an operator basis of conserved quantities
conserve  measure conservation residuals of the step unitary

Exit codes: 0 success, 2 usage error, 3 scope error, 4 verification
failure (a bound check failed while its validity precondition held).

Output is deterministic: identical invocations produce byte-identical
reports, with any randomness fully determined by recorded seeds. CSV floats
carry 17 significant digits. Figures (``--plot DIR``) are rendered next to
the delimited output and duplicate its values, never extend them.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .basis import ScopeError, basis_report, pauli_string_basis
from .extraction import run_extraction
from .linalg import (
    expm_generator,
    pure_density,
    random_pure_state,
    trace_norm,
    validate_density_matrix,
)
from .protocol import (
    AXES,
    ProtocolConfig,
    ProtocolResult,
    bounds,
    run_protocol,
)
from .spin import build_V, conservation_residual, spin_operators

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SCOPE = 3
EXIT_VERIFY = 4

#: residual threshold for the ``conserve`` command, matching the step
#: unitary's exact-conservation contract
CONSERVATION_TOL = 1e-12

SWEEP_COLUMNS = [
    "N", "seed", "err",
    "sep_xx", "sep_yy", "sep_zz",
    "off_xy", "off_xz", "off_yx", "off_yz", "off_zx", "off_zy",
    "bound_total", "bound_diag", "bound_off", "pass",
]

SCHEMA_VERSION = 1


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if value < 1:
        raise argparse.ArgumentTypeError("N must be positive")
    return value


def _parse_alpha(text: str) -> np.ndarray:
    try:
        parts = [float(p) for p in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad angle list: {text!r}") from exc
    if len(parts) == 1:
        return np.array(parts)
    if len(parts) == 3:
        return np.array(parts)
    raise argparse.ArgumentTypeError("expected one angle or three: ax,ay,az")


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad integer list: {text!r}") from exc


def spin_coherent_state(s: float, theta: float, phi: float) -> np.ndarray:
    """Maximal-spin state rotated to polar angle theta, azimuth phi."""
    ops = spin_operators(s)
    top = np.zeros(ops.dim, dtype=complex)
    top[0] = 1.0
    u = expm_generator(ops.sz, phi) @ expm_generator(ops.sy, theta)
    return pure_density(u @ top)


def resolve_state(spec: str, s: float, row_seed: int | None = None) -> np.ndarray:
    """Build the initial density matrix from a state spec string.

    Specs: ``bloch:THETA,PHI`` (spin coherent state), ``mixed`` (I/d),
    ``random`` (seeded per sweep row), ``random:SEED``, ``file:PATH``
    (a .npy density matrix).
    """
    dim = spin_operators(s).dim
    if spec == "mixed":
        return np.eye(dim, dtype=complex) / dim
    if spec.startswith("bloch:"):
        try:
            theta, phi = (float(p) for p in spec[len("bloch:"):].split(","))
        except ValueError as exc:
            raise ValueError(f"bad bloch spec {spec!r}; expected bloch:theta,phi") from exc
        return spin_coherent_state(s, theta, phi)
    if spec == "random":
        if row_seed is None:
            raise ValueError("state spec 'random' needs a seed")
        rng = np.random.default_rng(row_seed)
        return pure_density(random_pure_state(dim, rng))
    if spec.startswith("random:"):
        seed = int(spec[len("random:"):])
        rng = np.random.default_rng(seed)
        return pure_density(random_pure_state(dim, rng))
    if spec.startswith("file:"):
        rho = np.load(spec[len("file:"):])
        return validate_density_matrix(rho, name="file state")
    raise ValueError(f"unknown state spec {spec!r}")


def _measured_separations(result: ProtocolResult) -> dict[str, float]:
    out: dict[str, float] = {}
    for j, comp in enumerate(AXES):
        out[f"sep_{comp}{comp}"] = abs(
            result.system_delta[j] + result.ledger.entry(comp, comp)
        )
    for comp in AXES:
        for part in AXES:
            if comp != part:
                out[f"off_{comp}{part}"] = abs(result.ledger.entry(comp, part))
    return out


def _result_row(N: int, seed: str, result: ProtocolResult) -> dict:
    row = {"N": N, "seed": seed, "err": float(result.error_trace_norm)}
    row.update({k: float(v) for k, v in _measured_separations(result).items()})
    row["bound_total"] = float(result.bound_values["total"])
    row["bound_diag"] = float(result.bound_values["separation_diag"])
    row["bound_off"] = float(result.bound_values["separation_off"])
    row["pass"] = all(result.passes.values())
    return row


def _row_to_csv(row: dict) -> str:
    cells = []
    for col in SWEEP_COLUMNS:
        value = row[col]
        if col in ("N", "seed"):
            cells.append(str(value))
        elif col == "pass":
            cells.append("true" if value else "false")
        else:
            cells.append(_fmt(value))
    return ",".join(cells)


def _ledger_dict(result: ProtocolResult) -> dict[str, list[float]]:
    return {part: [float(v) for v in result.ledger.parts[part]] for part in AXES}


def _payload(command: str, config: dict, results, bounds_obj, passes) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "results": results,
        "bounds": bounds_obj,
        "passes": passes,
    }


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# rotate


def cmd_rotate(args, parser) -> int:
    try:
        state = resolve_state(args.state, args.s)
        config = ProtocolConfig(
            s=args.s, N=args.N, alpha_vec=args.alpha, initial_state=state
        )
    except (ValueError, OSError) as exc:
        parser.error(str(exc))
    if not (args.N >= 36 * math.pi):
        print(
            f"warning: N = {args.N} < 36 pi; sequence bounds not yet valid",
            file=sys.stderr,
        )
    if args.s != 0.5:
        print("warning: bound constants assume spin-1/2", file=sys.stderr)

    result = run_protocol(config)
    row = _result_row(args.N, "", result)

    if args.format == "csv":
        text = ",".join(SWEEP_COLUMNS) + "\n" + _row_to_csv(row) + "\n"
    else:
        payload = _payload(
            "rotate",
            {
                "s": args.s,
                "N": args.N,
                "alpha": [float(a) for a in args.alpha],
                "state": args.state,
            },
            {
                "error_trace_norm": float(result.error_trace_norm),
                "system_delta": [float(v) for v in result.system_delta],
                "ledger": _ledger_dict(result),
                "measured": {
                    k: float(v) for k, v in _measured_separations(result).items()
                },
            },
            {
                **{k: float(v) for k, v in result.bound_values.items()},
                **result.bound_validity,
            },
            {k: bool(v) for k, v in result.passes.items()},
        )
        text = json.dumps(payload, indent=2) + "\n"
    _emit(text, args.out)

    failed = result.bound_validity["valid_sequence"] and not all(
        result.passes.values()
    )
    return EXIT_VERIFY if failed else EXIT_OK


# ---------------------------------------------------------------------------
# sweep


def _sweep_point(task: tuple) -> dict:
    s, n_iter, seed, alpha, state_spec = task
    state = resolve_state(state_spec, s, row_seed=seed)
    config = ProtocolConfig(s=s, N=n_iter, alpha_vec=alpha, initial_state=state)
    result = run_protocol(config)
    row = _result_row(n_iter, str(seed), result)
    row["_valid_sequence"] = result.bound_validity["valid_sequence"]
    return row


def cmd_sweep(args, parser) -> int:
    n_list = args.N_list
    if any(b <= a for a, b in zip(n_list, n_list[1:])) or not n_list:
        parser.error("N list must be strictly increasing")
    if any(n < 1 for n in n_list):
        parser.error("N must be positive")
    try:
        resolve_state(args.state, args.s, row_seed=args.seeds[0])
    except (ValueError, OSError) as exc:
        parser.error(str(exc))

    tasks = [
        (args.s, n, seed, args.alpha, args.state)
        for n in n_list
        for seed in args.seeds
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(t) for t in tasks]
    rows.sort(key=lambda r: (r["N"], int(r["seed"])))

    slope = None
    if len(n_list) >= 2:
        mean_err = [
            float(np.mean([r["err"] for r in rows if r["N"] == n])) for n in n_list
        ]
        slope = float(np.polyfit(np.log(n_list), np.log(mean_err), 1)[0])

    if args.format == "csv":
        lines = [",".join(SWEEP_COLUMNS)]
        lines += [_row_to_csv(r) for r in rows]
        if slope is not None:
            lines.append(
                ",".join(["slope", "", _fmt(slope)] + [""] * (len(SWEEP_COLUMNS) - 3))
            )
        text = "\n".join(lines) + "\n"
    else:
        clean = [{k: v for k, v in r.items() if not k.startswith("_")} for r in rows]
        payload = _payload(
            "sweep",
            {
                "s": args.s,
                "N_list": n_list,
                "alpha": [float(a) for a in args.alpha],
                "state": args.state,
                "seeds": args.seeds,
            },
            {"rows": clean, "slope": slope},
            {str(n): {k: float(v) for k, v in bounds(args.alpha, n).values.items()}
             for n in n_list},
            {f"{r['N']}/{r['seed']}": bool(r["pass"]) for r in rows},
        )
        text = json.dumps(payload, indent=2) + "\n"
    _emit(text, args.out)

    if args.plot:
        from .plotting import sweep_figures

        sweep_figures(rows, args.plot)

    failed = any(r["_valid_sequence"] and not r["pass"] for r in rows)
    return EXIT_VERIFY if failed else EXIT_OK


# ---------------------------------------------------------------------------
# extract


def cmd_extract(args, parser) -> int:
    try:
        state = resolve_state(args.state, 0.5)
        result = run_extraction(state, args.N)
    except (ValueError, OSError) as exc:
        parser.error(str(exc))

    marginal_dist = trace_norm(result.system_marginal - np.eye(2) / 2)
    ledger = {p: [float(v) for v in result.ledger.parts[p]] for p in AXES}
    targets = {p: [float(v) for v in result.target_gains[p]] for p in AXES}

    if args.format == "csv":
        lines = ["part,gain_x,gain_y,gain_z,target_x,target_y,target_z"]
        for p in AXES:
            lines.append(
                ",".join([p] + [_fmt(v) for v in ledger[p]] + [_fmt(v) for v in targets[p]])
            )
        text = "\n".join(lines) + "\n"
    else:
        payload = _payload(
            "extract",
            {"N": args.N, "state": args.state},
            {
                "ledger": ledger,
                "target_gains": targets,
                "marginal_trace_distance": float(marginal_dist),
            },
            None,
            None,
        )
        text = json.dumps(payload, indent=2) + "\n"
    _emit(text, args.out)

    if args.plot:
        from .plotting import extraction_figures

        extraction_figures(
            {"ledger": ledger, "target_gains": targets, "N": args.N}, args.plot
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# bounds


def cmd_bounds(args, parser) -> int:
    bound_set = bounds(args.alpha, args.N)
    values = {k: float(v) for k, v in bound_set.values.items()}
    validity = {
        "valid_step": bool(bound_set.valid_step),
        "valid_sequence": bool(bound_set.valid_sequence),
    }
    if args.format == "csv":
        lines = ["name,value"]
        lines += [f"{k},{_fmt(v)}" for k, v in values.items()]
        lines += [f"{k},{str(v).lower()}" for k, v in validity.items()]
        text = "\n".join(lines) + "\n"
    else:
        payload = _payload(
            "bounds",
            {"alpha": [float(a) for a in args.alpha], "N": args.N},
            values,
            {**values, **validity},
            None,
        )
        text = json.dumps(payload, indent=2) + "\n"
    _emit(text, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# basis


def cmd_basis(args, parser) -> int:
    try:
        basis = pauli_string_basis(args.n)
    except ScopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCOPE
    except ValueError as exc:
        parser.error(str(exc))
    report, table = basis_report(basis)

    structure = []
    for k in range(basis.K):
        for l in range(k + 1, basis.K):
            entry = table.entry(k, l)
            if entry is not None:
                m, coef = entry
                structure.append(
                    {
                        "k": basis.labels[k],
                        "l": basis.labels[l],
                        "m": basis.labels[m],
                        "coef_real": float(coef.real),
                        "coef_imag": float(coef.imag),
                    }
                )
    passes = {
        "traceless": bool(report.traceless_ok),
        "orthogonal": bool(report.orthogonal_ok),
        "closed": bool(report.closed_ok),
    }

    if args.format == "csv":
        lines = ["k,l,m,coef_real,coef_imag"]
        lines += [
            ",".join(
                [e["k"], e["l"], e["m"], _fmt(e["coef_real"]), _fmt(e["coef_imag"])]
            )
            for e in structure
        ]
        text = "\n".join(lines) + "\n"
    else:
        payload = _payload(
            "basis",
            {"n": args.n},
            {
                "d": basis.d,
                "K": basis.K,
                "labels": basis.labels,
                "max_trace": float(report.max_trace),
                "max_overlap": float(report.max_overlap),
                "nonzero_commutators": structure,
            },
            None,
            passes,
        )
        text = json.dumps(payload, indent=2) + "\n"
    _emit(text, args.out)
    return EXIT_OK if report.all_ok else EXIT_VERIFY


# ---------------------------------------------------------------------------
# conserve


def cmd_conserve(args, parser) -> int:
    alpha = float(args.alpha[0]) if args.alpha.size == 1 else float(
        np.max(np.abs(args.alpha))
    )
    try:
        v = build_V(args.s, alpha, args.N)
    except ValueError as exc:
        parser.error(str(exc))
    residuals = {axis: float(conservation_residual(v, axis)) for axis in AXES}
    ok = all(r <= CONSERVATION_TOL for r in residuals.values())

    if args.format == "csv":
        lines = ["component,residual"]
        lines += [f"{k},{_fmt(v)}" for k, v in residuals.items()]
        text = "\n".join(lines) + "\n"
    else:
        payload = _payload(
            "conserve",
            {"s": args.s, "alpha": alpha, "N": args.N},
            {"residuals": residuals, "tolerance": CONSERVATION_TOL},
            None,
            {f"conserve_{k}": bool(r <= CONSERVATION_TOL) for k, r in residuals.items()},
        )
        text = json.dumps(payload, indent=2) + "\n"
    _emit(text, args.out)
    return EXIT_OK if ok else EXIT_VERIFY


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinbattery",
        description="Frame rotation protocol with per-component spin batteries",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, default_format):
        p.add_argument("--format", choices=("csv", "json"), default=default_format)
        p.add_argument("--out", default=None, help="output path (default stdout)")

    p = sub.add_parser("rotate", help="run the framed rotation protocol once")
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--alpha", type=_parse_alpha, required=True, metavar="AX,AY,AZ")
    p.add_argument("--N", type=_positive_int, required=True)
    p.add_argument("--state", default="mixed")
    add_common(p, "json")
    p.set_defaults(func=cmd_rotate)

    p = sub.add_parser("sweep", help="sweep N and fit the error decay")
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--alpha", type=_parse_alpha, required=True, metavar="AX,AY,AZ")
    p.add_argument("--N-list", dest="N_list", type=_parse_int_list, required=True)
    p.add_argument("--state", default="random")
    p.add_argument("--seeds", type=_parse_int_list, default=[0])
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--plot", default=None, metavar="DIR",
                   help="also render figures into DIR")
    add_common(p, "csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("extract", help="extract all three spin components")
    p.add_argument("--state", required=True)
    p.add_argument("--N", type=_positive_int, required=True)
    p.add_argument("--plot", default=None, metavar="DIR")
    add_common(p, "json")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("bounds", help="print the explicit bound values")
    p.add_argument("--alpha", type=_parse_alpha, required=True)
    p.add_argument("--N", type=_positive_int, required=True)
    add_common(p, "json")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("basis", help="verify an operator basis")
    p.add_argument("--n", type=int, required=True)
    add_common(p, "json")
    p.set_defaults(func=cmd_basis)

    p = sub.add_parser("conserve", help="conservation residuals of a step unitary")
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--alpha", type=_parse_alpha, required=True)
    p.add_argument("--N", type=_positive_int, required=True)
    add_common(p, "json")
    p.set_defaults(func=cmd_conserve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except ScopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCOPE


if __name__ == "__main__":
    sys.exit(main())
