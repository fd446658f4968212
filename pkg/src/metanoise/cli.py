"""Command-line experiment runner.

Every data file starts with ``#`` header lines holding the package version
and the fully resolved configuration, followed by plain CSV. Exit codes:
0 ok, 1 configuration error, 2 invariant violation, 3 resource limit.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .analog import (
    TRACE_ASSERT_TOL,
    Schedule,
    anneal,
    anneal_problem,
    asp_problem,
    asp_w_state,
    fidelity,
    relative_error,
    single_qubit_flip,
    w_state,
)
from .circuit import Circuit, CliffordGate, Layer
from .errors import (
    ConfigError,
    InvariantViolation,
    MetanoiseError,
    ResourceLimitError,
    StepSizeError,
)
from .experiments import nibp_sweep
from .liouvillian import (
    Liouvillian,
    PauliChannel,
    build_superoperator,
    metastable_manifold,
    spectral_decomposition,
)
from .pauli import CliffordTableau
from .resilience import (
    StabilizerState,
    algorithm1_trace,
    hea_min_multiplicity,
    lambda_m_exact,
    sm_recurrence,
)

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_RESOURCE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _floats(text: str, count: int | None = None) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None
    if count is not None and len(vals) != count:
        raise ConfigError(f"expected {count} numbers, got {text!r}")
    return vals


def parse_range(text: str) -> list[int]:
    """``start:stop:step`` (inclusive stop) or a comma list of integers."""
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) == 2:
                parts.append(1)
            start, stop, step = parts
            if step <= 0 or stop < start:
                raise ValueError
            return list(range(start, stop + 1, step))
        return [int(p) for p in text.split(",")]
    except ValueError:
        raise ConfigError(f"bad layer range {text!r}; use start:stop:step") from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=str, default=None, help="output CSV path (stdout if omitted)")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--config", type=str, default=None, help="JSON file of parameters")

    p = _Parser(prog="metanoise", description="Metastability-aware noise experiments.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="experiment", required=True, parser_class=_Parser)

    s = sub.add_parser("nibp", parents=[common], help="gradient and cost-distance decay vs depth")
    s.add_argument("--n", type=int, default=8)
    s.add_argument("--layers", type=str, default="10:100:10")
    s.add_argument("--axes", type=str, default="x,y")
    s.add_argument("--q", type=str, default="0.5,0,0.5")
    s.add_argument("--samples", type=int, default=1000)
    s.add_argument("--batch", type=int, default=20)

    s = sub.add_parser("spectrum", parents=[common], help="Liouvillian spectrum and metastable manifold")
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--hamiltonian", type=str, default="", help="terms like 'X:0.5,ZZ:1'")
    s.add_argument("--jumps", type=str, default="Z:0.1", help="jumps like 'Z:0.1,X:1e-3'")
    s.add_argument("--tau2", type=float, default=None)

    s = sub.add_parser("resilience", parents=[common], help="resilience index and Clifford-tracking bound")
    s.add_argument("--check-sm", action="store_true", help="print the ansatz multiplicity counts")
    s.add_argument("--n", type=int, default=8)
    s.add_argument("--circuit", type=str, default=None, help="JSON circuit file")
    s.add_argument("--exact", action="store_true", help="also compute the exact index (n <= 5)")

    s = sub.add_parser("flip", parents=[common], help="single-qubit flip under anisotropic noise")
    s.add_argument("--gamma-x", type=float, default=1.0)
    s.add_argument("--eps", type=float, default=0.01)
    s.add_argument("--dt", type=float, default=None)

    s = sub.add_parser("asp", parents=[common], help="adiabatic W-state preparation")
    s.add_argument("--n", type=int, default=5)
    s.add_argument("--T", type=float, default=100.0)
    s.add_argument("--dt", type=float, default=None)
    s.add_argument("--init", choices=("z", "x"), default="z")
    s.add_argument("--noisy", action="store_true")
    s.add_argument("--gamma", type=float, default=None, help="dephasing rate (default sqrt(1/T))")
    s.add_argument("--samples", type=int, default=201)

    s = sub.add_parser("anneal", parents=[common], help="two-qubit forward/reverse annealing")
    s.add_argument("--mode", choices=("forward", "reverse"), default="forward")
    s.add_argument("--T", type=float, default=500.0)
    s.add_argument("--dt", type=float, default=None)
    s.add_argument("--gammas", type=str, default="0,0,0")
    s.add_argument("--hold", type=float, default=None, help="held s value (0.02 forward, 0.98 reverse)")
    s.add_argument("--ramp", type=float, default=0.1, help="ramp duration as a fraction of T")
    s.add_argument("--samples", type=int, default=201)
    return p


def resolve(argv: Sequence[str]) -> dict[str, Any]:
    """Parse arguments, merge a JSON config file and return the resolved configuration."""
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = vars(args).copy()
    if args.config:
        path = Path(args.config)
        try:
            data = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        for key, value in data.items():
            attr = key.replace("-", "_")
            if attr == "experiment":
                continue
            if attr not in cfg or attr == "config":
                raise ConfigError(f"{path}: unknown field {key!r}")
            cfg[attr] = value
        if data.get("experiment", args.experiment) != args.experiment:
            raise ConfigError(f"{path}: experiment does not match subcommand")
    cfg.pop("config")
    return cfg


def _header(cfg: dict[str, Any]) -> str:
    # output location and worker count do not affect the data
    shown = {k: v for k, v in sorted(cfg.items()) if k not in ("out", "threads")}
    return f"# metanoise {__version__}\n# config: {json.dumps(shown, sort_keys=True)}\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _emit(cfg: dict[str, Any], columns: Sequence[str], rows, summary: dict[str, Any]) -> str:
    buf = io.StringIO()
    buf.write(_header(cfg))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    buf.write(f"# summary: {json.dumps(summary, sort_keys=True)}\n")
    text = buf.getvalue()
    if cfg.get("out"):
        Path(cfg["out"]).write_text(text)
    return text


def _check_finite(values, what: str) -> None:
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvariantViolation(f"non-finite {what}")


def _json_float(x: float):
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return x


# ---------------------------------------------------------------------------
# subcommands


def run_nibp(cfg):
    layers = parse_range(str(cfg["layers"]))
    axes = [a.strip() for a in str(cfg["axes"]).split(",")]
    if any(a not in ("x", "y") for a in axes):
        raise ConfigError(f"axes must be x and/or y, got {cfg['axes']!r}")
    q = _floats(str(cfg["q"]), 3)
    rows = nibp_sweep(
        cfg["n"], layers, axes, q, cfg["samples"], cfg["seed"],
        batch=cfg["batch"], threads=cfg["threads"],
    )
    values = [r.values() for r in rows]
    _check_finite([v[2:] for v in values], "NIBP statistics")
    summary = {"rows": len(rows), "samples": cfg["samples"]}
    return _emit(cfg, rows[0].FIELDS, values, summary)


def _parse_terms(text: str) -> list[tuple[str, float]]:
    out = []
    for item in filter(None, (t.strip() for t in text.split(","))):
        try:
            label, value = item.split(":")
            out.append((label.strip(), float(value)))
        except ValueError:
            raise ConfigError(f"bad term {item!r}; use LABEL:value") from None
    return out


def run_spectrum(cfg):
    n = cfg["n"]
    ham = dict(_parse_terms(str(cfg["hamiltonian"])))
    jumps = _parse_terms(str(cfg["jumps"]))
    for label in list(ham) + [j for j, _ in jumps]:
        if len(label.lstrip("+-i")) != n:
            raise ConfigError(f"Pauli label {label!r} does not act on {n} qubits")
    gen = Liouvillian.from_paulis(n, ham, jumps)
    spec = spectral_decomposition(build_superoperator(gen))
    if np.max(spec.eigenvalues.real) > 1e-10:
        raise InvariantViolation("eigenvalue with positive real part")
    rows = [(j, float(l.real), float(l.imag)) for j, l in enumerate(spec.eigenvalues)]
    summary: dict[str, Any] = {"dimension": len(rows)}
    if cfg["tau2"] is not None:
        man = metastable_manifold(spec, cfg["tau2"])
        summary["metastable_indices"] = [int(i) for i in man.indices]
        summary["gap_ratio"] = None if math.isnan(man.gap_ratio) else man.gap_ratio
    return _emit(cfg, ("index", "re", "im"), rows, summary)


def load_circuit_file(path: str):
    """Read ``{"n", "state", "layers": [{"clifford" | "gates", "noise"}]}``."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read circuit file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    try:
        n = int(data["n"])
        state = data.get("state", "0" * n)
        if isinstance(state, str):
            rho = StabilizerState.from_bitstring(state)
        else:
            rho = StabilizerState.from_generators(state)
        cliffords, noise = [], []
        for k, layer in enumerate(data["layers"]):
            unknown = set(layer) - {"clifford", "gates", "noise"}
            if unknown:
                raise ConfigError(f"{path}: layer {k}: unknown fields {sorted(unknown)}")
            if "clifford" in layer:
                tab = CliffordTableau.from_lines(layer["clifford"])
            else:
                tab = CliffordTableau.identity(n)
                for g in layer.get("gates", []):
                    name, *qubits = g.split()
                    qubits = [int(x) for x in qubits]
                    factory = {
                        "CZ": CliffordTableau.cz, "CNOT": CliffordTableau.cnot,
                        "H": CliffordTableau.h, "S": CliffordTableau.s,
                        "X": CliffordTableau.pauli_x, "Y": CliffordTableau.pauli_y,
                        "Z": CliffordTableau.pauli_z,
                    }.get(name.upper())
                    if factory is None:
                        raise ConfigError(f"{path}: layer {k}: unknown gate {name!r}")
                    tab = tab.then(factory(*qubits, n))
            cliffords.append(tab)
            noise.append(PauliChannel.from_weights(n, [(s, float(p)) for s, p in layer.get("noise", [])]))
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: invalid circuit description: {exc}") from None
    return n, rho, cliffords, noise


def run_resilience(cfg):
    if cfg["check_sm"]:
        n = cfg["n"]
        a_n = sm_recurrence(n)
        n_y = hea_min_multiplicity(n, "y")
        text = f"{n_y}\n{a_n}\n"
        if cfg.get("out"):
            Path(cfg["out"]).write_text(_header(cfg) + "N_y,a_n\n" + f"{n_y},{a_n}\n")
        return text
    if not cfg["circuit"]:
        raise ConfigError("resilience needs --check-sm or --circuit FILE")
    n, rho, cliffords, noise = load_circuit_file(cfg["circuit"])
    trace = algorithm1_trace(rho, cliffords, noise)
    bound = 0.0
    for m in trace.minima:
        bound += m
    summary: dict[str, Any] = {"lambda_m_tilde": _json_float(bound)}
    if cfg["exact"]:
        layers = tuple(Layer((CliffordGate(t),), ch) for t, ch in zip(cliffords, noise))
        rep = lambda_m_exact(Circuit(n, layers), rho.to_dense())
        summary["lambda_m"] = _json_float(rep.lambda_m)
        summary["multiplicity"] = rep.multiplicity
        exact_minima = rep.per_layer_minima
    else:
        exact_minima = (None,) * len(trace.minima)
    rows = [
        (k + 1, m, "" if e is None else e) for k, (m, e) in enumerate(zip(trace.minima, exact_minima))
    ]
    return _emit(cfg, ("layer", "bound_layer_min", "exact_running_min"), rows, summary)


def run_flip(cfg):
    one = np.array([0, 1])
    rows = []
    for axis in ("x", "y"):
        num, closed = single_qubit_flip(axis, cfg["gamma_x"], cfg["eps"], dt=cfg["dt"])
        rows.append((axis, fidelity(num, one), fidelity(closed, one), float(np.max(np.abs(num - closed)))))
    summary = {"y_more_resilient": rows[1][1] > rows[0][1]}
    return _emit(cfg, ("axis", "fidelity_integrated", "fidelity_closed_form", "max_abs_diff"), rows, summary)


def _trajectory_rows(traj, target, H):
    F = traj.fidelity(target)
    E = traj.energy(H)
    err = traj.trace_error
    if np.max(err) > TRACE_ASSERT_TOL or np.max(traj.hermiticity_error) > 1e-9:
        raise InvariantViolation(f"trace error {np.max(err):.3g} exceeds tolerance")
    return F, E, list(zip(traj.times.tolist(), F.tolist(), E.tolist(), err.tolist()))


def run_asp(cfg):
    traj = asp_w_state(
        cfg["n"], cfg["init"], T=cfg["T"], dt=cfg["dt"], gamma=cfg["gamma"],
        noisy=cfg["noisy"], samples=cfg["samples"],
    )
    W = w_state(cfg["n"])
    F, E, rows = _trajectory_rows(traj, W, asp_problem(cfg["n"], cfg["init"]).Hf)
    k = int(np.argmax(F))
    summary = {"peak_fidelity": float(F[k]), "peak_time": float(traj.times[k]), "final_fidelity": float(F[-1])}
    return _emit(cfg, ("t", "fidelity", "energy", "trace_error"), rows, summary)


def run_anneal(cfg):
    T = cfg["T"]
    gammas = _floats(str(cfg["gammas"]), 3)
    if cfg["mode"] == "forward":
        sched = Schedule.forward(T, hold=cfg["hold"] if cfg["hold"] is not None else 0.02, ramp=cfg["ramp"])
    else:
        sched = Schedule.reverse(T, dip=cfg["hold"] if cfg["hold"] is not None else 0.98, ramp=cfg["ramp"])
    E_bar, _ = anneal(sched, dt=cfg["dt"], samples=cfg["samples"])
    E, traj = anneal(sched, gammas, dt=cfg["dt"], samples=cfg["samples"])
    problem = anneal_problem(cfg["mode"] == "reverse")
    ground = np.array([1, 0, 0, 0])
    _, _, rows = _trajectory_rows(traj, ground, problem.Hf)
    summary = {"E_bar": E_bar, "E_final": E, "relative_error_percent": relative_error(E, E_bar)}
    return _emit(cfg, ("t", "ground_fidelity", "energy", "trace_error"), rows, summary)


RUNNERS = {
    "nibp": run_nibp,
    "spectrum": run_spectrum,
    "resilience": run_resilience,
    "flip": run_flip,
    "asp": run_asp,
    "anneal": run_anneal,
}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cfg = resolve(argv)
        text = RUNNERS[cfg["experiment"]](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvariantViolation, StepSizeError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (MetanoiseError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not cfg.get("out") or cfg["experiment"] == "resilience" and cfg.get("check_sm"):
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
