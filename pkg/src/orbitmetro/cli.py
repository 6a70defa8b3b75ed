"""``orbitmetro`` command line.

Every subcommand accepts ``--config FILE``: a plain ``key = value`` file whose
keys are the long flag names (``n``, ``samples``, ``seed``, ...).  Flags given
on the command line win over the file.

Exit codes: 0 success, 2 validation error, 3 cap exceeded.
"""
from __future__ import annotations

import argparse
import configparser
import logging
import sys
from pathlib import Path

from .errors import CapExceededError, ValidationError
from .orbits import (
    DEFAULT_EPSILON,
    census_tail,
    class_report,
    concentration_bound,
    dla_closure,
    full_class_census,
    report_json,
    symmetrized_class_census,
)
from .pauli import LocalGenerator, PauliString
from .protocols import scrambled_class_weights
from .sweep import EXPERIMENTS, SweepSpec, dumps_rows, run_sweep

EXIT_OK, EXIT_VALIDATION, EXIT_CAP = 0, 2, 3

# subcommand -> sweep experiment
_MC_COMMANDS = {
    "haar-ramsey": "haar_ramsey",
    "twist": "twist",
    "time-avg": "time_avg",
    "projected": "projected",
    "noise": "noise",
    "loss": "loss",
}

_INT_LIST = ("n",)
_INTS = ("ne", "samples", "seed", "k", "workers", "site")
_FLOATS = ("epsilon", "p", "theta", "T", "alpha2", "chi")


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in str(text).replace(" ", "").split(",") if x]
    except ValueError as exc:
        raise ValidationError(f"bad integer list {text!r}") from exc


def read_config(path: str) -> dict:
    """Parse a sectionless ``key = value`` file."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    parser.read_string("[run]\n" + text)
    raw = dict(parser["run"])
    out = {}
    for key, value in raw.items():
        key = key.replace("-", "_")
        try:
            if key in _INT_LIST:
                out[key] = _int_list(value)
            elif key in _INTS:
                out[key] = int(value)
            elif key in _FLOATS:
                out[key] = float(value)
            else:
                out[key] = value
        except ValueError as exc:
            raise ValidationError(f"config key {key!r}: {exc}") from exc
    return out


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=_int_list, help="qubit count, or comma-separated list")
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orbitmetro", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dla", help="Lie closure of Pauli generators and its class histogram")
    _common(p)
    p.add_argument("--generators", help="comma-separated Pauli strings, e.g. XX,ZI")
    p.add_argument("--letters", help="letters of the phase generator (default all Z)")

    p = sub.add_parser("census", help="class sizes of all Pauli strings")
    _common(p)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--symmetrized", action="store_true")

    p = sub.add_parser("weights", help="mean class weights of a Haar-scrambled Z")
    _common(p)
    p.add_argument("--site", type=int)

    for name, exp in _MC_COMMANDS.items():
        p = sub.add_parser(name, help=f"{exp} experiment over one or more n")
        _common(p)
        _experiment_args(p)

    p = sub.add_parser("sweep", help="any experiment over a list of n")
    _common(p)
    p.add_argument("--experiment", choices=EXPERIMENTS)
    _experiment_args(p)
    return parser


def _experiment_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ensemble", choices=("full", "symmetric", "orthogonal"))
    p.add_argument("--ne", type=int, help="measured qubits (projected)")
    p.add_argument("--p", type=float, help="depolarizing strength (noise)")
    p.add_argument("--k", type=int, help="lost qubits (loss, haar-ramsey)")
    p.add_argument("--theta", type=float, help="evolution time (ghz)")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--T", type=float, help="averaging window (time-avg)")
    p.add_argument("--hamiltonian", choices=("xn", "sum_x"), help="composing Hamiltonian (time-avg)")
    p.add_argument("--alpha2", type=float, help="|alpha|^2 of the probe (loss)")
    p.add_argument("--when", choices=("before", "after"), help="loss relative to encoding")
    p.add_argument("--base", choices=("haar_ramsey", "projected"), help="protocol under noise")
    p.add_argument("--chi", type=float, help="twisting strength")
    p.add_argument("--workers", type=int)
    p.add_argument("--timing", action="store_true", help="record wall time per row")


def _settings(args: argparse.Namespace) -> dict:
    merged = read_config(args.config) if args.config else {}
    for key, value in vars(args).items():
        if key in ("config", "command", "verbose"):
            continue
        if value is not None and value is not False:
            merged[key] = value
    return merged


def _single_n(s: dict) -> int:
    ns = s.get("n")
    if not ns or len(ns) != 1:
        raise ValidationError("this subcommand needs exactly one --n")
    return ns[0]


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise ValidationError(f"cannot write {out}: {exc}") from exc


def _cmd_dla(s: dict) -> str:
    n = _single_n(s)
    gens = s.get("generators")
    if not gens:
        raise ValidationError("--generators is required")
    strings = [PauliString.from_str(g) for g in gens.split(",")]
    if any(g.n_qubits != n for g in strings):
        raise ValidationError(f"generators must act on {n} qubits")
    gen = LocalGenerator(n, s.get("letters", "Z" * n))
    return report_json(dla_closure(strings, generator=gen).report()) + "\n"


def _cmd_census(s: dict) -> str:
    n = _single_n(s)
    eps = s.get("epsilon", DEFAULT_EPSILON)
    if s.get("symmetrized"):
        hist = symmetrized_class_census(n)
        report = class_report(LocalGenerator(n), hist.weights)
        report["symmetrized"] = True
    else:
        report = class_report(LocalGenerator(n), full_class_census(n).weights)
        report["tail"] = {"epsilon": eps, "exact": census_tail(n, eps), "bound": concentration_bound(n, eps)}
    return report_json(report) + "\n"


def _cmd_weights(s: dict) -> str:
    n = _single_n(s)
    hist = scrambled_class_weights(n, s.get("samples", 50), s.get("seed", 0), s.get("site", 0))
    report = class_report(LocalGenerator(n), hist.weights)
    report["samples"] = s.get("samples", 50)
    report["seed"] = s.get("seed", 0)
    return report_json(report) + "\n"


def _sweep_spec(s: dict, experiment: str) -> SweepSpec:
    params = {}
    for flag, key in (("ensemble", "ensemble"), ("ne", "n_e"), ("p", "p"), ("k", "k"), ("T", "T"),
                      ("alpha2", "alpha2"), ("chi", "chi"), ("hamiltonian", "hamiltonian"),
                      ("base", "base"), ("when", "when"), ("letters", "letters")):
        if flag in s:
            params[key] = s[flag]
    if "theta" in s:
        params["t"] = s["theta"]
    if not s.get("n"):
        raise ValidationError("--n is required")
    return SweepSpec(
        experiment=experiment,
        n_values=tuple(s["n"]),
        params=params,
        samples=s.get("samples", 100),
        master_seed=s.get("seed", 0),
        out=s.get("out"),
        format=s.get("format", "csv"),
        workers=s.get("workers", 1),
        timing=bool(s.get("timing", False)),
    )


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        s = _settings(args)
        cmd = args.command
        if cmd in ("dla", "census", "weights"):
            text = {"dla": _cmd_dla, "census": _cmd_census, "weights": _cmd_weights}[cmd](s)
            _emit(text, s.get("out"))
            return EXIT_OK
        experiment = s.get("experiment") if cmd == "sweep" else _MC_COMMANDS[cmd]
        if experiment is None:
            raise ValidationError("--experiment is required")
        spec = _sweep_spec(s, experiment)
        rows = run_sweep(spec)
        if spec.out is None:
            sys.stdout.write(dumps_rows(rows, spec.format))
        return EXIT_OK
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CapExceededError as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
