"""Scaling sweeps: run one experiment over several ``n`` and tabulate the results."""
from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field, fields
from math import pi, sqrt
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import CapExceededError, ValidationError
from .pauli import DENSE_QUBIT_CAP, LocalGenerator, PauliString, PauliSum
from .protocols import (
    PROJECTED_QUBIT_CAP,
    ProtocolConfig,
    commuting_sanity,
    ghz_orbit_qfi,
    haar_ramsey_mc,
    loss_experiment,
    noisy_protocol,
    projected_ensemble_protocol,
    time_avg_qfi,
    time_avg_qfi_limit,
    twist_untwist_scan,
)
from .qfi import analytic_haar_avg, depolarize_factor
from .quantum import HAAR_DIM_CAP, EnsembleSpec, basis_state

EXPERIMENTS = ("haar_ramsey", "projected", "noise", "twist", "ghz", "loss", "time_avg", "commuting")
FORMATS = ("csv", "json")


@dataclass(frozen=True)
class SweepSpec:
    experiment: str
    n_values: tuple[int, ...]
    params: dict = field(default_factory=dict)
    samples: int = 100
    master_seed: int = 0
    out: str | None = None
    format: str = "csv"
    workers: int = 1
    timing: bool = False

    def __post_init__(self):
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        if self.experiment not in EXPERIMENTS:
            raise ValidationError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if not self.n_values:
            raise ValidationError("need at least one n")
        if any(b <= a for a, b in zip(self.n_values, self.n_values[1:])):
            raise ValidationError("n values must be strictly increasing")
        if self.samples < 1:
            raise ValidationError("samples must be >= 1")
        if self.format not in FORMATS:
            raise ValidationError(f"format must be one of {FORMATS}")


@dataclass(frozen=True)
class SweepRow:
    experiment: str
    n: int
    params: dict
    mean: float
    std_error: float
    analytic_oracle: float | None
    samples: int
    seed: int
    wall_time_ms: float | None = None


COLUMNS = tuple(f.name for f in fields(SweepRow))


def _config(spec: SweepSpec, n: int) -> ProtocolConfig:
    p = spec.params
    return ProtocolConfig(
        n_qubits=n,
        ensemble=p.get("ensemble", "full_unitary"),
        n_e=int(p.get("n_e", 0)),
        samples=spec.samples,
        master_seed=spec.master_seed,
        noise_p=float(p.get("p", 0.0)),
        loss_k=int(p.get("k", 0)) if spec.experiment == "haar_ramsey" else 0,
    )


def _check_caps(spec: SweepSpec, n: int) -> None:
    exp = spec.experiment
    if exp in ("haar_ramsey", "noise"):
        ens = EnsembleSpec(spec.params.get("ensemble", "full_unitary"), n)
        if ens.dim > HAAR_DIM_CAP:
            raise CapExceededError(f"n={n}: dimension {ens.dim} exceeds {HAAR_DIM_CAP}")
        if (not ens.symmetric or spec.params.get("k")) and n > DENSE_QUBIT_CAP:
            raise CapExceededError(f"n={n} exceeds dense cap {DENSE_QUBIT_CAP}")
    elif exp == "projected" and n > PROJECTED_QUBIT_CAP:
        raise CapExceededError(f"n={n} exceeds projected cap {PROJECTED_QUBIT_CAP}")
    elif exp in ("ghz", "loss", "time_avg") and n > DENSE_QUBIT_CAP:
        raise CapExceededError(f"n={n} exceeds dense cap {DENSE_QUBIT_CAP}")
    elif exp == "commuting" and n > 10:
        raise CapExceededError(f"n={n} exceeds commuting cap 10")
    elif exp == "twist" and n + 1 > HAAR_DIM_CAP:
        raise CapExceededError(f"n={n} exceeds spin cap")


def validate(spec: SweepSpec) -> None:
    """Check every per-``n`` precondition before anything runs."""
    for n in spec.n_values:
        _check_caps(spec, n)
        if spec.experiment in ("haar_ramsey", "projected", "noise"):
            _config(spec, n)
        if spec.experiment == "loss":
            k = int(spec.params.get("k", 0))
            if n % 2 or not 0 <= k < n:
                raise ValidationError(f"loss needs even n and 0 <= k < n (n={n}, k={k})")
        if spec.experiment == "time_avg":
            if spec.params.get("hamiltonian", "xn") not in ("xn", "sum_x"):
                raise ValidationError("hamiltonian must be 'xn' or 'sum_x'")
            if float(spec.params.get("T", 200.0)) <= 0:
                raise ValidationError("T must be positive")


def _integrable_hamiltonian(n: int, kind: str) -> PauliSum:
    if kind == "xn":
        return PauliSum([(1.0, PauliString.from_letters("X" * n))])
    return PauliSum([(1.0, PauliString.single(n, i, "X")) for i in range(n)])


def _run_one(spec: SweepSpec, n: int):
    """``(mean, std_error, oracle, samples)`` for one ``n``."""
    exp, p = spec.experiment, spec.params
    if exp == "haar_ramsey":
        cfg = _config(spec, n)
        gen = LocalGenerator(n, p.get("letters", "Z") * n)
        res = haar_ramsey_mc(cfg, gen, spec.workers)
        return res.qfi_stats.mean, res.qfi_stats.std_error, res.metadata["analytic_oracle"], cfg.samples
    if exp == "projected":
        res = projected_ensemble_protocol(_config(spec, n), spec.workers)
        return res.qfi_stats.mean, res.qfi_stats.std_error, None, res.qfi_stats.samples
    if exp == "noise":
        cfg = _config(spec, n)
        base = p.get("base", "haar_ramsey")
        res = noisy_protocol(cfg, base, workers=spec.workers)
        oracle = None
        if base == "haar_ramsey":
            ens = cfg.ensemble
            clean = analytic_haar_avg(ens, exact=True) if ens.kind != "symmetric_orthogonal" else analytic_haar_avg(ens)
            oracle = clean * depolarize_factor(cfg.noise_p, ens.dim)
        return res.qfi_stats.mean, res.qfi_stats.std_error, oracle, cfg.samples
    if exp == "twist":
        _, qfis, best = twist_untwist_scan(n, float(p.get("chi", 1.0)))
        return float(qfis[best]), 0.0, None, 1
    if exp == "ghz":
        return ghz_orbit_qfi(n, float(p.get("t", pi / 4))), 0.0, float(n**2), 1
    if exp == "loss":
        k = int(p.get("k", 0))
        a2 = float(p.get("alpha2", 0.5))
        numeric, closed = loss_experiment(n, k, sqrt(a2), sqrt(1 - a2), p.get("when", "before"))
        return numeric, 0.0, closed, 1
    if exp == "time_avg":
        h = _integrable_hamiltonian(n, p.get("hamiltonian", "xn"))
        g = LocalGenerator(n)
        psi = basis_state(n)
        avg = time_avg_qfi(h, g, psi, float(p.get("T", 200.0)))
        return avg, 0.0, time_avg_qfi_limit(h, g, psi).value, 1
    st = commuting_sanity(n, spec.samples, spec.master_seed)
    return st.mean, st.std_error, 0.0, st.samples


def run_sweep(spec: SweepSpec) -> list[SweepRow]:
    """Run ``spec.experiment`` for each ``n`` and, if ``spec.out`` is set, write the table.

    Everything is validated before the first run, so a bad spec leaves no
    output file.  Every row uses ``spec.master_seed``.  ``wall_time_ms`` is
    recorded only when ``spec.timing`` is set, which keeps repeated runs
    byte-identical by default.
    """
    validate(spec)
    if spec.out is not None:
        parent = Path(spec.out).resolve().parent
        if not parent.is_dir():
            raise ValidationError(f"output directory {parent} does not exist")
    rows = []
    for n in spec.n_values:
        start = time.perf_counter()
        mean, se, oracle, samples = _run_one(spec, n)
        elapsed = (time.perf_counter() - start) * 1e3 if spec.timing else None
        rows.append(
            SweepRow(
                spec.experiment, n, dict(spec.params), float(mean), float(se),
                None if oracle is None else float(oracle), samples, spec.master_seed, elapsed,
            )
        )
    if spec.out is not None:
        Path(spec.out).write_text(dumps_rows(rows, spec.format))
    return rows


def fit_scaling(rows) -> tuple[float, float]:
    """Slope of ``log(mean)`` against ``log(n)`` and its standard error."""
    rows = list(rows)
    if len(rows) < 3:
        raise ValidationError("need at least 3 rows to fit")
    means = np.array([r.mean for r in rows], dtype=float)
    if np.any(means <= 0):
        raise ValidationError("means must be positive for a log-log fit")
    fit = stats.linregress(np.log([r.n for r in rows]), np.log(means))
    return float(fit.slope), float(fit.stderr)


def _num(x) -> str:
    return "" if x is None else format(x, ".17g")


def dumps_rows(rows, fmt: str = "csv") -> str:
    if fmt == "json":
        return json.dumps([asdict(r) for r in rows], indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in rows:
        writer.writerow(
            [
                r.experiment, r.n, json.dumps(r.params, sort_keys=True), _num(r.mean), _num(r.std_error),
                _num(r.analytic_oracle), r.samples, r.seed, _num(r.wall_time_ms),
            ]
        )
    return buf.getvalue()


def loads_rows(text: str, fmt: str = "csv") -> list[SweepRow]:
    if fmt == "json":
        return [SweepRow(**d) for d in json.loads(text)]

    def opt(s):
        return None if s == "" else float(s)

    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != COLUMNS:
        raise ValidationError(f"unexpected CSV header {reader.fieldnames}")
    return [
        SweepRow(
            d["experiment"], int(d["n"]), json.loads(d["params"]), float(d["mean"]), float(d["std_error"]),
            opt(d["analytic_oracle"]), int(d["samples"]), int(d["seed"]), opt(d["wall_time_ms"]),
        )
        for d in reader
    ]
