"""End-to-end sensing protocols and their Monte-Carlo drivers."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from math import ceil, pi, sqrt

import numpy as np

from .errors import CapExceededError, ValidationError
from .orbits import ClassHistogram, class_weight_distribution, WEIGHT_QUBIT_CAP
from .pauli import DENSE_QUBIT_CAP, LocalGenerator, PauliString, PauliSum, to_dense
from .qfi import (
    QfiStats,
    analytic_haar_avg,
    cfi_fiducial_measurement,
    haar_ramsey_loss_avg,
    loss_qfi_closed_form,
    qfi_from_derivative,
    qfi_mixed,
    qfi_pure,
    qfim_two_param,
)
from .quantum import (
    P_MIN,
    EnsembleSpec,
    dicke_basis,
    dicke_state,
    depolarize,
    haar_matrix,
    haar_sample,
    map_streams,
    mat_exp_hermitian,
    partial_trace,
    project_subsystem,
    spin_operator,
)

log = logging.getLogger(__name__)

PROJECTED_QUBIT_CAP = 12


@dataclass(frozen=True)
class ProtocolConfig:
    n_qubits: int
    ensemble: EnsembleSpec | str = "full_unitary"
    n_e: int = 0
    samples: int = 1
    master_seed: int = 0
    epsilon: float = 0.25
    p_min: float = P_MIN
    noise_p: float = 0.0
    loss_k: int = 0
    theta_probe: float = 1e-3

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValidationError("n_qubits must be positive")
        ens = self.ensemble
        if isinstance(ens, str):
            ens = EnsembleSpec(ens, self.n_qubits)
        elif ens.n_qubits != self.n_qubits:
            raise ValidationError("ensemble size does not match n_qubits")
        object.__setattr__(self, "ensemble", ens)
        if not 0 <= self.n_e < self.n_qubits:
            raise ValidationError(f"n_e={self.n_e} must satisfy 0 <= n_e < n={self.n_qubits}")
        if self.samples < 1:
            raise ValidationError("samples must be >= 1")
        if not 0 <= self.noise_p <= 1:
            raise ValidationError("noise_p must lie in [0, 1]")
        if not 0 <= self.loss_k < self.n_qubits:
            raise ValidationError("loss_k must satisfy 0 <= k < n")
        if not 0 < self.epsilon <= 1:
            raise ValidationError("epsilon must lie in (0, 1]")

    def echo(self) -> dict:
        d = asdict(self)
        d["ensemble"] = self.ensemble.kind
        return d


@dataclass(frozen=True)
class OutcomeRecord:
    sample: int
    bits: str
    probability: float
    qfi: float


@dataclass
class ProtocolResult:
    qfi_stats: QfiStats
    values: np.ndarray
    outcomes: list[OutcomeRecord] | None = None
    class_histogram: ClassHistogram | None = None
    reference: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)


def sector_generator(spec: EnsembleSpec, generator: LocalGenerator | None = None) -> np.ndarray:
    """Dense generator in the ensemble's native space.

    For the symmetric kinds a uniform collective generator ``s * sum sigma_a``
    restricts to ``2 s S_a`` on the spin-``n/2`` sector.
    """
    n = spec.n_qubits
    if generator is None:
        generator = LocalGenerator(n)
    if generator.n_qubits != n:
        raise ValidationError("generator size does not match ensemble")
    if not spec.symmetric:
        return generator.to_dense()
    if not generator.is_uniform:
        raise ValidationError("symmetric ensembles need a site-uniform generator")
    return 2 * generator.scale * spin_operator(generator.letters[0].lower(), spec.spin)


def _fiducial(dim: int) -> np.ndarray:
    psi = np.zeros(dim, dtype=complex)
    psi[0] = 1
    return psi


def haar_ramsey_probe(spec: EnsembleSpec, rng) -> np.ndarray:
    """``U |psi_0>`` for one draw, in the native dimension."""
    return haar_sample(spec, rng)[:, 0]


def _lossy_probe_qfi(spec: EnsembleSpec, probe: np.ndarray, generator: LocalGenerator, k: int) -> float:
    n = spec.n_qubits
    if n > DENSE_QUBIT_CAP:
        raise CapExceededError("loss needs the qubit embedding; n too large")
    psi = dicke_basis(n) @ probe if spec.symmetric else probe
    rho = partial_trace(psi, list(range(n - k, n)))
    kept = LocalGenerator(n - k, generator.letters[: n - k], generator.scale)
    return qfi_mixed(rho, kept.to_dense())


def haar_ramsey_mc(
    config: ProtocolConfig,
    generator: LocalGenerator | None = None,
    workers: int = 1,
) -> ProtocolResult:
    """Monte-Carlo Haar-Ramsey QFI ``4 Var_{U psi_0}(G)``.

    With ``config.loss_k > 0`` the last ``k`` qubits of the probe are traced
    out and the mixed-state QFI of the rest is used.
    """
    spec = config.ensemble
    generator = generator or LocalGenerator(spec.n_qubits)
    g = sector_generator(spec, generator)
    k = config.loss_k

    def one(rng, i):
        probe = haar_ramsey_probe(spec, rng)
        if k:
            return _lossy_probe_qfi(spec, probe, generator, k)
        return qfi_pure(probe, g)

    values = np.array(map_streams(one, config.samples, config.master_seed, workers))
    if k:
        oracle = haar_ramsey_loss_avg(spec.n_qubits, k)
    elif spec.kind == "full_unitary":
        oracle = analytic_haar_avg(spec, generator)
    elif spec.kind == "symmetric_unitary" and generator == LocalGenerator(spec.n_qubits):
        oracle = analytic_haar_avg(spec)
    else:
        oracle = analytic_haar_avg(spec, g)
    stats = QfiStats.from_values(values, config.master_seed, spec.kind)
    return ProtocolResult(stats, values, metadata={"config": config.echo(), "analytic_oracle": oracle})


def twist_untwist(n: int, chi: float, t: float) -> float:
    """QFI under ``G = -S_y`` of ``exp(-i chi S_x^2 t)|S, m=S>``, ``S = n/2``."""
    spin = n / 2
    sx = spin_operator("x", spin)
    probe = mat_exp_hermitian(chi * sx @ sx, t) @ _fiducial(n + 1)
    return qfi_pure(probe, -spin_operator("y", spin))


def twist_untwist_scan(n: int, chi: float = 1.0, points: int = 64, span: float = 4.0):
    """Scan ``t`` over ``points`` values in ``[0, span / sqrt(n)]``.

    Returns ``(times, qfis, best_index)``.
    """
    spin = n / 2
    sx = spin_operator("x", spin)
    w, v = np.linalg.eigh(chi * sx @ sx)
    c = v.conj().T @ _fiducial(n + 1)
    sy = -spin_operator("y", spin)
    times = np.linspace(0, span / sqrt(n), points)
    qfis = np.array([qfi_pure(v @ (np.exp(-1j * w * t) * c), sy) for t in times])
    return times, qfis, int(np.argmax(qfis))


def _dense(op) -> np.ndarray:
    if isinstance(op, (PauliSum, PauliString, LocalGenerator)):
        return op.to_dense()
    return np.asarray(op, dtype=complex)


def _variance_trace(h, g, psi, times):
    w, v = np.linalg.eigh(h)
    c = v.conj().T @ psi
    states = v @ (np.exp(-1j * np.outer(w, times)) * c[:, None])
    gs = g @ states
    mean = np.einsum("ij,ij->j", states.conj(), gs)
    sq = np.einsum("ij,ij->j", gs.conj(), gs).real
    return 4 * (sq - np.abs(mean) ** 2)


def time_avg_qfi(h_c, generator, state: np.ndarray, T: float, dt: float | None = None) -> float:
    """``(1/T) int_0^T 4 Var_psi0(G(t)) dt`` by the trapezoidal rule.

    ``dt`` defaults to ``pi / (20 ||H_c||)``.  The result is cross-checked
    against a run with ``dt / 2``; a relative disagreement above 1% raises.
    """
    h = _dense(h_c)
    g = _dense(generator)
    norm = float(np.max(np.abs(np.linalg.eigvalsh(h))))
    limit = pi / (10 * norm) if norm > 0 else T
    if dt is None:
        dt = limit / 2
    elif dt > limit * (1 + 1e-12):
        raise ValidationError(f"dt={dt} exceeds pi/(10 ||H_c||) = {limit}")
    steps = max(ceil(T / dt), 1)

    def integrate(m):
        times = np.linspace(0, T, m + 1)
        return float(np.trapezoid(_variance_trace(h, g, state, times), times) / T)

    coarse, fine = integrate(steps), integrate(2 * steps)
    if abs(coarse - fine) > 0.01 * max(abs(fine), 1e-12):
        raise ValidationError(f"dt too coarse: step halving moved the average {coarse} -> {fine}")
    return coarse


def _cluster(values: np.ndarray, tol: float) -> np.ndarray:
    """Label sorted-adjacent values closer than ``tol`` with a shared integer."""
    order = np.argsort(values, kind="stable")
    labels = np.empty(values.size, dtype=np.intp)
    label = 0
    prev = None
    for idx in order:
        if prev is not None and values[idx] - prev > tol:
            label += 1
        labels[idx] = label
        prev = values[idx]
    return labels


def centralizer_projection_oracle(h_c, g, tol: float = 1e-9) -> np.ndarray:
    """Dephase ``g`` onto the commutant of ``h_c`` (equal-energy blocks kept)."""
    h = _dense(h_c)
    g = _dense(g)
    w, v = np.linalg.eigh(h)
    labels = _cluster(w, tol)
    gm = v.conj().T @ g @ v
    gm = np.where(labels[:, None] == labels[None, :], gm, 0)
    return v @ gm @ v.conj().T


@dataclass(frozen=True)
class TimeAverageLimit:
    value: float
    stationary: float
    oscillating: float
    remainder_constant: float | None


def time_avg_qfi_limit(h_c, generator, state: np.ndarray, tol: float = 1e-9, max_groups: int = 4096) -> TimeAverageLimit:
    """Infinite-time average of ``4 Var(G(t))`` from the spectrum of ``H_c``.

    With ``<G(t)> = sum_w a_w e^{i w t}`` over Bohr frequencies ``w``::

        limit = 4 (<P(G^2)> - <P(G)>^2 - sum_{w != 0} |a_w|^2)

    where ``P`` is :func:`centralizer_projection_oracle`.  The first two terms
    are the stationary part; the last is the time average of the oscillating
    mean.  ``remainder_constant`` is a ``C`` with
    ``|avg_T - limit| <= C / T`` for the exact integral.
    """
    h = _dense(h_c)
    g = _dense(generator)
    w, v = np.linalg.eigh(h)
    c = v.conj().T @ np.asarray(state, dtype=complex)
    gm = v.conj().T @ g @ v
    g2m = gm @ gm
    omega = w[:, None] - w[None, :]
    labels = _cluster(omega.ravel(), tol).reshape(omega.shape)
    groups = labels.max() + 1
    amp = np.conj(c)[:, None] * c[None, :]
    a = np.bincount(labels.ravel(), weights=(amp * gm).ravel().real, minlength=groups) + 1j * np.bincount(
        labels.ravel(), weights=(amp * gm).ravel().imag, minlength=groups
    )
    b = np.bincount(labels.ravel(), weights=(amp * g2m).ravel().real, minlength=groups) + 1j * np.bincount(
        labels.ravel(), weights=(amp * g2m).ravel().imag, minlength=groups
    )
    freq = np.bincount(labels.ravel(), weights=omega.ravel(), minlength=groups) / np.bincount(labels.ravel())
    zero = np.abs(freq) <= tol
    a_ss = float(b[zero].real.sum())
    d = float(a[zero].real.sum())
    osc = float(np.sum(np.abs(a[~zero]) ** 2))
    value = 4 * (a_ss - d**2 - osc)

    const = None
    if groups <= max_groups:
        # <G>^2 pairs (w, w') with w + w' != 0, plus <G^2> terms with w != 0
        nz = ~zero
        const = float(np.sum(2 * np.abs(b[nz]) / np.abs(freq[nz])))
        s = freq[:, None] + freq[None, :]
        mask = np.abs(s) > tol
        prod = np.abs(a)[:, None] * np.abs(a)[None, :]
        const += float(np.sum(2 * prod[mask] / np.abs(s[mask])))
        const *= 4
    return TimeAverageLimit(value, 4 * (a_ss - d**2), -4 * osc, const)


def ghz_orbit_qfi(n: int, t: float = pi / 4) -> float:
    """QFI under ``S_z`` of ``exp(-i t X^n)|0...0>``; equals ``n^2 sin^2(2t)``."""
    h = to_dense(PauliString.from_letters("X" * n))
    probe = mat_exp_hermitian(h, t) @ _fiducial(2**n)
    return qfi_pure(probe, LocalGenerator(n).to_dense())


def _measured_sites(n: int, n_e: int) -> list[int]:
    return list(range(n - n_e, n))


def _bits(z: int, width: int) -> str:
    return format(z, f"0{width}b") if width else ""


def projected_probes(u: np.ndarray, n_e: int, p_min: float = P_MIN):
    """Conditional probes ``U^dag (|psi_z> (x) |z>)`` for each outcome on the last ``n_e`` sites.

    Returns ``(records, excluded_mass)`` where ``records`` is a list of
    ``(bits, probability, probe)``.  With ``n_e = 0`` nothing is measured and
    the single record is the plain Haar-Ramsey probe ``U |0>``.
    """
    n = int(round(np.log2(u.shape[0])))
    psi = u[:, 0]
    if n_e == 0:
        return [("", 1.0, psi)], 0.0
    sites = _measured_sites(n, n_e)
    ud = u.conj().T
    records = []
    excluded = 0.0
    for z in range(2**n_e):
        bits = _bits(z, n_e)
        v = project_subsystem(psi, sites, bits)
        p = float(np.vdot(v, v).real)
        if p < p_min:
            excluded += p
            continue
        records.append((bits, p, ud @ (v / sqrt(p))))
    return records, excluded


def conditional_qfi(u: np.ndarray, sites, outcome, g: np.ndarray) -> tuple[float, float]:
    """QFI of one conditional probe from moments of ``pi~ = U^dag pi U``.

    ``pi`` projects ``sites`` onto ``outcome``.  The probe equals
    ``pi~|0>/sqrt(p)`` with ``p = <0|pi~|0>``, so its QFI is
    ``4 (<0|pi~ G^2 pi~|0>/p - (<0|pi~ G pi~|0>/p)^2)``.
    Returns ``(qfi, p)``.
    """
    dim = u.shape[0]
    diag = np.abs(project_subsystem(np.ones(dim), sites, outcome))
    pt = u.conj().T @ (diag[:, None] * u)
    col = pt[:, 0]
    p = float(col[0].real)
    gcol = g @ col
    m1 = np.vdot(col, gcol).real / p
    m2 = np.vdot(gcol, gcol).real / p
    return float(4 * (m2 - m1**2)), p


def projected_ensemble_protocol(
    config: ProtocolConfig,
    workers: int = 1,
    with_histogram: bool = False,
) -> ProtocolResult:
    """Projected-ensemble sensor, QFI of each conditional probe under ``S_z``.

    The per-sample value is the outcome-probability-weighted mean over
    retained outcomes (normalized by their total probability).  The
    unweighted per-outcome mean is reported in ``metadata``.  ``n_e = 0`` is
    the no-measurement control, which reduces to Haar-Ramsey.
    """
    n, n_e = config.n_qubits, config.n_e
    if config.ensemble.kind != "full_unitary":
        raise ValidationError("projected protocol draws from the full unitary ensemble")
    if n > PROJECTED_QUBIT_CAP:
        raise CapExceededError(f"projected protocol is capped at {PROJECTED_QUBIT_CAP} qubits")
    if with_histogram and n > WEIGHT_QUBIT_CAP:
        raise CapExceededError(f"class weights are capped at {WEIGHT_QUBIT_CAP} qubits")
    g = LocalGenerator(n).to_dense()
    spec = config.ensemble
    site = _measured_sites(n, max(n_e, 1))[0]
    z_dense = to_dense(PauliString.single(n, site, "Z")) if with_histogram else None

    def one(rng, i):
        u = haar_sample(spec, rng)
        records, excluded = projected_probes(u, n_e, config.p_min)
        out = [(bits, p, qfi_pure(probe, g)) for bits, p, probe in records]
        hist = None
        if with_histogram:
            op = (np.eye(2**n) + u.conj().T @ z_dense @ u) / 2
            hist = class_weight_distribution(op).weights
        return out, excluded, hist

    results = map_streams(one, config.samples, config.master_seed, workers)
    values, outcomes, excluded_mass, hists, degenerate = [], [], [], [], []
    for i, (out, excluded, hist) in enumerate(results):
        excluded_mass.append(excluded)
        if not out:
            degenerate.append(i)
            log.warning("sample %d: every outcome below p_min, skipped", i)
            continue
        kept = sum(p for _, p, _ in out)
        values.append(sum(p * f for _, p, f in out) / kept)
        outcomes.extend(OutcomeRecord(i, b, p, f) for b, p, f in out)
        if hist is not None:
            hists.append(hist)
    if not values:
        raise ValidationError("every sample was degenerate")
    values = np.array(values)
    histogram = ClassHistogram(np.mean(hists, axis=0), normalized=True) if hists else None
    stats = QfiStats.from_values(values, config.master_seed, spec.kind)
    meta = {
        "config": config.echo(),
        "unweighted_mean": float(np.mean([o.qfi for o in outcomes])),
        "excluded_mass": excluded_mass,
        "degenerate_samples": degenerate,
        "measured_sites": _measured_sites(n, n_e),
    }
    return ProtocolResult(stats, values, outcomes, histogram, metadata=meta)


def noisy_protocol(
    config: ProtocolConfig,
    base: str = "haar_ramsey",
    generator: LocalGenerator | None = None,
    workers: int = 1,
) -> ProtocolResult:
    """Depolarize each probe with strength ``config.noise_p`` and take the mixed QFI.

    ``reference`` holds the noiseless per-sample values and
    ``metadata["ratios"]`` the per-probe noisy/noiseless ratios.
    """
    spec = config.ensemble
    p = config.noise_p
    if base == "haar_ramsey":
        g = sector_generator(spec, generator)

        def probes(rng):
            return [("", 1.0, haar_ramsey_probe(spec, rng))]

    elif base == "projected":
        if spec.kind != "full_unitary":
            raise ValidationError("projected protocol draws from the full unitary ensemble")
        g = LocalGenerator(config.n_qubits).to_dense()

        def probes(rng):
            return projected_probes(haar_sample(spec, rng), config.n_e, config.p_min)[0]

    else:
        raise ValidationError(f"unknown base protocol {base!r}")
    if spec.dim > 2**DENSE_QUBIT_CAP:
        raise CapExceededError("probe dimension too large for mixed-state QFI")

    def one(rng, i):
        noisy = clean = 0.0
        ratios = []
        total = 0.0
        for _, prob, probe in probes(rng):
            f0 = qfi_pure(probe, g)
            f1 = qfi_mixed(depolarize(probe, p), g)
            noisy += prob * f1
            clean += prob * f0
            total += prob
            ratios.append(f1 / f0 if f0 > 0 else np.nan)
        return noisy / total, clean / total, ratios

    results = map_streams(one, config.samples, config.master_seed, workers)
    values = np.array([r[0] for r in results])
    reference = np.array([r[1] for r in results])
    ratios = [x for r in results for x in r[2]]
    stats = QfiStats.from_values(values, config.master_seed, spec.kind)
    meta = {"config": config.echo(), "base": base, "ratios": ratios, "dimension": spec.dim}
    return ProtocolResult(stats, values, reference=reference, metadata=meta)


def superposition_state(n: int, alpha: complex, beta: complex) -> np.ndarray:
    """``alpha |0_n> + beta |q_n>`` with ``q = n/2`` excitations."""
    if n % 2:
        raise ValidationError("n must be even")
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1) > 1e-9:
        raise ValidationError("|alpha|^2 + |beta|^2 must equal 1")
    return alpha * dicke_state(n, 0) + beta * dicke_state(n, n // 2)


def loss_experiment(n: int, k: int, alpha: complex, beta: complex, when: str = "before"):
    """Numeric QFI after losing ``k`` qubits, next to the closed form.

    ``when="before"``: trace out, then encode with ``S_z`` on the rest.
    ``when="after"``: encode on all ``n`` qubits, then trace out; the QFI is
    taken from the traced derivative of the state.
    Returns ``(numeric, closed_form)``.
    """
    if n > DENSE_QUBIT_CAP:
        raise CapExceededError("loss experiment needs n <= 12")
    if not 0 <= k < n:
        raise ValidationError("need 0 <= k < n")
    psi = superposition_state(n, alpha, beta)
    lost = list(range(n - k, n))
    if when == "before":
        rho = partial_trace(psi, lost) if k else np.outer(psi, psi.conj())
        numeric = qfi_mixed(rho, LocalGenerator(n - k).to_dense())
    elif when == "after":
        g = LocalGenerator(n).to_dense()
        full = np.outer(psi, psi.conj())
        dfull = -1j * (g @ full - full @ g)
        rho = partial_trace(full, lost) if k else full
        drho = partial_trace(dfull, lost) if k else dfull
        numeric = qfi_from_derivative(rho, drho)
    else:
        raise ValidationError("when must be 'before' or 'after'")
    closed = loss_qfi_closed_form(n, k, abs(alpha) ** 2, abs(beta) ** 2)
    return numeric, closed


def commuting_sanity(
    n: int,
    samples: int,
    seed: int,
    terms: int = 6,
    extra: tuple[PauliString, ...] = (),
) -> QfiStats:
    """Haar-Ramsey-style QFI for random Hamiltonians built from class-0 strings.

    Each sample draws ``terms`` random non-identity ``{I, Z}`` strings with
    Gaussian coefficients (plus any ``extra`` strings) and an evolution time
    in ``[0, 2 pi)``, and evaluates ``4 Var(S_z)`` of ``exp(-i H t)|0>``.
    """
    if n > 10:
        raise CapExceededError("commuting sanity check is capped at 10 qubits")
    g = LocalGenerator(n).to_dense()
    psi0 = _fiducial(2**n)

    def one(rng, i):
        zs = rng.integers(1, 2**n, size=terms)
        coeffs = rng.standard_normal(terms + len(extra))
        strings = [PauliString(n, 0, int(z)) for z in zs] + list(extra)
        h = PauliSum(list(zip(coeffs, strings))).to_dense()
        t = rng.uniform(0, 2 * pi)
        return qfi_pure(mat_exp_hermitian(h, t) @ psi0, g)

    values = map_streams(one, samples, seed)
    return QfiStats.from_values(values, seed, "c0_hamiltonians")


def scrambled_class_weights(n: int, samples: int, seed: int, site: int = 0, workers: int = 1) -> ClassHistogram:
    """Mean class-weight histogram of ``U^dag Z_site U`` over Haar draws."""
    z = to_dense(PauliString.single(n, site, "Z"))
    spec = EnsembleSpec("full_unitary", n)

    def one(rng, i):
        u = haar_sample(spec, rng)
        return class_weight_distribution(u.conj().T @ z @ u).weights

    hists = map_streams(one, samples, seed, workers)
    return ClassHistogram(np.mean(hists, axis=0), normalized=True)


def two_param_haar_mc(n: int, samples: int, seed: int, workers: int = 1):
    """Per-sample QFIMs for ``G1 = sum X_i``, ``G2 = sum Y_i`` over the full ensemble."""
    g1 = LocalGenerator(n, "X" * n, 1.0).to_dense()
    g2 = LocalGenerator(n, "Y" * n, 1.0).to_dense()

    def one(rng, i):
        return qfim_two_param(n, haar_matrix(2**n, rng), g1, g2).entries

    return np.array(map_streams(one, samples, seed, workers))


def fiducial_cfi_instances(n: int, samples: int, seed: int, theta: float = 1e-3):
    """``(cfi, qfi)`` pairs for random Haar-Ramsey instances under ``S_z``."""
    g = LocalGenerator(n).to_dense()
    psi0 = _fiducial(2**n)

    def one(rng, i):
        u = haar_matrix(2**n, rng)
        g_eff = u.conj().T @ g @ u
        return cfi_fiducial_measurement(g_eff, psi0, theta), qfi_pure(psi0, g_eff)

    return np.array(map_streams(one, samples, seed))
