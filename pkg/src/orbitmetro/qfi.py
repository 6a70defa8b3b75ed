"""Fisher-information numerics and closed-form reference values.

The closed forms live here, apart from the Monte-Carlo drivers in
:mod:`orbitmetro.protocols`, so a numeric estimate and the formula it is
compared against never share code.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, exp

import numpy as np

from .errors import ValidationError
from .pauli import LocalGenerator
from .quantum import EnsembleSpec, _check_hermitian, check_density, check_state, spin_operator


@dataclass(frozen=True)
class QfiStats:
    mean: float
    std_error: float
    samples: int
    master_seed: int | None = None
    ensemble: str = ""

    def __post_init__(self):
        if self.samples < 1:
            raise ValidationError("samples must be >= 1")
        if self.std_error < 0:
            raise ValidationError("std_error must be nonnegative")

    @classmethod
    def from_values(cls, values, master_seed=None, ensemble="") -> "QfiStats":
        values = np.asarray(values, dtype=float)
        n = values.size
        se = float(values.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        return cls(float(values.mean()), se, n, master_seed, ensemble)

    def within(self, value: float, n_se: float = 3.0) -> bool:
        return abs(self.mean - value) <= n_se * self.std_error


@dataclass(frozen=True)
class QfiMatrix:
    entries: np.ndarray = field(repr=True)

    def __post_init__(self):
        f = np.asarray(self.entries, dtype=float)
        if f.shape != (2, 2) or abs(f[0, 1] - f[1, 0]) > 1e-9 * max(1.0, np.abs(f).max()):
            raise ValidationError("QFIM must be a symmetric 2x2 matrix")
        if np.linalg.eigvalsh(f)[0] < -1e-9 * max(1.0, np.abs(f).max()):
            raise ValidationError("QFIM must be positive semidefinite")
        object.__setattr__(self, "entries", f)

    def __getitem__(self, idx):
        return self.entries[idx]


def qfi_pure(psi: np.ndarray, g: np.ndarray) -> float:
    """QFI of ``exp(-i theta G)|psi>``, i.e. ``4 Var_psi(G)``."""
    psi = check_state(psi)
    g = np.asarray(g)
    _check_hermitian(g, 1e-8)
    gpsi = g @ psi
    mean = np.vdot(psi, gpsi)
    return max(4.0 * float(np.vdot(gpsi, gpsi).real - abs(mean) ** 2), 0.0)


def _qfi_eig(w: np.ndarray, dmat: np.ndarray, tol: float) -> float:
    """``2 sum |D_ij|^2 / (l_i + l_j)`` over pairs with ``l_i + l_j > tol``."""
    s = w[:, None] + w[None, :]
    mask = s > tol
    return float(2.0 * np.sum(np.abs(dmat[mask]) ** 2 / s[mask]))


def qfi_mixed(rho: np.ndarray, g: np.ndarray, tol: float = 1e-12) -> float:
    """QFI of ``exp(-i theta G) rho exp(i theta G)`` (sum over eigenpairs)."""
    rho = check_density(rho)
    g = np.asarray(g)
    _check_hermitian(g, 1e-8)
    w, v = np.linalg.eigh(rho)
    gm = v.conj().T @ g @ v
    # d rho / d theta in the eigenbasis is -i (l_i - l_j) G_ij
    dmat = (w[:, None] - w[None, :]) * gm
    return _qfi_eig(w, dmat, tol * np.trace(rho).real)


def qfi_from_derivative(rho: np.ndarray, drho: np.ndarray, tol: float = 1e-12) -> float:
    """QFI from a state and its parameter derivative (general family)."""
    rho = check_density(rho)
    w, v = np.linalg.eigh(rho)
    return _qfi_eig(w, v.conj().T @ drho @ v, tol)


def _sqrtm_psd(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    if w[0] < -1e-8:
        raise ValidationError("fidelity needs positive semidefinite input")
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def root_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann root fidelity ``Tr|sqrt(rho) sqrt(sigma)|``."""
    return float(np.linalg.svd(_sqrtm_psd(rho) @ _sqrtm_psd(sigma), compute_uv=False).sum())


def qfi_fd_oracle(family, theta0: float, h: float = 1e-4) -> float:
    """QFI from the Bures distance between nearby members of ``family``.

    ``family(theta)`` returns a density matrix (or a pure state vector).  The
    two members are taken at ``theta0 -/+ h/2`` so the leading error is
    ``O(h^2)``.
    """

    def rho(t):
        r = np.asarray(family(t), dtype=complex)
        return np.outer(r, r.conj()) if r.ndim == 1 else r

    f = root_fidelity(rho(theta0 - h / 2), rho(theta0 + h / 2))
    return 8.0 * (1.0 - min(f, 1.0)) / h**2


def qfim_two_param(n: int, u: np.ndarray, g1: np.ndarray, g2: np.ndarray) -> QfiMatrix:
    """QFIM at the origin of ``U^dag e^{i t1 G1} e^{i t2 G2} e^{t1 t2 [G1,G2]/2} U |0>``.

    The BCH correction is second order, so ``d_j psi = i U^dag G_j U |0>``.
    """
    u = np.asarray(u)
    if u.shape != (2**n, 2**n) or g1.shape != u.shape or g2.shape != u.shape:
        raise ValidationError("dimension mismatch")
    _check_hermitian(g1, 1e-8)
    _check_hermitian(g2, 1e-8)
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1
    probe = u @ psi
    ud = u.conj().T
    d = [1j * (ud @ (g @ probe)) for g in (g1, g2)]
    f = np.empty((2, 2))
    for j in range(2):
        for k in range(2):
            f[j, k] = 4 * (np.vdot(d[j], d[k]) - np.vdot(d[j], psi) * np.vdot(psi, d[k])).real
    return QfiMatrix((f + f.T) / 2)


def cfi_fiducial_measurement(g_eff: np.ndarray, fiducial: np.ndarray, theta: float = 1e-3) -> float:
    """Classical Fisher information of ``{|psi0><psi0|, I - |psi0><psi0|}``.

    ``g_eff`` is the effective generator ``U^dag G U`` seen by the fiducial
    state.  The derivative uses a central difference with step ``theta/10``.
    """
    if theta == 0:
        raise ValidationError("theta must be nonzero")
    fiducial = check_state(fiducial)
    g_eff = np.asarray(g_eff)
    _check_hermitian(g_eff, 1e-8)
    w, v = np.linalg.eigh((g_eff + g_eff.conj().T) / 2)
    weights = np.abs(v.conj().T @ fiducial) ** 2

    def prob(t):
        return abs(np.sum(weights * np.exp(-1j * t * w))) ** 2

    h = theta / 10
    p = prob(theta)
    dp = (prob(theta + h) - prob(theta - h)) / (2 * h)
    q = 1 - p
    if q <= 1e-15 or p <= 1e-15:
        if abs(dp) <= 1e-12:
            return 0.0
        raise ValidationError(f"outcome probability saturated at theta={theta} (p={p})")
    return dp**2 * (1 / p + 1 / q)


def _sector_traces(g: np.ndarray) -> tuple[float, float, float]:
    g = np.asarray(g)
    return (
        float(np.trace(g @ g).real),
        float(np.trace(g.T @ g).real),
        float(np.trace(g).real),
    )


def theorem_one_value(g_sector: np.ndarray) -> float:
    """Leading-order Haar average ``4 Tr(G_i^2) / d_i`` on a sector."""
    tr2, _, _ = _sector_traces(g_sector)
    return 4 * tr2 / np.asarray(g_sector).shape[0]


def analytic_haar_avg(spec: EnsembleSpec, generator=None, exact: bool = False) -> float:
    """Closed-form Haar-averaged QFI for the three supported ensembles.

    Parameters
    ----------
    spec : EnsembleSpec
    generator : LocalGenerator or ndarray, optional
        For ``full_unitary`` a :class:`LocalGenerator` (default ``S_z``) or a
        dense ``2^n`` matrix.  For the symmetric kinds a matrix already
        restricted to the sector; defaults to collective ``S_z``
        (``symmetric_unitary``) or ``S_x`` (``symmetric_orthogonal``).
    exact : bool
        For the unitary kinds, return the finite-dimension average
        ``4 (Tr G^2 - Tr(G)^2/d) / (d + 1)`` instead of the leading-order
        value.  The orthogonal formula is already exact.

    Returns
    -------
    float
        ``full_unitary``: ``4 Tr(G^2) / d``.
        ``symmetric_unitary``: ``8 S^3 / (3 (2S + 1))`` for a collective
        generator, else ``4 Tr(G_i^2) / d_i``.
        ``symmetric_orthogonal``:
        ``4 Tr(G^2)/d - 4 [Tr(G^2) + Tr(G^T G) + Tr(G)^2] / ((d + 2) d)``.
    """
    d = spec.dim
    if spec.kind == "full_unitary":
        if generator is None:
            generator = LocalGenerator(spec.n_qubits)
        if isinstance(generator, LocalGenerator):
            if generator.n_qubits != spec.n_qubits:
                raise ValidationError("generator size does not match ensemble")
            tr2, tr1 = generator.trace_square(), 0.0
        else:
            if np.asarray(generator).shape != (d, d):
                raise ValidationError("generator must be a 2^n x 2^n matrix")
            tr2, _, tr1 = _sector_traces(generator)
        if exact:
            return 4 * (tr2 - tr1**2 / d) / (d + 1)
        return 4 * tr2 / d

    spin = spec.spin
    if spec.kind == "symmetric_unitary":
        collective = generator is None
        g = spin_operator("z", spin) if collective else np.asarray(generator)
        if g.shape != (d, d):
            raise ValidationError("generator must be restricted to the symmetric sector")
        tr2, _, tr1 = _sector_traces(g)
        if exact:
            return 4 * (tr2 - tr1**2 / d) / (d + 1)
        if collective:
            return 8 * spin**3 / (3 * (2 * spin + 1))
        return 4 * tr2 / d

    g = spin_operator("x", spin) if generator is None else np.asarray(generator)
    if g.shape != (d, d):
        raise ValidationError("generator must be restricted to the symmetric sector")
    tr2, trtg, tr1 = _sector_traces(g)
    return 4 * tr2 / d - 4 * (tr2 + trtg + tr1**2) / ((d + 2) * d)


def depolarize_factor(p: float, d: int) -> float:
    """QFI suppression ``(1-p)^2 / (1 - p + 2p/d)`` of the depolarizing channel."""
    if not 0 <= p <= 1 or d < 2:
        raise ValidationError("need 0 <= p <= 1 and d >= 2")
    return (1 - p) ** 2 / (1 - p + 2 * p / d)


def _binom(a: int, b: int) -> int:
    return comb(a, b) if 0 <= b <= a else 0


def loss_probabilities(n: int, k: int) -> tuple[float, float]:
    """``(p_q_remain, p_0_from_q)`` for losing ``k`` of ``n`` qubits from ``|q=n/2>``."""
    q = n // 2
    total = comb(n, q)
    return _binom(n - k, q) / total, _binom(k, q) / total


def loss_qfi_closed_form(n: int, k: int, alpha2: float, beta2: float) -> float:
    """QFI of ``alpha|0_n> + beta|(n/2)_n>`` after losing ``k`` qubits."""
    if n % 2 or n < 2:
        raise ValidationError("n must be even and positive")
    if not 0 <= k <= n:
        raise ValidationError("k must lie in [0, n]")
    if alpha2 < 0 or beta2 < 0 or abs(alpha2 + beta2 - 1) > 1e-9:
        raise ValidationError("|alpha|^2 + |beta|^2 must equal 1")
    remain, from_q = loss_probabilities(n, k)
    denom = alpha2 + beta2 * (from_q + remain)
    if denom == 0:
        return 0.0
    return n**2 * alpha2 * beta2 * remain / denom


def loss_suppression_asymptote(k: int) -> float:
    """Large-``n`` small-loss suppression factor ``exp(-k/2)``."""
    return exp(-k / 2)


def haar_ramsey_loss_avg(n: int, k: int) -> float:
    """Stated Haar-Ramsey average after losing ``k`` qubits, ``(n-k)(n-k+2)/3``."""
    if not 0 <= k < n:
        raise ValidationError("need 0 <= k < n")
    return (n - k) * (n - k + 2) / 3
