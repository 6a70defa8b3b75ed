"""Dense state and operator numerics.

States are plain complex NumPy arrays: a pure state is a 1-D vector, a mixed
state a 2-D density matrix.  Qubit registers use the same ordering as
:mod:`orbitmetro.pauli` (site 0 is the most significant index bit).
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import comb, log2, sqrt
from typing import Callable, Sequence

import numpy as np
from scipy.stats import ortho_group, unitary_group

from .errors import CapExceededError, ValidationError

HAAR_DIM_CAP = 4096
P_MIN = 1e-12

KINDS = ("full_unitary", "symmetric_unitary", "symmetric_orthogonal")
_KIND_ALIASES = {
    "full": "full_unitary",
    "symmetric": "symmetric_unitary",
    "orthogonal": "symmetric_orthogonal",
}


@dataclass(frozen=True)
class EnsembleSpec:
    kind: str
    n_qubits: int

    def __post_init__(self):
        kind = _KIND_ALIASES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise ValidationError(f"unknown ensemble kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if self.n_qubits < 1:
            raise ValidationError("n_qubits must be positive")

    @property
    def dim(self) -> int:
        if self.kind == "full_unitary":
            return 2**self.n_qubits
        return self.n_qubits + 1

    @property
    def symmetric(self) -> bool:
        return self.kind != "full_unitary"

    @property
    def real(self) -> bool:
        return self.kind == "symmetric_orthogonal"

    @property
    def spin(self) -> float:
        return self.n_qubits / 2


@dataclass(frozen=True)
class RngStream:
    """Independent, reproducible random stream ``stream_index`` of a master seed."""

    master_seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.PCG64(seq))


def map_streams(
    fn: Callable[[np.random.Generator, int], object],
    samples: int,
    master_seed: int,
    workers: int = 1,
) -> list:
    """Evaluate ``fn(rng_i, i)`` for ``i < samples``, results in index order.

    Each sample owns stream ``i`` of ``master_seed``, so the output does not
    depend on ``workers``.
    """

    def run(i):
        return fn(RngStream(master_seed, i).generator(), i)

    if workers <= 1:
        return [run(i) for i in range(samples)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, range(samples)))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def haar_matrix(dim: int, rng, real: bool = False) -> np.ndarray:
    """Haar-random unitary (or orthogonal, if ``real``) matrix of size ``dim``."""
    if dim > HAAR_DIM_CAP:
        raise CapExceededError(f"dimension {dim} exceeds cap {HAAR_DIM_CAP}")
    if dim < 2:
        raise ValidationError("dim must be at least 2")
    rng = _as_generator(rng)
    if real:
        return ortho_group.rvs(dim, random_state=rng)
    return unitary_group.rvs(dim, random_state=rng)


def haar_sample(spec: EnsembleSpec, rng) -> np.ndarray:
    """Draw from the ensemble ``spec`` in its native dimension."""
    return haar_matrix(spec.dim, rng, real=spec.real)


def _check_hermitian(h: np.ndarray, atol: float) -> None:
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValidationError("expected a square matrix")
    if np.max(np.abs(h - h.conj().T), initial=0.0) > atol:
        raise ValidationError("matrix is not Hermitian")


def mat_exp_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i t H)`` for Hermitian ``H`` via its eigendecomposition."""
    h = np.asarray(h)
    _check_hermitian(h, 1e-8)
    w, v = np.linalg.eigh((h + h.conj().T) / 2)
    return (v * np.exp(-1j * t * w)) @ v.conj().T


def n_qubits_of(dim: int) -> int:
    n = int(round(log2(dim)))
    if 2**n != dim:
        raise ValidationError(f"dimension {dim} is not a power of two")
    return n


def check_state(psi: np.ndarray, atol: float = 1e-10) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ValidationError("state vector must be 1-D")
    if abs(np.linalg.norm(psi) - 1) > atol:
        raise ValidationError("state vector is not normalized")
    return psi


def check_density(rho: np.ndarray, atol: float = 1e-10) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    _check_hermitian(rho, atol)
    if abs(np.trace(rho).real - 1) > atol:
        raise ValidationError("density matrix does not have unit trace")
    if np.linalg.eigvalsh(rho)[0] < -atol:
        raise ValidationError("density matrix is not positive semidefinite")
    return rho


def _check_sites(sites: Sequence[int], n: int) -> list[int]:
    sites = [int(s) for s in sites]
    if len(set(sites)) != len(sites) or any(s < 0 or s >= n for s in sites):
        raise ValidationError(f"invalid site list {sites} for {n} qubits")
    return sites


def partial_trace(state: np.ndarray, discard: Sequence[int]) -> np.ndarray:
    """Reduced density matrix after tracing out the ``discard`` sites."""
    state = np.asarray(state, dtype=complex)
    n = n_qubits_of(state.shape[0])
    discard = _check_sites(discard, n)
    keep = [s for s in range(n) if s not in discard]
    if not keep:
        raise ValidationError("cannot discard every site")
    dk, dd = 2 ** len(keep), 2 ** len(discard)
    if state.ndim == 1:
        m = state.reshape((2,) * n).transpose(keep + discard).reshape(dk, dd)
        return m @ m.conj().T
    t = state.reshape((2,) * (2 * n))
    t = t.transpose(keep + discard + [n + s for s in keep] + [n + s for s in discard])
    return np.einsum("ajbj->ab", t.reshape(dk, dd, dk, dd))


def _outcome_bits(outcome, k: int) -> list[int]:
    if isinstance(outcome, str):
        bits = [int(ch) for ch in outcome]
    elif isinstance(outcome, (int, np.integer)):
        bits = [(int(outcome) >> (k - 1 - i)) & 1 for i in range(k)]
    else:
        bits = [int(b) for b in outcome]
    if len(bits) != k or any(b not in (0, 1) for b in bits):
        raise ValidationError(f"outcome {outcome!r} does not match {k} sites")
    return bits


def project_subsystem(psi: np.ndarray, sites: Sequence[int], outcome) -> np.ndarray:
    """Unnormalized full-register state ``(|z><z|_sites (x) I) psi``."""
    psi = np.asarray(psi, dtype=complex)
    n = n_qubits_of(psi.shape[0])
    sites = _check_sites(sites, n)
    bits = _outcome_bits(outcome, len(sites))
    t = np.zeros((2,) * n, dtype=complex)
    src = psi.reshape((2,) * n)
    idx = [slice(None)] * n
    for s, b in zip(sites, bits):
        idx[s] = b
    t[tuple(idx)] = src[tuple(idx)]
    return t.reshape(-1)


def measure_subsystem(psi: np.ndarray, sites: Sequence[int], outcome, p_min: float = P_MIN):
    """Computational-basis measurement of ``sites`` with a given outcome.

    Returns ``(probability, conditional)`` where ``conditional`` is the
    normalized state of the remaining sites, or ``None`` when the outcome
    probability is below ``p_min``.
    """
    psi = check_state(psi)
    n = n_qubits_of(psi.shape[0])
    sites = _check_sites(sites, n)
    bits = _outcome_bits(outcome, len(sites))
    idx = [slice(None)] * n
    for s, b in zip(sites, bits):
        idx[s] = b
    rest = psi.reshape((2,) * n)[tuple(idx)].reshape(-1)
    prob = float(np.vdot(rest, rest).real)
    if prob < p_min:
        return prob, None
    return prob, rest / sqrt(prob)


def basis_state(n: int, index: int = 0) -> np.ndarray:
    psi = np.zeros(2**n, dtype=complex)
    psi[index] = 1
    return psi


def dicke_state(n: int, q: int) -> np.ndarray:
    """Uniform superposition of all ``n``-qubit basis states with ``q`` ones."""
    if not 0 <= q <= n:
        raise ValidationError(f"excitation number {q} outside [0, {n}]")
    idx = np.arange(2**n, dtype=np.uint64)
    psi = (np.bitwise_count(idx) == q).astype(complex)
    return psi / sqrt(comb(n, q))


def dicke_basis(n: int) -> np.ndarray:
    """``2^n x (n+1)`` isometry whose column ``j`` is ``dicke_state(n, j)``."""
    return np.stack([dicke_state(n, j) for j in range(n + 1)], axis=1)


def spin_operator(axis: str, spin: float) -> np.ndarray:
    """Spin-``S`` matrix in the basis ``m = S, S-1, ..., -S``."""
    dim = int(round(2 * spin)) + 1
    if abs(dim - 1 - 2 * spin) > 1e-12 or spin < 0:
        raise ValidationError(f"spin {spin} is not a nonnegative half-integer")
    if dim > HAAR_DIM_CAP:
        raise CapExceededError(f"spin dimension {dim} exceeds cap {HAAR_DIM_CAP}")
    m = spin - np.arange(dim)
    if axis == "z":
        return np.diag(m).astype(complex)
    # <m+1|S+|m> sits just above the diagonal in this ordering
    raise_ = np.diag(np.sqrt(spin * (spin + 1) - m[1:] * (m[1:] + 1)), 1).astype(complex)
    if axis == "x":
        return (raise_ + raise_.T) / 2
    if axis == "y":
        return (raise_ - raise_.T) / 2j
    raise ValidationError(f"unknown axis {axis!r}")


def depolarize(rho: np.ndarray, p: float) -> np.ndarray:
    """``(1 - p) rho + p I / d``; a pure state vector is promoted first."""
    if not 0 <= p <= 1:
        raise ValidationError("depolarizing strength must lie in [0, 1]")
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    d = rho.shape[0]
    return (1 - p) * rho + p * np.eye(d) / d
