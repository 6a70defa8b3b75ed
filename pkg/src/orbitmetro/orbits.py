"""Lie closures of Pauli generating sets and equivalence-class statistics."""
from __future__ import annotations

import json
from dataclasses import dataclass
from math import ceil, comb, exp
from typing import Sequence

import numpy as np

from .errors import CapExceededError, ValidationError
from .pauli import (
    LocalGenerator,
    PauliString,
    _index_mask,
    all_strings,
    anticommute_count,
    symplectic_inner,
    pauli_commutator,
    weak_compositions,
)

DLA_CAP = 4096
WEIGHT_QUBIT_CAP = 8
DEFAULT_EPSILON = 0.25


@dataclass(frozen=True)
class ClassHistogram:
    """Weights indexed by class ``k = 0..n``."""

    weights: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or np.any(w < 0):
            raise ValidationError("weights must be a nonnegative vector")
        if self.normalized and abs(w.sum() - 1) > 1e-10:
            raise ValidationError("normalized weights must sum to 1")
        object.__setattr__(self, "weights", w)

    @property
    def n_qubits(self) -> int:
        return self.weights.size - 1

    def normalize(self) -> "ClassHistogram":
        return ClassHistogram(self.weights / self.weights.sum(), normalized=True)

    def argmax(self) -> int:
        return int(np.argmax(self.weights))

    def tail(self, eps: float) -> float:
        """Normalized mass with ``|k - n/2| >= eps n``."""
        w = self.normalize().weights
        k = np.arange(w.size)
        n = self.n_qubits
        return float(w[np.abs(k - n / 2) >= eps * n - 1e-12].sum())


@dataclass(frozen=True)
class DlaResult:
    basis: frozenset
    class_histogram: ClassHistogram
    generator: LocalGenerator

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def sorted_basis(self) -> list[PauliString]:
        return sorted(self.basis, key=lambda s: s.letters)

    def report(self) -> dict:
        return class_report(
            self.generator, self.class_histogram.weights, dla_dimension=self.dimension
        )


@dataclass(frozen=True)
class CompatibilityVerdict:
    k_ref: int
    k: int
    epsilon: float
    compatible: bool


def dla_closure(
    generators: Sequence[PauliString],
    cap: int = DLA_CAP,
    generator: LocalGenerator | None = None,
) -> DlaResult:
    """Real Lie closure of ``i * generators`` as a set of phase-free strings.

    The commutator of two Pauli strings is zero or a single string up to a
    scalar, so the phase-stripped strings met by the worklist form a basis.
    """
    generators = list(generators)
    if not generators:
        raise ValidationError("need at least one generator")
    n = generators[0].n_qubits
    if any(g.n_qubits != n for g in generators):
        raise ValidationError("generators must share n_qubits")
    if cap < len(generators):
        raise ValidationError("cap must be at least the number of generators")

    basis: list[PauliString] = []
    seen: set[tuple[int, int]] = set()
    queue: list[PauliString] = []
    for g in generators:
        s = g.stripped()
        if s.key not in seen:
            seen.add(s.key)
            basis.append(s)
            queue.append(s)

    while queue:
        new = queue.pop()
        for other in list(basis):
            comm = pauli_commutator(new, other)
            if comm is None:
                continue
            r = comm[1]
            if r.key in seen:
                continue
            if len(basis) >= cap:
                raise CapExceededError(f"Lie closure exceeded cap {cap}")
            seen.add(r.key)
            basis.append(r)
            queue.append(r)

    if generator is None:
        generator = LocalGenerator(n)
    counts = np.zeros(n + 1)
    for s in basis:
        counts[anticommute_count(s, generator)] += 1
    return DlaResult(frozenset(basis), ClassHistogram(counts), generator)


def is_commutator_closed(basis) -> bool:
    keys = {s.key for s in basis}
    basis = list(basis)
    for i, p in enumerate(basis):
        for q in basis[i + 1 :]:
            if symplectic_inner(p, q) and pauli_commutator(p, q)[1].key not in keys:
                return False
    return True


def enumerate_class_census(n: int, generator: LocalGenerator | None = None) -> np.ndarray:
    """Class sizes by brute-force enumeration of all ``4^n`` strings."""
    generator = generator or LocalGenerator(n)
    counts = np.zeros(n + 1, dtype=np.int64)
    for s in all_strings(n):
        counts[anticommute_count(s, generator)] += 1
    return counts


def full_class_census(n: int, generator: LocalGenerator | None = None) -> ClassHistogram:
    """Class sizes ``binom(n, k) 2^n`` (each site: two letters commute, two do not)."""
    if n < 1:
        raise ValidationError("n must be positive")
    counts = np.array([comb(n, k) * 2**n for k in range(n + 1)], dtype=float)
    if n <= 6:
        brute = enumerate_class_census(n, generator)
        if not np.array_equal(brute, counts):
            raise AssertionError(f"census mismatch for n={n}: {brute} vs {counts}")
    return ClassHistogram(counts)


def symmetrized_class_census(n: int) -> ClassHistogram:
    """Number of weak compositions with ``p_X + p_Y = k``: ``(k+1)(n-k+1)``."""
    if n < 1:
        raise ValidationError("n must be positive")
    return ClassHistogram(np.array([(k + 1) * (n - k + 1) for k in range(n + 1)], dtype=float))


def enumerate_symmetrized_census(n: int) -> np.ndarray:
    counts = np.zeros(n + 1, dtype=np.int64)
    for comp in weak_compositions(n):
        counts[comp.anticommute_count] += 1
    return counts


def compatibility_test(k: int, k_ref: int, n: int, epsilon: float = DEFAULT_EPSILON) -> CompatibilityVerdict:
    """Classes ``k`` and ``k_ref`` are compatible if ``|k - k_ref| >= ceil(epsilon n)``."""
    if not (0 <= k <= n and 0 <= k_ref <= n):
        raise ValidationError("class index out of range")
    if not 0 < epsilon <= 1:
        raise ValidationError("epsilon must lie in (0, 1]")
    # guard against 0.3 * 10 = 3.0000000000000004
    threshold = ceil(epsilon * n - 1e-9)
    return CompatibilityVerdict(k_ref, k, epsilon, abs(k - k_ref) >= threshold)


def pauli_coefficients(op: np.ndarray) -> np.ndarray:
    """``c[x, z] = Tr(P_{x,z} O) / 2^n`` for every phase-free string.

    ``x`` and ``z`` are site masks (bit ``i`` is site ``i``).
    """
    op = np.asarray(op, dtype=complex)
    dim = op.shape[0]
    n = int(round(np.log2(dim)))
    if n > WEIGHT_QUBIT_CAP:
        raise CapExceededError(f"{n} qubits exceeds weight cap {WEIGHT_QUBIT_CAP}")
    b = np.arange(dim, dtype=np.uint64)
    imask = np.array([_index_mask(m, n) for m in range(dim)], dtype=np.uint64)
    # signs[z, b] = (-1)^{popcount(zmask & b)}
    signs = 1 - 2 * (np.bitwise_count(imask[:, None] & b[None, :]) & 1).astype(float)
    ycount = np.bitwise_count(np.arange(dim, dtype=np.uint64)[:, None] & np.arange(dim, dtype=np.uint64)[None, :])
    coeffs = np.empty((dim, dim), dtype=complex)
    for x in range(dim):
        rows = (b ^ imask[x]).astype(np.intp)
        # Tr(P O) = sum_b P[b^x, b] O[b, b^x], P[b^x, b] = i^{|x&z|} (-1)^{z.b}
        v = op[b.astype(np.intp), rows]
        coeffs[x] = (signs @ v) * (1j ** (ycount[x] % 4))
    return coeffs / dim


def class_weight_distribution(op: np.ndarray, generator: LocalGenerator | None = None) -> ClassHistogram:
    """Normalized Pauli weight ``sum_{P in C_k} |c_P|^2`` per class."""
    coeffs = pauli_coefficients(op)
    dim = coeffs.shape[0]
    n = int(round(np.log2(dim)))
    generator = generator or LocalGenerator(n)
    gx, gz = generator.x_mask, generator.z_mask
    m = np.arange(dim, dtype=np.uint64)
    k = np.bitwise_count((m[:, None] & np.uint64(gz)) ^ (m[None, :] & np.uint64(gx)))
    power = np.abs(coeffs) ** 2
    weights = np.bincount(k.ravel(), weights=power.ravel(), minlength=n + 1)
    return ClassHistogram(weights / power.sum(), normalized=True)


def concentration_bound(n: int, eps: float) -> float:
    """Chernoff bound ``2 exp(-2 eps^2 n)`` on ``P(|k - n/2| >= eps n)``."""
    if n < 1 or eps <= 0:
        raise ValidationError("need n >= 1 and eps > 0")
    return 2 * exp(-2 * eps**2 * n)


def census_tail(n: int, eps: float) -> float:
    """Exact ``P(|k - n/2| >= eps n)`` for a uniformly random string."""
    return full_class_census(n).tail(eps)


def class_report(generator: LocalGenerator, counts, dla_dimension: int | None = None) -> dict:
    counts = np.asarray(counts, dtype=float)
    return {
        "n": generator.n_qubits,
        "generator": str(generator),
        "dla_dimension": dla_dimension,
        "class_counts": [int(c) if float(c).is_integer() else float(c) for c in counts],
        "normalized_weights": [float(w) for w in counts / counts.sum()],
    }


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False)
