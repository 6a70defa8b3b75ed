"""Pauli strings in symplectic form.

A string on ``n`` qubits is stored as two integer bit-masks (bit ``i`` refers
to site ``i``) plus a quarter phase ``i**phase_exp``.  Site letters decode as

    (x, z) = (0, 0) -> I,  (1, 0) -> X,  (1, 1) -> Y,  (0, 1) -> Z

and a string with ``phase_exp == 0`` is exactly the Hermitian tensor product
of its letters.  In the dense expansion site 0 is the leftmost tensor factor,
i.e. the most significant bit of the computational-basis index.

Text format
-----------
A Pauli string is written as an optional phase prefix followed by one letter
per site::

    string  := [prefix] letter+
    prefix  := "+" | "-" | "+i" | "-i" | "i"
    letter  := "I" | "X" | "Y" | "Z"

``str()`` emits the canonical prefixes ``""``, ``"+i"``, ``"-"``, ``"-i"`` for
phases 0..3.  A :class:`PauliSum` is one term per line, ``"<coeff> <letters>"``,
where ``coeff`` is anything :func:`complex` accepts (``0.5``, ``-1j``,
``(1+2j)``).  Blank lines and lines starting with ``#`` are ignored.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .errors import CapExceededError, ValidationError

DENSE_QUBIT_CAP = 12

_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {v: k for k, v in _LETTER_BITS.items()}
_PREFIX_PHASE = {"": 0, "+": 0, "+i": 1, "i": 1, "-": 2, "-i": 3}
_PHASE_PREFIX = {0: "", 1: "+i", 2: "-", 3: "-i"}


def _popcount(v: int) -> int:
    return bin(v).count("1")


def _check_same_size(a: int, b: int) -> None:
    if a != b:
        raise ValidationError(f"qubit count mismatch: {a} != {b}")


@dataclass(frozen=True)
class PauliString:
    n_qubits: int
    x_mask: int
    z_mask: int
    phase_exp: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValidationError("n_qubits must be positive")
        full = (1 << self.n_qubits) - 1
        if self.x_mask & ~full or self.z_mask & ~full or self.x_mask < 0 or self.z_mask < 0:
            raise ValidationError("mask has bits beyond n_qubits")
        if self.phase_exp not in (0, 1, 2, 3):
            raise ValidationError("phase_exp must be in {0, 1, 2, 3}")

    @classmethod
    def from_letters(cls, letters: str, phase_exp: int = 0) -> "PauliString":
        x = z = 0
        for i, ch in enumerate(letters):
            try:
                xb, zb = _LETTER_BITS[ch]
            except KeyError:
                raise ValidationError(f"invalid Pauli letter {ch!r}") from None
            x |= xb << i
            z |= zb << i
        return cls(len(letters), x, z, phase_exp % 4)

    @classmethod
    def from_str(cls, text: str) -> "PauliString":
        text = text.strip()
        body = text.lstrip("+-i")
        prefix = text[: len(text) - len(body)]
        if prefix not in _PREFIX_PHASE:
            raise ValidationError(f"invalid phase prefix {prefix!r}")
        if not body:
            raise ValidationError("empty Pauli string")
        return cls.from_letters(body, _PREFIX_PHASE[prefix])

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(n_qubits, 0, 0, 0)

    @classmethod
    def single(cls, n_qubits: int, site: int, letter: str) -> "PauliString":
        xb, zb = _LETTER_BITS[letter]
        return cls(n_qubits, xb << site, zb << site, 0)

    @property
    def letters(self) -> str:
        return "".join(
            _BITS_LETTER[((self.x_mask >> i) & 1, (self.z_mask >> i) & 1)]
            for i in range(self.n_qubits)
        )

    @property
    def key(self) -> tuple[int, int]:
        """Phase-free identity of the string."""
        return (self.x_mask, self.z_mask)

    @property
    def weight(self) -> int:
        return _popcount(self.x_mask | self.z_mask)

    def stripped(self) -> "PauliString":
        """The same string with ``phase_exp = 0``."""
        if self.phase_exp == 0:
            return self
        return PauliString(self.n_qubits, self.x_mask, self.z_mask, 0)

    def permuted(self, perm: Iterable[int]) -> "PauliString":
        """Move the letter on site ``perm[i]`` to site ``i``."""
        letters = self.letters
        return PauliString.from_letters("".join(letters[p] for p in perm), self.phase_exp)

    def __mul__(self, other: "PauliString") -> "PauliString":
        return pauli_product(self, other)

    def __str__(self) -> str:
        return _PHASE_PREFIX[self.phase_exp] + self.letters

    def __repr__(self) -> str:
        return f"PauliString({str(self)!r})"


def pauli_product(p: PauliString, q: PauliString) -> PauliString:
    """Exact product ``p @ q`` in the Pauli group."""
    _check_same_size(p.n_qubits, q.n_qubits)
    x = p.x_mask ^ q.x_mask
    z = p.z_mask ^ q.z_mask
    # each Y carries i relative to XZ; moving Z past X costs a sign
    phase = (
        p.phase_exp
        + q.phase_exp
        + _popcount(p.x_mask & p.z_mask)
        + _popcount(q.x_mask & q.z_mask)
        + 2 * _popcount(p.z_mask & q.x_mask)
        - _popcount(x & z)
    )
    return PauliString(p.n_qubits, x, z, phase % 4)


def symplectic_inner(p: PauliString, q: PauliString) -> int:
    """Parity of the symplectic form; 1 means ``p`` and ``q`` anticommute."""
    _check_same_size(p.n_qubits, q.n_qubits)
    return (_popcount(p.x_mask & q.z_mask) + _popcount(p.z_mask & q.x_mask)) & 1


def pauli_commutator(p: PauliString, q: PauliString) -> tuple[complex, PauliString] | None:
    """Return ``(c, R)`` with ``[p, q] = c * R`` and ``R`` phase-free, or ``None``."""
    if not symplectic_inner(p, q):
        return None
    r = pauli_product(p, q)
    return 2 * 1j**r.phase_exp, r.stripped()


@dataclass(frozen=True)
class LocalGenerator:
    """Phase-embedding generator ``scale * sum_i sigma_{letters[i]}``.

    The defaults give ``S_z = (1/2) sum_i Z_i``.
    """

    n_qubits: int
    letters: str = ""
    scale: float = 0.5

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValidationError("n_qubits must be positive")
        if not self.letters:
            object.__setattr__(self, "letters", "Z" * self.n_qubits)
        if len(self.letters) != self.n_qubits:
            raise ValidationError("one letter per site required")
        if any(ch not in "XYZ" for ch in self.letters):
            raise ValidationError("generator letters must be X, Y or Z")

    @property
    def x_mask(self) -> int:
        return sum(_LETTER_BITS[ch][0] << i for i, ch in enumerate(self.letters))

    @property
    def z_mask(self) -> int:
        return sum(_LETTER_BITS[ch][1] << i for i, ch in enumerate(self.letters))

    @property
    def is_uniform(self) -> bool:
        return len(set(self.letters)) == 1

    def terms(self) -> list[PauliString]:
        return [PauliString.single(self.n_qubits, i, ch) for i, ch in enumerate(self.letters)]

    def to_pauli_sum(self) -> "PauliSum":
        return PauliSum([(self.scale, t) for t in self.terms()])

    def trace_square(self) -> float:
        """``Tr(G^2)``; cross terms between distinct sites are traceless."""
        return self.scale**2 * self.n_qubits * 2**self.n_qubits

    def to_dense(self, cap: int = DENSE_QUBIT_CAP) -> np.ndarray:
        return to_dense(self.to_pauli_sum(), cap=cap)

    def __str__(self) -> str:
        return f"{self.scale:g}*sum({self.letters})"


def anticommute_count(p: PauliString, g: LocalGenerator) -> int:
    """Number of sites where the letter of ``p`` anticommutes with ``g``'s letter."""
    _check_same_size(p.n_qubits, g.n_qubits)
    gx, gz = g.x_mask, g.z_mask
    return _popcount((p.x_mask & gz) ^ (p.z_mask & gx))


@dataclass(frozen=True)
class SymmetrizedPauli:
    """Permutation-symmetrized string labelled by ``(p_X, p_Y, p_Z, p_I)``."""

    p_x: int
    p_y: int
    p_z: int
    p_i: int

    def __post_init__(self):
        if min(self.p_x, self.p_y, self.p_z, self.p_i) < 0:
            raise ValidationError("composition entries must be nonnegative")
        if self.n_qubits < 1:
            raise ValidationError("composition must sum to a positive n")

    @property
    def n_qubits(self) -> int:
        return self.p_x + self.p_y + self.p_z + self.p_i

    @property
    def anticommute_count(self) -> int:
        """Class index with respect to ``S_z``."""
        return self.p_x + self.p_y

    def strings(self) -> list[PauliString]:
        """Distinct site arrangements, in lexicographic letter order."""
        base = "X" * self.p_x + "Y" * self.p_y + "Z" * self.p_z + "I" * self.p_i
        words = sorted(set(itertools.permutations(base)))
        return [PauliString.from_letters("".join(w)) for w in words]

    def to_pauli_sum(self) -> "PauliSum":
        """Plain (unnormalized) sum over the distinct arrangements."""
        return PauliSum([(1.0, s) for s in self.strings()])


def weak_compositions(n: int) -> Iterator[SymmetrizedPauli]:
    for p_x in range(n + 1):
        for p_y in range(n + 1 - p_x):
            for p_z in range(n + 1 - p_x - p_y):
                yield SymmetrizedPauli(p_x, p_y, p_z, n - p_x - p_y - p_z)


def _canonical_terms(terms) -> dict[tuple[int, int], complex]:
    out: dict[tuple[int, int], complex] = {}
    n = None
    for coeff, string in terms:
        if n is None:
            n = string.n_qubits
        _check_same_size(n, string.n_qubits)
        c = complex(coeff) * 1j**string.phase_exp
        out[string.key] = out.get(string.key, 0) + c
    return out


class PauliSum:
    """Linear combination of phase-free Pauli strings.

    Construction folds phases into coefficients and merges duplicates.
    """

    __slots__ = ("terms",)

    def __init__(self, terms):
        terms = list(terms)
        if not terms:
            raise ValidationError("PauliSum needs at least one term")
        n = terms[0][1].n_qubits
        merged = _canonical_terms(terms)
        self.terms = tuple((c, PauliString(n, x, z, 0)) for (x, z), c in merged.items())

    def __eq__(self, other):
        if not isinstance(other, PauliSum):
            return NotImplemented
        return dict((s.key, c) for c, s in self.terms) == dict((s.key, c) for c, s in other.terms)

    def __repr__(self):
        return f"PauliSum({self.to_text().strip()!r})"

    @property
    def n_qubits(self) -> int:
        return self.terms[0][1].n_qubits

    @classmethod
    def from_text(cls, text: str) -> "PauliSum":
        terms = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValidationError(f"expected '<coeff> <letters>', got {line!r}")
            try:
                coeff = complex(parts[0])
            except ValueError:
                raise ValidationError(f"bad coefficient {parts[0]!r}") from None
            terms.append((coeff, PauliString.from_str(parts[1])))
        return cls(terms)

    def to_text(self) -> str:
        lines = []
        for c, s in self.terms:
            c = complex(c)
            coeff = repr(c.real) if c.imag == 0 else repr(c).strip("()")
            lines.append(f"{coeff} {s.letters}")
        return "\n".join(lines) + "\n"

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return all(abs(complex(c).imag) <= atol for c, _ in self.terms)

    def to_dense(self, cap: int = DENSE_QUBIT_CAP) -> np.ndarray:
        return to_dense(self, cap=cap)


def _index_mask(mask: int, n: int) -> int:
    """Convert a site mask to a basis-index mask (site 0 = MSB)."""
    out = 0
    for i in range(n):
        if (mask >> i) & 1:
            out |= 1 << (n - 1 - i)
    return out


def _parity(values: np.ndarray) -> np.ndarray:
    """Bitwise parity of nonnegative integers."""
    return np.bitwise_count(values) & 1


def _string_columns(s: PauliString) -> tuple[np.ndarray, np.ndarray]:
    """Row indices and values of column ``b`` for every basis state ``b``."""
    n = s.n_qubits
    xi = _index_mask(s.x_mask, n)
    zi = _index_mask(s.z_mask, n)
    b = np.arange(2**n, dtype=np.uint64)
    signs = 1 - 2 * _parity(b & np.uint64(zi)).astype(np.int8)
    vals = (1j ** ((s.phase_exp + _popcount(s.x_mask & s.z_mask)) % 4)) * signs
    return (b ^ np.uint64(xi)).astype(np.intp), vals


def to_dense(op: PauliString | PauliSum, cap: int = DENSE_QUBIT_CAP) -> np.ndarray:
    """Dense ``2^n x 2^n`` matrix of a string or sum."""
    n = op.n_qubits
    if n > cap:
        raise CapExceededError(f"{n} qubits exceeds dense cap {cap}")
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim)
    terms = [(1.0, op)] if isinstance(op, PauliString) else op.terms
    for coeff, s in terms:
        rows, vals = _string_columns(s)
        out[rows, cols] += coeff * vals
    return out


def all_strings(n: int) -> Iterator[PauliString]:
    """Every phase-free string on ``n`` qubits (``4^n`` of them)."""
    for x in range(2**n):
        for z in range(2**n):
            yield PauliString(n, x, z, 0)
