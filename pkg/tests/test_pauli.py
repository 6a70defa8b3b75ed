import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import kron_letters
from orbitmetro.errors import CapExceededError, ValidationError
from orbitmetro.pauli import (
    LocalGenerator,
    PauliString,
    PauliSum,
    SymmetrizedPauli,
    all_strings,
    anticommute_count,
    pauli_commutator,
    pauli_product,
    symplectic_inner,
    to_dense,
    weak_compositions,
)

P = PauliString.from_letters


def dense(s: PauliString) -> np.ndarray:
    return 1j**s.phase_exp * kron_letters(s.letters)


def strings(max_n=4):
    return st.integers(1, max_n).flatmap(
        lambda n: st.tuples(
            st.text("IXYZ", min_size=n, max_size=n), st.integers(0, 3)
        ).map(lambda t: PauliString.from_letters(*t))
    )


def pairs(max_n=4):
    return st.integers(1, max_n).flatmap(
        lambda n: st.tuples(
            *[st.tuples(st.text("IXYZ", min_size=n, max_size=n), st.integers(0, 3)) for _ in range(3)]
        ).map(lambda ts: tuple(PauliString.from_letters(*t) for t in ts))
    )


class TestRepresentation:
    def test_letter_decoding(self):
        s = P("IXYZ")
        assert (s.x_mask, s.z_mask) == (0b0110, 0b1100)
        assert s.letters == "IXYZ"

    def test_site_zero_is_leftmost_factor(self):
        assert np.array_equal(to_dense(P("XI")), kron_letters("XI"))
        assert np.array_equal(to_dense(P("XI")), np.kron(kron_letters("X"), np.eye(2)))

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_dense_matches_kron_exhaustive(self, n):
        for s in all_strings(n):
            assert np.allclose(to_dense(s), kron_letters(s.letters), atol=0)

    @given(strings())
    def test_phase_zero_is_hermitian(self, s):
        m = to_dense(s.stripped())
        assert np.allclose(m, m.conj().T)

    def test_invalid_inputs(self):
        with pytest.raises(ValidationError):
            P("XQ")
        with pytest.raises(ValidationError):
            PauliString(2, 0b100, 0)
        with pytest.raises(ValidationError):
            PauliString(1, 0, 0, 4)

    def test_dense_cap(self):
        with pytest.raises(CapExceededError):
            to_dense(PauliString.identity(13))
        assert to_dense(PauliString.identity(2), cap=2).shape == (4, 4)

    def test_identity_dense(self):
        assert np.array_equal(to_dense(PauliString.identity(3)), np.eye(8))

    def test_sz_single_qubit(self):
        assert np.allclose(LocalGenerator(1).to_dense(), np.diag([0.5, -0.5]))


class TestText:
    @pytest.mark.parametrize(
        "text,phase", [("XZ", 0), ("+XZ", 0), ("+iXZ", 1), ("iXZ", 1), ("-XZ", 2), ("-iXZ", 3)]
    )
    def test_prefixes(self, text, phase):
        s = PauliString.from_str(text)
        assert s.phase_exp == phase and s.letters == "XZ"

    @given(strings())
    def test_round_trip(self, s):
        assert PauliString.from_str(str(s)) == s

    def test_bad_prefix(self):
        with pytest.raises(ValidationError):
            PauliString.from_str("--X")
        with pytest.raises(ValidationError):
            PauliString.from_str("-i")

    def test_sum_round_trip(self):
        text = "# two terms\n0.5 XX\n-0.25 ZI\n(1+2j) YY\n"
        h = PauliSum.from_text(text)
        assert PauliSum.from_text(h.to_text()) == h
        assert len(h.terms) == 3

    @given(st.lists(st.tuples(st.floats(-5, 5), st.text("IXYZ", min_size=3, max_size=3)), min_size=1, max_size=6))
    def test_sum_round_trip_property(self, terms):
        h = PauliSum([(c, P(s)) for c, s in terms])
        assert PauliSum.from_text(h.to_text()) == h

    def test_sum_rejects_garbage(self):
        with pytest.raises(ValidationError):
            PauliSum.from_text("1.0 X Y")
        with pytest.raises(ValidationError):
            PauliSum.from_text("abc XY")


class TestProduct:
    def test_x_times_y(self):
        r = pauli_product(P("X"), P("Y"))
        assert r.letters == "Z" and r.phase_exp == 1

    @given(strings())
    def test_square_is_identity(self, s):
        r = pauli_product(s.stripped(), s.stripped())
        assert r == PauliString.identity(s.n_qubits)

    def test_xz_times_zi_dense(self):
        a, b = P("XZ"), P("ZI")
        assert np.allclose(dense(a * b), dense(a) @ dense(b))

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_dense_faithful_exhaustive(self, n):
        ss = list(all_strings(n))
        mats = {s.key: to_dense(s) for s in ss}
        for a in ss:
            for b in ss:
                r = pauli_product(a, b)
                assert np.allclose(to_dense(r), mats[a.key] @ mats[b.key])

    @given(pairs())
    def test_associative(self, t):
        a, b, c = t
        assert (a * b) * c == a * (b * c)

    @given(pairs())
    def test_dense_faithful_with_phases(self, t):
        a, b, _ = t
        assert np.allclose(dense(a * b), dense(a) @ dense(b))

    def test_size_mismatch(self):
        with pytest.raises(ValidationError):
            pauli_product(P("X"), P("XX"))


class TestCommutator:
    def test_z_z(self):
        assert pauli_commutator(P("Z"), P("Z")) is None

    def test_x_y(self):
        c, r = pauli_commutator(P("X"), P("Y"))
        assert c == 2j and r == P("Z")

    def test_xx_zi(self):
        c, r = pauli_commutator(P("XX"), P("ZI"))
        assert c == -2j and r == P("YX")
        a, b = to_dense(P("XX")), to_dense(P("ZI"))
        assert np.allclose(a @ b - b @ a, c * to_dense(r))

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_dichotomy_exhaustive(self, n):
        ss = list(all_strings(n))
        mats = {s.key: to_dense(s) for s in ss}
        for a, b in itertools.product(ss, ss):
            ma, mb = mats[a.key], mats[b.key]
            sign = -1 if symplectic_inner(a, b) else 1
            assert np.allclose(ma @ mb, sign * mb @ ma)
            comm = pauli_commutator(a, b)
            if comm is None:
                assert np.allclose(ma @ mb, mb @ ma)
            else:
                assert np.allclose(ma @ mb - mb @ ma, comm[0] * to_dense(comm[1]))

    @given(pairs())
    def test_antisymmetric(self, t):
        a, b, _ = t
        a, b = a.stripped(), b.stripped()
        ab, ba = pauli_commutator(a, b), pauli_commutator(b, a)
        assert (ab is None) == (ba is None)
        if ab is not None:
            assert ab[1] == ba[1] and ab[0] == -ba[0]


class TestAnticommuteCount:
    def test_identity(self):
        assert anticommute_count(PauliString.identity(5), LocalGenerator(5)) == 0

    def test_all_x(self):
        assert anticommute_count(P("XXXXX"), LocalGenerator(5)) == 5

    def test_mixed(self):
        assert anticommute_count(P("XZYI"), LocalGenerator(4)) == 2

    @given(strings(5), st.data())
    def test_matches_dense_sitewise(self, s, data):
        letters = data.draw(st.text("XYZ", min_size=s.n_qubits, max_size=s.n_qubits))
        g = LocalGenerator(s.n_qubits, letters)
        expected = sum(
            symplectic_inner(PauliString.single(s.n_qubits, i, s.letters[i]) if s.letters[i] != "I" else PauliString.identity(s.n_qubits),
                             PauliString.single(s.n_qubits, i, letters[i]))
            for i in range(s.n_qubits)
        )
        assert anticommute_count(s, g) == expected

    @given(strings(6), st.randoms())
    def test_permutation_invariant_for_uniform_generator(self, s, r):
        perm = list(range(s.n_qubits))
        r.shuffle(perm)
        for letter in "XYZ":
            g = LocalGenerator(s.n_qubits, letter * s.n_qubits)
            assert anticommute_count(s.permuted(perm), g) == anticommute_count(s, g)

    def test_generator_validation(self):
        with pytest.raises(ValidationError):
            LocalGenerator(3, "ZIZ")
        with pytest.raises(ValidationError):
            LocalGenerator(3, "ZZ")


class TestPauliSum:
    def test_merges_and_folds_phase(self):
        h = PauliSum([(1.0, P("XY")), (2.0, P("XY")), (1.0, PauliString.from_str("-iZZ"))])
        d = {s.letters: c for c, s in h.terms}
        assert d == {"XY": 3.0, "ZZ": -1j}

    def test_random_sum_dense(self, rng):
        letters = ["".join(rng.choice(list("IXYZ"), 3)) for _ in range(3)]
        coeffs = rng.standard_normal(3)
        h = PauliSum(list(zip(coeffs, map(P, letters))))
        m = h.to_dense()
        oracle = sum(c * kron_letters(s.letters) for c, s in h.terms)
        assert np.allclose(m, oracle)
        assert np.allclose(m, m.conj().T)
        assert h.is_hermitian()
        assert np.isclose(np.trace(m), 8 * sum(c for c, s in h.terms if s.weight == 0))

    def test_local_generator_sum(self):
        g = LocalGenerator(3, "XYZ", scale=0.5)
        oracle = 0.5 * (kron_letters("XII") + kron_letters("IYI") + kron_letters("IIZ"))
        assert np.allclose(g.to_dense(), oracle)
        assert np.isclose(g.trace_square(), np.trace(oracle @ oracle).real)


class TestSymmetrized:
    def test_compositions_count(self):
        for n in range(1, 8):
            assert sum(1 for _ in weak_compositions(n)) == (n + 1) * (n + 2) * (n + 3) // 6

    def test_strings_and_class(self):
        sp = SymmetrizedPauli(1, 1, 0, 1)
        assert len(sp.strings()) == 6
        g = LocalGenerator(3)
        assert {anticommute_count(s, g) for s in sp.strings()} == {sp.anticommute_count}

    def test_sum_commutes_with_swaps(self):
        h = SymmetrizedPauli(1, 0, 1, 1).to_pauli_sum().to_dense()
        swap = np.eye(8)[[0, 2, 1, 3, 4, 6, 5, 7]]
        assert np.allclose(swap @ h @ swap.T, h)

    def test_rejects_negative(self):
        with pytest.raises(ValidationError):
            SymmetrizedPauli(-1, 1, 0, 0)
