import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_density, random_hermitian, random_state
from orbitmetro.errors import ValidationError
from orbitmetro.pauli import LocalGenerator, PauliString, to_dense
from orbitmetro.qfi import (
    QfiMatrix,
    QfiStats,
    analytic_haar_avg,
    cfi_fiducial_measurement,
    depolarize_factor,
    haar_ramsey_loss_avg,
    loss_probabilities,
    loss_qfi_closed_form,
    loss_suppression_asymptote,
    qfi_fd_oracle,
    qfi_from_derivative,
    qfi_mixed,
    qfi_pure,
    qfim_two_param,
    root_fidelity,
)
from orbitmetro.quantum import (
    EnsembleSpec,
    basis_state,
    depolarize,
    haar_matrix,
    map_streams,
    mat_exp_hermitian,
    spin_operator,
)


def ghz(n, phase=-1j):
    return (basis_state(n, 0) + phase * basis_state(n, 2**n - 1)) / np.sqrt(2)


def plus(n):
    return np.full(2**n, 2 ** (-n / 2), dtype=complex)


class TestPure:
    def test_eigenstate(self):
        assert qfi_pure(basis_state(3, 5), LocalGenerator(3).to_dense()) == 0

    @pytest.mark.parametrize("n", [1, 2, 5, 8])
    def test_ghz_and_plus(self, n):
        sz = LocalGenerator(n).to_dense()
        assert np.isclose(qfi_pure(ghz(n), sz), n**2)
        assert np.isclose(qfi_pure(plus(n), sz), n)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValidationError):
            qfi_pure(basis_state(1), np.array([[0, 1], [0, 0]]))

    def test_rejects_unnormalized(self):
        with pytest.raises(ValidationError):
            qfi_pure(np.ones(2), np.eye(2))


class TestMixed:
    def test_rank_one(self, rng):
        for _ in range(10):
            psi = random_state(8, rng)
            g = random_hermitian(8, rng)
            assert abs(qfi_mixed(np.outer(psi, psi.conj()), g) - qfi_pure(psi, g)) <= 1e-9

    def test_maximally_mixed(self, rng):
        assert qfi_mixed(np.eye(8) / 8, random_hermitian(8, rng)) == 0

    def test_depolarized_ghz(self):
        sz = LocalGenerator(2).to_dense()
        rho = depolarize(ghz(2), 0.5)
        assert abs(qfi_mixed(rho, sz) - depolarize_factor(0.5, 4) * 4) <= 1e-9

    @given(st.integers(0, 2**32 - 1), st.floats(0, 1))
    def test_depolarizing_per_instance(self, seed, p):
        rng = np.random.default_rng(seed)
        d = int(rng.choice([2, 4, 8, 16, 64]))
        psi = random_state(d, rng)
        g = random_hermitian(d, rng)
        got = qfi_mixed(depolarize(psi, p), g)
        assert abs(got - depolarize_factor(p, d) * qfi_pure(psi, g)) <= 1e-8 * max(1, qfi_pure(psi, g))

    @given(st.integers(0, 2**32 - 1))
    def test_nonnegative_and_convex_bound(self, seed):
        rng = np.random.default_rng(seed)
        rho = random_density(6, rng, rank=int(rng.integers(1, 7)))
        g = random_hermitian(6, rng)
        f = qfi_mixed(rho, g)
        assert f >= 0
        # never exceeds 4 Var_rho(G)
        var = np.trace(rho @ g @ g).real - np.trace(rho @ g).real ** 2
        assert f <= 4 * var + 1e-9

    def test_from_derivative_matches_unitary_family(self, rng):
        rho = random_density(5, rng)
        g = random_hermitian(5, rng)
        drho = -1j * (g @ rho - rho @ g)
        assert np.isclose(qfi_from_derivative(rho, drho), qfi_mixed(rho, g))

    def test_invalid_density(self):
        with pytest.raises(ValidationError):
            qfi_mixed(np.diag([1.2, -0.2]), np.eye(2))


class TestFdOracle:
    def test_pure_ghz(self):
        for n in (2, 3, 4):
            sz = LocalGenerator(n).to_dense()
            fam = lambda t: mat_exp_hermitian(sz, t) @ ghz(n)
            assert abs(qfi_fd_oracle(fam, 0.3) / n**2 - 1) <= 1e-3

    def test_constant_family(self, rng):
        rho = random_density(4, rng)
        assert abs(qfi_fd_oracle(lambda t: rho, 0.0)) <= 1e-6

    def test_depolarized_n3(self, rng):
        psi = random_state(8, rng)
        g = LocalGenerator(3).to_dense()
        fam = lambda t: depolarize(mat_exp_hermitian(g, t) @ psi, 0.3)
        exact = qfi_mixed(fam(0.2), g)
        assert abs(qfi_fd_oracle(fam, 0.2) / exact - 1) <= 1e-4

    def test_fidelity_non_psd(self):
        with pytest.raises(ValidationError):
            root_fidelity(np.diag([1.5, -0.5]), np.eye(2) / 2)


class TestQfim:
    def test_identity_unitary(self):
        for n in (2, 3, 4):
            g1 = LocalGenerator(n, "X" * n, 1.0).to_dense()
            g2 = LocalGenerator(n, "Y" * n, 1.0).to_dense()
            f = qfim_two_param(n, np.eye(2**n), g1, g2)
            assert np.isclose(f[0, 0], 4 * n) and np.isclose(f[1, 1], 4 * n)
            assert np.isclose(f[0, 1], 0)

    def test_psd_symmetric(self, rng):
        n = 3
        g1 = LocalGenerator(n, "XXX", 1.0).to_dense()
        g2 = LocalGenerator(n, "YYY", 1.0).to_dense()
        for _ in range(10):
            f = qfim_two_param(n, haar_matrix(8, rng), g1, g2).entries
            assert np.allclose(f, f.T) and np.linalg.eigvalsh(f)[0] >= -1e-9

    def test_diagonal_is_single_parameter_qfi(self, rng):
        n = 3
        u = haar_matrix(8, rng)
        g1 = LocalGenerator(n, "XXX", 1.0).to_dense()
        g2 = LocalGenerator(n, "YYY", 1.0).to_dense()
        f = qfim_two_param(n, u, g1, g2)
        assert np.isclose(f[0, 0], qfi_pure(u @ basis_state(n), g1))

    def test_matrix_validation(self):
        with pytest.raises(ValidationError):
            QfiMatrix(np.array([[1, 2], [2, 1]]))


class TestCfi:
    def test_zero_variance(self):
        assert cfi_fiducial_measurement(LocalGenerator(3).to_dense(), basis_state(3)) == 0

    def test_ghz_generator(self):
        n = 4
        prep = mat_exp_hermitian(to_dense(PauliString.from_letters("X" * n)), np.pi / 4)
        g_eff = prep.conj().T @ LocalGenerator(n).to_dense() @ prep
        q = qfi_pure(basis_state(n), g_eff)
        assert np.isclose(q, n**2)
        c = cfi_fiducial_measurement(g_eff, basis_state(n))
        assert 0.99 * q <= c <= q * (1 + 1e-9)

    def test_random_instances(self, rng):
        g = LocalGenerator(5).to_dense()
        for _ in range(10):
            u = haar_matrix(32, rng)
            g_eff = u.conj().T @ g @ u
            q = qfi_pure(basis_state(5), g_eff)
            c = cfi_fiducial_measurement(g_eff, basis_state(5))
            assert 0.99 <= c / q <= 1 + 1e-9

    def test_ratio_improves_as_theta_shrinks(self, rng):
        u = haar_matrix(8, rng)
        g_eff = u.conj().T @ LocalGenerator(3).to_dense() @ u
        q = qfi_pure(basis_state(3), g_eff)
        r = [cfi_fiducial_measurement(g_eff, basis_state(3), th) / q for th in (1e-1, 1e-2, 1e-3)]
        assert r[0] < r[1] < r[2] <= 1 + 1e-9

    def test_theta_zero(self):
        with pytest.raises(ValidationError):
            cfi_fiducial_measurement(np.eye(2), basis_state(1), 0)


class TestClosedForms:
    def test_full(self):
        for n in range(1, 8):
            assert np.isclose(analytic_haar_avg(EnsembleSpec("full", n)), n)

    def test_full_exact_matches_unscaled(self):
        spec = EnsembleSpec("full", 3)
        g = LocalGenerator(3, scale=1.0)
        assert np.isclose(analytic_haar_avg(spec, g), 12)
        assert np.isclose(analytic_haar_avg(spec, g, exact=True), 4 * 24 / 9)

    def test_symmetric(self):
        assert np.isclose(analytic_haar_avg(EnsembleSpec("symmetric", 10)), 1000 / 33)
        assert np.isclose(analytic_haar_avg(EnsembleSpec("symmetric", 20)), 8000 / 63)

    def test_symmetric_agrees_with_trace_form_at_large_spin(self):
        # both grow as 4 S^2 / 3; they differ at O(S)
        for n in (40, 400, 4000):
            spec = EnsembleSpec("symmetric", n)
            ratio = analytic_haar_avg(spec) / analytic_haar_avg(spec, spin_operator("z", n / 2))
            assert abs(ratio - 1) < 4 / n

    def test_orthogonal_large_s(self):
        for n in (200, 400):
            s = n / 2
            val = analytic_haar_avg(EnsembleSpec("orthogonal", n))
            assert abs(val / (8 * s**3 / (3 * (n + 1))) - 1) < 5 / n

    @pytest.mark.parametrize("kind,n", [("full", 3), ("symmetric", 5), ("orthogonal", 5)])
    def test_exact_formulas_against_monte_carlo(self, kind, n, rng):
        spec = EnsembleSpec(kind, n)
        d, real = spec.dim, spec.real
        g = random_hermitian(d, rng)
        exact = kind != "orthogonal"
        vals = np.array(map_streams(lambda r, i: qfi_pure(haar_matrix(d, r, real)[:, 0], g), 4000, 41))
        target = analytic_haar_avg(spec, g, exact=exact)
        assert abs(vals.mean() - target) <= 4 * vals.std(ddof=1) / np.sqrt(vals.size)

    def test_depolarize_factor(self):
        assert depolarize_factor(0, 16) == 1
        assert depolarize_factor(1, 16) == 0
        assert np.isclose(depolarize_factor(0.1, 16), 0.81 / 0.9125)
        with pytest.raises(ValidationError):
            depolarize_factor(0.1, 1)

    def test_loss_closed_form(self):
        assert np.isclose(loss_qfi_closed_form(8, 0, 0.5, 0.5), 16)
        assert np.isclose(loss_qfi_closed_form(8, 2, 0.5, 0.5), 96 / 17)
        assert loss_probabilities(8, 2)[0] == pytest.approx(15 / 70)
        for k in (5, 6, 7, 8):
            assert loss_qfi_closed_form(8, k, 0.5, 0.5) == 0
        with pytest.raises(ValidationError):
            loss_qfi_closed_form(7, 0, 0.5, 0.5)
        with pytest.raises(ValidationError):
            loss_qfi_closed_form(8, 0, 0.5, 0.6)

    def test_haar_loss_avg(self):
        assert haar_ramsey_loss_avg(10, 0) == 40
        assert haar_ramsey_loss_avg(7, 6) == 1
        assert np.isclose(haar_ramsey_loss_avg(10, 2), 80 / 3)

    def test_asymptote(self):
        assert loss_suppression_asymptote(0) == 1


class TestStats:
    def test_from_values(self):
        s = QfiStats.from_values([1.0, 2.0, 3.0], master_seed=4, ensemble="full_unitary")
        assert s.mean == 2 and np.isclose(s.std_error, 1 / np.sqrt(3)) and s.samples == 3
        assert s.within(2.5) and not s.within(10)

    def test_single(self):
        assert QfiStats.from_values([5.0]).std_error == 0

    def test_invalid(self):
        with pytest.raises(ValidationError):
            QfiStats(0, -1, 1)
