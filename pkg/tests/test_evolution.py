import numpy as np
import pytest

from relatime import (
    DeltaKernel,
    DensityMatrix,
    DimensionMismatchError,
    Hamiltonian,
    NonPositiveLambdaError,
    QuadratureDriftError,
    QuadratureRule,
    TabulatedKernel,
    UniformKernel,
    coherence_report,
    evolve_pearle,
    evolve_relational_dephasing,
    evolve_relational_quadrature,
    evolve_unitary,
    make_gaussian_kernel,
    partial_trace,
    purity,
    spectral_decompose,
    tensor,
)
from relatime.evolution import (
    METHOD_PEARLE_COLLAPSE,
    METHOD_RELATIONAL_DEPHASING,
    METHOD_RELATIONAL_QUADRATURE,
    METHOD_UNITARY,
)
from conftest import (
    plus_density,
    random_density,
    random_hamiltonian,
    random_pure_density,
)

QUBIT_GAP = spectral_decompose(np.diag([0.0, 1.0]))


def kernel_zoo():
    return [
        DeltaKernel(1.7),
        make_gaussian_kernel(0.1, 2.0),
        UniformKernel(0.9, 1.2),
        TabulatedKernel([0.0, 0.7, 1.9], [1.0, 2.0, 1.0]),
    ]


class TestUnitary:
    def test_zero_time_is_identity(self, rng):
        rho = random_density(rng, 4)
        out = evolve_unitary(rho, random_hamiltonian(rng, 4), 0.0)
        assert np.max(np.abs(out.state.matrix - rho.matrix)) <= 1e-12
        assert out.method == METHOD_UNITARY
        assert out.node_count == 0

    def test_pi_gap_flips_coherence_sign(self):
        h = spectral_decompose(np.diag([0.0, np.pi]))
        out = evolve_unitary(plus_density(), h, 1.0).state
        want = np.array([[0.5, -0.5], [-0.5, 0.5]])
        assert np.max(np.abs(out.matrix - want)) <= 1e-12

    def test_purity_preserved(self, rng):
        rho = random_density(rng, 5)
        out = evolve_unitary(rho, random_hamiltonian(rng, 5), 2.3).state
        assert purity(out) == pytest.approx(purity(rho), abs=1e-10)

    @pytest.mark.parametrize("dim", [2, 7, 16])
    def test_trace_and_spectrum_preserved(self, rng, dim):
        rho = random_density(rng, dim)
        out = evolve_unitary(rho, random_hamiltonian(rng, dim), -1.4).state
        assert abs(np.trace(out.matrix) - 1.0) <= 1e-9
        before = np.linalg.eigvalsh(rho.matrix)
        after = np.linalg.eigvalsh(out.matrix)
        assert np.max(np.abs(before - after)) <= 1e-9

    def test_group_property_round_trip(self, rng):
        rho = random_density(rng, 3)
        h = random_hamiltonian(rng, 3)
        forward = evolve_unitary(rho, h, 1.9).state
        back = evolve_unitary(forward, h, -1.9).state
        assert np.max(np.abs(back.matrix - rho.matrix)) <= 1e-12

    def test_dimension_mismatch(self, rng):
        with pytest.raises(DimensionMismatchError):
            evolve_unitary(random_density(rng, 2), random_hamiltonian(rng, 3), 1.0)


class TestRelationalQuadrature:
    def test_delta_kernel_reduces_to_unitary(self, rng):
        for dim in (2, 5, 8):
            rho = random_density(rng, dim)
            h = random_hamiltonian(rng, dim)
            t_b = float(rng.uniform(0.2, 4.0))
            exact = evolve_unitary(rho, h, t_b).state
            averaged = evolve_relational_quadrature(rho, h, DeltaKernel(t_b), 16)
            assert np.max(np.abs(averaged.state.matrix - exact.matrix)) <= 1e-12
            assert averaged.method == METHOD_RELATIONAL_QUADRATURE
            assert averaged.node_count == 1
            assert averaged.time_label == t_b

    def test_energy_diagonal_state_is_immune(self, rng):
        h = random_hamiltonian(rng, 4)
        populations = np.array([0.4, 0.3, 0.2, 0.1])
        rho = DensityMatrix(
            (h.eigenbasis * populations) @ h.eigenbasis.conj().T
        )
        for kernel in kernel_zoo():
            out = evolve_relational_quadrature(rho, h, kernel, 48).state
            assert np.max(np.abs(out.matrix - rho.matrix)) <= 1e-10

    def test_qubit_gaussian_offdiagonal_magnitude(self):
        kernel = make_gaussian_kernel(0.1, 2.0)
        out = evolve_relational_quadrature(plus_density(), QUBIT_GAP, kernel, 64)
        assert abs(out.state.matrix[0, 1]) == pytest.approx(
            0.5 * np.exp(-0.1), abs=1e-9
        )

    def test_purity_never_increases(self, rng):
        for kernel in kernel_zoo():
            rho = random_pure_density(rng, 3)
            h = random_hamiltonian(rng, 3)
            out = evolve_relational_quadrature(rho, h, kernel, 64).state
            assert purity(out) <= purity(rho) + 1e-9

    def test_trace_drift_fails_loudly(self, rng):
        bad_rule = object.__new__(QuadratureRule)
        object.__setattr__(bad_rule, "nodes", np.array([0.5]))
        object.__setattr__(bad_rule, "weights", np.array([0.9]))

        class LeakyKernel(DeltaKernel):
            def quadrature(self, node_count):
                return bad_rule

        with pytest.raises(QuadratureDriftError, match="drifted"):
            evolve_relational_quadrature(
                random_density(rng, 2), QUBIT_GAP, LeakyKernel(0.5), 4
            )


class TestRelationalDephasing:
    def test_matches_quadrature_on_random_instances(self, rng):
        for _ in range(10):
            dim = int(rng.integers(2, 9))
            rho = random_density(rng, dim)
            h = random_hamiltonian(rng, dim)
            kernel = make_gaussian_kernel(
                float(rng.uniform(0.05, 0.5)), float(rng.uniform(0.5, 3.0))
            )
            quad = evolve_relational_quadrature(rho, h, kernel, 64).state
            closed = evolve_relational_dephasing(rho, h, kernel)
            assert np.max(np.abs(quad.matrix - closed.state.matrix)) <= 1e-8
            assert closed.method == METHOD_RELATIONAL_DEPHASING
            assert closed.node_count == 0

    def test_tabulated_dephasing_equals_its_quadrature(self, rng):
        rho = random_density(rng, 3)
        h = random_hamiltonian(rng, 3)
        kernel = TabulatedKernel([0.0, 1.1, 2.2], [1.0, 1.0, 2.0])
        quad = evolve_relational_quadrature(rho, h, kernel, 3).state
        closed = evolve_relational_dephasing(rho, h, kernel).state
        assert np.max(np.abs(quad.matrix - closed.matrix)) <= 1e-12

    def test_gaussian_law_magnitude_and_phase(self):
        lam, t_b = 0.1, 2.0
        out = evolve_relational_dephasing(
            plus_density(), QUBIT_GAP, make_gaussian_kernel(lam, t_b)
        ).state
        # element (0, 1) keeps the unitary phase exp(i (E_1 - E_0) t_B)
        # and shrinks by exp(-lam t_B gap^2 / 2)
        want = 0.5 * np.exp(-lam * t_b / 2.0) * np.exp(1j * t_b)
        assert abs(out.matrix[0, 1] - want) <= 1e-12

    def test_equal_energy_elements_preserved(self):
        h = spectral_decompose(np.diag([0.0, 1.0, 1.0]))
        rho = DensityMatrix(np.full((3, 3), 1 / 3))
        out = evolve_relational_dephasing(
            rho, h, make_gaussian_kernel(2.0, 5.0)
        ).state
        basis = h.eigenbasis
        before = basis.conj().T @ rho.matrix @ basis
        after = basis.conj().T @ out.matrix @ basis
        # the (1, 2) element lives inside the degenerate subspace
        assert abs(abs(after[1, 2]) - abs(before[1, 2])) <= 1e-9

    def test_fully_degenerate_hamiltonian_is_identity_map(self, rng):
        h = spectral_decompose(np.eye(3) * 0.7)
        rho = random_density(rng, 3)
        for kernel in kernel_zoo():
            out = evolve_relational_dephasing(rho, h, kernel).state
            assert np.max(np.abs(out.matrix - rho.matrix)) <= 1e-12

    def test_invariant_under_degenerate_basis_choice(self, rng):
        theta = 0.7
        rot = np.array(
            [
                [1, 0, 0],
                [0, np.cos(theta), np.sin(theta) * np.exp(0.3j)],
                [0, -np.sin(theta) * np.exp(-0.3j), np.cos(theta)],
            ]
        )
        energies = [0.0, 1.0, 1.0]
        h_plain = Hamiltonian.from_eigensystem(energies, np.eye(3))
        h_rotated = Hamiltonian.from_eigensystem(energies, rot)
        assert np.max(np.abs(h_plain.matrix - h_rotated.matrix)) <= 1e-12
        rho = random_density(rng, 3)
        kernel = make_gaussian_kernel(0.3, 1.5)
        out_plain = evolve_relational_dephasing(rho, h_plain, kernel).state
        out_rot = evolve_relational_dephasing(rho, h_rotated, kernel).state
        assert np.max(np.abs(out_plain.matrix - out_rot.matrix)) <= 1e-10

    def test_diagonal_entries_independent_of_reading(self, rng):
        rho = random_density(rng, 4)
        h = random_hamiltonian(rng, 4)
        basis = h.eigenbasis
        reference = np.diag(basis.conj().T @ rho.matrix @ basis).real
        for t_b in (0.5, 1.0, 2.0, 5.0):
            out = evolve_relational_dephasing(
                rho, h, make_gaussian_kernel(0.4, t_b)
            ).state
            diag = np.diag(basis.conj().T @ out.matrix @ basis).real
            assert np.max(np.abs(diag - reference)) <= 1e-9


class TestPearle:
    def test_zero_time_returns_input(self, rng):
        rho = random_density(rng, 3)
        out = evolve_pearle(rho, random_hamiltonian(rng, 3), 0.2, 0.0, 64)
        assert out.state is rho
        assert out.method == METHOD_PEARLE_COLLAPSE
        assert out.node_count == 0

    def test_matches_gaussian_relational_state(self, rng):
        for _ in range(8):
            dim = int(rng.integers(2, 9))
            rho = random_density(rng, dim)
            h = random_hamiltonian(rng, dim)
            lam = float(rng.uniform(0.05, 0.5))
            t = float(rng.uniform(0.1, 3.0))
            collapsed = evolve_pearle(rho, h, lam, t, 64).state
            relational = evolve_relational_dephasing(
                rho, h, make_gaussian_kernel(lam, t)
            ).state
            assert np.max(np.abs(collapsed.matrix - relational.matrix)) <= 1e-8

    def test_populations_constant_in_time(self):
        h = spectral_decompose(np.diag([0.0, 1.3]))
        rho = plus_density()
        for t in (0.5, 2.0, 7.0):
            out = evolve_pearle(rho, h, 0.2, t, 64).state
            np.testing.assert_allclose(np.diag(out.matrix).real, [0.5, 0.5], atol=1e-10)

    def test_rejects_nonpositive_lambda(self, rng):
        with pytest.raises(NonPositiveLambdaError):
            evolve_pearle(random_density(rng, 2), QUBIT_GAP, 0.0, 1.0, 32)

    def test_rejects_negative_time(self, rng):
        with pytest.raises(ValueError):
            evolve_pearle(random_density(rng, 2), QUBIT_GAP, 0.1, -1.0, 32)


class TestProductSystems:
    def _composite(self, rng):
        h_s = spectral_decompose(np.diag([0.0, 1.0]))
        h_c = spectral_decompose(np.diag([0.0, 1.618]))
        rho_s = plus_density()
        rho_c = plus_density()
        h_q = spectral_decompose(
            tensor(h_s.matrix, np.eye(2)) + tensor(np.eye(2), h_c.matrix)
        )
        rho_q = DensityMatrix(tensor(rho_s, rho_c))
        return h_s, h_c, h_q, rho_s, rho_c, rho_q

    def test_unitary_evolution_factorizes(self, rng):
        h_s, h_c, h_q, rho_s, rho_c, rho_q = self._composite(rng)
        t = 1.3
        joint = evolve_unitary(rho_q, h_q, t).state
        separate = tensor(
            evolve_unitary(rho_s, h_s, t).state,
            evolve_unitary(rho_c, h_c, t).state,
        )
        assert np.max(np.abs(joint.matrix - separate)) <= 1e-9

    def test_relational_evolution_builds_correlations(self, rng):
        # witness: |+><+| x |+><+| with incommensurate gaps and a watch
        # broad enough to decohere partially
        _, _, h_q, _, _, rho_q = self._composite(rng)
        kernel = make_gaussian_kernel(0.5, 1.0)
        joint = evolve_relational_dephasing(rho_q, h_q, kernel).state
        marginal_s = partial_trace(joint, (2, 2), keep="S")
        marginal_c = partial_trace(joint, (2, 2), keep="C")
        product = tensor(marginal_s, marginal_c)
        assert np.max(np.abs(joint.matrix - product)) > 1e-3

    def test_subsystem_consistency_both_routes(self, rng):
        # averaging the subsystem alone == tracing the averaged composite
        for _ in range(5):
            d_s, d_c = int(rng.integers(2, 4)), int(rng.integers(2, 4))
            h_s = random_hamiltonian(rng, d_s)
            h_c = random_hamiltonian(rng, d_c)
            rho_s = random_density(rng, d_s)
            rho_c = random_density(rng, d_c)
            h_q = spectral_decompose(
                tensor(h_s.matrix, np.eye(d_c)) + tensor(np.eye(d_s), h_c.matrix)
            )
            rho_q = DensityMatrix(tensor(rho_s, rho_c))
            kernel = make_gaussian_kernel(0.3, 1.2)

            direct = evolve_relational_dephasing(rho_s, h_s, kernel).state
            traced = partial_trace(
                evolve_relational_dephasing(rho_q, h_q, kernel).state,
                (d_s, d_c),
                keep="S",
            )
            assert np.max(np.abs(direct.matrix - traced.matrix)) <= 1e-9

            direct_q = evolve_relational_quadrature(rho_s, h_s, kernel, 48).state
            traced_q = partial_trace(
                evolve_relational_quadrature(rho_q, h_q, kernel, 48).state,
                (d_s, d_c),
                keep="S",
            )
            assert np.max(np.abs(direct_q.matrix - traced_q.matrix)) <= 1e-9


class TestCoherenceReport:
    def test_delta_kernel_preserves_every_pair(self, rng):
        rho = random_density(rng, 4)
        h = random_hamiltonian(rng, 4)
        report = coherence_report(rho, h, DeltaKernel(2.5))
        for pair in report.pairs:
            assert pair.magnitude_averaged == pytest.approx(
                pair.magnitude_exact, abs=1e-12
            )

    def test_broad_kernel_flags_complete_decoherence(self):
        h = spectral_decompose(np.diag([0.0, 1.0, 2.3]))
        rho = DensityMatrix(np.full((3, 3), 1 / 3))
        report = coherence_report(rho, h, make_gaussian_kernel(5.0, 10.0))
        assert report.complete_decoherence
        assert report.max_offdiag_averaged < 1e-9

    def test_narrow_kernel_does_not_flag(self):
        report = coherence_report(
            plus_density(), QUBIT_GAP, make_gaussian_kernel(0.1, 1.0)
        )
        assert not report.complete_decoherence
        assert report.max_offdiag_averaged == pytest.approx(
            0.5 * np.exp(-0.05), abs=1e-12
        )

    def test_degenerate_hamiltonian_is_vacuously_complete(self, rng):
        h = spectral_decompose(np.eye(3))
        report = coherence_report(
            random_density(rng, 3), h, make_gaussian_kernel(1.0, 1.0)
        )
        assert report.complete_decoherence
        assert report.max_offdiag_averaged == 0.0
        assert len(report.pairs) == 3

    def test_monotonicity_invariants(self, rng):
        for _ in range(5):
            rho = random_density(rng, 5)
            h = random_hamiltonian(rng, 5)
            kernel = make_gaussian_kernel(
                float(rng.uniform(0.1, 2.0)), float(rng.uniform(0.5, 4.0))
            )
            for pair in coherence_report(rho, h, kernel).pairs:
                assert pair.magnitude_averaged <= pair.magnitude_exact + 1e-9

    def test_threshold_is_configurable(self):
        report = coherence_report(
            plus_density(), QUBIT_GAP, make_gaussian_kernel(0.1, 1.0), threshold=0.9
        )
        assert report.complete_decoherence
        assert report.threshold == 0.9
