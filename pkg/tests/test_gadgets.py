import math

import numpy as np
import pytest

from gadgetsim.encoding import gauge_transform
from gadgetsim.gadgets import (
    CalibrationError,
    Driver,
    GadgetConfig,
    NoiseDraw,
    VirtualBoundary,
    build_chain,
    build_driver,
    build_five_body_driver,
    build_gadget,
    build_logical_xx,
    build_minor_embedding_system,
    build_single_x_driver,
    build_three_body_driver,
    calibrate_beta,
    data_x_drive,
    logical_parity,
)
from gadgetsim.pauli import ConfigurationError, OperatorSum, X, Z, identity, realize
from oracles import ChainOracle, all_bits, broken_clauses

SMALL = [2, 3, 4]


def cfg(n_d, **kw):
    return GadgetConfig(n_d=n_d, **kw)


def basis_energies(mat):
    return np.real(np.diag(mat))


class TestConfig:
    def test_defaults(self):
        c = cfg(5)
        assert (c.n_a, c.gamma, c.alpha, c.driver) == (4, 8.0, 1.0, Driver.FIVE_BODY)
        assert c.register.total == 9

    @pytest.mark.parametrize("n_d", [0, 1, 2.5])
    def test_rejects_small_or_fractional_chains(self, n_d):
        with pytest.raises(ConfigurationError):
            cfg(n_d)

    def test_rejects_negative_and_nonfinite(self):
        with pytest.raises(ConfigurationError):
            cfg(3, gamma=-1.0)
        with pytest.raises(ConfigurationError):
            cfg(3, alpha=float("nan"))

    def test_calibrated_beta_requires_gamma_above_alpha(self):
        with pytest.raises(CalibrationError):
            cfg(3, gamma=1.0, alpha=1.0).beta

    def test_boundary(self):
        assert cfg(3).boundary == VirtualBoundary(1, 1)
        assert cfg(3, kinked=True).boundary == VirtualBoundary(1, -1)
        with pytest.raises(ConfigurationError):
            VirtualBoundary(-1, 1)

    def test_with_returns_modified_copy(self):
        c = cfg(3)
        d = c.with_(gamma=16.0)
        assert d.gamma == 16.0 and c.gamma == 8.0 and d.n_d == 3


class TestCalibration:
    def test_reference_value(self):
        assert calibrate_beta(8, 1, 5) == pytest.approx(7 / (2 * math.cos(math.pi / 6)), rel=1e-15)
        assert calibrate_beta(8, 1, 5) == pytest.approx(4.04145, abs=1e-5)

    def test_small_chain(self):
        assert calibrate_beta(3, 1, 2) == pytest.approx(2.0, rel=1e-14)

    def test_equal_strengths_rejected(self):
        with pytest.raises(CalibrationError):
            calibrate_beta(1.0, 1.0, 3)


class TestChain:
    def test_two_qubit_form(self):
        c = cfg(2)
        expected = 0.5 * (1 - Z(0) * Z(2)) + 0.5 * (1 - Z(1) * Z(2))
        assert build_chain(c) == expected

    def test_all_zero_state_has_no_energy(self):
        assert realize(build_chain(cfg(2)), 3)[0, 0] == 0

    @pytest.mark.parametrize("n_d", SMALL)
    @pytest.mark.parametrize("kinked", [False, True])
    def test_matches_oracle_matrix(self, n_d, kinked):
        c = cfg(n_d, kinked=kinked)
        np.testing.assert_allclose(realize(build_chain(c), c.register), ChainOracle(n_d, kinked).chain(), atol=1e-13)

    @pytest.mark.parametrize("n_d", SMALL)
    @pytest.mark.parametrize("kinked", [False, True])
    def test_energy_counts_broken_clauses(self, n_d, kinked):
        c = cfg(n_d, kinked=kinked)
        energies = basis_energies(realize(build_chain(c), c.register))
        o = ChainOracle(n_d, kinked)
        for z in all_bits(n_d):
            for a in all_bits(n_d - 1):
                assert energies[o.index(z, a)] == len(broken_clauses(z, a, kinked))

    @pytest.mark.parametrize("n_d", SMALL)
    @pytest.mark.parametrize("kinked", [False, True])
    def test_unsatisfiable_minimum_and_degeneracy(self, n_d, kinked):
        satisfiable = 1 if kinked else 0
        for z in all_bits(n_d):
            counts = [len(broken_clauses(z, a, kinked)) for a in all_bits(n_d - 1)]
            if sum(z) % 2 == satisfiable:
                assert min(counts) == 0 and counts.count(0) == 1
            else:
                assert min(counts) == 1 and counts.count(1) == n_d

    def test_odd_parity_minimum_is_one(self):
        c = cfg(3)
        energies = basis_energies(realize(build_chain(c), c.register))
        odd = [energies[ChainOracle(3).index(z, a)] for z in all_bits(3) if sum(z) % 2 for a in all_bits(2)]
        assert min(odd) == 1

    @pytest.mark.parametrize("n_d", SMALL)
    def test_kink_swaps_satisfiable_parity(self, n_d):
        for kinked in (False, True):
            c = cfg(n_d, kinked=kinked)
            energies = basis_energies(realize(build_chain(c), c.register))
            o = ChainOracle(n_d, kinked)
            for z in all_bits(n_d):
                emin = min(energies[o.index(z, a)] for a in all_bits(n_d - 1))
                assert (emin == 0) == (sum(z) % 2 == c.satisfiable_parity)


class TestDrivers:
    def test_single_x_two_qubits(self):
        assert build_single_x_driver(cfg(2), 1.0) == OperatorSum([X(2, -1.0)])

    def test_single_x_three_qubits(self):
        op = build_single_x_driver(cfg(3), 2.0)
        assert len(op) == 2 and all(t.coeff == -2 for t in op)

    def test_single_x_ground_energy(self):
        c = cfg(3)
        assert np.linalg.eigvalsh(realize(build_single_x_driver(c, 1.0), c.register))[0] == pytest.approx(-2.0)

    @pytest.mark.parametrize("n_d", SMALL + [5])
    @pytest.mark.parametrize("kinked", [False, True])
    def test_five_body_matches_oracle(self, n_d, kinked):
        c = cfg(n_d, kinked=kinked)
        np.testing.assert_allclose(
            realize(build_five_body_driver(c), c.register), ChainOracle(n_d, kinked).five_body(), atol=1e-13
        )

    @pytest.mark.parametrize("n_d", SMALL + [5])
    @pytest.mark.parametrize("kinked", [False, True])
    def test_three_body_matches_oracle(self, n_d, kinked):
        c = cfg(n_d, kinked=kinked)
        np.testing.assert_allclose(
            realize(build_three_body_driver(c), c.register), ChainOracle(n_d, kinked).three_body(), atol=1e-13
        )

    @pytest.mark.parametrize("n_d", [2, 3, 4, 5])
    def test_three_body_term_count(self, n_d):
        assert len(build_three_body_driver(cfg(n_d))) == 2 * (n_d - 1)

    @pytest.mark.parametrize("builder", [build_five_body_driver, build_three_body_driver])
    @pytest.mark.parametrize("n_d", SMALL)
    @pytest.mark.parametrize("kinked", [False, True])
    def test_drivers_annihilate_zero_defect_states(self, builder, n_d, kinked):
        c = cfg(n_d, kinked=kinked)
        mat = realize(builder(c), c.register)
        o = ChainOracle(n_d, kinked)
        for z in all_bits(n_d):
            for a in all_bits(n_d - 1):
                if not broken_clauses(z, a, kinked):
                    assert np.max(np.abs(mat[:, o.index(z, a)])) == 0

    def test_five_body_one_defect_block_is_unit_hopping(self):
        # z = 00100 is unsatisfiable on the unkinked chain
        c = cfg(5)
        mat = realize(build_five_body_driver(c), c.register)
        o = ChainOracle(5)
        z = (0, 0, 1, 0, 0)
        words = [a for a in all_bits(4) if len(broken_clauses(z, a, False)) == 1]
        words.sort(key=lambda a: broken_clauses(z, a, False)[0])
        idx = [o.index(z, a) for a in words]
        block = mat[np.ix_(idx, idx)].real
        np.testing.assert_allclose(block, -(np.eye(5, k=1) + np.eye(5, k=-1)), atol=1e-14)

    def test_odd_sector_ground_energy_unit_beta(self):
        c = cfg(5)
        h = 8 * build_chain(c) + build_five_body_driver(c)
        mat = realize(h, c.register)
        z = 0b00100
        blk = mat[z * 16:(z + 1) * 16, z * 16:(z + 1) * 16]
        assert np.linalg.eigvalsh(blk)[0] == pytest.approx(8 - 2 * math.cos(math.pi / 6), abs=1e-12)
        assert np.linalg.eigvalsh(blk)[0] == pytest.approx(6.2679, abs=1e-4)

    @pytest.mark.parametrize("kinked", [False, True])
    def test_gauge_maps_three_body_onto_five_body(self, kinked):
        c = cfg(4, kinked=kinked)
        g = gauge_transform(c)
        five = realize(build_five_body_driver(c), c.register)
        three = realize(build_three_body_driver(c), c.register)
        o = ChainOracle(4, kinked)
        one_defect = [
            o.index(z, a) for z in all_bits(4) for a in all_bits(3) if len(broken_clauses(z, a, kinked)) == 1
        ]
        sel = np.ix_(one_defect, one_defect)
        conj = (g[:, None] * three * g[None, :])[sel]
        np.testing.assert_allclose(conj, five[sel], atol=1e-13)

    def test_build_driver_dispatch(self):
        c = cfg(3, driver=Driver.NONE)
        assert len(build_driver(c)) == 0
        assert build_driver(c.with_(driver=Driver.THREE_BODY)) == build_three_body_driver(c)


class TestGadget:
    def test_requires_subspace_driver(self):
        with pytest.raises(ConfigurationError):
            build_gadget(cfg(3, driver=Driver.SINGLE_X))

    @pytest.mark.parametrize("n_d", [2, 3, 4, 5])
    def test_matches_oracle(self, n_d):
        c = cfg(n_d)
        np.testing.assert_allclose(
            realize(build_gadget(c), c.register), ChainOracle(n_d).gadget(8.0, 1.0), atol=1e-12
        )

    @pytest.mark.parametrize("n_d", [2, 3, 4, 5])
    @pytest.mark.parametrize("driver", [Driver.FIVE_BODY, Driver.THREE_BODY])
    def test_parity_splitting_and_zero_ground(self, n_d, driver):
        c = cfg(n_d, driver=driver)
        mat = realize(build_gadget(c), c.register)
        na = 1 << c.n_a
        ground = {0: [], 1: []}
        for z in range(1 << n_d):
            ground[bin(z).count("1") % 2].append(np.linalg.eigvalsh(mat[z * na:(z + 1) * na, z * na:(z + 1) * na])[0])
        assert min(ground[0]) == pytest.approx(0.0, abs=1e-9)
        assert min(ground[1]) - min(ground[0]) == pytest.approx(1.0, abs=1e-9)

    def test_gap_grows_with_confinement(self):
        def gap(gamma):
            c = cfg(4, gamma=gamma)
            mat = realize(build_gadget(c), c.register)
            blocks = [np.linalg.eigvalsh(mat[z * 8:(z + 1) * 8, z * 8:(z + 1) * 8]) for z in range(16)]
            return min(b[1] for b in blocks) - max(b[0] for b in blocks)

        g8, g16 = gap(8.0), gap(16.0)
        assert g16 > g8
        # independent evaluation from oracle matrices
        assert g8 == pytest.approx(4.32623792124926, abs=1e-9)
        assert g16 == pytest.approx(9.270509831248416, abs=1e-9)

    @pytest.mark.parametrize("n_d", [2, 3, 4, 5])
    @pytest.mark.parametrize("kinked", [False, True])
    @pytest.mark.parametrize("driver", [Driver.FIVE_BODY, Driver.THREE_BODY])
    def test_hermitian(self, n_d, kinked, driver):
        c = cfg(n_d, kinked=kinked, driver=driver)
        for op in (build_chain(c), build_driver(c), build_gadget(c)):
            mat = realize(op, c.register)
            assert op.is_hermitian()
            assert np.max(np.abs(mat - mat.conj().T)) <= 1e-12


class TestLogicalXX:
    def test_smallest_instance(self):
        op = build_logical_xx(cfg(2), 0)
        assert [f for f, _ in op.terms[0].factors] == [0, 1, 2]

    @pytest.mark.parametrize("i", [-1, 4])
    def test_index_error(self, i):
        with pytest.raises(ConfigurationError):
            build_logical_xx(cfg(5), i)


class TestNoiseAndSystem:
    def test_seeded_draw_is_pinned(self):
        draw = NoiseDraw.draw(5, 0.1, 42)
        assert draw == NoiseDraw.draw(5, 0.1, 42)
        expected = (0.030471707975443137, -0.10399841062404956, 0.07504511958064573,
                    0.0940564716391214, -0.19510351886538366)
        np.testing.assert_allclose(draw.g, expected, rtol=0, atol=1e-15)

    def test_draw_statistics(self):
        g = np.concatenate([NoiseDraw.draw(5, 0.3, (7, k)).g for k in range(2000)])
        assert abs(g.mean()) < 0.02
        assert g.std() == pytest.approx(0.3, rel=0.03)

    def test_negative_scale_rejected(self):
        with pytest.raises(ConfigurationError):
            NoiseDraw.draw(3, -0.1, 0)

    def test_term_count(self):
        c = cfg(5)
        noise = NoiseDraw.draw(5, 0.1, 42)
        h = build_minor_embedding_system(c, noise)
        expected = len(build_chain(c)) + len(build_five_body_driver(c)) + 5 + 4
        assert len(h) == expected

    def test_zero_noise_commutes_with_dressed_parity(self):
        from gadgetsim.encoding import build_encoding

        c = cfg(3)
        bundle = build_encoding(c)
        h = realize(build_minor_embedding_system(c, NoiseDraw.zero(3)), c.register)
        parity = bundle.u_enc @ realize(logical_parity(c), c.register) @ bundle.u_enc.conj().T
        np.testing.assert_allclose(h @ parity, parity @ h, atol=1e-10)

    def test_length_mismatch(self):
        with pytest.raises(ConfigurationError):
            build_minor_embedding_system(cfg(3), NoiseDraw.zero(4))

    def test_noise_sits_on_data_qubits(self):
        c = cfg(3)
        noise = NoiseDraw((0.1, 0.2, 0.3), 0.2)
        h = build_minor_embedding_system(c, noise) - build_gadget(c)
        h = h - c.gamma * (build_logical_xx(c, 0) + build_logical_xx(c, 1))
        assert h == OperatorSum([Z(0, 0.1), Z(1, 0.2), Z(2, 0.3)])


def test_data_x_drive_and_parity():
    c = cfg(3)
    assert data_x_drive(c) == X(0) + X(1) + X(2)
    assert data_x_drive(c, [1], 0.5) == OperatorSum([X(1, 0.5)])
    assert logical_parity(c) == OperatorSum([identity()]) * Z(0) * Z(1) * Z(2)
