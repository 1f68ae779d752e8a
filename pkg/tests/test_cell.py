import itertools
import math

import numpy as np
import pytest

from bdris.cell import (
    CellConfig, IdealSplitter, SurfacePhi, assemble_phi, cell_network, cell_phases, cell_total_matrix,
    power_ratio, structural_mask,
)
from bdris.errors import PhaseUndefined
from bdris.splitter import Mode, impedance_state, mode_preset

F0 = 2.4e9
QUARTERS = (0.0, math.pi / 2, math.pi, 3 * math.pi / 2)
HYBRID_J100 = impedance_state(100j)


def wrap(x):
    return x % (2 * math.pi)


class TestCellMatrix:
    def test_zero_phases(self):
        for sp in (HYBRID_J100, mode_preset(Mode.HYBRID, F0)):
            s = cell_total_matrix(CellConfig(sp)).matrix
            assert np.max(np.abs(s - sp.s.s)) < 1e-12

    def test_quarter_turn_on_hybrid(self):
        phi = cell_total_matrix(CellConfig(HYBRID_J100, math.pi / 2)).phi_r
        want = math.sqrt(0.5) * np.exp(1j * (math.pi + math.pi / 4))
        assert abs(phi - want) < 1e-12

    def test_reciprocal(self):
        for t1, t2 in itertools.product(QUARTERS, QUARTERS):
            net = cell_network(CellConfig(mode_preset(Mode.HYBRID, F0), t1, t2))
            assert abs(net.s12 - net.s21) < 1e-14

    def test_rejects_other_phases(self):
        with pytest.raises(ValueError):
            CellConfig(HYBRID_J100, 0.3)


class TestPhases:
    def test_c1_offset(self):
        tr, _ = cell_phases(CellConfig(HYBRID_J100, math.pi / 2))
        assert abs(math.degrees(tr) - 225.0) < 1e-9

    def test_one_bit_reflection(self):
        c1 = math.pi / 4
        vals = {round(wrap(cell_phases(CellConfig(HYBRID_J100, t))[0] - c1), 9) for t in QUARTERS}
        assert vals == {0.0, round(math.pi, 9)}

    def test_two_bit_transmission(self):
        c2 = -math.pi / 4
        counts = {}
        for t1, t2 in itertools.product(QUARTERS, QUARTERS):
            k = round(wrap(cell_phases(CellConfig(HYBRID_J100, t1, t2))[1] - c2) / (math.pi / 2)) % 4
            counts[k] = counts.get(k, 0) + 1
        assert counts == {0: 4, 1: 4, 2: 4, 3: 4}

    def test_undefined(self):
        with pytest.raises(PhaseUndefined):
            cell_phases(CellConfig(IdealSplitter(0.0, 1.0)))
        with pytest.raises(PhaseUndefined):
            cell_phases(CellConfig(IdealSplitter(1.0, 0.0)))


class TestPowerRatio:
    def test_ideal_hybrid(self):
        assert abs(power_ratio(CellConfig(IdealSplitter.lossless(1.0))) - 1.0) < 1e-12

    def test_phase_independent(self):
        sp = mode_preset(Mode.HYBRID, F0)
        assert power_ratio(CellConfig(sp, 0.0)) == power_ratio(CellConfig(sp, math.pi / 2))

    @pytest.mark.xfail(strict=True, reason="largest capacitance only reaches about -18 dB (ratio 0.016)")
    def test_transmission_preset_below_minus_20db(self):
        r = power_ratio(CellConfig(mode_preset(Mode.TRANSMISSION, F0)))
        assert r <= 0.01

    def test_transmission_preset_value(self):
        r = power_ratio(CellConfig(mode_preset(Mode.TRANSMISSION, F0)))
        assert abs(10 * math.log10(r) + 17.96) < 0.01


class TestIdealSplitter:
    def test_lossless_constructor(self):
        from bdris.netalg import is_lossless

        for ratio in (0.01, 0.5, 1.0, 3.0, 100.0):
            assert is_lossless(IdealSplitter.lossless(ratio, 0.7).s, 1e-12)

    def test_active_rejected(self):
        with pytest.raises(ValueError):
            IdealSplitter(1.0, 0.5)


class TestAssemble:
    def test_single_cell(self):
        from bdris.cell import CellScattering

        phi = assemble_phi([CellScattering(1, 2, 3)])
        assert np.array_equal(phi.matrix, [[1, 2], [2, 3]])

    def test_two_cell_sparsity(self):
        cells = [cell_total_matrix(CellConfig(HYBRID_J100, t)) for t in QUARTERS[:2]]
        phi = assemble_phi(cells)
        assert np.count_nonzero(phi.matrix) == 8
        assert structural_mask(2).sum() == 8

    def test_lossless_columns(self):
        cells = [cell_total_matrix(CellConfig(HYBRID_J100, t1, t2)) for t1, t2 in itertools.product(QUARTERS, QUARTERS)]
        phi = assemble_phi(cells).matrix
        error = np.max(np.abs(np.linalg.norm(phi, axis=0) - 1))
        assert error < 1e-10

    def test_bad_entries(self):
        a = np.ones((4, 4))
        with pytest.raises(ValueError):
            SurfacePhi(2, a)
