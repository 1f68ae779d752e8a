import json
import math

import numpy as np
import pytest

from bdris.emdata import (
    ElementParams, Tier, from_json_dict, generate_synthetic, lattice, load_dataset, matched_currents,
    mirror_dataset, plane_wave_voc, save_dataset, to_json_dict, write_patterns_csv,
)
from bdris.errors import GridMismatch, InvalidLayout, ReciprocityError, SchemaError, WrongSide
from bdris.pattern import AngleGrid

F0 = 2.4e9
LAM = 299_792_458.0 / F0
SMALL = AngleGrid.full(10.0, 30.0)


def adjacent_steps(v):
    return np.angle(v[1:] / v[:-1])


class TestSynthetic:
    def test_half_wave_spacing(self):
        assert abs(0.0625 / LAM - 0.5) < 0.001

    def test_sizes(self, ds44):
        assert ds44.m == 16 and ds44.q == 0
        assert ds44.e_r_ports.shape == (16, 181, 72)

    def test_single_element(self):
        ds = generate_synthetic(1, 1, 0.0625, F0, grid=SMALL)
        assert ds.z_r.shape == (1, 1)
        assert ds.z_r[0, 0] == 50

    def test_broadside_phases_equal(self, ds44):
        v = ds44.v_oc
        assert np.max(np.abs(v - v[0])) < 1e-12

    def test_oblique_phase_step(self):
        ds = generate_synthetic(1, 4, LAM / 2, F0, grid=SMALL)
        v = plane_wave_voc(ds, (30.0, 90.0))
        error = np.max(np.abs(adjacent_steps(v) - math.pi / 2))
        assert error < 1e-10

    def test_zero_amplitude(self, ds44):
        assert not np.any(plane_wave_voc(ds44, (10.0, 0.0), 0.0))

    def test_wrong_side(self, ds44):
        with pytest.raises(WrongSide):
            plane_wave_voc(ds44, (120.0, 0.0))

    def test_bad_layout(self):
        with pytest.raises(InvalidLayout):
            lattice(0, 4, 0.05)
        with pytest.raises(InvalidLayout):
            generate_synthetic(4, 4, -1.0, F0)

    def test_element_resistance(self):
        # radiated power of a unit current equals r_rad / 2
        el = ElementParams(q=1.0, r_rad=50.0)
        ds = generate_synthetic(1, 1, 0.05, F0, element=el, grid=AngleGrid.full(0.5, 2.0))
        from bdris.pattern import FieldPattern

        p = FieldPattern(ds.grid, ds.e_r_ports[0], F0).power()
        assert abs(p - 25.0) / 25.0 < 1e-3

    def test_coupled_symmetric_positive(self):
        ds = generate_synthetic(2, 2, 0.0625, F0, grid=SMALL, coupling=True)
        assert np.allclose(ds.z_r, ds.z_r.T, atol=0)
        assert np.all(np.linalg.eigvalsh(ds.z_r.real) > 0)
        assert abs(ds.z_r[0, 0] - 50) < 1e-9

    def test_internal_tier_shapes(self):
        ds = generate_synthetic(2, 1, 0.0625, F0, tier=Tier.INTERNAL_PORTS, grid=SMALL)
        assert ds.q == 12 and ds.q_per_antenna == 6
        assert list(ds.port_owner()[2:8]) == [0] * 6

    def test_structural_is_matched_field(self, ds44):
        i_m = matched_currents(np.asarray(ds44.z_r), ds44.v_oc)
        want = np.tensordot(i_m, ds44.e_r_ports, axes=1)
        error = np.max(np.abs(ds44.e_r_str - want))
        assert error < 1e-12
        assert not np.any(ds44.e_oc)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        ds = generate_synthetic(2, 2, 0.0625, F0, grid=SMALL, tier="internal_ports")
        save_dataset(ds, tmp_path / "d.json")
        back = load_dataset(tmp_path / "d.json")
        for name in ("z_r", "z_t", "v_oc", "e_r_ports", "e_t_ports", "e_oc", "e_r_str", "weights_r"):
            error = np.max(np.abs(getattr(back, name) - getattr(ds, name)))
            assert error < 1e-12
        assert back.grid == ds.grid
        assert back.tier is Tier.INTERNAL_PORTS

    def test_non_symmetric(self):
        d = to_json_dict(generate_synthetic(2, 1, 0.0625, F0, grid=SMALL))
        d["z_r"][0][1][0] += 1e-3 * 50
        with pytest.raises(ReciprocityError):
            from_json_dict(d)

    def test_grid_mismatch(self):
        d = to_json_dict(generate_synthetic(2, 1, 0.0625, F0, grid=SMALL))
        d["grid"] = AngleGrid.full(5.0, 30.0).to_dict()
        with pytest.raises(GridMismatch):
            from_json_dict(d)

    def test_missing_field(self):
        d = to_json_dict(generate_synthetic(1, 1, 0.0625, F0, grid=SMALL))
        del d["v_oc"]
        with pytest.raises(SchemaError):
            from_json_dict(d)

    def test_bad_json(self, tmp_path):
        (tmp_path / "x.json").write_text("{not json")
        with pytest.raises(SchemaError):
            load_dataset(tmp_path / "x.json")

    def test_version(self):
        d = to_json_dict(generate_synthetic(1, 1, 0.0625, F0, grid=SMALL))
        d["schema_version"] = 99
        with pytest.raises(SchemaError):
            from_json_dict(json.loads(json.dumps(d)))

    def test_patterns_csv(self, tmp_path):
        ds = generate_synthetic(1, 2, 0.0625, F0, grid=SMALL)
        write_patterns_csv(ds, "t", tmp_path / "p.csv")
        rows = (tmp_path / "p.csv").read_text().splitlines()
        assert len(rows) == 1 + 2 * SMALL.size


class TestMirror:
    def test_swaps_sides(self):
        ds = generate_synthetic(2, 2, 0.0625, F0, grid=SMALL)
        mir = mirror_dataset(ds)
        # the transmit pattern seen from the other side is the reflect pattern flipped in theta
        error = np.max(np.abs(mir.e_r_ports - ds.e_t_ports[:, ::-1, :]))
        assert error < 1e-15
        assert np.max(np.abs(mirror_dataset(mir).e_r_ports - ds.e_r_ports)) < 1e-15
