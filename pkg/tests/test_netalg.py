import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bdris import netalg
from bdris.errors import MismatchedReference, NonCascadable, SingularConversion, SingularSystem
from bdris.netalg import TwoPortNetwork, cascade, phase_shifter, s_to_z, z_to_s


def series_s(z, z0=50.0):
    # written out by hand so the tests do not lean on splitter.py
    return np.array([[z, 2 * z0], [2 * z0, z]]) / (z + 2 * z0)


def random_passive_s(rng, n=2):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    a = a + a.T
    u, sv, vh = np.linalg.svd(a)
    return u @ np.diag(0.95 * sv / sv.max()) @ vh


finite = st.floats(-1e3, 1e3, allow_nan=False)
angles = st.floats(-10.0, 10.0, allow_nan=False)


class TestConversions:
    def test_matched_network_gives_z0_diagonal(self):
        z = s_to_z(np.zeros((2, 2)), 50.0)
        error = np.max(np.abs(z - np.diag([50.0, 50.0])))
        assert error < 1e-12

    def test_identity_scattering_is_singular(self):
        with pytest.raises(SingularConversion):
            s_to_z(np.eye(2))

    def test_series_element_has_no_z_matrix(self):
        # I - S is singular for any series element: both rows are equal up to sign
        with pytest.raises(SingularConversion):
            s_to_z(TwoPortNetwork(series_s(100.0)))

    def test_z_to_s_matched_and_short(self):
        assert np.max(np.abs(z_to_s(np.diag([50.0, 50.0])))) < 1e-15
        assert np.max(np.abs(z_to_s(np.zeros((2, 2))) + np.eye(2))) < 1e-15

    def test_series_j100_from_z_domain(self):
        # T-network with the series element in the middle and a large shunt leg;
        # as the shunt leg grows the network tends to the bare series element
        zs = 100j
        zp = 1e9
        z = np.array([[zp, zp], [zp, zp]]) + np.diag([zs / 2, zs / 2])
        s = z_to_s(z)
        error = abs(s[0, 0] - (0.5 + 0.5j))
        assert error < 1e-7

    def test_round_trip(self, rng):
        for _ in range(50):
            s = random_passive_s(rng, n=3)
            back = z_to_s(s_to_z(s))
            error = np.max(np.abs(back - s))
            assert error < 1e-10

    def test_singular_error_names_matrix(self):
        with pytest.raises(SingularConversion, match="S="):
            s_to_z(np.eye(2))


class TestCascade:
    @given(angles, angles)
    def test_phase_shifters_add(self, a, b):
        net = cascade(phase_shifter(a), phase_shifter(b))
        error = abs(net.s21 - np.exp(1j * (a + b))) + abs(net.s11) + abs(net.s22)
        assert error < 1e-10

    def test_through_is_identity(self, rng):
        for _ in range(20):
            a = TwoPortNetwork(random_passive_s(rng))
            out = cascade(a, netalg.through())
            error = np.max(np.abs(out.s - a.s))
            assert error < 1e-10

    def test_eq_cell_expansion(self):
        # phase shifter, splitter, phase shifter against the entry-wise formula
        s = series_s(37.0 + 80.0j)
        for t1 in (0, np.pi / 2, np.pi, 1.5 * np.pi):
            for t2 in (0, np.pi / 2, np.pi, 1.5 * np.pi):
                net = cascade(phase_shifter(t1), TwoPortNetwork(s), phase_shifter(t2))
                want = s * np.array([[np.exp(2j * t1), np.exp(1j * (t1 + t2))],
                                     [np.exp(1j * (t1 + t2)), np.exp(2j * t2)]])
                error = np.max(np.abs(net.s - want))
                assert error < 1e-10

    def test_associative(self, rng):
        for _ in range(20):
            a, b, c = (TwoPortNetwork(random_passive_s(rng)) for _ in range(3))
            left = cascade(cascade(a, b), c)
            right = cascade(a, cascade(b, c))
            error = np.max(np.abs(left.s - right.s))
            assert error < 1e-10

    def test_reciprocity_preserved(self, rng):
        for _ in range(20):
            a, b = (TwoPortNetwork(random_passive_s(rng)) for _ in range(2))
            assert cascade(a, b).is_reciprocal(1e-12)

    def test_mismatched_reference(self):
        with pytest.raises(MismatchedReference):
            cascade(phase_shifter(0.1, 50.0), phase_shifter(0.1, 75.0))

    def test_no_through_path(self):
        with pytest.raises(NonCascadable):
            cascade(TwoPortNetwork(np.eye(2)), netalg.through())

    def test_chain_parameters_match_cascade(self, rng):
        # ABCD of a cascade equals the product of the ABCD matrices
        for _ in range(10):
            a, b = (TwoPortNetwork(random_passive_s(rng)) for _ in range(2))
            ab = cascade(a, b)

            def m(n):
                return np.array(netalg.s_to_abcd(n.s11, n.s12, n.s21, n.s22)).reshape(2, 2)

            error = np.max(np.abs(m(ab) - m(a) @ m(b)))
            assert error < 1e-9


class TestLossless:
    def test_reactive_series_is_lossless(self):
        assert netalg.is_lossless(series_s(100j), 1e-10)

    def test_resistive_series_is_lossy(self):
        s = series_s(100.0)
        err = np.max(np.abs(s.conj().T @ s - np.eye(2)))
        assert abs(err - 0.5) < 1e-12
        assert not netalg.is_lossless(s, 1e-10)

    @given(angles)
    def test_antidiagonal_phase(self, t):
        p = np.exp(1j * t)
        assert netalg.is_lossless(np.array([[0, p], [p, 0]]), 1e-10)

    @settings(max_examples=200)
    @given(finite)
    def test_lossless_columns_have_unit_norm(self, x):
        s = series_s(1j * x)
        assert netalg.is_lossless(s, 1e-10)
        error = np.max(np.abs(np.linalg.norm(s, axis=0) - 1))
        assert error < 1e-10


class TestSolve:
    def test_identity(self, rng):
        b = rng.normal(size=5) + 1j * rng.normal(size=5)
        assert np.max(np.abs(netalg.solve(np.eye(5), b) - b)) < 1e-15

    def test_diagonal(self):
        x = netalg.solve(np.diag([100.0, 100.0]), np.array([1.0, 1.0]))
        assert np.max(np.abs(x - 0.01)) < 1e-15

    def test_random_residual(self, rng):
        a = rng.normal(size=(10, 10)) + 1j * rng.normal(size=(10, 10)) + 5 * np.eye(10)
        b = rng.normal(size=10) + 1j * rng.normal(size=10)
        x = netalg.solve(a, b)
        assert np.linalg.norm(a @ x - b) <= 1e-9 * np.linalg.norm(b)

    def test_singular(self):
        with pytest.raises(SingularSystem) as exc:
            netalg.solve(np.ones((3, 3)), np.ones(3))
        assert exc.value.cond > 1e12


class TestTwoPort:
    def test_rejects_bad_reference(self):
        with pytest.raises(ValueError):
            TwoPortNetwork(np.zeros((2, 2)), z0=-50.0)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            TwoPortNetwork(np.array([[np.nan, 0], [0, 0]]))

    def test_read_only(self):
        net = phase_shifter(0.3)
        with pytest.raises(ValueError):
            net.s[0, 0] = 1.0

    def test_input_reflection_matched_load(self):
        s = series_s(100j)
        g = netalg.input_reflection(s[0, 0], s[0, 1], s[1, 0], s[1, 1], 0.0)
        assert abs(g - (0.5 + 0.5j)) < 1e-12
