"""Independent reference computations used by the tests.

Nothing here imports the package: the oracles restate the physics in the
most direct (and slowest) form so that agreement is meaningful.
"""

import math

import numpy as np


class PortCircuit:
    """Brute-force solver for multiports joined port to port.

    Every element port k carries a voltage V_k and a current I_k flowing
    into the element. Each element contributes one linear equation per port;
    each connection of two ports contributes V_a = V_b and I_a + I_b = 0.
    """

    def __init__(self):
        self.n = 0
        self.rows = []  # (coeff_V dict, coeff_I dict, rhs)
        self.links = []

    def _ports(self, k):
        idx = list(range(self.n, self.n + k))
        self.n += k
        return idx

    def impedance_block(self, z, source=None):
        """V - Z I = source."""
        z = np.asarray(z, dtype=complex)
        k = z.shape[0]
        p = self._ports(k)
        src = np.zeros(k, dtype=complex) if source is None else np.asarray(source, dtype=complex)
        for r in range(k):
            self.rows.append(({p[r]: 1.0}, {p[c]: -z[r, c] for c in range(k)}, src[r]))
        return p

    def scattering_block(self, s, z0=50.0):
        """(1 - S) V - z0 (1 + S) I = 0 for every row."""
        s = np.asarray(s, dtype=complex)
        k = s.shape[0]
        p = self._ports(k)
        eye = np.eye(k)
        for r in range(k):
            cv = {p[c]: eye[r, c] - s[r, c] for c in range(k)}
            ci = {p[c]: -z0 * (eye[r, c] + s[r, c]) for c in range(k)}
            self.rows.append((cv, ci, 0.0))
        return p

    def series_element(self, z):
        """Impedance between the two top conductors, common ground."""
        p = self._ports(2)
        self.rows.append(({}, {p[0]: 1.0, p[1]: 1.0}, 0.0))
        self.rows.append(({p[0]: 1.0, p[1]: -1.0}, {p[0]: -z}, 0.0))
        return p

    def load(self, z):
        return self.impedance_block([[z]])

    def open_port(self):
        p = self._ports(1)
        self.rows.append(({}, {p[0]: 1.0}, 0.0))
        return p

    def connect(self, a, b):
        self.links.append((a, b))

    def solve(self):
        n = self.n
        eqs = []
        rhs = []
        for cv, ci, b in self.rows:
            row = np.zeros(2 * n, dtype=complex)
            for k, v in cv.items():
                row[k] += v
            for k, v in ci.items():
                row[n + k] += v
            eqs.append(row)
            rhs.append(b)
        for a, b in self.links:
            row = np.zeros(2 * n, dtype=complex)
            row[a], row[b] = 1, -1
            eqs.append(row)
            rhs.append(0)
            row = np.zeros(2 * n, dtype=complex)
            row[n + a], row[n + b] = 1, 1
            eqs.append(row)
            rhs.append(0)
        a = np.array(eqs)
        x = np.linalg.solve(a, np.array(rhs, dtype=complex))
        return x[:n], x[n:]


def phase_shifter_s(theta):
    p = np.exp(1j * theta)
    return np.array([[0, p], [p, 0]])


def surface_circuit(z_r, z_t, v_oc, m, cells, r_loads=(), t_loads=(), phases=None, z0=50.0):
    """Full circuit of a surface.

    ``cells`` holds, per cell, either ``("series", Z)`` or ``("s", S)``.
    ``phases`` (behavioral tier) is a list of (theta_r, theta_t) ideal phase
    shifters placed on either side of each splitter. Returns the currents
    into the reflecting array ports and into the transmitting array ports.
    """
    c = PortCircuit()
    ra = c.impedance_block(z_r, v_oc)
    ta = c.impedance_block(z_t)
    for k, z in enumerate(r_loads):
        c.connect(ra[m + k], c.load(z)[0])
    for k, z in enumerate(t_loads):
        c.connect(ta[m + k], c.load(z)[0])
    for i, (kind, val) in enumerate(cells):
        left, right = ra[i], ta[i]
        if phases is not None:
            p1 = c.scattering_block(phase_shifter_s(phases[i][0]), z0)
            c.connect(left, p1[0])
            left = p1[1]
        if kind == "series":
            sp = c.series_element(val)
        else:
            sp = c.scattering_block(val, z0)
        c.connect(left, sp[0])
        left = sp[1]
        if phases is not None:
            p2 = c.scattering_block(phase_shifter_s(phases[i][1]), z0)
            c.connect(left, p2[0])
            left = p2[1]
        c.connect(left, right)
    v, i = c.solve()
    return i[ra], i[ta], v[ra], v[ta]


def uniform_array_factor(n, d_over_lambda, theta_deg, steer_deg=0.0):
    """|AF| of an n-element uniform line array (broadside normal), normalized to 1."""
    th = np.radians(np.asarray(theta_deg, dtype=float))
    psi = 2 * math.pi * d_over_lambda * (np.sin(th) - math.sin(math.radians(steer_deg)))
    num = np.sin(n * psi / 2)
    den = n * np.sin(psi / 2)
    out = np.ones_like(psi)
    ok = np.abs(den) > 1e-15
    out[ok] = np.abs(num[ok] / den[ok])
    return out


def first_sidelobe_db(n):
    """First sidelobe of a uniform n-element array, located by a dense scan in psi."""
    psi = np.linspace(2 * math.pi / n + 1e-9, 4 * math.pi / n, 200001)
    af = np.abs(np.sin(n * psi / 2) / (n * np.sin(psi / 2)))
    return 20 * math.log10(af.max())
