"""Complex linear algebra and microwave network primitives.

Everything here works with a single real reference impedance ``z0``.
Matrices are plain ``numpy`` complex arrays; two-ports are wrapped in
:class:`TwoPortNetwork` so that the reference impedance travels with the data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MismatchedReference, NonCascadable, SingularConversion, SingularSystem

Z0 = 50.0
RCOND_LIMIT = 1e-12
CASCADE_LIMIT = 1e-12


def as_matrix(a, name="matrix"):
    """Return ``a`` as a finite 2-D complex array (copy)."""
    m = np.array(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TwoPortNetwork:
    """2x2 scattering matrix with its reference impedance."""

    s: np.ndarray
    z0: float = Z0

    def __post_init__(self):
        s = as_matrix(self.s, "s")
        if s.shape != (2, 2):
            raise ValueError(f"two-port needs a 2x2 matrix, got {s.shape}")
        if not (np.isfinite(self.z0) and self.z0 > 0):
            raise ValueError(f"z0 must be real and positive, got {self.z0}")
        object.__setattr__(self, "s", _frozen(s))
        object.__setattr__(self, "z0", float(self.z0))

    @property
    def s11(self) -> complex:
        return complex(self.s[0, 0])

    @property
    def s12(self) -> complex:
        return complex(self.s[0, 1])

    @property
    def s21(self) -> complex:
        return complex(self.s[1, 0])

    @property
    def s22(self) -> complex:
        return complex(self.s[1, 1])

    def is_reciprocal(self, tol: float = 1e-12) -> bool:
        return abs(self.s12 - self.s21) <= tol * max(1.0, abs(self.s21))

    def flipped(self) -> "TwoPortNetwork":
        """Same network seen from the other side (ports swapped)."""
        return TwoPortNetwork(self.s[::-1, ::-1], self.z0)

    def __repr__(self):
        return f"TwoPortNetwork(s={np.array2string(np.asarray(self.s), precision=4)}, z0={self.z0:g})"


def phase_shifter(theta: float, z0: float = Z0) -> TwoPortNetwork:
    """Ideal matched phase shifter, S = antidiag(e^{j theta}, e^{j theta})."""
    p = np.exp(1j * theta)
    return TwoPortNetwork(np.array([[0, p], [p, 0]]), z0)


def through(z0: float = Z0) -> TwoPortNetwork:
    return phase_shifter(0.0, z0)


def _smatrix(net):
    if isinstance(net, TwoPortNetwork):
        return np.asarray(net.s), net.z0
    return as_matrix(net, "s"), None


def _rcond(a):
    sv = np.linalg.svd(a, compute_uv=False)
    if sv[0] == 0:
        return 0.0
    return sv[-1] / sv[0]


def s_to_z(net, z0: float | None = None) -> np.ndarray:
    """Impedance matrix ``z0 (I - S)^-1 (I + S)`` of an N-port.

    Raises `SingularConversion` when ``I - S`` is singular, which is the
    case for every series element (its Z-matrix does not exist).
    """
    s, net_z0 = _smatrix(net)
    if z0 is None:
        z0 = net_z0 if net_z0 is not None else Z0
    if s.shape[0] != s.shape[1]:
        raise ValueError("s_to_z needs a square matrix")
    eye = np.eye(s.shape[0])
    rc = _rcond(eye - s)
    if rc < RCOND_LIMIT:
        raise SingularConversion(
            f"(I - S) is singular (rcond={rc:.3g}); no impedance matrix exists for S=\n{s}"
        )
    return z0 * np.linalg.solve(eye - s, eye + s)


def z_to_s(z, z0: float = Z0) -> np.ndarray:
    """Scattering matrix ``(Z + z0 I)^-1 (Z - z0 I)``."""
    z = as_matrix(z, "z")
    if z.shape[0] != z.shape[1]:
        raise ValueError("z_to_s needs a square matrix")
    eye = np.eye(z.shape[0])
    rc = _rcond(z + z0 * eye)
    if rc < RCOND_LIMIT:
        raise SingularConversion(f"(Z + z0 I) is singular (rcond={rc:.3g}) for Z=\n{z}")
    return np.linalg.solve(z + z0 * eye, z - z0 * eye)


def s_to_t(net: TwoPortNetwork) -> np.ndarray:
    """Scattering transfer matrix, ``[b1, a1]^T = T [a2, b2]^T``."""
    s11, s12, s21, s22 = net.s11, net.s12, net.s21, net.s22
    if abs(s21) < CASCADE_LIMIT:
        raise NonCascadable(f"|s21| = {abs(s21):.3g} is below {CASCADE_LIMIT:g}; network cannot be chained")
    det = s11 * s22 - s12 * s21
    return np.array([[-det, s11], [-s22, 1.0]]) / s21


def t_to_s(t: np.ndarray, z0: float = Z0) -> TwoPortNetwork:
    t11, t12, t21, t22 = t[0, 0], t[0, 1], t[1, 0], t[1, 1]
    if abs(t22) < CASCADE_LIMIT:
        raise NonCascadable("transfer matrix has vanishing T22")
    det = t11 * t22 - t12 * t21
    return TwoPortNetwork(np.array([[t12, det], [1.0, -t21]]) / t22, z0)


def cascade(a: TwoPortNetwork, b: TwoPortNetwork, *more: TwoPortNetwork) -> TwoPortNetwork:
    """Chain two-ports left to right (port 2 of ``a`` feeds port 1 of ``b``)."""
    nets = (a, b) + more
    z0 = nets[0].z0
    for n in nets[1:]:
        if n.z0 != z0:
            raise MismatchedReference(f"reference impedances differ: {z0} vs {n.z0}")
    t = s_to_t(nets[0])
    for n in nets[1:]:
        t = t @ s_to_t(n)
    return t_to_s(t, z0)


def s_to_abcd(s11, s12, s21, s22, z0: float = Z0):
    """Chain parameters of two-ports given as (broadcastable) S entries.

    Returns the tuple ``(A, B, C, D)``. Inputs may be arrays, one entry per
    network, which keeps the per-cell loops in `thevenin` vectorized.
    """
    s11, s12, s21, s22 = (np.asarray(x, dtype=complex) for x in (s11, s12, s21, s22))
    if np.any(np.abs(s21) < CASCADE_LIMIT):
        raise NonCascadable("chain parameters need |s21| > 1e-12")
    k = 2 * s21
    a = ((1 + s11) * (1 - s22) + s12 * s21) / k
    b = z0 * ((1 + s11) * (1 + s22) - s12 * s21) / k
    c = ((1 - s11) * (1 - s22) - s12 * s21) / (k * z0)
    d = ((1 - s11) * (1 + s22) + s12 * s21) / k
    return a, b, c, d


def is_lossless(s, tol: float = 1e-10) -> bool:
    s = as_matrix(s, "s")
    if s.shape[0] != s.shape[1]:
        raise ValueError("is_lossless needs a square matrix")
    err = s.conj().T @ s - np.eye(s.shape[0])
    return float(np.max(np.abs(err))) <= tol


def gamma_to_z(gamma, z0: float = Z0):
    return z0 * (1 + gamma) / (1 - gamma)


def z_to_gamma(z, z0: float = Z0):
    return (z - z0) / (z + z0)


def input_reflection(s11, s12, s21, s22, gamma_load):
    """Reflection at port 1 with port 2 terminated in ``gamma_load``."""
    return s11 + s12 * s21 * gamma_load / (1 - s22 * gamma_load)


def solve(a, b) -> np.ndarray:
    """Solve ``a x = b`` with a conditioning guard.

    ``b`` may be a vector or a matrix of right-hand sides.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"solve needs a square matrix, got {a.shape}")
    if b.shape[0] != a.shape[0]:
        raise ValueError(f"right-hand side has {b.shape[0]} rows, matrix has {a.shape[0]}")
    rc = _rcond(a)
    if rc < RCOND_LIMIT:
        cond = np.inf if rc == 0 else 1.0 / rc
        raise SingularSystem(f"matrix is numerically singular (cond ~ {cond:.3g})", cond)
    return np.linalg.solve(a, b)
