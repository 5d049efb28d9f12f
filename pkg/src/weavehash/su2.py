"""Single-qubit gate algebra on SU(2) modulo global phase.

Gates are stored as 2x2 complex matrices. Every comparison goes through the
canonical SU(2) representative, which is also available as a unit quaternion
``(q0, q1, q2, q3)`` with

    U = q0*I + i*(q1*X + q2*Y + q3*Z)

so that ``U(m, phi)`` has ``q = (cos(phi/2), m*sin(phi/2))``. For canonical
representatives the operator-norm distance ``||U - V||`` equals the Euclidean
distance of the quaternions, which is what the bulk search code relies on.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

UNITARY_TOL = 1e-12
AXIS_TOL = 1e-9
_TIE_TOL = 1e-12


class NonUnitaryError(ValueError):
    pass


def _check_unitary(m: np.ndarray, tol: float = 1e-10) -> None:
    if m.shape != (2, 2):
        raise NonUnitaryError(f"expected a 2x2 matrix, got shape {m.shape}")
    if not np.allclose(m @ m.conj().T, np.eye(2), rtol=0.0, atol=tol):
        raise NonUnitaryError("matrix is not unitary")


def _sign_flip(a: complex, b: complex) -> bool:
    if abs(a.real) < _TIE_TOL:
        # trace is (numerically) imaginary: fix the sign on the first
        # nonzero entry of the first row, argument in [0, pi)
        first = a if abs(a) > _TIE_TOL else b
        return not (0.0 <= np.angle(first) < np.pi)
    return a.real < 0


def _is_canonical(m: np.ndarray) -> bool:
    a, b = m[0, 0], m[0, 1]
    return (m[1, 0] == -b.conjugate() and m[1, 1] == a.conjugate()
            and abs(abs(a) ** 2 + abs(b) ** 2 - 1) < 1e-15 and not _sign_flip(a, b))


def _canonical_matrix(m: np.ndarray) -> np.ndarray:
    if _is_canonical(m):
        # already a canonical representative: keep it bit for bit
        return m.copy()
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    su = m / np.sqrt(det)
    # re-impose the SU(2) structure exactly: [[a, b], [-b*, a*]]
    a = 0.5 * (su[0, 0] + su[1, 1].conjugate())
    b = 0.5 * (su[0, 1] - su[1, 0].conjugate())
    norm = np.sqrt(abs(a) ** 2 + abs(b) ** 2)
    a, b = a / norm, b / norm
    if _sign_flip(a, b):
        a, b = -a, -b
    return np.array([[a, b], [-b.conjugate(), a.conjugate()]], dtype=complex)


@dataclass(frozen=True, eq=False)
class Gate:
    """A 2x2 unitary, compared up to global phase."""

    entries: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        _check_unitary(m)
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def canonical(self) -> np.ndarray:
        if "canonical" not in self._cache:
            c = _canonical_matrix(self.entries)
            c.setflags(write=False)
            self._cache["canonical"] = c
        return self._cache["canonical"]

    @property
    def quat(self) -> np.ndarray:
        """Unit quaternion of the canonical representative."""
        if "quat" not in self._cache:
            q = matrix_to_quat(self.canonical)
            q.setflags(write=False)
            self._cache["quat"] = q
        return self._cache["quat"]

    def __matmul__(self, other: "Gate") -> "Gate":
        return Gate(self.entries @ other.entries)

    def dagger(self) -> "Gate":
        return Gate(self.entries.conj().T)

    def __repr__(self):
        q = self.quat
        return f"Gate(q=[{q[0]:.6g}, {q[1]:.6g}, {q[2]:.6g}, {q[3]:.6g}])"

    @classmethod
    def identity(cls) -> "Gate":
        return cls(np.eye(2, dtype=complex))

    @classmethod
    def from_quat(cls, q) -> "Gate":
        return cls(quat_to_matrix(np.asarray(q, dtype=float)))


@dataclass(frozen=True)
class AxisAngle:
    axis: tuple[float, float, float]
    angle: float

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        if axis.shape != (3,):
            raise ValueError("axis must be a 3-vector")
        if abs(np.linalg.norm(axis) - 1.0) > AXIS_TOL:
            raise ValueError(f"axis is not a unit vector (norm {np.linalg.norm(axis)!r})")
        if not 0.0 <= self.angle < 2 * np.pi:
            raise ValueError("angle must lie in [0, 2*pi)")
        object.__setattr__(self, "axis", tuple(float(x) for x in axis))


# --- quaternion helpers (canonical SU(2) coordinates) -----------------------

def matrix_to_quat(m: np.ndarray) -> np.ndarray:
    """Quaternion of an SU(2) matrix (no canonicalization performed)."""
    return np.array([m[0, 0].real, m[0, 1].imag, m[0, 1].real, m[0, 0].imag])


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    a = complex(q[0], q[3])
    b = complex(q[2], q[1])
    return np.array([[a, b], [-b.conjugate(), a.conjugate()]], dtype=complex)


def qmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Quaternion product matching the matrix product U(a) @ U(b).

    Broadcasts over leading axes.
    """
    a0, a1, a2, a3 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    b0, b1, b2, b3 = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    # (a0 + i a.s)(b0 + i b.s) = a0 b0 - a.b + i (a0 b + b0 a - a x b).s
    return np.stack(
        [
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + b0 * a1 - (a2 * b3 - a3 * b2),
            a0 * b2 + b0 * a2 - (a3 * b1 - a1 * b3),
            a0 * b3 + b0 * a3 - (a1 * b2 - a2 * b1),
        ],
        axis=-1,
    )


def qconj(q: np.ndarray) -> np.ndarray:
    out = np.array(q, dtype=float, copy=True)
    out[..., 1:] *= -1
    return out


def qcanon(q: np.ndarray) -> np.ndarray:
    """Flip quaternions to the half-space q0 >= 0 (no tie handling)."""
    q = np.array(q, dtype=float, copy=True)
    neg = q[..., 0] < 0
    q[neg] *= -1
    return q


def qdistance(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """min(|p - q|, |p + q|), broadcasting over leading axes.

    Computed from the differences, not from the dot product, so it keeps full
    relative precision for tiny distances.
    """
    s = np.sign(np.sum(p * q, axis=-1))
    s = np.where(s == 0, 1.0, s)
    diff = p - s[..., None] * q
    return np.sqrt(np.sum(diff * diff, axis=-1))


# --- public operations ------------------------------------------------------

def from_axis_angle(a: AxisAngle) -> Gate:
    mx, my, mz = a.axis
    c, s = np.cos(a.angle / 2), np.sin(a.angle / 2)
    m = np.array(
        [
            [c + 1j * mz * s, my * s + 1j * mx * s],
            [-my * s + 1j * mx * s, c - 1j * mz * s],
        ]
    )
    return Gate(m)


def to_axis_angle(g: Gate) -> AxisAngle:
    """Axis and angle in [0, pi] of the canonical representative."""
    q = g.quat
    v = q[1:]
    sin_half = np.linalg.norm(v)
    if sin_half < 1e-15:
        return AxisAngle((0.0, 0.0, 1.0), 0.0)
    angle = 2 * np.arctan2(sin_half, q[0])
    return AxisAngle(tuple(v / sin_half), float(angle))


def canonicalize(g: Gate) -> Gate:
    return Gate(g.canonical)


def _largest_singular_value(a: np.ndarray) -> float:
    # eigenvalues of the Hermitian A A^H = [[p, c], [c*, r]] in closed form;
    # the discriminant is written as a sum of squares to avoid cancellation
    p = abs(a[0, 0]) ** 2 + abs(a[0, 1]) ** 2
    r = abs(a[1, 0]) ** 2 + abs(a[1, 1]) ** 2
    c = a[0, 0] * a[1, 0].conjugate() + a[0, 1] * a[1, 1].conjugate()
    disc = np.sqrt((p - r) ** 2 + 4 * abs(c) ** 2)
    return float(np.sqrt((p + r + disc) / 2))


def distance(u: Gate, v: Gate) -> float:
    """Operator-norm distance between the phase classes of u and v."""
    cu, cv = u.canonical, v.canonical
    return min(_largest_singular_value(cu - cv), _largest_singular_value(cu + cv))


def distance_closed_form(a: AxisAngle, b: AxisAngle) -> float:
    """Closed-form ||U(a) - U(b)|| for the two SU(2) representatives as given.

    This is the phase-class distance whenever it does not exceed sqrt(2);
    otherwise the representative of -U(b) is the closer one.
    """
    dot = float(np.dot(a.axis, b.axis))
    val = 2 - 2 * np.cos(a.angle / 2) * np.cos(b.angle / 2) - 2 * dot * np.sin(a.angle / 2) * np.sin(b.angle / 2)
    return float(np.sqrt(max(val, 0.0)))


@functools.lru_cache(maxsize=None)
def named_gate(name: str) -> Gate:
    """A few fixed targets: iY, X, Z, H (as matrices; phase is irrelevant)."""
    mats = {
        "iY": np.array([[0, 1], [-1, 0]], dtype=complex),
        "X": np.array([[0, 1], [1, 0]], dtype=complex),
        "Z": np.array([[1, 0], [0, -1]], dtype=complex),
        "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
        "I": np.eye(2, dtype=complex),
    }
    try:
        return Gate(mats[name])
    except KeyError:
        raise ValueError(f"unknown named gate {name!r}") from None


# --- text form --------------------------------------------------------------

def format_gate(g: Gate) -> str:
    vals = []
    for z in g.entries.ravel():
        vals += [z.real, z.imag]
    return " ".join(format(float(x), ".17g") for x in vals)


def parse_gate(text: str) -> Gate:
    parts = text.split()
    if len(parts) != 8:
        raise ValueError(f"expected 8 floats, got {len(parts)}")
    x = [float(p) for p in parts]
    m = np.array([complex(x[0], x[1]), complex(x[2], x[3]), complex(x[4], x[5]), complex(x[6], x[7])])
    return Gate(m.reshape(2, 2))
