"""Dense operator algebra for small systems of spins 1/2.

Spin 0 is the leftmost tensor factor.  In an augmented system spin 0 is the
ancilla and spins 1..N are the system of interest, so spin ``k`` is always
tensor factor ``k``.

Pulse conventions
-----------------
- ``[flip]_phase`` on a spin set S is ``exp(-i flip sum_{k in S}(cos(phase) I_kx + sin(phase) I_ky))``.
- A delay ``tau`` evolves under weak scalar coupling between spins 0 and 1:
  ``exp(-i 2 pi J tau I_0z I_1z)`` (chemical shifts set to zero).
- Sequences are written in temporal order; the propagator of
  ``A - B - C`` is ``C @ B @ A``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

import numpy as np
from scipy.linalg import expm

EPS_ALG = 1e-12
EPS_SEQ = 1e-10

_SIGMA = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class Operator:
    """Complex ``2**n x 2**n`` matrix tagged with its spin count.

    Instances are immutable; the wrapped array is read-only.
    """

    __slots__ = ("_m", "_n")

    def __init__(self, matrix, n_spins: int | None = None):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator matrix must be square, got shape {m.shape}")
        dim = m.shape[0]
        n = int(round(math.log2(dim))) if dim > 0 else -1
        if n < 1 or 2**n != dim:
            raise ValueError(f"operator dimension {dim} is not 2**n with n >= 1")
        if n_spins is not None and n_spins != n:
            raise ValueError(f"n_spins={n_spins} does not match dimension {dim}")
        m.setflags(write=False)
        self._m = m
        self._n = n

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @property
    def n_spins(self) -> int:
        return self._n

    @property
    def dim(self) -> int:
        return self._m.shape[0]

    def dag(self) -> "Operator":
        return Operator(self._m.conj().T)

    def trace(self) -> complex:
        return complex(np.trace(self._m))

    def is_hermitian(self, tol: float = EPS_ALG) -> bool:
        return bool(np.max(np.abs(self._m - self._m.conj().T)) <= tol)

    def is_unitary(self, tol: float = EPS_ALG) -> bool:
        eye = np.eye(self.dim)
        return bool(np.max(np.abs(self._m.conj().T @ self._m - eye)) <= tol)

    def allclose(self, other: "Operator", atol: float = EPS_ALG) -> bool:
        other = as_operator(other)
        if other.dim != self.dim:
            return False
        return bool(np.max(np.abs(self._m - other._m)) <= atol)

    def __matmul__(self, other):
        other = as_operator(other)
        _check_same_dim(self, other)
        return Operator(self._m @ other._m)

    def __add__(self, other):
        other = as_operator(other)
        _check_same_dim(self, other)
        return Operator(self._m + other._m)

    def __sub__(self, other):
        other = as_operator(other)
        _check_same_dim(self, other)
        return Operator(self._m - other._m)

    def __neg__(self):
        return Operator(-self._m)

    def __mul__(self, scalar):
        if isinstance(scalar, Operator):
            return NotImplemented
        return Operator(self._m * complex(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Operator(self._m / complex(scalar))

    def __repr__(self):
        return f"Operator(n_spins={self._n}, matrix=\n{np.array2string(self._m, precision=4)})"

    def to_dict(self) -> dict:
        return {
            "n_spins": self._n,
            "re": self._m.real.tolist(),
            "im": self._m.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Operator":
        try:
            re = np.asarray(data["re"], dtype=float)
            im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed operator record: {exc}") from exc
        if re.shape != im.shape:
            raise ValueError("operator 're' and 'im' shapes differ")
        return cls(re + 1j * im, n_spins=data.get("n_spins"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Operator":
        return cls.from_dict(json.loads(text))


OperatorLike = Union[Operator, np.ndarray, Sequence]


def as_operator(a: OperatorLike) -> Operator:
    return a if isinstance(a, Operator) else Operator(a)


def _check_same_dim(a: Operator, b: Operator) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def identity(n_spins: int) -> Operator:
    return Operator(np.eye(2**n_spins))


def pauli(axis: str) -> Operator:
    """Single-spin operator ``I_b = sigma_b / 2`` or ``I+ / I-``."""
    if axis in _SIGMA:
        return Operator(_SIGMA[axis] / 2)
    if axis == "plus":
        return Operator([[0, 1], [0, 0]])
    if axis == "minus":
        return Operator([[0, 0], [1, 0]])
    raise ValueError(f"unknown axis {axis!r}")


def embed(single: np.ndarray, spin: int, n_spins: int) -> np.ndarray:
    """Place a 2x2 matrix on ``spin`` with identities elsewhere."""
    if not 0 <= spin < n_spins:
        raise ValueError(f"spin index {spin} out of range for {n_spins} spins")
    out = np.ones((1, 1), dtype=complex)
    for k in range(n_spins):
        out = np.kron(out, single if k == spin else np.eye(2))
    return out


def product_operator(factors: Mapping[int, str], n_spins: int, scale: complex = 1.0) -> Operator:
    """``scale * prod_k I_{k, axis_k}`` with identity on unlisted spins.

    ``factors`` maps spin index to one of x, y, z, plus, minus.  Use e.g.
    ``scale=2`` for ``2 I_0x I_1z``.
    """
    if isinstance(factors, Mapping):
        items = list(factors.items())
    else:
        items = list(factors)
    seen = set()
    for spin, _ in items:
        if spin in seen:
            raise ValueError(f"duplicate spin index {spin}")
        seen.add(spin)
        if not 0 <= spin < n_spins:
            raise ValueError(f"spin index {spin} out of range for {n_spins} spins")
    lookup = dict(items)
    out = np.ones((1, 1), dtype=complex)
    for k in range(n_spins):
        out = np.kron(out, pauli(lookup[k]).matrix if k in lookup else np.eye(2))
    return Operator(complex(scale) * out)


def total_spin(axis: str, spins: Iterable[int], n_spins: int) -> Operator:
    """``F_axis = sum_{k in spins} I_{k,axis}``."""
    m = np.zeros((2**n_spins, 2**n_spins), dtype=complex)
    for k in spins:
        m += embed(pauli(axis).matrix, k, n_spins)
    return Operator(m)


def _rz(angle: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])


def _ry(angle: float) -> np.ndarray:
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rotation(alpha: float, beta: float, spins: Iterable[int], n_spins: int) -> Operator:
    """``exp(-i alpha F_z) exp(-i beta F_y)`` with ``F`` summed over ``spins``.

    Rotation about y by ``beta`` followed by rotation about z by ``alpha``.
    The single-spin terms commute, so this is a Kronecker product of 2x2
    rotations.
    """
    spins = set(spins)
    if not spins:
        raise ValueError("rotation needs at least one spin")
    if not all(0 <= k < n_spins for k in spins):
        raise ValueError(f"spin indices {sorted(spins)} out of range for {n_spins} spins")
    single = _rz(alpha) @ _ry(beta)
    out = np.ones((1, 1), dtype=complex)
    for k in range(n_spins):
        out = np.kron(out, single if k in spins else np.eye(2))
    return Operator(out)


def pulse_matrix(spins: Iterable[int], flip: float, phase: float, n_spins: int) -> np.ndarray:
    """``exp(-i flip (cos(phase) F_x + sin(phase) F_y))`` over ``spins``."""
    c, s = math.cos(flip / 2), math.sin(flip / 2)
    # exp(-i flip n.I) = cos(flip/2) 1 - i sin(flip/2) (n.sigma), n in the xy-plane
    single = np.array(
        [[c, -1j * s * np.exp(-1j * phase)], [-1j * s * np.exp(1j * phase), c]],
        dtype=complex,
    )
    spins = set(spins)
    out = np.ones((1, 1), dtype=complex)
    for k in range(n_spins):
        out = np.kron(out, single if k in spins else np.eye(2))
    return out


# -- pulse sequences ---------------------------------------------------------


@dataclass(frozen=True)
class Pulse:
    spins: tuple[int, ...]
    flip: float
    phase: float

    def __post_init__(self):
        object.__setattr__(self, "spins", tuple(sorted(set(self.spins))))
        if not self.spins:
            raise ValueError("pulse needs at least one spin")
        if not (math.isfinite(self.flip) and math.isfinite(self.phase)):
            raise ValueError("pulse flip and phase must be finite")


@dataclass(frozen=True)
class Delay:
    duration: float

    def __post_init__(self):
        if not (math.isfinite(self.duration) and self.duration >= 0):
            raise ValueError(f"delay duration must be finite and >= 0, got {self.duration}")


@dataclass(frozen=True)
class Gradient:
    spins: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "spins", tuple(sorted(set(self.spins))))


PulseEvent = Union[Pulse, Delay, Gradient]


@dataclass(frozen=True)
class PulseSequence:
    """Events in temporal order plus the 0-1 scalar coupling ``J`` in Hz.

    An empty event list is allowed and realizes the identity (the "Id" row
    of the gate table has no sequence).
    """

    events: tuple[PulseEvent, ...] = ()
    J: float = 214.15

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if any(isinstance(e, Delay) for e in self.events) and not self.J > 0:
            raise ValueError("coupling J must be > 0 when the sequence has delays")

    def __add__(self, other: "PulseSequence") -> "PulseSequence":
        if self.J != other.J:
            raise ValueError("cannot concatenate sequences with different J")
        return PulseSequence(self.events + other.events, self.J)

    def max_spin(self) -> int:
        spins = [k for e in self.events if not isinstance(e, Delay) for k in e.spins]
        if any(isinstance(e, Delay) for e in self.events):
            spins.append(1)
        return max(spins, default=-1)

    def to_list(self) -> list[dict]:
        out = []
        for e in self.events:
            if isinstance(e, Pulse):
                out.append({"type": "pulse", "spins": list(e.spins), "flip": e.flip, "phase": e.phase})
            elif isinstance(e, Delay):
                out.append({"type": "delay", "duration": e.duration})
            else:
                out.append({"type": "gradient", "spins": list(e.spins)})
        return out

    def to_json(self) -> str:
        return json.dumps({"J": self.J, "events": self.to_list()}, indent=1)

    @classmethod
    def from_obj(cls, data, J: float | None = None) -> "PulseSequence":
        """Build from a JSON list of events or ``{"J": ..., "events": [...]}``."""
        if isinstance(data, Mapping):
            events = data.get("events")
            if events is None:
                raise ValueError("sequence object needs an 'events' list")
            J = data.get("J", J)
        else:
            events = data
        if not isinstance(events, list):
            raise ValueError("sequence events must be a list")
        parsed = []
        for i, ev in enumerate(events):
            try:
                kind = ev["type"]
                if kind == "pulse":
                    parsed.append(Pulse(tuple(ev["spins"]), float(ev["flip"]), float(ev.get("phase", 0.0))))
                elif kind == "delay":
                    parsed.append(Delay(float(ev["duration"])))
                elif kind == "gradient":
                    parsed.append(Gradient(tuple(ev["spins"])))
                else:
                    raise ValueError(f"unknown event type {kind!r}")
            except (KeyError, TypeError) as exc:
                raise ValueError(f"malformed event #{i}: {ev!r}") from exc
        return cls(tuple(parsed), 214.15 if J is None else float(J))

    @classmethod
    def from_json(cls, text: str, J: float | None = None) -> "PulseSequence":
        return cls.from_obj(json.loads(text), J=J)


def coupling_propagator(J: float, tau: float, n_spins: int) -> Operator:
    """``exp(-i 2 pi J tau I_0z I_1z)``; diagonal, built elementwise."""
    if n_spins < 2:
        raise ValueError("J evolution needs at least 2 spins")
    zz = np.diag(embed(pauli("z").matrix, 0, n_spins) @ embed(pauli("z").matrix, 1, n_spins)).real
    return Operator(np.diag(np.exp(-2j * math.pi * J * tau * zz)))


def sequence_propagator(seq: PulseSequence, n_spins: int) -> Operator:
    """Product of the event propagators in temporal order."""
    u = np.eye(2**n_spins, dtype=complex)
    for ev in seq.events:
        if isinstance(ev, Gradient):
            raise ValueError("gradient is not unitary; apply gradient_filter to a state instead")
        if isinstance(ev, Pulse):
            if max(ev.spins) >= n_spins or min(ev.spins) < 0:
                raise ValueError(f"pulse spins {ev.spins} out of range for {n_spins} spins")
            step = pulse_matrix(ev.spins, ev.flip, ev.phase, n_spins)
        else:
            step = coupling_propagator(seq.J, ev.duration, n_spins).matrix
        u = step @ u
    return Operator(u)


def apply_sequence(seq: PulseSequence, rho: Operator) -> Operator:
    """Evolve a density operator through a sequence, gradients included."""
    rho = as_operator(rho)
    n = rho.n_spins
    for ev in seq.events:
        if isinstance(ev, Gradient):
            rho = gradient_filter(rho, ev.spins)
        else:
            u = sequence_propagator(PulseSequence((ev,), seq.J), n)
            rho = u @ rho @ u.dag()
    return rho


# -- controlled propagators and imprinting --------------------------------------


def controlled(u: OperatorLike) -> Operator:
    """``block-diag(1, U)``: identity for ancilla up, ``U`` for ancilla down."""
    u = as_operator(u)
    if not u.is_unitary():
        raise ValueError("controlled() needs a unitary operator")
    d = u.dim
    m = np.zeros((2 * d, 2 * d), dtype=complex)
    m[:d, :d] = np.eye(d)
    m[d:, d:] = u.matrix
    return Operator(m)


def imprint(u: OperatorLike) -> Operator:
    """Deviation density operator ``cU (2 I_0x) cU^dagger = I- (x) U + I+ (x) U^dagger``."""
    u = as_operator(u)
    if not u.is_unitary():
        raise ValueError("imprint() needs a unitary operator")
    cu = controlled(u)
    rho0 = product_operator({0: "x"}, u.n_spins + 1, scale=2)
    rho = cu @ rho0 @ cu.dag()
    block = np.kron(pauli("minus").matrix, u.matrix) + np.kron(pauli("plus").matrix, u.matrix.conj().T)
    if np.max(np.abs(rho.matrix - block)) > EPS_ALG:
        raise RuntimeError("imprinted density operator does not match its block form")
    return rho


def gradient_filter(rho: OperatorLike, spins: Iterable[int]) -> Operator:
    """Keep only coherence-order-zero terms with respect to ``spins``.

    Equivalent to averaging ``exp(-i phi F_z) rho exp(i phi F_z)`` over a
    uniform ``phi``, with ``F_z`` summed over ``spins``: an element survives
    iff the summed magnetic quantum numbers of its row and column agree.
    """
    rho = as_operator(rho)
    spins = list(spins)
    n = rho.n_spins
    if any(not 0 <= k < n for k in spins):
        raise ValueError(f"spin indices {spins} out of range for {n} spins")
    fz = np.zeros(2**n)
    for k in spins:
        fz += np.diag(embed(pauli("z").matrix, k, n)).real
    keep = np.isclose(fz[:, None], fz[None, :])
    return Operator(np.where(keep, rho.matrix, 0))


def expectation(o: OperatorLike, rho: OperatorLike) -> complex:
    """``tr(O rho)``."""
    o, rho = as_operator(o), as_operator(rho)
    _check_same_dim(o, rho)
    # tr(AB) = sum_ij A_ij B_ji
    return complex(np.sum(o.matrix * rho.matrix.T))


def fidelity_up_to_phase(a: OperatorLike, b: OperatorLike) -> float:
    """``|tr(A^dagger B)| / 2**n``; equals 1 iff ``A = e^{i eta} B`` for unitaries."""
    a, b = as_operator(a), as_operator(b)
    _check_same_dim(a, b)
    return float(abs(np.sum(a.matrix.conj() * b.matrix)) / a.dim)


def propagator(hamiltonian: OperatorLike, t: float = 1.0) -> Operator:
    """``exp(-i H t)`` via scipy's Pade expm."""
    h = as_operator(hamiltonian)
    return Operator(expm(-1j * t * h.matrix))
