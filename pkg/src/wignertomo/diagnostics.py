"""Spinor sweeps, perturbed rotations and rotation-parameter estimation for one spin."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, NamedTuple

import numpy as np

from .drops import DropletCoefficients, decompose, rank1_vector, synthesize
from .gates import phase_shift, rx
from .spinop import Operator
from .tensors import EMPTY, DropletLabel, linear

AXIS_EPS = 1e-8
_Y00 = 0.5 / math.sqrt(math.pi)


class SweepKind(str, Enum):
    ROTATION = "rotation"
    PHASE = "phase"


def _rotation_operator(psi: float, axis) -> Operator:
    n = _unit_axis(axis)
    c, s = math.cos(psi / 2), math.sin(psi / 2)
    # exp(-i psi n.I) = cos(psi/2) 1 - i sin(psi/2) n.sigma
    return Operator(
        [
            [c - 1j * s * n[2], -1j * s * (n[0] - 1j * n[1])],
            [-1j * s * (n[0] + 1j * n[1]), c + 1j * s * n[2]],
        ]
    )


def _unit_axis(axis) -> np.ndarray:
    n = np.asarray(axis, dtype=float)
    if n.shape != (3,) or not np.all(np.isfinite(n)) or abs(np.linalg.norm(n) - 1) > 1e-9:
        raise ValueError(f"rotation axis must be a unit 3-vector, got {axis!r}")
    return n


def rank1_peak(coeffs: DropletCoefficients, label: DropletLabel = linear(1)) -> tuple[np.ndarray, complex]:
    """Direction maximizing ``|f_1|`` and the value of ``f_1`` there.

    With ``f_1(r) = v.r`` and ``v = a + i b``, ``|f_1|^2 = r^T (a a^T + b b^T) r``,
    so the peak is the leading eigenvector.  Its sign is fixed so that the
    first clearly nonzero component is positive.
    """
    v = rank1_vector(coeffs, label)
    a, b = v.real, v.imag
    w, vecs = np.linalg.eigh(np.outer(a, a) + np.outer(b, b))
    if w[-1] <= 1e-30:
        return np.array([0.0, 0.0, 1.0]), 0j
    d = vecs[:, -1]
    first = d[np.argmax(np.abs(d) > 1e-9)]
    d = d if first > 0 else -d
    return d, complex(v @ d)


@dataclass(frozen=True)
class SweepRecord:
    angle: float
    coefficients: DropletCoefficients
    f0: complex
    f1_peak: tuple[np.ndarray, complex]
    droplet_sign: int


def _coeffs_for(kind: SweepKind, angle: float) -> DropletCoefficients:
    return decompose(rx(angle) if kind is SweepKind.ROTATION else phase_shift(angle))


def _relative_sign(c: DropletCoefficients, ref: DropletCoefficients) -> int:
    x, y = c.vector(), ref.vector()
    return 1 if np.real(np.vdot(y, x)) >= 0 else -1


def spinor_sweep(kind: SweepKind | str, angles: Iterable[float]) -> list[SweepRecord]:
    """Decompose ``exp(-i delta I_x)`` or ``diag(1, e^{i gamma})`` at every angle.

    ``droplet_sign`` compares the droplets with those of the same gate at
    the angle reduced to ``[0, 2 pi)``: it is -1 exactly when the gate
    picked up the spinor sign, which happens only for rotations.
    """
    kind = SweepKind(kind)
    out = []
    for angle in angles:
        c = _coeffs_for(kind, angle)
        ref = _coeffs_for(kind, math.fmod(angle, 2 * math.pi) % (2 * math.pi))
        out.append(SweepRecord(float(angle), c, c.get(EMPTY, 0, 0) * _Y00, rank1_peak(c), _relative_sign(c, ref)))
    return out


def sweep_csv(records: Iterable[SweepRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["angle", "f0_re", "f0_im", "sign"])
    for r in records:
        w.writerow([f"{r.angle:.17g}", f"{r.f0.real:.17g}", f"{r.f0.imag:.17g}", r.droplet_sign])
    return buf.getvalue()


def tilted_axis(axis, tilt: float) -> np.ndarray:
    """``axis`` rotated by ``tilt`` about z (a tilt within the xy-plane)."""
    n = _unit_axis(axis)
    c, s = math.cos(tilt), math.sin(tilt)
    return np.array([c * n[0] - s * n[1], s * n[0] + c * n[1], n[2]])


def perturbed_rotation(psi: float, axis=(1.0, 0.0, 0.0), flip_error: float = 1.0, axis_tilt: float = 0.0) -> DropletCoefficients:
    """Droplets of a rotation by ``psi * flip_error`` about ``axis`` tilted by ``axis_tilt``."""
    n = tilted_axis(axis, axis_tilt)
    return decompose(_rotation_operator(psi * flip_error, n))


class RotationEstimate(NamedTuple):
    psi: float
    axis: np.ndarray
    global_phase: float
    axis_defined: bool


def estimate_rotation_params(coeffs: DropletCoefficients, reference_axis=None) -> RotationEstimate:
    """Invert ``e^{i eta} U = cos(psi/2) 1 - i sin(psi/2) n.sigma`` for a one-spin ``U``.

    ``eta = -arg(det U)/2`` is taken in ``(-pi/2, pi/2]``, which keeps the
    sign of the identity droplet, so ``psi`` lands in ``[0, 2 pi]``.  A
    ``reference_axis`` selects the equivalent branch ``(4 pi - psi, -n)``
    when ``n`` points away from it, covering ``[0, 4 pi)``.  When
    ``|sin(psi/2)| < 1e-8`` the axis is indeterminate and reported as x.
    """
    if coeffs.n_spins != 1:
        raise ValueError("rotation parameters are defined for one spin")
    u = synthesize(coeffs)
    if not u.is_unitary(1e-9):
        raise ValueError("coefficients do not describe a unitary")
    m = u.matrix
    ang = float(np.angle(np.linalg.det(m)))
    if ang <= -math.pi + 1e-12:
        ang = math.pi
    eta = -ang / 2 + 0.0  # no negative zero
    r = np.exp(1j * eta) * m
    a = float(np.real(np.trace(r)) / 2)
    sig = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.array([[1, 0], [0, -1]])]
    b = np.array([float(np.real(1j * np.trace(r @ s) / 2)) for s in sig])
    sin_half = float(np.linalg.norm(b))
    psi = 2 * math.atan2(sin_half, a)
    if sin_half < AXIS_EPS:
        return RotationEstimate(psi, np.array([1.0, 0.0, 0.0]), eta, False)
    n = b / sin_half
    if reference_axis is not None and float(n @ np.asarray(reference_axis, dtype=float)) < 0:
        psi, n = 4 * math.pi - psi, -n
    return RotationEstimate(psi, n, eta, True)


def rotation_coefficients(psi: float, axis, global_phase: float = 0.0) -> DropletCoefficients:
    """Forward map of :func:`estimate_rotation_params`: droplets of ``e^{-i eta} R(psi, n)``."""
    return decompose(_rotation_operator(psi, axis) * complex(np.exp(-1j * global_phase)))


def droplet_distance(a: DropletCoefficients, b: DropletCoefficients, label: DropletLabel) -> float:
    """L2 distance of ``f_a - f_b`` over the sphere, via Parseval on the coefficients."""
    if a.n_spins != b.n_spins:
        raise ValueError(f"cannot compare {a.n_spins}-spin and {b.n_spins}-spin droplets")
    diff = a.vector(label) - b.vector(label)
    return float(np.linalg.norm(diff))
