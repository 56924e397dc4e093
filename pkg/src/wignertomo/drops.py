"""Operator <-> droplet-function mapping.

An operator ``A`` on one or two spins is expanded as
``A = sum c_jm^(l) T_jm^(l)`` over the trace-orthonormal droplet tensors,
and the same coefficients define the droplet functions
``f^(l)(theta, phi) = sum_j sum_m c_jm^(l) Y_jm(theta, phi)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .spinop import Operator, OperatorLike, as_operator
from .tensors import (
    DropletLabel,
    TensorIndex,
    basis_indices,
    check_index,
    droplet_basis,
    tensor_op,
)

_C1 = math.sqrt(3 / (4 * math.pi))
_C1P = math.sqrt(3 / (8 * math.pi))
_C20 = math.sqrt(5 / (16 * math.pi))
_C21 = math.sqrt(15 / (8 * math.pi))
_C22 = math.sqrt(15 / (32 * math.pi))


def spherical_harmonic(j: int, m: int, theta, phi):
    """Orthonormal ``Y_jm(theta, phi)`` for ``j <= 2`` with the Condon-Shortley phase.

    ``theta`` is the polar angle, ``phi`` the azimuth; both broadcast.
    """
    if j not in (0, 1, 2) or abs(m) > j:
        raise ValueError(f"unsupported spherical harmonic (j, m) = ({j}, {m})")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    ct, st = np.cos(theta), np.sin(theta)
    e = np.exp(1j * abs(m) * phi) if m >= 0 else np.exp(-1j * abs(m) * phi)
    if j == 0:
        val = np.full(np.broadcast(theta, phi).shape, 0.5 / math.sqrt(math.pi), dtype=complex)
    elif j == 1:
        val = _C1 * ct * e if m == 0 else -np.sign(m) * _C1P * st * e
    elif m == 0:
        val = _C20 * (3 * ct**2 - 1) * e
    elif abs(m) == 1:
        val = -np.sign(m) * _C21 * st * ct * e
    else:
        val = _C22 * st**2 * e
    val = np.asarray(val, dtype=complex)
    return complex(val) if val.ndim == 0 else val


@dataclass(frozen=True)
class DropletCoefficients:
    """Map ``(label, j, m) -> c_jm^(label)`` for an ``n_spins`` operator."""

    n_spins: int
    entries: Mapping[TensorIndex, complex] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for key, value in dict(self.entries).items():
            key = TensorIndex(*key)
            check_index(key)
            if any(k > self.n_spins for k in key.label.spins):
                raise ValueError(f"label {key.label} does not fit {self.n_spins} spins")
            clean[key] = complex(value)
        object.__setattr__(self, "entries", clean)

    def __getitem__(self, key) -> complex:
        return self.entries.get(TensorIndex(*key), 0j)

    def get(self, label: DropletLabel, j: int, m: int) -> complex:
        return self[TensorIndex(label, j, m)]

    def labels(self) -> list[DropletLabel]:
        return sorted({k.label for k in self.entries}, key=lambda lab: (len(lab.spins), lab.spins))

    def vector(self, label: DropletLabel | None = None) -> np.ndarray:
        """Coefficients in basis order, optionally restricted to one label."""
        keys = [k for k in basis_indices(self.n_spins) if label is None or k.label == label]
        return np.array([self[k] for k in keys])

    def scaled(self, factor: complex) -> "DropletCoefficients":
        return DropletCoefficients(self.n_spins, {k: factor * v for k, v in self.entries.items()})

    def allclose(self, other: "DropletCoefficients", atol: float = 1e-12) -> bool:
        if self.n_spins != other.n_spins:
            return False
        keys = set(self.entries) | set(other.entries)
        return all(abs(self[k] - other[k]) <= atol for k in keys)

    def max_abs_diff(self, other: "DropletCoefficients") -> float:
        keys = set(self.entries) | set(other.entries)
        return max((abs(self[k] - other[k]) for k in keys), default=0.0)

    def to_dict(self) -> dict:
        order = {k: i for i, k in enumerate(basis_indices(self.n_spins))}
        keys = sorted(self.entries, key=lambda k: order.get(k, len(order)))
        return {
            "n_spins": self.n_spins,
            "entries": [
                {"label": str(k.label), "j": k.j, "m": k.m, "re": self.entries[k].real, "im": self.entries[k].imag}
                for k in keys
            ],
        }

    def to_json(self, indent: int | None = 1) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, data: Mapping) -> "DropletCoefficients":
        try:
            entries = {
                TensorIndex(DropletLabel.parse(e["label"]), int(e["j"]), int(e["m"])): complex(e["re"], e.get("im", 0.0))
                for e in data["entries"]
            }
            return cls(int(data["n_spins"]), entries)
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed coefficient record: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "DropletCoefficients":
        return cls.from_dict(json.loads(text))


def decompose(a: OperatorLike) -> DropletCoefficients:
    """``c_jm^(l) = tr(T_jm^(l)^dagger A)`` for every basis tensor."""
    a = as_operator(a)
    n = a.n_spins
    if n not in (1, 2):
        raise ValueError(f"decompose supports 1 or 2 spins, got {n}")
    entries = {}
    for idx in basis_indices(n):
        t = tensor_op(idx, n).matrix
        entries[idx] = complex(np.sum(t.conj() * a.matrix))
    return DropletCoefficients(n, entries)


def synthesize(coeffs: DropletCoefficients) -> Operator:
    """``sum c_jm^(l) T_jm^(l)``; the inverse of :func:`decompose`."""
    n = coeffs.n_spins
    out = np.zeros((2**n, 2**n), dtype=complex)
    for idx, c in coeffs.entries.items():
        out += c * tensor_op(idx, n).matrix
    return Operator(out)


def evaluate(
    coeffs: DropletCoefficients,
    label: DropletLabel,
    theta,
    phi,
    ranks: Iterable[int] | None = None,
):
    """Droplet function ``f^(label)`` (or its listed rank components) at ``(theta, phi)``."""
    known = {lab for lab, _ in droplet_basis(coeffs.n_spins)}
    if label not in known:
        raise ValueError(f"label {label} is not part of the {coeffs.n_spins}-spin basis")
    use = label.ranks if ranks is None else tuple(ranks)
    total = 0j
    for j in use:
        if j not in label.ranks:
            continue
        for m in range(-j, j + 1):
            c = coeffs.get(label, j, m)
            if c != 0:
                total = total + c * spherical_harmonic(j, m, theta, phi)
    if np.ndim(total) == 0 and np.broadcast(np.asarray(theta), np.asarray(phi)).shape:
        total = np.full(np.broadcast(np.asarray(theta), np.asarray(phi)).shape, total, dtype=complex)
    return total


def evaluate_combined(coeffs: DropletCoefficients, theta, phi):
    """Sum of all droplets; meant for one spin, where ``f = f^{} + f^{1}`` stays bijective."""
    total = 0j
    for lab, _ in droplet_basis(coeffs.n_spins):
        total = total + evaluate(coeffs, lab, theta, phi)
    return total


def analytic_rotation_droplet(psi: float, axis, theta, phi):
    """Closed-form ``(f0, f1)`` of ``U = exp(-i psi n.I)`` on one spin."""
    n = np.asarray(axis, dtype=float)
    if n.shape != (3,) or abs(np.linalg.norm(n) - 1) > 1e-9:
        raise ValueError(f"rotation axis must be a unit 3-vector, got {axis!r}")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    f0 = math.sqrt(1 / (2 * math.pi)) * math.cos(psi / 2) + 0 * theta * phi
    proj = n[0] * np.sin(theta) * np.cos(phi) + n[1] * np.sin(theta) * np.sin(phi) + n[2] * np.cos(theta)
    f1 = -1j * math.sqrt(3 / (2 * math.pi)) * math.sin(psi / 2) * proj
    if np.ndim(f1) == 0:
        return complex(f0), complex(f1)
    return np.asarray(f0, dtype=complex), np.asarray(f1, dtype=complex)


def rank1_vector(coeffs: DropletCoefficients, label: DropletLabel) -> np.ndarray:
    """Complex Cartesian vector ``v`` with ``f_1^(label)(r) = v . r`` for unit ``r``."""
    cm, c0, cp = (coeffs.get(label, 1, m) for m in (-1, 0, 1))
    # Y_1,+-1 = -+ sqrt(3/8pi)(x +- iy), Y_10 = sqrt(3/4pi) z
    vx = _C1P * (cm - cp)
    vy = 1j * _C1P * (-cm - cp)
    vz = _C1 * c0
    return np.array([vx, vy, vz])
