"""Spherical tensor operators and the LISA droplet basis for one or two spins.

System spins are numbered 1..N as in droplet labels; in an N-spin system
operator, spin ``k`` is tensor factor ``k - 1``.

All droplet tensors are trace-orthonormal, ``tr(T_a^dagger T_b) = delta_ab``.
Bilinear tensors are Clebsch-Gordan couplings of two rank-1 single-spin
tensors (Condon-Shortley phase); the rank-1 bilinear component carries an
extra factor ``-i`` so that ``T_jm^dagger = (-1)^m T_{j,-m}`` holds for every
tensor and the axial components are Hermitian.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .spinop import Operator, pauli, rotation


@dataclass(frozen=True, order=True)
class DropletLabel:
    """Droplet label: the (sorted) set of system spins a component acts on."""

    spins: tuple[int, ...] = ()

    def __post_init__(self):
        spins = tuple(sorted(set(int(k) for k in self.spins)))
        if any(k < 1 for k in spins):
            raise ValueError("droplet label spins are numbered from 1")
        if len(spins) > 2:
            raise ValueError("labels with more than two spins are not supported")
        object.__setattr__(self, "spins", spins)

    @property
    def kind(self) -> str:
        return ("empty", "linear", "bilinear")[len(self.spins)]

    @property
    def ranks(self) -> tuple[int, ...]:
        return ((0,), (1,), (0, 1, 2))[len(self.spins)]

    def __str__(self) -> str:
        return "{" + "".join(str(k) for k in self.spins) + "}"

    @classmethod
    def parse(cls, text: str) -> "DropletLabel":
        body = text.strip()
        if body.lower() in ("empty", "id", "∅", "{∅}"):
            return cls(())
        body = body.strip("{}").replace(",", "").replace(" ", "")
        if body and not body.isdigit():
            raise ValueError(f"cannot parse droplet label {text!r}")
        return cls(tuple(int(c) for c in body))


EMPTY = DropletLabel(())


def linear(k: int) -> DropletLabel:
    return DropletLabel((k,))


def bilinear(k: int, l: int) -> DropletLabel:
    if k == l:
        raise ValueError("bilinear label needs two distinct spins")
    return DropletLabel((k, l))


class TensorIndex(NamedTuple):
    label: DropletLabel
    j: int
    m: int


def check_index(idx: TensorIndex) -> None:
    if idx.j not in idx.label.ranks:
        raise ValueError(f"rank {idx.j} not allowed for label {idx.label} (ranks {idx.label.ranks})")
    if abs(idx.m) > idx.j:
        raise ValueError(f"order {idx.m} out of range for rank {idx.j}")


def clebsch_gordan(j1: float, m1: float, j2: float, m2: float, j: float, m: float) -> float:
    """``<j1 m1 j2 m2 | j m>`` by the Racah formula (Condon-Shortley phase)."""
    if abs(m1 + m2 - m) > 1e-12 or not abs(j1 - j2) <= j <= j1 + j2:
        return 0.0
    if abs(m1) > j1 or abs(m2) > j2 or abs(m) > j:
        return 0.0
    f = math.factorial

    def ii(x):
        r = round(x)
        if abs(r - x) > 1e-9:
            raise ValueError("non-integer factorial argument")
        return int(r)

    pref = math.sqrt(
        (2 * j + 1)
        * f(ii(j1 + j2 - j)) * f(ii(j1 - j2 + j)) * f(ii(-j1 + j2 + j))
        / f(ii(j1 + j2 + j + 1))
    )
    pref *= math.sqrt(
        f(ii(j1 + m1)) * f(ii(j1 - m1)) * f(ii(j2 + m2)) * f(ii(j2 - m2)) * f(ii(j + m)) * f(ii(j - m))
    )
    total = 0.0
    kmin = max(0, ii(j2 - j - m1), ii(j1 - j + m2))
    kmax = min(ii(j1 + j2 - j), ii(j1 - m1), ii(j2 + m2))
    for k in range(kmin, kmax + 1):
        total += (-1) ** k / (
            f(k)
            * f(ii(j1 + j2 - j - k))
            * f(ii(j1 - m1 - k))
            * f(ii(j2 + m2 - k))
            * f(ii(j - j2 + m1 + k))
            * f(ii(j - j1 - m2 + k))
        )
    return pref * total


_SINGLE = {
    (0, 0): np.eye(2, dtype=complex) / math.sqrt(2),
    (1, -1): pauli("minus").matrix,
    (1, 0): math.sqrt(2) * pauli("z").matrix,
    (1, 1): -pauli("plus").matrix,
}


def single_spin_tensor(j: int, m: int) -> Operator:
    """``T_00 = 1/sqrt2``, ``T_1,-1 = I-``, ``T_10 = sqrt2 I_z``, ``T_11 = -I+``."""
    try:
        return Operator(_SINGLE[(j, m)])
    except KeyError:
        raise ValueError(f"no spin-1/2 tensor with (j, m) = ({j}, {m})") from None


def _place(factors: dict[int, np.ndarray], n_spins: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for k in range(1, n_spins + 1):
        out = np.kron(out, factors.get(k, np.eye(2)))
    return out


def _check_label_fits(label: DropletLabel, n_spins: int) -> None:
    if n_spins not in (1, 2):
        raise ValueError(f"droplet tensors support 1 or 2 system spins, got {n_spins}")
    if any(k > n_spins for k in label.spins):
        raise ValueError(f"label {label} does not fit a {n_spins}-spin system")


@lru_cache(maxsize=None)
def _tensor_matrix(label: DropletLabel, j: int, m: int, n_spins: int) -> Operator:
    q = len(label.spins)
    norm = 2.0 ** (-(n_spins - q) / 2)
    if q == 0:
        mat = _place({}, n_spins) / math.sqrt(2**n_spins)
        return Operator(mat)
    if q == 1:
        return Operator(norm * _place({label.spins[0]: _SINGLE[(1, m)]}, n_spins))
    k, l = label.spins
    mat = np.zeros((2**n_spins, 2**n_spins), dtype=complex)
    for m1 in (-1, 0, 1):
        m2 = m - m1
        if abs(m2) > 1:
            continue
        cg = clebsch_gordan(1, m1, 1, m2, j, m)
        if cg:
            mat += cg * _place({k: _SINGLE[(1, m1)], l: _SINGLE[(1, m2)]}, n_spins)
    if j == 1:
        mat *= -1j
    return Operator(norm * mat)


def tensor_op(idx: TensorIndex, n_spins: int) -> Operator:
    """Trace-normalized droplet tensor ``T_jm^(label)`` on ``n_spins`` system spins."""
    idx = TensorIndex(*idx)
    check_index(idx)
    _check_label_fits(idx.label, n_spins)
    return _tensor_matrix(idx.label, idx.j, idx.m, n_spins)


def droplet_basis(n_spins: int) -> list[tuple[DropletLabel, tuple[int, ...]]]:
    """Labels of the LISA basis and their rank sets."""
    if n_spins == 1:
        labels = [EMPTY, linear(1)]
    elif n_spins == 2:
        labels = [EMPTY, linear(1), linear(2), bilinear(1, 2)]
    else:
        raise ValueError(
            f"unsupported number of system spins {n_spins}: "
            "only 1 or 2 (LISA auxiliary labels are out of scope)"
        )
    return [(lab, lab.ranks) for lab in labels]


def basis_indices(n_spins: int) -> list[TensorIndex]:
    """Every ``(label, j, m)`` of the basis, in a fixed order."""
    return [
        TensorIndex(lab, j, m)
        for lab, ranks in droplet_basis(n_spins)
        for j in ranks
        for m in range(-j, j + 1)
    ]


def rotated_axial(label: DropletLabel, j: int, alpha: float, beta: float, n_spins: int) -> Operator:
    """``R T_j0 R^dagger`` with ``R = exp(-i alpha F_z) exp(-i beta F_y)`` over all system spins."""
    t = tensor_op(TensorIndex(label, j, 0), n_spins)
    r = rotation(alpha, beta, range(n_spins), n_spins)
    return r @ t @ r.dag()


# -- Cartesian product-operator expansion -----------------------------------------


@dataclass(frozen=True)
class CartesianTerm:
    """``r * C`` with ``C = scale * prod I_{k,axis}`` (scale ``2**(q-1)``, or 1 for the identity)."""

    r: float
    factors: tuple[tuple[int, str], ...]

    @property
    def scale(self) -> float:
        return 1.0 if not self.factors else 2.0 ** (len(self.factors) - 1)

    @property
    def longitudinal(self) -> bool:
        """True when ``C`` holds no transverse operator (directly detectable next to ``I_0a``)."""
        return all(axis == "z" for _, axis in self.factors)

    @property
    def name(self) -> str:
        if not self.factors:
            return "1"
        head = "" if self.scale == 1 else f"{self.scale:g}"
        return head + "".join(f"I{k}{a}" for k, a in self.factors)

    def operator(self, n_spins: int) -> Operator:
        """``C`` on ``n_spins`` system spins (without the coefficient ``r``)."""
        mats = {k: pauli(a).matrix for k, a in self.factors}
        if any(k > n_spins for k in mats):
            raise ValueError(f"term {self.name} does not fit {n_spins} spins")
        return Operator(self.scale * _place(mats, n_spins))


def cartesian_decomposition(label: DropletLabel, j: int, n_spins: int, tol: float = 1e-14) -> list[CartesianTerm]:
    """Expand the axial tensor ``T_j0`` in Cartesian product operators.

    Coefficients are projections ``r = tr(C T) / tr(C C)`` onto the
    product-operator basis; only nonzero terms are returned.
    """
    t = tensor_op(TensorIndex(label, j, 0), n_spins).matrix
    terms = []
    for axes in itertools.product(("1", "x", "y", "z"), repeat=n_spins):
        factors = tuple((k + 1, a) for k, a in enumerate(axes) if a != "1")
        probe = CartesianTerm(1.0, factors)
        c = probe.operator(n_spins).matrix
        r = np.sum(c * t.T) / np.sum(c * c.T)
        if abs(r) <= tol:
            continue
        if abs(r.imag) > 1e-12:
            raise RuntimeError(f"axial tensor {label} j={j} has a non-real Cartesian coefficient")
        terms.append(CartesianTerm(float(r.real), factors))
    return terms
