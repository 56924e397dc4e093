import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sympy import S
from sympy.physics.quantum.cg import CG

from wignertomo.spinop import pauli, rotation
from wignertomo.tensors import (
    EMPTY,
    DropletLabel,
    TensorIndex,
    basis_indices,
    bilinear,
    cartesian_decomposition,
    clebsch_gordan,
    droplet_basis,
    linear,
    rotated_axial,
    single_spin_tensor,
    tensor_op,
)

IX, IY, IZ = (pauli(a).matrix for a in "xyz")


def _half_integers(limit):
    return [S(k) / 2 for k in range(0, 2 * limit + 1)]


def test_clebsch_gordan_matches_sympy():
    js = _half_integers(2)
    for j1, j2 in itertools.product(js, js):
        for j in [j1 + j2 - k for k in range(int(2 * min(j1, j2)) + 1)]:
            for m1 in [-j1 + k for k in range(int(2 * j1) + 1)]:
                for m2 in [-j2 + k for k in range(int(2 * j2) + 1)]:
                    m = m1 + m2
                    if abs(m) > j:
                        continue
                    ref = float(CG(j1, m1, j2, m2, j, m).doit())
                    assert abs(clebsch_gordan(float(j1), float(m1), float(j2), float(m2), float(j), float(m)) - ref) < 1e-12


def test_clebsch_gordan_selection_rules():
    assert clebsch_gordan(1, 1, 1, 0, 2, 0) == 0.0
    assert clebsch_gordan(1, 0, 1, 0, 3, 0) == 0.0


def test_single_spin_tensors():
    assert np.allclose(single_spin_tensor(0, 0).matrix, np.eye(2) / math.sqrt(2))
    assert np.allclose(single_spin_tensor(1, -1).matrix, IX - 1j * IY)
    assert np.allclose(single_spin_tensor(1, 0).matrix, math.sqrt(2) * IZ)
    assert np.allclose(single_spin_tensor(1, 1).matrix, -(IX + 1j * IY))


@pytest.mark.parametrize("n", [1, 2])
def test_basis_is_trace_orthonormal(n):
    mats = [tensor_op(i, n).matrix for i in basis_indices(n)]
    gram = np.array([[np.sum(a.conj() * b) for b in mats] for a in mats])
    assert len(mats) == 4**n
    assert np.max(np.abs(gram - np.eye(4**n))) < 1e-12


@pytest.mark.parametrize("idx", basis_indices(2))
def test_conjugation_symmetry(idx):
    t = tensor_op(idx, 2).matrix
    partner = tensor_op(TensorIndex(idx.label, idx.j, -idx.m), 2).matrix
    assert np.allclose(t.conj().T, (-1) ** idx.m * partner)


@pytest.mark.parametrize("label, j", [(lab, j) for lab, ranks in droplet_basis(2) for j in ranks])
def test_axial_tensors_hermitian_and_z_invariant(label, j):
    t = tensor_op(TensorIndex(label, j, 0), 2)
    assert t.is_hermitian()
    rz = rotation(0.7, 0.0, [0, 1], 2)
    assert (rz @ t @ rz.dag()).allclose(t)


def test_rank_transformation_under_rotation():
    # a rotated rank-j tensor stays within the rank-j span of its label
    lab = bilinear(1, 2)
    for j in (0, 1, 2):
        t = rotated_axial(lab, j, 0.4, 1.1, 2).matrix
        span = [tensor_op(TensorIndex(lab, j, m), 2).matrix for m in range(-j, j + 1)]
        coeffs = [np.sum(s.conj() * t) for s in span]
        assert np.allclose(sum(c * s for c, s in zip(coeffs, span)), t)


def test_bilinear_cartesian_forms():
    zz = np.kron(IZ, IZ)
    xx, yy = np.kron(IX, IX), np.kron(IY, IY)
    lab = bilinear(1, 2)
    assert np.allclose(tensor_op(TensorIndex(lab, 0, 0), 2).matrix, -2 / math.sqrt(3) * (xx + yy + zz))
    assert np.allclose(tensor_op(TensorIndex(lab, 2, 0), 2).matrix, 2 / math.sqrt(6) * (2 * zz - xx - yy))
    xy, yx = np.kron(IX, IY), np.kron(IY, IX)
    assert np.allclose(tensor_op(TensorIndex(lab, 1, 0), 2).matrix, math.sqrt(2) * (xy - yx))


def test_cartesian_decomposition_reconstructs():
    for n in (1, 2):
        for lab, ranks in droplet_basis(n):
            for j in ranks:
                terms = cartesian_decomposition(lab, j, n)
                total = sum(t.r * t.operator(n).matrix for t in terms)
                assert np.allclose(total, tensor_op(TensorIndex(lab, j, 0), n).matrix)


def test_cartesian_decomposition_names():
    assert [(t.name, round(t.r, 12)) for t in cartesian_decomposition(linear(1), 1, 1)] == [("I1z", round(math.sqrt(2), 12))]
    names = [t.name for t in cartesian_decomposition(bilinear(1, 2), 1, 2)]
    assert names == ["2I1xI2y", "2I1yI2x"]


def test_label_parsing_and_errors():
    assert DropletLabel.parse("{12}") == bilinear(1, 2)
    assert DropletLabel.parse("empty") == EMPTY
    assert str(linear(2)) == "{2}"
    with pytest.raises(ValueError):
        tensor_op(TensorIndex(linear(1), 2, 0), 1)
    with pytest.raises(ValueError):
        tensor_op(TensorIndex(linear(2), 1, 0), 1)
    with pytest.raises(ValueError, match="LISA"):
        droplet_basis(3)
    with pytest.raises(ValueError):
        DropletLabel.parse("{1a}")


@given(j=st.sampled_from([0, 1, 2]), alpha=st.floats(0, 2 * math.pi), beta=st.floats(0, math.pi))
def test_rotated_axial_is_hermitian(j, alpha, beta):
    assert rotated_axial(bilinear(1, 2), j, alpha, beta, 2).is_hermitian(1e-12)
