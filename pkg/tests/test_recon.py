import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wignertomo.drops import decompose, evaluate_combined
from wignertomo.gates import table_gates
from wignertomo.recon import (
    FitError,
    IllConditionedGridError,
    SamplingGrid,
    design_matrix,
    equiangular_grid,
    fit_coefficients,
    gauss_legendre_grid,
    mesh,
    phase_color,
)
from wignertomo.tensors import EMPTY, bilinear, linear


def test_equiangular_counts():
    g = equiangular_grid(13, 25)
    assert len(g) == 325
    assert len(equiangular_grid(2, 2)) == 4
    assert any(np.allclose(n, (math.pi / 12, math.pi / 12)) for n in g.nodes)
    assert g.weights is None
    with pytest.raises(ValueError):
        equiangular_grid(1, 5)


@pytest.mark.parametrize("j_max, count", [(0, 1), (1, 6), (2, 15)])
def test_gauss_legendre_counts(j_max, count):
    g = gauss_legendre_grid(j_max)
    assert len(g) == count
    assert g.weights.sum() == pytest.approx(4 * math.pi, abs=1e-12)


def test_gauss_legendre_scope():
    with pytest.raises(ValueError):
        gauss_legendre_grid(3)


@pytest.mark.parametrize("j_max", [0, 1, 2])
def test_quadrature_gram_is_identity(j_max):
    g = gauss_legendre_grid(j_max)
    y, _ = design_matrix(g, range(j_max + 1))
    gram = y.conj().T @ (g.weights[:, None] * y)
    assert np.max(np.abs(gram - np.eye(len(gram)))) < 1e-12


def test_grid_weight_validation():
    with pytest.raises(ValueError):
        SamplingGrid([[0.0, 0.0]], [1.0])
    with pytest.raises(ValueError):
        SamplingGrid(np.zeros((0, 2)))


@settings(max_examples=25)
@given(seed=st.integers(0, 10_000), grid=st.sampled_from(["gl", "eq"]))
def test_exact_recovery(seed, grid):
    g = gauss_legendre_grid(2) if grid == "gl" else equiangular_grid(13, 25)
    rng = np.random.default_rng(seed)
    c = rng.normal(size=9) + 1j * rng.normal(size=9)
    y, _ = design_matrix(g, (0, 1, 2))
    rep = fit_coefficients(y @ c, g, bilinear(1, 2), n_spins=2)
    got = [rep.coefficients.get(bilinear(1, 2), j, m) for j in (0, 1, 2) for m in range(-j, j + 1)]
    assert rep.residual_rms < 1e-10
    assert np.max(np.abs(np.array(got) - c)) < 1e-10


def test_constant_identity_samples():
    g = equiangular_grid(13, 25)
    rep = fit_coefficients(np.full(len(g), math.sqrt(1 / (2 * math.pi))), g, EMPTY)
    assert rep.coefficients.get(EMPTY, 0, 0) == pytest.approx(math.sqrt(2))


def test_rank_selective_fit():
    g = equiangular_grid(7, 13)
    y, _ = design_matrix(g, (1,))
    rep = fit_coefficients(y @ np.array([1, 2, 3]), g, linear(1))
    assert set(k.j for k in rep.coefficients.entries) == {1}
    with pytest.raises(FitError):
        fit_coefficients(np.zeros(len(g)), g, linear(1), ranks=(0,))


def test_fit_errors():
    g = gauss_legendre_grid(0)
    with pytest.raises(FitError, match="underdetermined"):
        fit_coefficients(np.zeros(1), g, linear(1))
    with pytest.raises(IllConditionedGridError, match="ill-conditioned grid"):
        fit_coefficients(np.zeros(4), equiangular_grid(2, 2), linear(1))
    with pytest.raises(FitError):
        fit_coefficients(np.zeros(3), equiangular_grid(2, 2), EMPTY)


def test_noise_error_scale():
    # per-sample complex noise of variance 2 s_j^2 sigma^2, j = 1
    g = equiangular_grid(13, 25)
    y, _ = design_matrix(g, (1,))
    rng = np.random.default_rng(0)
    sigma, s1 = 0.01, math.sqrt(3 / (4 * math.pi))
    errs = []
    for _ in range(100):
        eps = s1 * sigma * (rng.normal(size=len(g)) + 1j * rng.normal(size=len(g)))
        errs.extend(np.abs(fit_coefficients(eps, g, linear(1)).coefficients.vector(linear(1))) ** 2)
    assert math.sqrt(np.mean(errs)) < 3 * sigma / math.sqrt(325 / 4)


def test_phase_color_anchors_exact():
    got = phase_color([0, math.pi / 2, math.pi, 3 * math.pi / 2, 2 * math.pi])
    assert got.tolist() == [[255, 0, 0], [255, 255, 0], [0, 128, 0], [0, 0, 255], [255, 0, 0]]
    mid = phase_color(math.pi / 4)
    assert mid.tolist() == [255, 128, 0]


def test_identity_mesh_is_red_sphere():
    m = mesh(decompose(np.eye(2)), EMPTY, 12)
    assert np.allclose(m.radii, math.sqrt(1 / (2 * math.pi)))
    assert np.all(m.colors == [255, 0, 0])


def test_rx_2pi_mesh_is_green_sphere():
    m = mesh(decompose(table_gates()["rx:2pi"].matrix), None, 12)
    assert np.allclose(m.radii, math.sqrt(1 / (2 * math.pi)))
    assert np.all(m.colors == [0, 128, 0])


def test_not_linear_droplet_lobes():
    c = decompose([[0, 1], [1, 0]])
    m = mesh(c, linear(1), 16)
    assert np.allclose(m.radii, math.sqrt(3 / (2 * math.pi)) * np.abs(np.sin(m.theta) * np.cos(m.phi)))
    big = m.radii > 0.3
    xs = np.sign(m.vertices[big, 0])
    ph = m.phases[big]
    assert set(np.round(ph[xs > 0] / math.pi, 9)) != set(np.round(ph[xs < 0] / math.pi, 9))


def test_mesh_radius_matches_evaluate():
    c = decompose(table_gates()["hadamard"].matrix)
    m = mesh(c, None, 10)
    assert np.max(np.abs(m.radii - np.abs(evaluate_combined(c, m.theta, m.phi)))) < 1e-12
    assert m.faces.max() < len(m.vertices)
    with pytest.raises(ValueError):
        mesh(c, None, 4)


def test_mesh_exports():
    m = mesh(decompose(np.eye(2)), EMPTY, 8)
    ply = m.to_ply().splitlines()
    assert ply[0] == "ply" and f"element vertex {len(m.vertices)}" in ply
    assert len(ply) == ply.index("end_header") + 1 + len(m.vertices) + len(m.faces)
    d = m.to_dict()
    assert set(d) == {"vertices", "faces", "phases"}
