"""Sphere sampling grids, coefficient recovery, and droplet meshes."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

import numpy as np

from .drops import DropletCoefficients, evaluate, spherical_harmonic
from .tensors import DropletLabel, TensorIndex, droplet_basis

if TYPE_CHECKING:
    from .tomo import SampleSet

MAX_CONDITION = 1e8


class FitError(ValueError):
    pass


class IllConditionedGridError(FitError):
    pass


@dataclass(frozen=True, eq=False)
class SamplingGrid:
    """Nodes ``(beta, alpha)`` (polar, azimuth) with optional quadrature weights."""

    nodes: np.ndarray
    weights: np.ndarray | None = None
    kind: str = "equiangular"

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float).reshape(-1, 2)
        if len(nodes) == 0:
            raise ValueError("grid needs at least one node")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        if self.weights is not None:
            w = np.array(self.weights, dtype=float)
            if w.shape != (len(nodes),):
                raise ValueError("one weight per node required")
            if abs(w.sum() - 4 * math.pi) > 1e-9:
                raise ValueError(f"quadrature weights must sum to 4 pi, got {w.sum()}")
            w.setflags(write=False)
            object.__setattr__(self, "weights", w)

    @property
    def beta(self) -> np.ndarray:
        return self.nodes[:, 0]

    @property
    def alpha(self) -> np.ndarray:
        return self.nodes[:, 1]

    def __len__(self) -> int:
        return len(self.nodes)


def equiangular_grid(n_beta: int, n_alpha: int) -> SamplingGrid:
    """Equidistant ``beta in [0, pi]`` and ``alpha in [0, 2 pi]``, endpoints included.

    The alpha = 2 pi column duplicates alpha = 0 and the poles repeat along
    alpha; ``equiangular_grid(13, 25)`` is the 325-point pi/12 scan.
    """
    if n_beta < 2 or n_alpha < 2:
        raise ValueError("equiangular grid needs n_beta >= 2 and n_alpha >= 2")
    betas = np.pi * np.arange(n_beta) / (n_beta - 1)
    alphas = 2 * np.pi * np.arange(n_alpha) / (n_alpha - 1)
    b, a = np.meshgrid(betas, alphas, indexing="ij")
    return SamplingGrid(np.column_stack([b.ravel(), a.ravel()]), None, "equiangular")


def gauss_legendre_grid(j_max: int) -> SamplingGrid:
    """``(j_max+1)`` Gauss-Legendre colatitudes times ``(2 j_max + 1)`` azimuths.

    Product weights integrate every band-limited product ``Y_jm conj(Y_j'm')``
    with ``j, j' <= j_max`` exactly.
    """
    if not 0 <= j_max <= 2:
        raise ValueError("gauss_legendre_grid supports 0 <= j_max <= 2")
    x, wx = np.polynomial.legendre.leggauss(j_max + 1)
    n_az = 2 * j_max + 1
    alphas = 2 * np.pi * np.arange(n_az) / n_az
    betas = np.arccos(x)
    b, a = np.meshgrid(betas, alphas, indexing="ij")
    w = np.repeat(wx * (2 * np.pi / n_az), n_az)
    return SamplingGrid(np.column_stack([b.ravel(), a.ravel()]), w, "gauss-legendre")


def design_matrix(grid: SamplingGrid, ranks: Iterable[int]) -> tuple[np.ndarray, list[tuple[int, int]]]:
    cols = [(j, m) for j in sorted(set(ranks)) for m in range(-j, j + 1)]
    mat = np.column_stack([spherical_harmonic(j, m, grid.beta, grid.alpha) for j, m in cols])
    return mat, cols


@dataclass(frozen=True)
class FitReport:
    coefficients: DropletCoefficients
    residual_rms: float
    condition_number: float


def fit_coefficients(
    values,
    grid: SamplingGrid,
    label: DropletLabel,
    ranks: Iterable[int] | None = None,
    n_spins: int | None = None,
) -> FitReport:
    """Recover ``c_jm^(label)`` for the given ranks from samples on ``grid``.

    Weighted grids use the quadrature projection
    ``c_jm = sum_i w_i f_i conj(Y_jm(node_i))``; weightless grids use a
    minimum-norm least-squares solve of the design matrix.
    """
    values = np.asarray(values, dtype=complex).ravel()
    if len(values) != len(grid):
        raise FitError(f"{len(values)} samples for a {len(grid)}-node grid")
    ranks = tuple(label.ranks if ranks is None else ranks)
    bad = [j for j in ranks if j not in label.ranks]
    if bad:
        raise FitError(f"ranks {bad} do not occur in label {label}")
    if n_spins is None:
        n_spins = max(label.spins, default=1)
    mat, cols = design_matrix(grid, ranks)
    if len(grid) < len(cols):
        raise FitError(f"underdetermined fit: {len(grid)} nodes for {len(cols)} coefficients")
    if grid.weights is not None:
        sw = np.sqrt(grid.weights)
        cond = float(np.linalg.cond(sw[:, None] * mat))
    else:
        cond = float(np.linalg.cond(mat))
    if not cond <= MAX_CONDITION:
        raise IllConditionedGridError(f"ill-conditioned grid: condition number {cond:.3g}")
    if grid.weights is not None:
        c = mat.conj().T @ (grid.weights * values)
    else:
        c, *_ = np.linalg.lstsq(mat, values, rcond=None)
    resid = values - mat @ c
    rms = float(np.sqrt(np.mean(np.abs(resid) ** 2)))
    entries = {TensorIndex(label, j, m): complex(ci) for (j, m), ci in zip(cols, c)}
    return FitReport(DropletCoefficients(n_spins, entries), rms, cond)


def fit_sample_set(samples: "SampleSet") -> tuple[DropletCoefficients, dict]:
    """Fit every ``(label, j)`` series of a sample set with its own rank.

    Returns the merged coefficients and the per-series :class:`FitReport`.
    """
    grid = SamplingGrid(samples.nodes)
    entries = {}
    reports = {}
    for (label, j), vals in samples.values.items():
        rep = fit_coefficients(vals, grid, label, ranks=(j,), n_spins=samples.n_spins)
        reports[(label, j)] = rep
        entries.update(rep.coefficients.entries)
    return DropletCoefficients(samples.n_spins, entries), reports


# -- meshes ------------------------------------------------------------------

_ANCHORS = np.array(
    [
        [255, 0, 0],  # 0: +1
        [255, 255, 0],  # pi/2: +i
        [0, 128, 0],  # pi: -1
        [0, 0, 255],  # 3pi/2: -i
        [255, 0, 0],
    ],
    dtype=float,
)


def phase_color(phase) -> np.ndarray:
    """RGB (uint8) for a phase, piecewise linear between the four anchors."""
    p = np.mod(np.asarray(phase, dtype=float), 2 * np.pi)
    pos = p / (np.pi / 2)
    lo = np.minimum(np.floor(pos).astype(int), 3)
    frac = (pos - lo)[..., None]
    rgb = (1 - frac) * _ANCHORS[lo] + frac * _ANCHORS[lo + 1]
    return np.clip(np.rint(rgb), 0, 255).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class DropletMesh:
    """Polar surface ``r = |f(theta, phi)|`` colored by ``arg f``."""

    vertices: np.ndarray
    faces: np.ndarray
    values: np.ndarray
    theta: np.ndarray
    phi: np.ndarray

    @property
    def radii(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def phases(self) -> np.ndarray:
        return np.mod(np.angle(self.values), 2 * np.pi)

    @property
    def colors(self) -> np.ndarray:
        return phase_color(self.phases)

    def to_ply(self) -> str:
        lines = [
            "ply",
            "format ascii 1.0",
            f"element vertex {len(self.vertices)}",
            "property float x",
            "property float y",
            "property float z",
            "property uchar red",
            "property uchar green",
            "property uchar blue",
            f"element face {len(self.faces)}",
            "property list uchar int vertex_indices",
            "end_header",
        ]
        for (x, y, z), (r, g, b) in zip(self.vertices, self.colors):
            lines.append(f"{x:.9g} {y:.9g} {z:.9g} {r} {g} {b}")
        for a, b, c in self.faces:
            lines.append(f"3 {a} {b} {c}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "vertices": self.vertices.tolist(),
            "faces": self.faces.tolist(),
            "phases": self.phases.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _lattice_faces(n_theta: int, n_phi: int) -> np.ndarray:
    faces = []
    for i in range(n_theta - 1):
        for k in range(n_phi):
            a = i * n_phi + k
            b = i * n_phi + (k + 1) % n_phi
            c = a + n_phi
            d = b + n_phi
            if i + 1 < n_theta - 1:
                faces.append((a, c, d))
            if i > 0:
                faces.append((a, d, b))
    return np.array(faces, dtype=np.int64)


def mesh(source, label: DropletLabel | None = None, resolution: int = 32) -> DropletMesh:
    """Triangulated droplet surface on a ``resolution x 2*resolution`` lattice.

    ``source`` is a :class:`DropletCoefficients` or a sample set (fitted
    first).  ``label=None`` draws the sum of all droplets, the usual view for
    a single spin.
    """
    if resolution < 8:
        raise ValueError("mesh resolution must be >= 8")
    if isinstance(source, DropletCoefficients):
        coeffs = source
    else:
        coeffs, _ = fit_sample_set(source)
    theta = np.pi * np.arange(resolution) / (resolution - 1)
    phi = 2 * np.pi * np.arange(2 * resolution) / (2 * resolution)
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    tt, pp = tt.ravel(), pp.ravel()
    labels = [lab for lab, _ in droplet_basis(coeffs.n_spins)] if label is None else [label]
    vals = np.zeros(tt.shape, dtype=complex)
    for lab in labels:
        vals = vals + evaluate(coeffs, lab, tt, pp)
    r = np.abs(vals)
    verts = np.column_stack([r * np.sin(tt) * np.cos(pp), r * np.sin(tt) * np.sin(pp), r * np.cos(tt)])
    return DropletMesh(verts, _lattice_faces(resolution, 2 * resolution), vals, tt, pp)
