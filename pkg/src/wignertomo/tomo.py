"""Simulated droplet tomography of a propagator through an ancilla spin.

The propagator ``U`` of the N-spin system is imprinted on the off-diagonal
blocks of the augmented (N+1)-spin density operator by the controlled
propagator, ``rho_U = cU (2 I_0x) cU^dagger = I- (x) U + I+ (x) U^dagger``.
A droplet value is then the complex combination

    f_j^(l)(beta, alpha) = s_j (<I_0x (x) T> + i <I_0y (x) T>),
    T = R(alpha, beta) T_j0^(l) R(alpha, beta)^dagger,  s_j = sqrt((2j+1)/(4 pi)).

Two measurement routes are provided: the direct one above and a
spectrometer-like one that rotates the state inversely and reads out only
ancilla-transverse, system-longitudinal product operators.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .recon import SamplingGrid
from .spinop import (
    Gradient,
    Operator,
    OperatorLike,
    PulseSequence,
    Pulse,
    apply_sequence,
    as_operator,
    controlled,
    pauli,
    product_operator,
    pulse_matrix,
    rotation,
)
from .tensors import (
    DropletLabel,
    CartesianTerm,
    cartesian_decomposition,
    droplet_basis,
    rotated_axial,
)

THERMAL_GAMMAS = (1.0, 0.2514)
_EPS_REAL = 1e-10


class Mode(str, Enum):
    IDEAL = "ideal"
    NMR = "nmr"


class Prep(str, Enum):
    EXACT = "exact"
    SEQUENCE = "sequence"


def s_factor(j: int) -> float:
    return math.sqrt((2 * j + 1) / (4 * math.pi))


def _ancilla(axis: str, n_total: int) -> np.ndarray:
    return np.kron(pauli(axis).matrix, np.eye(2 ** (n_total - 1)))


def _real_expectation(o: np.ndarray, rho: np.ndarray) -> float:
    val = np.sum(o * rho.T)
    if abs(val.imag) > _EPS_REAL * max(1.0, abs(val)):
        raise RuntimeError(f"expectation value of a Hermitian observable is not real: {val}")
    return float(val.real)


# -- state preparation ---------------------------------------------------------


def preparation_sequence(n_total: int) -> PulseSequence:
    """``[pi/2]_x(system) - G - [pi/2]_y(I_0)``: turns ancilla z-polarization into ``I_0x``.

    The gradient dephases every coherence of the augmented system, which
    removes the system polarization flipped into the transverse plane.
    """
    system = tuple(range(1, n_total))
    return PulseSequence(
        (
            Pulse(system, math.pi / 2, 0.0),
            Gradient(tuple(range(n_total))),
            Pulse((0,), math.pi / 2, math.pi / 2),
        )
    )


def prepare_rho0(n_spins_total: int, via: Prep | str = Prep.EXACT, gammas: Sequence[float] | None = None) -> Operator:
    """Initial deviation density operator ``2 I_0x`` of the augmented system.

    ``via="sequence"`` simulates the preparation block on the thermal
    deviation ``2 sum_k gamma_k I_kz`` (``gammas`` defaults to 1 for the
    ancilla and 0.2514 for every system spin) and rescales so that the
    ``2 I_0x`` component is exactly 1.
    """
    if n_spins_total < 2:
        raise ValueError("the augmented system needs at least 2 spins")
    target = product_operator({0: "x"}, n_spins_total, scale=2)
    via = Prep(via)
    if via is Prep.EXACT:
        return target
    if gammas is None:
        gammas = (THERMAL_GAMMAS[0],) + (THERMAL_GAMMAS[1],) * (n_spins_total - 1)
    if len(gammas) != n_spins_total:
        raise ValueError(f"need {n_spins_total} polarization factors, got {len(gammas)}")
    rho = sum(
        (product_operator({k: "z"}, n_spins_total, scale=2 * g) for k, g in enumerate(gammas)),
        start=Operator(np.zeros((2**n_spins_total,) * 2)),
    )
    rho = apply_sequence(preparation_sequence(n_spins_total), rho)
    coef = np.sum(target.matrix.conj() * rho.matrix) / np.sum(np.abs(target.matrix) ** 2)
    if not coef.real > 0:
        raise RuntimeError("preparation block left no ancilla x-magnetization")
    return rho / coef.real


def imprinted_state(target, rho0: Operator) -> Operator:
    """Apply ``cU`` (an operator) or a pulse sequence realizing it to ``rho0``."""
    if isinstance(target, PulseSequence):
        return apply_sequence(target, rho0)
    cu = controlled(target)
    if cu.dim != rho0.dim:
        raise ValueError("target and initial state have different sizes")
    return cu @ rho0 @ cu.dag()


# -- single-node measurements --------------------------------------------------


def _check_rank(label: DropletLabel, j: int, n_system: int) -> None:
    if label not in {lab for lab, _ in droplet_basis(n_system)}:
        raise ValueError(f"label {label} is not part of the {n_system}-spin basis")
    if j not in label.ranks:
        raise ValueError(f"rank {j} not allowed for label {label} (ranks {label.ranks})")


def _system_size(rho_u: Operator) -> int:
    n = rho_u.n_spins - 1
    if n < 1:
        raise ValueError("rho_U must include the ancilla and at least one system spin")
    return n


def measure_point_ideal(
    rho_u: OperatorLike,
    label: DropletLabel,
    j: int,
    alpha: float,
    beta: float,
    noise: np.ndarray | None = None,
) -> complex:
    """Droplet value from ``<I_0x (x) T>`` and ``<I_0y (x) T>`` with the rotated axial tensor.

    ``noise`` (length 2) is added to the two real expectation values.
    """
    rho_u = as_operator(rho_u)
    n = _system_size(rho_u)
    _check_rank(label, j, n)
    t = rotated_axial(label, j, alpha, beta, n).matrix
    rho = rho_u.matrix
    ex = _real_expectation(np.kron(pauli("x").matrix, t), rho)
    ey = _real_expectation(np.kron(pauli("y").matrix, t), rho)
    if noise is not None:
        ex, ey = ex + noise[0], ey + noise[1]
    return s_factor(j) * complex(ex, ey)


def inverse_rotation_pulse(alpha: float, beta: float, n_system: int) -> Operator:
    """``1 (x) [beta]_{alpha - pi/2}`` on all system spins.

    Equals ``1 (x) R(alpha, beta)^dagger`` up to a z-rotation of the system,
    ``R^dagger = exp(i alpha F_z) P``, which leaves every longitudinal
    readout, and every axial tensor, unchanged.
    """
    return Operator(pulse_matrix(range(1, n_system + 1), beta, alpha - math.pi / 2, n_system + 1))


def inverse_rotation(alpha: float, beta: float, n_system: int) -> Operator:
    """``1 (x) R(alpha, beta)^dagger``."""
    return rotation(alpha, beta, range(1, n_system + 1), n_system + 1).dag()


VKey = tuple  # (label, j, term index)


def _to_z_pulses(term: CartesianTerm, n_system: int) -> np.ndarray:
    # exp(+i pi/2 I_y) takes I_x to I_z; exp(-i pi/2 I_x) takes I_y to I_z
    v = np.eye(2**n_system, dtype=complex)
    for k, axis in term.factors:
        if axis == "x":
            v = pulse_matrix([k - 1], math.pi / 2, -math.pi / 2, n_system) @ v
        elif axis == "y":
            v = pulse_matrix([k - 1], math.pi / 2, 0.0, n_system) @ v
    return v


def z_transforms(n_system: int) -> dict[VKey, Operator]:
    """Local ``pi/2`` rotations that make every Cartesian term longitudinal.

    Keys are ``(label, j, n)`` with ``n`` the index of the term in
    :func:`cartesian_decomposition`; terms that are already longitudinal are
    omitted.
    """
    out = {}
    for label, ranks in droplet_basis(n_system):
        for j in ranks:
            for idx, term in enumerate(cartesian_decomposition(label, j, n_system)):
                if not term.longitudinal:
                    out[(label, j, idx)] = Operator(_to_z_pulses(term, n_system))
    return out


def _is_longitudinal(m: np.ndarray) -> bool:
    return np.max(np.abs(m - np.diag(np.diag(m)))) <= 1e-12


def nmr_observables(
    label: DropletLabel,
    j: int,
    n_system: int,
    v_transforms: Mapping[VKey, OperatorLike] | None = None,
) -> list[tuple[float, str, np.ndarray, np.ndarray]]:
    """Per Cartesian term: ``(r, name, V~, C')`` with ``C' = V C V^dagger`` longitudinal.

    ``V~ = 1 (x) V`` acts on the inversely rotated state, and the detected
    operators are ``I_0a (x) C'``.
    """
    v_transforms = v_transforms or {}
    out = []
    for idx, term in enumerate(cartesian_decomposition(label, j, n_system)):
        c = term.operator(n_system).matrix
        v = v_transforms.get((label, j, idx))
        if v is not None:
            v = as_operator(v)
            if v.n_spins != n_system or not v.is_unitary():
                raise ValueError(f"transform for term {term.name} of {label} j={j} must be a {n_system}-spin unitary")
            c = v.matrix @ c @ v.matrix.conj().T
            vt = np.kron(np.eye(2), v.matrix)
        else:
            vt = None
        if not _is_longitudinal(c):
            raise ValueError(
                f"term {term.name} of label {label}, j={j} is not directly measurable; "
                "register a transform for it"
            )
        out.append((term.r, term.name, vt, c))
    return out


def measure_point_nmr(
    rho_u: OperatorLike,
    label: DropletLabel,
    j: int,
    alpha: float,
    beta: float,
    v_transforms: Mapping[VKey, OperatorLike] | None = None,
    pulse_rotation: bool = False,
    noise: np.ndarray | None = None,
) -> complex:
    """Droplet value from inversely rotated ``rho_U`` and longitudinal readouts.

    ``noise`` has shape ``(n_terms, 2)``: additive errors on ``<M_x>`` and
    ``<M_y>`` of each Cartesian term.
    """
    rho_u = as_operator(rho_u)
    n = _system_size(rho_u)
    _check_rank(label, j, n)
    r_inv = inverse_rotation_pulse(alpha, beta, n) if pulse_rotation else inverse_rotation(alpha, beta, n)
    rho = (r_inv @ rho_u @ r_inv.dag()).matrix
    return _nmr_combine(rho, nmr_observables(label, j, n, v_transforms), j, noise)


def _nmr_combine(rho: np.ndarray, observables, j: int, noise) -> complex:
    total = 0j
    for i, (r, _, vt, c) in enumerate(observables):
        state = rho if vt is None else vt @ rho @ vt.conj().T
        ex = _real_expectation(np.kron(pauli("x").matrix, c), state)
        ey = _real_expectation(np.kron(pauli("y").matrix, c), state)
        if noise is not None:
            ex, ey = ex + noise[i, 0], ey + noise[i, 1]
        total += r * complex(ex, ey)
    return s_factor(j) * total


# -- full tomography -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Sampled droplet values: ``values[(label, j)][i]`` belongs to ``nodes[i] = (beta, alpha)``."""

    n_spins: int
    nodes: np.ndarray
    values: Mapping[tuple[DropletLabel, int], np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float).reshape(-1, 2)
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        clean = {}
        for (label, j), v in dict(self.values).items():
            v = np.array(v, dtype=complex).ravel()
            if v.shape != (len(nodes),):
                raise ValueError(f"series {label} j={j}: {len(v)} values for {len(nodes)} nodes")
            v.setflags(write=False)
            clean[(label, int(j))] = v
        object.__setattr__(self, "values", clean)

    def series(self, label: DropletLabel, j: int) -> np.ndarray:
        return self.values[(label, j)]

    def max_abs_diff(self, other: "SampleSet") -> float:
        if set(self.values) != set(other.values) or not np.array_equal(self.nodes, other.nodes):
            raise ValueError("sample sets cover different series or nodes")
        return max((float(np.max(np.abs(v - other.values[k]))) for k, v in self.values.items()), default=0.0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", "j", "beta", "alpha", "re", "im"])
        for (label, j), vals in self.values.items():
            for (b, a), v in zip(self.nodes, vals):
                w.writerow([str(label), j, f"{b:.17g}", f"{a:.17g}", f"{v.real:.17g}", f"{v.imag:.17g}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, n_spins: int | None = None) -> "SampleSet":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise ValueError("sample CSV has no rows")
        series: dict = {}
        nodes: dict = {}
        try:
            for row in rows:
                key = (DropletLabel.parse(row["label"]), int(row["j"]))
                series.setdefault(key, []).append(complex(float(row["re"]), float(row["im"])))
                nodes.setdefault(key, []).append((float(row["beta"]), float(row["alpha"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed sample CSV: {exc}") from exc
        node_lists = list(nodes.values())
        if any(n != node_lists[0] for n in node_lists):
            raise ValueError("every series in a sample CSV must use the same nodes")
        if n_spins is None:
            n_spins = max((max(lab.spins, default=1) for lab, _ in series), default=1)
        return cls(n_spins, np.array(node_lists[0]), series)

    def to_dict(self) -> dict:
        return {
            "n_spins": self.n_spins,
            "series": [
                {
                    "label": str(label),
                    "j": j,
                    "samples": [
                        {"beta": float(b), "alpha": float(a), "re": v.real, "im": v.imag}
                        for (b, a), v in zip(self.nodes, vals)
                    ],
                }
                for (label, j), vals in self.values.items()
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data: Mapping) -> "SampleSet":
        try:
            series = {}
            nodes = None
            for s in data["series"]:
                pts = [(p["beta"], p["alpha"]) for p in s["samples"]]
                if nodes is None:
                    nodes = pts
                elif pts != nodes:
                    raise ValueError("every series must use the same nodes")
                series[(DropletLabel.parse(s["label"]), int(s["j"]))] = [
                    complex(p["re"], p["im"]) for p in s["samples"]
                ]
            return cls(int(data["n_spins"]), np.array(nodes or [], dtype=float), series)
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed sample record: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "SampleSet":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class TomoConfig:
    """Everything that defines one simulated tomography run.

    ``target`` is the system propagator ``U`` or a pulse sequence on the
    augmented system that realizes ``cU``.  ``labels=None`` means the full
    basis.  ``n_system`` is only needed for sequences whose highest spin
    index does not reveal the system size.
    """

    target: object
    grid: SamplingGrid
    labels: Sequence[DropletLabel] | None = None
    mode: Mode | str = Mode.IDEAL
    noise_sigma: float = 0.0
    seed: int = 0
    prep: Prep | str = Prep.EXACT
    v_transforms: Mapping[VKey, OperatorLike] | None = None
    pulse_rotation: bool = False
    n_system: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "prep", Prep(self.prep))
        if not (math.isfinite(self.noise_sigma) and self.noise_sigma >= 0):
            raise ValueError("noise_sigma must be finite and >= 0")
        if not isinstance(self.target, PulseSequence):
            object.__setattr__(self, "target", as_operator(self.target))
        n = self.system_size()
        known = [lab for lab, _ in droplet_basis(n)]
        labels = known if self.labels is None else list(self.labels)
        bad = [str(lab) for lab in labels if lab not in known]
        if bad:
            raise ValueError(f"labels {bad} are not part of the {n}-spin basis")
        object.__setattr__(self, "labels", tuple(labels))

    def system_size(self) -> int:
        if self.n_system is not None:
            return self.n_system
        if isinstance(self.target, PulseSequence):
            return max(self.target.max_spin(), 1)
        return self.target.n_spins


def _label_code(label: DropletLabel) -> int:
    return sum(k * 10**i for i, k in enumerate(label.spins)) + 100 * len(label.spins)


def noise_block(seed: int, label: DropletLabel, j: int, shape: tuple[int, ...], sigma: float) -> np.ndarray:
    """Gaussian errors for one ``(label, j)`` series, keyed by its indices.

    Entry ``[node, term, axis]`` depends only on ``(seed, label, j)`` and its
    position, never on evaluation order.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), _label_code(label), int(j)]))
    return sigma * rng.standard_normal(shape)


def run_tomography(config: TomoConfig) -> SampleSet:
    """Imprint the target, then sample every requested ``(label, j)`` on the grid."""
    n = config.system_size()
    rho0 = prepare_rho0(n + 1, config.prep)
    rho_u = imprinted_state(config.target, rho0)
    grid = config.grid
    values = {}
    if config.mode is Mode.IDEAL:
        for label in config.labels:
            for j in label.ranks:
                noise = noise_block(config.seed, label, j, (len(grid), 1, 2), config.noise_sigma) if config.noise_sigma else None
                values[(label, j)] = [
                    measure_point_ideal(rho_u, label, j, a, b, None if noise is None else noise[i, 0])
                    for i, (b, a) in enumerate(grid.nodes)
                ]
        return SampleSet(n, grid.nodes, values)

    obs = {
        (label, j): nmr_observables(label, j, n, config.v_transforms)
        for label in config.labels
        for j in label.ranks
    }
    noise = {
        key: noise_block(config.seed, key[0], key[1], (len(grid), len(o), 2), config.noise_sigma)
        for key, o in obs.items()
        if config.noise_sigma
    }
    values = {key: [] for key in obs}
    for i, (b, a) in enumerate(grid.nodes):
        if config.pulse_rotation:
            r_inv = inverse_rotation_pulse(a, b, n)
        else:
            r_inv = inverse_rotation(a, b, n)
        rho = (r_inv @ rho_u @ r_inv.dag()).matrix
        for key, o in obs.items():
            eps = noise[key][i] if key in noise else None
            values[key].append(_nmr_combine(rho, o, key[1], eps))
    return SampleSet(n, grid.nodes, values)
