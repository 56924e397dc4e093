"""Single-qubit gates and the pulse sequences realizing their controlled versions.

Each named gate carries its 2x2 propagator and a :class:`PulseSequence` on
the two-spin system (ancilla 0, system spin 1) whose propagator equals
``controlled(U)`` up to a global phase.  Delays are expressed in units of
``1/J``.

Simultaneous pulses on different spins with different flips or phases are
written as consecutive events; they act on disjoint spins and commute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .angles import format_angle, parse_angle
from .spinop import Delay, Operator, Pulse, PulseSequence

J_HC = 214.15  # 1H-13C coupling of chloroform, Hz

PI = math.pi
X, Y, MX, MY = 0.0, PI / 2, PI, 3 * PI / 2


@dataclass(frozen=True)
class Gate:
    name: str
    matrix: Operator
    sequence: PulseSequence | None


def rx(angle: float) -> Operator:
    """``exp(-i angle I_x)``."""
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    return Operator([[c, -1j * s], [-1j * s, c]])


def phase_shift(angle: float) -> Operator:
    """``diag(1, e^{i angle})``."""
    return Operator(np.diag([1.0, np.exp(1j * angle)]))


def _seq(J: float, *steps) -> PulseSequence:
    events = []
    for step in steps:
        if isinstance(step, (int, float)):
            events.append(Delay(step / J))
        else:
            for spin, flip, phase in step:
                events.append(Pulse((spin,), flip, phase))
    return PulseSequence(tuple(events), J)


def _both(flip, phase):
    return [(0, flip, phase), (1, flip, phase)]


def _c_rx(angle: float, J: float) -> PulseSequence:
    # c[[angle]_x rotation], angle in {pi/2, pi}
    return _seq(J, [(1, PI / 2, Y)], angle / (2 * PI), [(1, PI / 2, MY)], [(1, angle / 2, X)])


def _c_phase(angle: float, J: float) -> PulseSequence:
    return _seq(
        J,
        [(0, PI, X)],
        angle / (2 * PI),
        [(0, PI, MX)],
        _both(PI / 2, Y),
        _both(angle / 2, X),
        _both(PI / 2, MY),
    )


def table_gates(J: float = J_HC) -> dict[str, Gate]:
    """The 16 gates of the demonstration set, keyed by CLI name."""
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    gates = [
        Gate("id", Operator(np.eye(2)), PulseSequence((), J)),
        Gate(
            "not",
            Operator([[0, 1], [1, 0]]),
            _seq(J, [(1, PI / 2, Y)], 0.5, _both(PI / 2, MY), [(0, PI / 2, MX), (1, PI / 2, X)], [(0, PI / 2, Y)]),
        ),
        Gate(
            "sqrtnot",
            Operator(0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]])),
            _seq(J, [(1, PI / 2, Y)], 0.25, _both(PI / 2, MY), [(0, PI / 4, MX), (1, PI / 4, X)], [(0, PI / 2, Y)]),
        ),
        Gate(
            "hadamard",
            Operator(h),
            _seq(
                J,
                [(0, PI, MX), (1, PI / 4, MY)],
                0.5,
                [(0, PI / 2, X), (1, PI / 2, Y)],
                [(0, PI / 2, Y), (1, PI / 2, X)],
                [(0, PI / 2, X), (1, PI / 4, MY)],
            ),
        ),
    ]
    for k in (1, 2, 3, 4):
        angle = k * PI / 2
        gates.append(Gate(f"phase:{format_angle(angle)}", phase_shift(angle), _c_phase(angle, J)))
    c90, c180 = _c_rx(PI / 2, J), _c_rx(PI, J)
    for k in range(1, 9):
        seq = PulseSequence((), J)
        for _ in range(k // 2):
            seq = seq + c180
        if k % 2:
            seq = seq + c90
        angle = k * PI / 2
        gates.append(Gate(f"rx:{format_angle(angle)}", rx(angle), seq))
    return {g.name: g for g in gates}


_ALIASES = {"identity": "id", "x": "not", "sqrt-not": "sqrtnot", "h": "hadamard"}


def resolve_gate(name: str, J: float = J_HC) -> Gate:
    """Look up a table gate, or build ``rx:<angle>`` / ``phase:<angle>`` on the fly.

    Off-table angles get a matrix but no pulse sequence.
    """
    key = name.strip().lower()
    key = _ALIASES.get(key, key)
    table = table_gates(J)
    if key in table:
        return table[key]
    kind, _, arg = key.partition(":")
    if kind in ("rx", "phase") and arg:
        angle = parse_angle(arg)
        canonical = f"{kind}:{format_angle(angle)}"
        if canonical in table:
            return table[canonical]
        return Gate(canonical, rx(angle) if kind == "rx" else phase_shift(angle), None)
    raise KeyError(f"unknown gate {name!r}")
