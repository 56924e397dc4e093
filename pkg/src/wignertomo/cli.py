"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from .angles import parse_angle, parse_angle_list
from .drops import DropletCoefficients, decompose, synthesize
from .gates import J_HC, resolve_gate, table_gates
from .recon import (
    FitError,
    IllConditionedGridError,
    SamplingGrid,
    equiangular_grid,
    fit_sample_set,
    gauss_legendre_grid,
    mesh,
)
from .spinop import Operator, PulseSequence
from .tensors import DropletLabel, linear
from .tomo import Mode, TomoConfig, run_tomography, z_transforms


class InputError(Exception):
    pass


def _read_text(source: str) -> str:
    if source == "-":
        return sys.stdin.read()
    try:
        return Path(source).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {source}: {exc}") from exc


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _load_operator(args) -> tuple[Operator, str]:
    if getattr(args, "gate", None):
        g = resolve_gate(args.gate, args.J)
        return g.matrix, g.name
    if getattr(args, "input", None):
        return Operator.from_json(_read_text(args.input)), args.input
    raise InputError("give --gate or --input")


def label_slug(label: DropletLabel) -> str:
    return "".join(str(k) for k in label.spins) or "empty"


def parse_grid(spec: str) -> SamplingGrid:
    """``13x25`` (equiangular), ``gl:2`` (Gauss-Legendre) or ``step:pi/12``."""
    text = spec.strip().lower()
    if text.startswith(("gl:", "gauss:")):
        return gauss_legendre_grid(int(text.split(":", 1)[1]))
    if text.startswith("step:"):
        step = parse_angle(text.split(":", 1)[1])
        nb, na = math.pi / step + 1, 2 * math.pi / step + 1
        if abs(nb - round(nb)) > 1e-9:
            raise ValueError(f"step {spec!r} does not divide pi")
        return equiangular_grid(int(round(nb)), int(round(na)))
    nb, sep, na = text.partition("x")
    if not sep:
        raise ValueError(f"cannot parse grid {spec!r}")
    return equiangular_grid(int(nb), int(na))


def parse_axis(text: str) -> np.ndarray:
    named = {"x": (1, 0, 0), "y": (0, 1, 0), "z": (0, 0, 1)}
    if text.strip().lower() in named:
        return np.array(named[text.strip().lower()], dtype=float)
    parts = [parse_angle(p) for p in text.split(",")]
    if len(parts) != 3:
        raise ValueError(f"axis needs three components, got {text!r}")
    return np.array(parts)


# -- subcommands -------------------------------------------------------------


def cmd_decompose(args) -> int:
    op, _ = _load_operator(args)
    _write(decompose(op).to_json() + "\n", args.out)
    return 0


def cmd_synthesize(args) -> int:
    coeffs = DropletCoefficients.from_json(_read_text(args.input))
    _write(synthesize(coeffs).to_json() + "\n", args.out)
    return 0


def _tomo_target(args):
    if args.sequence:
        return PulseSequence.from_json(_read_text(args.sequence)), None, args.sequence
    op, name = _load_operator(args)
    return op, op, name


def cmd_tomo(args) -> int:
    target, exact, name = _tomo_target(args)
    labels = [DropletLabel.parse(s) for s in args.labels.split(",")] if args.labels else None
    cfg = TomoConfig(
        target=target,
        grid=parse_grid(args.grid),
        labels=labels,
        mode=args.mode,
        noise_sigma=args.noise,
        seed=args.seed,
        prep=args.prep,
        pulse_rotation=args.pulse_rotation,
        n_system=args.n_system,
    )
    if cfg.mode is Mode.NMR and cfg.system_size() > 1:
        cfg = TomoConfig(**{**cfg.__dict__, "v_transforms": z_transforms(cfg.system_size())})
    samples = run_tomography(cfg)
    coeffs, reports = fit_sample_set(samples)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "samples.csv").write_text(samples.to_csv())
    report = {
        "target": name,
        "mode": cfg.mode.value,
        "grid": args.grid,
        "nodes": len(cfg.grid),
        "noise_sigma": cfg.noise_sigma,
        "seed": cfg.seed,
        "coefficients": coeffs.to_dict(),
        "fits": [
            {"label": str(lab), "j": j, "residual_rms": r.residual_rms, "condition_number": r.condition_number}
            for (lab, j), r in reports.items()
        ],
    }
    if exact is not None:
        ref = decompose(exact)
        keys = set(coeffs.entries)
        report["max_coefficient_error"] = max(abs(coeffs[k] - ref[k]) for k in keys)
    (out / "fit.json").write_text(json.dumps(report, indent=1) + "\n")
    written = ["samples.csv", "fit.json"]
    if args.mesh:
        for lab in cfg.labels:
            fname = f"mesh_{label_slug(lab)}.ply"
            (out / fname).write_text(mesh(coeffs, lab, args.resolution).to_ply())
            written.append(fname)
        if samples.n_spins == 1:
            (out / "mesh_combined.ply").write_text(mesh(coeffs, None, args.resolution).to_ply())
            written.append("mesh_combined.ply")
    worst = max(r.residual_rms for r in reports.values())
    print(f"{name}: {len(cfg.grid)} nodes, {len(reports)} series, max residual {worst:.3g}; wrote {', '.join(written)}")
    return 0


def cmd_spinor(args) -> int:
    angles = parse_angle_list(args.angles)
    _write(diag.sweep_csv(diag.spinor_sweep(args.kind, angles)), args.out)
    return 0


def cmd_errors(args) -> int:
    axis = parse_axis(args.axis)
    ideal = diag.perturbed_rotation(args.psi, axis)
    coeffs = diag.perturbed_rotation(args.psi, axis, args.flip, args.tilt)
    est = diag.estimate_rotation_params(coeffs, reference_axis=diag.tilted_axis(axis, args.tilt))
    f0 = coeffs.get(DropletLabel(()), 0, 0).real / math.sqrt(4 * math.pi)
    peak_dir, peak_val = diag.rank1_peak(coeffs)
    result = {
        "psi": est.psi,
        "axis": [float(x) + 0.0 for x in est.axis],
        "axis_defined": est.axis_defined,
        "global_phase": est.global_phase,
        "f0": f0,
        "f1_peak_direction": [float(x) + 0.0 for x in peak_dir],
        "f1_peak_abs": abs(peak_val),
        "distance_to_ideal": {
            "empty": diag.droplet_distance(coeffs, ideal, DropletLabel(())),
            "1": diag.droplet_distance(coeffs, ideal, linear(1)),
        },
    }
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "ideal.ply").write_text(mesh(ideal, None, args.resolution).to_ply())
        (out / "perturbed.ply").write_text(mesh(coeffs, None, args.resolution).to_ply())
        (out / "estimate.json").write_text(json.dumps(result, indent=1) + "\n")
    print(json.dumps(result, indent=1))
    return 0


def cmd_list_gates(args) -> int:
    gates = table_gates(args.J)
    for name, g in gates.items():
        n_ev = 0 if g.sequence is None else len(g.sequence.events)
        print(f"{name:<12} {n_ev:>3} events")
    if args.write_sequences:
        out = Path(args.write_sequences)
        out.mkdir(parents=True, exist_ok=True)
        for name, g in gates.items():
            fname = "seq_" + name.replace(":", "_").replace("/", "_") + ".json"
            (out / fname).write_text(g.sequence.to_json() + "\n")
    return 0


# -- parser --------------------------------------------------------------------


def _angle(text: str) -> float:
    try:
        return parse_angle(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wignertomo", description="Droplet tomography of spin propagators.")
    p.add_argument("--list-gates", action="store_true", help="list the named gates and exit")
    sub = p.add_subparsers(dest="command")

    def common(sp, gate=True):
        sp.add_argument("--config", help="JSON file whose keys provide defaults for the flags")
        sp.add_argument("--J", type=float, default=J_HC, help="ancilla-system coupling in Hz")
        if gate:
            sp.add_argument("--gate", help="named gate, e.g. hadamard, not, rx:pi/2, phase:3pi/2")
            sp.add_argument("--input", help="operator JSON file ({n_spins, re, im}); '-' for stdin")

    sp = sub.add_parser("decompose", help="operator -> droplet coefficients JSON")
    common(sp)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_decompose)

    sp = sub.add_parser("synthesize", help="droplet coefficients JSON -> operator JSON")
    common(sp, gate=False)
    sp.add_argument("--input", required=True)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_synthesize)

    sp = sub.add_parser("tomo", help="simulate a tomography run and fit the droplets")
    common(sp)
    sp.add_argument("--sequence", help="pulse sequence JSON realizing the controlled gate")
    sp.add_argument("--n-system", type=int, default=None)
    sp.add_argument("--grid", default="13x25", help="13x25, step:pi/12 or gl:<jmax>")
    sp.add_argument("--labels", help="comma list such as 'empty,{1}'")
    sp.add_argument("--mode", choices=["ideal", "nmr"], default="ideal")
    sp.add_argument("--prep", choices=["exact", "sequence"], default="exact")
    sp.add_argument("--pulse-rotation", action="store_true", help="inverse rotation by pulses")
    sp.add_argument("--noise", type=float, default=0.0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out-dir", default="tomo_out")
    sp.add_argument("--mesh", action="store_true")
    sp.add_argument("--resolution", type=int, default=32)
    sp.set_defaults(func=cmd_tomo)

    sp = sub.add_parser("spinor", help="sweep rotation or phase-gate angles")
    common(sp, gate=False)
    sp.add_argument("--kind", choices=["rotation", "phase"], default="rotation")
    sp.add_argument("--angles", default="0:4pi:pi/2", help="comma list or start:stop:step")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_spinor)

    sp = sub.add_parser("errors", help="perturbed rotation droplets and parameter estimates")
    common(sp, gate=False)
    sp.add_argument("--psi", type=_angle, default=math.pi)
    sp.add_argument("--axis", default="x")
    sp.add_argument("--flip", type=float, default=1.0, help="relative flip-angle factor")
    sp.add_argument("--tilt", type=_angle, default=0.0, help="axis tilt in the xy-plane")
    sp.add_argument("--out-dir")
    sp.add_argument("--resolution", type=int, default=32)
    sp.set_defaults(func=cmd_errors)

    sp = sub.add_parser("list-gates", help="list the named gates")
    common(sp, gate=False)
    sp.add_argument("--write-sequences", metavar="DIR", help="also write each sequence as JSON")
    sp.set_defaults(func=cmd_list_gates)
    return p


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]):
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            cfg = json.loads(_read_text(args.config))
        except json.JSONDecodeError as exc:
            raise InputError(f"config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise InputError("config file must hold a JSON object")
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        bad = sorted(set(k.replace("-", "_") for k in cfg) - known)
        if bad:
            raise InputError(f"unknown config keys: {bad}")
        sub.set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})
        args = parser.parse_args(argv)
    return args


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _apply_config(parser, argv)
        if args.list_gates:
            args.J, args.write_sequences = J_HC, None
            return cmd_list_gates(args)
        if args.command is None:
            parser.print_help(sys.stderr)
            return 2
        return args.func(args)
    except IllConditionedGridError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (InputError, FitError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
