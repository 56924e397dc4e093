import json
import math
import subprocess
import sys

import numpy as np
import pytest

from wignertomo.cli import main, parse_grid
from wignertomo.drops import DropletCoefficients
from wignertomo.spinop import Operator
from wignertomo.tomo import SampleSet


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_decompose_identity(capsys):
    code, out, _ = run(["decompose", "--gate", "id"], capsys)
    assert code == 0
    c = DropletCoefficients.from_json(out)
    assert [k for k, v in c.entries.items() if abs(v) > 1e-15] == [next(iter(c.entries))]
    assert c.entries[next(iter(c.entries))] == pytest.approx(math.sqrt(2))


def test_decompose_hadamard_has_no_identity_part(capsys):
    _, out, _ = run(["decompose", "--gate", "hadamard"], capsys)
    entries = json.loads(out)["entries"]
    assert abs(entries[0]["re"]) < 1e-15 and entries[0]["label"] == "{}"


def test_decompose_synthesize_round_trip(tmp_path, capsys):
    u = np.linalg.qr(np.random.default_rng(1).normal(size=(4, 4)) + 1j)[0]
    src = tmp_path / "u.json"
    src.write_text(Operator(u).to_json())
    coeffs = tmp_path / "c.json"
    assert main(["decompose", "--input", str(src), "--out", str(coeffs)]) == 0
    code, out, _ = run(["synthesize", "--input", str(coeffs)], capsys)
    assert code == 0
    assert np.max(np.abs(Operator.from_json(out).matrix - u)) < 1e-10


def test_malformed_input_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(["decompose", "--input", str(bad)], capsys)
    assert code == 2 and err
    assert run(["decompose", "--gate", "toffoli"], capsys)[0] == 2
    assert run(["decompose"], capsys)[0] == 2


def test_tomo_nmr_not(tmp_path, capsys):
    code, _, _ = run(["tomo", "--gate", "not", "--grid", "13x25", "--mode", "nmr", "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    s = SampleSet.from_csv((tmp_path / "samples.csv").read_text())
    assert all(len(v) == 325 for v in s.values.values())
    fit = json.loads((tmp_path / "fit.json").read_text())
    assert max(f["residual_rms"] for f in fit["fits"]) < 1e-9
    assert fit["max_coefficient_error"] < 1e-9


def test_tomo_sequence_matches_gate(tmp_path, capsys):
    run(["list-gates", "--write-sequences", str(tmp_path / "seq")], capsys)
    run(["tomo", "--gate", "not", "--mode", "nmr", "--out-dir", str(tmp_path / "a")], capsys)
    code, _, _ = run(
        ["tomo", "--sequence", str(tmp_path / "seq" / "seq_not.json"), "--mode", "nmr", "--out-dir", str(tmp_path / "b")],
        capsys,
    )
    assert code == 0
    a = SampleSet.from_csv((tmp_path / "a" / "samples.csv").read_text())
    b = SampleSet.from_csv((tmp_path / "b" / "samples.csv").read_text())
    assert a.max_abs_diff(b) < 1e-9


def test_tomo_mesh_rx_2pi_is_green(tmp_path, capsys):
    assert run(["tomo", "--gate", "rx:2pi", "--mesh", "--resolution", "8", "--out-dir", str(tmp_path)], capsys)[0] == 0
    lines = (tmp_path / "mesh_combined.ply").read_text().splitlines()
    start = lines.index("end_header") + 1
    n_vert = int(next(l for l in lines if l.startswith("element vertex")).split()[-1])
    for line in lines[start : start + n_vert]:
        x, y, z, r, g, b = line.split()
        assert (r, g, b) == ("0", "128", "0")
        assert math.hypot(float(x), float(y), float(z)) == pytest.approx(math.sqrt(1 / (2 * math.pi)), rel=1e-7)


def test_tomo_ill_conditioned_exits_3(tmp_path, capsys):
    code, _, err = run(["tomo", "--gate", "not", "--grid", "2x2", "--out-dir", str(tmp_path)], capsys)
    assert code == 3 and "ill-conditioned" in err


def test_tomo_is_deterministic(tmp_path, capsys):
    for d in ("a", "b"):
        run(["tomo", "--gate", "hadamard", "--noise", "0.01", "--seed", "7", "--out-dir", str(tmp_path / d)], capsys)
    for f in ("samples.csv", "fit.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_tomo_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"gate": "hadamard", "grid": "gl:1", "out_dir": str(tmp_path / "o")}))
    assert run(["tomo", "--config", str(cfg)], capsys)[0] == 0
    assert len(SampleSet.from_csv((tmp_path / "o" / "samples.csv").read_text()).nodes) == 6
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(["tomo", "--config", str(cfg)], capsys)[0] == 2


def test_spinor_rows(capsys):
    code, out, _ = run(["spinor", "--kind", "rotation", "--angles", "0:4pi:pi/2"], capsys)
    rows = out.splitlines()[1:]
    assert code == 0 and len(rows) == 9
    for k, row in enumerate(rows):
        f0 = float(row.split(",")[1])
        assert f0 == pytest.approx(math.sqrt(1 / (2 * math.pi)) * math.cos(k * math.pi / 4), abs=1e-15)
    _, out, _ = run(["spinor", "--kind", "phase", "--angles", "0:2pi:pi/2"], capsys)
    rows = out.splitlines()[1:]
    first, last = ([float(x) for x in r.split(",")[1:]] for r in (rows[0], rows[-1]))
    assert len(rows) == 5 and np.allclose(first, last, atol=1e-12)
    _, out, _ = run(["spinor", "--angles", ""], capsys)
    assert out == "angle,f0_re,f0_im,sign\n"


def test_errors_command(tmp_path, capsys):
    code, out, _ = run(["errors", "--psi", "pi", "--tilt", "pi/10", "--out-dir", str(tmp_path)], capsys)
    est = json.loads(out)
    assert code == 0
    assert np.allclose(est["axis"], [math.cos(math.pi / 10), math.sin(math.pi / 10), 0], atol=1e-9)
    assert (tmp_path / "perturbed.ply").exists()
    _, out, _ = run(["errors", "--psi", "pi", "--flip", "1.1"], capsys)
    assert json.loads(out)["f0"] < 0
    _, out, _ = run(["errors"], capsys)
    est = json.loads(out)
    assert abs(est["f0"]) < 1e-15 and np.allclose(est["axis"], [1, 0, 0])
    assert run(["errors", "--axis", "1,1,0"], capsys)[0] == 2


def test_list_gates(capsys):
    code, out, _ = run(["--list-gates"], capsys)
    assert code == 0 and len(out.splitlines()) == 16
    assert len(run(["list-gates"], capsys)[1].splitlines()) == 16


def test_parse_grid():
    assert len(parse_grid("step:pi/12")) == 325
    assert len(parse_grid("gl:2")) == 15
    with pytest.raises(ValueError):
        parse_grid("13by25")


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "wignertomo", "decompose", "--gate", "id"], capture_output=True, text=True)
    assert res.returncode == 0 and '"n_spins": 1' in res.stdout
