import csv
import io
import json
import math

import pytest

from noise_resolution import __version__
from noise_resolution.cli import EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, main
from noise_resolution.functionals import cd_tilde

SMALL = ["--width", "32", "--height", "4", "--n-frames", "256", "--seed", "5",
         "--config", '{"bins_x": [1, 2, 4], "bunches": [1, 2, 4]}']


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_constants_csv(capsys):
    rc, out, _ = run(capsys, "constants")
    assert rc == EXIT_OK
    rows = rows_of(out)
    assert [int(r["d"]) for r in rows] == [1, 2, 3]
    assert float(rows[1]["C_d"]) == pytest.approx(8 / 9, rel=1e-15)
    assert float(rows[2]["C_tilde_d"]) == pytest.approx(cd_tilde(3), rel=1e-15)


def test_constants_json(capsys):
    rc, out, _ = run(capsys, "constants", "--format", "json")
    data = json.loads(out)
    assert data["version"] == __version__
    assert "config" in data and len(data["rows"]) == 3


@pytest.mark.parametrize("density", ["epanechnikov", "gaussian", "uniform_ball", "uniform_cube"])
def test_verify_standard(capsys, density):
    rc, out, _ = run(capsys, "verify", "--density", density, "--dim", "3", "--N", "64")
    assert rc == EXIT_OK
    row = rows_of(out)[0]
    assert float(row["relative_margin"]) > -0.02


def test_verify_mixture(capsys):
    spec = json.dumps({"centers": [[0, 0], [2, 0]], "widths": [0.5, 0.7]})
    rc, out, _ = run(capsys, "verify", "--density", "mixture", "--dim", "2", "--mixture", spec, "--N", "128")
    assert rc == EXIT_OK
    assert float(rows_of(out)[0]["value"]) > cd_tilde(2)


def test_verify_violation_exit(capsys):
    # a very coarse Epanechnikov grid dips below the bound
    rc, out, _ = run(capsys, "verify", "--density", "epanechnikov", "--dim", "3", "--N", "4", "--tolerance", "0")
    value = float(rows_of(out)[0]["relative_margin"])
    assert rc == (EXIT_VIOLATION if value < 0 else EXIT_OK)


def test_verify_grid_file(capsys, tmp_path):
    from noise_resolution.functionals import sample_density

    p = tmp_path / "g.json"
    p.write_text(json.dumps(sample_density("gaussian", 1, 256).to_dict()))
    rc, out, _ = run(capsys, "verify", "--grid-file", str(p))
    assert rc == EXIT_OK
    assert float(rows_of(out)[0]["value"]) == pytest.approx(2 / math.sqrt(4 * math.pi), rel=1e-6)


def test_state_plane_wave(capsys):
    rc, out, _ = run(capsys, "state", "--state", '{"kind": "coherent", "alpha_sq": 1}',
                     "--mode", '{"kind": "plane_wave", "side": 1}', "--format", "json")
    assert rc == EXIT_OK
    row = json.loads(out)["rows"][0]
    assert row["product"] == pytest.approx(0.75)
    assert row["qd_sq"] <= row["qd_bound"]


def test_state_mode_from_file(capsys, tmp_path):
    p = tmp_path / "mode.json"
    p.write_text('{"kind": "gaussian", "sigma": 0.5}')
    rc, out, _ = run(capsys, "state", "--state", '{"kind": "fock", "n": 2}', "--mode", str(p))
    assert rc == EXIT_OK
    assert float(rows_of(out)[0]["product"]) > cd_tilde(3)


def test_heisenberg(capsys):
    rc, out, _ = run(capsys, "heisenberg", "--mode", '{"kind": "gaussian", "sigma": 1}', "--format", "json")
    assert rc == EXIT_OK
    row = json.loads(out)["rows"][0]
    assert row["product"] == pytest.approx(1.5)
    rc, out, _ = run(capsys, "heisenberg", "--mode", '{"kind": "plane_wave", "side": 1}', "--format", "json")
    row = json.loads(out)["rows"][0]
    assert rc == EXIT_OK and row["snr0"] == pytest.approx(1.3144538, rel=1e-6)


def test_bad_json_is_usage_error(capsys):
    rc, _, err = run(capsys, "state", "--state", "{nope", "--mode", '{"kind": "gaussian", "sigma": 1}')
    assert rc == EXIT_USAGE and "error" in err
    rc, _, _ = run(capsys, "state", "--state", '{"kind": "thermal"}', "--mode", '{"kind": "gaussian", "sigma": 1}')
    assert rc == EXIT_USAGE


def test_argparse_errors_exit_2(capsys):
    assert main(["bogus"]) == EXIT_USAGE
    assert main(["verify", "--dim", "7"]) == EXIT_USAGE


def test_sweep_and_analyze_round_trip(capsys, tmp_path):
    nru = tmp_path / "frames.nru"
    assert main(["simulate", *SMALL, "--output", str(nru)]) == EXIT_OK
    meta = json.loads((tmp_path / "frames.nru.meta.json").read_text())
    assert meta["version"] == __version__ and meta["config"]["seed"] == 5
    base = tmp_path / "sweep"
    rc = main(["sweep", *SMALL, "--out", str(base)])
    assert rc == EXIT_OK
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps(json.loads(base.with_suffix(".json").read_text())["config"]))
    rc, out, _ = run(capsys, "analyze", str(nru), "--config", str(cfg_file))
    assert rc == EXIT_OK
    assert out == base.with_suffix(".csv").read_text()


def test_sweep_byte_identical(capsys):
    _, a, _ = run(capsys, "sweep", *SMALL, "--format", "json")
    _, b, _ = run(capsys, "sweep", *SMALL, "--format", "json", "--workers", "3")
    assert a == b
    data = json.loads(a)
    assert data["reference"]["inv_C2"] == pytest.approx(1.125)
    assert data["config"]["width_mode"] == "area"


def test_analyze_corrupt_file(capsys, tmp_path):
    p = tmp_path / "bad.nru"
    p.write_bytes(b"NRU1\x00\x01")
    rc, _, err = run(capsys, "analyze", str(p))
    assert rc == EXIT_USAGE and "header" in err
    rc, _, _ = run(capsys, "analyze", str(tmp_path / "missing.nru"))
    assert rc == EXIT_USAGE


def test_analyze_csv_frames(capsys, tmp_path):
    import numpy as np

    rng = np.random.default_rng(1)
    paths = []
    for t in range(8):
        p = tmp_path / f"frame{t}.csv"
        np.savetxt(p, rng.poisson(1000, size=(4, 8)), fmt="%d", delimiter=",")
        paths.append(str(p))
    rc, out, _ = run(capsys, "analyze", *paths, "--bins-x", "1,2", "--bunches", "1,2")
    assert rc in (EXIT_OK, EXIT_VIOLATION)
    assert len(rows_of(out)) == 4
    rc, _, _ = run(capsys, "analyze", *paths, "--bins-x", "a,b")
    assert rc == EXIT_USAGE


def test_analyze_violation_exit(capsys, tmp_path):
    # frames whose temporal variance is far below Poisson break the 1/C_2 bound
    import numpy as np

    from noise_resolution.detector import FrameStack, write_nru1

    counts = np.full((16, 4, 8), 1000, dtype=np.int64)
    counts[::2] += 1
    p = tmp_path / "quiet.nru"
    write_nru1(p, FrameStack(counts, (1.0, 1.0)))
    rc, _, _ = run(capsys, "analyze", str(p))
    assert rc == EXIT_VIOLATION


def test_csv_sidecar(capsys, tmp_path):
    out = tmp_path / "c.csv"
    assert main(["constants", "--out", str(out)]) == EXIT_OK
    meta = json.loads((tmp_path / "c.csv.meta.json").read_text())
    assert meta["version"] == __version__
