import hashlib

import numpy as np
import pytest

import macrofacet.ndf
from macrofacet.cli import main
from macrofacet.config import config_hash, parse_config, serialize_config

FLAT_CFG = """
[kernel]
sigma = 1.0
ax = 1.0
ay = 1.0
az = 1.0

[medium]
kind = generalized
fresnel = one

[scene]
primitive0_shape = plane
primitive0_z0 = 0

[render]
width = 8
height = 8
spp = 4
seed = 3
"""


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "flat.cfg"
    p.write_text(FLAT_CFG)
    return str(p)


def test01_render_ok_and_deterministic(cfg, tmp_path, capsys):
    out1 = tmp_path / "a.pfm"
    out2 = tmp_path / "b.pfm"
    assert main(["render", cfg, "--out", str(out1)]) == 0
    assert main(["render", cfg, "--out", str(out2)]) == 0
    assert hashlib.sha256(out1.read_bytes()).hexdigest() == hashlib.sha256(
        out2.read_bytes()
    ).hexdigest()
    text = capsys.readouterr().out
    assert "spp" in text and "s ->" in text  # time and spp are reported


def test02_render_thread_env_invariance(cfg, tmp_path, monkeypatch):
    out1 = tmp_path / "t1.pfm"
    out4 = tmp_path / "t4.pfm"
    monkeypatch.setenv("MACROFACET_THREADS", "1")
    assert main(["render", cfg, "--out", str(out1)]) == 0
    monkeypatch.setenv("MACROFACET_THREADS", "4")
    assert main(["render", cfg, "--out", str(out4)]) == 0
    assert out1.read_bytes() == out4.read_bytes()
    monkeypatch.setenv("MACROFACET_THREADS", "zero")
    assert main(["render", cfg, "--out", str(out1)]) == 1


def test03_unknown_key_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[kernel]\nbogus_key = 1\n")
    assert main(["render", str(bad), "--out", str(tmp_path / "x.pfm")]) == 1
    assert "bogus_key" in capsys.readouterr().err


def test04_both_parameterizations_rejected(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[kernel]\nsigma = 1\nlx = 2\nax = 1\n")
    assert main(["render", str(bad), "--out", str(tmp_path / "x.pfm")]) == 1


def test05_missing_config_is_io_error(tmp_path):
    assert main(["render", str(tmp_path / "nope.cfg"), "--out", str(tmp_path / "x.pfm")]) == 3


def test06_config_round_trip():
    values = parse_config(FLAT_CFG)
    text = serialize_config(values)
    again = parse_config(text)
    assert again == values
    assert serialize_config(again) == text
    assert config_hash(values) == config_hash(again)


def test07_curves_lambda_csv(tmp_path):
    out = tmp_path / "lam.csv"
    assert main(["curves", "lambda", "--start", "0", "--stop", "89", "--steps", "90",
                 "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# macrofacet ")
    assert lines[1].startswith("# seed = ")
    assert lines[2].startswith("# params: ")
    assert lines[3] == "theta_deg,lambda_unitless"
    rows = {float(l.split(",")[0]): float(l.split(",")[1]) for l in lines[4:]}
    assert abs(rows[45.0] - 0.0833160) <= 1e-6
    assert "\r" not in out.read_text()


def test08_curves_transmittance_csv(tmp_path):
    out = tmp_path / "tr.csv"
    assert main(["curves", "transmittance", "--theta-deg", "135", "--z0", "0",
                 "--start", "0", "--stop", "4", "--steps", "9", "--out", str(out)]) == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    first = lines[1].split(",")
    assert float(first[0]) == 0.0 and float(first[1]) == 1.0


def test09_curves_vndf_slice(tmp_path):
    out = tmp_path / "v.csv"
    assert main(["curves", "vndf", "--theta-deg", "0", "--start", "0", "--stop", "180",
                 "--steps", "61", "--out", str(out)]) == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    rows = np.array([[float(v) for v in l.split(",")] for l in lines[1:]])
    # normal incidence: the slice peaks at the upward normal
    assert rows[0, 1] == max(rows[:, 1])
    from macrofacet import NdfKind, RoughnessTriple, vndf_eval

    ref = vndf_eval(np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, -1.0]),
                    NdfKind.GENERALIZED, RoughnessTriple(1, 1, 1))
    assert abs(rows[0, 1] - ref) < 1e-12


def test10_curves_17_digit_round_trip(tmp_path):
    out = tmp_path / "pa.csv"
    assert main(["curves", "projected-area", "--start", "0", "--stop", "90",
                 "--steps", "7", "--out", str(out)]) == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    from macrofacet import RoughnessTriple, projected_area

    for line in lines[1:]:
        deg, val = line.split(",")
        exact = projected_area(np.deg2rad(float(deg)), 0.0, RoughnessTriple(1, 1, 1))
        assert float(val) == float(exact)  # 17 significant digits round-trip


def test11_validate_suite_passes(capsys):
    assert main(["validate", "lambda"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out


def test12_validate_detects_injected_bug(monkeypatch, capsys):
    # harness contract: a sign bug in the full-sphere density must fail the
    # ndf suite with exit code 4 and name the broken invariant
    orig = macrofacet.ndf.generalized_ndf_dir

    def broken(wm, a3):
        wm = np.asarray(wm, dtype=np.float64)
        flipped = wm.copy()
        flipped[..., 2] = -flipped[..., 2]
        return orig(flipped, a3)

    monkeypatch.setattr("macrofacet.validate.generalized_ndf_dir", broken)
    assert main(["validate", "ndf"]) == 4
    out = capsys.readouterr().out
    assert "FAIL" in out


def test13_validate_tol_override(capsys):
    # an absurdly tight override must fail the otherwise-passing suite
    assert main(["validate", "lambda", "--tol", "lambda_beckmann_degeneracy=1e-30"]) == 4


def test14_oracle_caps(tmp_path):
    out = tmp_path / "o.csv"
    assert main(["oracle", "gp-transmittance", "--realizations", "9999",
                 "--out", str(out)]) == 1
    assert main(["oracle", "gp-transmittance", "--grid-n", "500", "--out", str(out)]) == 1


def test15_oracle_transmittance_csv(tmp_path):
    out = tmp_path / "gt.csv"
    assert main(["oracle", "gp-transmittance", "--realizations", "64", "--grid-n", "40",
                 "--grid-spacing", "0.30", "--t-max", "3", "--steps", "7",
                 "--out", str(out)]) == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "t_world,transmittance_unitless,std_error"
    first = [float(v) for v in lines[1].split(",")]
    assert first[0] == 0.0 and first[1] == 1.0


def test16_oracle_vndf_integral(tmp_path, capsys):
    out = tmp_path / "gv.csv"
    assert main(["oracle", "gp-vndf", "--realizations", "64", "--grid-n", "40",
                 "--grid-spacing", "0.30", "--rays", "64", "--bins-theta", "8",
                 "--bins-phi", "16", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    integral = float(text.split("integral ")[1].split(")")[0])
    assert abs(integral - 1.0) < 1e-6


def test17_oracle_ensemble_furnace_summary(tmp_path, capsys):
    out = tmp_path / "ens.pfm"
    assert main(["oracle", "gp-ensemble", "--realizations", "24", "--grid-n", "40",
                 "--grid-spacing", "0.30", "--width", "10", "--height", "10",
                 "--spp", "24", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    mean = float(text.split("mean pixel ")[1].split(" ")[0])
    assert abs(mean - 1.0) < 0.02
