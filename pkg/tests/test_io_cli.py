import json
import math

import numpy as np
import pytest

from oflux.cli import main
from oflux.errors import DomainError
from oflux.field_core import HALF_PLUS, Grid3, Region, VectorField
from oflux.io import SnapshotFormatError, read_series, read_snapshot, sha256_file, sidecar_path, write_snapshot
from oflux.reports import RunConfig

G = Grid3(8, 6, 4, 2.0)
GEN = ["--nx", "32", "--ny", "32", "--nz-half", "16", "--lz", str(math.pi)]


@pytest.mark.parametrize("support", [HALF_PLUS, Region.above(-0.5), Region.strip(-1.0, 1.5), Region.full()])
def test_snapshot_round_trip(tmp_path, support):
    rng = np.random.default_rng(0)
    c = rng.standard_normal((3,) + G.shape)
    lo, hi = support.bounds(G)
    c[..., (G.z < lo) | (G.z > hi)] = 0.0
    f = VectorField(G, c, support, 0.25)
    p = write_snapshot(tmp_path / "a.oflx", f, {"note": 1})
    g = read_snapshot(p)
    assert g.grid == G and g.support == support and g.time == 0.25
    assert g.comps.tobytes() == f.comps.tobytes()
    assert p.stat().st_size == 51 + 8 * c.size
    side = json.loads(sidecar_path(p).read_text())
    assert side["format"] == "OFLX1" and side["meta"] == {"note": 1}


def _write(tmp_path, name="a.oflx", time=0.0):
    return write_snapshot(tmp_path / name, VectorField(G, np.zeros((3,) + G.shape), HALF_PLUS, time))


def test_bad_magic(tmp_path):
    p = _write(tmp_path)
    raw = bytearray(p.read_bytes())
    raw[:5] = b"OFLX2"
    p.write_bytes(bytes(raw))
    with pytest.raises(SnapshotFormatError, match="magic"):
        read_snapshot(p)


@pytest.mark.parametrize("cut", [10, 60, -8])
def test_bad_size(tmp_path, cut):
    p = _write(tmp_path)
    p.write_bytes(p.read_bytes()[:cut])
    with pytest.raises(SnapshotFormatError):
        read_snapshot(p)


def test_series_sorted_by_time(tmp_path):
    a = _write(tmp_path, "a.oflx", 1.0)
    b = _write(tmp_path, "b.oflx", 0.0)
    assert read_series([a, b]).times == (0.0, 1.0)
    with pytest.raises(DomainError):
        read_series([])


def test_config_rejects_unknown_keys():
    with pytest.raises(ValueError):
        RunConfig.from_dict({"command": "gen", "colour": 1})


def _gen(tmp_path, *extra, name="g"):
    out = tmp_path / name
    assert main(["gen", *GEN, "--times", "0,1", "-o", str(out), *extra]) == 0
    return out


def test_gen_is_deterministic(tmp_path):
    a = _gen(tmp_path, "--kind", "lacunary", "--seed", "4", name="a")
    b = _gen(tmp_path, "--kind", "lacunary", "--seed", "4", name="b")
    for f in ("snap_000.oflx", "snap_001.oflx", "gen.json"):
        if f == "gen.json":
            ja, jb = (json.loads((d / f).read_text()) for d in (a, b))
            assert [o["sha256"] for o in ja["result"]["outputs"]] == [o["sha256"] for o in jb["result"]["outputs"]]
        else:
            assert (a / f).read_bytes() == (b / f).read_bytes()
    c = _gen(tmp_path, "--kind", "lacunary", "--seed", "5", name="c")
    assert sha256_file(a / "snap_000.oflx") != sha256_file(c / "snap_000.oflx")


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"nx": 16, "ny": 16, "nz_half": 8, "lz": 2.0, "times": [0.0],
                               "spec": {"kind": "shear"}}))
    out = tmp_path / "o"
    assert main(["gen", "--config", str(cfg), "--nx", "8", "-o", str(out)]) == 0
    f = read_snapshot(out / "snap_000.oflx")
    assert f.grid == Grid3(8, 16, 8, 2.0)
    rep = json.loads((out / "gen.json").read_text())
    assert rep["config"]["nx"] == 8 and rep["result"]["spec"]["kind"] == "shear"


def test_usage_errors(tmp_path, capsys):
    assert main(["gen", "--nx", "x"]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["gen", *GEN, "--kind", "lacunary", "--mode-count", "9", "-o", str(tmp_path / "n")]) == 2
    assert "max admissible modeCount" in capsys.readouterr().err
    assert main(["verify", "-o", str(tmp_path)]) == 2
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    assert main(["gen", "--config", str(cfg)]) == 2
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["gen", "--config", str(cfg)]) == 2
    assert main(["gen", *GEN, "--tolerance-profile", "loose", "-o", str(tmp_path / "t")]) == 2


def test_io_errors(tmp_path):
    assert main(["verify", str(tmp_path / "missing.oflx"), "-o", str(tmp_path)]) == 3
    assert main(["gen", "--config", str(tmp_path / "missing.json")]) == 3
    junk = tmp_path / "junk.oflx"
    junk.write_bytes(b"nope")
    assert main(["verify", str(junk), "-o", str(tmp_path)]) == 3


def test_verify_and_negative_control(tmp_path):
    good = _gen(tmp_path, "--kind", "shear", name="good")
    out = tmp_path / "v"
    assert main(["verify", str(good / "snap_000.oflx"), "-o", str(out)]) == 0
    rep = json.loads((out / "verify.json").read_text())
    assert rep["status"] == "ok" and rep["result"]["all_passed"]
    assert rep["inputs"][0]["sha256"] == sha256_file(good / "snap_000.oflx")
    bad = _gen(tmp_path, "--kind", "boundary_flux", name="bad")
    assert main(["verify", str(bad / "snap_000.oflx"), "-o", str(out)]) == 1
    rep = json.loads((out / "verify.json").read_text())
    assert rep["status"] == "fail"


def test_budget_structure_strip_modulus(tmp_path):
    d = _gen(tmp_path, "--kind", "shear", name="s")
    snaps = [str(d / "snap_000.oflx"), str(d / "snap_001.oflx")]
    out = tmp_path / "r"
    assert main(["budget", *snaps, "--epsilons", "3.1,1.6", "-o", str(out)]) == 0
    rep = json.loads((out / "budget.json").read_text())
    assert rep["result"]["energy_gap"] == 0.0
    assert (out / "budget.csv").read_text().startswith("epsilon,")
    assert main(["budget", *snaps, "--epsilons", "0.5", "-o", str(out)]) == 2
    assert main(["budget", *snaps, "--epsilons", "1.6,3.1", "-o", str(out)]) == 2
    assert main(["strip", *snaps, "--epsilons", "1.2,0.8,0.4", "-o", str(out)]) == 0
    assert main(["modulus", *snaps, "-o", str(out)]) == 0
    lac = _gen(tmp_path, "--kind", "lacunary", "--lz", "4", "--nz-half", "32", name="l")
    assert main(["structure", str(lac / "snap_000.oflx"), "--directions", "0,1,0;0,0,1",
                 "-o", str(out)]) == 0
    rep = json.loads((out / "structure.json").read_text())
    assert set(rep["result"]["slope"]) == {"(0,1,0)", "(0,0,1)"}
    for name in ("budget", "strip", "modulus", "structure"):
        text = (out / f"{name}.json").read_text()
        assert "NaN" not in text and "Infinity" not in text


def test_reports_are_reproducible(tmp_path):
    d = _gen(tmp_path, "--kind", "lacunary", name="s")
    snaps = [str(d / "snap_000.oflx"), str(d / "snap_001.oflx")]
    texts = []
    for run in ("x", "y"):
        assert main(["strip", *snaps, "--epsilons", "1.2,0.8,0.4", "-o", str(tmp_path / run)]) == 0
        texts.append((tmp_path / run / "strip.json").read_text())
    a, b = (json.loads(t) for t in texts)
    assert a["result"] == b["result"] and a["inputs"] == b["inputs"]
    assert (tmp_path / "x" / "strip.csv").read_bytes() == (tmp_path / "y" / "strip.csv").read_bytes()
