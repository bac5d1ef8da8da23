import json

import numpy as np
import pytest

import walklab as wl
from walklab.cli import main
from walklab.config import load_config, parse_config, parse_point, parse_region
from walklab.errors import ConfigError
from walklab.reports import read_field_csv, write_field_csv
from walklab.solver import Field


BASE = {
    "dimension": 2,
    "kernel": {"kind": "srw"},
    "domain": {"profile": {"kind": "constant-zero"}},
    "seed": 42,
}


def write_cfg(tmp_path, extra=None, name="cfg.json"):
    cfg = dict(BASE)
    cfg.update(extra or {})
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


class TestConfig:
    def test_digest_stable_under_key_order(self):
        a = parse_config(dict(BASE))
        b = parse_config(json.loads(json.dumps(BASE, sort_keys=True)))
        assert a.digest == b.digest

    def test_unknown_top_field_rejected(self, tmp_path):
        p = write_cfg(tmp_path, {"bogus": 1})
        with pytest.raises(ConfigError, match="bogus"):
            load_config(p)

    def test_unknown_kernel_field_rejected(self, tmp_path):
        p = write_cfg(tmp_path, {"kernel": {"kind": "srw", "spin": 3}})
        with pytest.raises(ConfigError, match="spin"):
            load_config(p)

    def test_malformed_json_names_position(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text('{"dimension": 2,\n  "kernel": }')
        with pytest.raises(ConfigError, match="line 2"):
            load_config(p)

    def test_missing_required(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text(json.dumps({"dimension": 2}))
        with pytest.raises(ConfigError, match="kernel"):
            load_config(p)

    def test_parse_point(self):
        assert parse_point("0", 3) == (0, 0, 0)
        assert parse_point("3:0", 2) == (3, 0)
        assert parse_point("3,-1", 2) == (3, -1)
        with pytest.raises(ConfigError):
            parse_point("1:2:3", 2)

    def test_parse_region(self):
        r = parse_region("ball:y=0,R=32", 2)
        assert r.kind == "ball" and r.radius == 32
        c = parse_region("collar:y=3:0,K=8,r=4", 2)
        assert c.kind == "collar" and c.radius == 32 and c.inner == 4
        with pytest.raises(ConfigError):
            parse_region("ball:R=2,junk=1", 2)
        with pytest.raises(ConfigError):
            parse_region("ball:y=0", 2)

    def test_rational_weights_from_strings(self, tmp_path):
        p = write_cfg(tmp_path, {
            "kernel": {"kind": "periodic", "steps": [[1, 0], [-1, 0], [0, 1], [0, -1]],
                        "period": [2, 1],
                        "weights": [["3/10", "3/10", "1/5", "1/5"],
                                     ["1/5", "1/5", "3/10", "3/10"]]}})
        cfg = load_config(p)
        from walklab.config import build_kernel

        k = build_kernel(cfg)
        assert k.alpha == 0.2
        rep = wl.validate_kernel(k, wl.enumerate_region(wl.cube((0, 0), 3)))
        assert rep.exact


class TestFieldCsv:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(17)
        pts = wl.enumerate_region(wl.ball((0, 0), 4))
        vals = rng.standard_normal(len(pts)) * np.pi
        f = Field(pts, vals)
        path = tmp_path / "f.csv"
        write_field_csv(f, path, {"config_digest": "abc"})
        g = read_field_csv(path)
        assert np.array_equal(f.points, g.points)
        assert np.array_equal(f.values, g.values)  # bitwise round trip

    def test_single_point_field(self, tmp_path):
        f = Field(np.array([[2, -3]]), np.array([1.5]))
        path = tmp_path / "one.csv"
        write_field_csv(f, path)
        text = path.read_text().splitlines()
        assert text[0] == "x1,x2,value"
        assert text[1] == "2,-3,1.5"

    def test_header_carries_digest(self, tmp_path):
        f = Field(np.array([[0]]), np.array([0.0]))
        path = tmp_path / "d.csv"
        write_field_csv(f, path, {"config_digest": "deadbeef"})
        assert "# config_digest=deadbeef" in path.read_text()


class TestCli:
    def test_validate_ok(self, tmp_path, capsys):
        p = write_cfg(tmp_path)
        assert main(["--config", str(p), "validate"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["status"] == "ok"
        assert out["alpha"] == 0.25

    def test_validate_catches_drift(self, tmp_path, capsys):
        p = write_cfg(tmp_path, {"kernel": {
            "kind": "homogeneous",
            "steps": [[1, 0], [-1, 0], [0, 1], [0, -1]],
            "weights": [0.3, 0.2, 0.25, 0.25]}})
        assert main(["--config", str(p), "validate"]) == 1
        out = json.loads(capsys.readouterr().out)
        assert out["status"] == "fail"
        assert out["condition"] == "centering"
        assert "witness_point" in out

    def test_config_error_exit_code(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text("{nope}")
        assert main(["--config", str(p), "validate"]) == 2

    def test_solve_writes_field(self, tmp_path, capsys):
        p = write_cfg(tmp_path)
        out = tmp_path / "field.csv"
        rc = main(["--config", str(p), "--out", str(out), "solve",
                   "--region", "ball:y=0,R=8", "--data", "top-indicator"])
        assert rc == 0
        f = read_field_csv(out)
        assert len(f) > 0
        assert f.values.min() >= 0 and f.values.max() <= 1

    def test_construct_artifacts(self, tmp_path):
        p = write_cfg(tmp_path, {"radii": [12, 24]})
        out = tmp_path / "h.csv"
        log = tmp_path / "conv.json"
        rc = main(["--config", str(p), "--out", str(out), "construct",
                   "--log", str(log)])
        assert rc == 0
        conv = json.loads(log.read_text())
        assert conv["radii"] == [12, 24]
        assert len(conv["deviations"]) == 1
        f = read_field_csv(out)
        assert f.at((8, 0)) == 1.0

    def test_reproducible_artifacts(self, tmp_path):
        p = write_cfg(tmp_path, {"radii": [12, 24]})
        outs = []
        for i in (1, 2):
            out = tmp_path / f"h{i}.csv"
            log = tmp_path / f"c{i}.json"
            assert main(["--config", str(p), "--out", str(out),
                         "construct", "--log", str(log)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_mc_json(self, tmp_path):
        p = write_cfg(tmp_path)
        out = tmp_path / "est.json"
        rc = main(["--config", str(p), "--out", str(out), "mc",
                   "--region", "ball:y=0,R=8", "--start", "4:0",
                   "--paths", "2000", "--target", "top-indicator"])
        assert rc == 0
        est = json.loads(out.read_text())
        assert {"estimate", "half_width_95", "truncated_paths", "seed",
                "config_digest"} <= set(est)

    def test_lab_report_schema(self, tmp_path):
        p = write_cfg(tmp_path)
        out = tmp_path / "prop1.json"
        rc = main(["--config", str(p), "--out", str(out), "lab", "prop1",
                   "--grid", "8"])
        assert rc == 0
        rep = json.loads(out.read_text())
        assert {"experiment", "config_digest", "grid", "constants",
                "witnesses"} <= set(rep)
        assert rep["constants"][0]["rho"] < 1

    def test_lemma2_cli(self, tmp_path):
        p = write_cfg(tmp_path, {"grid": {"K": [2, 4], "r": 4}})
        out = tmp_path / "lemma2.json"
        rc = main(["--config", str(p), "--out", str(out), "lab", "lemma2"])
        assert rc == 0
        rep = json.loads(out.read_text())
        assert rep["constants"][0]["onset"] in (2, 4)

    def test_martin_cli(self, tmp_path):
        p = write_cfg(tmp_path, {"inner_radius": 4})
        out = tmp_path / "m.csv"
        rc = main(["--config", str(p), "--out", str(out), "martin",
                   "--y", "12:0"])
        assert rc == 0
        f = read_field_csv(out)
        assert len(f) > 0

    def test_uniq_cli(self, tmp_path, capsys):
        p = write_cfg(tmp_path, {"radii": [16, 32], "inner_radius": 8})
        out = tmp_path / "u.json"
        rc = main(["--config", str(p), "--out", str(out), "uniq"])
        assert rc == 0
        rep = json.loads(out.read_text())
        assert rep["shrinking"] is True
