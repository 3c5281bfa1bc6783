import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from respiscreen.cli import main
from respiscreen.synth import Scenario
from respiscreen.thermal import read_clip

SVG_NS = "{http://www.w3.org/2000/svg}"


def scenario_file(tmp_path, name="scn.json", **kw):
    path = tmp_path / name
    path.write_text(json.dumps(Scenario(**kw).to_dict()))
    return path


@pytest.fixture(scope="module")
def synth_clip(tmp_path_factory):
    """Factory: render a scenario through the CLI once per parameter set."""
    root = tmp_path_factory.mktemp("clips")
    made = {}

    def _make(**kw):
        key = json.dumps(kw, sort_keys=True)
        if key not in made:
            d = root / f"c{len(made)}"
            d.mkdir()
            out = d / "clip.thrm"
            assert main(["synth", str(scenario_file(d, **kw)), str(out)]) == 0
            made[key] = out
        return made[key]

    return _make


class TestSynth:
    def test_writes_clip_and_truth(self, tmp_path, capsys):
        out = tmp_path / "a.thrm"
        assert main(["synth", str(scenario_file(tmp_path)), str(out)]) == 0
        clip = read_clip(out)
        assert clip.n_frames == 130
        truth = json.loads(out.with_suffix(".truth.json").read_text())
        assert truth["true_rate"] == 15.0 and truth["true_pattern"] == "Eupnea"
        assert "130 frames" in capsys.readouterr().out

    def test_out_flag_and_json(self, tmp_path, capsys):
        out = tmp_path / "b.thrm"
        assert main(["synth", str(scenario_file(tmp_path)), "--out", str(out), "--json"]) == 0
        assert json.loads(capsys.readouterr().out)["frames"] == 130

    def test_bad_duration_names_field(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"duration": 0}))
        assert main(["synth", str(path), str(tmp_path / "x.thrm")]) == 1
        err = capsys.readouterr().err
        assert "duration" in err and "INVALID_SCENARIO" in err
        assert not (tmp_path / "x.thrm").exists()

    def test_unknown_scenario_key(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"breathrate": 12}))
        assert main(["synth", str(path), str(tmp_path / "x.thrm")]) == 1
        assert "breathrate" in capsys.readouterr().err

    def test_missing_output(self, tmp_path):
        assert main(["synth", str(scenario_file(tmp_path))]) == 1

    def test_same_seed_same_bytes(self, tmp_path):
        scn = scenario_file(tmp_path, noise_sigma=0.05, sway_amplitude=2, seed=9)
        a, b = tmp_path / "a.thrm", tmp_path / "b.thrm"
        main(["synth", str(scn), str(a)])
        main(["synth", str(scn), str(b)])
        assert a.read_bytes() == b.read_bytes()


class TestAnalyze:
    def test_pass_exit_zero(self, synth_clip, capsys):
        clip = synth_clip()
        capsys.readouterr()
        assert main(["analyze", str(clip)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["pattern"] == "Eupnea" and report["decision"] == "Pass"
        assert report["rate_bpm"] == pytest.approx(15.0, abs=0.6)

    def test_fever_exit_two(self, synth_clip, capsys):
        clip = synth_clip(forehead_temp=38.0)
        capsys.readouterr()
        assert main(["analyze", str(clip)]) == 2
        report = json.loads(capsys.readouterr().out)
        assert report["decision"] == "Alert" and report["reasons"] == ["FEVER"]

    def test_flat_clip_has_no_breathing_region(self, synth_clip, capsys):
        assert main(["analyze", str(synth_clip(breath_amplitude=0.0))]) == 1
        assert "NO_BREATHING_REGION" in capsys.readouterr().err

    def test_noisy_apnea_alert(self, synth_clip, capsys):
        clip = synth_clip(breath_amplitude=0.0, noise_sigma=0.05, seed=3)
        capsys.readouterr()
        assert main(["analyze", str(clip)]) == 2
        report = json.loads(capsys.readouterr().out)
        assert report["pattern"] == "Apnea" and report["rate_bpm"] == 0.0
        assert report["reasons"] == ["ABNORMAL_PATTERN"]

    def test_truncated_exit_one(self, synth_clip, tmp_path, capsys):
        data = synth_clip().read_bytes()
        bad = tmp_path / "trunc.thrm"
        bad.write_bytes(data[:-7])
        assert main(["analyze", str(bad)]) == 1
        assert "TRUNCATED_PAYLOAD" in capsys.readouterr().err

    def test_out_file_and_tracks(self, synth_clip, tmp_path, capsys):
        out = tmp_path / "report.json"
        assert main(["analyze", str(synth_clip()), "--out", str(out), "--tracks", str(tmp_path / "t")]) == 0
        assert json.loads(out.read_text())["decision"] == "Pass"
        assert "Pass" in capsys.readouterr().out
        for region in ("forehead", "nostril"):
            lines = (tmp_path / f"t.{region}.csv").read_text().splitlines()
            assert lines[0] == "frame,x,y,w,h,quality"
            assert len(lines) == 131

    def test_config_flag(self, synth_clip, tmp_path, capsys):
        clip = synth_clip()
        capsys.readouterr()
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"fever_threshold": 36.0}))
        assert main(["analyze", str(clip), "--config", str(cfg)]) == 2
        assert json.loads(capsys.readouterr().out)["reasons"] == ["FEVER"]

    def test_config_env_var(self, synth_clip, tmp_path, monkeypatch, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"fever_threshold": 36.0}))
        monkeypatch.setenv("RESPISCREEN_CONFIG", str(cfg))
        assert main(["analyze", str(synth_clip())]) == 2

    def test_bad_config(self, synth_clip, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"fever": 36.0}))
        assert main(["analyze", str(synth_clip()), "--config", str(cfg)]) == 1
        assert "fever" in capsys.readouterr().err

    def test_short_clip(self, synth_clip, capsys):
        assert main(["analyze", str(synth_clip(duration=8.0))]) == 1
        assert "SIGNAL_TOO_SHORT" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["analyze", str(tmp_path / "nope.thrm")]) == 1


class TestPlot:
    def test_svg_and_sidecars(self, synth_clip, tmp_path):
        svg = tmp_path / "r.svg"
        assert main(["plot", str(synth_clip()), str(svg)]) == 0
        root = ET.parse(svg).getroot()
        gids = {el.get("id") for el in root.iter()}
        assert {"panel-raw", "panel-filtered", "panel-spectrum", "peak-marker"} <= gids
        text = svg.read_text()
        peak = float(text.split("peak ")[1].split(" bpm")[0])
        assert peak == pytest.approx(15.0, abs=1.0)
        raw = (tmp_path / "r.raw.csv").read_text().splitlines()
        assert raw[0] == "t,value" and len(raw) == 131
        assert (tmp_path / "r.filtered.csv").read_text().startswith("t,value\n")
        spec = np.loadtxt(tmp_path / "r.spectrum.csv", delimiter=",", skiprows=1)
        assert spec.shape == (2049, 2)

    def test_constant_clip_has_no_marker(self, synth_clip, tmp_path):
        svg = tmp_path / "flat.svg"
        assert main(["plot", str(synth_clip(breath_amplitude=0.0)), str(svg)]) == 0
        gids = {el.get("id") for el in ET.parse(svg).getroot().iter()}
        assert "peak-marker" not in gids and "panel-spectrum" in gids

    def test_out_flag(self, synth_clip, tmp_path, capsys):
        svg = tmp_path / "o.svg"
        assert main(["plot", str(synth_clip()), "--out", str(svg), "--json"]) == 0
        assert json.loads(capsys.readouterr().out)["svg"] == str(svg)


class TestInspect:
    def test_text(self, synth_clip, capsys):
        assert main(["inspect", str(synth_clip())]) == 0
        out = capsys.readouterr().out
        assert "duration: 14.94 s" in out and "160x120" in out and "130 frames" in out

    def test_json(self, synth_clip, capsys):
        assert main(["inspect", str(synth_clip()), "--json"]) == 0
        info = json.loads(capsys.readouterr().out)
        assert info["frame_count"] == 130 and info["header_bytes"] == 34

    def test_bad_magic(self, tmp_path, capsys):
        bad = tmp_path / "bad.thrm"
        bad.write_bytes(b"XXXX" + bytes(40))
        assert main(["inspect", str(bad)]) == 1
        assert "BAD_MAGIC" in capsys.readouterr().err

    def test_empty_clip(self, tmp_path, capsys):
        from respiscreen.thermal import RadiometricClip, write_clip

        path = tmp_path / "empty.thrm"
        write_clip(RadiometricClip(np.zeros((0, 4, 5), np.uint16), np.zeros(0, np.uint64), 8.7), path)
        assert main(["inspect", str(path)]) == 0
        assert "0 frames" in capsys.readouterr().out


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
