import json
import os
import subprocess
import sys

import pytest
import yaml

from conftest import write_config, write_dataset
from deidbench import __version__
from deidbench.cli import build_parser, main
from deidbench.pipeline.config import accepted_keys


@pytest.fixture
def dataset_cfg(tmp_path):
    write_dataset(tmp_path / "data", n=3)
    return write_config(tmp_path / "c.yaml", "dataset: {manifest: data/manifest.tsv, detections: data/dets.jsonl}\n"
                                             "method: {name: blur, params: {kernel_size: 11}}\noutput_dir: out\n")


def test_deid_prints_output_dir(dataset_cfg, tmp_path, capsys):
    assert main(["deid", "--config", str(dataset_cfg)]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert out == [str(tmp_path / "out")]
    assert os.path.exists(tmp_path / "out" / "results.json")


def test_override_reaches_report(dataset_cfg, tmp_path, capsys):
    assert main(["deid", "-c", str(dataset_cfg)]) == 0
    base = json.load(open(tmp_path / "out" / "results.json"))["reports"][0]
    assert main(["deid", "-c", str(dataset_cfg), "--set", "method.params.kernel_size=31"]) == 0
    rep = json.load(open(tmp_path / "out" / "results.json"))["reports"][0]
    assert rep["config"]["method"]["params"]["kernel_size"] == 31
    assert rep["config_hash"] != base["config_hash"]


def test_validate_unknown_key_exit_1(dataset_cfg, capsys):
    assert main(["validate", "-c", str(dataset_cfg), "--set", "method.params.kernal_size=3"]) == 1
    assert "method.params.kernal_size" in capsys.readouterr().err


def test_validate_dump_round_trips(dataset_cfg, tmp_path, capsys):
    assert main(["validate", "-c", str(dataset_cfg), "--dump"]) == 0
    dumped = capsys.readouterr().out
    again = write_config(tmp_path / "again.yaml", dumped)
    assert main(["validate", "-c", str(again)]) == 0


def test_usage_errors_exit_1(capsys):
    assert main([]) == 1
    assert main(["bogus"]) == 1
    assert main(["deid"]) == 1  # --config missing
    assert main(["deid", "-c", "x.yaml", "--jobs", "many"]) == 1


def test_runtime_errors_exit_2(tmp_path, capsys):
    write_dataset(tmp_path / "data", n=2)
    cfg = write_config(tmp_path / "c.yaml", "dataset: {manifest: data/manifest.tsv, detections: data/dets.jsonl}\n"
                                            "method: {name: identity}\noutput_dir: out\n")
    (tmp_path / "out").write_text("a file where the output directory should be")
    assert main(["deid", "-c", str(cfg)]) == 2
    assert "Traceback" not in capsys.readouterr().err


def test_missing_config_exit_1(tmp_path, capsys):
    assert main(["validate", "-c", str(tmp_path / "nope.yaml")]) == 1


def test_config_dir_env(dataset_cfg, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("DEIDBENCH_CONFIG_DIR", str(tmp_path))
    monkeypatch.chdir("/")
    assert main(["validate", "-c", "c.yaml"]) == 0


def test_ensemble_config_round_trip(tmp_path, capsys):
    write_dataset(tmp_path / "data", n=3)
    gallery = tmp_path / "gallery.txt"
    gallery.write_text("".join(f"data/imgs/im{i:03d}.png\n" for i in range(3)))
    assert main(["ensemble-config", "--preserve", "gender,expr", "--suppress", "identity",
                 "--reference-dataset", str(gallery)]) == 0
    block = yaml.safe_load(capsys.readouterr().out)
    assert block["ensemble"]["kind"] == "parallel" and len(block["ensemble"]["members"]) == 2
    body = "dataset: {manifest: data/manifest.tsv, detections: data/dets.jsonl}\n" + yaml.safe_dump(block)
    cfg = write_config(tmp_path / "e.yaml", body)
    assert main(["validate", "-c", str(cfg)]) == 0


def test_ensemble_config_empty_preserve(capsys):
    # with only suppression the highest-privacy methods win; k-Same members need a gallery
    code = main(["ensemble-config", "--preserve", "", "--reference-dataset", "gallery.txt"])
    assert code == 0
    assert yaml.safe_load(capsys.readouterr().out)["ensemble"]["members"]


def test_ensemble_config_needs_gallery_for_ksame(capsys):
    assert main(["ensemble-config", "--preserve", "gender"]) == 1


def test_ensemble_config_unknown_attribute(capsys):
    assert main(["ensemble-config", "--preserve", "height"]) == 1
    assert "height" in capsys.readouterr().err


def test_ensemble_config_custom_profiles(tmp_path, capsys):
    store = {"version": 1, "methods": {"blur_only": {"config": {"name": "blur", "params": {}},
                                                     "scores": {"age": 0.9, "privacy": 0.5}}}}
    (tmp_path / "p.json").write_text(json.dumps(store))
    assert main(["ensemble-config", "--preserve", "age", "--profiles", str(tmp_path / "p.json")]) == 0
    block = yaml.safe_load(capsys.readouterr().out)["ensemble"]
    assert block["members"] == [{"name": "blur", "params": {}}] and block["weights"] == [1.0]


def test_help_lists_every_accepted_key(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["--help"])
    top = capsys.readouterr().out
    with pytest.raises(SystemExit):
        build_parser().parse_args(["deid", "--help"])
    sub = capsys.readouterr().out
    keys = [k for k, _ in accepted_keys()]
    assert "method.params.kernel_size" in keys and "evaluation.threshold.mode" in keys
    for k in keys:
        assert k in top and k in sub


def test_help_exit_code():
    assert main(["--help"]) == 0


def test_version(capsys):
    assert main(["version"]) == 0
    assert capsys.readouterr().out.strip() == __version__


def test_module_entry_point(dataset_cfg):
    res = subprocess.run([sys.executable, "-m", "deidbench", "validate", "-c", str(dataset_cfg)],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout == ""
