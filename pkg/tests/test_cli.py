import numpy as np
import pytest

from tdfenc import read_feature_sequence, read_manifest
from tdfenc.cli import main
from tdfenc.encode import load_video_vector

SYNTH_SPEC = (
    "num_classes=2\n"
    "videos_per_class=8\n"
    "dims=8\n"
    "frames_min=48\n"
    "frames_max=72\n"
    "frequencies=0.1,0.35\n"
    "noise=0.25\n"
    "seed=13\n"
)

RUN_CONFIG = (
    "spectrum_length=64\n"
    "time_encoder=average\n"
    "dft_encoder=average\n"
    "fusion_time_norm=0.3\n"
    "fusion_dft_norm=1.0\n"
    "svm_c=100\n"
    "seed=5\n"
)


@pytest.fixture()
def dataset(tmp_path):
    spec_path = tmp_path / "synth.cfg"
    spec_path.write_text(SYNTH_SPEC, encoding="utf-8")
    data_dir = tmp_path / "data"
    assert main(["synth", "--spec", str(spec_path), "--out", str(data_dir)]) == 0
    config_path = tmp_path / "run.cfg"
    config_path.write_text(RUN_CONFIG, encoding="utf-8")
    return data_dir / "manifest.tsv", config_path


def test_synth_outputs_parse(dataset, capsys):
    manifest_path, _ = dataset
    capsys.readouterr()
    manifest = read_manifest(manifest_path)
    assert manifest.num_classes == 2
    for entry in manifest.entries:
        seq = read_feature_sequence(entry.feature_path, entry.video_id)
        assert seq.dims == 8


def test_synth_unwritable_dir_exits_3(tmp_path, capsys):
    spec_path = tmp_path / "synth.cfg"
    spec_path.write_text(SYNTH_SPEC, encoding="utf-8")
    code = main(["synth", "--spec", str(spec_path), "--out", "/proc/no_such_dir/out"])
    assert code == 3
    assert capsys.readouterr().err.strip() != ""


def test_synth_rerun_byte_identical(tmp_path):
    spec_path = tmp_path / "synth.cfg"
    spec_path.write_text(SYNTH_SPEC, encoding="utf-8")
    assert main(["synth", "--spec", str(spec_path), "--out", str(tmp_path / "a")]) == 0
    assert main(["synth", "--spec", str(spec_path), "--out", str(tmp_path / "b")]) == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_run_single_repetition(dataset, capsys):
    manifest_path, config_path = dataset
    capsys.readouterr()
    code = main(["run", "--config", str(config_path), "--manifest", str(manifest_path), "--repeat", "1"])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].split("\t") == ["run", "overall", "class_0", "class_1"]
    assert len(lines) == 3  # header, run 1, mean
    run_row = lines[1].split("\t")
    mean_row = lines[2].split("\t")
    assert run_row[0] == "1" and mean_row[0] == "mean"
    assert run_row[1:] == mean_row[1:]


def test_run_missing_config_exits_1(dataset, capsys):
    manifest_path, _ = dataset
    capsys.readouterr()
    code = main(["run", "--config", "/nope/run.cfg", "--manifest", str(manifest_path)])
    assert code == 1
    assert "/nope/run.cfg" in capsys.readouterr().err


def test_usage_error_exits_1(capsys):
    assert main(["run", "--bogus-flag"]) == 1
    assert capsys.readouterr().err.strip() != ""


def test_run_mean_matches_ten_rows(dataset, capsys):
    manifest_path, config_path = dataset
    capsys.readouterr()
    code = main(["run", "--config", str(config_path), "--manifest", str(manifest_path), "--repeat", "10"])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    rows = [line.split("\t") for line in lines[1:-1]]
    assert len(rows) == 10
    mean_row = lines[-1].split("\t")
    overall = [float(r[1]) for r in rows]
    assert float(mean_row[1]) == pytest.approx(np.mean(overall), abs=1e-6)


def test_run_missing_manifest_exits_2(dataset, capsys):
    _, config_path = dataset
    capsys.readouterr()
    code = main(["run", "--config", str(config_path), "--manifest", "/nope/manifest.tsv"])
    assert code == 2
    assert "manifest" in capsys.readouterr().err


def test_run_is_deterministic(dataset, capsys):
    manifest_path, config_path = dataset
    capsys.readouterr()
    argv = ["run", "--config", str(config_path), "--manifest", str(manifest_path), "--repeat", "2"]
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert main(argv) == 0
    second = capsys.readouterr().out
    assert first == second


def staged_pipeline(tmp_path, manifest_path, config_path, capsys):
    bundle_dir = tmp_path / "bundle"
    assert main(["fit", "--config", str(config_path), "--manifest", str(manifest_path),
                 "--out", str(bundle_dir)]) == 0
    for split in ("train", "test"):
        assert main(["encode", "--config", str(config_path), "--bundle", str(bundle_dir),
                     "--manifest", str(bundle_dir / f"{split}.tsv"),
                     "--out", str(tmp_path / f"enc_{split}")]) == 0
    model_path = tmp_path / "model.tdfm"
    assert main(["train", "--config", str(config_path),
                 "--vectors", str(tmp_path / "enc_train" / "index.tsv"),
                 "--out", str(model_path)]) == 0
    capsys.readouterr()
    assert main(["evaluate", "--model", str(model_path),
                 "--vectors", str(tmp_path / "enc_test" / "index.tsv")]) == 0
    return capsys.readouterr().out.strip().splitlines()


def test_staged_equals_monolithic(dataset, tmp_path, capsys):
    manifest_path, config_path = dataset
    capsys.readouterr()
    assert main(["run", "--config", str(config_path), "--manifest", str(manifest_path),
                 "--repeat", "1"]) == 0
    run_lines = capsys.readouterr().out.strip().splitlines()
    run_row = run_lines[1].split("\t")

    eval_lines = staged_pipeline(tmp_path, manifest_path, config_path, capsys)
    staged = dict(line.split("\t", 1) for line in eval_lines)
    assert staged["overall"] == run_row[1]
    assert staged["class_0"] == run_row[2]
    assert staged["class_1"] == run_row[3]


def test_predict_on_training_vectors(dataset, tmp_path, capsys):
    manifest_path, config_path = dataset
    bundle_dir = tmp_path / "bundle"
    assert main(["fit", "--config", str(config_path), "--manifest", str(manifest_path),
                 "--out", str(bundle_dir)]) == 0
    assert main(["encode", "--config", str(config_path), "--bundle", str(bundle_dir),
                 "--manifest", str(bundle_dir / "train.tsv"),
                 "--out", str(tmp_path / "enc_train")]) == 0
    model_path = tmp_path / "model.tdfm"
    assert main(["train", "--config", str(config_path),
                 "--vectors", str(tmp_path / "enc_train" / "index.tsv"),
                 "--out", str(model_path)]) == 0
    capsys.readouterr()
    assert main(["predict", "--model", str(model_path),
                 "--vectors", str(tmp_path / "enc_train" / "index.tsv")]) == 0
    out_lines = capsys.readouterr().out.strip().splitlines()
    index = read_manifest(tmp_path / "enc_train" / "index.tsv")
    labels = {e.video_id: e.label for e in index.entries}
    assert len(out_lines) == len(index.entries)
    for line in out_lines:
        fields = line.split("\t")
        assert len(fields) == 4  # id, class, two scores
        assert int(fields[1]) == labels[fields[0]]


def test_encode_with_mismatched_pca_dims_exits_2(dataset, tmp_path, capsys):
    manifest_path, config_path = dataset
    config_pca4 = tmp_path / "pca4.cfg"
    config_pca4.write_text(RUN_CONFIG + "pca_dims=4\n", encoding="utf-8")
    config_pca2 = tmp_path / "pca2.cfg"
    config_pca2.write_text(RUN_CONFIG + "pca_dims=2\n", encoding="utf-8")
    bundle_dir = tmp_path / "bundle"
    assert main(["fit", "--config", str(config_pca4), "--manifest", str(manifest_path),
                 "--out", str(bundle_dir)]) == 0
    capsys.readouterr()
    code = main(["encode", "--config", str(config_pca2), "--bundle", str(bundle_dir),
                 "--manifest", str(bundle_dir / "test.tsv"), "--out", str(tmp_path / "enc")])
    assert code == 2
    assert "pca stage" in capsys.readouterr().err


def test_encoded_vectors_load_back(dataset, tmp_path, capsys):
    manifest_path, config_path = dataset
    bundle_dir = tmp_path / "bundle"
    assert main(["fit", "--config", str(config_path), "--manifest", str(manifest_path),
                 "--out", str(bundle_dir)]) == 0
    assert main(["encode", "--config", str(config_path), "--bundle", str(bundle_dir),
                 "--manifest", str(bundle_dir / "test.tsv"),
                 "--out", str(tmp_path / "enc")]) == 0
    index = read_manifest(tmp_path / "enc" / "index.tsv")
    for entry in index.entries:
        vector = load_video_vector(entry.feature_path)
        assert vector.method == "fused"
        assert vector.dims == 8 + 64
