"""Dataset ingestion, the ARAF container, and the batch runners.

Batch output is pinned structurally (naming scheme, manifest schema, line
order) and behaviorally: every manifest line must replay bit-exact from
its recorded seed and steps alone, and worker count must never change a
single output byte.
"""

import json
import struct

import numpy as np
import pytest
from PIL import Image

from waveaug import (
    DatasetManifest,
    DatasetRecord,
    InvalidParams,
    IoError,
    LayoutMismatch,
    MalformedAraf,
    MissingMetadata,
    Policy,
    RandomSource,
    SeedPlan,
    Waveform,
    apply_policy,
    default_space,
    ingest,
    read_araf,
    read_wav,
    run_augment,
    run_features,
    write_araf,
    write_wav,
)
from waveaug.dsp import MelParams
from waveaug.rng import splitmix64

SR = 8000


def tone(freq: float, n: int = 4000, amp: float = 0.5) -> Waveform:
    t = np.arange(n, dtype=np.float64) / SR
    return Waveform(amp * np.sin(2.0 * np.pi * freq * t), SR)


def make_fsdd(root, names=("0_theo_12.wav", "7_jackson_0.wav", "7_jackson_1.wav", "3_nicolas_4.wav")):
    root.mkdir(parents=True, exist_ok=True)
    for i, name in enumerate(names):
        write_wav(root / name, tone(200.0 + 50.0 * i))
    return root


def tree_bytes(root):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


class TestAraf:
    def test_roundtrip_2d(self, tmp_path):
        a = np.arange(12, dtype=np.float32).reshape(3, 4) / 7.0
        p = tmp_path / "t.araf"
        write_araf(p, a)
        b = read_araf(p)
        assert b.dtype == np.float32
        assert b.shape == (3, 4)
        assert np.array_equal(a, b)

    def test_roundtrip_other_ranks(self, tmp_path):
        for a in (np.linspace(-1, 1, 5, dtype=np.float32), np.zeros((2, 3, 4), dtype=np.float32)):
            p = tmp_path / "t.araf"
            write_araf(p, a)
            assert np.array_equal(read_araf(p), a)

    def test_float64_input_downcast(self, tmp_path):
        a = np.array([[0.1, 0.2]], dtype=np.float64)
        p = tmp_path / "t.araf"
        write_araf(p, a)
        assert np.array_equal(read_araf(p), a.astype(np.float32))

    def test_header_bytes(self, tmp_path):
        p = tmp_path / "t.araf"
        write_araf(p, np.zeros((3, 4), dtype=np.float32))
        raw = p.read_bytes()
        assert raw[:4] == b"ARAF"
        assert struct.unpack_from("<II", raw, 4) == (1, 2)
        assert struct.unpack_from("<II", raw, 12) == (3, 4)
        assert len(raw) == 20 + 4 * 12

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "t.araf"
        p.write_bytes(b"FARA" + b"\x00" * 20)
        with pytest.raises(MalformedAraf):
            read_araf(p)

    def test_short_file(self, tmp_path):
        p = tmp_path / "t.araf"
        p.write_bytes(b"ARAF\x01")
        with pytest.raises(MalformedAraf):
            read_araf(p)

    def test_bad_version(self, tmp_path):
        p = tmp_path / "t.araf"
        p.write_bytes(b"ARAF" + struct.pack("<II", 2, 1) + struct.pack("<I", 0))
        with pytest.raises(MalformedAraf):
            read_araf(p)

    def test_truncated_dims(self, tmp_path):
        p = tmp_path / "t.araf"
        p.write_bytes(b"ARAF" + struct.pack("<II", 1, 3) + struct.pack("<I", 2))
        with pytest.raises(MalformedAraf):
            read_araf(p)

    def test_payload_size_mismatch(self, tmp_path):
        p = tmp_path / "t.araf"
        good = b"ARAF" + struct.pack("<II", 1, 1) + struct.pack("<I", 4)
        p.write_bytes(good + b"\x00" * 8)  # claims 4 floats, carries 2
        with pytest.raises(MalformedAraf):
            read_araf(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoError):
            read_araf(tmp_path / "absent.araf")


class TestIngestFsdd:
    def test_labels_from_first_token(self, tmp_path):
        root = make_fsdd(tmp_path / "fsdd")
        manifest = ingest(root, "fsdd")
        assert manifest.layout == "fsdd"
        assert [(r.label, r.fold) for r in manifest.records] == [
            ("0", None),
            ("3", None),
            ("7", None),
            ("7", None),
        ]
        assert [r.source_path for r in manifest.records] == sorted(r.source_path for r in manifest.records)

    def test_name_without_separator_rejected(self, tmp_path):
        root = tmp_path / "fsdd"
        root.mkdir()
        write_wav(root / "noseparator.wav", tone(200.0))
        with pytest.raises(LayoutMismatch):
            ingest(root, "fsdd")

    def test_empty_label_token_rejected(self, tmp_path):
        root = tmp_path / "fsdd"
        root.mkdir()
        write_wav(root / "_theo_0.wav", tone(200.0))
        with pytest.raises(LayoutMismatch):
            ingest(root, "fsdd")


class TestIngestUrbansound:
    def build(self, tmp_path, rows, folds=("fold1", "fold3")):
        root = tmp_path / "us8k"
        for fold in folds:
            (root / fold).mkdir(parents=True)
        meta = root / "metadata"
        meta.mkdir()
        with open(meta / "UrbanSound8K.csv", "w", newline="") as fh:
            fh.write("slice_file_name,fsID,class\n")
            for name, cls in rows:
                fh.write(f"{name},1000,{cls}\n")
        return root

    def test_label_from_csv_and_fold_from_dir(self, tmp_path):
        root = self.build(tmp_path, [("100032-3-0-0.wav", "dog_bark"), ("101729-0-0-0.wav", "siren")])
        write_wav(root / "fold1" / "100032-3-0-0.wav", tone(200.0))
        write_wav(root / "fold3" / "101729-0-0-0.wav", tone(300.0))
        manifest = ingest(root, "urbansound8k")
        assert [(r.label, r.fold) for r in manifest.records] == [("dog_bark", 1), ("siren", 3)]

    def test_fold10_recognized_fold11_skipped(self, tmp_path):
        root = self.build(tmp_path, [("a.wav", "siren"), ("b.wav", "siren")], folds=("fold10", "fold11"))
        write_wav(root / "fold10" / "a.wav", tone(200.0))
        write_wav(root / "fold11" / "b.wav", tone(300.0))
        manifest = ingest(root, "urbansound8k")
        assert [(r.fold, r.label) for r in manifest.records] == [(10, "siren")]

    def test_stray_wav_outside_folds_ignored(self, tmp_path):
        root = self.build(tmp_path, [("a.wav", "siren")])
        write_wav(root / "fold1" / "a.wav", tone(200.0))
        write_wav(root / "readme_audio.wav", tone(300.0))
        assert len(ingest(root, "urbansound8k")) == 1

    def test_unlisted_file_rejected(self, tmp_path):
        root = self.build(tmp_path, [("a.wav", "siren")])
        write_wav(root / "fold1" / "mystery.wav", tone(200.0))
        with pytest.raises(LayoutMismatch):
            ingest(root, "urbansound8k")

    def test_missing_csv_rejected(self, tmp_path):
        root = tmp_path / "us8k"
        (root / "fold1").mkdir(parents=True)
        write_wav(root / "fold1" / "a.wav", tone(200.0))
        with pytest.raises(MissingMetadata):
            ingest(root, "urbansound8k")


class TestIngestFlat:
    def test_parent_dir_is_label(self, tmp_path):
        root = tmp_path / "data"
        (root / "dog").mkdir(parents=True)
        (root / "cat").mkdir()
        write_wav(root / "dog" / "a.wav", tone(200.0))
        write_wav(root / "cat" / "b.wav", tone(300.0))
        manifest = ingest(root, "flat")
        assert {(r.label) for r in manifest.records} == {"dog", "cat"}

    def test_root_level_file_gets_root_name(self, tmp_path):
        root = tmp_path / "mydata"
        root.mkdir()
        write_wav(root / "a.wav", tone(200.0))
        manifest = ingest(root, "flat")
        assert manifest.records[0].label == "mydata"

    def test_empty_dir_gives_empty_manifest(self, tmp_path):
        root = tmp_path / "empty"
        root.mkdir()
        assert len(ingest(root, "flat")) == 0

    def test_missing_dir_rejected(self, tmp_path):
        with pytest.raises(IoError):
            ingest(tmp_path / "absent", "flat")

    def test_unknown_layout_rejected(self, tmp_path):
        (tmp_path / "d").mkdir()
        with pytest.raises(InvalidParams):
            ingest(tmp_path / "d", "nested")


class TestManifestValidation:
    def test_duplicate_source_rejected(self):
        r = DatasetRecord("a.wav", "x")
        with pytest.raises(InvalidParams):
            DatasetManifest((r, r), "flat")

    def test_empty_label_rejected(self):
        with pytest.raises(InvalidParams):
            DatasetManifest((DatasetRecord("a.wav", ""),), "flat")

    def test_fold_required_for_urbansound(self):
        with pytest.raises(InvalidParams):
            DatasetManifest((DatasetRecord("a.wav", "x"),), "urbansound8k")
        with pytest.raises(InvalidParams):
            DatasetManifest((DatasetRecord("a.wav", "x", fold=11),), "urbansound8k")

    def test_fold_forbidden_elsewhere(self):
        with pytest.raises(InvalidParams):
            DatasetManifest((DatasetRecord("a.wav", "x", fold=1),), "flat")

    def test_bad_layout_rejected(self):
        with pytest.raises(InvalidParams):
            DatasetManifest((), "nested")


class TestRunAugment:
    def run(self, tmp_path, copies=3, workers=1, seed=42, out="out"):
        root = make_fsdd(tmp_path / "fsdd")
        manifest = ingest(root, "fsdd")
        report = run_augment(
            manifest, default_space(), 2, copies, SeedPlan(seed), tmp_path / out, workers=workers
        )
        return manifest, report, tmp_path / out

    def test_counts_and_naming(self, tmp_path):
        manifest, report, out = self.run(tmp_path)
        assert report.inputs_processed == 4
        assert report.outputs_written == 12
        assert report.failures == ()
        wavs = sorted(p.relative_to(out) for p in out.rglob("*.wav"))
        assert len(wavs) == 12
        assert str(wavs[0]) == "0/0_theo_12__c0.wav"
        assert all(str(p).endswith((".wav")) and "__c" in p.stem for p in wavs)

    def test_manifest_schema_and_order(self, tmp_path):
        manifest, report, out = self.run(tmp_path)
        lines = [json.loads(l) for l in (out / "manifest.jsonl").read_text().splitlines()]
        assert len(lines) == 12
        plan = SeedPlan(42)
        for line in lines:
            assert list(line) == ["source", "output", "label", "steps", "seed"]
            copy = int(line["output"].rsplit("__c", 1)[1].split(".")[0])
            assert line["seed"] == plan.derive(line["source"], copy)
            assert len(line["steps"]) == 2
        # lines come out in (record, copy) order regardless of scheduling
        assert [l["output"] for l in lines] == sorted(
            (l["output"] for l in lines),
            key=lambda o: (o.rsplit("__c", 1)[0], int(o.rsplit("__c", 1)[1].split(".")[0])),
        )

    def test_every_line_replays_bit_exact(self, tmp_path):
        manifest, report, out = self.run(tmp_path, copies=2)
        for raw in (out / "manifest.jsonl").read_text().splitlines():
            line = json.loads(raw)
            w = read_wav(line["source"])
            policy = Policy.from_obj(line["steps"])
            redo = apply_policy(w, policy, RandomSource(splitmix64(line["seed"])))
            got = read_wav(out / line["output"])
            assert np.array_equal(got.samples, redo.samples.astype(np.float32).astype(np.float64))
            assert got.sample_rate == redo.sample_rate

    def test_worker_count_never_changes_bytes(self, tmp_path):
        _, _, out1 = self.run(tmp_path, workers=1, out="w1")
        _, _, out4 = self.run(tmp_path, workers=4, out="w4")
        assert tree_bytes(out1) == tree_bytes(out4)

    def test_corrupt_input_collected_not_fatal(self, tmp_path):
        root = make_fsdd(tmp_path / "fsdd")
        (root / "9_broken_0.wav").write_bytes(b"RIFFnope")
        manifest = ingest(root, "fsdd")
        report = run_augment(manifest, default_space(), 2, 1, SeedPlan(0), tmp_path / "out")
        assert report.inputs_processed == 5
        assert report.outputs_written == 4
        assert len(report.failures) == 1
        assert report.failures[0][0].endswith("9_broken_0.wav")
        lines = (tmp_path / "out" / "manifest.jsonl").read_text().splitlines()
        assert len(lines) == 4

    def test_output_collision_marks_later_item(self, tmp_path):
        root = tmp_path / "data"
        (root / "dog").mkdir(parents=True)
        (root / "more" / "dog").mkdir(parents=True)
        write_wav(root / "dog" / "x.wav", tone(200.0))
        write_wav(root / "more" / "dog" / "x.wav", tone(300.0))
        manifest = ingest(root, "flat")
        report = run_augment(manifest, default_space(), 1, 1, SeedPlan(0), tmp_path / "out")
        assert report.outputs_written == 1
        assert len(report.failures) == 1
        assert "collision" in report.failures[0][1]
        # the survivor is the earlier record in manifest order
        line = json.loads((tmp_path / "out" / "manifest.jsonl").read_text())
        assert line["source"] == manifest.records[0].source_path

    def test_empty_manifest_writes_empty_manifest_file(self, tmp_path):
        root = tmp_path / "empty"
        root.mkdir()
        manifest = ingest(root, "flat")
        report = run_augment(manifest, default_space(), 2, 1, SeedPlan(0), tmp_path / "out")
        assert report.inputs_processed == 0
        assert report.outputs_written == 0
        assert (tmp_path / "out" / "manifest.jsonl").read_text() == ""

    def test_bad_copies_and_workers(self, tmp_path):
        manifest = DatasetManifest((), "flat")
        with pytest.raises(InvalidParams):
            run_augment(manifest, default_space(), 2, 0, SeedPlan(0), tmp_path / "out")
        with pytest.raises(InvalidParams):
            run_augment(manifest, default_space(), 2, 1, SeedPlan(0), tmp_path / "out", workers=0)

    def test_report_obj_shape(self, tmp_path):
        _, report, _ = self.run(tmp_path, copies=1)
        obj = report.to_obj()
        assert set(obj) == {"inputs_processed", "outputs_written", "failures", "wall_time", "master_seed"}
        assert obj["master_seed"] == 42
        assert obj["wall_time"] >= 0.0


class TestRunFeatures:
    def make_dir(self, tmp_path):
        root = tmp_path / "wavs"
        (root / "dog").mkdir(parents=True)
        write_wav(root / "dog" / "a.wav", tone(400.0))
        write_wav(root / "dog" / "b.wav", tone(800.0))
        return root

    def test_dir_source_resized_payloads(self, tmp_path):
        root = self.make_dir(tmp_path)
        report = run_features(root, tmp_path / "feat", resize=(32, 32))
        assert report.inputs_processed == 2
        assert report.outputs_written == 2
        assert report.failures == ()
        for name in ("a", "b"):
            arr = read_araf(tmp_path / "feat" / "dog" / f"{name}.araf")
            assert arr.shape == (32, 32)
            assert arr.dtype == np.float32
            assert np.isfinite(arr).all()

    def test_no_resize_keeps_native_shape(self, tmp_path):
        root = self.make_dir(tmp_path)
        run_features(root, tmp_path / "feat", params=MelParams(n_fft=1024, hop=512, n_mels=64), resize=None)
        arr = read_araf(tmp_path / "feat" / "dog" / "a.araf")
        assert arr.shape == (64, 4000 // 512 + 1)

    def test_manifest_source_mirrors_label_dirs(self, tmp_path):
        root = make_fsdd(tmp_path / "fsdd")
        manifest = ingest(root, "fsdd")
        run_augment(manifest, default_space(), 1, 1, SeedPlan(3), tmp_path / "aug")
        report = run_features(tmp_path / "aug" / "manifest.jsonl", tmp_path / "feat")
        assert report.outputs_written == 4
        assert (tmp_path / "feat" / "7" / "7_jackson_0__c0.araf").exists()

    def test_png_export(self, tmp_path):
        root = self.make_dir(tmp_path)
        run_features(root, tmp_path / "feat", resize=(32, 32), png=True)
        img = Image.open(tmp_path / "feat" / "dog" / "a.png")
        assert img.mode == "L"
        assert img.size == (32, 32)

    def test_silent_input_gives_constant_image(self, tmp_path):
        root = tmp_path / "wavs"
        root.mkdir()
        write_wav(root / "silence.wav", Waveform(np.zeros(4000), SR))
        run_features(root, tmp_path / "feat", resize=(16, 16), png=True)
        arr = read_araf(tmp_path / "feat" / "silence.araf")
        assert np.all(arr == arr.flat[0])
        img = np.asarray(Image.open(tmp_path / "feat" / "silence.png"))
        assert np.all(img == 128)  # flat images render mid-gray

    def test_worker_parity(self, tmp_path):
        root = self.make_dir(tmp_path)
        run_features(root, tmp_path / "f1", workers=1)
        run_features(root, tmp_path / "f4", workers=4)
        assert tree_bytes(tmp_path / "f1") == tree_bytes(tmp_path / "f4")

    def test_corrupt_wav_collected(self, tmp_path):
        root = self.make_dir(tmp_path)
        (root / "dog" / "zz_bad.wav").write_bytes(b"not audio")
        report = run_features(root, tmp_path / "feat")
        assert report.inputs_processed == 3
        assert report.outputs_written == 2
        assert len(report.failures) == 1

    def test_bad_args(self, tmp_path):
        with pytest.raises(IoError):
            run_features(tmp_path / "absent", tmp_path / "feat")
        root = self.make_dir(tmp_path)
        with pytest.raises(InvalidParams):
            run_features(root, tmp_path / "feat", resize=(0, 32))
        with pytest.raises(InvalidParams):
            run_features(root, tmp_path / "feat", workers=0)
