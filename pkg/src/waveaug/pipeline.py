"""Dataset ingestion, parallel batch augmentation, and feature export.

Batch runs are deterministic by construction: every (source file, copy)
work item derives its own seed from the :class:`~waveaug.policy.SeedPlan`,
samples a policy on one stream and applies it on another, so output bytes
depend only on (dataset bytes, config, master seed) and never on worker
count or scheduling order.

Features are stored in ARAF, a deliberately boring binary tensor format:

    magic "ARAF" | u32 version=1 | u32 ndim | ndim x u32 dims | float32 payload

all little-endian, payload row-major.  Bit-exact round trips make golden
tests portable.
"""

from __future__ import annotations

import csv
import json
import re
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .dsp import MelParams, mel_spectrogram, resize_bilinear
from .errors import (
    InvalidParams,
    IoError,
    LayoutMismatch,
    MalformedAraf,
    MissingMetadata,
    WaveaugError,
)
from .policy import SearchSpace, SeedPlan, apply_policy, sample_policy
from .rng import RandomSource, splitmix64
from .signal import read_wav, write_wav

ARAF_MAGIC = b"ARAF"
ARAF_VERSION = 1

_FOLD_DIR = re.compile(r"^fold([1-9]|10)$")

LAYOUTS = ("fsdd", "urbansound8k", "flat")


@dataclass(frozen=True)
class DatasetRecord:
    source_path: str
    label: str
    fold: int | None = None


@dataclass(frozen=True)
class DatasetManifest:
    """Resolved (source, label) records in lexicographic path order."""

    records: tuple[DatasetRecord, ...]
    layout: str

    def __post_init__(self):
        if self.layout not in LAYOUTS:
            raise InvalidParams(f"layout must be one of {LAYOUTS}, got {self.layout!r}")
        seen = set()
        for r in self.records:
            if r.source_path in seen:
                raise InvalidParams(f"duplicate source path {r.source_path!r}")
            seen.add(r.source_path)
            if not r.label:
                raise InvalidParams(f"{r.source_path}: empty label")
            if self.layout == "urbansound8k":
                if r.fold is None or not 1 <= r.fold <= 10:
                    raise InvalidParams(f"{r.source_path}: fold must be in [1, 10], got {r.fold}")
            elif r.fold is not None:
                raise InvalidParams(f"{r.source_path}: fold is only meaningful for urbansound8k")

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class RunReport:
    inputs_processed: int
    outputs_written: int
    failures: tuple[tuple[str, str], ...]
    wall_time: float
    master_seed: int

    def to_obj(self) -> dict:
        return {
            "inputs_processed": self.inputs_processed,
            "outputs_written": self.outputs_written,
            "failures": [{"path": p, "error": e} for p, e in self.failures],
            "wall_time": self.wall_time,
            "master_seed": self.master_seed,
        }


def _sorted_wavs(root: Path) -> list[Path]:
    return sorted(root.rglob("*.wav"), key=lambda p: str(p))


def _ingest_fsdd(root: Path) -> list[DatasetRecord]:
    records = []
    for p in _sorted_wavs(root):
        stem = p.stem
        if "_" not in stem or not stem.split("_")[0]:
            raise LayoutMismatch(f"{p}: fsdd filenames look like <label>_<speaker>_<index>.wav")
        records.append(DatasetRecord(str(p), stem.split("_")[0]))
    return records


def _load_us8k_labels(root: Path) -> dict[str, str]:
    for csv_path in sorted(root.rglob("*.csv"), key=lambda p: str(p)):
        with open(csv_path, newline="") as fh:
            reader = csv.DictReader(fh)
            names = reader.fieldnames or []
            if "slice_file_name" in names and "class" in names:
                return {row["slice_file_name"]: row["class"] for row in reader}
    raise MissingMetadata(f"{root}: no CSV with slice_file_name/class columns found")


def _ingest_us8k(root: Path) -> list[DatasetRecord]:
    labels = _load_us8k_labels(root)
    records = []
    for p in _sorted_wavs(root):
        m = _FOLD_DIR.match(p.parent.name)
        if m is None:
            continue  # stray WAVs outside fold directories are not dataset members
        label = labels.get(p.name)
        if label is None:
            raise LayoutMismatch(f"{p}: not listed in the metadata CSV")
        records.append(DatasetRecord(str(p), label, fold=int(m.group(1))))
    return records


def _ingest_flat(root: Path) -> list[DatasetRecord]:
    records = []
    for p in _sorted_wavs(root):
        label = p.parent.name if p.parent != root else root.resolve().name
        records.append(DatasetRecord(str(p), label))
    return records


def ingest(root, layout: str) -> DatasetManifest:
    """Scan a dataset directory into a manifest.

    fsdd: label is the first underscore token of the filename.
    urbansound8k: fold from the directory name, label from the metadata CSV.
    flat: label is the immediate parent directory name.
    """
    root = Path(root)
    if not root.is_dir():
        raise IoError(f"{root}: not a directory")
    if layout == "fsdd":
        records = _ingest_fsdd(root)
    elif layout == "urbansound8k":
        records = _ingest_us8k(root)
    elif layout == "flat":
        records = _ingest_flat(root)
    else:
        raise InvalidParams(f"layout must be one of {LAYOUTS}, got {layout!r}")
    return DatasetManifest(tuple(records), layout)


def write_araf(path, array: np.ndarray) -> None:
    """Write a float32 tensor in the ARAF container."""
    array = np.ascontiguousarray(array, dtype="<f4")
    header = ARAF_MAGIC + struct.pack("<II", ARAF_VERSION, array.ndim)
    header += struct.pack(f"<{array.ndim}I", *array.shape)
    try:
        Path(path).write_bytes(header + array.tobytes())
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_araf(path) -> np.ndarray:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if len(raw) < 12 or raw[:4] != ARAF_MAGIC:
        raise MalformedAraf(f"{path}: missing ARAF magic")
    version, ndim = struct.unpack_from("<II", raw, 4)
    if version != ARAF_VERSION:
        raise MalformedAraf(f"{path}: unsupported version {version}")
    if len(raw) < 12 + 4 * ndim:
        raise MalformedAraf(f"{path}: truncated dimension list")
    dims = struct.unpack_from(f"<{ndim}I", raw, 12)
    count = int(np.prod(dims)) if ndim else 1
    payload = raw[12 + 4 * ndim :]
    if len(payload) != 4 * count:
        raise MalformedAraf(f"{path}: payload is {len(payload)} bytes, expected {4 * count}")
    return np.frombuffer(payload, dtype="<f4").reshape(dims)


@dataclass(frozen=True)
class _AugmentItem:
    order: tuple[int, int]  # (record index, copy index)
    record: DatasetRecord
    copy_index: int
    seed: int
    rel_output: str


def _plan_augment(manifest: DatasetManifest, copies: int, seed_plan: SeedPlan) -> list[_AugmentItem]:
    items = []
    for rec_idx, record in enumerate(manifest.records):
        stem = Path(record.source_path).stem
        for copy in range(copies):
            items.append(
                _AugmentItem(
                    order=(rec_idx, copy),
                    record=record,
                    copy_index=copy,
                    seed=seed_plan.derive(record.source_path, copy),
                    rel_output=f"{record.label}/{stem}__c{copy}.wav",
                )
            )
    return items


def _run_items(items, job, workers: int) -> list:
    if workers == 1:
        return [job(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, items))


def run_augment(
    manifest: DatasetManifest,
    space: SearchSpace,
    n: int,
    copies: int,
    seed_plan: SeedPlan,
    out_dir,
    workers: int = 1,
) -> RunReport:
    """Augment every (file, copy) pair and write WAVs plus manifest.jsonl.

    Output naming is `<label>/<stem>__c<copy>.wav` under out_dir.  Per-file
    failures are collected and the run continues; manifest lines are merged
    in (record, copy) order after all workers finish, so the manifest bytes
    do not depend on scheduling.
    """
    if copies < 1:
        raise InvalidParams(f"copies must be >= 1, got {copies}")
    if workers < 1:
        raise InvalidParams(f"workers must be >= 1, got {workers}")
    started = time.perf_counter()
    out_root = Path(out_dir)
    try:
        out_root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {out_root}: {exc}") from exc

    items = _plan_augment(manifest, copies, seed_plan)

    # two sources can share label+stem; the later item loses deterministically
    planned: dict[str, tuple[int, int]] = {}
    collisions: set[tuple[int, int]] = set()
    for item in items:
        if item.rel_output in planned:
            collisions.add(item.order)
        else:
            planned[item.rel_output] = item.order

    def job(item: _AugmentItem):
        if item.order in collisions:
            return item, None, f"output path collision on {item.rel_output}"
        try:
            w = read_wav(item.record.source_path)
            policy = sample_policy(space, n, RandomSource(item.seed))
            out = apply_policy(w, policy, RandomSource(splitmix64(item.seed)))
            dest = out_root / item.rel_output
            dest.parent.mkdir(parents=True, exist_ok=True)
            write_wav(dest, out)
        except (WaveaugError, OSError) as exc:
            # class name kept so report consumers can map the error kind
            return item, None, f"{type(exc).__name__}: {exc}"
        line = {
            "source": item.record.source_path,
            "output": item.rel_output,
            "label": item.record.label,
            "steps": policy.to_obj(),
            "seed": item.seed,
        }
        return item, line, None

    results = _run_items(items, job, workers)
    results.sort(key=lambda r: r[0].order)

    failures = []
    lines = []
    for item, line, err in results:
        if err is not None:
            failures.append((item.record.source_path, err))
        else:
            lines.append(json.dumps(line))
    try:
        (out_root / "manifest.jsonl").write_text("".join(f"{line}\n" for line in lines))
    except OSError as exc:
        raise IoError(f"cannot write manifest: {exc}") from exc

    return RunReport(
        inputs_processed=len(manifest),
        outputs_written=len(lines),
        failures=tuple(failures),
        wall_time=time.perf_counter() - started,
        master_seed=seed_plan.master_seed,
    )


def _feature_sources(source) -> tuple[Path, list[Path]]:
    """Resolve a manifest.jsonl or a directory into (base_dir, wav paths)."""
    src = Path(source)
    if src.is_file():
        base = src.parent
        paths = []
        with open(src) as fh:
            for raw in fh:
                raw = raw.strip()
                if raw:
                    paths.append(base / json.loads(raw)["output"])
        return base, paths
    if src.is_dir():
        return src, _sorted_wavs(src)
    raise IoError(f"{src}: no such file or directory")


def _write_png(path: Path, values: np.ndarray) -> None:
    lo, hi = float(values.min()), float(values.max())
    if hi > lo:
        gray = np.rint((values - lo) / (hi - lo) * 255.0).astype(np.uint8)
    else:
        gray = np.full(values.shape, 128, dtype=np.uint8)
    Image.fromarray(gray, mode="L").save(path)


def run_features(
    source,
    out_dir,
    params: MelParams | None = None,
    resize: tuple[int, int] | None = (32, 32),
    png: bool = False,
    workers: int = 1,
) -> RunReport:
    """Export a (possibly resized) dB mel-spectrogram per WAV.

    ``source`` is either a directory of WAVs or a manifest.jsonl from
    :func:`run_augment`.  Each input `<stem>.wav` becomes `<stem>.araf`
    (and `<stem>.png` when requested) mirroring its subdirectory.
    """
    if resize is not None and (resize[0] < 1 or resize[1] < 1):
        raise InvalidParams(f"resize dims must be >= 1, got {resize}")
    if workers < 1:
        raise InvalidParams(f"workers must be >= 1, got {workers}")
    params = params or MelParams()
    started = time.perf_counter()
    base, wavs = _feature_sources(source)
    out_root = Path(out_dir)
    try:
        out_root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {out_root}: {exc}") from exc

    def job(wav_path: Path):
        try:
            rel = wav_path.relative_to(base) if wav_path.is_relative_to(base) else Path(wav_path.name)
            image = mel_spectrogram(read_wav(wav_path), params)
            if resize is not None:
                image = resize_bilinear(image, resize[0], resize[1])
            dest = (out_root / rel).with_suffix(".araf")
            dest.parent.mkdir(parents=True, exist_ok=True)
            write_araf(dest, image.values.astype("<f4"))
            if png:
                _write_png(dest.with_suffix(".png"), image.values)
        except (WaveaugError, OSError) as exc:
            return str(wav_path), f"{type(exc).__name__}: {exc}"
        return None

    failures = tuple(r for r in _run_items(wavs, job, workers) if r is not None)
    return RunReport(
        inputs_processed=len(wavs),
        outputs_written=len(wavs) - len(failures),
        failures=failures,
        wall_time=time.perf_counter() - started,
        master_seed=0,
    )
