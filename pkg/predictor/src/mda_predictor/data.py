"""Reader for exported mode-window datasets.

The upstream decomposition CLI writes a directory of mode CSV files plus a
manifest.json naming them per channel. Only that on-disk contract is consumed
here; the decomposition package itself is never imported. A mode file carries
'#'-prefixed metadata lines (k, sample rate, mode centers), a
time,mode_1..K,residual header, and one float row per sample. The residual
column is not a prediction target and is dropped on read.
"""
import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DataError, InvalidInputError

MANIFEST_NAME = "manifest.json"
_REQUIRED_MANIFEST_KEYS = ("window", "history", "k", "sample_rate_hz", "channels")


@dataclass(frozen=True)
class ModeFile:
    """One decomposed window: K mode waveforms over L samples."""

    samples: np.ndarray
    sample_rate_hz: float
    centers_hz: tuple

    @property
    def k(self) -> int:
        return self.samples.shape[0]

    @property
    def length(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class WindowItem:
    """One training example: paired human/robot histories and futures.

    prev_* hold the window h samples earlier when the file is long enough,
    letting the scheduled-sampling path rebuild the input tail from a model
    prediction; None means this item is always teacher-forced.
    """

    human_in: np.ndarray
    human_tgt: np.ndarray
    robot_in: np.ndarray
    robot_tgt: np.ndarray
    prev_human: Optional[np.ndarray]
    prev_robot: Optional[np.ndarray]
    source: str


def read_manifest(data_dir) -> dict:
    path = Path(data_dir) / MANIFEST_NAME
    try:
        with open(path) as handle:
            manifest = json.load(handle)
    except OSError as exc:
        raise DataError(f"cannot read manifest: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(manifest, dict):
        raise DataError(f"{path}: expected a JSON object")
    missing = [key for key in _REQUIRED_MANIFEST_KEYS if key not in manifest]
    if missing:
        raise DataError(f"{path}: manifest is missing keys {missing}")
    if not isinstance(manifest["channels"], dict) or not manifest["channels"]:
        raise DataError(f"{path}: manifest lists no channels")
    return manifest


def _meta_value(meta: dict, key: str, path) -> str:
    if key not in meta:
        raise DataError(f"{path}: missing '# {key}=' metadata line")
    return meta[key]


def read_mode_file(path) -> ModeFile:
    path = Path(path)
    meta = {}
    rows = []
    header = None
    try:
        with open(path, newline="") as handle:
            for record in csv.reader(handle):
                if not record:
                    continue
                if record[0].lstrip().startswith("#"):
                    text = ",".join(record).lstrip("# ").strip()
                    key, _, value = text.partition("=")
                    meta[key.strip()] = value.strip()
                    continue
                if header is None:
                    header = [cell.strip() for cell in record]
                    continue
                rows.append(record)
    except OSError as exc:
        raise DataError(f"cannot read mode file: {exc}") from exc
    if header is None or not rows:
        raise DataError(f"{path}: no data rows")
    try:
        k = int(_meta_value(meta, "k", path))
        rate = float(_meta_value(meta, "sample_rate_hz", path))
        centers = tuple(float(part) for part in
                        _meta_value(meta, "omegas_hz", path).split(","))
    except ValueError as exc:
        raise DataError(f"{path}: bad metadata value ({exc})") from exc
    expected = ["time"] + [f"mode_{i + 1}" for i in range(k)] + ["residual"]
    if header != expected:
        raise DataError(f"{path}: header {header} does not match k={k} layout")
    if len(centers) != k:
        raise DataError(f"{path}: {len(centers)} centers for k={k}")
    samples = np.empty((k, len(rows)), dtype=np.float64)
    for row_index, record in enumerate(rows):
        if len(record) != len(expected):
            raise DataError(f"{path}: row {row_index + 1} has {len(record)} cells, "
                            f"expected {len(expected)}")
        try:
            for mode_index in range(k):
                samples[mode_index, row_index] = float(record[1 + mode_index])
        except ValueError as exc:
            raise DataError(f"{path}: row {row_index + 1}: {exc}") from exc
    return ModeFile(samples=samples, sample_rate_hz=rate, centers_hz=centers)


def build_windows(data_dir, human: str, robot: str, w: int, h: int,
                  stride: int = 0) -> list:
    """Slice every paired human/robot mode file into (w history, h future)
    training items. stride 0 means h (non-overlapping futures)."""
    if w < 1 or h < 1:
        raise InvalidInputError("w and h must be positive")
    if stride < 0:
        raise InvalidInputError("stride must be non-negative")
    stride = stride or h
    data_dir = Path(data_dir)
    manifest = read_manifest(data_dir)
    channels = manifest["channels"]
    for name in (human, robot):
        if name not in channels:
            raise DataError(f"channel {name!r} not in manifest "
                            f"(available: {sorted(channels)})")
    human_files = channels[human]
    robot_files = channels[robot]
    if len(human_files) != len(robot_files):
        raise DataError(f"side file counts differ: {len(human_files)} human vs "
                        f"{len(robot_files)} robot")
    items = []
    for human_name, robot_name in zip(human_files, robot_files):
        human_modes = read_mode_file(data_dir / human_name)
        robot_modes = read_mode_file(data_dir / robot_name)
        for modes, name in ((human_modes, human_name), (robot_modes, robot_name)):
            if modes.k != manifest["k"]:
                raise DataError(f"{name}: k={modes.k} but manifest says "
                                f"{manifest['k']}")
        if human_modes.length != robot_modes.length:
            raise DataError(f"{human_name}/{robot_name}: lengths differ")
        length = human_modes.length
        if length < w + h:
            raise DataError(
                f"{human_name}: {length} samples cannot fit w={w} plus h={h}; "
                f"re-export with a longer history")
        for offset in range(0, length - w - h + 1, stride):
            def window(modes, start):
                return modes.samples[:, start:start + w].copy()

            prev_h = prev_r = None
            if offset >= h:
                prev_h = window(human_modes, offset - h)
                prev_r = window(robot_modes, offset - h)
            items.append(WindowItem(
                human_in=window(human_modes, offset),
                human_tgt=human_modes.samples[:, offset + w:offset + w + h].copy(),
                robot_in=window(robot_modes, offset),
                robot_tgt=robot_modes.samples[:, offset + w:offset + w + h].copy(),
                prev_human=prev_h, prev_robot=prev_r,
                source=f"{human_name}+{offset}"))
    if not items:
        raise DataError("dataset produced no windows")
    return items


def split_items(items, fractions=(0.7, 0.2, 0.1)) -> tuple:
    """Sequential train/validation/test split; order is file-then-offset, so
    the split is deterministic for a given export."""
    if abs(sum(fractions) - 1.0) > 1e-9 or len(fractions) != 3:
        raise InvalidInputError("fractions must be three numbers summing to 1")
    n = len(items)
    n_train = int(n * fractions[0])
    n_val = int(n * fractions[1])
    train, val = items[:n_train], items[n_train:n_train + n_val]
    test = items[n_train + n_val:]
    if not train or not val:
        raise DataError(f"{n} windows is too few to split "
                        f"{fractions[0]:.0%}/{fractions[1]:.0%}/{fractions[2]:.0%}")
    return train, val, test
