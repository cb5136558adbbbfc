"""On-disk corpus formats.

Spatial features (binary, little-endian):
  magic "LXPF" | version u32 | image count u32 | K u32 | D u32
  per image: image_id u64 | K*D float32
Captions (UTF-8 text): one record per line, image_id TAB language TAB caption.
Vocabulary (UTF-8 text): index TAB word TAB count, reserved rows included.
"""

from __future__ import annotations

import struct

import numpy as np

from ..errors import FormatError, InputError
from .vocab import RESERVED, RawCaption, Vocabulary

FEATURES_MAGIC = b"LXPF"
FEATURES_VERSION = 1


def write_features(path, features: dict[int, np.ndarray]) -> None:
    if not features:
        raise InputError("refusing to write an empty features file")
    ids = sorted(features)
    k, d = features[ids[0]].shape
    for image_id in ids:
        if features[image_id].shape != (k, d):
            raise InputError(
                f"image {image_id} has shape {features[image_id].shape}, expected {(k, d)}")
    with open(path, "wb") as fh:
        fh.write(FEATURES_MAGIC)
        fh.write(struct.pack("<IIII", FEATURES_VERSION, len(ids), k, d))
        for image_id in ids:
            fh.write(struct.pack("<Q", image_id))
            fh.write(np.ascontiguousarray(features[image_id], dtype="<f4").tobytes())


def read_features(path) -> dict[int, np.ndarray]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != FEATURES_MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:4]!r}, expected {FEATURES_MAGIC!r}")
    if len(blob) < 20:
        raise FormatError(f"{path}: truncated header ({len(blob)} bytes)")
    version, count, k, d = struct.unpack_from("<IIII", blob, 4)
    if version != FEATURES_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    record = 8 + 4 * k * d
    expected = 20 + count * record
    if len(blob) != expected:
        raise FormatError(
            f"{path}: expected {expected} bytes for {count} images of {k}x{d} "
            f"features, found {len(blob)} (region count varies or file is truncated)")
    features: dict[int, np.ndarray] = {}
    offset = 20
    for _ in range(count):
        (image_id,) = struct.unpack_from("<Q", blob, offset)
        if image_id in features:
            raise FormatError(f"{path}: duplicate image id {image_id} at offset {offset}")
        offset += 8
        arr = np.frombuffer(blob, dtype="<f4", count=k * d, offset=offset)
        features[image_id] = arr.reshape(k, d).copy()
        offset += 4 * k * d
    return features


def write_captions(path, captions: list[RawCaption]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for cap in captions:
            fh.write(f"{cap.image_id}\t{cap.language_id}\t{cap.text}\n")


def read_captions(path, language: str | None = None) -> list[RawCaption]:
    """Parse caption records; tokenization is whitespace + lowercase."""
    rows: list[RawCaption] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise FormatError(
                    f"{path}:{lineno}: expected 3 tab-separated fields, got {len(parts)}")
            raw_id, lang, text = parts
            try:
                image_id = int(raw_id)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: image id {raw_id!r} is not an integer") from exc
            words = tuple(text.lower().split())
            if not words:
                raise FormatError(f"{path}:{lineno}: empty caption text")
            if language is None or lang == language:
                rows.append(RawCaption(image_id=image_id, language_id=lang, words=words))
    return rows


def load_external_dataset(features_path, captions_path, language: str):
    """Load precomputed spatial features plus the captions of one language.

    Every caption must reference an image present in the features file.
    """
    features = read_features(features_path)
    captions = read_captions(captions_path, language=language)
    for i, cap in enumerate(captions, start=1):
        if cap.image_id not in features:
            raise FormatError(
                f"{captions_path}: caption record {i} references unknown image id "
                f"{cap.image_id}")
    return features, captions


def write_vocabulary(path, vocab: Vocabulary) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for index, word in enumerate(vocab.index_to_word):
            count = vocab.counts.get(word, 0)
            fh.write(f"{index}\t{word}\t{count}\n")


def read_vocabulary(path, language: str) -> Vocabulary:
    words: list[str] = []
    counts: dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise FormatError(f"{path}:{lineno}: expected 3 fields, got {len(parts)}")
            try:
                index, count = int(parts[0]), int(parts[2])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: non-integer index or count") from exc
            if index != len(words):
                raise FormatError(f"{path}:{lineno}: index {index} out of order")
            words.append(parts[1])
            counts[parts[1]] = count
    if words[: len(RESERVED)] != list(RESERVED):
        raise FormatError(f"{path}: reserved token rows are missing or reordered")
    return Vocabulary(language_id=language, index_to_word=words,
                      counts={w: c for w, c in counts.items() if w not in RESERVED})
