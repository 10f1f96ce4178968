"""Core domain types: volumes, label maps, the Dice metric, CT-style
preprocessing, and the run-length label codec used on disk and on the wire."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CLAMP_LO = -200.0
CLAMP_HI = 250.0

BACKGROUND = 0
ORGAN_A = 1
ORGAN_B = 2
ORGAN_CLASSES = (ORGAN_A, ORGAN_B)
NUM_CLASSES = 3

VOL_MAGIC = b"HITLVOL1"
LBL_MAGIC = b"HITLLBL1"

# one codec record: class code byte + little-endian uint32 run length
_RLE_DTYPE = np.dtype([("value", "u1"), ("run", "<u4")])

STATUS_UNLABELLED = "unlabelled"
STATUS_MACHINE = "machine_labelled"
STATUS_REFINED = "refined"


class ValidationError(ValueError):
    """Rejected input: an operation precondition does not hold."""


class CodecError(ValidationError):
    """Malformed byte stream fed to the label codec or file readers."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Volume:
    """3-D scalar intensity grid, flattened z-major (z outermost, then y, then x)."""

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    voxels: np.ndarray

    def __post_init__(self):
        d, h, w = self.dims
        if min(d, h, w) < 1:
            raise ValidationError(f"all dims must be >= 1, got {self.dims}")
        if min(self.spacing) <= 0:
            raise ValidationError(f"all spacing must be > 0, got {self.spacing}")
        vox = np.asarray(self.voxels, dtype=np.float64).reshape(-1)
        if vox.size != d * h * w:
            raise ValidationError(
                f"voxel count {vox.size} != {d}*{h}*{w}"
            )
        if not np.all(np.isfinite(vox)):
            raise ValidationError("voxel values must be finite")
        object.__setattr__(self, "dims", (int(d), int(h), int(w)))
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))
        object.__setattr__(self, "voxels", _freeze(vox))

    @property
    def voxel_count(self) -> int:
        d, h, w = self.dims
        return d * h * w

    def grid(self) -> np.ndarray:
        """Voxels as a (depth, height, width) view."""
        return self.voxels.reshape(self.dims)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Volume):
            return NotImplemented
        return (
            self.dims == other.dims
            and self.spacing == other.spacing
            and np.array_equal(self.voxels, other.voxels)
        )


@dataclass(frozen=True)
class LabelMap:
    """Per-voxel class codes {0 background, 1 organ-A, 2 organ-B}, z-major."""

    dims: tuple[int, int, int]
    labels: np.ndarray

    def __post_init__(self):
        d, h, w = self.dims
        if min(d, h, w) < 1:
            raise ValidationError(f"all dims must be >= 1, got {self.dims}")
        lab = np.asarray(self.labels).reshape(-1)
        if lab.size != d * h * w:
            raise ValidationError(f"label count {lab.size} != {d}*{h}*{w}")
        if lab.size and (lab.min() < 0 or lab.max() >= NUM_CLASSES):
            bad = sorted(set(np.unique(lab)) - {0, 1, 2})
            raise ValidationError(f"label codes must be in {{0,1,2}}, got {bad}")
        object.__setattr__(self, "dims", (int(d), int(h), int(w)))
        object.__setattr__(self, "labels", _freeze(lab.astype(np.uint8)))

    @property
    def voxel_count(self) -> int:
        d, h, w = self.dims
        return d * h * w

    def grid(self) -> np.ndarray:
        return self.labels.reshape(self.dims)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabelMap):
            return NotImplemented
        return self.dims == other.dims and np.array_equal(self.labels, other.labels)


@dataclass(frozen=True)
class Sample:
    """One case: intensity volume, hidden ground truth, and annotation bookkeeping.

    ``ground_truth`` is only for the annotator boundary (and evaluation on
    seed/test roles); the segmenter and selection strategy never read it
    except in explicitly-flagged oracle-difficulty mode.
    """

    id: str
    volume: Volume
    ground_truth: LabelMap
    prediction: LabelMap | None = None
    annotation: LabelMap | None = None
    status: str = STATUS_UNLABELLED
    annotation_time_min: float | None = None
    round_annotated: int | None = None

    def __post_init__(self):
        if self.status not in (STATUS_UNLABELLED, STATUS_MACHINE, STATUS_REFINED):
            raise ValidationError(f"unknown status {self.status!r}")
        refined = self.status == STATUS_REFINED
        if refined != (self.annotation is not None) or refined != (
            self.annotation_time_min is not None
        ):
            raise ValidationError(
                "status 'refined', annotation, and annotation_time_min must be "
                "present together"
            )
        if self.annotation_time_min is not None and self.annotation_time_min < 0:
            raise ValidationError("annotation_time_min must be >= 0")
        if self.ground_truth.dims != self.volume.dims:
            raise ValidationError("ground_truth dims must match volume dims")
        for lm in (self.prediction, self.annotation):
            if lm is not None and lm.dims != self.volume.dims:
                raise ValidationError("label dims must match volume dims")


ROLE_SEED = "seed"
ROLE_TARGET = "target"
ROLE_TEST = "test"


@dataclass(frozen=True)
class Dataset:
    role: str
    samples: tuple[Sample, ...]

    def __post_init__(self):
        if self.role not in (ROLE_SEED, ROLE_TARGET, ROLE_TEST):
            raise ValidationError(f"unknown dataset role {self.role!r}")
        object.__setattr__(self, "samples", tuple(self.samples))

    def ids(self) -> list[str]:
        return [s.id for s in self.samples]


@dataclass(frozen=True)
class DiceScore:
    per_class: dict[int, float]
    mean: float

    def __post_init__(self):
        for c, v in self.per_class.items():
            if not (0.0 <= v <= 1.0):
                raise ValidationError(f"Dice for class {c} out of [0,1]: {v}")
        if not (0.0 <= self.mean <= 1.0):
            raise ValidationError(f"mean Dice out of [0,1]: {self.mean}")


def dice(a: LabelMap, b: LabelMap) -> DiceScore:
    """Per-class Dice overlap 2|A∩B| / (|A|+|B|) for the two organ classes.

    Both supports empty counts as a perfect 1.0 so per-class means stay
    well-defined when a case lacks an organ.
    """
    if a.dims != b.dims:
        raise ValidationError(f"dimension mismatch: {a.dims} vs {b.dims}")
    per_class: dict[int, float] = {}
    for c in ORGAN_CLASSES:
        in_a = a.labels == c
        in_b = b.labels == c
        na = int(in_a.sum())
        nb = int(in_b.sum())
        if na + nb == 0:
            per_class[c] = 1.0
        else:
            per_class[c] = 2.0 * int((in_a & in_b).sum()) / (na + nb)
    mean = sum(per_class.values()) / len(per_class)
    return DiceScore(per_class=per_class, mean=mean)


def preprocess(v: Volume) -> Volume:
    """Clamp intensities to [-200, 250] then normalize the volume to zero mean
    and unit population variance. A zero-variance (constant) volume maps to
    all zeros."""
    clamped = np.clip(v.voxels, CLAMP_LO, CLAMP_HI)
    mu = clamped.mean()
    sigma = clamped.std()  # population std
    if sigma == 0.0:
        out = np.zeros_like(clamped)
    else:
        out = (clamped - mu) / sigma
    return Volume(dims=v.dims, spacing=v.spacing, voxels=out)


def rle_encode(m: LabelMap) -> bytes:
    """Encode z-major labels as (value: u8, run_length: u32 LE) pairs with
    maximal runs."""
    lab = m.labels
    # indices where a new run starts
    starts = np.flatnonzero(np.diff(lab)) + 1
    starts = np.concatenate(([0], starts))
    ends = np.concatenate((starts[1:], [lab.size]))
    out = np.empty(starts.size, dtype=_RLE_DTYPE)
    out["value"] = lab[starts]
    out["run"] = ends - starts
    return out.tobytes()


def rle_decode(data: bytes, dims: tuple[int, int, int]) -> LabelMap:
    """Invert :func:`rle_encode`. Rejects truncated streams, out-of-range
    class codes, and streams whose run lengths do not sum to the voxel
    count of ``dims``."""
    if len(data) % _RLE_DTYPE.itemsize != 0:
        raise CodecError(
            f"truncated RLE stream: {len(data)} bytes is not a multiple of "
            f"{_RLE_DTYPE.itemsize}"
        )
    pairs = np.frombuffer(data, dtype=_RLE_DTYPE)
    d, h, w = dims
    expected = d * h * w
    if pairs.size and pairs["value"].max() >= NUM_CLASSES:
        raise CodecError("RLE value outside {0,1,2}")
    total = int(pairs["run"].sum(dtype=np.int64))
    if total != expected:
        raise CodecError(f"RLE runs sum to {total}, expected {expected}")
    labels = np.repeat(pairs["value"], pairs["run"])
    return LabelMap(dims=dims, labels=labels)


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise CodecError(f"truncated file while reading {what}")
    return data


def _write_header(fh, magic: bytes, header: dict) -> None:
    payload = json.dumps(header, sort_keys=True).encode("utf-8")
    fh.write(magic)
    fh.write(struct.pack("<I", len(payload)))
    fh.write(payload)


def _read_header(fh, magic: bytes, path) -> dict:
    got = _read_exact(fh, len(magic), "magic")
    if got != magic:
        raise CodecError(f"{path}: bad magic {got!r}, expected {magic!r}")
    (hlen,) = struct.unpack("<I", _read_exact(fh, 4, "header length"))
    try:
        return json.loads(_read_exact(fh, hlen, "header").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CodecError(f"{path}: malformed JSON header: {exc}") from exc


def write_volume(path: str | Path, v: Volume) -> None:
    """.vol format: magic, length-prefixed JSON header, float32 LE voxels z-major."""
    with open(path, "wb") as fh:
        _write_header(fh, VOL_MAGIC, {"dims": list(v.dims), "spacing": list(v.spacing)})
        fh.write(v.voxels.astype("<f4").tobytes())


def read_volume(path: str | Path) -> Volume:
    with open(path, "rb") as fh:
        header = _read_header(fh, VOL_MAGIC, path)
        dims = tuple(int(x) for x in header["dims"])
        spacing = tuple(float(x) for x in header["spacing"])
        count = dims[0] * dims[1] * dims[2]
        raw = _read_exact(fh, 4 * count, "voxels")
        voxels = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    return Volume(dims=dims, spacing=spacing, voxels=voxels)


def write_labelmap(path: str | Path, m: LabelMap) -> None:
    """.lbl format: magic, length-prefixed JSON header, RLE byte stream."""
    with open(path, "wb") as fh:
        _write_header(fh, LBL_MAGIC, {"dims": list(m.dims)})
        fh.write(rle_encode(m))


def read_labelmap(path: str | Path) -> LabelMap:
    with open(path, "rb") as fh:
        header = _read_header(fh, LBL_MAGIC, path)
        dims = tuple(int(x) for x in header["dims"])
        return rle_decode(fh.read(), dims)
