"""Deterministic synthetic dataset generator: two ellipsoid "organs" in a
noisy CT-like background, with a configurable domain shift between the seed
and target distributions."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace, asdict
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .core import (
    Dataset,
    LabelMap,
    ROLE_SEED,
    ROLE_TARGET,
    ROLE_TEST,
    Sample,
    ValidationError,
    Volume,
    read_labelmap,
    read_volume,
    write_labelmap,
    write_volume,
)


class GenerationError(ValueError):
    """Volume geometry cannot accommodate the requested organs."""


@dataclass(frozen=True)
class DomainSpec:
    """Geometry and intensity distribution of one acquisition domain."""

    dims: tuple[int, int, int] = (32, 64, 64)
    spacing: tuple[float, float, float] = (8.0, 1.5, 1.5)
    intensity_bias: float = 0.0
    contrast_scale: float = 1.0
    noise_sigma: float = 20.0
    organ_scale_range: tuple[float, float] = (0.10, 0.24)
    organ_intensity: tuple[float, float, float] = (0.0, 120.0, 200.0)
    rng_seed: int = 0

    def __post_init__(self):
        lo, hi = self.organ_scale_range
        if not (0.0 < lo <= hi <= 0.5):
            raise ValidationError(
                f"organ_scale_range must lie within (0, 0.5], got {self.organ_scale_range}"
            )
        if self.noise_sigma < 0:
            raise ValidationError("noise_sigma must be >= 0")
        if self.contrast_scale <= 0:
            raise ValidationError("contrast_scale must be > 0")


@dataclass(frozen=True)
class DifficultyKnob:
    """Per-case difficulty: boundary blur (voxels) and the probability that
    each of ``POCKET_SITES`` candidate confuser pockets materializes."""

    boundary_blur_sigma: float = 0.0
    lesion_probability: float = 0.0

    def __post_init__(self):
        if self.boundary_blur_sigma < 0 or self.lesion_probability < 0:
            raise ValidationError("difficulty knob fields must be >= 0")
        if self.lesion_probability > 1:
            raise ValidationError("lesion_probability must be <= 1")


@dataclass(frozen=True)
class KnobDistribution:
    """Uniform ranges that per-sample difficulty knobs are drawn from.

    Seed-split draws are attenuated by ``seed_attenuation`` (curated public
    data is cleaner than a fresh clinical cohort)."""

    blur_sigma_range: tuple[float, float] = (0.0, 0.7)
    lesion_prob_range: tuple[float, float] = (0.0, 0.7)
    seed_attenuation: float = 0.15

    def draw(self, rng: np.random.Generator, attenuation: float = 1.0) -> DifficultyKnob:
        blur = rng.uniform(*self.blur_sigma_range) * attenuation
        lesion = rng.uniform(*self.lesion_prob_range) * attenuation
        return DifficultyKnob(boundary_blur_sigma=blur, lesion_probability=lesion)


POCKET_SITES = 14
POCKET_RADIUS_RANGE = (1.4, 2.4)
POCKET_BLEND = 0.5
_PLACEMENT_TRIES = 200


def _ellipsoid_mask(dims, center, radii) -> np.ndarray:
    d, h, w = dims
    zz = (np.arange(d)[:, None, None] - center[0]) / radii[0]
    yy = (np.arange(h)[None, :, None] - center[1]) / radii[1]
    xx = (np.arange(w)[None, None, :] - center[2]) / radii[2]
    return zz * zz + yy * yy + xx * xx <= 1.0


def _place_organ(rng, dims, frac_range) -> tuple[np.ndarray, np.ndarray]:
    """Draw per-axis fractional radii and a center keeping the ellipsoid inside."""
    fr = rng.uniform(frac_range[0], frac_range[1], size=3)
    radii = fr * np.asarray(dims)
    if np.any(radii < 1.0):
        raise GenerationError(
            f"dims {dims} too small for minimum fractional radius {frac_range[0]}"
        )
    lo = radii + 0.5
    hi = np.asarray(dims) - 1 - radii - 0.5
    if np.any(hi < lo):
        raise GenerationError(f"dims {dims} cannot contain organ of radii {radii}")
    center = rng.uniform(lo, hi)
    return center, radii


def generate_sample(
    spec: DomainSpec,
    knob: DifficultyKnob,
    index: int,
    id: str | None = None,
) -> Sample:
    """Generate one case from the stream ``spec.rng_seed ^ index``.

    Organ-A is drawn from the upper half of the fractional-radius range and
    organ-B from the lower half, so organ-A is strictly larger in expectation
    (the liver/spleen size contrast). Ground truth marks exact ellipsoid
    interiors; the difficulty knob only perturbs intensities.
    """
    rng = np.random.default_rng(spec.rng_seed ^ index)
    dims = spec.dims
    lo, hi = spec.organ_scale_range
    mid = 0.5 * (lo + hi)

    center_a, radii_a = _place_organ(rng, dims, (mid, hi))
    mask_a = _ellipsoid_mask(dims, center_a, radii_a)
    for attempt in range(_PLACEMENT_TRIES):
        center_b, radii_b = _place_organ(rng, dims, (lo, mid))
        mask_b = _ellipsoid_mask(dims, center_b, radii_b)
        if not np.any(mask_a & mask_b):
            break
    else:
        raise GenerationError(
            f"could not place disjoint organs in dims {dims} after "
            f"{_PLACEMENT_TRIES} tries"
        )

    labels = np.zeros(dims, dtype=np.uint8)
    labels[mask_a] = 1
    labels[mask_b] = 2

    bg, ia, ib = spec.organ_intensity
    img = np.full(dims, bg, dtype=np.float64)
    img[mask_a] = bg + spec.contrast_scale * (ia - bg)
    img[mask_b] = bg + spec.contrast_scale * (ib - bg)
    img += spec.intensity_bias

    _inject_pockets(rng, img, labels, knob.lesion_probability, spec)

    if knob.boundary_blur_sigma > 0:
        img = gaussian_filter(img, sigma=knob.boundary_blur_sigma, mode="nearest")

    if spec.noise_sigma > 0:
        img += rng.normal(0.0, spec.noise_sigma, size=dims)

    volume = Volume(dims=dims, spacing=spec.spacing, voxels=img.reshape(-1))
    gt = LabelMap(dims=dims, labels=labels.reshape(-1))
    return Sample(id=id or f"case-{index:03d}", volume=volume, ground_truth=gt)


def _inject_pockets(rng, img, labels, probability, spec: DomainSpec) -> None:
    """Blend confuser pockets toward the opposite tissue intensity.

    Pockets inside an organ drift toward background, pockets in background
    near the volume interior drift toward a random organ level. Labels are
    never touched: pockets are intensity lies, not anatomy.
    """
    draws = rng.uniform(size=POCKET_SITES)
    radii = rng.uniform(*POCKET_RADIUS_RANGE, size=POCKET_SITES)
    kinds = rng.integers(0, 2, size=POCKET_SITES)  # 0: in-organ, 1: in-background
    organ_pick = rng.integers(1, 3, size=POCKET_SITES)
    bg, ia, ib = spec.organ_intensity
    organ_level = {
        1: bg + spec.contrast_scale * (ia - bg),
        2: bg + spec.contrast_scale * (ib - bg),
    }
    d, h, w = img.shape
    organ_idx = np.flatnonzero(labels.reshape(-1) > 0)
    for i in range(POCKET_SITES):
        # always consume the center draw so geometry is stable across knobs
        if kinds[i] == 0 and organ_idx.size:
            flat = organ_idx[rng.integers(0, organ_idx.size)]
            center = np.unravel_index(flat, img.shape)
        else:
            center = (
                rng.uniform(2, d - 3),
                rng.uniform(2, h - 3),
                rng.uniform(2, w - 3),
            )
        if draws[i] >= probability:
            continue
        mask = _ellipsoid_mask(img.shape, center, (radii[i],) * 3)
        if kinds[i] == 0:
            target = bg
        else:
            target = organ_level[int(organ_pick[i])]
        img[mask] += POCKET_BLEND * (target - img[mask])


def _split_seeds(master_seed: int) -> np.ndarray:
    return np.random.SeedSequence(master_seed).generate_state(4, dtype=np.uint64)


def generate_datasets(
    seed_spec: DomainSpec,
    target_spec: DomainSpec,
    knob_distribution: KnobDistribution,
    counts: dict[str, int],
    master_seed: int,
) -> tuple[Dataset, Dataset, Dataset]:
    """Build the seed (S), target (U), and test splits.

    S uses ``seed_spec``; U and test use ``target_spec`` with per-sample
    difficulty knobs drawn from ``knob_distribution`` so U spans easy-to-hard.
    """
    for key in ("seed_n", "target_n", "test_n"):
        if counts[key] < 1:
            raise ValidationError(f"counts[{key!r}] must be >= 1")
    s_seed, u_seed, t_seed, knob_seed = (int(x) for x in _split_seeds(master_seed))
    knob_rng = np.random.default_rng(knob_seed)

    def build(role, prefix, spec_base, split_seed, n, attenuation):
        spec = replace(spec_base, rng_seed=split_seed)
        samples = []
        for i in range(n):
            knob = knob_distribution.draw(knob_rng, attenuation)
            samples.append(generate_sample(spec, knob, i, id=f"{prefix}-{i:03d}"))
        return Dataset(role=role, samples=tuple(samples))

    atten = knob_distribution.seed_attenuation
    ds_s = build(ROLE_SEED, "S", seed_spec, s_seed, counts["seed_n"], atten)
    ds_u = build(ROLE_TARGET, "U", target_spec, u_seed, counts["target_n"], 1.0)
    ds_t = build(ROLE_TEST, "T", target_spec, t_seed, counts["test_n"], 1.0)
    return ds_s, ds_u, ds_t


DEFAULT_SEED_SPEC = DomainSpec()
DEFAULT_TARGET_SPEC = DomainSpec(
    spacing=(5.0, 0.7, 0.7),
    intensity_bias=30.0,
    contrast_scale=0.7,
    noise_sigma=26.0,
)
DEFAULT_KNOBS = KnobDistribution()
DEFAULT_COUNTS = {"seed_n": 20, "target_n": 80, "test_n": 20}

SHIFT_PRESETS = {
    "default": DEFAULT_TARGET_SPEC,
    "mild": replace(
        DEFAULT_TARGET_SPEC, intensity_bias=15.0, contrast_scale=0.85, noise_sigma=24.0
    ),
    "severe": replace(
        DEFAULT_TARGET_SPEC, intensity_bias=50.0, contrast_scale=0.55, noise_sigma=40.0
    ),
}


def write_dataset_dir(
    out_dir: str | Path,
    datasets: tuple[Dataset, Dataset, Dataset],
    specs: dict,
    master_seed: int,
) -> Path:
    """Write manifest.json plus one .vol/.lbl pair per sample."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"master_seed": master_seed, "specs": specs, "splits": {}}
    for ds in datasets:
        ids = []
        for s in ds.samples:
            write_volume(out / f"{s.id}.vol", s.volume)
            write_labelmap(out / f"{s.id}.lbl", s.ground_truth)
            ids.append(s.id)
        manifest["splits"][ds.role] = ids
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return out


def load_dataset_dir(data_dir: str | Path) -> tuple[Dataset, Dataset, Dataset]:
    data = Path(data_dir)
    manifest_path = data / "manifest.json"
    if not manifest_path.exists():
        raise FileNotFoundError(f"no manifest.json in {data}")
    manifest = json.loads(manifest_path.read_text())
    out = []
    for role in (ROLE_SEED, ROLE_TARGET, ROLE_TEST):
        samples = []
        for sid in manifest["splits"][role]:
            volume = read_volume(data / f"{sid}.vol")
            gt = read_labelmap(data / f"{sid}.lbl")
            samples.append(Sample(id=sid, volume=volume, ground_truth=gt))
        out.append(Dataset(role=role, samples=tuple(samples)))
    return tuple(out)


def spec_to_dict(spec: DomainSpec) -> dict:
    return asdict(spec)


def spec_from_dict(d: dict) -> DomainSpec:
    return DomainSpec(
        dims=tuple(d["dims"]),
        spacing=tuple(d["spacing"]),
        intensity_bias=d["intensity_bias"],
        contrast_scale=d["contrast_scale"],
        noise_sigma=d["noise_sigma"],
        organ_scale_range=tuple(d["organ_scale_range"]),
        organ_intensity=tuple(d["organ_intensity"]),
        rng_seed=d["rng_seed"],
    )
