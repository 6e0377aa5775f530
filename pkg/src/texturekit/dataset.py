"""Labeled image collections: synthetic two-class textures and manifest loading.

Synthetic recipe: white noise, Gaussian blur, contrast stretch around 0.5,
and an optional additive checkerboard. The non-stroke class is smooth
(wide blur, no checkerboard); the stroke class is rough (narrow blur plus a
checkerboard). ``difficulty`` moves both parameter sets towards their
midpoint; at 1.0 the classes are drawn from the same distribution.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import DataValidationError, ParameterError
from .features import LABEL_NAMES, parse_label
from .fsutil import atomic_write_text
from .images import list_images, read_image, write_pgm


@dataclass(frozen=True)
class TextureParams:
    blur_sigma: float
    checker_amplitude: float = 0.0


@dataclass(frozen=True)
class SynthConfig:
    n_per_class: int = 10
    size: int = 128
    seed: int = 42
    difficulty: float = 0.0
    smooth: TextureParams = TextureParams(blur_sigma=3.0, checker_amplitude=0.0)
    rough: TextureParams = TextureParams(blur_sigma=0.7, checker_amplitude=0.12)
    contrast: float = 0.15
    checker_period: int = 8
    # Log-normal per-image spread of blur width and contrast (within-class variance).
    jitter: float = 0.2

    def __post_init__(self):
        if self.n_per_class < 2:
            raise ParameterError(f"n_per_class must be >= 2, got {self.n_per_class}")
        if not 0.0 <= self.difficulty <= 1.0:
            raise ParameterError(f"difficulty must be in [0, 1], got {self.difficulty}")
        if self.size < 4:
            raise ParameterError(f"size must be >= 4, got {self.size}")

    def class_params(self, label: int) -> TextureParams:
        """Parameters for ``label`` after pulling both classes toward the midpoint."""
        own, other = (self.rough, self.smooth) if label == 1 else (self.smooth, self.rough)
        t = self.difficulty / 2.0
        return TextureParams(
            blur_sigma=(1 - t) * own.blur_sigma + t * other.blur_sigma,
            checker_amplitude=(1 - t) * own.checker_amplitude + t * other.checker_amplitude,
        )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class LabeledDataset:
    ids: list[str]
    labels: np.ndarray
    images: list[np.ndarray]
    paths: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.ids)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=int)
        if not (len(self.ids) == len(self.images) == self.labels.size):
            raise DataValidationError("ids, labels and images must have equal length")
        if len(set(self.ids)) != len(self.ids):
            raise DataValidationError("sample ids must be unique")


def _checkerboard(size: int, period: int) -> np.ndarray:
    r, c = np.indices((size, size))
    return np.where(((r // period) + (c // period)) % 2 == 0, 1.0, -1.0)


def synth_image(params: TextureParams, cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    blur_sigma, contrast = params.blur_sigma, cfg.contrast
    if cfg.jitter:
        blur_sigma *= float(np.exp(cfg.jitter * rng.standard_normal()))
        contrast *= float(np.exp(cfg.jitter * rng.standard_normal()))
    noise = rng.standard_normal((cfg.size, cfg.size))
    blurred = gaussian_filter(noise, blur_sigma, mode="wrap")
    z = (blurred - blurred.mean()) / blurred.std()
    img = 0.5 + contrast * z
    if params.checker_amplitude:
        amplitude = params.checker_amplitude * float(rng.uniform(0.5, 1.5)) if cfg.jitter else params.checker_amplitude
        img = img + amplitude * _checkerboard(cfg.size, cfg.checker_period)
    return np.clip(img, 0.0, 1.0)


def generate(cfg: SynthConfig = SynthConfig()) -> LabeledDataset:
    """Balanced dataset: non-stroke samples first, then stroke samples.

    Image ``k`` draws from its own generator seeded with ``(seed, k)``.
    """
    ids, labels, images = [], [], []
    k = 0
    for label in (-1, 1):
        params = cfg.class_params(label)
        for n in range(cfg.n_per_class):
            rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, k]))
            ids.append(f"{LABEL_NAMES[label]}_{n:03d}")
            labels.append(label)
            images.append(synth_image(params, cfg, rng))
            k += 1
    return LabeledDataset(ids=ids, labels=np.array(labels), images=images)


def manifest_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sample_id", "path", "label"])
    writer.writerows(rows)
    return buf.getvalue()


def write_dataset(ds: LabeledDataset, out_dir) -> Path:
    """Write 16-bit PGMs plus ``manifest.csv``; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for sid, label, img in zip(ds.ids, ds.labels, ds.images):
        name = f"{sid}.pgm"
        write_pgm(out_dir / name, img, bit_depth=16)
        rows.append((sid, name, LABEL_NAMES[int(label)]))
    manifest = out_dir / "manifest.csv"
    atomic_write_text(manifest, manifest_text(rows))
    return manifest


def read_manifest(path) -> list[tuple[str, Path, int]]:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"sample_id", "path", "label"} - set(reader.fieldnames or ())
        if missing:
            raise DataValidationError(f"{path}: manifest lacks columns {sorted(missing)}")
        rows = []
        for row in reader:
            p = Path(row["path"])
            if not p.is_absolute():
                p = path.parent / p
            rows.append((row["sample_id"], p, parse_label(row["label"])))
    return rows


def load_dataset(source) -> LabeledDataset:
    """Load from a manifest CSV or a directory containing ``manifest.csv``."""
    source = Path(source)
    manifest = source / "manifest.csv" if source.is_dir() else source
    if not manifest.exists():
        raise FileNotFoundError(f"no manifest found at {manifest}")
    rows = read_manifest(manifest)
    return LabeledDataset(
        ids=[r[0] for r in rows],
        labels=np.array([r[2] for r in rows]),
        images=[read_image(r[1]) for r in rows],
        paths=[str(r[1]) for r in rows],
    )


def load_unlabeled(source) -> tuple[list[str], list[np.ndarray], list[int | None]]:
    """Images from a single file or a directory (labels from its manifest if present)."""
    source = Path(source)
    if source.is_file() and source.suffix.lower() == ".csv":
        ds = load_dataset(source)
        return ds.ids, ds.images, [int(v) for v in ds.labels]
    if source.is_dir():
        if (source / "manifest.csv").exists():
            ds = load_dataset(source)
            return ds.ids, ds.images, [int(v) for v in ds.labels]
        files = list_images(source)
        if not files:
            raise DataValidationError(f"{source}: no .pgm or .png images found")
        return [p.stem for p in files], [read_image(p) for p in files], [None] * len(files)
    return [source.stem], [read_image(source)], [None]
