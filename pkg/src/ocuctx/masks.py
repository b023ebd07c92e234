"""Multi-class label masks and the class vocabulary shared by every module.

Label encoding: raw 8-bit grayscale values are class labels directly
(0 = background, 1 = iris, 2 = sclera in the default config).  Pixels whose
value is not declared in the governing :class:`ClassSpec` are a hard error,
never silently remapped to background.

Coordinate convention is (row, col) with origin at the top-left corner and
rows increasing downward; all centroid math downstream uses the same axes.

Everything here is immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ConfigError, LabelValidationError, MaskFormatError, PairMismatchError

__all__ = [
    "ClassSpec",
    "LabelMask",
    "BinaryMask",
    "load_class_config",
    "load_mask",
    "save_mask",
    "compose_class_masks",
    "binarize",
    "merge_classes",
    "validate_pair",
]

BACKGROUND_NAME = "background"

# Reserved keys of the class-config JSON file; every other key must be a
# label integer mapped to a class name.
_CONFIG_KEYS = {"background", "include_background_in_context", "epsilon_delta"}


@dataclass(frozen=True)
class ClassSpec:
    """Evaluated class set: foreground labels, background policy, context knobs.

    ``classes`` is an ordered tuple of ``(label, name)`` foreground entries.
    ``include_background_in_context`` controls whether the background region
    participates in the context coefficients (default on, so a single
    foreground class still yields two context regions).  ``epsilon_delta`` is
    the guard below which a ground-truth centroid spread counts as zero.
    """

    classes: tuple[tuple[int, str], ...]
    background_label: int = 0
    include_background_in_context: bool = True
    epsilon_delta: float = 1e-9

    def __post_init__(self) -> None:
        if not self.classes:
            raise ConfigError("class spec needs at least one foreground class")
        labels = [label for label, _ in self.classes]
        names = [name for _, name in self.classes]
        all_labels = labels + [self.background_label]
        for label in all_labels:
            if not isinstance(label, int) or not 0 <= label <= 255:
                raise ConfigError(f"label {label!r} outside the 8-bit range 0..255")
        if len(set(labels)) != len(labels):
            raise ConfigError(f"duplicate foreground labels in {labels}")
        if self.background_label in labels:
            raise ConfigError(
                f"background label {self.background_label} also declared as foreground"
            )
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate class names in {names}")
        if not self.epsilon_delta > 0:
            raise ConfigError("epsilon_delta must be positive")

    @property
    def foreground_labels(self) -> tuple[int, ...]:
        return tuple(label for label, _ in self.classes)

    @property
    def declared_labels(self) -> tuple[int, ...]:
        """Foreground labels plus the background label."""
        return self.foreground_labels + (self.background_label,)

    @property
    def context_labels(self) -> tuple[int, ...]:
        """Labels that participate in the context coefficients, in spec order."""
        if self.include_background_in_context:
            return (self.background_label,) + self.foreground_labels
        return self.foreground_labels

    def name_of(self, label: int) -> str:
        if label == self.background_label:
            return BACKGROUND_NAME
        for candidate, name in self.classes:
            if candidate == label:
                return name
        raise ConfigError(f"label {label} not declared in spec")

    def label_of(self, name: str) -> int:
        for label, candidate in self.classes:
            if candidate.lower() == name.lower():
                return label
        raise ConfigError(f"no class named {name!r} in spec")


def load_class_config(path: str | Path) -> ClassSpec:
    """Read a class-config JSON file into a :class:`ClassSpec`.

    The file is a single JSON object whose integer keys map label values to
    class names, alongside the optional reserved keys ``background``,
    ``include_background_in_context`` and ``epsilon_delta``::

        {"1": "iris", "2": "sclera", "background": 0}
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read class config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: class config must be a JSON object")

    classes: list[tuple[int, str]] = []
    for key, value in raw.items():
        if key in _CONFIG_KEYS:
            continue
        try:
            label = int(key)
        except ValueError:
            raise ConfigError(f"{path}: key {key!r} is neither a label nor a config key")
        if not isinstance(value, str):
            raise ConfigError(f"{path}: name for label {label} must be a string")
        classes.append((label, value))
    # Stable, declaration-independent ordering.
    classes.sort(key=lambda pair: pair[0])

    return ClassSpec(
        classes=tuple(classes),
        background_label=int(raw.get("background", 0)),
        include_background_in_context=bool(raw.get("include_background_in_context", True)),
        epsilon_delta=float(raw.get("epsilon_delta", 1e-9)),
    )


def _read_only(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class LabelMask:
    """A height x width grid of class-label integers plus its governing spec."""

    labels: np.ndarray = field(repr=False)
    spec: ClassSpec

    def __post_init__(self) -> None:
        arr = np.asarray(self.labels)
        if arr.ndim != 2:
            raise MaskFormatError(f"label grid must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise MaskFormatError(f"mask must be at least 1x1, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if not np.issubdtype(arr.dtype, np.integer):
                raise MaskFormatError(f"label grid must be integer, got dtype {arr.dtype}")
            bad = (arr < 0) | (arr > 255)
            if bad.any():
                row, col = np.argwhere(bad)[0]
                raise LabelValidationError(
                    f"label {int(arr[row, col])} unknown at ({row},{col})"
                )
        arr = _read_only(np.ascontiguousarray(arr, dtype=np.uint8))
        object.__setattr__(self, "labels", arr)
        _validate_labels(arr, self.spec)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """One membership bit per pixel for a single selected class."""

    membership: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = np.asarray(self.membership)
        if arr.ndim != 2:
            raise MaskFormatError(f"membership grid must be 2-D, got shape {arr.shape}")
        object.__setattr__(self, "membership", _read_only(arr.astype(bool)))

    @property
    def height(self) -> int:
        return self.membership.shape[0]

    @property
    def width(self) -> int:
        return self.membership.shape[1]

    @property
    def count(self) -> int:
        """Number of member pixels."""
        return int(self.membership.sum())


def _validate_labels(arr: np.ndarray, spec: ClassSpec) -> None:
    # Lookup table over the 8-bit value range keeps this a single pass.
    allowed = np.zeros(256, dtype=bool)
    allowed[list(spec.declared_labels)] = True
    ok = allowed[arr]
    if not ok.all():
        row, col = np.argwhere(~ok)[0]
        value = int(arr[row, col])
        raise LabelValidationError(f"label {value} unknown at ({row},{col})")


def load_mask(path: str | Path, spec: ClassSpec) -> LabelMask:
    """Decode an 8-bit single-channel PNG or binary PGM into a LabelMask.

    Multi-channel, palette and non-8-bit rasters are rejected; so is any
    pixel value not declared in ``spec`` (the error names the first
    offending (row,col) coordinate and its value).
    """
    path = Path(path)
    try:
        return LabelMask(_read_raster(path), spec)
    except LabelValidationError as exc:
        raise LabelValidationError(f"{path}: {exc}") from exc


def _read_raster(path: Path) -> np.ndarray:
    """Decode an 8-bit single-channel PNG or binary PGM into a uint8 grid."""
    try:
        with open(path, "rb") as fh:
            magic = fh.read(2)
        if magic in (b"P1", b"P2", b"P3", b"P4", b"P6"):
            raise MaskFormatError(f"{path}: only binary PGM (P5) is supported")
        if magic == b"P5":
            return _read_pgm_p5(path)
        with Image.open(path) as img:
            if img.format != "PNG":
                raise MaskFormatError(f"{path}: unsupported format {img.format}")
            if img.mode != "L":
                raise MaskFormatError(
                    f"{path}: expected 8-bit single-channel data, got mode {img.mode!r}"
                )
            return np.asarray(img, dtype=np.uint8)
    except FileNotFoundError as exc:
        raise MaskFormatError(f"{path}: file not found") from exc
    except UnidentifiedImageError as exc:
        raise MaskFormatError(f"{path}: not a supported raster file") from exc
    except OSError as exc:
        raise MaskFormatError(f"{path}: unreadable ({exc})") from exc


def _read_pgm_p5(path: Path) -> np.ndarray:
    """Decode binary PGM directly; an order of magnitude faster than a
    general image codec on large batch runs."""
    data = path.read_bytes()
    fields: list[int] = []
    pos = 2  # past the P5 magic
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos] == ord("#"):  # comment to end of line
            while pos < len(data) and data[pos] != ord("\n"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise MaskFormatError(f"{path}: malformed PGM header near byte {start}")
        fields.append(int(token))
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval > 255:
        raise MaskFormatError(f"{path}: 16-bit PGM (maxval {maxval}) is not supported")
    pixels = data[pos : pos + width * height]
    if len(pixels) != width * height:
        raise MaskFormatError(f"{path}: truncated PGM pixel data")
    return np.frombuffer(pixels, dtype=np.uint8).reshape(height, width)


def save_mask(mask: LabelMask, path: str | Path) -> None:
    """Write a LabelMask as 8-bit grayscale; format follows the suffix (.png/.pgm)."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix not in (".png", ".pgm"):
        raise MaskFormatError(f"{path}: unsupported mask suffix {suffix!r}")
    Image.fromarray(np.asarray(mask.labels), mode="L").save(path)


def compose_class_masks(masks_by_label: dict[int, str | Path], spec: ClassSpec) -> LabelMask:
    """Overlay per-class binary mask files into one multi-class LabelMask.

    For corpora that publish one mask file per class instead of a single
    multi-class file.  Any nonzero pixel in a class file marks membership;
    a pixel claimed by two classes is an error, not a silent overwrite.
    """
    if not masks_by_label:
        raise ConfigError("no per-class mask files given")
    unknown = set(masks_by_label) - set(spec.foreground_labels)
    if unknown:
        raise LabelValidationError(f"labels {sorted(unknown)} not foreground classes")

    combined: np.ndarray | None = None
    for label in sorted(masks_by_label):
        path = Path(masks_by_label[label])
        member = _read_raster(path) != 0
        if combined is None:
            combined = np.zeros(member.shape, dtype=np.uint8)
        elif combined.shape != member.shape:
            raise PairMismatchError(
                f"{path}: size {member.shape[1]}x{member.shape[0]} does not match "
                f"the other class files ({combined.shape[1]}x{combined.shape[0]})"
            )
        overlap = member & (combined != 0)
        if overlap.any():
            row, col = np.argwhere(overlap)[0]
            raise LabelValidationError(
                f"{path}: pixel ({row},{col}) already belongs to class "
                f"{combined[row, col]}"
            )
        combined[member] = label
    return LabelMask(combined, spec)


def binarize(mask: LabelMask, label: int) -> BinaryMask:
    """Membership bits set exactly where the mask carries ``label``."""
    if label not in mask.spec.declared_labels:
        raise LabelValidationError(f"label {label} not declared in spec")
    return BinaryMask(mask.labels == label)


def merge_classes(mask: LabelMask, sources: set[int], target: int) -> LabelMask:
    """Relabel every pixel of the ``sources`` classes as ``target``.

    The result is governed by a reduced spec: merged-away foreground entries
    vanish.  Merging an empty source set is the identity.
    """
    spec = mask.spec
    sources = set(sources)
    unknown = sources - set(spec.foreground_labels)
    if unknown:
        raise LabelValidationError(f"source labels {sorted(unknown)} not foreground classes")
    if target not in spec.declared_labels:
        raise LabelValidationError(f"target label {target} not declared in spec")
    if not sources:
        return mask

    removed = sources - {target}
    reduced = replace(
        spec,
        classes=tuple(entry for entry in spec.classes if entry[0] not in removed),
    )
    labels = np.where(np.isin(mask.labels, list(sources)), np.uint8(target), mask.labels)
    return LabelMask(labels, reduced)


def validate_pair(gt: LabelMask, pred: LabelMask) -> None:
    """Both masks must agree in size and share one class spec."""
    if (gt.height, gt.width) != (pred.height, pred.width):
        raise PairMismatchError(
            f"dimension mismatch: gt is {gt.width}x{gt.height}, "
            f"pred is {pred.width}x{pred.height}"
        )
    if gt.spec != pred.spec:
        raise PairMismatchError("gt and pred are governed by different class specs")
