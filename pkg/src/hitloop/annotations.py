"""Bounding-box domain types and YOLO-format label file IO.

Labels are plain text, one box per line: ``class_id cx cy w h`` with
coordinates normalized to the image dimensions. A companion class-map
file lists one class name per line; the line index is the class id.
"""

from __future__ import annotations

from dataclasses import dataclass

# Coordinates may exceed [0, 1] by at most this much before they are
# rejected instead of clamped.
EDGE_TOLERANCE = 1e-6

# Reserved remap target: boxes mapped to this name are removed.
DROP = "DROP"


class AnnotationError(ValueError):
    """Base class for label parsing and validation failures."""


class MalformedLabel(AnnotationError):
    """Label line has the wrong shape (field count, non-numeric fields)."""


class UnknownClass(AnnotationError):
    """Class id or name not present in the active class map."""


class OutOfRange(AnnotationError):
    """Box coordinates violate the normalized-box invariants."""


class DegenerateBox(AnnotationError):
    """Box collapses to zero area after clamping to image bounds."""


class UnmappedClass(AnnotationError):
    """Class remap is missing an entry for a class present in the input."""


@dataclass(frozen=True)
class ClassMap:
    """Ordered class names; a class id is its index in the tuple."""

    names: tuple[str, ...]

    def __post_init__(self):
        if not self.names:
            raise ValueError("class map must contain at least one class")
        if any(not n or n != n.strip() or "\n" in n or "\t" in n for n in self.names):
            raise ValueError("class names must be nonempty single-line without edge whitespace")
        if len(set(self.names)) != len(self.names):
            raise ValueError("class names must be unique")

    def __len__(self) -> int:
        return len(self.names)

    def has_id(self, class_id: int) -> bool:
        return 0 <= class_id < len(self.names)

    def name_for(self, class_id: int) -> str:
        if not self.has_id(class_id):
            raise UnknownClass(f"class id {class_id} not in map of {len(self.names)} classes")
        return self.names[class_id]

    def id_for(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownClass(f"class name {name!r} not in map") from None

    @classmethod
    def from_text(cls, text: str) -> "ClassMap":
        """Parse a class-map file: one name per line, line index = id."""
        return cls(tuple(line.strip() for line in text.splitlines() if line.strip()))

    def to_text(self) -> str:
        return "".join(name + "\n" for name in self.names)


DEFAULT_CLASSES = ClassMap(("door", "handle"))


@dataclass(frozen=True)
class NormalizedBox:
    """Class-labeled box in fractions of image width/height."""

    class_id: int
    cx: float
    cy: float
    w: float
    h: float

    def corners(self) -> tuple[float, float, float, float]:
        """(x_min, y_min, x_max, y_max) in normalized coordinates."""
        return (self.cx - self.w / 2, self.cy - self.h / 2,
                self.cx + self.w / 2, self.cy + self.h / 2)


@dataclass(frozen=True)
class PixelBox:
    """Axis-aligned box in pixel coordinates, corners inclusive of origin."""

    class_id: int
    x_min: float
    y_min: float
    x_max: float
    y_max: float


@dataclass(frozen=True)
class Detection:
    """A predicted box with its confidence and the model that produced it."""

    box: NormalizedBox
    confidence: float
    model_version: str = ""


@dataclass(frozen=True)
class LabeledImage:
    sample_id: str
    width: int
    height: int
    boxes: tuple[NormalizedBox, ...]


def _finite(v: float) -> bool:
    return v == v and abs(v) != float("inf")


def validate_box(box: NormalizedBox, class_map: ClassMap | None = None) -> NormalizedBox:
    """Check the normalized-box invariants and return the canonical box.

    Coordinates beyond [0, 1] by at most EDGE_TOLERANCE are clamped;
    anything further out raises OutOfRange rather than being silently
    pulled inside the image.
    """
    if not isinstance(box.class_id, int) or box.class_id < 0:
        raise UnknownClass(f"class id must be a nonnegative integer, got {box.class_id!r}")
    if class_map is not None and not class_map.has_id(box.class_id):
        raise UnknownClass(f"class id {box.class_id} not in map of {len(class_map)} classes")
    for name, v in (("cx", box.cx), ("cy", box.cy), ("w", box.w), ("h", box.h)):
        if not _finite(v):
            raise OutOfRange(f"{name} is not finite")
    if box.w <= 0 or box.h <= 0:
        raise OutOfRange(f"box size must be positive, got w={box.w} h={box.h}")
    if box.w > 1 + EDGE_TOLERANCE or box.h > 1 + EDGE_TOLERANCE:
        raise OutOfRange(f"box size exceeds image, w={box.w} h={box.h}")
    lo, hi = -EDGE_TOLERANCE, 1 + EDGE_TOLERANCE
    x0, y0, x1, y1 = box.corners()
    for name, v in (("cx", box.cx), ("cy", box.cy)):
        if not lo <= v <= hi:
            raise OutOfRange(f"{name}={v} outside [0, 1]")
    for name, v in (("x_min", x0), ("y_min", y0), ("x_max", x1), ("y_max", y1)):
        if not lo <= v <= hi:
            raise OutOfRange(f"box extent {name}={v} outside [0, 1]")
    x0, x1 = max(0.0, x0), min(1.0, x1)
    y0, y1 = max(0.0, y0), min(1.0, y1)
    if x1 <= x0 or y1 <= y0:
        raise OutOfRange("box collapsed to zero size after clamping")
    return NormalizedBox(box.class_id, (x0 + x1) / 2, (y0 + y1) / 2, x1 - x0, y1 - y0)


def parse_label_line(line: str, class_map: ClassMap) -> NormalizedBox:
    """Parse one ``class_id cx cy w h`` label line into a validated box."""
    fields = line.split()
    if len(fields) != 5:
        raise MalformedLabel(f"expected 5 fields, got {len(fields)}")
    try:
        class_id = int(fields[0])
    except ValueError:
        raise MalformedLabel(f"class id {fields[0]!r} is not an integer") from None
    try:
        cx, cy, w, h = (float(f) for f in fields[1:])
    except ValueError:
        raise MalformedLabel(f"non-numeric coordinate in {line!r}") from None
    return validate_box(NormalizedBox(class_id, cx, cy, w, h), class_map)


def parse_label_file(text: str, class_map: ClassMap) -> list[NormalizedBox]:
    """Parse a label file; blank lines are skipped, empty files mean no objects."""
    boxes = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            boxes.append(parse_label_line(line.strip(), class_map))
        except AnnotationError as exc:
            raise type(exc)(f"line {lineno}: {exc}") from exc
    return boxes


def serialize_label_file(boxes: list[NormalizedBox]) -> str:
    """Render boxes as YOLO label lines, coordinates at exactly 6 decimals."""
    return "".join(
        f"{b.class_id} {b.cx:.6f} {b.cy:.6f} {b.w:.6f} {b.h:.6f}\n" for b in boxes
    )


def parse_prediction_line(line: str, class_map: ClassMap, model_version: str = "") -> Detection:
    """Parse a label line extended with a trailing confidence field."""
    fields = line.split()
    if len(fields) != 6:
        raise MalformedLabel(f"expected 6 fields, got {len(fields)}")
    box = parse_label_line(" ".join(fields[:5]), class_map)
    try:
        conf = float(fields[5])
    except ValueError:
        raise MalformedLabel(f"confidence {fields[5]!r} is not numeric") from None
    if not 0 <= conf <= 1:
        raise OutOfRange(f"confidence {conf} outside [0, 1]")
    return Detection(box, conf, model_version)


def parse_prediction_file(text: str, class_map: ClassMap, model_version: str = "") -> list[Detection]:
    dets = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            dets.append(parse_prediction_line(line.strip(), class_map, model_version))
        except AnnotationError as exc:
            raise type(exc)(f"line {lineno}: {exc}") from exc
    return dets


def serialize_prediction_file(dets: list[Detection]) -> str:
    return "".join(
        f"{d.box.class_id} {d.box.cx:.6f} {d.box.cy:.6f} {d.box.w:.6f} {d.box.h:.6f}"
        f" {d.confidence:.6f}\n"
        for d in dets
    )


def normalized_to_pixel(box: NormalizedBox, width: int, height: int) -> PixelBox:
    """Convert to pixel corners, clamping to the image rectangle."""
    if width <= 0 or height <= 0:
        raise ValueError(f"image dimensions must be positive, got {width}x{height}")
    x0, y0, x1, y1 = box.corners()
    x0, x1 = max(0.0, x0 * width), min(float(width), x1 * width)
    y0, y1 = max(0.0, y0 * height), min(float(height), y1 * height)
    if x1 <= x0 or y1 <= y0:
        raise DegenerateBox(f"box clamps to zero area at {width}x{height}")
    return PixelBox(box.class_id, x0, y0, x1, y1)


def pixel_to_normalized(box: PixelBox, width: int, height: int) -> NormalizedBox:
    """Inverse of normalized_to_pixel for boxes inside the image."""
    if width <= 0 or height <= 0:
        raise ValueError(f"image dimensions must be positive, got {width}x{height}")
    cx = (box.x_min + box.x_max) / 2 / width
    cy = (box.y_min + box.y_max) / 2 / height
    return NormalizedBox(box.class_id, cx, cy,
                         (box.x_max - box.x_min) / width,
                         (box.y_max - box.y_min) / height)


def remap_classes(
    boxes: list[NormalizedBox],
    old_map: ClassMap,
    mapping: dict[str, str],
    new_map: ClassMap,
) -> list[NormalizedBox]:
    """Re-label boxes through an old-name -> new-name table.

    Geometry is untouched. Boxes whose old class maps to DROP are removed.
    Every class present in the input must have a mapping entry.
    """
    out = []
    for box in boxes:
        old_name = old_map.name_for(box.class_id)
        if old_name not in mapping:
            raise UnmappedClass(f"no remap entry for class {old_name!r}")
        new_name = mapping[old_name]
        if new_name == DROP:
            continue
        out.append(NormalizedBox(new_map.id_for(new_name), box.cx, box.cy, box.w, box.h))
    return out
