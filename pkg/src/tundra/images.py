"""Image values, codecs, deterministic transforms, and image pipeline stages.

Pixel data lives in row-major, channel-interleaved bytes. Only uncompressed
codecs (PGM P5, PPM P6, 24-bit BMP) are supported so round-trips stay
lossless and dependency-free.

Op chains execute fused where ops permit: adjacent pure index remaps
(flipHorizontal, cropCenter, nearest resize) collapse into a single gather.
Fusion is a performance property only; results are bitwise identical to
applying each op in sequence.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .dataframe import Dataset, DType, Schema
from .errors import (
    BadChainSpec,
    CropOutOfBounds,
    MalformedHeader,
    MissingColumn,
    TruncatedData,
    UnknownColumn,
    UnsupportedFormat,
)

GRAY8 = "GRAY8"
RGB8 = "RGB8"

_MODE_CHANNELS = {GRAY8: 1, RGB8: 3}


@dataclass(frozen=True)
class ImageRecord:
    path: str
    width: int
    height: int
    channels: int
    mode: str
    data: bytes

    def __post_init__(self):
        if self.mode not in _MODE_CHANNELS:
            raise UnsupportedFormat(f"unknown image mode {self.mode!r}")
        if self.channels != _MODE_CHANNELS[self.mode]:
            raise MalformedHeader(
                f"mode {self.mode} requires {_MODE_CHANNELS[self.mode]} channels, "
                f"got {self.channels}")
        if len(self.data) != self.width * self.height * self.channels:
            raise TruncatedData(
                f"{self.path or '<image>'}: expected "
                f"{self.width * self.height * self.channels} bytes, got {len(self.data)}")

    def to_array(self) -> np.ndarray:
        return np.frombuffer(self.data, dtype=np.uint8).reshape(
            self.height, self.width, self.channels)

    @staticmethod
    def from_array(arr: np.ndarray, mode: str, path: str = "") -> "ImageRecord":
        if arr.ndim == 2:
            arr = arr[:, :, None]
        h, w, c = arr.shape
        return ImageRecord(path=path, width=w, height=h, channels=c, mode=mode,
                           data=np.ascontiguousarray(arr, dtype=np.uint8).tobytes())


# --- codecs ---

def _parse_pnm(data: bytes, magic: bytes, channels: int, mode: str) -> ImageRecord:
    if not data.startswith(magic):
        raise MalformedHeader(f"expected {magic!r} header")
    pos = 2
    fields = []
    while len(fields) < 3:
        if pos >= len(data):
            raise MalformedHeader("header ended before width/height/maxval")
        ch = data[pos:pos + 1]
        if ch in b" \t\r\n":
            pos += 1
        elif ch == b"#":
            nl = data.find(b"\n", pos)
            if nl < 0:
                raise MalformedHeader("unterminated comment")
            pos = nl + 1
        elif ch.isdigit():
            end = pos
            while end < len(data) and data[end:end + 1].isdigit():
                end += 1
            fields.append(int(data[pos:end]))
            pos = end
        else:
            raise MalformedHeader(f"unexpected byte {ch!r} in header")
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise MalformedHeader(f"bad dimensions {width}x{height}")
    if maxval != 255:
        raise UnsupportedFormat(f"only maxval 255 supported, got {maxval}")
    if pos >= len(data) or data[pos:pos + 1] not in b" \t\r\n":
        raise MalformedHeader("missing whitespace between header and pixels")
    pos += 1
    need = width * height * channels
    payload = data[pos:pos + need]
    if len(payload) < need:
        raise TruncatedData(f"need {need} pixel bytes, got {len(payload)}")
    return ImageRecord(path="", width=width, height=height, channels=channels,
                       mode=mode, data=payload)


def _parse_bmp(data: bytes) -> ImageRecord:
    if len(data) < 54:
        raise MalformedHeader("BMP shorter than its fixed headers")
    if data[:2] != b"BM":
        raise MalformedHeader("missing BM signature")
    pix_offset = struct.unpack_from("<I", data, 10)[0]
    header_size = struct.unpack_from("<I", data, 14)[0]
    if header_size < 40:
        raise UnsupportedFormat(f"BMP header size {header_size} unsupported")
    width, height = struct.unpack_from("<ii", data, 18)
    planes, bitcount = struct.unpack_from("<HH", data, 26)
    compression = struct.unpack_from("<I", data, 30)[0]
    if planes != 1 or bitcount != 24 or compression != 0:
        raise UnsupportedFormat("only 24-bit uncompressed BMP supported")
    bottom_up = height > 0
    height = abs(height)
    if width < 1 or height < 1:
        raise MalformedHeader(f"bad dimensions {width}x{height}")
    row_bytes = (width * 3 + 3) & ~3
    need = row_bytes * height
    payload = data[pix_offset:pix_offset + need]
    if len(payload) < need:
        raise TruncatedData(f"need {need} pixel bytes, got {len(payload)}")
    rows = np.frombuffer(payload, dtype=np.uint8).reshape(height, row_bytes)
    rows = rows[:, :width * 3].reshape(height, width, 3)
    if bottom_up:
        rows = rows[::-1]
    rgb = rows[:, :, ::-1]  # BGR -> RGB
    return ImageRecord.from_array(rgb, RGB8)


def decode_image(data: bytes, format_hint: str | None = None) -> ImageRecord:
    if data.startswith(b"P5"):
        return _parse_pnm(data, b"P5", 1, GRAY8)
    if data.startswith(b"P6"):
        return _parse_pnm(data, b"P6", 3, RGB8)
    if data.startswith(b"BM"):
        return _parse_bmp(data)
    raise UnsupportedFormat(
        f"unrecognized image payload (hint={format_hint!r}); "
        "supported: PGM(P5), PPM(P6), BMP(24-bit)")


def encode_image(img: ImageRecord, fmt: str) -> bytes:
    fmt = fmt.upper()
    if fmt == "PGM":
        if img.mode != GRAY8:
            raise UnsupportedFormat("PGM encodes GRAY8 only")
        return b"P5\n%d %d\n255\n" % (img.width, img.height) + img.data
    if fmt == "PPM":
        if img.mode != RGB8:
            raise UnsupportedFormat("PPM encodes RGB8 only")
        return b"P6\n%d %d\n255\n" % (img.width, img.height) + img.data
    if fmt == "BMP":
        if img.mode != RGB8:
            raise UnsupportedFormat("BMP encoder takes RGB8 only")
        row_bytes = (img.width * 3 + 3) & ~3
        body = bytearray()
        arr = img.to_array()[:, :, ::-1]  # RGB -> BGR
        pad = b"\x00" * (row_bytes - img.width * 3)
        for y in range(img.height - 1, -1, -1):
            body += arr[y].tobytes() + pad
        header = struct.pack("<2sIHHI", b"BM", 54 + len(body), 0, 0, 54)
        info = struct.pack("<IiiHHIIiiII", 40, img.width, img.height, 1, 24, 0,
                           len(body), 2835, 2835, 0, 0)
        return header + info + bytes(body)
    raise UnsupportedFormat(f"unknown encode format {fmt!r}")


# --- op chain ---

@dataclass(frozen=True)
class Resize:
    width: int
    height: int
    method: str = "bilinear"  # or "nearest"


@dataclass(frozen=True)
class FlipHorizontal:
    pass


@dataclass(frozen=True)
class Grayscale:
    pass


@dataclass(frozen=True)
class CropCenter:
    width: int
    height: int


@dataclass(frozen=True)
class Normalize:
    scale: float = 1.0 / 255.0
    offset: float = 0.0


@dataclass(frozen=True)
class ToVector:
    pass


ChainOp = Union[Resize, FlipHorizontal, Grayscale, CropCenter, Normalize, ToVector]


def validate_chain(ops: Sequence[ChainOp]) -> None:
    for i, op in enumerate(ops):
        if isinstance(op, ToVector) and i != len(ops) - 1:
            raise BadChainSpec("toVector must be the last op in a chain")
        if isinstance(op, Normalize):
            if i + 1 >= len(ops) or not isinstance(ops[i + 1], ToVector):
                raise BadChainSpec("normalize must be immediately followed by toVector")
        if isinstance(op, Resize) and op.method not in ("nearest", "bilinear"):
            raise BadChainSpec(f"unknown resize method {op.method!r}")
        if isinstance(op, (Resize, CropCenter)) and (op.width < 1 or op.height < 1):
            raise BadChainSpec("resize/crop dimensions must be >= 1")


def parse_chain(specs: Sequence[str]) -> tuple[ChainOp, ...]:
    """Parse the compact string form used by the ImageTransformer stage param."""
    ops: list[ChainOp] = []
    for spec in specs:
        parts = spec.split(":")
        head = parts[0]
        try:
            if head == "resize":
                method = parts[3] if len(parts) > 3 else "bilinear"
                ops.append(Resize(int(parts[1]), int(parts[2]), method))
            elif head == "flipHorizontal" and len(parts) == 1:
                ops.append(FlipHorizontal())
            elif head == "grayscale" and len(parts) == 1:
                ops.append(Grayscale())
            elif head == "cropCenter":
                ops.append(CropCenter(int(parts[1]), int(parts[2])))
            elif head == "normalize":
                ops.append(Normalize(float(parts[1]), float(parts[2])))
            elif head == "toVector" and len(parts) == 1:
                ops.append(ToVector())
            else:
                raise BadChainSpec(f"unknown chain op {spec!r}")
        except (IndexError, ValueError) as exc:
            raise BadChainSpec(f"malformed chain op {spec!r}: {exc}") from exc
    chain = tuple(ops)
    validate_chain(chain)
    return chain


def format_chain(ops: Sequence[ChainOp]) -> list[str]:
    out = []
    for op in ops:
        if isinstance(op, Resize):
            out.append(f"resize:{op.width}:{op.height}:{op.method}")
        elif isinstance(op, FlipHorizontal):
            out.append("flipHorizontal")
        elif isinstance(op, Grayscale):
            out.append("grayscale")
        elif isinstance(op, CropCenter):
            out.append(f"cropCenter:{op.width}:{op.height}")
        elif isinstance(op, Normalize):
            out.append(f"normalize:{op.scale!r}:{op.offset!r}")
        elif isinstance(op, ToVector):
            out.append("toVector")
        else:
            raise BadChainSpec(f"unknown op {op!r}")
    return out


def _nearest_indices(src: int, dst: int) -> np.ndarray:
    idx = ((np.arange(dst, dtype=np.float64) + 0.5) * (src / dst)).astype(np.int64)
    return np.minimum(idx, src - 1)


def _bilinear_resize(arr: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Half-pixel-center sampling, clamped; rounded half away from zero."""
    h, w = arr.shape[:2]
    if (out_h, out_w) == (h, w):
        # same-size bilinear is the identity: src = (dst+0.5)*1 - 0.5 = dst,
        # all interpolation weights collapse to 1 and round(v) == v
        return arr.copy()
    sy = (np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5
    sx = (np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5
    sy = np.clip(sy, 0.0, h - 1.0)
    sx = np.clip(sx, 0.0, w - 1.0)
    y0 = np.floor(sy).astype(np.int64)
    x0 = np.floor(sx).astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (sy - y0)[:, None, None]
    fx = (sx - x0)[None, :, None]
    a = arr.astype(np.float64)
    top = a[y0][:, x0] * (1 - fx) + a[y0][:, x1] * fx
    bot = a[y1][:, x0] * (1 - fx) + a[y1][:, x1] * fx
    val = top * (1 - fy) + bot * fy
    return np.clip(np.floor(val + 0.5), 0, 255).astype(np.uint8)


def _grayscale(arr: np.ndarray) -> np.ndarray:
    if arr.shape[2] == 1:
        return arr
    y = (0.299 * arr[:, :, 0].astype(np.float64)
         + 0.587 * arr[:, :, 1].astype(np.float64)
         + 0.114 * arr[:, :, 2].astype(np.float64))
    return np.clip(np.floor(y + 0.5), 0, 255).astype(np.uint8)[:, :, None]


def apply_op(img: ImageRecord, op: ChainOp) -> Union[ImageRecord, np.ndarray]:
    """Apply a single op; Normalize/ToVector leave byte-image space."""
    arr = img.to_array()
    if isinstance(op, FlipHorizontal):
        return ImageRecord.from_array(arr[:, ::-1], img.mode, img.path)
    if isinstance(op, CropCenter):
        if op.width > img.width or op.height > img.height:
            raise CropOutOfBounds(
                f"crop {op.width}x{op.height} exceeds image {img.width}x{img.height}")
        oy = (img.height - op.height) // 2
        ox = (img.width - op.width) // 2
        return ImageRecord.from_array(arr[oy:oy + op.height, ox:ox + op.width],
                                      img.mode, img.path)
    if isinstance(op, Resize):
        if op.method == "nearest":
            rows = _nearest_indices(img.height, op.height)
            cols = _nearest_indices(img.width, op.width)
            return ImageRecord.from_array(arr[rows][:, cols], img.mode, img.path)
        return ImageRecord.from_array(_bilinear_resize(arr, op.width, op.height),
                                      img.mode, img.path)
    if isinstance(op, Grayscale):
        return ImageRecord.from_array(_grayscale(arr), GRAY8, img.path)
    if isinstance(op, Normalize):
        return arr.astype(np.float32) * np.float32(op.scale) + np.float32(op.offset)
    if isinstance(op, ToVector):
        scaled = arr.astype(np.float32) * np.float32(1.0 / 255.0)
        return scaled.reshape(-1)
    raise BadChainSpec(f"unknown op {op!r}")


def apply_chain_sequential(img: ImageRecord,
                           ops: Sequence[ChainOp]) -> Union[ImageRecord, np.ndarray]:
    """Reference semantics: fold each op in order (Normalize feeds ToVector)."""
    validate_chain(ops)
    value: Union[ImageRecord, np.ndarray] = img
    norm: Normalize | None = None
    for op in ops:
        if isinstance(op, Normalize):
            norm = op
            continue
        if isinstance(op, ToVector):
            arr = value.to_array()
            n = norm or Normalize()
            value = (arr.astype(np.float32) * np.float32(n.scale)
                     + np.float32(n.offset)).reshape(-1)
            continue
        value = apply_op(value, op)
    return value


def apply_chain(img: ImageRecord, ops: Sequence[ChainOp]) -> Union[ImageRecord, np.ndarray]:
    """Fused execution: adjacent index-remap ops collapse into one gather."""
    validate_chain(ops)
    arr = img.to_array()
    mode = img.mode
    norm: Normalize | None = None
    to_vector = False

    pending_rows: np.ndarray | None = None
    pending_cols: np.ndarray | None = None

    def flush():
        nonlocal arr, pending_rows, pending_cols
        if pending_rows is not None:
            arr = arr[pending_rows][:, pending_cols]
            pending_rows = pending_cols = None

    def push_index_map(rows: np.ndarray, cols: np.ndarray):
        nonlocal pending_rows, pending_cols
        if pending_rows is None:
            pending_rows, pending_cols = rows, cols
        else:
            pending_rows = pending_rows[rows]
            pending_cols = pending_cols[cols]

    for op in ops:
        h = len(pending_rows) if pending_rows is not None else arr.shape[0]
        w = len(pending_cols) if pending_cols is not None else arr.shape[1]
        if isinstance(op, FlipHorizontal):
            push_index_map(np.arange(h), np.arange(w)[::-1])
        elif isinstance(op, CropCenter):
            if op.width > w or op.height > h:
                raise CropOutOfBounds(
                    f"crop {op.width}x{op.height} exceeds image {w}x{h}")
            oy, ox = (h - op.height) // 2, (w - op.width) // 2
            push_index_map(np.arange(oy, oy + op.height), np.arange(ox, ox + op.width))
        elif isinstance(op, Resize) and op.method == "nearest":
            push_index_map(_nearest_indices(h, op.height), _nearest_indices(w, op.width))
        elif isinstance(op, Resize):
            flush()
            arr = _bilinear_resize(arr, op.width, op.height)
        elif isinstance(op, Grayscale):
            flush()
            arr = _grayscale(arr)
            mode = GRAY8
        elif isinstance(op, Normalize):
            norm = op
        elif isinstance(op, ToVector):
            to_vector = True
    flush()
    if to_vector:
        n = norm or Normalize()
        return (arr.astype(np.float32) * np.float32(n.scale)
                + np.float32(n.offset)).reshape(-1)
    return ImageRecord.from_array(arr, mode, img.path)


def chain_output_dtype(ops: Sequence[ChainOp]) -> str:
    return DType.FLOAT_VECTOR if ops and isinstance(ops[-1], ToVector) else DType.IMAGE


# --- corpus layout ---

CORPUS_SCHEMA = Schema.of(
    ("path", DType.STRING),
    ("image", DType.IMAGE),
    ("cameraId", DType.STRING),
    ("timestamp", DType.TIMESTAMP),
    ("label", DType.INT64),
)


def read_image_dir(root: str) -> list[tuple]:
    """Rows for every image under ``<root>/<cameraId>/<utc>_<label>.pgm``.

    A sidecar ``meta.csv`` (path,cameraId,timestamp,label) at the root wins
    over filename parsing. Rows come back sorted by (cameraId, timestamp,
    path) so downstream partitioning is layout-stable.
    """
    import csv as _csv

    overrides: dict[str, tuple[str, int, int]] = {}
    sidecar = os.path.join(root, "meta.csv")
    if os.path.exists(sidecar):
        with open(sidecar, newline="") as f:
            for rec in _csv.DictReader(f):
                overrides[rec["path"]] = (
                    rec["cameraId"], int(rec["timestamp"]), int(rec["label"]))
    rows = []
    for camera in sorted(os.listdir(root)):
        cam_dir = os.path.join(root, camera)
        if not os.path.isdir(cam_dir):
            continue
        for fname in sorted(os.listdir(cam_dir)):
            ext = os.path.splitext(fname)[1].lower()
            if ext not in (".pgm", ".ppm", ".bmp"):
                continue
            rel = f"{camera}/{fname}"
            with open(os.path.join(cam_dir, fname), "rb") as f:
                img = decode_image(f.read())
            img = ImageRecord(path=rel, width=img.width, height=img.height,
                              channels=img.channels, mode=img.mode, data=img.data)
            if rel in overrides:
                cam_id, ts, label = overrides[rel]
            else:
                stem = os.path.splitext(fname)[0]
                try:
                    ts_str, label_str = stem.rsplit("_", 1)
                    ts, label = int(ts_str), int(label_str)
                except ValueError:
                    raise MalformedHeader(
                        f"{rel}: cannot parse '<utcSeconds>_<label>' from filename "
                        "and no meta.csv entry") from None
                cam_id = camera
            rows.append((rel, img, cam_id, ts, label))
    rows.sort(key=lambda r: (r[2], r[3], r[0]))
    return rows


def dataset_from_dir(root: str, num_partitions: int) -> Dataset:
    return Dataset.from_rows(read_image_dir(root), CORPUS_SCHEMA, num_partitions)


# --- synthetic corpus generator ---

def _spot(yy: np.ndarray, xx: np.ndarray, y0: float, x0: float,
          c: float, sigma: float = 1.2) -> np.ndarray:
    return c * np.exp(-(((yy - y0) ** 2 + (xx - x0) ** 2) / (2.0 * sigma * sigma)))


def _burst_frames(label: int, rng: np.random.Generator, burst_len: int,
                  size: int, yy: np.ndarray, xx: np.ndarray) -> list[np.ndarray]:
    """Frames of one burst: shared blob, field and texture; per-frame jitter.

    Both classes carry a smooth bright blob; positives additionally carry a
    rosette texture of bright/dark dipole spot pairs mirrored about the blob's
    vertical axis. The texture is zero-mean, so a linear pixel model stays
    nearly blind to it while rectified conv responses are not. Positive blobs
    favor one side of the frame (78/22), which is exactly the imbalance flip
    augmentation repairs.
    """
    cy = rng.uniform(16.0, size - 16.0)
    p_left = 0.78 if label else 0.5
    side = size * 0.3125 if rng.random() < p_left else size * 0.6875
    cx = side + rng.uniform(-3.0, 3.0)
    ry = rng.uniform(7.0, 12.0)
    rx = rng.uniform(7.0, 12.0)
    env_amp = rng.uniform(18.0, 50.0)
    n_pairs = int(rng.integers(6, 15))
    spots = [(rng.uniform(-0.9, 0.9) * ry, rng.uniform(0.15, 0.95) * rx,
              rng.uniform(85.0, 150.0)) for _ in range(n_pairs)]
    field = np.kron(rng.normal(0.0, 8.0, (size // 8, size // 8)), np.ones((8, 8)))
    frames = []
    for _ in range(burst_len):
        jit = rng.uniform(0.3, 1.3)
        jcy = cy + rng.uniform(-2.0, 2.0)
        jcx = cx + rng.uniform(-2.0, 2.0)
        r2 = ((yy - jcy) / ry) ** 2 + ((xx - jcx) / rx) ** 2
        signal = env_amp * jit * np.exp(-r2)
        if label:
            for dy, dx, c in spots:
                for sx in (1.0, -1.0):
                    x0, y0 = jcx + sx * dx, jcy + dy
                    signal += _spot(yy, xx, y0 - 1.1, x0, jit * c)
                    signal -= _spot(yy, xx, y0 + 1.1, x0, jit * c)
        frame = 112.0 + field + rng.normal(0.0, 11.0, (size, size)) + signal
        frames.append(np.clip(frame, 0, 255).astype(np.uint8))
    return frames


def generate_corpus(out_dir: str, cameras: int, bursts_per_camera: int,
                    burst_len: int, leopard_frac: float = 0.1,
                    seed: int = 0, size: int = 64) -> dict:
    """Write a deterministic synthetic camera-trap corpus of PGM images.

    The positive-class signal is a horizontally symmetric spotted blob, so
    flipping preserves labels; labels are constant within a burst and noise is
    correlated within it, with per-frame amplitude and position jitter.
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    counts = {"images": 0, "positives": 0}
    os.makedirs(out_dir, exist_ok=True)
    base_ts = 1_600_000_000
    for ci in range(cameras):
        camera = f"cam{ci:03d}"
        cam_dir = os.path.join(out_dir, camera)
        os.makedirs(cam_dir, exist_ok=True)
        for bi in range(bursts_per_camera):
            label = 1 if rng.random() < leopard_frac else 0
            start = base_ts + ci * 1_000_000 + bi * 3_600
            for k, frame in enumerate(_burst_frames(label, rng, burst_len, size, yy, xx)):
                ts = start + 5 * k
                img = ImageRecord.from_array(frame, GRAY8)
                with open(os.path.join(cam_dir, f"{ts}_{label}.pgm"), "wb") as f:
                    f.write(encode_image(img, "PGM"))
                counts["images"] += 1
                counts["positives"] += label
    return counts


# --- pipeline stages ---

from .pipeline import ParamSpec, Transformer, register_stage  # noqa: E402


def _require_image_column(schema: Schema, col: str, stage: str) -> int:
    try:
        idx = schema.index_of(col)
    except UnknownColumn as exc:
        raise MissingColumn(f"{stage}: {exc}") from exc
    if schema.dtype_of(col) != DType.IMAGE:
        raise MissingColumn(f"{stage}: column {col!r} is not an Image column")
    return idx


@register_stage
class ImageTransformer(Transformer):
    """Apply a fused image op chain to one column, row by row."""

    stage_name = "ImageTransformer"
    param_specs = (
        ParamSpec("inputCol", "column", doc="Image column to read."),
        ParamSpec("outputCol", "column", doc="Column to write (may equal inputCol)."),
        ParamSpec("chain", "stringList",
                  doc="Op chain, e.g. ['resize:64:64:bilinear', 'toVector']."),
    )

    def transform(self, ds: Dataset) -> Dataset:
        in_col, out_col, chain_spec = self._require_params("inputCol", "outputCol", "chain")
        ops = parse_chain(chain_spec)
        idx = _require_image_column(ds.schema, in_col, self.stage_name)
        out_dtype = chain_output_dtype(ops)
        if out_col in ds.schema.names:
            out_idx = ds.schema.index_of(out_col)
            cols = list(ds.schema.columns)
            cols[out_idx] = (out_col, out_dtype)
            out_schema = Schema(tuple(cols))
        else:
            out_idx = None
            out_schema = ds.schema.with_column(out_col, out_dtype)

        def fn(rows):
            out = []
            for i, r in enumerate(rows):
                try:
                    value = apply_chain(r[idx], ops)
                except Exception as exc:
                    raise type(exc)(f"row {i}: {exc}") from exc
                if out_idx is None:
                    out.append(r + (value,))
                else:
                    cells = list(r)
                    cells[out_idx] = value
                    out.append(tuple(cells))
            return out

        return ds.map_partitions(fn, out_schema, name=self.stage_name)


@register_stage
class ImageSetAugmenter(Transformer):
    """Double the dataset: each row once as-is (parity 0) and once flipped (parity 1).

    Adds an ``originId`` column carrying a stable per-input-row id so parity
    averaging downstream can re-join the two copies.
    """

    stage_name = "ImageSetAugmenter"
    param_specs = (
        ParamSpec("inputCol", "column", doc="Image column to flip."),
        ParamSpec("mode", "string", default="train",
                  doc="'train' or 'score'; duplication is identical, the mode "
                      "documents intent for readers of the pipeline spec."),
    )

    def transform(self, ds: Dataset) -> Dataset:
        in_col, mode = self._require_params("inputCol", "mode")
        if mode not in ("train", "score"):
            raise ValueError(f"mode must be 'train' or 'score', got {mode!r}")
        idx = _require_image_column(ds.schema, in_col, self.stage_name)
        out_schema = (ds.schema
                      .with_column("originId", DType.STRING)
                      .with_column("parity", DType.INT64))

        def fn(pidx, rows):
            out = []
            for i, r in enumerate(rows):
                origin = f"{pidx}:{i}"
                out.append(r + (origin, 0))
                flipped = apply_op(r[idx], FlipHorizontal())
                cells = list(r)
                cells[idx] = flipped
                out.append(tuple(cells) + (origin, 1))
            return out

        return ds.map_partitions_indexed(fn, out_schema, name=self.stage_name)


@register_stage
class ImageFeaturizer(Transformer):
    """Resize + vectorize + deep featurization as one stage.

    Composes an ImageTransformer ([grayscale when the model is single-channel,
    resize, toVector]) with a NetworkModel; output is bitwise identical to
    running the two stages by hand, minus the intermediate pixel column.
    """

    stage_name = "ImageFeaturizer"
    param_specs = (
        ParamSpec("inputCol", "column", doc="Image column to featurize."),
        ParamSpec("outputCol", "column", doc="FloatVector column to append."),
        ParamSpec("modelPath", "path", doc="Manifest path of the model file pair."),
        ParamSpec("outputNode", "string", doc="Graph node whose value is the feature."),
        ParamSpec("resizeW", "int", doc="Resize width fed to the model."),
        ParamSpec("resizeH", "int", doc="Resize height fed to the model."),
        ParamSpec("miniBatchSize", "int", default=64,
                  doc="Rows per network kernel invocation."),
    )

    def __init__(self, **params):
        super().__init__(**params)
        self._network = None
        if all(k in self._params for k in ("modelPath", "resizeW", "resizeH")):
            self._model_input_shape()  # configure-time dimension check

    def _model_input_shape(self):
        from .graph import load_graph
        from .errors import VectorSizeMismatch

        g = load_graph(self.get_param("modelPath"))
        h, w, c = g.input_shape
        rw, rh = self.get_param("resizeW"), self.get_param("resizeH")
        if (rh, rw) != (h, w):
            raise VectorSizeMismatch(
                f"resize dims {rw}x{rh} do not match model input {w}x{h}")
        return g.input_shape

    def transform(self, ds: Dataset) -> Dataset:
        from .network_stage import NetworkModel

        in_col, out_col, model_path, node, rw, rh, mbs = self._require_params(
            "inputCol", "outputCol", "modelPath", "outputNode",
            "resizeW", "resizeH", "miniBatchSize")
        h, w, c = self._model_input_shape()
        ops: list[str] = []
        if c == 1:
            ops.append("grayscale")
        ops += [f"resize:{rw}:{rh}:bilinear", "toVector"]
        pixel_col = f"__{out_col}_px"
        pixels = ImageTransformer(inputCol=in_col, outputCol=pixel_col,
                                  chain=ops).transform(ds)
        network = NetworkModel(modelPath=model_path, inputCol=pixel_col,
                               outputCol=out_col, outputNode=node, miniBatchSize=mbs)
        self._network = network
        featurized = network.transform(pixels)
        keep = [n for n in featurized.schema.names if n != pixel_col]
        return featurized.select(keep)

    def load_metrics(self):
        if self._network is None:
            from .errors import NoJobYet

            raise NoJobYet("no transform of this stage has executed yet")
        return self._network.load_metrics()
