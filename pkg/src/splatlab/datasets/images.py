"""Image, mask and depth-map files.

Colors and masks are 8-bit PNGs; values in [0, 1] are quantized with
round-half-up (0.5 -> 128). Depth maps are 16-bit binary PGMs holding
millimeters.

"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from ..core.errors import ContractViolation, DatasetError


__all__ = [
    "to_bytes",
    "read_image",
    "write_image",
    "read_mask",
    "write_mask",
    "read_depth",
    "write_depth",
    "DEPTH_SCALE",
]


DEPTH_SCALE = 1000.0
_DEPTH_MAX = 65535


def to_bytes(values: np.ndarray) -> np.ndarray:
    """[0, 1] floats -> uint8 with round-half-up and clamping."""
    values = np.asarray(values, dtype=np.float64)
    return np.clip(np.floor(values * 255.0 + 0.5), 0, 255).astype(np.uint8)


def _open(path: Path, mode: str) -> np.ndarray:
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert(mode))
    except FileNotFoundError as e:
        raise DatasetError(path, "file not found") from e
    except (UnidentifiedImageError, OSError) as e:
        raise DatasetError(path, f"cannot decode image ({e})") from e


def read_image(path: str | Path) -> np.ndarray:
    """(H, W, 3) float64 colors in [0, 1]."""
    return _open(Path(path), "RGB").astype(np.float64) / 255.0


def write_image(path: str | Path, image: np.ndarray) -> None:
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ContractViolation(f"'image' must be (H, W, 3); got {image.shape}")
    Image.fromarray(to_bytes(image)).save(Path(path), format="PNG")


def read_mask(path: str | Path) -> np.ndarray:
    """(H, W) float64 values in [0, 1]."""
    return _open(Path(path), "L").astype(np.float64) / 255.0


def write_mask(path: str | Path, mask: np.ndarray) -> None:
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ContractViolation(f"'mask' must be (H, W); got {mask.shape}")
    Image.fromarray(to_bytes(mask)).save(Path(path), format="PNG")


def write_depth(path: str | Path, depth: np.ndarray) -> None:
    """Stores meters as round-half-up millimeters in a 16-bit PGM."""
    depth = np.asarray(depth, dtype=np.float64)
    if depth.ndim != 2:
        raise ContractViolation(f"'depth' must be (H, W); got {depth.shape}")
    if not np.isfinite(depth).all() or depth.min(initial=0.0) < 0:
        raise ContractViolation("'depth' must be finite and non-negative")
    millimeters = np.floor(depth * DEPTH_SCALE + 0.5)
    if millimeters.max(initial=0.0) > _DEPTH_MAX:
        raise ContractViolation(
            f"'depth' exceeds the {_DEPTH_MAX / DEPTH_SCALE} m range of 16-bit millimeters"
        )
    h, w = depth.shape
    header = f"P5\n{w} {h}\n{_DEPTH_MAX}\n".encode("ascii")
    Path(path).write_bytes(header + millimeters.astype(">u2").tobytes())


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated header")
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def read_depth(path: str | Path) -> np.ndarray:
    """(H, W) float64 meters."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError as e:
        raise DatasetError(path, "file not found") from e
    try:
        (magic, w, h, maxval), offset = _header_tokens(data, 4)
        if magic != b"P5":
            raise ValueError(f"bad magic {magic!r}")
        w, h, maxval = int(w), int(h), int(maxval)
        dtype = ">u2" if maxval > 255 else "u1"
        size = w * h * np.dtype(dtype).itemsize
        if len(data) - offset < size:
            raise ValueError("truncated raster")
        raster = np.frombuffer(data, dtype=dtype, count=w * h, offset=offset)
    except ValueError as e:
        raise DatasetError(path, f"cannot decode depth map ({e})") from e
    return raster.reshape(h, w).astype(np.float64) / DEPTH_SCALE
