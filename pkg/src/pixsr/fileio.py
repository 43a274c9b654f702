"""Image file I/O: PFM for float grids, PNG for integer-valued images.

PFM is the canonical float format here because it round-trips bit-exactly.
Headers are "Pf" (one channel) or "PF" (three channels), then "W H", then a
scale line whose sign encodes endianness (negative = little-endian); pixel
rows are stored bottom-to-top.

PNG values are read as plain integers mapped to reals *without* rescaling;
normalization is the solver's job.  Writing a PNG quantizes through a linear
min-max mapping recorded in a sidecar text file so it stays invertible.
"""

import warnings

import numpy as np
from PIL import Image

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def read_pfm(path):
    """Read a PFM file as float64, shape (H, W) or (H, W, 3)."""
    with open(path, "rb") as f:
        header = f.readline().rstrip()
        if header == b"PF":
            channels = 3
        elif header == b"Pf":
            channels = 1
        else:
            raise ValueError(f"{path}: not a PFM file (header {header!r})")
        dims = f.readline().split()
        if len(dims) != 2:
            raise ValueError(f"{path}: malformed PFM dimension line")
        width, height = int(dims[0]), int(dims[1])
        scale = float(f.readline())
        dtype = "<f4" if scale < 0 else ">f4"
        count = width * height * channels
        raw = f.read(count * 4)
    if len(raw) != count * 4:
        raise OSError(f"{path}: truncated PFM data")
    data = np.frombuffer(raw, dtype=dtype).astype(np.float64)
    data = data.reshape(height, width, channels)
    data = np.flipud(data)  # PFM stores rows bottom-to-top
    return data[:, :, 0] if channels == 1 else data


def write_pfm(path, image):
    """Write a (H, W) or (H, W, 3) grid as little-endian float32 PFM."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        header, data = b"Pf", arr[:, :, np.newaxis]
    elif arr.ndim == 3 and arr.shape[2] == 3:
        header, data = b"PF", arr
    else:
        raise ValueError(f"PFM supports 1 or 3 channels, got shape {arr.shape}")
    height, width = data.shape[:2]
    with open(path, "wb") as f:
        f.write(header + b"\n")
        f.write(f"{width} {height}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(np.flipud(data).astype("<f4").tobytes())


def _sidecar_path(path):
    return str(path) + ".meta"


def write_png(path, image, vmin=None, vmax=None):
    """Quantize to PNG via a linear min-max mapping, recorded in a sidecar.

    2-D images become 16-bit grayscale, (H, W, 3) become 8-bit RGB.  The
    sidecar records vmin/vmax/maxint so real values can be recovered as
    vmin + ints * (vmax - vmin) / maxint.
    """
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        maxint = 65535  # 16-bit grayscale
    elif arr.ndim == 3 and arr.shape[2] == 3:
        maxint = 255  # 8-bit RGB
    else:
        raise ValueError(f"PNG output supports 2-D gray or RGB, got shape {arr.shape}")
    lo = float(arr.min()) if vmin is None else float(vmin)
    hi = float(arr.max()) if vmax is None else float(vmax)
    span = hi - lo
    if span <= 0:
        ints = np.zeros(arr.shape, dtype=np.uint32)
        span = 0.0
    else:
        ints = np.rint(np.clip((arr - lo) / span, 0.0, 1.0) * maxint).astype(np.uint32)
    if arr.ndim == 2:
        Image.fromarray(ints.astype(np.uint16)).save(path, format="PNG")
    else:
        Image.fromarray(ints.astype(np.uint8)).save(path, format="PNG")
    with open(_sidecar_path(path), "w", encoding="ascii") as f:
        f.write(f"vmin={lo!r}\nvmax={hi!r}\nmaxint={maxint}\n")


def read_png(path):
    """Read a PNG as float64 integers, exactly as stored (no rescaling)."""
    with Image.open(path) as img:
        img.load()
        if img.mode == "RGBA":
            warnings.warn(f"{path}: dropping alpha channel", stacklevel=2)
            img = img.convert("RGB")
        elif img.mode == "LA":
            warnings.warn(f"{path}: dropping alpha channel", stacklevel=2)
            img = img.convert("L")
        elif img.mode == "P":
            img = img.convert("RGB")
        arr = np.asarray(img)
    if arr.ndim not in (2, 3):
        raise ValueError(f"{path}: unsupported PNG layout {arr.shape}")
    return arr.astype(np.float64)


def read_image(path):
    """Read a PFM or PNG file, dispatching on the file's magic bytes."""
    with open(path, "rb") as f:
        magic = f.read(8)
    if magic[:2] in (b"Pf", b"PF"):
        return read_pfm(path)
    if magic == _PNG_MAGIC:
        return read_png(path)
    raise ValueError(f"{path}: unknown image format (magic {magic[:4]!r})")


def write_image(path, image, format=None):
    """Write PFM or PNG, inferred from the extension unless given."""
    fmt = format
    if fmt is None:
        name = str(path).lower()
        if name.endswith(".pfm"):
            fmt = "pfm"
        elif name.endswith(".png"):
            fmt = "png"
        else:
            raise ValueError(f"cannot infer format from {path!r}; pass format=")
    if fmt == "pfm":
        write_pfm(path, image)
    elif fmt == "png":
        write_png(path, image)
    else:
        raise ValueError(f"unknown format {fmt!r}")
