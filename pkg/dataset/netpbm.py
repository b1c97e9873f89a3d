"""Binary PGM (P5) / PPM (P6) images with 8-bit samples."""
import logging
from dataclasses import dataclass

import numpy as np
from PIL import Image

from utils.errors import FormatError

logger = logging.getLogger(__name__)

WHITESPACE = b" \t\n\r\v\f"


@dataclass
class ImageFile:
    width: int
    height: int
    channels: int
    samples: np.ndarray

    def __post_init__(self):
        if self.channels not in (1, 3):
            raise ValueError("images have 1 or 3 channels, got {}".format(self.channels))
        if self.samples.size != self.width * self.height * self.channels:
            raise ValueError("expected {} samples, got {}".format(
                self.width * self.height * self.channels, self.samples.size))
        self.samples = np.asarray(self.samples, dtype=np.uint8).reshape(self.height, self.width, self.channels)


def _read_token(data, offset, field):
    while offset < len(data):
        if data[offset:offset + 1] == b"#":
            while offset < len(data) and data[offset:offset + 1] not in (b"\n", b"\r"):
                offset += 1
        elif data[offset:offset + 1] in WHITESPACE:
            offset += 1
        else:
            break
    start = offset
    while offset < len(data) and data[offset:offset + 1] not in WHITESPACE and data[offset:offset + 1] != b"#":
        offset += 1
    if start == offset:
        raise FormatError("truncated header", offset=start, field=field)
    return data[start:offset], start, offset


def decode_netpbm(data, name="<bytes>"):
    if data[:2] not in (b"P5", b"P6"):
        raise FormatError("{}: not a binary PGM/PPM file (magic {!r})".format(name, data[:2]), offset=0,
                          field="magic")
    channels = 1 if data[:2] == b"P5" else 3
    offset = 2
    values = []
    for field in ("width", "height", "maxval"):
        token, start, offset = _read_token(data, offset, field)
        if not token.isdigit():
            raise FormatError("{}: {} is not a number: {!r}".format(name, field, token), offset=start, field=field)
        values.append((int(token), start))
    (width, width_at), (height, height_at), (maxval, maxval_at) = values
    if width < 1:
        raise FormatError("{}: width must be positive".format(name), offset=width_at, field="width")
    if height < 1:
        raise FormatError("{}: height must be positive".format(name), offset=height_at, field="height")
    if maxval != 255:
        raise FormatError("{}: only maxval 255 is supported, got {}".format(name, maxval),
                          offset=maxval_at, field="maxval")
    if offset >= len(data) or data[offset:offset + 1] not in WHITESPACE:
        raise FormatError("{}: missing separator before payload".format(name), offset=offset, field="payload")
    offset += 1
    expected = width * height * channels
    if len(data) - offset < expected:
        raise FormatError("{}: payload has {} bytes, expected {}".format(name, len(data) - offset, expected),
                          offset=len(data), field="payload")
    samples = np.frombuffer(data, dtype=np.uint8, count=expected, offset=offset)
    return ImageFile(width, height, channels, samples.copy())


def encode_netpbm(image):
    magic = b"P5" if image.channels == 1 else b"P6"
    header = magic + "\n{} {}\n255\n".format(image.width, image.height).encode("ascii")
    return header + np.ascontiguousarray(image.samples, dtype=np.uint8).tobytes()


def load_image(path):
    with open(path, "rb") as f:
        return decode_netpbm(f.read(), str(path))


def to_image_file(plane):
    """[0,1] plane (H, W) or (H, W, 3) re-quantized to 8 bits."""
    plane = np.asarray(plane, dtype=np.float64)
    samples = np.round(np.clip(plane, 0.0, 1.0) * 255.0).astype(np.uint8)
    if samples.ndim == 2:
        samples = samples[:, :, None]
    return ImageFile(samples.shape[1], samples.shape[0], samples.shape[2], samples)


def save_image(path, image):
    if not isinstance(image, ImageFile):
        image = to_image_file(image)
    with open(path, "wb") as f:
        f.write(encode_netpbm(image))


def convert_image(src, dst):
    """Convert any Pillow-readable image to PGM (grayscale input) or PPM."""
    with Image.open(src) as img:
        mode = "L" if img.mode in ("1", "L", "LA", "I", "I;16", "F") else "RGB"
        samples = np.asarray(img.convert(mode), dtype=np.uint8)
    if samples.ndim == 2:
        samples = samples[:, :, None]
    image = ImageFile(samples.shape[1], samples.shape[0], samples.shape[2], samples)
    save_image(dst, image)
    logger.info("converted %s -> %s (%dx%d, %d channel(s))", src, dst, image.width, image.height, image.channels)
    return image


def luminance(img):
    samples = img.samples.astype(np.float64)
    if img.channels == 1:
        return samples[:, :, 0] / 255.0
    return (0.299 * samples[:, :, 0] + 0.587 * samples[:, :, 1] + 0.114 * samples[:, :, 2]) / 255.0


def channel_planes(img):
    """Each channel as its own [0,1] plane."""
    samples = img.samples.astype(np.float64) / 255.0
    return [samples[:, :, c] for c in range(img.channels)]
