"""Frame acquisition: image directories or video files, plus the uniform
frame-sampling rule shared with the training-side data loader."""

from __future__ import annotations

from pathlib import Path

from PIL import Image

from .errors import DataError

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp")


def sample_indices(k: int, n: int) -> list[int]:
    """Indices floor(j*k/n) for j = 0..n-1 when k >= n, else all k indices."""
    if k < 1:
        raise DataError("no frames to sample")
    if k >= n:
        return [(j * k) // n for j in range(n)]
    return list(range(k))


def _load_from_directory(path: Path, n: int) -> list[Image.Image]:
    files = sorted(p for p in path.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise DataError(f"{path}: no image files found")
    picked = [files[i] for i in sample_indices(len(files), n)]
    frames = []
    for file in picked:
        try:
            with Image.open(file) as img:
                frames.append(img.convert("RGB"))
        except Exception as exc:
            raise DataError(f"cannot read frame {file}: {exc}") from exc
    return frames


def _load_from_video(path: Path, n: int) -> list[Image.Image]:
    try:
        import cv2
    except ImportError as exc:
        raise DataError("video input requires opencv-python") from exc
    capture = cv2.VideoCapture(str(path))
    if not capture.isOpened():
        raise DataError(f"cannot open video {path}")
    raw = []
    while True:
        ok, frame = capture.read()
        if not ok:
            break
        raw.append(frame[:, :, ::-1])  # BGR -> RGB
    capture.release()
    if not raw:
        raise DataError(f"{path}: video has no decodable frames")
    return [Image.fromarray(raw[i]) for i in sample_indices(len(raw), n)]


def load_frames(path, n: int) -> list[Image.Image]:
    """Up to n RGB frames from a frame directory or a video file, picked by
    the uniform sampling rule (fewer are returned only when the source has
    fewer than n frames)."""
    path = Path(path)
    if path.is_dir():
        return _load_from_directory(path, n)
    if path.is_file():
        return _load_from_video(path, n)
    raise DataError(f"input {path} does not exist")
