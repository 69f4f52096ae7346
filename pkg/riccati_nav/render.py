"""Static top-down preview of true and estimated trajectories."""

from __future__ import annotations

import io
import logging

import numpy as np

from .export import RunTable

_LOGGER = logging.getLogger(__name__)

# Colors (RGB)
BACKGROUND = (255, 255, 255)
AXIS_COLOR = (200, 200, 200)
TRUE_COLOR = (0, 0, 0)
ESTIMATE_COLOR = (220, 40, 40)
LANDMARK_COLOR = (0, 160, 0)

IMAGE_SIZE = 480
MARGIN = 24


def _to_pixels(xy: np.ndarray, lo: np.ndarray, scale: float) -> list[tuple[float, float]]:
    # Image rows grow downward, so flip y
    px = MARGIN + (xy[:, 0] - lo[0]) * scale
    py = IMAGE_SIZE - MARGIN - (xy[:, 1] - lo[1]) * scale
    return list(zip(px.tolist(), py.tolist(), strict=True))


def render_preview(
    table: RunTable, landmark: tuple[float, float] = (0.0, 0.0)
) -> bytes:
    """PNG of the x-y plane: truth in black, estimate in red, landmark in green."""
    try:
        from PIL import Image, ImageDraw

        true_xy = table.column("p_true")[:, :2]
        est_xy = table.column("p_est")[:, :2]
        points = np.vstack([true_xy, est_xy, np.atleast_2d(landmark)])
        points = points[np.all(np.isfinite(points), axis=1)]
        lo, hi = points.min(axis=0), points.max(axis=0)
        span = float(np.max(hi - lo)) or 1.0
        scale = (IMAGE_SIZE - 2 * MARGIN) / span

        img = Image.new("RGB", (IMAGE_SIZE, IMAGE_SIZE), BACKGROUND)
        draw = ImageDraw.Draw(img)
        draw.rectangle(
            [MARGIN, MARGIN, IMAGE_SIZE - MARGIN, IMAGE_SIZE - MARGIN], outline=AXIS_COLOR
        )
        draw.line(_to_pixels(true_xy, lo, scale), fill=TRUE_COLOR, width=1)
        draw.line(_to_pixels(est_xy, lo, scale), fill=ESTIMATE_COLOR, width=1)
        lx, ly = _to_pixels(np.atleast_2d(landmark), lo, scale)[0]
        draw.ellipse([lx - 4, ly - 4, lx + 4, ly + 4], fill=LANDMARK_COLOR)

        buffer = io.BytesIO()
        img.save(buffer, format="PNG")
        return buffer.getvalue()

    except ImportError:
        _LOGGER.warning("Pillow not available, writing placeholder preview")
        return create_placeholder_image()
    except Exception as err:
        _LOGGER.warning("Error rendering preview: %s", err)
        return create_placeholder_image()


def create_placeholder_image() -> bytes:
    """Placeholder shown when the preview cannot be rendered."""
    try:
        from PIL import Image, ImageDraw

        img = Image.new("RGB", (IMAGE_SIZE, IMAGE_SIZE // 2), (240, 240, 240))
        draw = ImageDraw.Draw(img)
        draw.text(
            (IMAGE_SIZE // 2 - 60, IMAGE_SIZE // 4 - 6),
            "Preview not available",
            fill=(128, 128, 128),
        )
        buffer = io.BytesIO()
        img.save(buffer, format="PNG")
        return buffer.getvalue()

    except ImportError:
        return b""
