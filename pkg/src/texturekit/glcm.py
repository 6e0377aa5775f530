"""Directional gray-tone spatial dependence matrices (GLCMs)."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DataValidationError, ParameterError


class Direction(enum.Enum):
    """Neighbour adjacency; the value is the (row, column) offset."""

    HORIZONTAL = (0, 1)
    VERTICAL = (1, 0)
    LEFT_DIAGONAL = (1, -1)
    RIGHT_DIAGONAL = (1, 1)

    @property
    def offset(self) -> tuple[int, int]:
        return self.value

    @classmethod
    def parse(cls, name: str) -> "Direction":
        key = name.strip().lower()
        aliases = {
            "h": cls.HORIZONTAL, "horizontal": cls.HORIZONTAL,
            "v": cls.VERTICAL, "vertical": cls.VERTICAL,
            "ld": cls.LEFT_DIAGONAL, "left_diagonal": cls.LEFT_DIAGONAL,
            "rd": cls.RIGHT_DIAGONAL, "right_diagonal": cls.RIGHT_DIAGONAL,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ParameterError(f"unknown direction {name!r}; use h, v, ld or rd") from None


DIRECTIONS = (Direction.HORIZONTAL, Direction.VERTICAL,
              Direction.LEFT_DIAGONAL, Direction.RIGHT_DIAGONAL)


@dataclass(frozen=True)
class Glcm:
    """Symmetric co-occurrence counts and their joint probability normalization."""

    levels: int
    counts: np.ndarray
    direction: Direction
    distance: int = 1

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def probs(self) -> np.ndarray:
        return self.counts / self.counts.sum()


def compute_glcm(img, levels: int, direction: Direction = Direction.HORIZONTAL,
                 distance: int = 1) -> Glcm:
    """Count level pairs ``(i, j)`` at ``distance * offset`` apart.

    Every pixel pair is tallied in both orders, so ``counts`` is symmetric.
    """
    q = np.asarray(img)
    if q.ndim != 2:
        raise DataValidationError(f"quantized image must be 2-D, got shape {q.shape}")
    if levels < 2:
        raise ParameterError(f"levels must be >= 2, got {levels}")
    if distance < 1:
        raise ParameterError(f"distance must be >= 1, got {distance}")
    if q.size and (q.min() < 0 or q.max() >= levels):
        raise DataValidationError(f"level indices must lie in [0, {levels - 1}]")

    dr, dc = direction.offset
    dr, dc = dr * distance, dc * distance
    rows, cols = q.shape
    # Slices selecting p and q = p + (dr, dc), both inside the image.
    r0, r1 = max(0, -dr), rows - max(0, dr)
    c0, c1 = max(0, -dc), cols - max(0, dc)
    if r1 <= r0 or c1 <= c0:
        raise DataValidationError("empty co-occurrence domain")
    src = q[r0:r1, c0:c1].astype(np.int64).ravel()
    dst = q[r0 + dr:r1 + dr, c0 + dc:c1 + dc].astype(np.int64).ravel()

    flat = np.bincount(src * levels + dst, minlength=levels * levels)
    counts = flat.reshape(levels, levels)
    counts = counts + counts.T
    return Glcm(levels=levels, counts=counts, direction=direction, distance=distance)


def glcm_all_directions(img, levels: int, distance: int = 1) -> list[Glcm]:
    """GLCMs for Horizontal, Vertical, LeftDiagonal, RightDiagonal, in that order."""
    return [compute_glcm(img, levels, d, distance) for d in DIRECTIONS]
