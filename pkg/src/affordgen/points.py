"""Normalized image points and their canonical text form.

Answers serialize points as "[(0.56, 0.69), (0.53, 0.76)]": two decimals,
half-up rounding. Pixel (i, j) maps to the normalized point at its center,
((i + 0.5) / width, (j + 0.5) / height); the evaluation-side inverse,
round(x * (width - 1)), recovers (i, j) exactly for every pixel, so rounding
is the only lossy step anywhere in the label path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

MAX_POINTS = 50


def round2(v: float) -> float:
    """Half-up rounding to 2 decimals (ties away from zero for v >= 0)."""
    return math.floor(v * 100.0 + 0.5) / 100.0


def coord_str(v: float) -> str:
    n = math.floor(v * 100.0 + 0.5)
    return f"{n // 100}.{n % 100:02d}"


def point_to_pixel(x: float, y: float, width: int, height: int) -> tuple[int, int]:
    """Normalized coords to pixel indices; 0.0 and 1.0 land on edge pixels."""
    i = int(math.floor(x * (width - 1) + 0.5))
    j = int(math.floor(y * (height - 1) + 0.5))
    return i, j


def pixel_to_point(i: int, j: int, width: int, height: int) -> tuple[float, float]:
    return (i + 0.5) / width, (j + 0.5) / height


@dataclass
class PointSet:
    """1..50 normalized points, stored at 2-decimal precision.

    `raw` optionally keeps the pre-rounding coordinates for label audits; it
    never takes part in equality or serialization.
    """

    points: list[tuple[float, float]]
    raw: list[tuple[float, float]] | None = field(default=None, compare=False)

    def __post_init__(self):
        if not (1 <= len(self.points) <= MAX_POINTS):
            raise ValueError(f"point count {len(self.points)} outside [1, {MAX_POINTS}]")
        for x, y in self.points:
            if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
                raise ValueError(f"point ({x}, {y}) outside [0, 1]")

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def from_raw(cls, raw: list[tuple[float, float]]) -> "PointSet":
        return cls([(round2(x), round2(y)) for x, y in raw], raw=list(raw))

    def pixels(self, width: int, height: int) -> list[tuple[int, int]]:
        return [point_to_pixel(x, y, width, height) for x, y in self.points]


def format_points(ps: PointSet) -> str:
    return "[" + ", ".join(f"({coord_str(x)}, {coord_str(y)})" for x, y in ps.points) + "]"


def format_boxes(boxes: list[tuple[float, float, float, float]]) -> str:
    """Detection answers: normalized (cx, cy, w, h) tuples, 2 decimals."""
    return (
        "["
        + ", ".join(
            f"({coord_str(cx)}, {coord_str(cy)}, {coord_str(w)}, {coord_str(h)})"
            for cx, cy, w, h in boxes
        )
        + "]"
    )
