"""Periodic central-difference stencils shared by the quadratures."""

from __future__ import annotations

import numpy as np


def central_diff(arr: np.ndarray, axis: int, step: float, order: int = 4) -> np.ndarray:
    """Periodic central difference along a grid axis.

    order 2: (f(+1) - f(-1)) / 2h
    order 4: (8 f(+1) - 8 f(-1) - f(+2) + f(-2)) / 12h
    """
    if order == 2:
        return (np.roll(arr, -1, axis=axis) - np.roll(arr, 1, axis=axis)) / (2.0 * step)
    if order == 4:
        return (
            8.0 * (np.roll(arr, -1, axis=axis) - np.roll(arr, 1, axis=axis))
            - (np.roll(arr, -2, axis=axis) - np.roll(arr, 2, axis=axis))
        ) / (12.0 * step)
    raise ValueError(f"unsupported stencil order {order}")
