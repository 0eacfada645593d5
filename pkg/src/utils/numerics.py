import numpy as np
from typing import Sequence


def is_nonincreasing(values: Sequence[float], floor: float = 0.0, rtol: float = 0.0) -> bool:
    """
    Checks that a refinement sweep decays level by level.

    A level counts as non-increasing when it does not exceed the previous one
    (up to a relative tolerance) or when it has already reached `floor`, the
    rounding level below which comparisons carry no information.

    Args:
        values (Sequence[float]): Sweep values ordered from coarse to fine.
        floor (float): Absolute level treated as converged.
        rtol (float): Relative slack allowed between consecutive levels.

    Returns:
        bool: True if every consecutive pair decays.
    """
    values = [float(v) for v in values]
    for previous, current in zip(values[:-1], values[1:]):
        if current <= floor:
            continue
        if current > previous * (1.0 + rtol):
            return False
    return True


def reduction_factor(coarse: float, fine: float, floor: float = 1e-14) -> float:
    """Ratio coarse/fine, infinite once the fine level hits the floor."""
    if fine <= floor:
        return float("inf")
    return float(coarse) / float(fine)


def relative_spread(values: Sequence[float]) -> float:
    """Largest deviation from the mean, relative to the mean magnitude."""
    arr = np.asarray(values, dtype=float)
    center = np.mean(np.abs(arr))
    if center == 0.0:
        return 0.0
    return float(np.max(np.abs(arr - arr.mean())) / center)
