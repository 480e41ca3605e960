"""Agreement-count statistic and the threshold decision rule.

The likelihood ratio of one-bit measurements under this signal model is
monotone in the number of consecutive-in-time bit agreements, so the
detector consumes that integer count directly; thresholds are defined on
the count, never on the raw likelihood ratio (numerically inferior and
monotone-equivalent).
"""

from __future__ import annotations

import numpy as np

from .model import DetectorDirection, ModelParams


class DimensionMismatchError(ValueError):
    """Bit matrix does not have at least 1 sensor and 2 time samples."""


def statistic(bits) -> int:
    """Count of consecutive-in-time agreements per sensor, summed over sensors.

    Accepts an (N, n) array of {0,1} entries, or a length-n vector for a
    single sensor.  The count lies in [0, (n-1)*N].
    """
    arr = np.atleast_2d(np.asarray(bits))
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 2:
        raise DimensionMismatchError(
            f"need at least 1 sensor and 2 samples, got shape {np.asarray(bits).shape}"
        )
    if not ((arr == 0) | (arr == 1)).all():
        raise DimensionMismatchError("bit matrix entries must all be 0 or 1")
    return int(np.sum(arr[:, 1:] == arr[:, :-1]))


def decide(y_count: int, eta: float, direction: DetectorDirection) -> int:
    """Threshold decision: 1 declares signal present.

    Upward direction fires on y_count >= eta (ties included), downward on
    y_count <= eta.
    """
    if direction is DetectorDirection.GREATER_IS_H1:
        return int(y_count >= eta)
    return int(y_count <= eta)


def direction_for(params: ModelParams) -> DetectorDirection:
    """Test direction for a parameter set; r = 0 is a construction error."""
    return DetectorDirection.from_correlation(params.r)


def sweep_thresholds(params: ModelParams) -> np.ndarray:
    """Canonical threshold grid -0.5, 0.5, ..., (n-1)N + 0.5.

    Half-integers hit every achievable operating point of the integer
    statistic exactly once (ties at the threshold are unreachable), and
    the two endpoints give the degenerate (1,1) and (0,0) ROC corners.
    """
    return np.arange(params.pairs_total + 2, dtype=float) - 0.5
