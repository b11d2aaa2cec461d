"""Score semantics: failure sentinel and scale normalization.

The sentinel is ordered below every finite score.  Code that consumes scores
branches on :func:`is_failed` explicitly instead of doing arithmetic with
infinities.
"""

import math

FAILED_SCORE = float("-inf")


def is_failed(score: float) -> bool:
    return score == FAILED_SCORE or math.isnan(score)


def normalize_score(objective: float, direction: str, sigma: int) -> float:
    """Signed objective divided by the instance's complexity dimension.

    Maximization objectives keep their sign, minimization objectives are
    negated so every problem is scored as "higher is better".
    """
    if sigma < 1:
        raise ValueError(f"sigma must be >= 1, got {sigma}")
    if direction == "max":
        return objective / sigma
    if direction == "min":
        return -objective / sigma
    raise ValueError(f"unknown direction {direction!r}")
