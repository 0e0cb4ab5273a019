"""Score-scale math: flipping answer quality into search need, hard labelling."""

from __future__ import annotations

from .types import ScoreScale

DEFAULT_SCALE = ScoreScale()


def flip_score(s: float, scale: ScoreScale = DEFAULT_SCALE) -> float:
    """Map answer quality onto search need: ``s' = s_w + s_c - s``.

    A perfectly answered query (``s_c``) flips to ``s_w`` (no search
    needed); a wrong one flips to ``s_c``.

    Raises:
        ScoreRangeError: If ``s`` lies outside the scale.
    """
    s = scale.check(s, "score")
    return scale.clamp(scale.s_w + scale.s_c - s)


def hard_label(s: float, epsilon: float, scale: ScoreScale = DEFAULT_SCALE) -> bool:
    """Return True when the query lies outside the boundary (search needed).

    Mean scores ``s >= epsilon`` are inside the boundary; a tie counts as inside.

    Raises:
        ScoreRangeError: If ``s`` or ``epsilon`` lies outside the scale.
    """
    s = scale.check(s, "score")
    epsilon = scale.check(epsilon, "epsilon")
    return s < epsilon
