"""Gate decisions: whether a query is routed to retrieval."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field, model_validator

GateVariant = Literal["hkb", "skb", "prompt", "none", "all"]

GATE_VARIANTS: tuple[GateVariant, ...] = ("none", "all", "prompt", "hkb", "skb")


class GateDecision(BaseModel):
    """Boundary output mapped through the retrieval indicator.

    ``verdict`` is a bool for hkb/prompt and a score for skb; it is None
    when the output did not parse (``fallback_used``) or the variant makes
    no call (none/all).
    """

    query_id: str
    variant: GateVariant
    raw_output: str = ""
    verdict: bool | float | None = None
    epsilon: float | None = None
    retrieve: bool
    duration_ms: float = Field(default=0.0, ge=0.0)
    fallback_used: bool = False

    @model_validator(mode="after")
    def _check_indicator(self) -> GateDecision:
        expected: bool | None = None
        if self.variant == "all":
            expected = True
        elif self.variant == "none":
            expected = False
        elif self.fallback_used:
            expected = self.variant != "prompt"
        elif self.variant == "skb":
            if not isinstance(self.verdict, (int, float)) or isinstance(self.verdict, bool) or self.epsilon is None:
                raise ValueError(f"skb decision {self.query_id} needs a score and epsilon")
            expected = self.verdict >= self.epsilon
        elif isinstance(self.verdict, bool):
            expected = self.verdict
        else:
            raise ValueError(f"{self.variant} decision {self.query_id} needs a boolean verdict")
        if self.retrieve != expected:
            raise ValueError(f"{self.variant} decision {self.query_id}: retrieve={self.retrieve} breaks the indicator")
        return self
