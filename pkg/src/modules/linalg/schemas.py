"""Linalg schemas - solver diagnostics."""

import pandas as pd
from pydantic import BaseModel, Field


class SolveInfo(BaseModel):
    """Diagnostics of one iterative solve."""
    iterations: int = Field(..., ge=0)
    relative_residual: float
    residual_history: list[float] = Field(default_factory=list)
    rhs_mean: float = 0.0

    def history_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"iteration": range(len(self.residual_history)), "relative_residual": self.residual_history}
        )
