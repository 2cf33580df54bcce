"""Extlab schemas - extension-constant survey tables."""

from pydantic import BaseModel, Field

TREND_NOTE = "finite-grid constants show trends only; no critical exponent is determined"


class SurveyRow(BaseModel):
    family: str
    p: float = Field(..., ge=1, le=2)
    n: int = Field(..., ge=1, description="Grid cells per axis")
    constant: float = Field(..., ge=0, description="Largest observed ||grad Pu||_p / ||grad u||_L2(complement)")


class SurveyReport(BaseModel):
    rows: list[SurveyRow]
    samples: int
    seed: int
    convex_threshold: float = Field(..., description="2(d+1)/(d+3)")
    admissible_p: dict[str, float | None] = Field(default_factory=dict, description="Exponent bound from the separation moments per family")
    note: str = TREND_NOTE

    def constant(self, family: str, p: float, n: int) -> float:
        for row in self.rows:
            if row.family == family and row.n == n and abs(row.p - p) < 1e-12:
                return row.constant
        raise KeyError((family, p, n))


class StabilityRow(BaseModel):
    eps: float = Field(..., gt=0)
    n: int
    constant: float = Field(..., ge=0)
