"""Verify schemas - acceptance results."""

from typing import Optional

from pydantic import BaseModel, Field


class CheckResult(BaseModel):
    """Outcome of one acceptance check."""
    name: str
    passed: bool
    value: Optional[float] = Field(None, description="Measured quantity compared against the limit")
    limit: Optional[str] = Field(None, description="Acceptance band, e.g. '<= 1e-09'")
    detail: str = ""
    seconds: float = Field(0.0, ge=0)


class VerifyReport(BaseModel):
    quick: bool
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failed(self) -> list[str]:
        return [check.name for check in self.checks if not check.passed]
