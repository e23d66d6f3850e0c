from typing import List

from pydantic import BaseModel, Field, model_validator

RESULTS_COLUMNS: List[str] = [
    "Acceptance",
    "Article Title",
    "Methodology",
    "Explanation",
    "Authors",
    "Publication Year",
    "Status",
    "Fingerprint",
    "Request ID",
    "Completed At",
    "Echo Mismatch",
]


class SummaryReport(BaseModel):
    """PRISMA-style tallies for one pipeline run."""

    total_processed: int = Field(default=0, ge=0)
    removed_empty: int = Field(default=0, ge=0)
    removed_duplicates: int = Field(default=0, ge=0)
    screened: int = Field(default=0, ge=0)
    accepted: int = Field(default=0, ge=0)
    rejected: int = Field(default=0, ge=0)
    parse_failed: int = Field(default=0, ge=0)
    transport_failed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _counts_balance(self) -> "SummaryReport":
        if self.screened != self.accepted + self.rejected + self.parse_failed + self.transport_failed:
            raise ValueError("screened must equal accepted + rejected + parse_failed + transport_failed")
        if self.total_processed != self.screened + self.removed_empty + self.removed_duplicates:
            raise ValueError("total_processed must equal screened + removed_empty + removed_duplicates")
        return self
