from typing import Annotated, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, StringConstraints, field_validator, model_validator

# Lowercase sha256 hex digest of a record's normalized identity.
RecordFingerprint = Annotated[str, StringConstraints(pattern=r"^[0-9a-f]{64}$")]

YEAR_MIN = 1500
YEAR_MAX = 2100

DEFAULT_AUTHORS_COL = "Authors"
DEFAULT_TITLE_COL = "Article Title"
DEFAULT_ABSTRACT_COL = "Abstract"
DEFAULT_DOI_COL = "DOI"
DEFAULT_YEAR_COL = "Publication Year"

MAPPED_COLUMNS = (
    DEFAULT_AUTHORS_COL,
    DEFAULT_TITLE_COL,
    DEFAULT_ABSTRACT_COL,
    DEFAULT_DOI_COL,
    DEFAULT_YEAR_COL,
)


class ArticleRecord(BaseModel):
    """One bibliographic entry as exported by a citation database."""

    model_config = ConfigDict(frozen=True)

    authors: str = ""
    title: str = ""
    abstract: str = ""
    doi: Optional[str] = None
    publication_year: Optional[int] = Field(default=None, ge=YEAR_MIN, le=YEAR_MAX)
    source: str
    extras: Dict[str, str] = Field(default_factory=dict)

    @field_validator("source")
    @classmethod
    def _source_not_blank(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("source must be non-empty")
        return value

    @field_validator("extras")
    @classmethod
    def _extras_exclude_mapped(cls, value: Dict[str, str]) -> Dict[str, str]:
        clashes = [name for name in value if name in MAPPED_COLUMNS]
        if clashes:
            raise ValueError(f"extras may not contain mapped columns: {clashes}")
        return value


class ColumnMap(BaseModel):
    """Header names of the five mapped columns in one export file."""

    model_config = ConfigDict(frozen=True, populate_by_name=True, extra="forbid")

    authors_col: str = Field(default=DEFAULT_AUTHORS_COL, alias="authors")
    title_col: str = Field(default=DEFAULT_TITLE_COL, alias="title")
    abstract_col: str = Field(default=DEFAULT_ABSTRACT_COL, alias="abstract")
    doi_col: str = Field(default=DEFAULT_DOI_COL, alias="doi")
    year_col: str = Field(default=DEFAULT_YEAR_COL, alias="year")

    @model_validator(mode="after")
    def _distinct_headers(self) -> "ColumnMap":
        headers = self.headers()
        if any(not h.strip() for h in headers):
            raise ValueError("column headers must be non-empty")
        if len(set(headers)) != len(headers):
            raise ValueError(f"column headers must be pairwise distinct: {headers}")
        return self

    def headers(self) -> List[str]:
        return [self.authors_col, self.title_col, self.abstract_col, self.doi_col, self.year_col]


class IngestReport(BaseModel):
    file: str
    rows_read: int = Field(default=0, ge=0)
    records_produced: int = Field(default=0, ge=0)
    warnings: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _produced_within_read(self) -> "IngestReport":
        if self.records_produced > self.rows_read:
            raise ValueError("records_produced cannot exceed rows_read")
        return self


class RemovedRecord(BaseModel):
    """A record dropped as a duplicate, paired with the fingerprint of the record that was kept."""

    model_config = ConfigDict(frozen=True)

    record: ArticleRecord
    keeper_fingerprint: RecordFingerprint


class DedupReport(BaseModel):
    total_processed: int = Field(default=0, ge=0)
    removed_empty: int = Field(default=0, ge=0)
    removed_duplicates: int = Field(default=0, ge=0)
    kept: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def _counts_balance(self) -> "DedupReport":
        if self.total_processed != self.kept + self.removed_empty + self.removed_duplicates:
            raise ValueError(
                "total_processed must equal kept + removed_empty + removed_duplicates "
                f"({self.total_processed} != {self.kept} + {self.removed_empty} + {self.removed_duplicates})"
            )
        return self
