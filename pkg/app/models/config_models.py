from pathlib import Path
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field

from app.models.record_models import ColumnMap
from app.models.screening_models import RunConfig, ScreeningCriteria


class InputFile(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    path: Path
    source: str = Field(min_length=1)
    columns: ColumnMap = Field(default_factory=ColumnMap)


class DedupOptions(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    strip_doi_prefixes: bool = True
    write_removed: bool = True


class OutputOptions(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    out_dir: Path = Path("out")

    @property
    def cleaned_records(self) -> Path:
        return self.out_dir / "cleaned_records.csv"

    @property
    def removed_records(self) -> Path:
        return self.out_dir / "removed_records.csv"

    @property
    def stage_one_report(self) -> Path:
        return self.out_dir / "stage_one_report.json"

    @property
    def results(self) -> Path:
        return self.out_dir / "results.csv"

    @property
    def summary(self) -> Path:
        return self.out_dir / "summary.txt"

    def journal(self, run_id: str) -> Path:
        return self.out_dir / "journal" / f"{run_id}.jsonl"


class PipelineConfig(BaseModel):
    """Everything a run needs except the API key, which only ever comes from the environment."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    run_id: str = Field(default="default", pattern=r"^[A-Za-z0-9._-]+$")
    inputs: List[InputFile] = Field(min_length=1)
    criteria: ScreeningCriteria
    screening: RunConfig = Field(default_factory=RunConfig)
    dedup: DedupOptions = Field(default_factory=DedupOptions)
    output: OutputOptions = Field(default_factory=OutputOptions)

    def journal_path(self) -> Path:
        return self.output.journal(self.run_id)

    def resolve_paths(self, base_dir: Optional[Path]) -> "PipelineConfig":
        """Return a copy with relative input and output paths anchored at `base_dir`."""
        if base_dir is None:
            return self
        inputs = [
            item.model_copy(update={"path": item.path if item.path.is_absolute() else base_dir / item.path})
            for item in self.inputs
        ]
        out_dir = self.output.out_dir
        if not out_dir.is_absolute():
            out_dir = base_dir / out_dir
        return self.model_copy(
            update={"inputs": inputs, "output": self.output.model_copy(update={"out_dir": out_dir})}
        )
