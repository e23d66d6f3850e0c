import logging
from datetime import datetime
from typing import Callable, List, NamedTuple, Optional, Tuple

from pydantic import ValidationError

from app.exceptions import ConfigError, DecisionParseError
from app.models.config_models import PipelineConfig
from app.models.record_models import ArticleRecord, ColumnMap, DedupReport, IngestReport, RemovedRecord
from app.models.report_models import SummaryReport
from app.models.screening_models import AssessmentOutcome, AssessmentStatus, ScreeningDecision
from app.services.dedup_service import DedupService
from app.services.ingest_service import IngestService
from app.services.journal_service import RunJournal
from app.services.llm_service import Assessor
from app.services.report_service import SOURCE_COLUMN, ReportService
from app.services.screening_service import ScreeningService, utc_now
from app.utils.csv_io import write_text_atomic
from app.utils.normalization import fingerprint
from app.utils.response_parser import parse_decision

logger = logging.getLogger(__name__)


class StageOneResult(NamedTuple):
    kept: List[ArticleRecord]
    removed: List[RemovedRecord]
    report: DedupReport
    ingest_reports: List[IngestReport]


class ScreenResult(NamedTuple):
    outcomes: List[AssessmentOutcome]
    summary: SummaryReport


class PipelineService:
    """
    Runs the pipeline stages for one PipelineConfig: stage one (merge, clean, dedup),
    stage two (screening) and stage three (results table and summary).
    """

    def __init__(self, config: PipelineConfig, clock: Callable[[], datetime] = utc_now):
        self.config = config
        self.clock = clock
        strip = config.dedup.strip_doi_prefixes
        self.ingest_service = IngestService()
        self.dedup_service = DedupService(strip_doi_prefixes=strip, ingest_service=self.ingest_service)
        self.report_service = ReportService(strip_doi_prefixes=strip)

    def run_dedup(self) -> StageOneResult:
        """Reads every input file, cleans and deduplicates, and writes the stage-one outputs."""
        corpora: List[List[ArticleRecord]] = []
        ingest_reports: List[IngestReport] = []
        for item in self.config.inputs:
            records, report = self.ingest_service.read_records(item.path, item.columns, item.source)
            corpora.append(records)
            ingest_reports.append(report)

        kept, removed, report = self.dedup_service.run_stage_one(corpora)

        output = self.config.output
        self.report_service.write_records(kept, output.cleaned_records)
        if self.config.dedup.write_removed:
            self.report_service.write_removed(removed, output.removed_records)
        write_text_atomic(report.model_dump_json(indent=2) + "\n", output.stage_one_report)
        return StageOneResult(kept, removed, report, ingest_reports)

    def load_cleaned(self) -> Tuple[List[ArticleRecord], DedupReport]:
        """Reads the cleaned-records CSV and the stage-one counts written next to it."""
        records, _ = self.ingest_service.read_records(
            self.config.output.cleaned_records, ColumnMap(), source_label="cleaned", source_column=SOURCE_COLUMN
        )
        report_path = self.config.output.stage_one_report
        if report_path.exists():
            try:
                report = DedupReport.model_validate_json(report_path.read_text(encoding="utf-8"))
            except (OSError, ValidationError) as e:
                raise ConfigError(f"Unreadable stage-one report {report_path}: {e}") from e
        else:
            logger.warning("No stage-one report at %s; counting cleaned records only", report_path)
            report = DedupReport(total_processed=len(records), kept=len(records))
        return records, report

    def open_journal(self, resume: bool = True) -> RunJournal:
        path = self.config.journal_path()
        if not resume and path.exists():
            backup = path.with_name(f"{path.name}.{self.clock().strftime('%Y%m%dT%H%M%S')}.bak")
            path.rename(backup)
            logger.warning("Starting fresh; previous journal moved to %s", backup)
        return RunJournal.load(path)

    async def run_screen(
        self,
        transport: Assessor,
        resume: bool = True,
        retry_failed: bool = False,
        on_outcome: Optional[Callable[[AssessmentOutcome], None]] = None,
        records: Optional[List[ArticleRecord]] = None,
        dedup_report: Optional[DedupReport] = None,
    ) -> ScreenResult:
        """
        Screens the cleaned records and writes the results table and summary.

        When `records` is omitted the cleaned-records CSV from a previous dedup run is used.
        """
        if records is None:
            records, dedup_report = self.load_cleaned()
        dedup_report = dedup_report or DedupReport(total_processed=len(records), kept=len(records))

        screening = ScreeningService(
            self.config.screening,
            transport,
            clock=self.clock,
            strip_doi_prefixes=self.config.dedup.strip_doi_prefixes,
        )
        with self.open_journal(resume) as journal:
            outcomes = await screening.screen_corpus(
                records, self.config.criteria, journal, on_outcome=on_outcome, retry_failed=retry_failed
            )
        return ScreenResult(outcomes, self._write_outputs(outcomes, records, dedup_report))

    def reparse(self, strict: Optional[bool] = None) -> ScreenResult:
        """Re-runs the parser over the journal's stored replies; no request is sent."""
        strict = self.config.screening.strict_parse if strict is None else strict
        records, dedup_report = self.load_cleaned()
        journal = RunJournal.load(self.config.journal_path())

        outcomes: List[AssessmentOutcome] = []
        screened: List[ArticleRecord] = []
        for record in records:
            entry = journal.get(fingerprint(record, strip_doi_prefixes=self.config.dedup.strip_doi_prefixes))
            if entry is None:
                logger.warning("No journal entry for %r; not in the re-parsed results", record.title[:60])
                continue
            outcomes.append(self._reparse_outcome(entry, strict))
            screened.append(record)

        return ScreenResult(outcomes, self._write_outputs(outcomes, screened, dedup_report))

    @staticmethod
    def _reparse_outcome(entry: AssessmentOutcome, strict: bool) -> AssessmentOutcome:
        if entry.status == AssessmentStatus.TRANSPORT_FAILED:
            return entry
        decision: Optional[ScreeningDecision]
        try:
            decision = parse_decision(entry.raw_response, strict=strict)
            status = AssessmentStatus.DECIDED
        except DecisionParseError:
            decision = None
            status = AssessmentStatus.PARSE_FAILED
        return entry.model_copy(update={"decision": decision, "status": status})

    def _write_outputs(
        self, outcomes: List[AssessmentOutcome], records: List[ArticleRecord], dedup_report: DedupReport
    ) -> SummaryReport:
        output = self.config.output
        self.report_service.write_results_table(outcomes, records, output.results)
        summary = self.report_service.compute_summary(dedup_report, outcomes)
        self.report_service.write_summary(summary, output.summary)
        return summary
