import logging
from pathlib import Path
from typing import Dict, List

import pandas as pd

from app.models.record_models import MAPPED_COLUMNS, ArticleRecord, DedupReport, RemovedRecord
from app.models.report_models import RESULTS_COLUMNS, SummaryReport
from app.models.screening_models import Acceptance, AssessmentOutcome, AssessmentStatus
from app.utils.csv_io import write_csv_atomic, write_text_atomic
from app.utils.normalization import fingerprint, normalize_title

logger = logging.getLogger(__name__)

SOURCE_COLUMN = "Record Source"
KEEPER_COLUMN = "Keeper Fingerprint"


class ReportService:
    """
    Assembles the run's outputs: the decision table, the count summary and the
    stage-one CSVs (cleaned records and the removed-duplicates audit).
    """

    def __init__(self, strip_doi_prefixes: bool = True):
        self.strip_doi_prefixes = strip_doi_prefixes

    def write_results_table(self, outcomes: List[AssessmentOutcome], records: List[ArticleRecord], path: Path) -> None:
        """
        Writes one row per outcome, in corpus order. Title, authors and year always come
        from the source record, never from the model's echo.
        """
        by_fingerprint: Dict[str, ArticleRecord] = {
            fingerprint(record, strip_doi_prefixes=self.strip_doi_prefixes): record for record in records
        }
        rows = []
        for outcome in outcomes:
            record = by_fingerprint.get(outcome.fingerprint)
            if record is None:
                raise ValueError(f"No source record for outcome {outcome.fingerprint}")
            rows.append(self._result_row(outcome, record))

        write_csv_atomic(pd.DataFrame(rows, columns=RESULTS_COLUMNS), path)
        logger.info("Wrote %d result rows to %s", len(rows), path)

    def _result_row(self, outcome: AssessmentOutcome, record: ArticleRecord) -> Dict[str, str]:
        decision = outcome.decision
        mismatch = ""
        if decision is not None:
            mismatch = "yes" if normalize_title(decision.echoed_title) != normalize_title(record.title) else "no"
        return {
            "Acceptance": decision.acceptance_label if decision else "",
            "Article Title": record.title,
            "Methodology": decision.methodology_label if decision else "",
            "Explanation": decision.explanation if decision else "",
            "Authors": record.authors,
            "Publication Year": "" if record.publication_year is None else str(record.publication_year),
            "Status": outcome.status.value,
            "Fingerprint": outcome.fingerprint,
            "Request ID": outcome.request_id,
            "Completed At": outcome.completed_at.isoformat(),
            "Echo Mismatch": mismatch,
        }

    def compute_summary(self, dedup_report: DedupReport, outcomes: List[AssessmentOutcome]) -> SummaryReport:
        accepted = rejected = parse_failed = transport_failed = 0
        for outcome in outcomes:
            if outcome.status == AssessmentStatus.DECIDED:
                if outcome.decision.acceptance == Acceptance.ACCEPT:
                    accepted += 1
                else:
                    rejected += 1
            elif outcome.status == AssessmentStatus.PARSE_FAILED:
                parse_failed += 1
            else:
                transport_failed += 1

        screened = len(outcomes)
        if screened != dedup_report.kept:
            logger.warning("Screened %d records but stage one kept %d", screened, dedup_report.kept)
        return SummaryReport(
            total_processed=screened + dedup_report.removed_empty + dedup_report.removed_duplicates,
            removed_empty=dedup_report.removed_empty,
            removed_duplicates=dedup_report.removed_duplicates,
            screened=screened,
            accepted=accepted,
            rejected=rejected,
            parse_failed=parse_failed,
            transport_failed=transport_failed,
        )

    def render_summary(self, report: SummaryReport) -> str:
        lines = self.render_stage_one_lines(report.total_processed, report.removed_duplicates, report.removed_empty)
        lines += [
            f"Screened: {report.screened}",
            f"Accepted: {report.accepted}",
            f"Rejected: {report.rejected}",
            f"Parse failures: {report.parse_failed}",
            f"Transport failures: {report.transport_failed}",
        ]
        return "\n".join(lines)

    @staticmethod
    def render_stage_one_lines(total: int, duplicates: int, empty: int) -> List[str]:
        return [
            f"Total articles processed: {total}",
            f"Total duplicates removed: {duplicates}",
            f"Total articles removed due to empty fields: {empty}",
        ]

    def write_summary(self, report: SummaryReport, path: Path) -> None:
        write_text_atomic(self.render_summary(report) + "\n", path)

    def write_records(self, records: List[ArticleRecord], path: Path) -> None:
        """Writes records under the default headers plus a Record Source column and every extra column."""
        write_csv_atomic(self._records_frame(records), path)

    def write_removed(self, removed: List[RemovedRecord], path: Path) -> None:
        frame = self._records_frame([item.record for item in removed])
        frame[KEEPER_COLUMN] = [item.keeper_fingerprint for item in removed]
        write_csv_atomic(frame, path)

    @staticmethod
    def _records_frame(records: List[ArticleRecord]) -> pd.DataFrame:
        extra_columns: List[str] = []
        for record in records:
            for name in record.extras:
                if name not in extra_columns and name not in (SOURCE_COLUMN, KEEPER_COLUMN):
                    extra_columns.append(name)
        columns = list(MAPPED_COLUMNS) + [SOURCE_COLUMN] + extra_columns
        rows = [
            [
                record.authors,
                record.title,
                record.abstract,
                record.doi or "",
                "" if record.publication_year is None else str(record.publication_year),
                record.source,
            ]
            + [record.extras.get(name, "") for name in extra_columns]
            for record in records
        ]
        return pd.DataFrame(rows, columns=columns)
