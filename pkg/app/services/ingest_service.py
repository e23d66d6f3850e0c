import logging
import re
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

import pandas as pd

from app.exceptions import FileUnreadableError, MalformedCsvError, MissingColumnError
from app.models.record_models import MAPPED_COLUMNS, YEAR_MAX, YEAR_MIN, ArticleRecord, ColumnMap, IngestReport

logger = logging.getLogger(__name__)

_YEAR_PATTERN = re.compile(r"^(\d{1,4})(?:\.0+)?$")
_PANDAS_LINE = re.compile(r"line (\d+)")


class IngestService:
    """
    Reads bibliographic export files (RFC 4180 CSV, UTF-8, header row) into ArticleRecords.
    """

    def read_records(
        self,
        path: Path,
        column_map: Optional[ColumnMap] = None,
        source_label: str = "",
        source_column: Optional[str] = None,
    ) -> Tuple[List[ArticleRecord], IngestReport]:
        """
        Reads one export file.

        Args:
            path (Path): CSV file with a header row.
            column_map (ColumnMap): Headers of the five mapped columns.
            source_label (str): Label stored on every record (defaults to the file stem).
            source_column (str): Optional column whose non-blank value overrides the label per row.

        Returns:
            Tuple[List[ArticleRecord], IngestReport]: One record per data row, plus row accounting.
        """
        column_map = column_map or ColumnMap()
        label = source_label or Path(path).stem
        frame = self._load_frame(Path(path))
        # pandas pads short rows with NaN even with na_filter off
        short_rows = frame.isna().any(axis=1).tolist()
        frame = frame.fillna("")

        for required in (column_map.authors_col, column_map.title_col, column_map.abstract_col):
            if required not in frame.columns:
                raise MissingColumnError(required, str(path))

        mapped = set(column_map.headers())
        if source_column:
            mapped.add(source_column)
        extra_columns = [c for c in frame.columns if c not in mapped]
        report = IngestReport(file=str(path), rows_read=len(frame))

        clashing = [c for c in extra_columns if c in MAPPED_COLUMNS]
        for name in clashing:
            self._warn(report, f"unmapped column '{name}' shadows a mapped column name and was ignored")
        extra_columns = [c for c in extra_columns if c not in clashing]

        records: List[ArticleRecord] = []
        for position, row in enumerate(frame.itertuples(index=False, name=None), start=1):
            values: Dict[str, str] = dict(zip(frame.columns, row))
            if not any(value.strip() for value in values.values()):
                self._warn(report, f"row {position}: all fields blank, skipped")
                continue
            if short_rows[position - 1]:
                self._warn(report, f"row {position}: fewer fields than the header, missing values left blank")

            year = self._parse_year(values.get(column_map.year_col, ""), position, report)
            doi = values.get(column_map.doi_col, "").strip() or None
            row_source = values.get(source_column, "").strip() if source_column else ""

            records.append(
                ArticleRecord(
                    authors=values[column_map.authors_col],
                    title=values[column_map.title_col],
                    abstract=values[column_map.abstract_col],
                    doi=doi,
                    publication_year=year,
                    source=row_source or label,
                    extras={name: values[name] for name in extra_columns},
                )
            )

        report.records_produced = len(records)
        logger.info("Read %d records from %s (%d rows)", report.records_produced, path, report.rows_read)
        return records, report

    def merge_sources(self, corpora: Iterable[List[ArticleRecord]]) -> List[ArticleRecord]:
        """Concatenates record lists in order. No dedup happens here."""
        merged: List[ArticleRecord] = []
        for corpus in corpora:
            merged.extend(corpus)
        return merged

    def _load_frame(self, path: Path) -> pd.DataFrame:
        try:
            # utf-8-sig strips the byte-order mark many database exports carry
            frame = pd.read_csv(
                path,
                dtype=str,
                keep_default_na=False,
                na_filter=False,
                encoding="utf-8-sig",
            )
        except (FileNotFoundError, IsADirectoryError, PermissionError) as e:
            raise FileUnreadableError(str(path), e.strerror or str(e)) from e
        except UnicodeDecodeError as e:
            raise FileUnreadableError(str(path), f"not valid UTF-8 ({e.reason})") from e
        except pd.errors.EmptyDataError as e:
            raise MalformedCsvError(0, "file has no header row") from e
        except pd.errors.ParserError as e:
            match = _PANDAS_LINE.search(str(e))
            raise MalformedCsvError(int(match.group(1)) if match else 0, str(e)) from e
        return frame

    def _parse_year(self, raw: str, position: int, report: IngestReport) -> Optional[int]:
        value = raw.strip()
        if not value:
            return None
        match = _YEAR_PATTERN.match(value)
        if not match:
            self._warn(report, f"row {position}: publication year {value!r} is not an integer, ignored")
            return None
        year = int(match.group(1))
        if not YEAR_MIN <= year <= YEAR_MAX:
            self._warn(report, f"row {position}: publication year {year} outside [{YEAR_MIN}, {YEAR_MAX}], ignored")
            return None
        return year

    @staticmethod
    def _warn(report: IngestReport, message: str) -> None:
        logger.warning("%s: %s", report.file, message)
        report.warnings.append(message)
