import logging
from typing import Dict, Iterable, List, Optional, Tuple

from app.models.record_models import ArticleRecord, DedupReport, RemovedRecord
from app.services.ingest_service import IngestService
from app.utils.normalization import author_title_key, fingerprint, is_complete, normalize_doi

logger = logging.getLogger(__name__)


class DedupService:
    """
    Stage-one cleaning: drops incomplete records, then exact duplicates.

    DOI-bearing records are compared by canonical DOI and DOI-less records by their
    author/title key. The two partitions are never compared with each other and the
    first occurrence always wins.
    """

    def __init__(self, strip_doi_prefixes: bool = True, ingest_service: Optional[IngestService] = None):
        self.strip_doi_prefixes = strip_doi_prefixes
        self.ingest_service = ingest_service or IngestService()

    def remove_incomplete(self, records: List[ArticleRecord]) -> Tuple[List[ArticleRecord], int]:
        kept = [record for record in records if is_complete(record)]
        return kept, len(records) - len(kept)

    def deduplicate(self, records: List[ArticleRecord]) -> Tuple[List[ArticleRecord], List[RemovedRecord]]:
        kept: List[ArticleRecord] = []
        removed: List[RemovedRecord] = []
        keepers_by_doi: Dict[str, ArticleRecord] = {}
        keepers_by_key: Dict[str, ArticleRecord] = {}

        for record in records:
            doi = normalize_doi(record.doi, strip_prefixes=self.strip_doi_prefixes)
            if doi is not None:
                seen, key = keepers_by_doi, doi
            else:
                seen, key = keepers_by_key, author_title_key(record)

            keeper = seen.get(key)
            if keeper is None:
                seen[key] = record
                kept.append(record)
            else:
                removed.append(
                    RemovedRecord(
                        record=record,
                        keeper_fingerprint=fingerprint(keeper, strip_doi_prefixes=self.strip_doi_prefixes),
                    )
                )
        return kept, removed

    def run_stage_one(
        self, corpora: Iterable[List[ArticleRecord]]
    ) -> Tuple[List[ArticleRecord], List[RemovedRecord], DedupReport]:
        """
        Merge, drop incomplete records, deduplicate, count.

        Returns:
            Tuple of the kept records, the removed duplicates and the DedupReport.
        """
        merged = self.ingest_service.merge_sources(corpora)
        complete, removed_empty = self.remove_incomplete(merged)
        kept, removed = self.deduplicate(complete)

        report = DedupReport(
            total_processed=len(merged),
            removed_empty=removed_empty,
            removed_duplicates=len(removed),
            kept=len(kept),
        )
        logger.info(
            "Stage one: %d processed, %d empty, %d duplicates, %d kept",
            report.total_processed,
            report.removed_empty,
            report.removed_duplicates,
            report.kept,
        )
        return kept, removed, report
