import hashlib
import re
from typing import Optional

from app.models.record_models import ArticleRecord

DOI_PREFIXES = (
    "https://doi.org/",
    "http://doi.org/",
    "https://dx.doi.org/",
    "http://dx.doi.org/",
    "doi:",
)

_WHITESPACE_RUN = re.compile(r"\s+")


def normalize_doi(raw: Optional[str], strip_prefixes: bool = True) -> Optional[str]:
    """
    Canonical form of a DOI: trimmed, lowercased, without "doi:" or doi.org resolver prefixes.

    Returns None for missing or blank input. Prefixes are stripped repeatedly so that the
    function is idempotent.
    """
    if raw is None:
        return None
    doi = raw.strip().lower()
    if strip_prefixes:
        stripped = True
        while stripped:
            stripped = False
            for prefix in DOI_PREFIXES:
                if doi.startswith(prefix):
                    doi = doi[len(prefix):].strip()
                    stripped = True
    return doi or None


def collapse_whitespace(text: str) -> str:
    return _WHITESPACE_RUN.sub(" ", text).strip()


def normalize_title(title: str) -> str:
    return collapse_whitespace(title).casefold()


def author_title_key(record: ArticleRecord) -> str:
    """Exact-match dedup key for records without a DOI."""
    return f"{collapse_whitespace(record.authors).casefold()}|{collapse_whitespace(record.title).casefold()}"


def is_complete(record: ArticleRecord) -> bool:
    return all(value.strip() for value in (record.authors, record.title, record.abstract))


def identity_key(record: ArticleRecord, strip_doi_prefixes: bool = True) -> str:
    doi = normalize_doi(record.doi, strip_prefixes=strip_doi_prefixes)
    if doi is not None:
        return "doi:" + doi
    return "at:" + author_title_key(record)


def fingerprint(record: ArticleRecord, strip_doi_prefixes: bool = True) -> str:
    """sha256 hex digest of the record's normalized identity (DOI when present, else authors/title)."""
    key = identity_key(record, strip_doi_prefixes=strip_doi_prefixes)
    return hashlib.sha256(key.encode("utf-8")).hexdigest()
